"""Column-summable losses built from per-column p-norms with a dead zone.

A loss here is parametrized by a column norm (p in {1, 2, inf}) and an
insensitivity radius ``eps0 >= 0``: each column contributes the amount by
which its norm exceeds ``eps0``, and contributions add across columns.
``eval_ell`` is the plain sum of column norms (the ``eps0 = 0`` envelope);
the two are linked by a sandwich inequality whose slack is ``eps0`` per
nonzero column: each active column loses at most ``eps0`` to the dead zone,
and zero columns lose nothing.  ``check_p_properties`` stress-tests all
three structural properties on randomized matrices and reports the first
counterexample it finds, which is also the supported way to expose a
mis-declared sandwich constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .data_model import IndexSet, as_matrix
from .errors import ConfigError, DataError

_P_CHOICES = (1.0, 2.0, math.inf)


@dataclass(frozen=True)
class LossSpec:
    """Loss parameters: column norm exponent ``p`` and dead-zone radius ``eps0``.

    ``p`` must be 1, 2 or ``math.inf``; ``eps0`` must be finite and >= 0.
    """

    p: float = 2.0
    eps0: float = 0.0

    def __post_init__(self) -> None:
        p = float(self.p)
        if p not in _P_CHOICES:
            raise ConfigError(f"p must be one of 1, 2, inf; got {self.p!r}")
        eps0 = float(self.eps0)
        if not math.isfinite(eps0) or eps0 < 0:
            raise ConfigError(f"eps0 must be finite and >= 0, got {self.eps0!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "eps0", eps0)

    def to_json_dict(self) -> dict[str, Any]:
        return {"p": "inf" if math.isinf(self.p) else int(self.p), "eps0": self.eps0}

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "LossSpec":
        if not isinstance(d, dict):
            raise ConfigError(f"loss spec must be an object, got {type(d).__name__}")
        p = d.get("p", 2)
        if isinstance(p, str):
            if p.lower() not in ("inf", "infinity"):
                raise ConfigError(f'loss p must be 1, 2 or "inf", got {p!r}')
            p = math.inf
        return cls(p=float(p), eps0=float(d.get("eps0", 0.0)))


def column_norms_p(spec: LossSpec, b) -> np.ndarray:
    """Per-column p-norms of a matrix under ``spec.p``."""
    m = as_matrix(b, "b")
    if spec.p == 1.0:
        return np.abs(m).sum(axis=0)
    if spec.p == 2.0:
        return np.sqrt((m * m).sum(axis=0))
    return np.abs(m).max(axis=0)


def eval_ell(spec: LossSpec, b) -> float:
    """Sum of column p-norms (no dead zone).

    Accumulation uses exact summation, so the value of a concatenated
    matrix equals the sum of the blocks' values to the last bit.
    """
    return math.fsum(column_norms_p(spec, b).tolist())


def eval_phi(spec: LossSpec, b) -> float:
    """Sum over columns of ``max(0, norm_p(column) - eps0)``."""
    hinged = np.maximum(column_norms_p(spec, b) - spec.eps0, 0.0)
    return math.fsum(hinged.tolist())


def eps_violation_set(spec: LossSpec, b, eps: float | None = None) -> IndexSet:
    """Columns whose p-norm strictly exceeds the dead-zone radius.

    ``eps`` defaults to ``spec.eps0``; passing another value evaluates the
    set for a hypothetical radius (used by the property checker).
    """
    threshold = spec.eps0 if eps is None else float(eps)
    if threshold < 0:
        raise DataError("eps must be non-negative")
    return IndexSet.from_mask(column_norms_p(spec, b) > threshold)


@dataclass(frozen=True)
class PropertyFailure:
    """One counterexample: the property name, a note, and the matrices."""

    name: str
    detail: str
    b: np.ndarray
    c: np.ndarray | None = None


@dataclass(frozen=True)
class PropertyReport:
    """Outcome of a randomized property sweep over the loss."""

    ok: bool
    trials: int
    eps: float
    seed: int
    failures: tuple[PropertyFailure, ...]
    failure_counts: tuple[tuple[str, int], ...]

    def first_failure(self, name: str) -> PropertyFailure | None:
        for f in self.failures:
            if f.name == name:
                return f
        return None


_REL_TOL_SUM = 1e-10
_ABS_TOL = 1e-10


def check_p_properties(
    spec: LossSpec,
    trials: int = 1000,
    dims: tuple[int, int] = (3, 6),
    seed: int = 0,
    eps: float | None = None,
) -> PropertyReport:
    """Randomized check of the three structural loss properties.

    For matrices B, C with matching shapes the properties are:

    * ``column_summability``: the loss of ``[B | C]`` equals loss(B) + loss(C)
      (checked to 1e-10 relative);
    * ``norm_domination``: loss(B) <= loss(B - C) + ell(C);
    * ``epsilon_sandwich``: ``ell(B) - k * eps <= phi(B) <= ell(B)`` where
      ``k`` counts nonzero columns (each active column can hide at most
      ``eps`` of its norm in the dead zone).

    ``eps`` defaults to ``spec.eps0``, for which the sandwich provably holds;
    any smaller claimed constant is expected to produce a counterexample, and
    the first one found per property is stored verbatim in the report.

    Column scales are drawn log-uniformly so norms land on both sides of the
    dead zone.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rows, cols = int(dims[0]), int(dims[1])
    if rows < 1 or cols < 2:
        raise ConfigError("dims must be at least (1, 2)")
    eps_used = spec.eps0 if eps is None else float(eps)
    if eps_used < 0:
        raise ConfigError("eps must be non-negative")
    rng = np.random.default_rng(seed)
    failures: list[PropertyFailure] = []
    counts = {"column_summability": 0, "norm_domination": 0, "epsilon_sandwich": 0}

    def record(name: str, detail: str, b: np.ndarray, c: np.ndarray | None) -> None:
        counts[name] += 1
        if counts[name] == 1:
            failures.append(
                PropertyFailure(
                    name=name,
                    detail=detail,
                    b=b.copy(),
                    c=None if c is None else c.copy(),
                )
            )

    for _ in range(trials):
        scale_b = np.exp(rng.uniform(np.log(0.05), np.log(5.0), size=cols))
        scale_c = np.exp(rng.uniform(np.log(0.05), np.log(5.0), size=cols))
        b = rng.standard_normal((rows, cols)) * scale_b
        c = rng.standard_normal((rows, cols)) * scale_c

        split = int(rng.integers(1, cols))
        left, right = b[:, :split], b[:, split:]
        whole = eval_phi(spec, b)
        parts = eval_phi(spec, left) + eval_phi(spec, right)
        if abs(whole - parts) > _REL_TOL_SUM * max(1.0, abs(whole)):
            record(
                "column_summability",
                f"phi(whole)={whole!r} vs phi(left)+phi(right)={parts!r}",
                b,
                None,
            )

        lhs = eval_phi(spec, b)
        rhs = eval_phi(spec, b - c) + eval_ell(spec, c)
        if lhs > rhs + _ABS_TOL:
            record("norm_domination", f"phi(B)={lhs!r} > phi(B-C)+ell(C)={rhs!r}", b, c)

        ell = eval_ell(spec, b)
        phi = eval_phi(spec, b)
        k = int(np.count_nonzero(column_norms_p(spec, b)))
        if phi > ell + _ABS_TOL:
            record("epsilon_sandwich", f"phi(B)={phi!r} > ell(B)={ell!r}", b, None)
        elif ell - k * eps_used > phi + _ABS_TOL:
            record(
                "epsilon_sandwich",
                f"ell(B)-k*eps={ell - k * eps_used!r} > phi(B)={phi!r} "
                f"with k={k}, eps={eps_used!r}",
                b,
                None,
            )

    return PropertyReport(
        ok=not failures,
        trials=trials,
        eps=eps_used,
        seed=seed,
        failures=tuple(failures),
        failure_counts=tuple(sorted(counts.items())),
    )
