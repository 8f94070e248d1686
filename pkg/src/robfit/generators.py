"""Seeded regressor generators and noise injection for synthetic studies.

Four regressor processes are supported: an i.i.d. Gaussian block, a randomly
switched two-coefficient autoregression with exogenous input, its fixed
linear counterpart, and a rational nonlinear map driven by the same input.
The dynamic kinds expose the regressor pair (previous output, previous
input), simulate from a zero initial state, and discard a fixed burn-in
prefix.  A diverging trajectory is re-drawn from a derived seed a bounded
number of times before giving up.

Streams are split deterministically per (kind, seed, attempt): the same spec
always yields the same matrix, bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .data_model import IndexSet, as_matrix
from .errors import ConfigError, GeneratorError

BURN_IN = 50
_MAX_ATTEMPTS = 5
_DIVERGENCE_LIMIT = 1e9

_KIND_CODES = {
    "gaussian_static": 1,
    "switched_arx": 2,
    "linear_arx": 3,
    "narx": 4,
}
_DYNAMIC_KINDS = ("switched_arx", "linear_arx", "narx")

# (output coefficient, input coefficient) per switched mode
_SWITCHED_MODES = ((-0.40, -0.15), (1.55, -2.10), (1.0, -0.65))
_LINEAR_MODE = (-0.40, -0.15)

_NOISE_STREAM = 1000


@dataclass(frozen=True)
class GeneratorSpec:
    """Which regressor process to draw, at what size, from which seed."""

    kind: str
    n: int
    n_samples: int
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _KIND_CODES:
            raise ConfigError(
                f"unknown generator kind {self.kind!r}; "
                f"choose from {sorted(_KIND_CODES)}"
            )
        if self.kind in _DYNAMIC_KINDS and self.n != 2:
            raise ConfigError(
                f"{self.kind} uses the (previous output, previous input) "
                f"regressor pair, so n must be 2, got {self.n}"
            )
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.n_samples < self.n + 1:
            raise ConfigError(
                f"n_samples must be at least n+1={self.n + 1}, got {self.n_samples}"
            )
        unknown = set(self.params) - {"input_std"}
        if unknown:
            raise ConfigError(f"unknown generator param(s): {sorted(unknown)}")
        std = float(self.params.get("input_std", 1.0))
        if not (std >= 0 and math.isfinite(std)):
            raise ConfigError(f"input_std must be finite and >= 0, got {std}")

    @property
    def input_std(self) -> float:
        return float(self.params.get("input_std", 1.0))

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.n,
            "N": self.n_samples,
            "seed": self.seed,
            "params": dict(self.params),
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "GeneratorSpec":
        if not isinstance(d, dict):
            raise ConfigError("generator spec must be an object")
        known = {"kind", "n", "N", "seed", "params"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown generator field(s): {sorted(unknown)}")
        try:
            return cls(
                kind=d["kind"],
                n=int(d.get("n", 2)),
                n_samples=int(d["N"]),
                seed=int(d.get("seed", 0)),
                params=dict(d.get("params", {})),
            )
        except KeyError as exc:
            raise ConfigError(f"generator spec is missing {exc}")


@dataclass(frozen=True)
class NoiseSpec:
    """Mixed noise plan: a corrupted-column fraction plus bounded dense noise."""

    outlier_fraction: float = 0.0
    outlier_amplitude: float = 1.0
    dense_bound: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise ConfigError(
                f"outlier_fraction must lie in [0, 1), got {self.outlier_fraction}"
            )
        if not (self.outlier_amplitude > 0 and math.isfinite(self.outlier_amplitude)):
            raise ConfigError(
                f"outlier_amplitude must be positive, got {self.outlier_amplitude}"
            )
        if not (self.dense_bound >= 0 and math.isfinite(self.dense_bound)):
            raise ConfigError(
                f"dense_bound must be finite and >= 0, got {self.dense_bound}"
            )

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "outlier_fraction": self.outlier_fraction,
            "outlier_amplitude": self.outlier_amplitude,
            "dense_bound": self.dense_bound,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "NoiseSpec":
        if not isinstance(d, dict):
            raise ConfigError("noise spec must be an object")
        known = {"outlier_fraction", "outlier_amplitude", "dense_bound", "seed"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown noise field(s): {sorted(unknown)}")
        defaults = cls()
        return cls(
            outlier_fraction=float(d.get("outlier_fraction", 0.0)),
            outlier_amplitude=float(
                d.get("outlier_amplitude", defaults.outlier_amplitude)
            ),
            dense_bound=float(d.get("dense_bound", 0.0)),
            seed=int(d.get("seed", 0)),
        )


class NoisyData(NamedTuple):
    """Injected observation block with its planted decomposition."""

    y: np.ndarray
    e: np.ndarray
    f: np.ndarray
    s0: IndexSet
    sc: IndexSet


def _rng_for(kind: str, seed: int, attempt: int = 0) -> np.random.Generator:
    # dedicated stream per (kind, seed, attempt); see module docstring
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(int(seed), _KIND_CODES[kind], int(attempt)))
    )


def _simulate(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    total = BURN_IN + spec.n_samples
    u = rng.standard_normal(total) * spec.input_std
    y = np.zeros(total + 1)
    if spec.kind == "switched_arx":
        modes = rng.integers(0, len(_SWITCHED_MODES), size=total)
        for t in range(total):
            a, b = _SWITCHED_MODES[modes[t]]
            y[t + 1] = a * y[t] + b * u[t]
    elif spec.kind == "linear_arx":
        a, b = _LINEAR_MODE
        for t in range(total):
            y[t + 1] = a * y[t] + b * u[t]
    else:  # narx
        for t in range(total):
            y[t + 1] = (y[t] + 2.5) / (1.0 + y[t] * y[t]) + u[t]
    x = np.vstack([y[BURN_IN:total], u[BURN_IN:total]])
    return x


def gen_regressors(spec: GeneratorSpec) -> np.ndarray:
    """Draw the regressor block described by ``spec`` (shape n x n_samples).

    Dynamic kinds retry from derived seeds when the trajectory blows up and
    raise :class:`GeneratorError` after the retry budget; a degenerate
    all-zero block (for example a zero-variance input) is also rejected.
    """
    if spec.kind == "gaussian_static":
        rng = _rng_for(spec.kind, spec.seed)
        return rng.standard_normal((spec.n, spec.n_samples))
    last_problem = "divergence"
    for attempt in range(_MAX_ATTEMPTS + 1):
        rng = _rng_for(spec.kind, spec.seed, attempt)
        x = _simulate(spec, rng)
        if not np.all(np.isfinite(x)) or np.abs(x).max() > _DIVERGENCE_LIMIT:
            last_problem = "divergence"
            continue
        if np.abs(x).max() == 0.0:
            last_problem = "a degenerate all-zero trajectory"
            continue
        return x
    raise GeneratorError(
        f"{spec.kind} produced {last_problem} in {_MAX_ATTEMPTS + 1} attempts "
        f"(seed={spec.seed}, N={spec.n_samples})"
    )


def ground_truth_matrix(m: int, n: int, seed: int = 0) -> np.ndarray:
    """Standard normal coefficient matrix with its own derived stream."""
    if m < 1 or n < 1:
        raise ConfigError(f"matrix dims must be positive, got {m}x{n}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 777)))
    return rng.standard_normal((m, n))


def inject_noise(x, a0, noise: NoiseSpec) -> NoisyData:
    """Build observations ``y = a0 x + e + f`` from a noise plan.

    The corrupted set has exactly ``floor(fraction * N)`` distinct columns
    drawn uniformly; each corrupted column of ``f`` is an isotropic random
    direction scaled to the requested amplitude, and ``e`` is uniform in
    ``[-dense_bound, dense_bound]`` everywhere.  Draw order is fixed
    (support, then outlier values, then dense noise) so results are
    reproducible bit for bit.
    """
    xm = as_matrix(x, "x")
    a0m = as_matrix(a0, "a0")
    if a0m.shape[1] != xm.shape[0]:
        raise ConfigError(
            f"a0 has {a0m.shape[1]} columns but x has {xm.shape[0]} rows"
        )
    m, n_samples = a0m.shape[0], xm.shape[1]
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=(int(noise.seed), _NOISE_STREAM))
    )
    n_out = int(noise.outlier_fraction * n_samples)
    support = np.sort(rng.choice(n_samples, size=n_out, replace=False))
    f = np.zeros((m, n_samples))
    for t in support:
        direction = rng.standard_normal(m)
        norm = float(np.linalg.norm(direction))
        while norm == 0.0:  # probability-zero redraw, kept for determinism
            direction = rng.standard_normal(m)
            norm = float(np.linalg.norm(direction))
        f[:, t] = direction / norm * noise.outlier_amplitude
    if noise.dense_bound > 0.0:
        e = rng.uniform(-noise.dense_bound, noise.dense_bound, size=(m, n_samples))
    else:
        e = np.zeros((m, n_samples))
    y = a0m @ xm + e + f
    sc = IndexSet(tuple(int(t) for t in support), n_samples)
    return NoisyData(y=y, e=e, f=f, s0=sc.complement(), sc=sc)
