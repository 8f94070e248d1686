"""Computable certificates for outlier-robust regression on a regressor block.

Everything here is a function of the regressor matrix alone.  The central
quantity is the reconstruction amplitude ``xi``: the worst case over columns
of the smallest max-magnitude coefficient vector that rebuilds one column
from all the others.  Feeding ``xi`` through ``recovery_threshold`` gives the
strict upper limit on how many corrupted columns the loss-minimizing fit is
guaranteed to reject, and combining it with a lower bound on the loss-to-
coefficient gain ``sigma`` yields parametric error bounds for mixed
dense-plus-gross noise.

Amplitude computation solves one min-max-magnitude interpolation problem per
column.  For three or more regressor rows each problem is solved as a linear
program.  For one row the optimum is closed-form, and for two rows the
maximization dual over unit directions is piecewise monotone between the
directions perpendicular to data columns, so scanning those finitely many
breakpoint directions is exact and much faster than the LP at large N; the
two routes cross-check each other in the test suite.

Brute-force oracles (``ratio_condition_oracle``, ``pi_c_bruteforce``,
``general_recovery_check``) independently evaluate the underlying
worst-case column-mass conditions on direction grids for single-output,
at-most-two-row problems; they are evidence generators for tests, not
certified proofs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data_model import IndexSet, as_matrix, column_norms
from .errors import ConfigError, DataError, NumericalError
from .losses import LossSpec
from .lp import LinearProgram, solve_lp

_RANK_REL_TOL = 1e-10


class XiResult(NamedTuple):
    """Amplitude plus the per-column reconstruction coefficients.

    ``gamma[k]`` has one entry per remaining column, in ascending column
    order with column k skipped.
    """

    xi: float
    gamma: list[np.ndarray]


class RatioCondition(NamedTuple):
    """Worst-case column-mass ratio over subsets of a fixed size."""

    max_ratio: float
    worst_subset: IndexSet
    satisfied: bool
    worst_angle: float


class RecoveryCheck(NamedTuple):
    """Grid verdict for the clean-set dominance condition."""

    certified: bool
    margin: float
    worst_angle: float
    note: str


# ---------------------------------------------------------------------------
# Rank preconditions
# ---------------------------------------------------------------------------


def _check_self_decomposable(x: np.ndarray) -> None:
    n, n_samples = x.shape
    if n_samples < n + 1:
        raise DataError(
            f"need at least n+1={n + 1} columns for reconstruction, got {n_samples}"
        )
    svals = np.linalg.svd(x, compute_uv=False)
    tol = _RANK_REL_TOL * svals[0]
    if svals[-1] <= tol:
        raise DataError(
            f"regressor matrix is rank deficient (sigma_min={svals[-1]:.3e})"
        )
    for k in range(n_samples):
        sub = np.delete(x, k, axis=1)
        sk = np.linalg.svd(sub, compute_uv=False)
        if sk[-1] <= tol:
            raise DataError(
                f"columns without k={k + 1} are rank deficient; "
                "column k cannot be reconstructed"
            )


# ---------------------------------------------------------------------------
# Amplitude
# ---------------------------------------------------------------------------


def _min_inf_lp(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimize ``||gamma||_inf`` subject to ``a @ gamma == b`` via the simplex.

    Epigraph form with split signs: gamma = p - q, p_i + q_i <= t.
    """
    n, m_cols = a.shape
    top = np.hstack([a, -a, np.zeros((n, m_cols)), np.zeros((n, 1))])
    mid = np.hstack(
        [np.eye(m_cols), np.eye(m_cols), np.eye(m_cols), -np.ones((m_cols, 1))]
    )
    a_eq = np.vstack([top, mid])
    b_eq = np.concatenate([b, np.zeros(m_cols)])
    c = np.zeros(3 * m_cols + 1)
    c[-1] = 1.0
    lp = LinearProgram(
        c=c,
        a_eq=a_eq,
        b_eq=b_eq,
        lower=np.zeros(c.size),
        upper=np.full(c.size, np.inf),
    )
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise NumericalError(f"amplitude linear program ended {sol.status}")
    gamma = sol.x[:m_cols] - sol.x[m_cols : 2 * m_cols]
    return float(sol.x[-1]), gamma


def _xi_closed_form_n1(x: np.ndarray) -> XiResult:
    row = x[0]
    n_samples = row.size
    xi = 0.0
    gammas: list[np.ndarray] = []
    for k in range(n_samples):
        others = np.delete(row, k)
        denom = float(np.abs(others).sum())
        xi_k = abs(row[k]) / denom
        gamma = xi_k * np.sign(row[k]) * np.sign(others)
        gammas.append(gamma)
        xi = max(xi, xi_k)
    return XiResult(xi, gammas)


def _rot90(col: np.ndarray) -> np.ndarray:
    return np.array([-col[1], col[0]])


def _gamma_from_direction(
    a: np.ndarray, b: np.ndarray, u: np.ndarray, xi_k: float
) -> np.ndarray | None:
    """Rebuild an optimal coefficient vector from an optimal dual direction.

    Columns aligned with the direction are pinned at +-xi_k by
    complementarity; columns perpendicular to it absorb the remainder.
    Returns None when the reconstruction fails verification.
    """
    align = a.T @ u
    scale = column_norms(a) * float(np.linalg.norm(u))
    zero = np.abs(align) <= 1e-9 * np.maximum(scale, 1e-300)
    sign_b = math.copysign(1.0, float(b @ u)) if abs(float(b @ u)) > 0 else 1.0
    gamma = np.where(zero, 0.0, xi_k * sign_b * np.sign(align))
    if zero.any():
        resid = b - a[:, ~zero] @ gamma[~zero]
        az = a[:, zero]
        gz, *_ = np.linalg.lstsq(az, resid, rcond=None)
        if np.abs(gz).max(initial=0.0) > xi_k * (1 + 1e-9) + 1e-12:
            try:
                _, gz = _min_inf_lp(az, resid)
            except NumericalError:
                return None
        gamma = gamma.copy()
        gamma[zero] = gz
    feas = float(np.abs(b - a @ gamma).max())
    if feas > 1e-8 * (1.0 + float(np.abs(b).max())):
        return None
    if float(np.abs(gamma).max(initial=0.0)) > xi_k * (1 + 1e-7) + 1e-12:
        return None
    return gamma


def _xi_fast_n2(x: np.ndarray) -> XiResult:
    n_samples = x.shape[1]
    u = np.vstack([-x[1], x[0]])  # one breakpoint direction per column
    mat = x.T @ u
    mags = np.abs(mat)
    col_sums = mags.sum(axis=0)
    denom = col_sums[None, :] - mags
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(denom > 0, mags / denom, 0.0)
    np.fill_diagonal(ratios, 0.0)
    per_k = ratios.max(axis=1)
    j_star = ratios.argmax(axis=1)

    gammas: list[np.ndarray] = []
    for k in range(n_samples):
        a = np.delete(x, k, axis=1)
        b = x[:, k]
        xi_k = float(per_k[k])
        if xi_k == 0.0:
            gamma = np.zeros(n_samples - 1)
            if float(np.abs(b).max()) > 0:
                xi_k, gamma = _min_inf_lp(a, b)
                per_k[k] = xi_k
        else:
            gamma = _gamma_from_direction(a, b, u[:, j_star[k]], xi_k)
            if gamma is None:  # degenerate tie: fall back to the exact LP
                xi_k, gamma = _min_inf_lp(a, b)
                per_k[k] = xi_k
        gammas.append(gamma)
    return XiResult(float(per_k.max()), gammas)


def xi_amplitude(x, method: str = "auto") -> XiResult:
    """Worst-case minimal reconstruction amplitude over columns.

    For each column k this computes the minimum of ``||gamma||_inf`` over
    coefficient vectors with ``x_k == X_without_k @ gamma``, and returns the
    maximum over k together with one minimizer per column.

    Parameters
    ----------
    x : matrix
        Regressor block; needs full row rank, also after removing any one
        column.
    method : {"auto", "lp"}
        "auto" uses the closed form for one row and breakpoint enumeration
        for two rows, falling back to the linear program per column when a
        degenerate reconstruction fails verification.  "lp" forces the
        linear-programming route for every column (any number of rows).
    """
    if method not in ("auto", "lp"):
        raise ConfigError(f'method must be "auto" or "lp", got {method!r}')
    xm = as_matrix(x, "x")
    _check_self_decomposable(xm)
    n, n_samples = xm.shape
    if method == "auto" and n == 1:
        return _xi_closed_form_n1(xm)
    if method == "auto" and n == 2:
        return _xi_fast_n2(xm)
    xi = 0.0
    gammas: list[np.ndarray] = []
    for k in range(n_samples):
        a = np.delete(xm, k, axis=1)
        xi_k, gamma = _min_inf_lp(a, xm[:, k])
        gammas.append(gamma)
        xi = max(xi, xi_k)
    return XiResult(xi, gammas)


def recovery_threshold(alpha: float) -> float:
    """Strict upper limit on rejectable corrupted columns at amplitude ``alpha``."""
    a = float(alpha)
    if not (a > 0 and math.isfinite(a)):
        raise DataError(f"amplitude must be positive and finite, got {alpha}")
    return 0.5 * (1.0 + 1.0 / a)


# ---------------------------------------------------------------------------
# Gain lower bounds
# ---------------------------------------------------------------------------


def sigma_lower_bound(x) -> float:
    """Spectral underestimate of the loss-to-coefficient gain.

    The smallest singular value of the regressor block lower-bounds the
    gain of any column-summable norm measured against the spectral norm of
    the coefficient error.
    """
    xm = as_matrix(x, "x")
    eig = np.linalg.eigvalsh(xm @ xm.T)
    return float(math.sqrt(max(eig[0], 0.0)))


def sigma_grid_estimate(x, grid_points: int = 3600) -> float:
    """Direction-grid overestimate of the sum-of-norms gain (1 to 3 rows).

    Minimizes ``sum_t |eta . x_t|`` over unit directions ``eta`` on a grid;
    a grid minimum can only overestimate the true infimum, and refining the
    circle grid by an integer factor keeps the grid nested so the estimate
    is non-increasing.
    """
    xm = as_matrix(x, "x")
    n = xm.shape[0]
    if grid_points < 4:
        raise ConfigError(f"grid_points must be >= 4, got {grid_points}")
    if n == 1:
        return float(np.abs(xm).sum())
    if n == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, grid_points, endpoint=False)
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    elif n == 3:
        i = np.arange(grid_points)
        z = 1.0 - 2.0 * (i + 0.5) / grid_points
        radius = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        golden = math.pi * (3.0 - math.sqrt(5.0))
        dirs = np.column_stack(
            [radius * np.cos(golden * i), radius * np.sin(golden * i), z]
        )
    else:
        raise ConfigError(f"grid estimate supports 1 to 3 rows, got n={n}")
    return float(np.abs(dirs @ xm).sum(axis=1).min())


# ---------------------------------------------------------------------------
# Error bounds
# ---------------------------------------------------------------------------


def error_bound(
    r: int, x, spec: LossSpec, sigma: float, xi: float | None = None
) -> float:
    """Worst-case gain from clean-column dense noise to coefficient error.

    ``r`` counts clean columns; the remaining ``N - r`` are arbitrarily
    corrupted.  Returns ``inf`` outside the stability regime (when the
    corrupted count reaches the recovery threshold).  Only dead-zone-free
    losses carry this two-sided form; positive ``eps0`` goes through
    ``stability_bound_general``.
    """
    if spec.eps0 != 0.0:
        raise ConfigError(
            "error_bound applies to eps0=0 losses; use stability_bound_general"
        )
    xm = as_matrix(x, "x")
    n_samples = xm.shape[1]
    r = int(r)
    if not 0 <= r <= n_samples:
        raise DataError(f"r must lie in [0, {n_samples}], got {r}")
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DataError(f"sigma must be positive and finite, got {sigma}")
    if xi is None:
        xi = xi_amplitude(xm).xi
    threshold = recovery_threshold(xi)
    corrupted = n_samples - r
    if corrupted >= threshold:
        return math.inf
    return 2.0 / (sigma * (1.0 - corrupted / threshold))


def gamma_lower_bound(
    x, sc: IndexSet, spec: LossSpec, sigma: float, xi: float | None = None
) -> float:
    """Lower bound on the clean-minus-corrupted loss gain for a given split."""
    xm = as_matrix(x, "x")
    n_samples = xm.shape[1]
    if sc.universe != n_samples:
        raise DataError(
            f"index set universe {sc.universe} does not match N={n_samples}"
        )
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DataError(f"sigma must be positive and finite, got {sigma}")
    if xi is None:
        xi = xi_amplitude(xm).xi
    threshold = recovery_threshold(xi)
    if len(sc) >= threshold:
        raise DataError(
            f"corrupted set of size {len(sc)} is outside the stability regime "
            f"(threshold {threshold:g})"
        )
    return sigma * (1.0 - len(sc) / threshold)


def stability_bound_general(
    ell_e_clean: float, n_eps_violations: int, eps: float, gamma_lb: float
) -> float:
    """Coefficient-error bound from dense-noise mass and dead-zone violations.

    ``ell_e_clean`` is the summed column-norm of the dense noise on clean
    columns, ``n_eps_violations`` the number of clean columns whose noise
    norm exceeds the dead zone, and ``gamma_lb`` a positive gain lower bound.
    """
    if not (gamma_lb > 0 and math.isfinite(gamma_lb)):
        raise DataError(f"gamma_lb must be positive and finite, got {gamma_lb}")
    if ell_e_clean < 0 or n_eps_violations < 0 or eps < 0:
        raise DataError("noise mass, violation count and eps must be non-negative")
    return (2.0 * ell_e_clean + n_eps_violations * eps) / gamma_lb


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------


def _direction_grid(n: int, angle_grid: int) -> tuple[np.ndarray, np.ndarray]:
    if n == 1:
        return np.ones((1, 1)), np.zeros(1)
    theta = np.linspace(0.0, 2.0 * math.pi, angle_grid, endpoint=False)
    return np.column_stack([np.cos(theta), np.sin(theta)]), theta


def _check_oracle_input(xm: np.ndarray, angle_grid: int) -> None:
    n, n_samples = xm.shape
    if n > 2:
        raise ConfigError(f"oracles support 1 or 2 regressor rows, got n={n}")
    if n_samples > 20:
        raise ConfigError(f"oracles are capped at 20 columns, got N={n_samples}")
    if angle_grid < 4:
        raise ConfigError(f"angle_grid must be >= 4, got {angle_grid}")
    svals = np.linalg.svd(xm, compute_uv=False)
    if svals[-1] <= _RANK_REL_TOL * svals[0]:
        raise DataError("oracle input is rank deficient")


def ratio_condition_oracle(
    x, d: int, angle_grid: int = 3600
) -> RatioCondition:
    """Worst column-mass fraction captured by any d columns, over a grid.

    For each grid direction the d largest column magnitudes are exact over
    subsets, so only the direction grid approximates.  ``satisfied`` reports
    the strict one-half test used by the exact-rejection characterization.
    """
    xm = as_matrix(x, "x")
    _check_oracle_input(xm, angle_grid)
    n_samples = xm.shape[1]
    d = int(d)
    if not 0 <= d < n_samples:
        raise DataError(f"d must lie in [0, {n_samples - 1}], got {d}")
    if d == 0:
        return RatioCondition(0.0, IndexSet((), n_samples), True, 0.0)
    dirs, theta = _direction_grid(xm.shape[0], angle_grid)
    mags = np.abs(dirs @ xm)
    totals = mags.sum(axis=1)
    top_d = np.sort(mags, axis=1)[:, n_samples - d :].sum(axis=1)
    ratios = top_d / totals
    g = int(np.argmax(ratios))
    order = np.argsort(mags[g], kind="stable")
    worst = IndexSet(tuple(int(t) for t in order[n_samples - d :]), n_samples)
    max_ratio = float(ratios[g])
    return RatioCondition(max_ratio, worst, max_ratio < 0.5, float(theta[g]))


def pi_c_bruteforce(x, angle_grid: int = 3600) -> int:
    """Largest d whose worst column-mass fraction stays below one half.

    Grid-based, hence an upper estimate of the exact quantity; the fraction
    is monotone in d so the first failing size ends the sweep.
    """
    xm = as_matrix(x, "x")
    _check_oracle_input(xm, angle_grid)
    n_samples = xm.shape[1]
    for d in range(1, n_samples):
        if not ratio_condition_oracle(xm, d, angle_grid).satisfied:
            return d - 1
    return n_samples - 1


def general_recovery_check(
    x, clean: IndexSet, spec: LossSpec, angle_grid: int = 3600
) -> RecoveryCheck:
    """Grid check that clean columns dominate corrupted ones under the loss.

    For each grid direction the condition is evaluated exactly across all
    positive scalings of that direction: with a dead zone the binding
    requirement is that the clean-minus-corrupted magnitude gap covers
    ``j`` times the j-th largest clean magnitude for every j.  A pass is
    supporting evidence (the direction grid is finite), not a proof.
    """
    xm = as_matrix(x, "x")
    _check_oracle_input(xm, angle_grid)
    n_samples = xm.shape[1]
    if clean.universe != n_samples:
        raise DataError(
            f"index set universe {clean.universe} does not match N={n_samples}"
        )
    dirs, theta = _direction_grid(xm.shape[0], angle_grid)
    mags = np.abs(dirs @ xm)
    mask = clean.to_mask()
    gap = mags[:, mask].sum(axis=1) - mags[:, ~mask].sum(axis=1)
    if spec.eps0 == 0.0 or len(clean) == 0:
        margins = gap
    else:
        block = np.sort(mags[:, mask], axis=1)[:, ::-1]
        weights = np.arange(1, len(clean) + 1)
        margins = gap - (block * weights).max(axis=1)
    worst = int(np.argmin(margins))
    margin = float(margins[worst])
    scale = 1.0 + float(np.abs(mags).max())
    certified = bool(margin >= -1e-12 * scale and gap.min() > 0.0)
    return RecoveryCheck(
        certified=certified,
        margin=margin,
        worst_angle=float(theta[worst]),
        note="direction grid with exact per-direction scale sweep; "
        "a pass is evidence, not proof",
    )


# ---------------------------------------------------------------------------
# Bundled certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundPoint:
    """Error-bound value at ``r`` clean columns; ``inf`` marks instability."""

    r: int
    value: float

    @property
    def stable(self) -> bool:
        return math.isfinite(self.value)


@dataclass(frozen=True)
class Certificate:
    """Everything certifiable about a regressor block in one object."""

    xi: float
    gamma: tuple[np.ndarray, ...]
    threshold: float
    sigma_lb: float
    bound_curve: tuple[BoundPoint, ...]
    n: int
    n_samples: int


def build_certificate(x, spec: LossSpec | None = None) -> Certificate:
    """Compute amplitude, threshold, gain bound and the full bound curve."""
    xm = as_matrix(x, "x")
    spec = spec or LossSpec(p=2.0, eps0=0.0)
    res = xi_amplitude(xm)
    threshold = recovery_threshold(res.xi)
    sigma = sigma_lower_bound(xm)
    n, n_samples = xm.shape
    curve = tuple(
        BoundPoint(r, error_bound(r, xm, spec, sigma, xi=res.xi))
        for r in range(n_samples + 1)
    )
    return Certificate(
        xi=res.xi,
        gamma=tuple(res.gamma),
        threshold=threshold,
        sigma_lb=sigma,
        bound_curve=curve,
        n=n,
        n_samples=n_samples,
    )


def certificate_to_json_dict(cert: Certificate) -> dict:
    """JSON view: infinite bounds become null values tagged "unstable"."""
    curve = [
        {
            "r": p.r,
            "B": p.value if p.stable else None,
            "regime": "stable" if p.stable else "unstable",
        }
        for p in cert.bound_curve
    ]
    return {
        "xi": cert.xi,
        "T": cert.threshold,
        "sigma_lb": cert.sigma_lb,
        "bound_curve": curve,
        "N": cert.n_samples,
        "n": cert.n,
    }
