"""Dense two-phase primal simplex for small linear programs.

Problems arrive in the general form

    minimize    c @ x
    subject to  a_eq @ x == b_eq,    lower <= x <= upper,

with infinite bounds allowed.  Internally every variable is shifted, flipped
or split so the solve runs on the standard form ``min c z, A z = b, z >= 0``;
finite upper bounds become explicit slack rows.  The problems this package
builds internally have no finite upper bounds, so nothing is wasted there.

Entering variables follow the most negative reduced cost with lowest-index
tie-breaking; after a run of degenerate pivots the rule switches to lowest
eligible index (Bland's rule), which cannot cycle.  Rows are equilibrated
before the solve and the reported solution is checked against the original
constraints before the solver declares it optimal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-8
_STALL_LIMIT = 50


@dataclass(frozen=True)
class LinearProgram:
    """Minimize ``c @ x`` subject to ``a_eq @ x == b_eq`` and box bounds."""

    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float).ravel()
        a = np.asarray(self.a_eq, dtype=float)
        if a.ndim != 2:
            raise DataError(f"a_eq must be 2-dimensional, got shape {a.shape}")
        b = np.asarray(self.b_eq, dtype=float).ravel()
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        nv = c.size
        if a.shape[1] != nv and a.size:
            raise DataError(
                f"a_eq has {a.shape[1]} columns but c has {nv} entries"
            )
        if a.size == 0:
            a = a.reshape(0, nv)
        if b.size != a.shape[0]:
            raise DataError(f"b_eq has {b.size} entries but a_eq has {a.shape[0]} rows")
        if lower.size != nv or upper.size != nv:
            raise DataError("lower/upper must have one entry per variable")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise DataError("c, a_eq and b_eq must be finite")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise DataError("bounds must not be NaN")
        if np.any(lower > upper):
            j = int(np.flatnonzero(lower > upper)[0])
            raise DataError(f"empty bound interval for variable {j + 1}")
        for name, arr in (("c", c), ("a_eq", a), ("b_eq", b), ("lower", lower), ("upper", upper)):
            frozen = arr.copy()
            frozen.setflags(write=False)
            object.__setattr__(self, name, frozen)

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LPSolution:
    """Solver outcome: ``status`` is "optimal", "infeasible" or "unbounded"."""

    status: str
    x: np.ndarray | None
    objective: float
    iterations: int


def _pivot(tab: np.ndarray, red: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    tab -= np.outer(factors, tab[row])
    red -= red[col] * tab[row]
    tab[:, col] = 0.0
    tab[row, col] = 1.0
    red[col] = 0.0


def _pivot_loop(
    tab: np.ndarray,
    red: np.ndarray,
    basis: np.ndarray,
    n_cols: int,
    max_iter: int,
    start_iter: int,
) -> tuple[str, int]:
    """Run pivots until optimal or unbounded.  ``red[-1]`` tracks -objective."""
    it = start_iter
    stall = 0
    bland = False
    last_obj = -red[-1]
    while True:
        reduced = red[:n_cols]
        if bland:
            eligible = np.flatnonzero(reduced < -_PIVOT_TOL)
            if eligible.size == 0:
                return "optimal", it
            enter = int(eligible[0])
        else:
            enter = int(np.argmin(reduced))
            if reduced[enter] >= -_PIVOT_TOL:
                return "optimal", it
        col = tab[:, enter]
        positive = col > _PIVOT_TOL
        if not positive.any():
            return "unbounded", it
        ratios = np.full(col.shape, np.inf)
        ratios[positive] = tab[positive, -1] / col[positive]
        best = ratios.min()
        near = np.flatnonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))
        leave = int(near[np.argmin(basis[near])])
        _pivot(tab, red, leave, enter)
        basis[leave] = enter
        it += 1
        if it >= max_iter:
            raise NumericalError(f"simplex exceeded {max_iter} iterations")
        obj = -red[-1]
        if obj < last_obj - 1e-12 * (1.0 + abs(last_obj)):
            last_obj = obj
            stall = 0
            bland = False
        else:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
        negative = tab[:, -1] < 0
        if negative.any():
            # degenerate drift only; real infeasibility never reappears here
            tab[negative & (tab[:, -1] > -1e-11), -1] = 0.0


def _standard_simplex(
    a: np.ndarray, b: np.ndarray, c: np.ndarray, max_iter: int
) -> tuple[str, np.ndarray | None, int]:
    """Solve min c z, A z = b, z >= 0 by the two-phase dense tableau method."""
    m, n = a.shape
    a = a.copy()
    b = b.copy()
    scale = np.maximum(np.abs(a).max(axis=1, initial=0.0), np.abs(b))
    scale[scale == 0.0] = 1.0
    a /= scale[:, None]
    b /= scale
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    tab = np.hstack([a, np.eye(m), b[:, None]])
    basis = np.arange(n, n + m)
    red = np.zeros(n + m + 1)
    red[:n] = -tab[:, :n].sum(axis=0)
    red[-1] = -tab[:, -1].sum()

    status, iters = _pivot_loop(tab, red, basis, n + m, max_iter, 0)
    if status != "optimal":  # phase 1 objective is bounded below by zero
        raise NumericalError("phase-1 simplex reported unbounded")
    if -red[-1] > _FEAS_TOL:
        return "infeasible", None, iters

    # Drive leftover artificials out of the basis, dropping redundant rows.
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] < n:
            continue
        row = tab[i, :n]
        candidates = np.flatnonzero(np.abs(row) > _PIVOT_TOL)
        if candidates.size:
            enter = int(candidates[0])
            _pivot(tab, red, i, enter)
            basis[i] = enter
        else:
            keep[i] = False
    tab = np.hstack([tab[keep][:, :n], tab[keep][:, -1:]])
    basis = basis[keep]

    red2 = np.concatenate([c, [0.0]])
    for i, jb in enumerate(basis):
        if red2[jb] != 0.0:
            red2 -= red2[jb] * tab[i]
    status, iters = _pivot_loop(tab, red2, basis, n, max_iter, iters)
    if status != "optimal":
        return status, None, iters
    z = np.zeros(n)
    z[basis] = tab[:, -1]
    return "optimal", z, iters


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LPSolution:
    """Solve a linear program, reporting optimal/infeasible/unbounded.

    Raises
    ------
    DataError
        On malformed input (caught at construction of ``LinearProgram``).
    NumericalError
        If the iteration cap is hit or the final point fails the
        feasibility check.
    """
    nv = lp.n_vars
    ne = lp.a_eq.shape[0]

    # Standard-form conversion: plan[j] describes how to rebuild x[j].
    cols_a: list[np.ndarray] = []
    cols_c: list[float] = []
    plan: list[tuple] = []
    offset = 0.0
    b_std = lp.b_eq.copy()
    upper_rows: list[tuple[int, float]] = []  # (std column, residual bound)

    for j in range(nv):
        lo, up, cj = lp.lower[j], lp.upper[j], lp.c[j]
        col = lp.a_eq[:, j]
        if np.isfinite(lo):
            k = len(cols_a)
            cols_a.append(col.copy())
            cols_c.append(cj)
            plan.append(("shift", k, lo))
            if lo != 0.0:
                b_std = b_std - col * lo
                offset += cj * lo
            if np.isfinite(up):
                upper_rows.append((k, up - lo))
        elif np.isfinite(up):
            k = len(cols_a)
            cols_a.append(-col)
            cols_c.append(-cj)
            plan.append(("flip", k, up))
            b_std = b_std - col * up
            offset += cj * up
        else:
            k = len(cols_a)
            cols_a.append(col.copy())
            cols_c.append(cj)
            cols_a.append(-col)
            cols_c.append(-cj)
            plan.append(("free", k, k + 1))

    n_std = len(cols_a)
    n_rows = ne + len(upper_rows)
    a_std = np.zeros((n_rows, n_std + len(upper_rows)))
    if n_std:
        a_std[:ne, :n_std] = np.column_stack(cols_a) if cols_a else 0.0
    c_std = np.concatenate([np.asarray(cols_c), np.zeros(len(upper_rows))])
    b_full = np.concatenate([b_std, np.zeros(len(upper_rows))])
    for i, (k, residual) in enumerate(upper_rows):
        a_std[ne + i, k] = 1.0
        a_std[ne + i, n_std + i] = 1.0
        b_full[ne + i] = residual

    if max_iter is None:
        max_iter = 1000 + 200 * (n_rows + a_std.shape[1])

    if n_rows == 0:
        # Pure box problem: each variable sits at whichever bound helps.
        x = np.empty(nv)
        for j in range(nv):
            cj, lo, up = lp.c[j], lp.lower[j], lp.upper[j]
            if cj > 0:
                if not np.isfinite(lo):
                    return LPSolution("unbounded", None, -np.inf, 0)
                x[j] = lo
            elif cj < 0:
                if not np.isfinite(up):
                    return LPSolution("unbounded", None, -np.inf, 0)
                x[j] = up
            else:
                x[j] = lo if np.isfinite(lo) else (up if np.isfinite(up) else 0.0)
        return LPSolution("optimal", x, float(lp.c @ x), 0)

    status, z, iterations = _standard_simplex(a_std, b_full, c_std, max_iter)
    if status == "infeasible":
        return LPSolution("infeasible", None, float("nan"), iterations)
    if status == "unbounded":
        return LPSolution("unbounded", None, -np.inf, iterations)

    x = np.empty(nv)
    for j, step in enumerate(plan):
        kind = step[0]
        if kind == "shift":
            x[j] = step[2] + z[step[1]]
        elif kind == "flip":
            x[j] = step[2] - z[step[1]]
        else:
            x[j] = z[step[1]] - z[step[2]]

    scale_b = 1.0 + float(np.abs(lp.b_eq).max(initial=0.0))
    if ne and float(np.abs(lp.a_eq @ x - lp.b_eq).max()) > _FEAS_TOL * scale_b:
        raise NumericalError("simplex result failed the feasibility check")
    bound_slack = 1e-9 * (1.0 + float(np.abs(x).max(initial=0.0)))
    lo_ok = np.all(x >= lp.lower - bound_slack)
    up_ok = np.all(x <= lp.upper + bound_slack)
    if not (lo_ok and up_ok):
        raise NumericalError("simplex result failed the bound check")
    x = np.clip(x, lp.lower, lp.upper)
    return LPSolution("optimal", x, float(lp.c @ x), iterations)
