"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written against a different method than the
library under test: linear programs are solved by brute-force vertex
enumeration or scipy's HiGHS backend, proximal maps by derivative-free
numeric minimization. Slow is fine; these only run inside tests.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog, minimize


def vertex_lp_oracle(c, a_eq, b_eq, lower, upper):
    """Solve min c.x s.t. a_eq x = b_eq, lower <= x <= upper by enumerating
    basic solutions: every choice of m linearly independent columns plus
    every on-bound assignment of the remaining variables.

    Returns (status, best_x, best_obj) with status in
    {"optimal", "infeasible", "unbounded"}.  Unboundedness is detected via
    scipy since vertex enumeration cannot see rays.  Only meant for tiny
    problems (a few variables).
    """
    c = np.asarray(c, dtype=float)
    a_eq = np.asarray(a_eq, dtype=float).reshape(-1, c.size)
    b_eq = np.asarray(b_eq, dtype=float).ravel()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = c.size
    m = a_eq.shape[0]

    ref = linprog(
        c, A_eq=a_eq if m else None, b_eq=b_eq if m else None,
        bounds=list(zip(lower, upper)), method="highs",
    )
    if ref.status == 2:
        return "infeasible", None, math.nan
    if ref.status == 3:
        return "unbounded", None, -math.inf

    best_obj = math.inf
    best_x = None
    finite_bounds = [
        [b for b in (lower[j], upper[j]) if math.isfinite(b)] or [0.0]
        for j in range(n)
    ]
    for basis in itertools.combinations(range(n), min(m, n)):
        free = [j for j in range(n) if j not in basis]
        sub = a_eq[:, basis] if m else np.zeros((0, 0))
        for corner in itertools.product(*[finite_bounds[j] for j in free]):
            x = np.zeros(n)
            for j, v in zip(free, corner):
                x[j] = v
            rhs = b_eq - (a_eq[:, free] @ np.asarray(corner) if free else 0.0)
            if m:
                try:
                    sol, res, rank, _ = np.linalg.lstsq(sub, rhs, rcond=None)
                except np.linalg.LinAlgError:
                    continue
                if np.linalg.norm(sub @ sol - rhs) > 1e-8 * (1 + np.abs(b_eq).max(initial=0.0)):
                    continue
                for j, v in zip(basis, sol):
                    x[j] = v
            if np.any(x < lower - 1e-9) or np.any(x > upper + 1e-9):
                continue
            obj = float(c @ x)
            if obj < best_obj - 1e-12:
                best_obj = obj
                best_x = x
    if best_x is None:
        # Degenerate geometry the enumeration missed; trust scipy's vertex.
        return "optimal", ref.x, float(ref.fun)
    return "optimal", best_x, best_obj


def xi_scipy(x):
    """Self-decomposability amplitude via scipy linprog, one LP per column."""
    x = np.asarray(x, dtype=float)
    n, n_cols = x.shape
    best = 0.0
    for k in range(n_cols):
        a = np.delete(x, k, axis=1)
        b = x[:, k]
        m = a.shape[1]
        c = np.zeros(m + 1)
        c[-1] = 1.0
        a_eq = np.hstack([a, np.zeros((n, 1))])
        a_ub = np.vstack([
            np.hstack([np.eye(m), -np.ones((m, 1))]),
            np.hstack([-np.eye(m), -np.ones((m, 1))]),
        ])
        res = linprog(
            c, A_ub=a_ub, b_ub=np.zeros(2 * m), A_eq=a_eq, b_eq=b,
            bounds=[(None, None)] * m + [(0, None)], method="highs",
        )
        assert res.status == 0, f"oracle LP failed at k={k}: {res.message}"
        best = max(best, float(res.fun))
    return best


def prox_numeric(v, step, eps0, p):
    """Proximal map of step * max(0, ||.||_p - eps0) by Nelder-Mead."""
    v = np.asarray(v, dtype=float)

    def objective(z):
        z = np.asarray(z)
        if p == 1:
            nrm = float(np.abs(z).sum())
        elif p == 2:
            nrm = float(np.linalg.norm(z))
        else:
            nrm = float(np.abs(z).max())
        return 0.5 * float(np.sum((z - v) ** 2)) + step * max(0.0, nrm - eps0)

    best = None
    for start in (v, np.zeros_like(v), 0.5 * v):
        res = minimize(
            objective, start, method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 50000, "maxfev": 50000},
        )
        if best is None or res.fun < best.fun:
            best = res
    return best.x, best.fun


def lad_scipy(y, x):
    """Single-output least absolute deviation fit via scipy linprog."""
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    n, n_cols = x.shape
    c = np.concatenate([np.zeros(n), np.ones(2 * n_cols)])
    a_eq = np.hstack([x.T, np.eye(n_cols), -np.eye(n_cols)])
    bounds = [(None, None)] * n + [(0, None)] * (2 * n_cols)
    res = linprog(c, A_eq=a_eq, b_eq=y, bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return res.x[:n], float(res.fun)


def phi_numpy(p, eps0, b):
    """Loss value by direct numpy reduction (different summation path)."""
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if p == 1:
        norms = np.abs(b).sum(axis=0)
    elif p == 2:
        norms = np.sqrt((b * b).sum(axis=0))
    else:
        norms = np.abs(b).max(axis=0)
    return float(np.maximum(norms - eps0, 0.0).sum())
