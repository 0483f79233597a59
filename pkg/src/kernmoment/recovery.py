"""Moment-to-eigenvalue recovery via a grid density fit.

A discrete density p on grid points {s_i} in [0, b] is fit so that its power
sums match the supplied moments in total absolute deviation:

    min sum_n | m(n)/d - sum_i p_i s_i^n |   s.t.  sum p_i = 1, p_i >= 0.

The input moments are divided by the target rank d so the simplex-normalized
density is consistent with m(n) = sum_{l<=d} lambda_l^n.  The absolute values
are encoded with paired slack variables and the resulting LP is solved with a
dense two-phase primal simplex using Bland's rule: the problem is tiny
(T + 2k variables, k + 1 equalities) so determinism and robustness dominate.
Eigenvalue estimates are then the (d+1)-st quantiles of the fitted density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import EigenvalueList
from .estimators import MomentSequence

_TOL = 1e-9


@dataclass(frozen=True)
class SpectralGrid:
    """Discrete spectral density: points s_i in [0, b] with weights p_i."""

    points: np.ndarray
    weights: np.ndarray
    b: float
    objective: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        if pts.shape != wts.shape or pts.ndim != 1:
            raise ValueError("points and weights must be 1-d arrays of equal length")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("points must be strictly increasing")
        if pts[0] < 0 or pts[-1] > self.b + _TOL:
            raise ValueError("points must lie in [0, b]")
        if np.any(wts < -_TOL) or abs(wts.sum() - 1.0) > _TOL:
            raise ValueError("weights must be a probability vector")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @property
    def t_count(self):
        return self.points.size


@dataclass(frozen=True)
class RecoveryConfig:
    d: int
    b: float
    t_count: int = 200
    k: int = 10

    def __post_init__(self):
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be >= 1")
        if self.b <= 0:
            raise ValueError("b must be positive")
        if self.t_count < self.d:
            raise ValueError("t_count must be >= d")


def _pivot(tableau, basis, row, col):
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and tableau[r, col] != 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]
    basis[row] = col


def _bland_iterate(tableau, basis, costs, max_iter):
    """Run Bland's-rule pivots to optimality on a canonical tableau."""
    m = tableau.shape[0]
    for _ in range(max_iter):
        reduced = costs - costs[basis] @ tableau[:, :-1]
        entering = -1
        for j in range(reduced.size):
            if reduced[j] < -_TOL:
                entering = j
                break
        if entering < 0:
            return
        ratios = np.full(m, np.inf)
        colvals = tableau[:, entering]
        ok = colvals > _TOL
        ratios[ok] = tableau[ok, -1] / colvals[ok]
        best = np.inf
        row = -1
        for r in range(m):
            if ratios[r] < best - _TOL or (ratios[r] < best + _TOL and row >= 0
                                           and basis[r] < basis[row]):
                best = ratios[r]
                row = r
        if row < 0:
            raise ArithmeticError("LP is unbounded (cannot happen on the simplex)")
        _pivot(tableau, basis, row, entering)
    raise ArithmeticError("simplex iteration limit exceeded")


def solve_lp(c, a_eq, b_eq, max_iter=100000):
    """Minimize c @ x subject to a_eq @ x = b_eq, x >= 0 (two-phase simplex)."""
    a = np.asarray(a_eq, dtype=float).copy()
    b = np.asarray(b_eq, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = a.shape
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1

    # phase 1: artificial basis
    tableau = np.hstack([a, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    phase1_costs = np.concatenate([np.zeros(n), np.ones(m)])
    _bland_iterate(tableau, basis, phase1_costs, max_iter)
    if phase1_costs[basis] @ tableau[:, -1] > 1e-7:
        raise ArithmeticError("LP infeasible (signals a solver/encoding bug)")
    # drive remaining artificials out of the basis
    for r in range(m):
        if basis[r] >= n:
            piv = next((j for j in range(n) if abs(tableau[r, j]) > _TOL), None)
            if piv is not None:
                _pivot(tableau, basis, r, piv)
    keep = [r for r in range(m) if basis[r] < n]
    tableau = np.hstack([tableau[keep, :n], tableau[keep, -1:]])
    basis = [basis[r] for r in keep]

    _bland_iterate(tableau, basis, c, max_iter)
    x = np.zeros(n)
    x[basis] = tableau[:, -1]
    return x, float(c @ x)


def default_upper_bound(moments: MomentSequence, k: int | None = None) -> float:
    """1.2 * max m(n)^(1/n); the rooted moments lower-bound the top eigenvalue."""
    k = moments.n_max if k is None else k
    roots = [moments.values[n] ** (1.0 / n)
             for n in range(1, k + 1) if moments.values.get(n, 0.0) > 0]
    if not roots:
        raise ValueError("no positive moments available to bound the spectrum")
    return 1.2 * max(roots)


def default_grid(b: float, t_count: int) -> np.ndarray:
    # equally spaced on [b/T, b]; zero-rank mass lands on the lowest bin
    return b * np.arange(1, t_count + 1) / t_count


def fit_density(moments: MomentSequence, cfg: RecoveryConfig) -> SpectralGrid:
    """Fit grid weights matching the rank-normalized moments (LP, see module doc)."""
    for n in range(1, cfg.k + 1):
        if n not in moments.values:
            raise ValueError(f"moment n={n} missing (k={cfg.k})")
        if not math.isfinite(moments.values[n]):
            raise ValueError(f"moment n={n} is not finite")
    points = default_grid(cfg.b, cfg.t_count)
    k, t = cfg.k, cfg.t_count
    powers = points[None, :] ** np.arange(1, k + 1)[:, None]    # (k, T)
    a_eq = np.zeros((k + 1, t + 2 * k))
    a_eq[:k, :t] = powers
    a_eq[:k, t:t + k] = np.eye(k)
    a_eq[:k, t + k:] = -np.eye(k)
    a_eq[k, :t] = 1.0
    b_eq = np.concatenate([[moments.values[n] / cfg.d for n in range(1, k + 1)],
                           [1.0]])
    c = np.concatenate([np.zeros(t), np.ones(2 * k)])
    x, objective = solve_lp(c, a_eq, b_eq)
    weights = np.clip(x[:t], 0.0, None)
    weights /= weights.sum()
    return SpectralGrid(points=points, weights=weights, b=cfg.b,
                        objective=objective)


def extract_eigenvalues(grid: SpectralGrid, d: int) -> EigenvalueList:
    """Read d eigenvalues off the (d+1)-st quantiles of the fitted density."""
    if d < 1:
        raise ValueError("d must be >= 1")
    cdf = np.cumsum(grid.weights)
    levels = np.arange(1, d + 1) / (d + 1)
    idx = np.searchsorted(cdf, levels - 1e-12, side="left")
    idx = np.minimum(idx, grid.t_count - 1)
    vals = np.sort(grid.points[idx])[::-1]
    return EigenvalueList(values=tuple(vals))


def recover(moments: MomentSequence, cfg: RecoveryConfig) -> EigenvalueList:
    return extract_eigenvalues(fit_density(moments, cfg), cfg.d)
