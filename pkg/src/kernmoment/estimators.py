"""Spectral-moment estimators for finite measurement matrices.

The target quantity is m(n), the sum of n-th powers of the eigenvalues of
the kernel integral operator underlying the generative process.  Estimators:

* ``naive_moments``       -- tr[(K/P)^n] from the sample Gram matrix; biased
  at finite P, Q by O(1/P + 1/Q) connected terms.
* ``kv_moments``          -- the Kong-Valiant increasing-index trace
  estimator, applied row-wise or column-wise; unbiased only when the
  corresponding axis is fully observed.
* ``exact_second_moment`` -- closed-form average over all disjoint-index
  cyclic paths of length 4.
* ``dp_moments``          -- the increasing-path estimator: the average of
  cyclic path products over strictly increasing row and column index tuples,
  computed by dynamic programming over partial path sums in O(n P^2 Q).
  Unbiased for every finite P and Q.
* ``dp_moments_alt2`` / ``dp_moments_altT`` -- trial-alternating variants
  that stay unbiased under row/column-correlated measurement noise.
* ``brute_force_increasing`` / ``brute_force_all_paths`` -- exponential-time
  enumeration oracles, used to validate the fast paths.

All estimators are pure functions of their inputs; outputs are bit-stable
for fixed inputs regardless of chunking.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .processes import (GenerativeProcess, MeasurementMatrix, RFF, LINEAR,
                        evaluate_matrix, FeatureSet, _rng)

_ENUM_BUDGET = 10**7
# elements per chunk of anchor rows in the DP; bounds peak temporary memory
_DP_CHUNK_ELEMS = 8 * 10**6

AUTO = "auto"
AS_IS = "asis"
TRANSPOSED = "transposed"

ROW = "row"
COL = "col"


@dataclass
class MomentSequence:
    """Estimated (or analytic) values m(n) for n = 1..n_max."""

    values: dict[int, float]
    estimator: str
    n_max: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for n, v in self.values.items():
            if not math.isfinite(v):
                raise ValueError(f"non-finite moment value at n={n}: {v}")

    def as_array(self, n_lo=1, n_hi=None):
        n_hi = self.n_max if n_hi is None else n_hi
        return np.array([self.values[n] for n in range(n_lo, n_hi + 1)])


def _first_moment(phi: np.ndarray) -> float:
    # shared between naive and dp so the two agree bit-for-bit
    return float(np.mean(phi * phi))


def gram_matrix(m: MeasurementMatrix) -> np.ndarray:
    """Row-similarity Gram matrix K = Phi Phi^T / Q (P x P, PSD)."""
    phi = m.entries
    return (phi @ phi.T) / m.q


def naive_moments(m: MeasurementMatrix, n_max: int) -> MomentSequence:
    """Gram-trace estimator: values[n] = tr[(K/P)^n]."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    k = gram_matrix(m) / m.p
    eig = np.linalg.eigvalsh(k)
    values = {1: _first_moment(m.entries)}
    for n in range(2, n_max + 1):
        values[n] = float(math.fsum(np.sort(eig**n)))
    return MomentSequence(values, "naive", n_max,
                          meta={"p": m.p, "q": m.q, "seed": m.seed})


def kv_moments(m: MeasurementMatrix, n_max: int, orientation: str = ROW,
               center: bool = False) -> MomentSequence:
    """Kong-Valiant estimator tr(Kbar_up^{n-1} Kbar) / C(side, n).

    ``row`` treats all features as observed (Kbar = Phi Phi^T / Q, side P);
    ``col`` transposes first.  ``center`` subtracts the grand mean of the
    matrix before forming Kbar (off by default; the underlying unbiasedness
    argument assumes zero-mean entries).
    """
    if orientation not in (ROW, COL):
        raise ValueError(f"orientation must be 'row' or 'col', got {orientation!r}")
    phi = m.entries if orientation == ROW else m.entries.T
    if center:
        phi = phi - phi.mean()
    side, other = phi.shape
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > side:
        raise ValueError(f"n_max={n_max} exceeds matrix side {side}; "
                         "binomial normalization undefined")
    kbar = (phi @ phi.T) / other
    kup = np.triu(kbar, k=1)
    values = {1: float(np.trace(kbar)) / side}
    acc = kbar
    for n in range(2, n_max + 1):
        acc = kup @ acc
        values[n] = float(np.trace(acc)) / math.comb(side, n)
    return MomentSequence(values, f"kv-{orientation}", n_max,
                          meta={"p": m.p, "q": m.q, "seed": m.seed})


def exact_second_moment(m: MeasurementMatrix) -> float:
    """All-paths unbiased second moment via the closed-form identity."""
    p, q = m.p, m.q
    if p < 2 or q < 2:
        raise ValueError("need P >= 2 and Q >= 2 for a disjoint index pair")
    phi = m.entries
    k = gram_matrix(m)
    ktil = (phi.T @ phi) / p
    m0_2 = float(math.fsum(np.sort(np.linalg.eigvalsh(k / p) ** 2)))
    term_row = float(np.sum(np.diag(k) ** 2)) / p**2
    term_col = float(np.sum(np.diag(ktil) ** 2)) / q**2
    term_pt = float(np.sum(phi**4)) / (p**2 * q**2)
    c = (p - 1) * (q - 1) / (p * q)
    return (m0_2 - term_row - term_col + term_pt) / c


def _excl_cumsum(x: np.ndarray, axis: int) -> np.ndarray:
    c = np.cumsum(x, axis=axis)
    out = np.zeros_like(x)
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    src[axis] = slice(None, -1)
    dst[axis] = slice(1, None)
    out[tuple(dst)] = c[tuple(src)]
    return out


def _dp_core(init: np.ndarray, step_a, step_b, closure, n_max: int) -> dict[int, float]:
    """Shared DP over partial path sums.

    ``init`` seeds the anchor row; ``step_a(n)``, ``step_b(n)`` supply the
    matrices multiplying the column-move and row-move entries of the update
    at order n, and ``closure(n)`` the matrix closing the cycle.  For the
    single-trial estimator all four are the measurement matrix itself; the
    trial-alternating variants swap trials per role.

    The per-step rescale n^2 / ((P-n+1)(Q-n+1)), the P * phi initialization,
    the 1/(PQ) closure and the final 1/P telescope to the exact
    1 / (C(P,n) C(Q,n)) normalization of the increasing-path average.
    """
    p, q = init.shape
    contribs = {n: [] for n in range(2, n_max + 1)}
    chunk = max(1, _DP_CHUNK_ELEMS // (p * q))
    for lo in range(0, p, chunk):
        hs = np.arange(lo, min(lo + chunk, p))
        s = np.zeros((hs.size, p, q))
        s[np.arange(hs.size), hs, :] = p * init[hs, :]
        for n in range(2, n_max + 1):
            a_mat, b_mat, c_mat = step_a(n), step_b(n), closure(n)
            u = _excl_cumsum(s, axis=1)          # sum over rows below a
            u *= a_mat
            s = _excl_cumsum(u, axis=2)          # sum over columns below b
            s *= b_mat
            s *= n * n / ((p - n + 1) * (q - n + 1))
            col = s.sum(axis=1)                   # (H, Q)
            contribs[n].extend((col * c_mat[hs, :]).sum(axis=1).tolist())
    out = {}
    for n in range(2, n_max + 1):
        # per-anchor contributions, reduced in fixed order with exact summation
        out[n] = math.fsum(contribs[n]) / (p * q) / p
    return out


def _dp_run(init, step_a, step_b, closure, n_max):
    p, q = init.shape
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > min(p, q):
        raise ValueError(f"n_max={n_max} exceeds min(P, Q)={min(p, q)}: "
                         "no increasing index tuple exists")
    if n_max == 1:
        return {}
    return _dp_core(init, step_a, step_b, closure, n_max)


def _resolve_orientation(p, q, orientation):
    if orientation == AUTO:
        return TRANSPOSED if q < p else AS_IS
    if orientation in (AS_IS, TRANSPOSED):
        return orientation
    raise ValueError(f"unknown orientation {orientation!r}")


def dp_moments(m: MeasurementMatrix, n_max: int,
               orientation: str = AUTO) -> MomentSequence:
    """Increasing-path estimator via dynamic programming.

    values[1] equals the naive first moment (which is already unbiased).
    ``transposed`` runs the identical algorithm on Phi^T, which averages a
    different (equally unbiased) family of staircase paths; ``auto`` picks
    the orientation with the smaller O(n * side^2 * other) work.
    """
    orient = _resolve_orientation(m.p, m.q, orientation)
    phi = m.entries if orient == AS_IS else m.entries.T
    vals = _dp_run(phi, lambda n: phi, lambda n: phi, lambda n: phi, n_max)
    vals[1] = _first_moment(m.entries)
    return MomentSequence(vals, "dp", n_max,
                          meta={"p": m.p, "q": m.q, "seed": m.seed,
                                "orientation": orient})


def dp_moments_alt2(m1: MeasurementMatrix, m2: MeasurementMatrix,
                    n_max: int) -> MomentSequence:
    """Two-trial alternating estimator (unbiased under correlated noise).

    Path entries alternate between the trials: the (i_l, a_l) factors come
    from trial 1 and the (i_{l+1}, a_l) factors from trial 2.  Reduces to
    ``dp_moments`` when both trials are identical.
    """
    if m1.entries.shape != m2.entries.shape:
        raise ValueError("trial matrices must share dimensions")
    p1, p2 = m1.entries, m2.entries
    vals = _dp_run(p1, lambda n: p2, lambda n: p1, lambda n: p2, n_max)
    vals[1] = float(np.mean(p1 * p2))
    return MomentSequence(vals, "dp-alt2", n_max,
                          meta={"p": m1.p, "q": m1.q, "seed": m1.seed,
                                "trials": 2})


def _validate_chain(chain, closures, n_max, trials):
    if len(chain) != 2 * n_max - 1:
        raise ValueError(f"trial chain must have length {2 * n_max - 1}")
    for t in list(chain) + list(closures.values()):
        if not 0 <= t < trials:
            raise ValueError(f"trial index {t} out of range")
    for i in range(len(chain) - 1):
        if chain[i] == chain[i + 1]:
            raise ValueError(f"adjacent trial indices equal at position {i}")
    for n, t in closures.items():
        if t == chain[2 * n - 2]:
            raise ValueError(f"closure trial for n={n} equals preceding trial")
        if t == chain[0]:
            raise ValueError(f"closure trial for n={n} equals the wrap trial")


def dp_moments_altT(ms: list[MeasurementMatrix], n_max: int, seed: int = 0,
                    chain=None, closures=None) -> MomentSequence:
    """T-trial alternating estimator.

    The trial multiset along the cyclic path must have distinct values at
    adjacent positions (including the wrap pair); with T=2 this forces strict
    alternation and the result equals ``dp_moments_alt2``.  When ``chain``
    / ``closures`` are not given, the first trial anchors the chain and the
    remaining choices are drawn deterministically from ``seed``.
    """
    t_count = len(ms)
    if t_count < 2:
        raise ValueError("need at least two trials")
    shape = ms[0].entries.shape
    for m in ms[1:]:
        if m.entries.shape != shape:
            raise ValueError("trial matrices must share dimensions")
    rng = _rng(seed, 5)
    if chain is None:
        chain = [0]
        while len(chain) < 2 * n_max - 1:
            options = [t for t in range(t_count) if t != chain[-1]]
            chain.append(int(options[rng.integers(len(options))]))
    if closures is None:
        closures = {}
        for n in range(2, n_max + 1):
            options = [t for t in range(t_count)
                       if t != chain[2 * n - 2] and t != chain[0]]
            if not options:
                raise ValueError("no admissible closure trial; need T >= 2 "
                                 "with distinct wrap and chain trials")
            closures[n] = int(options[rng.integers(len(options))])
    _validate_chain(chain, closures, n_max, t_count)

    mats = [m.entries for m in ms]
    vals = _dp_run(mats[chain[0]],
                   lambda n: mats[chain[2 * n - 3]],
                   lambda n: mats[chain[2 * n - 2]],
                   lambda n: mats[closures[n]],
                   n_max)
    pair_means = [float(np.mean(mats[s] * mats[t]))
                  for s, t in itertools.combinations(range(t_count), 2)]
    vals[1] = math.fsum(pair_means) / len(pair_means)
    return MomentSequence(vals, "dp-altT", n_max,
                          meta={"p": ms[0].p, "q": ms[0].q, "seed": ms[0].seed,
                                "trials": t_count, "chain": list(chain),
                                "closures": dict(closures)})


def permuted_dp_moments(m: MeasurementMatrix, n_max: int, repeats: int = 1,
                        seed: int = 0, orientation: str = AUTO) -> MomentSequence:
    """Average ``dp_moments`` over random row/column permutations.

    The first repeat uses the identity permutation, so repeats=1 is exactly
    ``dp_moments``.  Averaging over permutations includes additional cyclic
    path sums, which can only reduce the variance of the estimate.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rng = _rng(seed, 6)
    acc = {n: [] for n in range(1, n_max + 1)}
    for r in range(repeats):
        if r == 0:
            perm_m = m
        else:
            rows = rng.permutation(m.p)
            cols = rng.permutation(m.q)
            perm_m = MeasurementMatrix(entries=m.entries[np.ix_(rows, cols)],
                                       trial_id=m.trial_id, seed=m.seed)
        vals = dp_moments(perm_m, n_max, orientation).values
        for n in range(1, n_max + 1):
            acc[n].append(vals[n])
    values = {n: math.fsum(v) / repeats for n, v in acc.items()}
    return MomentSequence(values, "permuted-dp", n_max,
                          meta={"p": m.p, "q": m.q, "seed": m.seed,
                                "repeats": repeats})


def brute_force_increasing(m: MeasurementMatrix, n: int) -> float:
    """Direct enumeration of the increasing-path average (test oracle)."""
    p, q = m.p, m.q
    if n < 1 or n > min(p, q):
        raise ValueError("need 1 <= n <= min(P, Q)")
    count = math.comb(p, n) * math.comb(q, n)
    if count > _ENUM_BUDGET:
        raise ValueError(f"enumeration budget exceeded: {count} > {_ENUM_BUDGET}")
    phi = m.entries
    total = []
    for rows in itertools.combinations(range(p), n):
        rows_next = rows[1:] + rows[:1]
        for cols in itertools.combinations(range(q), n):
            prod = 1.0
            for l in range(n):
                prod *= phi[rows[l], cols[l]] * phi[rows_next[l], cols[l]]
            total.append(prod)
    return math.fsum(total) / count


def brute_force_all_paths(m: MeasurementMatrix, n: int) -> float:
    """Average over all ordered disjoint-index cyclic paths (test oracle)."""
    p, q = m.p, m.q
    if n < 1 or n > min(p, q):
        raise ValueError("need 1 <= n <= min(P, Q)")
    count = 1
    for i in range(n):
        count *= (p - i) * (q - i)
    if count > _ENUM_BUDGET:
        raise ValueError(f"enumeration budget exceeded: {count} > {_ENUM_BUDGET}")
    phi = m.entries
    total = []
    for rows in itertools.permutations(range(p), n):
        rows_next = rows[1:] + rows[:1]
        for cols in itertools.permutations(range(q), n):
            prod = 1.0
            for l in range(n):
                prod *= phi[rows[l], cols[l]] * phi[rows_next[l], cols[l]]
            total.append(prod)
    return math.fsum(total) / count


def estimate_f(process: GenerativeProcess, n: int, samples: int,
               seed: int = 0) -> float:
    """Monte-Carlo estimate of f(n) = n^2 Var(prod phi(x_i,w_i)phi(x_{i+1},w_i)).

    Each sample draws a fresh iid tuple of n inputs and n features and forms
    the cyclic product of 2n feature evaluations (x_{n+1} = x_1).
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = _rng(seed, 7)
    d = process.d
    chol_x = np.linalg.cholesky(process.sigma_x)
    x = rng.standard_normal((samples, n, d)) @ chol_x.T
    z = rng.standard_normal((samples, n, d))
    if process.kind == RFF:
        chol_s = np.linalg.cholesky(process.sigma)
        w = np.linalg.solve(chol_s.T, z.reshape(-1, d).T).T.reshape(samples, n, d)
        b = rng.uniform(0.0, 2.0 * math.pi, size=(samples, n))
    else:
        w, b = z, None
    x_next = np.roll(x, -1, axis=1)
    dots = np.einsum("snd,snd->sn", x, w)
    dots_next = np.einsum("snd,snd->sn", x_next, w)
    if process.kind == RFF:
        f1 = math.sqrt(2.0) * np.sin(dots + b)
        f2 = math.sqrt(2.0) * np.sin(dots_next + b)
    elif process.kind == LINEAR:
        f1 = process.scale * dots
        f2 = process.scale * dots_next
    else:
        f1 = np.maximum(dots, 0.0)
        f2 = np.maximum(dots_next, 0.0)
    prod = np.prod(f1 * f2, axis=1)
    return n * n * float(np.var(prod, ddof=1))


def variance_bound(n: int, p: int, q: int, f_n: float,
                   raw_variance: bool = False) -> float:
    """Upper bound (1/P + 1/Q) f(n) on Var of the increasing-path estimate.

    ``f_n`` is f(n) as returned by ``estimate_f``; with ``raw_variance`` the
    caller passes Var of the cyclic product and the n^2 factor is applied
    here.
    """
    if f_n < 0:
        raise ValueError("f_n must be nonnegative")
    if raw_variance:
        f_n = n * n * f_n
    return (1.0 / p + 1.0 / q) * f_n


def chebyshev_error(n: int, p: int, q: int, f_n: float, delta: float) -> float:
    """Radius r with |m_hat(n) - m(n)| <= r at probability >= 1 - delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if f_n < 0:
        raise ValueError("f_n must be nonnegative")
    return math.sqrt(f_n / delta * (1.0 / p + 1.0 / q))
