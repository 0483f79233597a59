"""Closed-form spectra for the RBF and finite-rank linear operators.

For Gaussian inputs N(0, Sigma_x) under the RBF kernel with precision
Sigma^-1, the operator spectrum is determined by the eigenvalues eta_i of
Sigma_x Sigma^-1 alone.  With the scalar map

    phi_z = (1 + sqrt(1 + 4 z)) / (2 z),

every multiset u of d nonnegative integers indexes an eigenvalue

    lambda_u = prod_i (eta_i^(1 + u_i) * phi_{eta_i}^(1 + 2 u_i))^-1

and the n-th moment has the product form

    m(n) = prod_i 1 / (eta_i^n phi_{eta_i}^n - phi_{eta_i}^-n),

with m(1) = 1 for every parameter choice.  ``block_circulant_moment``
recomputes m(n) from the Gaussian cyclic integral as the log-determinant of
an n*d block-circulant precision matrix, giving an independent numeric
oracle for the closed form.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .estimators import MomentSequence


@dataclass(frozen=True)
class RbfSpectrumSpec:
    """Eigenvalues eta_i of Sigma_x Sigma^-1, the spectrum's sole inputs."""

    etas: tuple

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        if not etas or any(e <= 0 for e in etas):
            raise ValueError("all etas must be positive")
        object.__setattr__(self, "etas", etas)

    @property
    def d(self):
        return len(self.etas)


@dataclass(frozen=True)
class EigenvalueList:
    """Non-increasing nonnegative eigenvalue estimates."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("eigenvalues must be nonnegative")
        if any(vals[i] < vals[i + 1] for i in range(len(vals) - 1)):
            raise ValueError("eigenvalues must be non-increasing")
        object.__setattr__(self, "values", vals)

    @property
    def rank(self):
        return sum(1 for v in self.values if v > 0)


def phi_scalar(z: float) -> float:
    """(1 + sqrt(1 + 4z)) / (2z); the golden ratio at z = 1."""
    if z <= 0:
        raise ValueError("z must be positive")
    return (1.0 + math.sqrt(1.0 + 4.0 * z)) / (2.0 * z)


def compute_etas(sigma_x, sigma) -> np.ndarray:
    """Eigenvalues of Sigma_x Sigma^-1, descending.

    Computed from the congruent symmetric form L^-1 Sigma_x L^-T with
    Sigma = L L^T, which shares the spectrum and keeps the eigensolve
    symmetric (guaranteed real positive output).
    """
    sigma_x = np.asarray(sigma_x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if sigma_x.shape != sigma.shape or sigma_x.ndim != 2:
        raise ValueError("sigma_x and sigma must be square matrices of equal size")
    chol = np.linalg.cholesky(sigma)
    inner = np.linalg.solve(chol, sigma_x)
    sym = np.linalg.solve(chol, inner.T).T
    sym = (sym + sym.T) / 2
    etas = np.linalg.eigvalsh(sym)[::-1]
    if np.any(etas <= 0):
        raise ValueError("Sigma_x Sigma^-1 must be positive-definite")
    return etas


def spec_from_covariances(sigma_x, sigma) -> RbfSpectrumSpec:
    return RbfSpectrumSpec(etas=tuple(compute_etas(sigma_x, sigma)))


def rbf_eigenvalue(spec: RbfSpectrumSpec, u) -> float:
    if len(u) != spec.d:
        raise ValueError(f"u must have length {spec.d}")
    out = 1.0
    for eta, ui in zip(spec.etas, u):
        if ui < 0:
            raise ValueError("u entries must be nonnegative integers")
        out /= eta ** (1 + ui) * phi_scalar(eta) ** (1 + 2 * ui)
    return out


def rbf_top_eigenvalues(spec: RbfSpectrumSpec, count: int) -> EigenvalueList:
    """Largest ``count`` eigenvalues over the whole index lattice.

    lambda_u = s * prod r_i^{u_i} with all r_i < 1, so a best-first search
    over the lattice (expanding each node only at coordinates at or past its
    last nonzero index, which generates every multiset exactly once) yields
    the eigenvalues in non-increasing order.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    d = spec.d
    s = 1.0
    r = []
    for eta in spec.etas:
        phi = phi_scalar(eta)
        s /= eta * phi
        r.append(1.0 / (eta * phi * phi))
    heap = [(-s, (0,) * d, 0)]  # (-lambda, u, first expandable coordinate)
    out = []
    while heap and len(out) < count:
        neg, u, lo = heapq.heappop(heap)
        out.append(-neg)
        for i in range(lo, d):
            child = u[:i] + (u[i] + 1,) + u[i + 1:]
            heapq.heappush(heap, (neg * r[i], child, i))
    return EigenvalueList(values=tuple(out))


def rbf_moment(spec: RbfSpectrumSpec, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    out = 1.0
    for eta in spec.etas:
        phi = phi_scalar(eta)
        out /= (eta * phi) ** n - phi ** (-n)
    return out


def rbf_moments(spec: RbfSpectrumSpec, n_max: int) -> MomentSequence:
    values = {n: rbf_moment(spec, n) for n in range(1, n_max + 1)}
    return MomentSequence(values, "analytic", n_max, meta={"etas": list(spec.etas)})


def block_circulant_moment(sigma_x, sigma, n: int, size_guard: int = 2000) -> float:
    """m(n) = (det Sigma_x^n det M)^(-1/2) from the cyclic Gaussian integral.

    M is block-circulant with diagonal blocks 2 Sigma^-1 + Sigma_x^-1 and
    -Sigma^-1 on the cyclic off-diagonals.  Evaluated through Cholesky
    log-determinants so moderate n*d sizes do not overflow.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sigma_x = np.asarray(sigma_x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    d = sigma_x.shape[0]
    if n * d > size_guard:
        raise ValueError(f"assembly size {n * d} exceeds guard {size_guard}")
    sigma_inv = np.linalg.inv(sigma)
    sigma_x_inv = np.linalg.inv(sigma_x)
    diag_block = 2.0 * sigma_inv + sigma_x_inv
    m_mat = np.zeros((n * d, n * d))
    for i in range(n):
        m_mat[i * d:(i + 1) * d, i * d:(i + 1) * d] = diag_block
        for j in ((i + 1) % n, (i - 1) % n):
            m_mat[i * d:(i + 1) * d, j * d:(j + 1) * d] -= sigma_inv
    sign_x, logdet_x = np.linalg.slogdet(sigma_x)
    chol = np.linalg.cholesky(m_mat)
    logdet_m = 2.0 * float(np.sum(np.log(np.diag(chol))))
    if sign_x <= 0:
        raise ValueError("sigma_x must be positive-definite")
    return math.exp(-0.5 * (n * logdet_x + logdet_m))


def linear_process_moments(d: int, eigenvalue: float, n_max: int) -> MomentSequence:
    """Moments d * eigenvalue^n of a rank-d operator with a d-fold eigenvalue."""
    if d < 1 or eigenvalue <= 0:
        raise ValueError("need d >= 1 and a positive eigenvalue")
    values = {n: d * eigenvalue**n for n in range(1, n_max + 1)}
    return MomentSequence(values, "analytic", n_max,
                          meta={"d": d, "eigenvalue": eigenvalue})
