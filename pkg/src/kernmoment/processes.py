"""Generative processes for measurement matrices.

A process is a triple (feature map, input distribution, weight distribution).
Sampling P inputs and Q features and evaluating the map on every pair yields
a P x Q measurement matrix whose rows are exchangeable in the inputs and
whose columns are exchangeable in the features.

Supported families:

* ``rff``    -- sinusoidal random Fourier features, sqrt(2)*sin(w.x + b) with
  w ~ N(0, Sigma^-1) and b ~ U[0, 2pi); the feature-averaged kernel is the
  Gaussian RBF kernel with precision Sigma^-1.
* ``linear`` -- scale * x.w with w ~ N(0, I); rank-d operator with a d-fold
  degenerate eigenvalue scale^2 when the input covariance is the identity.
* ``relu``   -- max(x.w, 0) with w ~ N(0, I).

Randomness is counter-based (Philox) with documented stream derivation:
stream (seed, 0) draws inputs, (seed, 1) draws features, and (seed, 2, t)
draws the noise of trial t.  Identical (process, p, q, noise, seed) therefore
produce bit-identical matrices, also under concurrent generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

RFF = "rff"
LINEAR = "linear"
RELU = "relu"
_KINDS = (RFF, LINEAR, RELU)

NOISE_NONE = "none"
NOISE_INDEPENDENT = "independent"
NOISE_ROWCOL = "rowcol"
_NOISE_KINDS = (NOISE_NONE, NOISE_INDEPENDENT, NOISE_ROWCOL)

_STREAM_INPUTS = 0
_STREAM_FEATURES = 1
_STREAM_NOISE = 2


def _as_cov(mat, d, name):
    a = np.asarray(mat, dtype=float)
    if a.shape == ():
        a = float(a) * np.eye(d)
    if a.shape != (d, d):
        raise ValueError(f"{name} must be {d}x{d}, got {a.shape}")
    if not np.allclose(a, a.T):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} is not positive-definite") from None
    return a


def _rng(seed, *stream):
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class GenerativeProcess:
    """Specification of (feature map, input law, weight law).

    ``sigma_x`` is the input covariance; ``sigma`` is the RFF kernel
    covariance (weights are drawn from N(0, sigma^-1)).  Both may be passed
    as a scalar meaning that multiple of the identity.
    """

    kind: str
    d: int
    sigma_x: np.ndarray = 1.0
    sigma: np.ndarray = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown process kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        object.__setattr__(self, "sigma_x", _as_cov(self.sigma_x, self.d, "sigma_x"))
        if self.kind == RFF:
            object.__setattr__(self, "sigma", _as_cov(self.sigma, self.d, "sigma"))
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Q sampled feature descriptors: weight rows, plus phases for RFF."""

    w: np.ndarray                      # (q, d)
    b: np.ndarray | None = None        # (q,) for RFF, else None

    @property
    def q(self):
        return self.w.shape[0]


@dataclass(frozen=True, eq=False)
class NoiseModel:
    kind: str = NOISE_NONE
    sigma_noise: float = 0.0
    trials: int = 1

    def __post_init__(self):
        if self.kind not in _NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma_noise < 0:
            raise ValueError("sigma_noise must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


NO_NOISE = NoiseModel()


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """A dense P x Q matrix of sampled feature evaluations (one trial)."""

    entries: np.ndarray
    trial_id: int = 0
    seed: int = 0

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("entries must be a nonempty 2-d array")
        if not np.all(np.isfinite(a)):
            raise ValueError("entries must be finite")
        object.__setattr__(self, "entries", a)

    @property
    def p(self):
        return self.entries.shape[0]

    @property
    def q(self):
        return self.entries.shape[1]


def sample_inputs(process: GenerativeProcess, p: int, seed: int) -> np.ndarray:
    """Draw p inputs x_i ~ N(0, sigma_x), returned as a (p, d) array."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = _rng(seed, _STREAM_INPUTS)
    z = rng.standard_normal((p, process.d))
    chol = np.linalg.cholesky(process.sigma_x)
    return z @ chol.T


def sample_features(process: GenerativeProcess, q: int, seed: int) -> FeatureSet:
    """Draw q feature descriptors.

    RFF: w ~ N(0, sigma^-1) and b ~ U[0, 2pi).  Linear/ReLU: w ~ N(0, I).
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    rng = _rng(seed, _STREAM_FEATURES)
    z = rng.standard_normal((q, process.d))
    if process.kind == RFF:
        # sigma = L L^T  =>  L^-T z ~ N(0, sigma^-1)
        chol = np.linalg.cholesky(process.sigma)
        w = np.linalg.solve(chol.T, z.T).T
        b = rng.uniform(0.0, 2.0 * math.pi, size=q)
        return FeatureSet(w=w, b=b)
    return FeatureSet(w=z)


def evaluate_phi(process: GenerativeProcess, x, w, b=None) -> float:
    """Evaluate the feature map on a single (input, feature) pair."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (process.d,) or w.shape != (process.d,):
        raise ValueError("dimension mismatch with process.d")
    dot = float(x @ w)
    if process.kind == RFF:
        if b is None:
            raise ValueError("RFF feature requires a phase b")
        return math.sqrt(2.0) * math.sin(dot + float(b))
    if process.kind == LINEAR:
        return process.scale * dot
    return max(dot, 0.0)


def evaluate_matrix(process: GenerativeProcess, inputs: np.ndarray,
                    features: FeatureSet) -> np.ndarray:
    """Vectorized feature-map evaluation: (p, d) x features -> (p, q)."""
    dots = inputs @ features.w.T
    if process.kind == RFF:
        return math.sqrt(2.0) * np.sin(dots + features.b[None, :])
    if process.kind == LINEAR:
        return process.scale * dots
    return np.maximum(dots, 0.0)


def build_measurements(process: GenerativeProcess, p: int, q: int,
                       noise: NoiseModel = NO_NOISE, seed: int = 0,
                       ) -> list[MeasurementMatrix]:
    """Sample one (inputs, features) pair and produce one matrix per trial.

    All trials share the same noiseless base matrix; only the noise is
    redrawn per trial.  Row/column-correlated noise adds a_i + b_alpha with
    a, b iid N(0, sigma_noise^2), so that within a trial the noise covariance
    between entries is sigma_noise^2 * (delta_ij + delta_ab).
    """
    inputs = sample_inputs(process, p, seed)
    features = sample_features(process, q, seed)
    base = evaluate_matrix(process, inputs, features)
    out = []
    for t in range(noise.trials):
        if noise.kind == NOISE_NONE or noise.sigma_noise == 0.0:
            entries = base.copy()
        else:
            rng = _rng(seed, _STREAM_NOISE, t)
            if noise.kind == NOISE_INDEPENDENT:
                entries = base + rng.normal(0.0, noise.sigma_noise, size=(p, q))
            else:
                a = rng.normal(0.0, noise.sigma_noise, size=p)
                bcol = rng.normal(0.0, noise.sigma_noise, size=q)
                entries = base + a[:, None] + bcol[None, :]
        out.append(MeasurementMatrix(entries=entries, trial_id=t, seed=seed))
    return out
