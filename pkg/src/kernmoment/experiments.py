"""Replicated Monte-Carlo experiments comparing the moment estimators.

Each experiment draws independent measurement matrices with per-replicate
derived seeds, applies a set of estimators, and aggregates mean, MSE against
ground truth, bias, and variance per moment order.  Aggregation is ordered
and deterministic for a fixed master seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import estimators as est
from .analytic import (RbfSpectrumSpec, linear_process_moments, rbf_moments,
                       rbf_top_eigenvalues, spec_from_covariances)
from .processes import (GenerativeProcess, MeasurementMatrix, NoiseModel,
                        build_measurements, NO_NOISE, RFF, LINEAR, RELU)
from .recovery import RecoveryConfig, extract_eigenvalues, fit_density


def replicate_seeds(seed: int, replicates: int) -> list[int]:
    state = np.random.SeedSequence(int(seed) & (2**64 - 1)).generate_state(
        replicates, dtype=np.uint64)
    return [int(s) for s in state]


@dataclass
class EstimatorTable:
    """Per-(estimator, n) replicate aggregates against ground truth."""

    orders: list[int]
    truth: dict[int, float]
    samples: dict[str, dict[int, list[float]]] = field(default_factory=dict)

    def add(self, name: str, values: dict[int, float]):
        per = self.samples.setdefault(name, {n: [] for n in self.orders})
        for n in self.orders:
            per[n].append(values[n])

    def mean(self, name, n):
        return float(np.mean(self.samples[name][n]))

    def var(self, name, n):
        return float(np.var(self.samples[name][n], ddof=1))

    def std_err(self, name, n):
        x = self.samples[name][n]
        return math.sqrt(np.var(x, ddof=1) / len(x))

    def bias(self, name, n):
        return self.mean(name, n) - self.truth[n]

    def mse(self, name, n):
        x = np.asarray(self.samples[name][n])
        return float(np.mean((x - self.truth[n]) ** 2))

    def quantile_interval(self, name, n, level=0.5):
        x = np.asarray(self.samples[name][n])
        lo = float(np.quantile(x, 0.5 - level / 2))
        hi = float(np.quantile(x, 0.5 + level / 2))
        return lo, hi

    def rows(self):
        """Plot-ready rows: estimator, n, truth, mean, mse, bias, variance, ci."""
        out = []
        for name in self.samples:
            for n in self.orders:
                lo, hi = self.quantile_interval(name, n)
                out.append({
                    "estimator": name, "n": n, "truth": self.truth[n],
                    "mean": self.mean(name, n), "mse": self.mse(name, n),
                    "bias": self.bias(name, n), "variance": self.var(name, n),
                    "ci50_lo": lo, "ci50_hi": hi,
                })
        return out


def _scaled(value, scale, minimum=2):
    return max(minimum, int(round(value * scale)))


def fig2_process() -> GenerativeProcess:
    d = 5
    return GenerativeProcess(kind=RFF, d=d, sigma_x=np.eye(d),
                             sigma=0.25 * np.eye(d))


def rff_truth(process: GenerativeProcess, n_max: int) -> dict[int, float]:
    spec = spec_from_covariances(process.sigma_x, process.sigma)
    return dict(rbf_moments(spec, n_max).values)


def moment_comparison(process: GenerativeProcess, p: int, q: int, n_max: int,
                      truth: dict[int, float], replicates: int, seed: int,
                      estimators=("naive", "kv-row", "kv-col", "dp"),
                      noise: NoiseModel = NO_NOISE,
                      orientation: str = est.AUTO) -> EstimatorTable:
    """Replicated estimator comparison on freshly sampled matrices."""
    orders = list(range(2, n_max + 1))
    table = EstimatorTable(orders=orders, truth=truth)
    for rseed in replicate_seeds(seed, replicates):
        trials = build_measurements(process, p, q, noise, rseed)
        m = trials[0]
        for name in estimators:
            if name == "naive":
                vals = est.naive_moments(m, n_max).values
            elif name == "kv-row":
                vals = est.kv_moments(m, n_max, est.ROW).values
            elif name == "kv-col":
                vals = est.kv_moments(m, n_max, est.COL).values
            elif name == "dp":
                vals = est.dp_moments(m, n_max, orientation).values
            elif name == "dp-alt2":
                vals = est.dp_moments_alt2(trials[0], trials[1], n_max).values
            elif name == "dp-altT":
                vals = est.dp_moments_altT(trials, n_max, seed=rseed).values
            else:
                raise ValueError(f"unknown estimator {name!r}")
            table.add(name, vals)
    return table


def fig2_experiment(scale: float = 1.0, replicates: int = 100,
                    seed: int = 20240, n_max: int = 7) -> EstimatorTable:
    """RBF moment comparison at the d=5, P=300, Q=600 configuration."""
    process = fig2_process()
    p, q = _scaled(300, scale, n_max), _scaled(600, scale, n_max)
    truth = rff_truth(process, n_max)
    return moment_comparison(process, p, q, n_max, truth, replicates, seed)


def bias_pattern_sweep(q_values=(150, 300, 600, 1200), p: int = 300, n: int = 3,
                       replicates: int = 100, seed: int = 31) -> dict[int, EstimatorTable]:
    """Fixed-P sweep over Q isolating which estimators stay biased."""
    process = fig2_process()
    truth = rff_truth(process, n)
    return {q: moment_comparison(process, p, q, n, truth, replicates,
                                 seed + q, ("naive", "kv-row", "kv-col", "dp"))
            for q in q_values}


@dataclass
class RecoveryComparison:
    truth: list[float]
    errors: dict[str, list[float]]            # per-method per-replicate total error
    eigenvalues: dict[str, list[float]]       # from the first replicate (for tables)
    objectives: dict[str, float]


def _gram_singular_values(m: MeasurementMatrix, count: int) -> list[float]:
    k = est.gram_matrix(m) / m.p
    sv = np.linalg.svd(k, compute_uv=False)
    return list(sv[:count])


def recovery_comparison(process: GenerativeProcess, p: int, q: int,
                        truth_eigs: list[float], cfg: RecoveryConfig,
                        replicates: int, seed: int) -> RecoveryComparison:
    """End-to-end eigenvalue recovery from dp and kv moments plus SVD baseline."""
    truth = sorted(truth_eigs, reverse=True)[:cfg.d]
    errors = {"ours": [], "kv": [], "svd": []}
    eigenvalues = {}
    objectives = {}
    for i, rseed in enumerate(replicate_seeds(seed, replicates)):
        m = build_measurements(process, p, q, NO_NOISE, rseed)[0]
        sources = {
            "ours": est.dp_moments(m, cfg.k),
            "kv": est.kv_moments(m, cfg.k, est.ROW),
        }
        recovered = {}
        for name, seq in sources.items():
            grid = fit_density(seq, cfg)
            recovered[name] = list(extract_eigenvalues(grid, cfg.d).values)
            if i == 0:
                objectives[name] = grid.objective
        recovered["svd"] = _gram_singular_values(m, cfg.d)
        for name, vals in recovered.items():
            padded = list(vals) + [0.0] * (cfg.d - len(vals))
            errors[name].append(float(sum(abs(a - b) for a, b in zip(padded, truth))))
            if i == 0:
                eigenvalues[name] = vals
    return RecoveryComparison(truth=truth, errors=errors,
                              eigenvalues=eigenvalues, objectives=objectives)


def fig3left_experiment(scale: float = 1.0, replicates: int = 20,
                        seed: int = 7) -> RecoveryComparison:
    """Finite-rank linear process: eigenvalue 0.3 with multiplicity 20."""
    d = 20
    p = q = _scaled(100, scale, 10)
    process = GenerativeProcess(kind=LINEAR, d=d, sigma_x=np.eye(d),
                                scale=math.sqrt(0.3))
    cfg = RecoveryConfig(d=d, b=1.0, t_count=200, k=10)
    return recovery_comparison(process, p, q, [0.3] * d, cfg, replicates, seed)


def fig3right_experiment(scale: float = 1.0, replicates: int = 20,
                         seed: int = 11) -> RecoveryComparison:
    """RBF process with eta=400: slowly decaying infinite spectrum."""
    eta = 400.0
    p = q = _scaled(20, scale, 10)
    process = GenerativeProcess(kind=RFF, d=1, sigma_x=np.eye(1),
                                sigma=np.eye(1) / eta)
    d_recover = 50
    truth = list(rbf_top_eigenvalues(RbfSpectrumSpec((eta,)), d_recover).values)
    cfg = RecoveryConfig(d=d_recover, b=0.1, t_count=200, k=10)
    return recovery_comparison(process, p, q, truth, cfg, replicates, seed)


def noise_process() -> GenerativeProcess:
    d = 3
    return GenerativeProcess(kind=RFF, d=d, sigma_x=np.eye(d),
                             sigma=0.25 * np.eye(d))


def noise_experiment(scale: float = 1.0, replicates: int = 400,
                     seed: int = 99, n_max: int = 4,
                     sigma_noise: float = 1.0) -> dict[str, EstimatorTable]:
    """Estimator bias under independent and row/column-correlated noise.

    Panels: clean single-trial dp; independent noise with T=1 (dp stays
    unbiased); correlated noise with T=1 (dp biased); correlated noise with
    T=2 and trial alternation (dp-alt2 unbiased again).
    """
    process = noise_process()
    p, q = _scaled(75, scale, n_max), _scaled(15, scale, n_max)
    truth = rff_truth(process, n_max)
    panels = {
        "clean": (NO_NOISE, ("dp",)),
        "independent_t1": (NoiseModel("independent", sigma_noise, 1), ("dp", "naive")),
        "correlated_t1": (NoiseModel("rowcol", sigma_noise, 1), ("dp",)),
        "correlated_t2_alt": (NoiseModel("rowcol", sigma_noise, 2), ("dp-alt2", "dp")),
    }
    out = {}
    for name, (noise, estimators) in panels.items():
        out[name] = moment_comparison(process, p, q, n_max, truth, replicates,
                                      seed, estimators, noise)
    return out


def normalized_relu_matrix(n_width: int, p: int, d: int, seed: int) -> MeasurementMatrix:
    """Untrained ReLU random-feature matrix, RMS-normalized over entries."""
    process = GenerativeProcess(kind=RELU, d=d, sigma_x=np.eye(d))
    m = build_measurements(process, p, n_width, NO_NOISE, seed)[0]
    rms = math.sqrt(float(np.mean(m.entries**2)))
    return MeasurementMatrix(entries=m.entries / rms, trial_id=0, seed=seed)


def subsampling_consistency(n_width: int = 1024, q_sub: int = 128, p: int = 256,
                            d: int = 8, replicates: int = 30, seed: int = 17,
                            n_max: int = 4) -> dict[str, EstimatorTable]:
    """Column-subsampling agreement check for dp vs naive moments.

    Per replicate the subsampled value is the average over a random disjoint
    partition of the columns into Q = ``q_sub`` blocks: every constituent
    estimate sees exactly ``q_sub`` columns (so it keeps any Q-dependent
    bias), while the column-sampling noise of the average is suppressed.
    Both dp estimates target the same operator; the naive estimate carries a
    Q-dependent bias that separates the full and subsampled regimes.
    """
    orders = list(range(2, n_max + 1))
    full = EstimatorTable(orders=orders, truth={n: math.nan for n in orders})
    sub = EstimatorTable(orders=orders, truth={n: math.nan for n in orders})
    for rseed in replicate_seeds(seed, replicates):
        m_full = normalized_relu_matrix(n_width, p, d, rseed)
        perm = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(rseed, spawn_key=(8,)))).permutation(n_width)
        blocks = [np.sort(perm[i:i + q_sub])
                  for i in range(0, n_width - q_sub + 1, q_sub)]
        full.add("dp", est.dp_moments(m_full, n_max).values)
        full.add("naive", est.naive_moments(m_full, n_max).values)
        acc = {"dp": [], "naive": []}
        for cols in blocks:
            m_sub = MeasurementMatrix(entries=m_full.entries[:, cols],
                                      trial_id=0, seed=rseed)
            acc["dp"].append(est.dp_moments(m_sub, n_max).values)
            acc["naive"].append(est.naive_moments(m_sub, n_max).values)
        for name, vals in acc.items():
            sub.add(name, {n: float(np.mean([v[n] for v in vals]))
                           for n in range(1, n_max + 1)})
    return {"full": full, "sub": sub}


def marchenko_pastur_sanity(d: int = 4000, p: int = 40, q: int = 80,
                            replicates: int = 200, seed: int = 5) -> EstimatorTable:
    """Near-iid bilinear regime where the naive estimator follows MP."""
    process = GenerativeProcess(kind=LINEAR, d=d, sigma_x=np.eye(d),
                                scale=1.0 / math.sqrt(d))
    truth = dict(linear_process_moments(d, 1.0 / d, 2).values)
    return moment_comparison(process, p, q, 2, truth, replicates, seed,
                             ("naive", "dp"))
