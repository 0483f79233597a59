"""Command-line harness: generate / estimate / recover / bench / reproduce.

Every command reads a JSON config, applies flag overrides, and writes CSV
plus JSON outputs into ``--out``.  Each JSON output embeds the sha256 hash of
the effective config and the seed, so identical invocations yield identical
numeric content.

Exit codes: 0 success, 2 config error, 3 numeric/precondition error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import estimators as est
from . import matio
from .analytic import (RbfSpectrumSpec, linear_process_moments,
                       rbf_top_eigenvalues)
from .estimators import MomentSequence
from .experiments import (bias_pattern_sweep, fig2_experiment,
                          fig3left_experiment, fig3right_experiment,
                          noise_experiment)
from .processes import _rng, build_measurements
from .recovery import RecoveryConfig, default_upper_bound, recover, fit_density, extract_eigenvalues


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

ESTIMATOR_NAMES = ("naive", "kv-row", "kv-col", "exact2", "dp", "dp-alt")
FIGURES = ("fig2", "fig3left", "fig3right", "noise_table")


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _effective_config(args, overrides=()):
    config = matio.load_config(args.config) if args.config else {}
    if not isinstance(config, dict):
        raise ConfigError("config root must be a JSON object")
    for key in overrides:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            config[key] = val
    if args.seed is not None:
        config["seed"] = args.seed
    config.setdefault("seed", 0)
    return config


def cmd_generate(args) -> int:
    config = _effective_config(args)
    try:
        process = matio.process_from_dict(config["process"])
        noise = matio.noise_from_dict(config.get("noise"))
        p, q = int(config["p"]), int(config["q"])
        fmt = str(config.get("format", "csv")).lower()
        if fmt not in ("csv", "kmm1"):
            raise ConfigError(f"unknown matrix format {fmt!r}")
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    seed = int(config["seed"])
    trials = build_measurements(process, p, q, noise, seed)
    out = _out_dir(args)
    suffix = ".csv" if fmt == "csv" else ".kmm"
    files = []
    for m in trials:
        name = f"matrix_t{m.trial_id}{suffix}"
        matio.save_matrix(m, out / name)
        files.append(name)
    _write_json(out / "manifest.json", {
        "config": config, "config_hash": config_hash(config), "seed": seed,
        "p": p, "q": q, "trials": noise.trials, "format": fmt, "files": files,
    })
    print(f"wrote {len(files)} matrix file(s) to {out}")
    return 0


def _load_trials(config, args):
    if "manifest" in config:
        base = Path(config["manifest"]).parent
        manifest = matio.load_config(config["manifest"])
        paths = [base / f for f in manifest["files"]]
        seed = manifest.get("seed", 0)
    elif "matrices" in config:
        paths = [Path(p) for p in config["matrices"]]
        seed = config.get("seed", 0)
    else:
        raise ConfigError("config needs 'manifest' or 'matrices'")
    return [matio.load_matrix(p, trial_id=t, seed=seed)
            for t, p in enumerate(paths)]


def _run_estimator(name, trials, n_max, orientation, repeats, seed):
    m = trials[0]
    if name == "naive":
        return est.naive_moments(m, n_max)
    if name == "kv-row":
        return est.kv_moments(m, n_max, est.ROW)
    if name == "kv-col":
        return est.kv_moments(m, n_max, est.COL)
    if name == "exact2":
        val = est.exact_second_moment(m)
        return MomentSequence({2: val}, "exact2", 2,
                              meta={"p": m.p, "q": m.q, "seed": m.seed})
    if name == "dp":
        if repeats > 1:
            return est.permuted_dp_moments(m, n_max, repeats, seed, orientation)
        return est.dp_moments(m, n_max, orientation)
    if name == "dp-alt":
        if len(trials) < 2:
            raise ValueError("dp-alt requires at least two trial matrices")
        if len(trials) == 2:
            return est.dp_moments_alt2(trials[0], trials[1], n_max)
        return est.dp_moments_altT(trials, n_max, seed=seed)
    raise ConfigError(f"unknown estimator {name!r} "
                      f"(choose from {', '.join(ESTIMATOR_NAMES)})")


def cmd_estimate(args) -> int:
    config = _effective_config(args, overrides=("orientation", "repeats"))
    if args.estimators:
        config["estimators"] = [s.strip() for s in args.estimators.split(",")]
    try:
        n_max = int(config["n_max"])
    except KeyError as exc:
        raise ConfigError("config needs 'n_max'") from exc
    names = config.get("estimators", ["dp"])
    for name in names:
        if name not in ESTIMATOR_NAMES:
            raise ConfigError(f"unknown estimator {name!r} "
                              f"(choose from {', '.join(ESTIMATOR_NAMES)})")
    orientation = config.get("orientation", est.AUTO)
    repeats = int(config.get("repeats", 1))
    seed = int(config["seed"])
    trials = _load_trials(config, args)
    out = _out_dir(args)
    seqs, wall = [], {}
    for name in names:
        t0 = time.perf_counter()
        seqs.append(_run_estimator(name, trials, n_max, orientation,
                                   repeats, seed))
        wall[seqs[-1].estimator] = time.perf_counter() - t0
    matio.save_moments_csv(seqs, out / "moments.csv")
    matio.save_moments_json(
        seqs, out / "moments.json",
        dims=(trials[0].p, trials[0].q), seed=seed, wall_times=wall,
        extra={"config_hash": config_hash(config), "seed": seed})
    print(f"wrote moments for {len(seqs)} estimator(s) to {out}")
    return 0


def _ground_truth_eigs(spec: dict, d: int):
    kind = str(spec.get("kind", "")).lower()
    if kind == "linear":
        lam = float(spec["eigenvalue"])
        rank = int(spec.get("d", d))
        vals = [lam] * min(rank, d) + [0.0] * max(0, d - rank)
        return vals
    if kind == "rbf":
        return list(rbf_top_eigenvalues(
            RbfSpectrumSpec(tuple(spec["etas"])), d).values)
    raise ConfigError(f"unknown ground_truth kind {spec.get('kind')!r}")


def cmd_recover(args) -> int:
    config = _effective_config(args)
    try:
        moments_path = Path(config["moments"])
        d = int(config["d"])
    except KeyError as exc:
        raise ConfigError(f"config needs {exc}") from exc
    if moments_path.suffix == ".csv":
        seqs = matio.load_moments_csv(moments_path)
    else:
        seqs = matio.load_moments_json(moments_path)
    by_name = {s.estimator: s for s in seqs}
    ours_name = config.get("estimator", "dp")
    if ours_name not in by_name:
        raise ConfigError(f"moments file has no {ours_name!r} sequence "
                          f"(found {sorted(by_name)})")
    ours = by_name[ours_name]
    k = int(config.get("k", 10))
    if k > ours.n_max or any(n not in ours.values for n in range(1, k + 1)):
        raise ValueError(f"k={k} exceeds available moments (n_max={ours.n_max})")
    b = float(config["b"]) if "b" in config else default_upper_bound(ours, k)
    cfg = RecoveryConfig(d=d, b=b, t_count=int(config.get("t_count", 200)), k=k)

    columns = {}
    grid = fit_density(ours, cfg)
    columns["ours"] = list(extract_eigenvalues(grid, d).values)
    objective = grid.objective
    kv = by_name.get("kv-row") or by_name.get("kv-col")
    if kv is not None and kv.n_max >= k:
        columns["kv"] = list(recover(kv, cfg).values)
    if "matrix" in config:
        m = matio.load_matrix(config["matrix"])
        sv = np.linalg.svd(est.gram_matrix(m) / m.p, compute_uv=False)
        columns["svd"] = [float(v) for v in sv[:d]]
    if "ground_truth" in config:
        columns["gt"] = _ground_truth_eigs(config["ground_truth"], d)

    out = _out_dir(args)
    order = [c for c in ("gt", "svd", "kv", "ours") if c in columns]
    rows = []
    for i in range(d):
        rows.append([i + 1] + [
            repr(columns[c][i]) if i < len(columns[c]) else "" for c in order])
    _write_csv(out / "eigenvalues.csv", ["index"] + order, rows)
    _write_json(out / "recovery.json", {
        "config_hash": config_hash(config), "seed": int(config["seed"]),
        "recovery": {"d": d, "b": b, "t_count": cfg.t_count, "k": k},
        "objective": objective,
        "eigenvalues": {c: columns[c] for c in order},
    })
    print(f"recovered {d} eigenvalues (objective {objective:.3e}) to {out}")
    return 0


def _random_matrix(p, q, seed):
    from .processes import MeasurementMatrix
    entries = _rng(seed, 9).standard_normal((p, q))
    return MeasurementMatrix(entries=entries, trial_id=0, seed=seed)


def _time_dp(m, n_max, orientation, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        est.dp_moments(m, n_max, orientation)
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(args) -> int:
    config = _effective_config(args)
    seed = int(config["seed"])
    p_grid = [int(p) for p in config.get("p_grid", [100, 200, 400, 800])]
    q_for_p = int(config.get("q", 200))
    n_for_p = int(config.get("n", 3))
    n_grid = [int(n) for n in config.get("n_grid", [2, 3, 4, 5, 6, 7, 8])]
    p_for_n = int(config.get("p_fixed", 150))
    q_for_n = int(config.get("q_fixed", 300))
    p_ratio = int(config.get("ratio_p", 150))  # orientation check at Q = 4P
    rows = []

    for p in p_grid:
        t = _time_dp(_random_matrix(p, q_for_p, seed), n_for_p, est.AS_IS)
        rows.append(["p_sweep", p, q_for_p, n_for_p, est.AS_IS, t])
    for n in n_grid:
        t = _time_dp(_random_matrix(p_for_n, q_for_n, seed), n, est.AS_IS)
        rows.append(["n_sweep", p_for_n, q_for_n, n, est.AS_IS, t])
    m_wide = _random_matrix(p_ratio, 4 * p_ratio, seed)
    t_asis = _time_dp(m_wide, n_for_p, est.AS_IS)
    t_trans = _time_dp(m_wide, n_for_p, est.TRANSPOSED)
    rows.append(["orientation", p_ratio, 4 * p_ratio, n_for_p, est.AS_IS, t_asis])
    rows.append(["orientation", p_ratio, 4 * p_ratio, n_for_p, est.TRANSPOSED,
                 t_trans])

    p_times = [r[5] for r in rows if r[0] == "p_sweep"]
    slope_p = float(np.polyfit(np.log(p_grid), np.log(p_times), 1)[0])
    # the order-n DP performs n-1 update sweeps; regress against n-1
    n_times = [r[5] for r in rows if r[0] == "n_sweep"]
    slope_n = float(np.polyfit(np.log(np.array(n_grid) - 1),
                               np.log(n_times), 1)[0])

    out = _out_dir(args)
    _write_csv(out / "timing.csv",
               ["sweep", "p", "q", "n", "orientation", "seconds"], rows)
    _write_json(out / "bench.json", {
        "config_hash": config_hash(config), "seed": seed,
        "slope_p": slope_p, "slope_n": slope_n,
        "orientation_check": {"p": p_ratio, "q": 4 * p_ratio,
                              "asis_seconds": t_asis,
                              "transposed_seconds": t_trans},
    })
    print(f"slope_p={slope_p:.3f} slope_n={slope_n:.3f} "
          f"asis={t_asis:.3f}s transposed={t_trans:.3f}s -> {out}")
    return 0


def _write_table(out, name, table):
    _write_csv(out / name,
               ["estimator", "n", "truth", "mean", "mse", "bias", "variance",
                "ci50_lo", "ci50_hi"],
               [[r["estimator"], r["n"], r["truth"], r["mean"], r["mse"],
                 r["bias"], r["variance"], r["ci50_lo"], r["ci50_hi"]]
                for r in table.rows()])


def _write_recovery_outputs(out, comp, config, seed):
    order = ["gt", "svd", "kv", "ours"]
    d = len(comp.truth)
    rows = []
    for i in range(d):
        cols = {"gt": comp.truth, "svd": comp.eigenvalues["svd"],
                "kv": comp.eigenvalues["kv"], "ours": comp.eigenvalues["ours"]}
        rows.append([i + 1] + [cols[c][i] if i < len(cols[c]) else ""
                               for c in order])
    _write_csv(out / "eigenvalues.csv", ["index"] + order, rows)
    _write_json(out / "summary.json", {
        "config_hash": config_hash(config), "seed": seed,
        "median_total_abs_error": {k: float(np.median(v))
                                   for k, v in comp.errors.items()},
        "objectives": comp.objectives,
    })


def cmd_reproduce(args) -> int:
    config = _effective_config(args, overrides=("scale",))
    figure = args.figure or config.get("figure")
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r} "
                         f"(choose from {', '.join(FIGURES)})")
    scale = float(config.get("scale", 1.0))
    if not 0.0 < scale <= 1.0:
        raise ConfigError("scale must lie in (0, 1]")
    seed = int(config["seed"])
    out = _out_dir(args)

    if figure == "fig2":
        replicates = int(config.get("replicates", 100))
        table = fig2_experiment(scale, replicates, seed)
        _write_table(out, "fig2_table.csv", table)
        _write_json(out / "summary.json", {
            "config_hash": config_hash(config), "seed": seed,
            "replicates": replicates, "rows": table.rows()})
    elif figure == "fig3left":
        replicates = int(config.get("replicates", 20))
        comp = fig3left_experiment(scale, replicates, seed)
        _write_recovery_outputs(out, comp, config, seed)
    elif figure == "fig3right":
        replicates = int(config.get("replicates", 20))
        comp = fig3right_experiment(scale, replicates, seed)
        _write_recovery_outputs(out, comp, config, seed)
    else:
        replicates = int(config.get("replicates", 400))
        panels = noise_experiment(scale, replicates, seed)
        for name, table in panels.items():
            _write_table(out, f"noise_{name}.csv", table)
        _write_json(out / "summary.json", {
            "config_hash": config_hash(config), "seed": seed,
            "replicates": replicates,
            "panels": {name: t.rows() for name, t in panels.items()}})
    print(f"reproduced {figure} at scale {scale} -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernmoment",
        description="Spectral-moment estimation for kernel integral operators")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("generate", cmd_generate), ("estimate", cmd_estimate),
                     ("recover", cmd_recover), ("bench", cmd_bench),
                     ("reproduce", cmd_reproduce)):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (default: cwd)")
        p.add_argument("--scale", type=float,
                       help="dimension scale factor in (0, 1]")
        p.add_argument("--estimators",
                       help="comma-separated estimator names")
        p.add_argument("--orientation",
                       choices=[est.AUTO, est.AS_IS, est.TRANSPOSED])
        p.add_argument("--repeats", type=int,
                       help="permutation repeats for dp")
        if name == "reproduce":
            p.add_argument("--figure", choices=FIGURES)
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command != "reproduce" and not args.config:
            raise ConfigError("--config is required")
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
