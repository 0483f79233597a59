"""Measurement-matrix file formats and process configuration parsing.

Two matrix formats are supported:

* CSV -- one row per matrix row, '.' decimal separator, no header.
* KMM1 binary -- magic ``KMM1``, little-endian u64 P, u64 Q, then P*Q
  little-endian f64 entries in row-major order.

Process specs are read from JSON key/value config files; covariances may be
given as a scalar (that multiple of the identity) or a full matrix.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .estimators import MomentSequence
from .processes import GenerativeProcess, MeasurementMatrix, NoiseModel

_MAGIC = b"KMM1"


def save_matrix_csv(m: MeasurementMatrix, path):
    np.savetxt(path, m.entries, delimiter=",", fmt="%.17g")


def load_matrix_csv(path, trial_id=0, seed=0) -> MeasurementMatrix:
    entries = np.loadtxt(path, delimiter=",", ndmin=2)
    return MeasurementMatrix(entries=entries, trial_id=trial_id, seed=seed)


def save_matrix_binary(m: MeasurementMatrix, path):
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<QQ", m.p, m.q))
        fh.write(np.ascontiguousarray(m.entries, dtype="<f8").tobytes())


def load_matrix_binary(path, trial_id=0, seed=0) -> MeasurementMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
        p, q = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(8 * p * q), dtype="<f8")
        if data.size != p * q:
            raise ValueError(f"{path}: truncated payload")
    return MeasurementMatrix(entries=data.reshape(p, q).astype(float),
                             trial_id=trial_id, seed=seed)


def save_matrix(m: MeasurementMatrix, path):
    path = Path(path)
    if path.suffix == ".csv":
        save_matrix_csv(m, path)
    else:
        save_matrix_binary(m, path)


def load_matrix(path, trial_id=0, seed=0) -> MeasurementMatrix:
    path = Path(path)
    if path.suffix == ".csv":
        return load_matrix_csv(path, trial_id, seed)
    return load_matrix_binary(path, trial_id, seed)


def process_from_dict(spec: dict) -> GenerativeProcess:
    kind = spec.get("kind")
    if kind is None:
        raise KeyError("process spec missing 'kind'")
    d = int(spec.get("d", 1))
    return GenerativeProcess(
        kind=str(kind).lower(),
        d=d,
        sigma_x=spec.get("sigma_x", 1.0),
        sigma=spec.get("sigma", 1.0),
        scale=float(spec.get("scale", 1.0)),
    )


def noise_from_dict(spec: dict | None) -> NoiseModel:
    if not spec:
        return NoiseModel()
    return NoiseModel(
        kind=str(spec.get("kind", "none")).lower(),
        sigma_noise=float(spec.get("sigma_noise", 0.0)),
        trials=int(spec.get("trials", 1)),
    )


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save_moments_csv(seqs: list[MomentSequence], path):
    """One row per (estimator, n): columns estimator, n, value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator", "n", "value"])
        for seq in seqs:
            for n in sorted(seq.values):
                writer.writerow([seq.estimator, n, repr(seq.values[n])])


def load_moments_csv(path) -> list[MomentSequence]:
    grouped: dict[str, dict[int, float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            grouped.setdefault(row["estimator"], {})[int(row["n"])] = \
                float(row["value"])
    return [MomentSequence(vals, name, max(vals))
            for name, vals in grouped.items()]


def save_moments_json(seqs: list[MomentSequence], path, dims=None, seed=None,
                      wall_times=None, extra=None):
    """CSV fields plus matrix dims, seed, and per-estimator wall time."""
    records = []
    for seq in seqs:
        rec = {
            "estimator": seq.estimator,
            "values": {str(n): seq.values[n] for n in sorted(seq.values)},
            "n_max": seq.n_max,
            "dims": list(dims) if dims is not None else
                    [seq.meta.get("p"), seq.meta.get("q")],
            "seed": seed if seed is not None else seq.meta.get("seed"),
            "wall_time_s": (wall_times or {}).get(seq.estimator),
        }
        records.append(rec)
    doc = {"moments": records}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_moments_json(path) -> list[MomentSequence]:
    with open(path) as fh:
        doc = json.load(fh)
    out = []
    for rec in doc["moments"]:
        values = {int(n): float(v) for n, v in rec["values"].items()}
        meta = {"dims": rec.get("dims"), "seed": rec.get("seed"),
                "wall_time_s": rec.get("wall_time_s")}
        out.append(MomentSequence(values, rec["estimator"],
                                  rec.get("n_max", max(values)), meta=meta))
    return out
