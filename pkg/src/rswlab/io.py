"""CSV / JSON persistence for trajectories, snapshots, and run records.

Every CSV starts with a versioned comment line so column layouts stay
stable; every emitted file is re-parseable by this module.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .model import MomentSet, PlanarState, RadialState, RunRecord

CSV_VERSION = "rswlab-csv v1"


def write_trajectory_csv(path, traj):
    """Columns: t, g, xi, eta, theta, kappa_drift."""
    path = Path(path)
    kd = traj.kappa_drift if traj.kappa_drift is not None else np.zeros_like(traj.t)
    with path.open("w", newline="") as fh:
        fh.write("# %s trajectory\n" % CSV_VERSION)
        w = csv.writer(fh)
        w.writerow(["t", "g", "xi", "eta", "theta", "kappa_drift"])
        for row in zip(traj.t, traj.g, traj.xi, traj.eta, traj.theta, kd):
            w.writerow(["%.17g" % v for v in row])


def write_phase_portrait_csv(path, traj):
    """State-space samples of one orbit; columns: xi, eta, theta."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("# %s phase-portrait\n" % CSV_VERSION)
        w = csv.writer(fh)
        w.writerow(["xi", "eta", "theta"])
        for row in zip(traj.xi, traj.eta, traj.theta):
            w.writerow(["%.17g" % v for v in row])


def read_csv(path):
    """Read a versioned CSV into a dict of float column arrays."""
    path = Path(path)
    with path.open() as fh:
        header_comment = fh.readline()
        if not header_comment.startswith("#"):
            raise ValueError("missing version comment line in %s" % path)
        reader = csv.reader(fh)
        names = next(reader)
        cols = {n: [] for n in names}
        for row in reader:
            for n, v in zip(names, row):
                cols[n].append(float(v))
    return {n: np.array(v) for n, v in cols.items()}


def write_radial_snapshot(path, state: RadialState):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("# %s radial-snapshot t=%.17g h_bar=%.17g\n"
                 % (CSV_VERSION, state.t, state.h_bar))
        w = csv.writer(fh)
        w.writerow(["r", "h", "U", "V"])
        for row in zip(state.r, state.h, state.U, state.V):
            w.writerow(["%.17g" % v for v in row])


def write_planar_snapshot(path, state: PlanarState):
    X, Y = state.grid.centers()
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("# %s planar-snapshot t=%.17g h_bar=%.17g\n"
                 % (CSV_VERSION, state.t, state.h_bar))
        w = csv.writer(fh)
        w.writerow(["x", "y", "h", "hu", "hv"])
        for x, y, h, hu, hv in zip(X.ravel(), Y.ravel(), state.h.ravel(),
                                   state.hu.ravel(), state.hv.ravel()):
            w.writerow(["%.17g" % v for v in (x, y, h, hu, hv)])


def _row_to_json(row) -> dict:
    out = dict(row)
    ms = out["moments"]
    if isinstance(ms, MomentSet):
        out["moments"] = asdict(ms)
    return out


def write_record_jsonl(path, record: RunRecord):
    path = Path(path)
    with path.open("w") as fh:
        for row in record.rows:
            fh.write(json.dumps(_row_to_json(row), sort_keys=True) + "\n")


def read_record_jsonl(path):
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                d = json.loads(line)
                d["moments"] = MomentSet(**d["moments"])
                rows.append(d)
    return rows


def write_json(path, payload: dict):
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True))


def read_json(path):
    return json.loads(Path(path).read_text())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
