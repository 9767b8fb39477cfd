"""JSON Lines dataset serialization for samples, gains, and predictions.

The first line of every artifact is a header embedding the producing
configuration, its hash, and the tool version; sample records carry
run-length-encoded grids.
"""

import hashlib
import json

import numpy as np

from . import __version__
from .sensor import OccupancyGrid, Sample


def rle_encode(labels):
    """Row-major [label, run] pairs."""
    flat = np.asarray(labels).ravel()
    if flat.size == 0:
        return []
    change = np.nonzero(np.diff(flat))[0] + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [flat.size]])
    return [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)]


def rle_decode(runs, shape):
    out = np.empty(int(np.prod(shape)), dtype=np.int8)
    pos = 0
    for label, run in runs:
        out[pos : pos + run] = label
        pos += run
    if pos != out.size:
        raise ValueError(f"RLE covers {pos} cells, grid has {out.size}")
    return out.reshape(shape)


def config_hash(config):
    blob = json.dumps(config, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def header_record(config, kind):
    config = dict(config)
    return {
        "header": kind,
        "version": __version__,
        "config": config,
        "config_hash": config_hash(config),
    }


def sample_id(plan_id, traj_index, step_index):
    return f"{plan_id}:{traj_index}:{step_index}"


def sample_to_record(sample, traj_index):
    grid = sample.grid
    return {
        "id": sample_id(sample.plan_id, traj_index, sample.step_index),
        "plan_id": sample.plan_id,
        "traj": int(traj_index),
        "step": int(sample.step_index),
        "alpha_deg": round(float(sample.alpha_deg), 9),
        "grid": {
            "h": grid.labels.shape[0],
            "w": grid.labels.shape[1],
            "scale": grid.scale,
            "rle": rle_encode(grid.labels),
        },
        "visible_segments": np.round(sample.visible_segments, 9).tolist(),
        "target_segments": np.round(sample.target_segments, 9).tolist(),
        "trajectory": np.round(sample.trajectory, 9).tolist(),
        "pose": np.round(sample.pose, 9).tolist(),
    }


def record_to_sample(rec):
    g = rec["grid"]
    labels = rle_decode(g["rle"], (g["h"], g["w"]))
    grid = OccupancyGrid(
        labels=labels,
        area=g["h"] / g["scale"],
        center=np.asarray(rec["pose"], dtype=np.float64),
        alignment=np.radians(rec["alpha_deg"]),
    )
    return Sample(
        grid=grid,
        visible_segments=np.asarray(rec["visible_segments"], dtype=np.float64).reshape(-1, 4),
        target_segments=np.asarray(rec["target_segments"], dtype=np.float64).reshape(-1, 4),
        trajectory=np.asarray(rec["trajectory"], dtype=np.float64).reshape(-1, 2),
        plan_id=rec["plan_id"],
        step_index=int(rec["step"]),
        pose=np.asarray(rec["pose"], dtype=np.float64),
        alpha_deg=float(rec["alpha_deg"]),
    )


def write_jsonl(path, header, records):
    with open(path, "w") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path):
    """Returns (header or None, records)."""
    header = None
    records = []
    with open(path) as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if i == 0 and isinstance(rec, dict) and "header" in rec:
                header = rec
            else:
                records.append(rec)
    return header, records


def read_dataset(path):
    header, records = read_jsonl(path)
    return header, [(rec["id"], record_to_sample(rec)) for rec in records]
