"""CSV and JSON output for branches, fields and reports.

Floats are written with ``repr`` (shortest round-trip form) so reruns are
byte-identical.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

BRANCH_FIELDS = ("branch_id", "step", "param_name", "param_value", "zeta",
                 "norm_sq_over_2pi", "arclength", "min_sv", "events")


def fmt(x) -> str:
    return repr(float(x))


def write_branches_csv(branches, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BRANCH_FIELDS)
        for bid, b in enumerate(branches):
            for step, pt in enumerate(b.points):
                w.writerow([bid, step, b.param_name, fmt(pt.param_value), fmt(pt.zeta),
                            fmt(pt.norm_sq_over_2pi), fmt(pt.arclength), fmt(pt.min_sv),
                            ";".join(sorted(pt.events))])


def read_branches_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["branch_id"] = int(r["branch_id"])
        r["step"] = int(r["step"])
        for k in ("param_value", "zeta", "norm_sq_over_2pi", "arclength", "min_sv"):
            r[k] = float(r[k])
        r["events"] = set(filter(None, r["events"].split(";")))
    return rows


def field_to_json(u: np.ndarray, params: dict, **meta) -> str:
    u = np.asarray(u, dtype=complex)
    doc = {"n": int(u.size), "params": params, **meta,
           "values": [[float(z.real), float(z.imag)] for z in u]}
    return json.dumps(doc)


def field_from_json(text: str) -> tuple[np.ndarray, dict]:
    doc = json.loads(text)
    v = np.array(doc.pop("values"), dtype=float)
    return v[:, 0] + 1j * v[:, 1], doc


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n")


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
