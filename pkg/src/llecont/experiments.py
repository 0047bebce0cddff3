"""Branch classification and the numerical studies built on continuation.

These functions combine continuation, bifurcation analysis and the trivial
solutions into the experiments behind the command-line runner.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bifurcation import bifurcation_report, estimate_shift, smallest_period, symmetric_reference
from .continuation import Branch, ContinuationSettings, trace_branch, trivial_start
from .model import Params
from .trivial import solve_constants

LOWER, UPPER = "lower", "upper"


class ThresholdError(RuntimeError):
    pass


def is_constant(u: np.ndarray, tol: float = 1e-6) -> bool:
    return float(np.max(np.abs(u - u.mean()))) < tol


def constant_crossings(b: Branch, rho_tol: float = 1e-4) -> list:
    """Indices (into solve_constants order) of the constant solutions the branch meets at f1 = 0."""
    tps = solve_constants(b.params.zeta, b.params.f0)
    hit = []
    for pt in [b.points[0]] + b.crossings():
        if abs(pt.f1) > 1e-8 or not is_constant(pt.u):
            continue
        rho = float(np.mean(np.abs(pt.u) ** 2))
        for i, tp in enumerate(tps):
            if abs(rho - tp.rho) < rho_tol and i not in hit:
                hit.append(i)
    return sorted(hit)


def nonconstant_crossings(b: Branch) -> list:
    return [pt for pt in b.crossings() if not is_constant(pt.u)]


def loop_partner(p: Params, n: int, settings: ContinuationSettings = ContinuationSettings(track_min_sv=False)):
    """Which pair of constant solutions the loop through the middle one connects.

    Returns ``"lower"`` or ``"upper"`` and the traced branch; ``None`` if the
    middle solution does not lie on a loop meeting another constant solution.
    """
    tps = solve_constants(p.zeta, p.f0)
    if len(tps) != 3:
        raise ThresholdError(f"zeta={p.zeta}: {len(tps)} constant solutions, need 3")
    b = trace_branch(p.with_(f1=0.0), trivial_start(p, n, 1), settings)
    hits = constant_crossings(b)
    if not b.closed:
        return None, b
    if 0 in hits and 2 not in hits:
        return LOWER, b
    if 2 in hits and 0 not in hits:
        return UPPER, b
    return None, b


@dataclass
class ThresholdResult:
    lo: float
    hi: float
    history: list = field(default_factory=list)  # (zeta, label)
    branches: list = field(default_factory=list)  # the loops traced for each history entry


def locate_threshold(p: Params, lo: float, hi: float, width: float, n: int,
                     settings: ContinuationSettings = ContinuationSettings(track_min_sv=False)) -> ThresholdResult:
    """Bisect on zeta for the switch of the loop from the lower to the upper pair."""
    if lo > hi:
        raise ValueError("bracket must satisfy lo <= hi")
    if lo == hi:
        return ThresholdResult(lo, hi)
    hist, traced = [], []

    def pred(z):
        label, b = loop_partner(p.with_(zeta=z), n, settings)
        hist.append((z, label))
        traced.append(b)
        if label is None:
            raise ThresholdError(f"no loop between constant solutions at zeta={z}")
        return label

    a, b = pred(lo), pred(hi)
    if a == b:
        raise ThresholdError(f"loop connects the {a} pair at both ends of [{lo}, {hi}]")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if pred(mid) == a:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(lo, hi, hist, traced)


@dataclass
class FigureEight:
    branches: list
    crossings: list  # nonconstant f1 = 0 points, one per distinct shift
    reference: Optional[np.ndarray]
    shifts: list
    period_index: Optional[int]
    report: object = None


def distinct_points(points: list, tol: float = 1e-3) -> list:
    """One representative per f1 = 0 solution (the same crossing may be reached twice)."""
    out = []
    for pt in points:
        if not any(np.sqrt(np.mean(np.abs(pt.u - q.u) ** 2)) < tol for q in out):
            out.append(pt)
    return out


def figure_eight(p: Params, n: int, settings: ContinuationSettings = ContinuationSettings(track_min_sv=False),
                 starts=(1, 2)) -> FigureEight:
    """Trace from the given constant solutions and analyze the nonconstant f1 = 0 crossings."""
    p = p.with_(f1=0.0)
    branches, pts = [], []
    for i in starts:
        b = trace_branch(p, trivial_start(p, n, i), settings)
        branches.append(b)
        pts += nonconstant_crossings(b)
    pts = distinct_points(pts)
    if not pts:
        return FigureEight(branches, [], None, [], None)
    if p.omega == 0:
        ref, _ = symmetric_reference(p, pts[0].u)
    else:
        ref = pts[0].u
    shifts = [estimate_shift(pt.u, ref) for pt in pts]
    rep = bifurcation_report(p, ref)
    return FigureEight(branches, pts, ref, shifts, smallest_period(pts[0].u), rep)


def circular_distance(a: float, b: float, period: float = 2 * np.pi) -> float:
    d = (a - b) % period
    return min(d, period - d)
