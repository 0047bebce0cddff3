"""Newton corrector and pseudo-arclength continuation of solution branches.

Branches are traced in a scalar parameter (``f1`` by default, or ``zeta``).
Distances in the extended space (u, lambda) use the scaled inner product

    <(x, a), (y, b)> = x.y / n + a b,

so the state part measures ||u||_2^2 / (2 pi) independently of the grid size.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import BarycentricInterpolator
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, eigsh, splu

from .discretize import jacobian, pack, param_derivative, residual_vec, unpack
from .model import Params, apply_R, check_field
from .trivial import solve_constants

log = logging.getLogger(__name__)

FOLD = "FoldDetected"
F1_ZERO = "F1ZeroCrossing"
LOOP = "LoopClosed"


class NewtonFailure(RuntimeError):
    pass


class NonConvergence(NewtonFailure):
    pass


class SingularJacobian(NewtonFailure):
    pass


@dataclass(frozen=True)
class NewtonSettings:
    tol_residual: float = 1e-10
    max_iter: int = 25
    damping: float = 0.5
    min_step: float = 2.0**-10

    def __post_init__(self):
        if self.tol_residual <= 0 or self.max_iter < 1:
            raise ValueError("tol_residual must be positive and max_iter >= 1")


@dataclass(frozen=True)
class ContinuationSettings:
    param: str = "f1"
    ds0: float = 0.01
    ds_min: float = 1e-5
    ds_max: float = 0.1
    max_steps: int = 5000
    loop_tol: float = 1e-6
    param_min: float = -2.0
    param_max: float = 2.0
    direction: int = 1
    two_sided: bool = True
    corrector_max_iter: int = 10
    growth: float = 1.3
    min_cos: float = 0.95
    track_min_sv: bool = True
    newton: NewtonSettings = field(default_factory=NewtonSettings)

    def __post_init__(self):
        if not 0 < self.ds_min <= self.ds0 <= self.ds_max:
            raise ValueError("need 0 < ds_min <= ds0 <= ds_max")
        if self.param not in ("f1", "zeta"):
            raise ValueError(f"cannot continue in {self.param!r}")


@dataclass
class BranchPoint:
    param_value: float
    u: np.ndarray
    zeta: float
    f1: float
    norm_sq_over_2pi: float
    arclength: float = 0.0
    min_sv: float = float("nan")
    events: frozenset = frozenset()


@dataclass
class Branch:
    points: list
    params: Params
    param_name: str
    closed: bool = False
    provenance: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def param_values(self) -> np.ndarray:
        return np.array([pt.param_value for pt in self.points])

    @property
    def norms(self) -> np.ndarray:
        return np.array([pt.norm_sq_over_2pi for pt in self.points])

    def crossings(self) -> list:
        return [pt for pt in self.points if F1_ZERO in pt.events]

    def folds(self) -> list:
        return [pt for pt in self.points if FOLD in pt.events]


class NewtonResult(NamedTuple):
    u: np.ndarray
    iterations: int
    residual: float


def _factorize(A: sp.spmatrix):
    A = sp.csc_matrix(A)
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise SingularJacobian(str(exc)) from None
    scale = abs(A).sum(axis=1).max()
    if np.min(np.abs(lu.U.diagonal())) < 1e-14 * scale:
        raise SingularJacobian("LU pivot below 1e-14 * ||J||")
    return lu


def smallest_singular_value(J: sp.spmatrix) -> float:
    """Smallest singular value via Lanczos on (J^T J)^{-1}."""
    try:
        lu = splu(sp.csc_matrix(J))
    except RuntimeError:
        return 0.0
    m = J.shape[0]
    op = LinearOperator((m, m), matvec=lambda v: lu.solve(lu.solve(np.ravel(v), trans="T")), dtype=float)
    try:
        lam = eigsh(op, k=1, which="LM", v0=np.ones(m), tol=1e-8, return_eigenvectors=False)[0]
    except Exception:
        return float(np.linalg.svd(J.toarray(), compute_uv=False)[-1])
    if not np.isfinite(lam) or lam <= 0:
        return 0.0
    return float(1.0 / np.sqrt(lam))


def newton_solve(p: Params, u_init: np.ndarray, settings: NewtonSettings = NewtonSettings()) -> NewtonResult:
    """Damped Newton for the discretized profile equation at fixed parameters."""
    u = check_field(u_init).copy()
    n = u.size
    tol = settings.tol_residual * np.sqrt(n)
    r = residual_vec(p, u)
    rn = np.linalg.norm(r)
    for it in range(settings.max_iter + 1):
        if rn <= tol:
            return NewtonResult(u, it, float(rn))
        if it == settings.max_iter:
            break
        delta = unpack(_factorize(jacobian(p, u)).solve(-r))
        lam = 1.0
        while True:
            trial = u + lam * delta
            r_trial = residual_vec(p, trial)
            rn_trial = np.linalg.norm(r_trial)
            if rn_trial < (1.0 - 1e-4 * lam) * rn or lam <= settings.min_step:
                break
            lam *= settings.damping
        u, r, rn = trial, r_trial, rn_trial
    raise NonConvergence(f"no convergence in {settings.max_iter} iterations (|F| = {rn:.3e})")


def make_point(p: Params, u: np.ndarray, name: str = "f1", arclength: float = 0.0,
               min_sv: Optional[float] = None, events=()) -> BranchPoint:
    u = np.asarray(u, dtype=complex)
    if min_sv is None:
        min_sv = smallest_singular_value(jacobian(p, u))
    return BranchPoint(
        param_value=float(getattr(p, name)),
        u=u,
        zeta=float(p.zeta),
        f1=float(p.f1),
        norm_sq_over_2pi=float(np.mean(np.abs(u) ** 2)),
        arclength=arclength,
        min_sv=min_sv,
        events=frozenset(events),
    )


class _Extended:
    """H(x, lam) = residual of the packed state with parameter ``name`` = lam."""

    def __init__(self, p: Params, name: str, n: int):
        self.p, self.name, self.n = p, name, n
        self.w = np.full(2 * n + 1, 1.0 / n)
        self.w[-1] = 1.0

    def params(self, lam: float) -> Params:
        return replace(self.p, **{self.name: float(lam)})

    def H(self, y):
        return residual_vec(self.params(y[-1]), unpack(y[:-1]))

    def J(self, y):
        return jacobian(self.params(y[-1]), unpack(y[:-1]))

    def dlam(self, y):
        return param_derivative(self.params(y[-1]), unpack(y[:-1]), self.name)

    def dot(self, a, b) -> float:
        return float(np.dot(self.w * a, b))

    def norm(self, a) -> float:
        return float(np.sqrt(self.dot(a, a)))

    def bordered(self, y, row):
        return sp.bmat([[self.J(y), self.dlam(y)[:, None]],
                        [row[None, :-1], np.array([[row[-1]]])]], format="csc")

    def tangent(self, y, t_prev):
        rhs = np.zeros(y.size)
        rhs[-1] = 1.0
        z = _factorize(self.bordered(y, self.w * t_prev)).solve(rhs)
        return z / self.norm(z)

    def initial_tangent(self, y, direction: int):
        e = np.zeros(y.size)
        e[-1] = 1.0
        try:
            t = self.tangent(y, e)
        except SingularJacobian:
            A = np.hstack([self.J(y).toarray(), self.dlam(y)[:, None]])
            _, s, vt = np.linalg.svd(A)
            null = vt[np.abs(np.r_[s, np.zeros(vt.shape[0] - s.size)]) < 1e-8 * s[0]]
            if null.size == 0:
                null = vt[-1:]
            t = null.T @ (null @ e)
            if np.linalg.norm(t) < 1e-12:
                t = vt[-1]
            t = t / self.norm(t)
            if t[-1] < 0:
                t = -t
        return direction * t

    def correct(self, y_pred, t, tol, max_iter):
        y = y_pred.copy()
        row = self.w * t
        for it in range(max_iter + 1):
            H = self.H(y)
            g = self.dot(t, y - y_pred)
            if np.linalg.norm(H) <= tol and abs(g) <= 1e-12:
                return y, it
            if it == max_iter:
                break
            y = y + _factorize(self.bordered(y, row)).solve(-np.r_[H, g])
        raise NonConvergence("corrector did not converge")


def _start_vector(start) -> tuple[np.ndarray, float]:
    return np.r_[pack(start.u), start.param_value]


def trace_branch(p: Params, start, settings: ContinuationSettings = ContinuationSettings(),
                 start_tangent: Optional[np.ndarray] = None) -> Branch:
    """Pseudo-arclength continuation from ``start`` (a BranchPoint or field).

    The trace stops when the branch returns to the start (``closed``), leaves
    ``[param_min, param_max]``, or after ``max_steps``.  With ``two_sided`` an
    unclosed branch is traced in the opposite direction as well; points are
    ordered from one end to the other with signed arclength.
    """
    name = settings.param
    if not isinstance(start, BranchPoint):
        start = make_point(p, start, name)
    # a start point may have been made for the other parameter
    start = replace(start, param_value=getattr(start, name))
    p = replace(p, **{name: start.param_value})
    n = start.u.size
    ext = _Extended(p, name, n)
    y0 = _start_vector(start)
    t0 = start_tangent if start_tangent is not None else ext.initial_tangent(y0, settings.direction)
    t0 = t0 / ext.norm(t0)
    start = replace(start, events=frozenset(start.events))

    fwd, closed, diag = _trace_one_side(ext, y0, t0, start, settings)
    branch = Branch(points=fwd, params=p, param_name=name, closed=closed,
                    provenance={"start_param": start.param_value, "zeta": p.zeta,
                                "start_norm_sq_over_2pi": start.norm_sq_over_2pi},
                    diagnostics=diag)
    if closed or not settings.two_sided:
        return branch
    bwd, closed_b, diag_b = _trace_one_side(ext, y0, -t0, start, settings)
    for pt in bwd:
        pt.arclength = -pt.arclength
    branch.points = bwd[::-1][:-1] + fwd
    branch.closed = closed_b
    branch.diagnostics += diag_b
    return branch


def _trace_one_side(ext: _Extended, y0, t0, start: BranchPoint, cfg: ContinuationSettings):
    n = ext.n
    tol = cfg.newton.tol_residual * np.sqrt(n)
    target = start.param_value
    crossing_targets = sorted({0.0, target}) if ext.name == "f1" else [target]

    points = [start]
    diagnostics = []
    y, t = y0.copy(), t0.copy()
    ds, s_total = cfg.ds0, 0.0
    closed = False

    def corrected(s, y_base, t_base):
        return ext.correct(y_base + s * t_base, t_base, tol, cfg.corrector_max_iter)[0]

    def point_from(y_pt, s_abs, events):
        p_pt = ext.params(y_pt[-1])
        u_pt = unpack(y_pt[:-1])
        min_sv = smallest_singular_value(ext.J(y_pt)) if cfg.track_min_sv else float("nan")
        return make_point(p_pt, u_pt, ext.name, s_abs, min_sv, events)

    steps = 0
    while steps < cfg.max_steps:
        if ds < cfg.ds_min:
            diagnostics.append(f"corrector failure at ds_min after {steps} steps "
                               f"({ext.name}={y[-1]:.6g})")
            break
        try:
            y_new, iters = ext.correct(y + ds * t, t, tol, cfg.corrector_max_iter)
            t_new = ext.tangent(y_new, t)
        except NewtonFailure:
            ds *= 0.5
            continue
        if ext.dot(t, t_new) < cfg.min_cos or ext.norm(y_new - y) > 2.0 * ds:
            ds *= 0.5
            continue
        steps += 1

        extra = []  # (s, y, events)
        if t[-1] * t_new[-1] < 0:
            try:
                s_f = brentq(lambda s: ext.tangent(corrected(s, y, t), t)[-1], 0.0, ds, xtol=1e-13)
                extra.append((s_f, corrected(s_f, y, t), {FOLD}))
            except (ValueError, NewtonFailure):
                extra.append((ds, None, {FOLD}))
        for c in crossing_targets:
            a, b = y[-1] - c, y_new[-1] - c
            if a == 0 or a * b > 0:
                continue
            if b == 0:
                s_c, y_c = ds, y_new
            else:
                try:
                    s_c, y_c = _refine_level(ext, corrected, y, t, ds, c, tol)
                except (ValueError, NewtonFailure):
                    diagnostics.append(f"crossing refinement failed near {ext.name}={c}")
                    continue
            ev = {F1_ZERO} if (ext.name == "f1" and c == 0.0) else set()
            is_return = (c == target and s_total + s_c > 10 * cfg.ds0
                         and ext.norm(y_c - y0) < cfg.loop_tol)
            if is_return:
                ev.add(LOOP)
            extra.append((s_c, y_c, ev))

        extra.sort(key=lambda item: item[0])
        new_events: set = set()
        for s_e, y_e, ev in extra:
            if y_e is None or s_e >= ds:
                new_events |= ev
                continue
            points.append(point_from(y_e, s_total + s_e, ev))
            if LOOP in ev:
                closed = True
                break
        if closed:
            break
        s_total += ds
        points.append(point_from(y_new, s_total, new_events))
        if LOOP in new_events:
            closed = True
            break
        y, t = y_new, t_new
        if iters <= 3:
            ds = min(ds * cfg.growth, cfg.ds_max)
        if not cfg.param_min <= y[-1] <= cfg.param_max:
            break
    else:
        diagnostics.append(f"stopped after max_steps={cfg.max_steps}")
    return points, closed, diagnostics


def _refine_level(ext: _Extended, corrected, y, t, ds, c, tol, nodes=9, max_iter=20):
    """Arclength s in (0, ds) and the state where the corrected parameter equals ``c``.

    At a nonconstant solution the level set of the parameter contains the whole
    circle of shifts, so the corrector hyperplane through the crossing is
    singular and corrected points close to it may slide along the circle.  The
    crossing is therefore located from an interpolant through corrected points
    away from it, then polished at the fixed level with the shift pinned.
    """
    ts = 0.5 * ds * (1 - np.cos(np.pi * np.arange(nodes) / (nodes - 1)))
    keep_t, keep_y = [0.0], [y]
    for s in ts[1:]:
        try:
            keep_y.append(corrected(s, y, t))
            keep_t.append(s)
        except NewtonFailure:
            pass
    f = np.array([v[-1] - c for v in keep_y])
    if keep_t[-1] != ds or f[0] * f[-1] >= 0:
        raise ValueError("level not bracketed")
    # points that landed next to the level may have slid off the branch
    ok = np.abs(f) > 1e-6 * max(abs(f[0]), abs(f[-1]))
    ok[[0, -1]] = True
    tk, yk = np.array(keep_t)[ok], np.array(keep_y)[ok]
    level = BarycentricInterpolator(tk, f[ok], random_state=0)
    s_c = brentq(level, 0.0, ds, xtol=1e-14)
    y_c = BarycentricInterpolator(tk, yk, random_state=0)(s_c)
    y_c[-1] = c
    return s_c, _polish(ext, y_c, tol, max_iter)


def _polish(ext: _Extended, y0, tol, max_iter):
    """Newton at the fixed parameter value, shift pinned by a phase condition."""
    lam, x0 = y0[-1], y0[:-1].copy()
    u0 = unpack(x0)
    du = (np.roll(u0, -1) - np.roll(u0, 1)) * (u0.size / (4 * np.pi))
    v = pack(du)
    pinned = np.linalg.norm(v) > 1e-8 * np.sqrt(u0.size)
    p = ext.params(lam)
    x = x0.copy()
    for _ in range(max_iter + 1):
        H = residual_vec(p, unpack(x))
        if np.linalg.norm(H) <= tol:
            if ext.norm(np.r_[x - x0, 0.0]) > 1e-3:
                raise ValueError("polished crossing left the branch")
            return np.r_[x, lam]
        J = jacobian(p, unpack(x))
        if pinned:
            A = sp.bmat([[J, v[:, None]], [v[None, :], None]], format="csc")
            x = x + _factorize(A).solve(-np.r_[H, np.dot(v, x - x0)])[:-1]
        else:
            x = x + _factorize(J.tocsc()).solve(-H)
    raise NonConvergence("crossing polish did not converge")


def trivial_start(p: Params, n: int, which: int = 0, name: str = "f1") -> BranchPoint:
    """BranchPoint at the ``which``-th constant solution (sorted by |u0|^2) of ``p`` with f1 = 0."""
    pts = solve_constants(p.zeta, p.f0)
    u = np.full(n, pts[which].u0, dtype=complex)
    return make_point(replace(p, f1=0.0), u, name)


def mirror_branch(b: Branch, p: Optional[Params] = None) -> Branch:
    """Image of a branch under (f1, u) -> (-f1, u(. + pi/k1)).

    ``p`` defaults to the branch's own parameters (its forcing decides whether
    the reflection is admissible).
    """
    p = b.params if p is None else p
    pts = []
    for pt in b.points:
        f1, u = apply_R(p, pt.f1, pt.u)
        pv = f1 if b.param_name == "f1" else pt.param_value
        pts.append(replace(pt, u=u, f1=f1, param_value=pv))
    p_m = p if b.param_name == "f1" else replace(p, f1=-p.f1)
    return Branch(points=pts, params=p_m, param_name=b.param_name, closed=b.closed,
                  provenance={**b.provenance, "mirrored": not b.provenance.get("mirrored", False)},
                  diagnostics=list(b.diagnostics))


def _passes_through(b: Branch, u: np.ndarray, tol: float) -> bool:
    for pt in b.crossings() + b.points[:1]:
        if abs(pt.f1) < 1e-8 and np.sqrt(np.mean(np.abs(pt.u - u) ** 2)) < tol:
            return True
    return False


def branches_at_zeta(p_template: Params, zeta: float, n: int, settings: ContinuationSettings,
                     failures: Optional[list] = None) -> list:
    p = replace(p_template, zeta=float(zeta), f1=0.0)
    branches: list = []
    for i, tp in enumerate(solve_constants(p.zeta, p.f0)):
        u = np.full(n, tp.u0, dtype=complex)
        if any(_passes_through(b, u, max(settings.loop_tol, 1e-6)) for b in branches):
            continue
        try:
            b = trace_branch(p, make_point(p, u, settings.param), settings)
        except NewtonFailure as exc:
            log.warning("zeta=%g start %d failed: %s", zeta, i, exc)
            if failures is not None:
                failures.append({"zeta": float(zeta), "start": i, "error": str(exc)})
            continue
        b.provenance.update(start_index=i, start_rho=tp.rho)
        if failures is not None:
            failures.extend({"zeta": float(zeta), "start": i, "diagnostic": d} for d in b.diagnostics)
        branches.append(b)
    return branches


def _sweep_job(args):
    p_template, zeta, n, settings = args
    failures: list = []
    return zeta, branches_at_zeta(p_template, zeta, n, settings, failures), failures


def sweep_zeta(p_template: Params, zeta_list: Sequence[float], n: int,
               settings: ContinuationSettings = ContinuationSettings(), threads: int = 1,
               failures: Optional[list] = None) -> list:
    """Trace the branches through every constant solution for each detuning.

    Independent detunings run in a process pool when ``threads > 1``; results
    are sorted by zeta.  Per-branch problems are appended to ``failures``.
    """
    jobs = [(p_template, float(z), n, settings) for z in zeta_list]
    if not jobs:
        return []
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    if failures is not None:
        for _, _, f in results:
            failures.extend(f)
    return [b for _, bs, _ in results for b in bs]
