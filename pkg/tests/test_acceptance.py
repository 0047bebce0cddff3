"""Acceptance suite: one PASS/FAIL line per criterion, with runtime.

Run on its own with

    python3 -m pytest tests/test_acceptance.py -v

The lines are written straight to the terminal (pytest capture is bypassed)
and repeated in a summary at the end of the module.
"""
import time

import numpy as np
import pytest

from llecont.bifurcation import (analyze_linearization, kernel_alignment, parity_periodicity_check,
                                 smallest_period)
from llecont.bounds import distinct_solutions, multistart_solutions, uniqueness_classify, verify_bounds
from llecont.continuation import ContinuationSettings, mirror_branch, trace_branch, trivial_start
from llecont.discretize import DerivativeScheme, jacobian, pack, residual_vec
from llecont.experiments import (circular_distance, constant_crossings, figure_eight, is_constant,
                                 locate_threshold, loop_partner)
from llecont.model import Params, Sampled, grid
from llecont.response import second_derivative_vs_numeric, sign_changes
from llecont.trivial import FSTAR, param_point, solve_constants, turning_points, turning_quadratic

D, F0, K1 = -0.1, 2.0, 1
N = 256
TOL = 1e-10  # Newton tolerance, packed 2-norm scaled by sqrt(n)
SETTINGS = ContinuationSettings(track_min_sv=False)

RESULTS = {}


def report(request, num, title, checks, elapsed, limit):
    """Print the criterion line and fail the test if any check (or the time limit) fails."""
    checks = dict(checks)
    if limit is not None:
        checks[f"runtime < {limit:g} s"] = elapsed < limit
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'} ({elapsed:7.2f} s) {title}"
    if failed:
        line += "  failed: " + "; ".join(failed)
    RESULTS[num] = line
    capman = request.config.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print("\n" + line)
    assert ok, line


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    capman = request.config.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print("\nacceptance summary")
        for k in sorted(RESULTS):
            print("  " + RESULTS[k])


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def study(zeta, omega=1.0):
    return Params(d=D, zeta=zeta, omega=omega, f0=F0, k1=K1)


def trivial_residual(tp):
    return abs((tp.zeta - 1j) * tp.u0 - tp.rho * tp.u0 + 1j * tp.f0)


# -- shared continuation runs (timed once, attributed to their own criterion) ---------

@pytest.fixture(scope="module")
def topology():
    def run():
        out = {}
        p = study(2.4)
        out[2.4] = trace_branch(p, trivial_start(p, N, 0), SETTINGS)
        for z in (3.0, 4.0):
            out[z] = loop_partner(study(z), N, SETTINGS)
        return out
    return timed(run)


@pytest.fixture(scope="module")
def threshold():
    return timed(lambda: locate_threshold(study(3.0), 3.0, 3.3, 0.02, N, SETTINGS))


@pytest.fixture(scope="module")
def eight():
    return timed(lambda: figure_eight(study(3.9, omega=0.0), N, SETTINGS, starts=(1, 2)))


# -- criteria -------------------------------------------------------------------------

def test_01_parametrization(request):
    def run():
        worst = 0.0
        for f0 in (1.0, FSTAR, 2.0):
            for t in np.linspace(-0.999, 0.999, 500):
                worst = max(worst, trivial_residual(param_point(float(t), f0)))
        return worst
    worst, el = timed(run)
    report(request, 1, "parametrization identity", {f"max residual {worst:.1e} < 1e-12": worst < 1e-12}, el, 1)


def test_02_turning_points(request):
    def run():
        reps = [turning_points(f0) for f0 in (1.0, FSTAR, 2.0)]
        quad = max((abs(turning_quadratic(z, r)) for rep in reps for _, z, r in rep.points), default=0.0)
        return [rep.count for rep in reps], quad
    (counts, quad), el = timed(run)
    report(request, 2, "turning-point counts",
           {f"counts {counts} == [0, 1, 2]": counts == [0, 1, 2], f"quadratic {quad:.1e} < 1e-10": quad < 1e-10},
           el, 1)


def test_03_cubic_consistency(request):
    def run():
        bad_res, bad_count = 0, 0
        for f0 in np.linspace(0.5, 2.5, 100):
            tp = turning_points(f0)
            zs = sorted(z for _, z, _ in tp.points)
            for zeta in np.linspace(-1, 5, 100):
                pts = solve_constants(zeta, f0)
                bad_res += sum(trivial_residual(q) >= 1e-12 * max(1, abs(f0)) for q in pts)
                if len(zs) == 2 and zs[0] < zeta < zs[1]:
                    expected = 3
                elif len(zs) == 2 and zeta in zs:
                    continue
                else:
                    expected = 1
                bad_count += len(pts) != expected
        return bad_res, bad_count
    (bad_res, bad_count), el = timed(run)
    report(request, 3, "cubic consistency on 100x100 grid",
           {f"{bad_res} residual violations": bad_res == 0, f"{bad_count} root-count mismatches": bad_count == 0},
           el, 5)


def _mms_error(n, d=D, zeta=3.0, omega=1.0):
    s = grid(n)
    w = np.exp(1j * s) * (1.2 + 0.3 * np.cos(s))
    w1 = 1j * w - 0.3 * np.exp(1j * s) * np.sin(s)
    w2 = 1j * w1 - 0.3 * (1j * np.exp(1j * s) * np.sin(s) + np.exp(1j * s) * np.cos(s))
    ft = 1j * (-d * w2 + 1j * omega * w1 + (zeta - 1j) * w - np.abs(w) ** 2 * w)
    p = Params(d=d, zeta=zeta, omega=omega, f0=0.0, f1=1.0, forcing=Sampled(ft))
    return np.max(np.abs(residual_vec(p, w)))


def test_04_discretization(request):
    def run():
        errs = [_mms_error(n) for n in (64, 128, 256, 512)]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(50):
            n = 64
            p = Params(d=rng.uniform(0.05, 1) * rng.choice([-1, 1]), zeta=rng.normal(2, 1), omega=rng.normal(),
                       f0=rng.uniform(0, 2), f1=rng.normal())
            u = rng.normal(size=n) + 1j * rng.normal(size=n)
            v = rng.normal(size=n) + 1j * rng.normal(size=n)
            eps = 1e-6
            fd = (residual_vec(p, u + eps * v) - residual_vec(p, u - eps * v)) / (2 * eps)
            worst = max(worst, np.max(np.abs(fd - jacobian(p, u) @ pack(v))) / np.max(np.abs(pack(v))))
        return orders, worst
    (orders, worst), el = timed(run)
    report(request, 4, "discretization order and Jacobian",
           {f"orders {np.round(orders, 4).tolist()} in [1.9, 2.1]": bool(np.all((orders >= 1.9) & (orders <= 2.1))),
            f"Jacobian FD error {worst:.1e} <= 1e-6": worst <= 1e-6}, el, 10)


def test_05_bounds(request, topology, threshold, eight):
    def run():
        branches = [topology[0][2.4]] + [topology[0][z][1] for z in (3.0, 4.0)]
        branches += threshold[0].branches + eight[0].branches
        count, bad = 0, []
        for b in branches:
            for pt in b.points:
                p = b.params.with_(f1=pt.f1)
                res = verify_bounds(p, pt.u, tol_residual=TOL, inflation=1 + 10 * DerivativeScheme(N).h ** 2)
                count += 1
                if not res.passed:
                    bad.append((b.params.zeta, pt.f1))
        return count, bad
    (count, bad), el = timed(run)
    report(request, 5, f"a-priori bounds on {count} branch points",
           {f"{len(bad)} violations": not bad and count > 0}, el, None)


def test_06_uniqueness(request):
    p = Params(d=1.0, zeta=0.0, omega=0.0, f0=0.1, f1=0.05)

    def run():
        verdict = uniqueness_classify(p)
        sols = multistart_solutions(p, N, starts=20, seed=0)
        return verdict, sols
    (verdict, sols), el = timed(run)
    ndist = len(distinct_solutions(sols, tol=1e-8))
    report(request, 6, "uniqueness regime",
           {f"verdict {tuple(verdict)} == ('Unique', 'iii')": tuple(verdict) == ("Unique", "iii"),
            f"{len(sols)}/20 starts converged": len(sols) == 20,
            f"{ndist} distinct solution(s) in max norm 1e-8": ndist == 1}, el, 30)


def _rho_hits(b, zeta):
    tps = solve_constants(zeta, F0)
    return constant_crossings(b, rho_tol=1e-4), tps


def test_07_topology(request, topology):
    res, el = topology
    g = res[2.4]
    (lab3, b3), (lab4, b4) = res[3.0], res[4.0]
    hits3, _ = _rho_hits(b3, 3.0)
    hits4, _ = _rho_hits(b4, 4.0)
    report(request, 7, "global vs loop topology",
           {f"zeta=2.4 spans [{g.param_values.min():.3f}, {g.param_values.max():.3f}] open":
                g.param_values.min() <= -2 and g.param_values.max() >= 2 and not g.closed,
            f"zeta=3.0 loop meets constants {hits3} (lower pair)": b3.closed and lab3 == "lower" and hits3 == [0, 1],
            f"zeta=4.0 loop meets constants {hits4} (upper pair)": b4.closed and lab4 == "upper" and hits4 == [1, 2]},
           el, 600)


def test_08_threshold(request, threshold):
    res, el = threshold
    lo, hi = res.lo, res.hi
    report(request, 8, f"connectivity threshold in [{lo:.5f}, {hi:.5f}]",
           {"width <= 0.02": hi - lo <= 0.02 + 1e-12,
            "intersects (3.1344, 3.1359)": lo < 3.1359 and hi > 3.1344}, el, 1800)


def test_09_figure_eight(request, eight):
    fe, el = eight
    h = 2 * np.pi / N
    nonconst = [pt for pt in fe.crossings if not is_constant(pt.u)]
    per = [smallest_period(pt.u) for pt in nonconst]
    sep = circular_distance(*fe.shifts) if len(fe.shifts) == 2 else float("nan")
    report(request, 9, "figure-eight at omega = 0",
           {"both branches closed": all(b.closed for b in fe.branches),
            f"{len(nonconst)} distinct nonconstant crossings == 2": len(nonconst) == 2,
            f"smallest period index {per} == 1": per == [1] * len(per) and len(per) > 0,
            f"shift separation |{sep:.5f} - pi| <= 2h": abs(sep - np.pi) <= 2 * h}, el, 900)


def test_10_kernel(request, eight):
    fe = eight[0]
    p = study(3.9, omega=0.0)

    def run():
        raw = analyze_linearization(p, fe.crossings[0].u)
        ref = fe.report.linearization
        par = parity_periodicity_check(ref.u0, ref.adjoint_kernel_vec, 0.0, tol=1e-6)
        return raw, ref, par
    (raw, ref, par), el = timed(run)
    report(request, 10, "kernel structure",
           {f"kernel dim {raw.kernel_dim_estimate}/{ref.kernel_dim_estimate} == 1":
                raw.kernel_dim_estimate == 1 and ref.kernel_dim_estimate == 1,
            f"alignment {min(kernel_alignment(raw), kernel_alignment(ref)):.8f} >= 0.999":
                min(kernel_alignment(raw), kernel_alignment(ref)) >= 0.999,
            f"phi* even part {par.adjoint_even_part} < 1e-6 (u0 even: {par.u0_even})": par.passed and par.u0_even},
           el, 60)


def test_11_sigma0(request, eight):
    fe = eight[0]
    h = 2 * np.pi / N
    t0 = time.perf_counter()
    rep = fe.report
    cands = rep.sigma0_candidates
    dists = [min(circular_distance(s, c) for c in cands) for s in fe.shifts]
    el = time.perf_counter() - t0
    report(request, 11, "sigma0 prediction vs observation",
           {f"candidates {np.round(cands, 5).tolist()} vs observed {np.round(fe.shifts, 5).tolist()}":
                len(dists) == 2 and max(dists) <= 2 * h,
            f"transversal {rep.transversal}": rep.transversal == [True] * len(cands) and len(cands) == 2},
           el, 60)


def test_12_second_derivative(request):
    def run():
        cmp = {}
        for zeta in (2.4, 2.6, 4.2):
            (tp,) = solve_constants(zeta, F0)
            cmp[zeta] = second_derivative_vs_numeric(study(zeta), tp.u0, fd_step=1e-3, n=512)
        ch = sign_changes(F0, D, 1.0, K1, np.linspace(-0.999, 0.999, 4001))
        return cmp, ch
    (cmp, ch), el = timed(run)
    zeros = [c["zeta"] for c in ch if c["kind"] == "zero"]
    near = {z0: [z for z in zeros if abs(z - z0) <= 0.01] for z0 in (0.8533, 3.34)}
    rel = max(r["rel_err"] for r in cmp.values())
    asym = all(r["asymmetry"] <= 1e-2 * r["rise"] for r in cmp.values())
    control = all(not 3.1344 < z < 3.1359 for z in near[3.34])
    report(request, 12, "second-derivative formula and sign map",
           {f"max rel_err {rel:.1e} < 5e-3": rel < 5e-3,
            "first-difference asymmetry": asym,
            f"sign change near 0.8533: {near[0.8533]}": len(near[0.8533]) == 1,
            f"sign change near 3.34: {near[3.34]}": len(near[3.34]) == 1,
            "negative control (not in threshold interval)": control}, el, 300)


def test_13_symmetry(request, topology):
    res = topology[0]
    branches = [res[2.4], res[3.0][1], res[4.0][1]]

    def run():
        worst, same = 0.0, True
        for b in branches:
            m = mirror_branch(b, b.params)
            same &= bool(np.array_equal(m.norms, b.norms))
            for pt in m.points:
                r = np.linalg.norm(residual_vec(m.params.with_(f1=pt.f1), pt.u))
                worst = max(worst, r / (TOL * np.sqrt(N)))
        return worst, same
    (worst, same), el = timed(run)
    report(request, 13, "mirror symmetry of branches",
           {f"residual {worst:.2f} x tolerance <= 2": worst <= 2, "identical norm sequences": same}, el, 60)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
