"""Command-line experiment runner.

    llecont <kind> [--config FILE] [--out DIR] [--threads N] [--n GRID] [--verbose]

Configs are TOML files with the sections ``[model]``, ``[grid]``,
``[continuation]``, ``[newton]`` and ``[experiment]`` (see README).  Values
are resolved as command line > ``LLECONT_*`` environment > config file >
built-in defaults.  Every run writes ``manifest.json`` next to its data files.

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 partial results.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np
import scipy
import tomli

from . import __version__
from .bifurcation import NonSimpleKernel
from .bounds import compute_bounds, corollary_case, distinct_solutions, multistart_solutions, uniqueness_classify
from .continuation import (ContinuationSettings, NewtonFailure, NewtonSettings, sweep_zeta, trace_branch,
                           trivial_start)
from .experiments import ThresholdError, figure_eight, locate_threshold
from .io import field_to_json, write_branches_csv, write_json
from .model import ContractViolation, Params
from .response import sign_changes, sign_map, write_sign_map
from .trivial import FSTAR, param_point, solve_constants, turning_points

log = logging.getLogger("llecont")

KINDS = ("trivial-branch", "continue", "sweep", "bifurcation-scan", "sign-map", "bounds-report",
         "reproduce-fig", "locate-threshold")

OK, CONFIG_ERROR, NUMERICAL_FAILURE, PARTIAL = 0, 1, 2, 3

STUDY_PARAMS = {"d": -0.1, "f0": 2.0, "k1": 1, "omega": 1.0}

DEFAULTS = {
    "model": {"d": -0.1, "zeta": 3.0, "omega": 1.0, "f0": 2.0, "f1": 0.0, "k1": 1},
    "grid": {"n": None},  # None: 256, or 1000 for reproduce-fig fig2
    "continuation": {},
    "newton": {},
    "experiment": {"seed": 0},
}

ENV_KEYS = {  # env var suffix -> (section, key, type)
    "N": ("grid", "n", int),
    "THREADS": ("run", "threads", int),
    "OUT": ("run", "out", str),
    "D": ("model", "d", float),
    "ZETA": ("model", "zeta", float),
    "OMEGA": ("model", "omega", float),
    "F0": ("model", "f0", float),
    "F1": ("model", "f1", float),
    "K1": ("model", "k1", int),
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in base.items()}
    for k, v in over.items():
        if isinstance(v, dict):
            out.setdefault(k, {}).update(v)
        else:
            out[k] = v
    return out


def load_config(args, environ=os.environ) -> dict:
    cfg = _merge(DEFAULTS, {"run": {"threads": os.cpu_count() or 1, "out": "out"}})
    path = args.config or environ.get("LLECONT_CONFIG")
    if path:
        try:
            with open(path, "rb") as fh:
                cfg = _merge(cfg, tomli.load(fh))
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for suffix, (sec, key, typ) in ENV_KEYS.items():
        val = environ.get("LLECONT_" + suffix)
        if val is not None:
            try:
                cfg.setdefault(sec, {})[key] = typ(val)
            except ValueError:
                raise ConfigError(f"LLECONT_{suffix}={val!r} is not a valid {typ.__name__}") from None
    for key in ("d", "zeta", "omega", "f0", "f1", "k1"):
        v = getattr(args, key, None)
        if v is not None:
            cfg["model"][key] = v
    if args.n is not None:
        cfg["grid"]["n"] = args.n
    if args.threads is not None:
        cfg["run"]["threads"] = args.threads
    if args.out is not None:
        cfg["run"]["out"] = args.out
    cfg.setdefault("experiment", {})["kind"] = args.kind
    for key in ("target", "seed", "width", "bracket", "zeta_list", "start"):
        v = getattr(args, key, None)
        if v is not None:
            cfg["experiment"][key] = v
    return cfg


def _settings(cfg: dict) -> ContinuationSettings:
    names = {f.name for f in fields(ContinuationSettings)} - {"newton"}
    nnames = {f.name for f in fields(NewtonSettings)}
    cont = dict(cfg.get("continuation", {}))
    rng = cfg["model"].get("f1_range")
    if rng is not None:
        if len(rng) != 2 or not rng[0] < rng[1]:
            raise ConfigError(f"model.f1_range must be [lo, hi] with lo < hi, got {rng}")
        cont.setdefault("param_min", float(rng[0]))
        cont.setdefault("param_max", float(rng[1]))
    newt = cfg.get("newton", {})
    bad = (set(cont) - names) | (set(newt) - nnames)
    if bad:
        raise ConfigError(f"unknown settings: {sorted(bad)}")
    try:
        return ContinuationSettings(newton=NewtonSettings(**newt), **cont)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _params(cfg: dict, **over) -> Params:
    m = {k: v for k, v in cfg["model"].items() if k in ("d", "zeta", "omega", "f0", "f1", "k1")}
    m.update(over)
    try:
        return Params(**m)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _grid(cfg: dict, default: int = 256) -> int:
    n = cfg["grid"].get("n")
    if n is None:
        n = cfg["grid"]["n"] = default
    k1 = int(cfg["model"].get("k1", 1))
    if not isinstance(n, int) or n < 8 or n % 2 or n % (2 * k1):
        raise ConfigError(f"grid size n={n} must be an even integer >= 8 divisible by 2*k1")
    return n


class Run:
    """Output directory, file registry and failure log of one invocation."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list = []
        self.failures: list = []
        self.summary: dict = {}
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name


# -- experiments ----------------------------------------------------------------

def _write_branches(run: Run, branches, name: str, snapshots: bool = False) -> None:
    write_branches_csv(branches, run.path(name))
    for b in branches:
        run.failures += [{"diagnostic": d, "zeta": b.params.zeta} for d in b.diagnostics]
    if snapshots:
        for bid, b in enumerate(branches):
            for j, pt in enumerate(b.crossings()):
                run.path(f"branch{bid}_crossing{j}.json").write_text(
                    field_to_json(pt.u, b.params.as_dict(), f1=pt.f1, branch_id=bid) + "\n")


def exp_trivial_branch(cfg, run: Run):
    f0 = float(cfg["model"]["f0"])
    ts = np.linspace(-0.999, 0.999, int(cfg["experiment"].get("t_count", 2001)))
    rows = [param_point(float(t), f0) for t in ts]
    with open(run.path("trivial_curve.csv"), "w") as fh:
        fh.write("t,zeta,rho,re_u0,im_u0\n")
        for r in rows:
            fh.write(f"{r.t!r},{r.zeta!r},{r.rho!r},{r.u0.real!r},{r.u0.imag!r}\n")
    tp = turning_points(f0)
    run.summary.update(f0=f0, fstar=FSTAR, turning_points=tp.points, count=tp.count)
    write_json(run.summary, run.path("turning_points.json"))


def exp_continue(cfg, run: Run):
    p = _params(cfg)
    n = _grid(cfg)
    st = _settings(cfg)
    start = int(cfg["experiment"].get("start", 0))
    tps = solve_constants(p.zeta, p.f0)
    if not 0 <= start < len(tps):
        raise ConfigError(f"start index {start} out of range (there are {len(tps)} constant solutions)")
    b = trace_branch(p.with_(f1=0.0), trivial_start(p, n, start), st)
    _write_branches(run, [b], "branch.csv", snapshots=True)
    run.summary.update(closed=b.closed, points=len(b.points),
                       f1_range=[float(b.param_values.min()), float(b.param_values.max())])


def exp_sweep(cfg, run: Run, zetas=None, name="sweep.csv", n_default=256):
    p = _params(cfg)
    n = _grid(cfg, n_default)
    st = _settings(cfg)
    if zetas is None:
        zetas = cfg["experiment"].get("zeta_list", cfg["model"].get("zeta_list"))
        if zetas is None:
            raise ConfigError("sweep needs experiment.zeta_list (or model.zeta_list)")
    fails: list = []
    branches = sweep_zeta(p, [float(z) for z in zetas], n, st, threads=int(cfg["run"]["threads"]),
                          failures=fails)
    write_branches_csv(branches, run.path(name))
    run.failures += fails
    run.summary.setdefault("branches", []).extend(
        {"branch_id": i, "zeta": b.params.zeta, "closed": b.closed, "points": len(b.points),
         "start_rho": b.provenance.get("start_rho")} for i, b in enumerate(branches))


def exp_bifurcation_scan(cfg, run: Run):
    p = _params(cfg)
    n = _grid(cfg)
    fe = figure_eight(p, n, _settings(cfg))
    _write_branches(run, fe.branches, "branches.csv", snapshots=True)
    if fe.report is None:
        run.failures.append({"diagnostic": "no nonconstant f1 = 0 crossing found"})
        return
    write_json({**fe.report.as_dict(), "observed_shifts": fe.shifts,
                "period_index": fe.period_index}, run.path("bifurcation.json"))
    run.path("reference.json").write_text(field_to_json(fe.reference, p.as_dict(), f1=0.0) + "\n")
    run.summary.update(observed_shifts=fe.shifts, sigma0_candidates=fe.report.sigma0_candidates)


def exp_sign_map(cfg, run: Run):
    m = cfg["model"]
    e = cfg["experiment"]
    ts = np.linspace(float(e.get("t_min", -0.999)), float(e.get("t_max", 0.999)), int(e.get("t_count", 4001)))
    args = (float(m["f0"]), float(m["d"]), float(m["omega"]), int(m.get("k1", 1)))
    write_sign_map(sign_map(*args, ts), run.path("sign_map.csv"))
    ch = sign_changes(*args, ts)
    write_json(ch, run.path("sign_changes.json"))
    run.summary.update(sign_changes=ch)


def exp_bounds_report(cfg, run: Run):
    p = _params(cfg)
    rep = compute_bounds(p)
    out = {"params": p.as_dict(), "bounds": rep.as_dict(),
           "uniqueness": uniqueness_classify(p)._asdict(), "corollary": corollary_case(p)._asdict()}
    starts = int(cfg["experiment"].get("starts", 0))
    if starts:
        sols = multistart_solutions(p, _grid(cfg), starts, seed=int(cfg["experiment"].get("seed", 0)))
        out["multistart"] = {"starts": starts, "converged": len(sols),
                             "distinct": len(distinct_solutions(sols))}
    write_json(out, run.path("bounds.json"))
    run.summary.update(uniqueness=out["uniqueness"])


def exp_locate_threshold(cfg, run: Run):
    p = _params(cfg)
    e = cfg["experiment"]
    lo, hi = (float(x) for x in e.get("bracket", (3.0, 3.3)))
    try:
        res = locate_threshold(p, lo, hi, float(e.get("width", 0.02)), _grid(cfg), _settings(cfg))
    except ThresholdError as exc:
        run.failures.append({"diagnostic": str(exc)})
        raise
    out = {"interval": [res.lo, res.hi], "history": res.history}
    write_json(out, run.path("threshold.json"))
    run.summary.update(interval=[res.lo, res.hi])


FIGS = {
    "fig1": "trivial curves for f0 in {1, f*, 2}",
    "fig2": "continua at omega = 1 for zeta in {2.4, 2.6, ..., 4.2}",
    "fig5": "curvature sign map along the trivial curve",
    "fig6": "continua at omega = 0 for zeta in {2.7, 3.9}",
}


def exp_reproduce_fig(cfg, run: Run):
    target = cfg["experiment"].get("target")
    if target not in FIGS:
        raise ConfigError(f"unknown target {target!r}; choose from {sorted(FIGS)}")
    for k, v in STUDY_PARAMS.items():
        cfg["model"].setdefault(k, v)
    if target == "fig1":
        for f0 in (1.0, FSTAR, 2.0):
            zs = np.linspace(-1.0, 5.0, 601)
            with open(run.path(f"constants_f0_{f0:.4f}.csv"), "w") as fh:
                fh.write("zeta,rho\n")
                for z in zs:
                    for tp in solve_constants(float(z), f0):
                        fh.write(f"{float(z)!r},{tp.rho!r}\n")
    elif target == "fig2":
        cfg["model"].update(STUDY_PARAMS)
        exp_sweep(cfg, run, zetas=[round(2.4 + 0.2 * j, 10) for j in range(10)], name="fig2.csv", n_default=1000)
    elif target == "fig5":
        cfg["model"].update(STUDY_PARAMS)
        exp_sign_map(cfg, run)
    else:
        cfg["model"].update(STUDY_PARAMS, omega=0.0)
        exp_sweep(cfg, run, zetas=[2.7, 3.9], name="fig6.csv")
    run.summary["target"] = target


EXPERIMENTS = {
    "trivial-branch": exp_trivial_branch,
    "continue": exp_continue,
    "sweep": exp_sweep,
    "bifurcation-scan": exp_bifurcation_scan,
    "sign-map": exp_sign_map,
    "bounds-report": exp_bounds_report,
    "reproduce-fig": exp_reproduce_fig,
    "locate-threshold": exp_locate_threshold,
}


# -- manifest and entry point ----------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(run: Run, cfg: dict, status: int, wall: float) -> dict:
    files = {name: _sha256(run.out / name) for name in sorted(set(run.files)) if (run.out / name).exists()}
    canon = json.dumps({"config": cfg, "files": files}, sort_keys=True, default=str)
    man = {
        "config": cfg,
        "status": status,
        "versions": {"llecont": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": wall,
        "files": files,
        "failures": run.failures,
        "summary": run.summary,
        "manifest_hash": hashlib.sha256(canon.encode()).hexdigest(),
    }
    write_json(man, run.out / "manifest.json")
    return man


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="llecont", description="Continuation experiments for the dual-pumped LLE.")
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, help="worker processes for sweeps")
        sp.add_argument("--n", type=int, help="grid size")
        sp.add_argument("--verbose", "-v", action="store_true")
        for key, typ in (("d", float), ("zeta", float), ("omega", float), ("f0", float), ("f1", float),
                         ("k1", int)):
            sp.add_argument(f"--{key}", type=typ)
        if kind == "reproduce-fig":
            sp.add_argument("--target", choices=sorted(FIGS))
        if kind == "locate-threshold":
            sp.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
            sp.add_argument("--width", type=float)
        if kind == "sweep":
            sp.add_argument("--zeta-list", dest="zeta_list", type=float, nargs="+")
        if kind == "continue":
            sp.add_argument("--start", type=int, help="index of the constant solution (by |u0|^2)")
        if kind == "bounds-report":
            sp.add_argument("--seed", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        run = Run(Path(cfg["run"]["out"]))
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return CONFIG_ERROR
    t0 = time.perf_counter()
    status = OK
    try:
        EXPERIMENTS[args.kind](cfg, run)
        if run.failures:
            status = PARTIAL
    except (ConfigError, ContractViolation) as exc:
        run.failures.append({"error": "config", "message": str(exc)})
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        status = CONFIG_ERROR
    except (NewtonFailure, NonSimpleKernel, ThresholdError, np.linalg.LinAlgError) as exc:
        run.failures.append({"error": "numerical", "message": str(exc)})
        print(json.dumps({"error": "numerical", "message": str(exc)}), file=sys.stderr)
        status = NUMERICAL_FAILURE
    write_manifest(run, cfg, status, time.perf_counter() - t0)
    log.info("wrote %d files to %s (status %d)", len(set(run.files)), run.out, status)
    return status


if __name__ == "__main__":
    sys.exit(main())
