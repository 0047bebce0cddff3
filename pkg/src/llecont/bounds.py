"""A-priori bounds for solutions of the profile equation and uniqueness tests.

All constants are closed-form functions of the parameters and of the forcing
norms ``||f||_2``, ``||f'||_inf`` and ``||f''||_2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .continuation import NewtonFailure, NewtonSettings, newton_solve
from .discretize import DerivativeScheme, l2, residual_vec
from .model import ContractViolation, Params

TWO_PI = 2.0 * math.pi


class ForcingNorms(NamedTuple):
    fprime_inf: float
    fsecond_l2: float


def forcing_norms(p: Params) -> ForcingNorms:
    """Closed-form norms of f' and f'' for the second-harmonic forcing."""
    if not p.harmonic:
        raise ContractViolation("derivative norms of a sampled forcing must be supplied by the caller")
    k = p.k1
    return ForcingNorms(abs(p.f1) * k, math.sqrt(TWO_PI) * abs(p.f1) * k * k)


def forcing_l2(p: Params) -> float:
    if p.harmonic:
        return math.sqrt(TWO_PI * (p.f0**2 + p.f1**2))
    f = p.forcing_values(p.forcing.n)
    return l2(f)


@dataclass(frozen=True)
class BoundsReport:
    F: float
    B: float
    C: float
    Dtilde: float
    D: Optional[float]  # None when the improved bound does not apply
    zeta_star_low: float
    zeta_star_high: float
    l2_bound: float
    linf_bound: float

    @property
    def improved(self) -> bool:
        return self.D is not None

    @property
    def improved_linf(self) -> Optional[float]:
        if self.D is None:
            return None
        return (self.F**0.75 / math.sqrt(TWO_PI) + math.sqrt(TWO_PI) * self.B) * self.D**0.25

    def as_dict(self) -> dict:
        return {
            "F": self.F, "B": self.B, "C": self.C, "Dtilde": self.Dtilde,
            "D": "inf" if self.D is None else self.D,
            "zeta_star_low": self.zeta_star_low, "zeta_star_high": self.zeta_star_high,
            "l2_bound": self.l2_bound, "linf_bound": self.linf_bound,
        }


def compute_bounds(p: Params, deriv_norms: Optional[ForcingNorms] = None) -> BoundsReport:
    if deriv_norms is None:
        deriv_norms = forcing_norms(p)
    fp, fpp = deriv_norms
    d, ad = p.d, abs(p.d)
    F = forcing_l2(p)
    B = (F**2.75 / (2 * ad) + 2 * fp * F**0.25
         + math.sqrt(fpp * F**0.5 + 2 * fp * (math.sqrt(F / TWO_PI) + 1.0)))
    C = F / math.sqrt(TWO_PI) + math.sqrt(TWO_PI) * B * F**0.25
    Dt = F**1.5 + abs(p.omega) * B * F**0.75 + ad * B * B
    neg = 1.0 if d < 0 else 0.0
    denom = -p.zeta * math.copysign(1.0, d) - C * C * neg
    if denom > 0:
        D = (Dt / denom) ** (2.0 / 3.0)
    else:
        D = None
    z_low = -C * C * neg - 27.0 * (F**0.75 + 2 * math.pi * B) ** 6 * Dt / (8 * math.pi**3)
    z_high = 3 * C * C + p.omega**2 / (4 * ad)
    l2_bound, linf_bound = F, C
    if D is not None:
        l2_bound = min(F, D)
        linf_bound = min(C, (F**0.75 / math.sqrt(TWO_PI) + math.sqrt(TWO_PI) * B) * D**0.25)
    return BoundsReport(F, B, C, Dt, D, z_low, z_high, l2_bound, linf_bound)


class Verdict(NamedTuple):
    kind: str  # "Unique" / "GlobalContinuation" / "Unknown"
    case: Optional[str] = None


def uniqueness_classify(p: Params, deriv_norms: Optional[ForcingNorms] = None) -> Verdict:
    rep = compute_bounds(p, deriv_norms)
    sz = math.copysign(1.0, p.d) * p.zeta
    if sz < rep.zeta_star_low:
        return Verdict("Unique", "i")
    if sz > rep.zeta_star_high:
        return Verdict("Unique", "ii")
    if math.sqrt(3.0) * rep.C < 1.0:
        return Verdict("Unique", "iii")
    return Verdict("Unknown")


def corollary_constant(d: float, f0: float) -> float:
    return abs(f0) * (1.0 + 2 * math.pi**2 * f0 * f0 / abs(d))


def corollary_case(p: Params) -> Verdict:
    """Closed-form conditions at f1 = 0 under which continuation in f1 is global."""
    C = corollary_constant(p.d, p.f0)
    ad = abs(p.d)
    sz = math.copysign(1.0, p.d) * p.zeta
    neg = 1.0 if p.d < 0 else 0.0
    low = -C * C * neg - 27.0 * (1 + math.pi * p.f0**2 * abs(p.omega) / ad + math.pi**2 * p.f0**4 / ad) * C**6
    if sz < low:
        return Verdict("GlobalContinuation", "i")
    if sz > 3 * C * C + p.omega**2 / (4 * ad):
        return Verdict("GlobalContinuation", "ii")
    if math.sqrt(3.0) * C < 1.0:
        return Verdict("GlobalContinuation", "iii")
    return Verdict("Unknown")


def operator_norm_bound(p: Params) -> float:
    """Bound on the inverse of u -> -d u'' + i omega u' + (zeta - i) u in L^2."""
    q = math.copysign(1.0, p.d) * (p.zeta - p.omega**2 / (4 * p.d))
    if q > 0:
        return min(1.0, 1.0 / q)
    return 1.0


class BoundCheck(NamedTuple):
    name: str
    value: float
    bound: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.bound - self.value


class VerifyResult(NamedTuple):
    passed: bool
    checks: list


def verify_bounds(p: Params, u: np.ndarray, report: Optional[BoundsReport] = None,
                  tol_residual: float = 1e-10, inflation: Optional[float] = None) -> VerifyResult:
    """Check the a-priori bounds on a converged discrete solution.

    Bounds are inflated by ``1 + 10 h^2`` to absorb discretization error.
    """
    u = np.asarray(u, dtype=complex)
    n = u.size
    r = np.linalg.norm(residual_vec(p, u))
    if r > 10 * tol_residual * np.sqrt(n):
        raise ContractViolation(f"field is not a converged solution (|F| = {r:.3e})")
    if report is None:
        report = compute_bounds(p)
    scheme = DerivativeScheme(n)
    if inflation is None:
        inflation = 1.0 + 10.0 * scheme.h**2
    nu, nd, ninf = l2(u), l2(scheme.d1(u)), float(np.max(np.abs(u)))
    pairs = [
        ("l2", nu, report.F),
        ("l2_deriv", nd, report.B * nu**0.25),
        ("linf", ninf, report.C),
    ]
    if report.D is not None:
        pairs.append(("l2_improved", nu, report.D))
        pairs.append(("linf_improved", ninf, report.improved_linf))
    checks = [BoundCheck(name, v, b, v <= b * inflation + 1e-12) for name, v, b in pairs]
    return VerifyResult(all(c.passed for c in checks), checks)


def multistart_solutions(p: Params, n: int, starts: int = 20, seed: int = 0,
                         radius: Optional[float] = None, modes: int = 4,
                         settings: NewtonSettings = NewtonSettings(max_iter=60)) -> list:
    """Newton from random smooth starts with ||u||_inf <= radius.

    Returns the converged fields; failures are dropped.  Starts are random
    trigonometric polynomials, so they stay resolved on the grid.
    """
    rng = np.random.default_rng(seed)
    if radius is None:
        radius = compute_bounds(p).C
    s = 2 * np.pi * np.arange(n) / n
    ks = np.arange(-modes, modes + 1)
    out = []
    for _ in range(starts):
        c = rng.normal(size=ks.size) + 1j * rng.normal(size=ks.size)
        c /= 1.0 + ks**2
        u0 = np.exp(1j * np.outer(s, ks)) @ c
        u0 *= rng.uniform(0, radius) / np.max(np.abs(u0))
        try:
            out.append(newton_solve(p, u0, settings).u)
        except NewtonFailure:
            continue
    return out


def distinct_solutions(fields: list, tol: float = 1e-8) -> list:
    """Group fields that agree within ``tol`` in the max norm; one representative each."""
    reps: list = []
    for u in fields:
        if not any(np.max(np.abs(u - v)) <= tol for v in reps):
            reps.append(u)
    return reps
