"""Constant solutions at f1 = 0: the trivial curve, its turning points and degeneracy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

FSTAR = float(2.0 * np.sqrt(2.0) / 27.0**0.25)


@dataclass(frozen=True)
class TrivialPoint:
    zeta: float
    u0: complex
    rho: float
    f0: float
    t: Optional[float] = None

    def residual(self) -> complex:
        return (self.zeta - 1j) * self.u0 - self.rho * self.u0 + 1j * self.f0


@dataclass(frozen=True)
class TurningPointReport:
    count: int
    points: list  # (t, zeta, rho)
    fstar: float = FSTAR


@dataclass(frozen=True)
class Verdict:
    nondegenerate: bool
    witness: Optional[int] = None


def turning_quadratic(zeta, rho):
    return zeta**2 - 4.0 * rho * zeta + 1.0 + 3.0 * rho**2


def param_point(t: float, f0: float) -> TrivialPoint:
    if not -1.0 < t < 1.0:
        raise ValueError(f"curve parameter must lie in (-1, 1), got {t}")
    r = np.sqrt(1.0 - t * t)
    zeta = float((1.0 - t * t) * f0**2 + t / r)
    u0 = complex((1.0 - t * t) * f0, -f0 * t * r)
    return TrivialPoint(zeta=zeta, u0=u0, rho=(1.0 - t * t) * f0**2, f0=f0, t=t)


def zeta_of_t(t, f0):
    t = np.asarray(t, dtype=float)
    return (1.0 - t * t) * f0**2 + t / np.sqrt(1.0 - t * t)


def dzeta_dt(t, f0):
    t = np.asarray(t, dtype=float)
    return -2.0 * t * f0**2 + (1.0 - t * t) ** -1.5


def _point_from_rho(zeta: float, f0: float, rho: float) -> TrivialPoint:
    u0 = -1j * f0 / (zeta - 1j - rho)
    return TrivialPoint(zeta=zeta, u0=complex(u0), rho=float(abs(u0) ** 2), f0=f0)


def solve_constants(zeta: float, f0: float) -> list[TrivialPoint]:
    """All constant solutions for given detuning, sorted by |u0|^2.

    Roots of rho^3 - 2 zeta rho^2 + (zeta^2 + 1) rho - f0^2 = 0 via companion
    eigenvalues, each polished by a Newton step.
    """
    if f0 == 0:
        return [TrivialPoint(zeta=zeta, u0=0j, rho=0.0, f0=f0)]
    coeffs = [1.0, -2.0 * zeta, zeta**2 + 1.0, -(f0**2)]
    roots = np.roots(coeffs)
    tol = 1e-9 * max(1.0, zeta**2)
    cubic = np.poly1d(coeffs)
    dcubic = cubic.deriv()
    rhos = []
    for r in roots:
        if abs(r.imag) > tol:
            continue
        x = float(r.real)
        for _ in range(3):
            dp = dcubic(x)
            if dp == 0:
                break
            step = cubic(x) / dp
            # near a double root Newton can overshoot; keep the better iterate
            if abs(cubic(x - step)) < abs(cubic(x)):
                x -= step
            else:
                break
        if x >= 0:
            rhos.append(x)
    rhos.sort()
    merged: list[float] = []
    for x in rhos:
        if merged and abs(x - merged[-1]) < 1e-7 * max(1.0, x):
            continue
        merged.append(x)
    return [_point_from_rho(zeta, f0, x) for x in merged]


def turning_points(f0: float) -> TurningPointReport:
    """Zeros of zeta'(t) on the trivial curve, bisected to 1e-12 in t."""
    f0 = abs(f0)
    if abs(f0 - FSTAR) <= 1e-12:
        # double zero of zeta'(t); zeta''(t) = 0 as well, which forces t = 1/2
        t = 0.5
        pt = param_point(t, f0)
        return TurningPointReport(1, [(t, float(pt.zeta), float(pt.rho))])
    if f0 < FSTAR:
        return TurningPointReport(0, [])
    # zeta'(t) > 0 near t = +-1; it dips below zero on an interval inside (0, 1)
    ts = np.linspace(0.0, 1.0 - 1e-9, 20001)
    vals = dzeta_dt(ts, f0)
    points = []
    for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
        t = brentq(lambda x: float(dzeta_dt(x, f0)), ts[i], ts[i + 1], xtol=1e-14, rtol=1e-15)
        pt = param_point(t, f0)
        points.append((float(t), float(pt.zeta), float(pt.rho)))
    return TurningPointReport(len(points), points)


def _scan_range(zeta: float, rho: float, d: float) -> range:
    """m >= 0 for which zeta + d m^2 can hit a root of X^2 - 4 rho X + 1 + 3 rho^2."""
    if rho < 1.0:
        return range(0)
    disc = np.sqrt(rho * rho - 1.0)
    lo, hi = 2 * rho - disc - zeta, 2 * rho + disc - zeta  # d m^2 in [lo, hi]
    if d > 0:
        lo, hi = max(lo, 0.0) / d, hi / d
    else:
        lo, hi = max(-hi, 0.0) / -d, -lo / -d
    if hi < 0:
        return range(0)
    return range(int(np.floor(np.sqrt(max(lo, 0.0)))), int(np.ceil(np.sqrt(hi))) + 1)


def is_nondegenerate(tp: TrivialPoint, omega: float, d: float, tol: float = 1e-10) -> Verdict:
    """Non-degeneracy of a constant solution in the sense of the kernel of L_u."""
    if abs(turning_quadratic(tp.zeta, tp.rho)) <= tol:
        return Verdict(False, 0)
    if omega != 0:
        return Verdict(True)
    for m in _scan_range(tp.zeta, tp.rho, d):
        if m == 0:
            continue
        if abs(turning_quadratic(tp.zeta + d * m * m, tp.rho)) <= tol:
            return Verdict(False, m)
    return Verdict(True)
