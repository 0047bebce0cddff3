"""Second-order response of ||u(f1)||_2^2 at a constant f1 = 0 solution.

Near a non-degenerate constant ``u0`` the branch expands as
``u = u0 + f1 (alpha e^{i k s} + beta e^{-i k s}) + O(f1^2)`` and the curvature
of ``f1 -> ||u(f1)||_2^2`` at ``f1 = 0`` is ``4 pi (Re(u0 conj(eps)) + |alpha|^2 + |beta|^2)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import brentq

from .continuation import NewtonSettings, newton_solve
from .discretize import l2
from .model import ContractViolation, Params, grid
from .trivial import param_point

SING_TOL = 1e-10


@dataclass(frozen=True)
class ResponseCoefficients:
    alpha: complex
    beta: complex
    x: complex
    y: complex
    z: complex
    epsilon: complex
    second_deriv: float
    singular: bool


def _first_order(p: Params, u0: complex):
    k, rho = p.k1, abs(u0) ** 2
    M = p.zeta + p.d * k * k - 2 * rho
    den_a = M**2 - (p.omega * k + 1j) ** 2 - rho**2
    den_b = M**2 - (p.omega * k - 1j) ** 2 - rho**2
    scale_a = max(M**2, abs(p.omega * k + 1j) ** 2, rho**2, 1.0)
    sing = abs(den_a) < SING_TOL * scale_a or abs(den_b) < SING_TOL * scale_a
    if sing:
        return None, None, True
    alpha = -1j * (M + k * p.omega + 1j) / den_a
    beta = 1j * u0**2 / den_b
    return complex(alpha), complex(beta), False


def linear_system_residual(p: Params, u0: complex, alpha: complex, beta: complex) -> float:
    k, rho = p.k1, abs(u0) ** 2
    c = p.d * k * k + p.zeta - 1j - 2 * rho
    r1 = (c - k * p.omega) * alpha - u0**2 * np.conj(beta) + 1j
    r2 = (c + k * p.omega) * beta - u0**2 * np.conj(alpha)
    return float(max(abs(r1), abs(r2)))


def _coefficients(p: Params, u0: complex) -> ResponseCoefficients:
    alpha, beta, sing = _first_order(p, u0)
    rho = abs(u0) ** 2
    x = complex(p.zeta - 1j - 2 * rho)
    y = complex(-(u0**2))
    den = abs(x) ** 2 - abs(y) ** 2
    if sing:
        nan = complex("nan")
        return ResponseCoefficients(nan, nan, x, y, nan, nan, float("nan"), True)
    z = complex(4 * u0 * (abs(alpha) ** 2 + abs(beta) ** 2) + 4 * np.conj(u0) * alpha * beta)
    if abs(den) < SING_TOL * max(abs(x) ** 2, abs(y) ** 2, 1.0):
        return ResponseCoefficients(alpha, beta, x, y, z, complex("nan"), float("nan"), True)
    eps = (-np.conj(z) * y + z * np.conj(x)) / den
    sd = 4 * math.pi * ((u0 * np.conj(eps)).real + abs(alpha) ** 2 + abs(beta) ** 2)
    return ResponseCoefficients(alpha, beta, x, y, z, complex(eps), float(sd), False)


def curve_parameter(u0: complex, f0: float) -> float:
    """t with param_point(t, f0).u0 == u0."""
    if f0 == 0:
        raise ContractViolation("trivial curve is degenerate for f0 = 0")
    rho = abs(u0) ** 2
    t = math.sqrt(max(0.0, 1.0 - rho / f0**2))
    return -t if (u0.imag / f0) > 0 else t


def response_coefficients(p: Params, u0: complex, t: Optional[float] = None,
                          side_step: float = 1e-6) -> ResponseCoefficients:
    """Closed-form first- and second-order response at the constant solution ``u0``.

    At a pole of the formula (a turning point) the curvature is reported as
    +-inf with the sign of the limit from smaller curve parameter t.
    """
    if not p.harmonic:
        raise ContractViolation("closed-form response needs the second-harmonic forcing")
    u0 = complex(u0)
    rc = _coefficients(p, u0)
    if not rc.singular:
        return rc
    if t is None:
        t = curve_parameter(u0, p.f0)
    for step in (side_step, 10 * side_step, 100 * side_step):
        pt = param_point(t - step, p.f0)
        near = _coefficients(p.with_(zeta=pt.zeta), pt.u0)
        if not near.singular and near.second_deriv != 0:
            return ResponseCoefficients(rc.alpha, rc.beta, rc.x, rc.y, rc.z, rc.epsilon,
                                        math.copysign(math.inf, near.second_deriv), True)
    return rc


def branch_norms(p: Params, u0: complex, delta: float, n: int,
                 settings: NewtonSettings = NewtonSettings()) -> tuple[float, float, float]:
    """||u(f1)||_2^2 at f1 = -delta, 0, +delta from Newton seeded by the first-order response."""
    rc = response_coefficients(p.with_(f1=0.0), u0)
    s = grid(n)
    v = rc.alpha * np.exp(1j * p.k1 * s) + rc.beta * np.exp(-1j * p.k1 * s)
    base = np.full(n, complex(u0))
    out = []
    for f1 in (-delta, 0.0, delta):
        u = newton_solve(p.with_(f1=f1), base + f1 * v, settings).u
        out.append(l2(u) ** 2)
    return tuple(out)


def second_derivative_vs_numeric(p: Params, u0: complex, fd_step: float = 1e-3, n: int = 512) -> dict:
    """Compare the closed form with a central second difference of ||u(f1)||_2^2."""
    rc = response_coefficients(p.with_(f1=0.0), u0)
    nm, n0, np_ = branch_norms(p, u0, fd_step, n)
    numeric = (np_ - 2 * n0 + nm) / fd_step**2
    analytic = rc.second_deriv
    return {
        "analytic": analytic,
        "numeric": numeric,
        "rel_err": abs(analytic - numeric) / max(1.0, abs(analytic)),
        "asymmetry": abs(np_ - nm),
        "rise": abs(np_ - n0),
    }


SIGN_MAP_FIELDS = ("t", "zeta", "rho", "second_deriv", "sign", "singular")


def sign_map(f0: float, d: float, omega: float, k1: int, t_grid: Iterable[float]) -> list:
    """Curvature sign along the trivial curve parametrized by t."""
    rows = []
    for t in t_grid:
        pt = param_point(float(t), f0)
        p = Params(d=d, zeta=pt.zeta, omega=omega, f0=f0, f1=0.0, k1=k1)
        rc = response_coefficients(p, pt.u0, t=float(t))
        sd = rc.second_deriv
        rows.append({
            "t": float(t), "zeta": float(pt.zeta), "rho": float(pt.rho),
            "second_deriv": sd, "sign": int(np.sign(sd)) if not math.isnan(sd) else 0,
            "singular": bool(rc.singular),
        })
    return rows


def write_sign_map(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SIGN_MAP_FIELDS)
        for r in rows:
            w.writerow([repr(r["t"]), repr(r["zeta"]), repr(r["rho"]), repr(r["second_deriv"]),
                        r["sign"], int(r["singular"])])


def _curvature_at(t: float, f0: float, d: float, omega: float, k1: int) -> float:
    pt = param_point(t, f0)
    p = Params(d=d, zeta=pt.zeta, omega=omega, f0=f0, k1=k1)
    return _coefficients(p, pt.u0).second_deriv


def _pole_function(t: float, f0: float, d: float, omega: float, k1: int) -> float:
    """Real quantity whose zeros are the poles of the curvature along the curve."""
    pt = param_point(t, f0)
    rho = pt.rho
    val = (pt.zeta - 2 * rho) ** 2 + 1 - rho**2  # |x|^2 - |y|^2
    if omega == 0:
        M = pt.zeta + d * k1 * k1 - 2 * rho
        val *= M**2 + 1 - rho**2
    return val


def sign_changes(f0: float, d: float, omega: float, k1: int, t_grid: Iterable[float]) -> list:
    """Sign changes of the curvature along the trivial curve.

    Each entry has the refined t and zeta and ``kind``: ``"zero"`` where the
    curvature passes through zero, ``"pole"`` where it jumps through infinity.
    """
    ts = np.asarray(list(t_grid), dtype=float)
    vals = np.array([_curvature_at(t, f0, d, omega, k1) for t in ts])
    poles = np.array([_pole_function(t, f0, d, omega, k1) for t in ts])
    out = []
    for i in range(ts.size - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
            continue
        if poles[i] * poles[i + 1] <= 0:
            g = lambda t: _pole_function(t, f0, d, omega, k1)
            kind = "pole"
        else:
            g = lambda t: _curvature_at(t, f0, d, omega, k1)
            kind = "zero"
        tc = brentq(g, ts[i], ts[i + 1], xtol=1e-14)
        out.append({"t": float(tc), "zeta": float(param_point(tc, f0).zeta), "kind": kind,
                    "from": int(np.sign(a)), "to": int(np.sign(b))})
    return out
