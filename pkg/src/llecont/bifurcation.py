"""Kernel analysis at f1 = 0 and bifurcation of f1-branches from nonconstant solutions.

Shifts follow ``u_sigma(s) = u0(s - sigma)``.  For the discrete problem the
shift orbit of a nonconstant solution is only approximately a continuum, so
the Jacobian has one singular value that is small but not exactly zero.

Complex fields are paired with the real L2 product ``Re int a conj(b) ds``,
which is what the transpose of the packed real Jacobian represents.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as la
from scipy.optimize import minimize_scalar

from .discretize import DerivativeScheme, inner, jacobian, l2, pack, residual_vec, unpack
from .model import ContractViolation, Params, SecondHarmonic, check_field

RANK_TOL = 1e-6


class NonSimpleKernel(RuntimeError):
    pass


class PeriodicityObstruction(RuntimeError):
    pass


def rpair(a: np.ndarray, b: np.ndarray) -> float:
    """Real L2 pairing Re int a conj(b) ds."""
    return inner(a, b).real


def derivative(u: np.ndarray) -> np.ndarray:
    return DerivativeScheme(u.size).d1(u)


def _normalized(v: np.ndarray) -> np.ndarray:
    return v / l2(v)


# -- shifts, periods, centering ---------------------------------------------

def fourier_shift(u: np.ndarray, sigma: float) -> np.ndarray:
    """Trigonometric interpolant of ``u`` evaluated at ``s - sigma``."""
    n = u.size
    m = np.fft.fftfreq(n, 1.0 / n)
    mult = np.exp(-1j * m * sigma)
    if n % 2 == 0:
        # symmetric Nyquist mode: cos(n s / 2) shifts to cos(n (s - sigma) / 2)
        mult[n // 2] = np.cos(n // 2 * sigma)
    return np.fft.ifft(np.fft.fft(u) * mult)


def estimate_shift(u: np.ndarray, ref: np.ndarray) -> float:
    """sigma in [0, 2pi) minimizing ||u - ref(. - sigma)||_2."""
    n = u.size
    m = np.fft.fftfreq(n, 1.0 / n)
    cu, cr = np.fft.fft(u), np.fft.fft(ref)
    w = cu * np.conj(cr)

    def neg_corr(sig):
        return -np.real(np.sum(w * np.exp(1j * m * sig)))

    grid = 2 * np.pi * np.arange(8 * n) / (8 * n)
    vals = np.array([neg_corr(g) for g in grid])
    g0 = grid[int(np.argmin(vals))]
    step = grid[1]
    res = minimize_scalar(neg_corr, bounds=(g0 - step, g0 + step), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x % (2 * np.pi))


def smallest_period(u: np.ndarray, tol: float = 1e-8) -> int:
    """Largest j dividing n with u(s + 2pi/j) = u(s) on the grid; period is 2pi/j."""
    u = np.asarray(u, dtype=complex)
    n = u.size
    scale = max(l2(u), np.finfo(float).tiny)
    best = 1
    for j in range(2, n + 1):
        if n % j:
            continue
        if l2(np.roll(u, -(n // j)) - u) < tol * scale:
            best = j
    return best


def reflect(u: np.ndarray) -> np.ndarray:
    """Grid reflection s -> -s."""
    return np.roll(u[::-1], 1)


def even_center(u: np.ndarray) -> float:
    """c such that u(c + s) is (as nearly as possible) even in s; the center of largest |u|."""
    n = u.size

    def asym(c):
        v = fourier_shift(u, -c)
        return l2(v - reflect(v)) ** 2

    grid = 2 * np.pi * np.arange(4 * n) / (4 * n)
    vals = np.array([asym(c) for c in grid])
    # even profiles have two centers per period; keep local minima and take the peak
    cands = []
    for i in np.argsort(vals)[: 16]:
        step = grid[1]
        r = minimize_scalar(asym, bounds=(grid[i] - step, grid[i] + step), method="bounded",
                            options={"xatol": 1e-13})
        cands.append((r.fun, float(r.x % (2 * np.pi))))
    fmin = min(c[0] for c in cands)
    good = [c for f, c in cands if f <= 10 * fmin + 1e-20]
    return max(good, key=lambda c: abs(fourier_shift(u, -c)[0]))


def pinned_newton(p: Params, u: np.ndarray, anchor: Optional[np.ndarray] = None,
                  tol: float = 1e-12, max_iter: int = 30) -> np.ndarray:
    """Newton for residual(u) + lam * anchor = 0 with <anchor, u - u_init> = 0.

    Removes the near-neutral shift direction at f1 = 0; ``anchor`` defaults to
    the derivative of the initial field.
    """
    u = check_field(u).copy()
    u_init = u.copy()
    if anchor is None:
        anchor = derivative(u)
    a = pack(anchor)
    x0 = pack(u_init)
    lam = 0.0
    for _ in range(max_iter):
        x = pack(u)
        r = residual_vec(p, u) + lam * a
        g = a @ (x - x0)
        if np.linalg.norm(r) < tol * np.sqrt(u.size) and abs(g) < tol:
            return u
        J = jacobian(p, u).toarray()
        M = np.block([[J, a[:, None]], [a[None, :], np.zeros((1, 1))]])
        step = np.linalg.solve(M, -np.r_[r, g])
        u = unpack(x + step[:-1])
        lam += step[-1]
    if np.linalg.norm(residual_vec(p, u)) > 1e-9 * np.sqrt(u.size):
        raise RuntimeError("pinned Newton did not converge")
    return u


def symmetric_reference(p: Params, u: np.ndarray) -> tuple[np.ndarray, float]:
    """Even representative of the shift orbit of ``u`` and the shift c with u ~ ref(. - c).

    Only meaningful for omega = 0, where reflection maps solutions to solutions.
    """
    c = even_center(u)
    v = fourier_shift(u, -c)
    v = 0.5 * (v + reflect(v))
    v = pinned_newton(p.with_(f1=0.0), v)
    return v, c


# -- linearization -----------------------------------------------------------

@dataclass
class LinearizationReport:
    u0: np.ndarray
    min_svs: np.ndarray
    kernel_vec: np.ndarray
    adjoint_kernel_vec: np.ndarray
    kernel_dim_estimate: int
    simple: bool
    sv_max: float
    pairing: float  # Re <u0', phi*>

    def as_dict(self) -> dict:
        return {
            "min_svs": [float(x) for x in self.min_svs],
            "sv_max": self.sv_max,
            "kernel_dim_estimate": self.kernel_dim_estimate,
            "simple": self.simple,
            "pairing": self.pairing,
        }


def analyze_linearization(p: Params, u0: np.ndarray, rank_tol: float = RANK_TOL) -> LinearizationReport:
    """Singular triplets of the packed Jacobian at f1 = 0.

    Kernel and adjoint kernel are the right and left singular vectors of the
    smallest singular value, normalized to unit L2 norm.
    """
    u0 = check_field(u0)
    J = jacobian(p.with_(f1=0.0), u0).toarray()
    U, s, Vt = la.svd(J)
    phi = _normalized(unpack(Vt[-1]))
    phi_star = _normalized(unpack(U[:, -1]))
    dim = int(np.sum(s < rank_tol * s[0]))
    du = derivative(u0)
    nd = l2(du)
    pairing = rpair(du, phi_star)
    simple = bool(nd > 0 and abs(pairing) > 1e-6 * nd)
    return LinearizationReport(u0, s[::-1][:3].copy(), phi, phi_star, dim, simple, float(s[0]), pairing)


def kernel_alignment(rep: LinearizationReport) -> float:
    """|cos| between the kernel vector and u0' in the real L2 product."""
    du = derivative(rep.u0)
    nd = l2(du)
    if nd == 0:
        return 0.0
    return abs(rpair(rep.kernel_vec, du)) / (l2(rep.kernel_vec) * nd)


# -- sigma0 and transversality -------------------------------------------------

class Sigma0Result(NamedTuple):
    candidates: list
    extra_ok: bool
    base: Optional[float]
    A: float
    B: float


def _harmonic_integral(phi_star: np.ndarray, k1: int) -> complex:
    """int exp(i k1 s) conj(phi*(s)) ds."""
    return inner(SecondHarmonic(k1).values(phi_star.size), phi_star)


def sigma0_candidates(u0: np.ndarray, phi_star: np.ndarray, k1: int,
                      tol: Optional[float] = None) -> Sigma0Result:
    """Shifts sigma with Im int e(s + sigma) conj(phi*(s)) ds = 0 for e = exp(i k1 s).

    Returns sigma0 + j pi / k1 in [0, 2pi), with shifts that give the same
    solution (because of a smaller period of u0) listed once.
    """
    n = phi_star.size
    I = _harmonic_integral(phi_star, k1)
    # tan(k1 sigma0) = A / B with A = -Im I and B = Re I
    A, B = -I.imag, I.real
    if tol is None:
        tol = 1e-8 * l2(phi_star) * np.sqrt(2 * np.pi)
    if np.hypot(A, B) <= tol:
        return Sigma0Result([], False, None, float(A), float(B))
    theta = np.arctan2(A, B) % np.pi
    if np.isclose(theta, np.pi, rtol=0, atol=1e-15):
        theta = 0.0
    base = float(theta / k1)
    j_per = smallest_period(u0)
    period = 2 * np.pi / j_per
    cands: list = []
    for j in range(2 * k1):
        c = (base + j * np.pi / k1) % period
        if not any(abs(c - x) < 1e-9 or abs(abs(c - x) - period) < 1e-9 for x in cands):
            cands.append(c)
    return Sigma0Result(sorted(cands), True, base, float(A), float(B))


def sigma0_residual(phi_star: np.ndarray, sigma: float, k1: int) -> float:
    """Im int e(s + sigma) conj(phi*(s)) ds."""
    e = SecondHarmonic(k1).values(phi_star.size, sigma)
    return inner(e, phi_star).imag


class Transversality(NamedTuple):
    value: float
    ok: bool


def transversality(u0: np.ndarray, phi_star: np.ndarray, sigma0: float, e: SecondHarmonic) -> Transversality:
    """T = Im int e'(s + sigma0) conj(phi*(s)) ds."""
    if not isinstance(e, SecondHarmonic):
        raise ContractViolation("transversality is implemented for the second-harmonic forcing")
    n = phi_star.size
    value = inner(e.derivative(n, sigma0), phi_star).imag
    thresh = 1e-8 * e.k1 * l2(phi_star) * l2(e.values(n))
    return Transversality(float(value), bool(abs(value) > thresh))


# -- xi and the further condition ----------------------------------------------

class XiResult(NamedTuple):
    xi: np.ndarray
    lam: float
    residual: float


def solve_xi(p: Params, u0: np.ndarray, sigma0: float) -> XiResult:
    """Solve L xi = -i e(. + sigma0) with xi orthogonal to u0'.

    The bordered system [J, u0'; u0'^T, 0] [xi; lam] = [rhs; 0] is solved
    densely; ``lam`` measures the failure of solvability.  ``residual`` is
    ||L xi + i e(. + sigma0)||_2.
    """
    u0 = check_field(u0)
    n = u0.size
    J = jacobian(p.with_(f1=0.0), u0).toarray()
    c = pack(derivative(u0))
    rhs_c = -1j * p.forcing.values(n, sigma0)
    M = np.block([[J, c[:, None]], [c[None, :], np.zeros((1, 1))]])
    try:
        sol = la.solve(M, np.r_[pack(rhs_c), 0.0])
    except la.LinAlgError as exc:
        raise NonSimpleKernel(f"bordered system singular: {exc}") from None
    xi = unpack(sol[:-1])
    res = l2(unpack(J @ sol[:-1]) - rhs_c)
    return XiResult(xi, float(sol[-1]), float(res))


class FurtherCondition(NamedTuple):
    lhs: float
    rhs: float
    ok: bool
    dot_sigma0: float
    dot_mu0: float
    dot_mu0_sign: int


def further_condition(u0: np.ndarray, phi_star: np.ndarray, sigma0: float, xi: np.ndarray,
                      e: SecondHarmonic) -> FurtherCondition:
    du = derivative(u0)
    P = 2.0 * rpair(2 * u0 * np.abs(xi) ** 2 + np.conj(u0) * xi**2, phi_star)
    Q = rpair((du * np.conj(u0) + 2 * u0 * np.conj(du)) * du, phi_star)
    T = transversality(u0, phi_star, sigma0, e).value
    R = rpair(du, phi_star)
    lhs, rhs = P * Q, T * T
    ok = abs(lhs - rhs) > 1e-8 * max(abs(lhs), abs(rhs), 1.0)
    if abs(R) <= 1e-6 * l2(du) * l2(phi_star):
        raise NonSimpleKernel("u0' is in the range of the linearization; mu'(0) undefined")
    dot_sigma = -P / (2 * T) if T != 0 else float("nan")
    dot_mu = (T + 2 * dot_sigma * Q) / R
    sign = 0 if not ok else int(np.sign(dot_mu))
    return FurtherCondition(float(lhs), float(rhs), bool(ok), float(dot_sigma), float(dot_mu), sign)


# -- parity -----------------------------------------------------------------------

@dataclass
class ParityReport:
    period_index: int  # u0 has period 2pi / period_index
    adjoint_periodic: Optional[bool]
    adjoint_period_residual: Optional[float]
    u0_even: bool
    adjoint_even_part: Optional[float]  # relative size of the even part of phi*
    adjoint_odd: Optional[bool]

    @property
    def passed(self) -> bool:
        return all(v is not False for v in (self.adjoint_periodic, self.adjoint_odd))

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def parity_periodicity_check(u0: np.ndarray, phi_star: np.ndarray, omega: float,
                             tol: float = 1e-6) -> ParityReport:
    """Does phi* inherit the period and (for omega = 0) the parity of u0?

    Evenness of u0 is about s = 0.  phi* is determined up to a unit scalar;
    the relative size of its even part does not depend on that scalar.
    """
    u0 = check_field(u0)
    n = u0.size
    nu = l2(u0)
    j = smallest_period(u0)
    per_ok = per_res = None
    if 1 < j < n:
        per_res = l2(np.roll(phi_star, -(n // j)) - phi_star) / l2(phi_star)
        per_ok = bool(per_res < tol)
    even = bool(omega == 0 and np.ptp(np.abs(u0)) > 0 and l2(u0 - reflect(u0)) < 1e-8 * nu)
    even_part = odd_ok = None
    if even:
        even_part = float(l2(0.5 * (phi_star + reflect(phi_star))) / l2(phi_star))
        odd_ok = bool(even_part < tol)
    return ParityReport(j, per_ok, per_res, even, even_part, odd_ok)


# -- full report ----------------------------------------------------------------------

@dataclass
class BifurcationReport:
    linearization: LinearizationReport
    sigma0_candidates: list
    extra_ok: bool
    transversal: list
    transversality_values: list
    xi: Optional[np.ndarray] = None
    xi_lambda: Optional[float] = None
    further_cond_ok: Optional[bool] = None
    dot_sigma0: Optional[float] = None
    dot_mu0: Optional[float] = None
    further: list = field(default_factory=list)
    parity: Optional[ParityReport] = None
    flags: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "linearization": self.linearization.as_dict(),
            "sigma0_candidates": self.sigma0_candidates,
            "extra_ok": self.extra_ok,
            "transversal": self.transversal,
            "transversality_values": self.transversality_values,
            "xi_lambda": self.xi_lambda,
            "further_cond_ok": self.further_cond_ok,
            "dot_sigma0": self.dot_sigma0,
            "dot_mu0": self.dot_mu0,
            "further": [f._asdict() for f in self.further],
            "parity": None if self.parity is None else self.parity.as_dict(),
            "flags": self.flags,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


def bifurcation_report(p: Params, u0: np.ndarray, rank_tol: float = RANK_TOL) -> BifurcationReport:
    """Full analysis of a nonconstant f1 = 0 solution."""
    if not p.harmonic:
        raise ContractViolation("bifurcation analysis needs the second-harmonic forcing")
    p0 = p.with_(f1=0.0)
    lin = analyze_linearization(p0, u0, rank_tol)
    if lin.kernel_dim_estimate >= 2:
        raise NonSimpleKernel(f"kernel dimension estimate {lin.kernel_dim_estimate}")
    parity = parity_periodicity_check(u0, lin.adjoint_kernel_vec, p.omega)
    s0 = sigma0_candidates(u0, lin.adjoint_kernel_vec, p.k1)
    rep = BifurcationReport(lin, s0.candidates, s0.extra_ok, [], [], parity=parity)
    if not s0.extra_ok:
        rep.flags.append("PeriodicityObstruction")
        return rep
    e = p.forcing
    for sig in s0.candidates:
        tr = transversality(u0, lin.adjoint_kernel_vec, sig, e)
        rep.transversal.append(tr.ok)
        rep.transversality_values.append(tr.value)
    if not lin.simple:
        rep.flags.append("NotAlgebraicallySimple")
        return rep
    for sig in s0.candidates:
        xr = solve_xi(p0, u0, sig)
        fc = further_condition(u0, lin.adjoint_kernel_vec, sig, xr.xi, e)
        rep.further.append(fc)
        if rep.xi is None:
            rep.xi, rep.xi_lambda = xr.xi, xr.lam
            rep.dot_sigma0, rep.dot_mu0 = fc.dot_sigma0, fc.dot_mu0
    rep.further_cond_ok = all(f.ok for f in rep.further)
    return rep
