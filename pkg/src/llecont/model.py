"""Model parameters, forcing profiles and the stationary profile equation.

The traveling-wave profile ``u`` of the dual-pumped Lugiato-Lefever equation solves

    -d u'' + i omega u' + (zeta - i) u - |u|^2 u + i f(s) = 0,   u 2pi-periodic,

with forcing ``f(s) = f0 + f1 e(s)``.  Fields are stored as complex numpy arrays
sampled at ``s_j = 2 pi j / n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np


class ContractViolation(ValueError):
    """Raised when an input breaks a documented precondition."""


def grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def check_field(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 1:
        raise ContractViolation("field must be one-dimensional")
    n = u.size
    if n < 8 or n % 2:
        raise ContractViolation(f"grid size must be even and >= 8, got {n}")
    return u


@dataclass(frozen=True)
class SecondHarmonic:
    """e(s) = exp(i k1 s)."""

    k1: int

    def values(self, n: int, shift: float = 0.0) -> np.ndarray:
        return np.exp(1j * self.k1 * (grid(n) + shift))

    def derivative(self, n: int, shift: float = 0.0) -> np.ndarray:
        return 1j * self.k1 * self.values(n, shift)

    def at(self, s: float) -> complex:
        return complex(np.exp(1j * self.k1 * s))


@dataclass(frozen=True, eq=False)
class Sampled:
    """Grid values of an arbitrary (possibly discontinuous) profile e.

    Only nodal values are available; there is no interpolation.
    """

    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", check_field(self.samples).copy())
        self.samples.setflags(write=False)

    @property
    def n(self) -> int:
        return self.samples.size

    def values(self, n: int, shift: float = 0.0) -> np.ndarray:
        if n != self.n:
            raise ContractViolation(f"sampled forcing has {self.n} nodes, field has {n}")
        if shift:
            m = shift * n / (2 * np.pi)
            if abs(m - round(m)) > 1e-9:
                raise ContractViolation("sampled forcing can only be shifted by whole grid cells")
            return np.roll(self.samples, -int(round(m)))
        return np.array(self.samples)

    def at(self, s: float) -> complex:
        m = s * self.n / (2 * np.pi)
        j = int(round(m))
        if abs(m - j) > 1e-9:
            raise ContractViolation(f"s={s} is not a grid node of the sampled forcing")
        return complex(self.samples[j % self.n])


ForcingProfile = Union[SecondHarmonic, Sampled]


@dataclass(frozen=True)
class Params:
    d: float
    zeta: float
    omega: float
    f0: float
    f1: float = 0.0
    k1: int = 1
    forcing: Optional[ForcingProfile] = field(default=None, compare=False)

    def __post_init__(self):
        if self.d == 0:
            raise ContractViolation("dispersion d must be nonzero")
        if int(self.k1) != self.k1 or self.k1 < 1:
            raise ContractViolation("k1 must be a positive integer")
        object.__setattr__(self, "k1", int(self.k1))
        if self.forcing is None:
            object.__setattr__(self, "forcing", SecondHarmonic(self.k1))

    @property
    def harmonic(self) -> bool:
        return isinstance(self.forcing, SecondHarmonic)

    def with_(self, **changes) -> "Params":
        if "k1" in changes and self.harmonic and "forcing" not in changes:
            changes["forcing"] = None
        return replace(self, **changes)

    def forcing_values(self, n: int) -> np.ndarray:
        return self.f0 + self.f1 * self.forcing.values(n)

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "zeta": self.zeta,
            "omega": self.omega,
            "f0": self.f0,
            "f1": self.f1,
            "k1": self.k1,
            "forcing": "second_harmonic" if self.harmonic else "sampled",
        }


@dataclass(frozen=True)
class PhysicalDetunings:
    zeta: float
    zeta1: float
    d: float
    k1: int


def eval_forcing(p: Params, s: float) -> complex:
    return p.f0 + p.f1 * p.forcing.at(s)


def residual(p: Params, u: np.ndarray, derivs) -> np.ndarray:
    """Pointwise residual of the profile equation.

    ``derivs`` is a derivative scheme exposing ``d1`` and ``d2`` (see
    :class:`llecont.discretize.DerivativeScheme`).
    """
    u = check_field(u)
    f = p.forcing_values(u.size)
    return (
        -p.d * derivs.d2(u)
        + 1j * p.omega * derivs.d1(u)
        + (p.zeta - 1j) * u
        - np.abs(u) ** 2 * u
        + 1j * f
    )


def half_period_shift(n: int, k1: int) -> int:
    if n % (2 * k1):
        raise ContractViolation(f"n={n} is not divisible by 2*k1={2 * k1}; no exact pi/k1 shift")
    return n // (2 * k1)


def apply_R(p: Params, f1: float, u: np.ndarray) -> tuple[float, np.ndarray]:
    """Reflection (f1, u) -> (-f1, u(. + pi/k1)).

    Maps solutions to solutions whenever e(s + pi/k1) = -e(s).
    """
    u = check_field(u)
    if not p.harmonic:
        e = p.forcing.values(u.size)
        m = half_period_shift(u.size, p.k1)
        if not np.allclose(np.roll(e, -m), -e, atol=1e-12):
            raise ContractViolation("forcing lacks half-period antisymmetry")
    m = half_period_shift(u.size, p.k1)
    return -f1, np.roll(u, -m)


def omega_from_detunings(pd: PhysicalDetunings) -> float:
    if pd.k1 < 1:
        raise ContractViolation("k1 must be >= 1")
    return (pd.zeta - pd.zeta1 + pd.d * pd.k1**2) / pd.k1
