"""Central finite differences on a uniform periodic grid.

Complex fields are packed into real vectors with ``x[2j] = Re u_j`` and
``x[2j+1] = Im u_j``; the Jacobian acts on that real space because
``|u|^2 u`` is not complex-differentiable.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .model import Params, check_field, residual


@dataclass(frozen=True)
class DerivativeScheme:
    n: int

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.n

    def d1(self, u: np.ndarray) -> np.ndarray:
        return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * self.h)

    def d2(self, u: np.ndarray) -> np.ndarray:
        return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / self.h**2

    def symbol_d1(self, m: int) -> complex:
        return 1j * np.sin(m * self.h) / self.h

    def symbol_d2(self, m: int) -> float:
        return -(2.0 - 2.0 * np.cos(m * self.h)) / self.h**2


def pack(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    x = np.empty(2 * u.size)
    x[0::2] = u.real
    x[1::2] = u.imag
    return x


def unpack(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[0::2] + 1j * x[1::2]


@lru_cache(maxsize=16)
def _difference_bands(n: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    h = 2.0 * np.pi / n
    eye = sp.eye(n, format="csr")
    up = sp.diags([np.ones(n - 1), [1.0]], [1, -(n - 1)], shape=(n, n), format="csr")
    down = up.T.tocsr()
    D1 = (up - down) / (2 * h)
    D2 = (up - 2 * eye + down) / h**2
    return D1.tocsr(), D2.tocsr()


@lru_cache(maxsize=32)
def _linear_part(n: int, d: float, omega: float) -> sp.csr_matrix:
    D1, D2 = _difference_bands(n)
    rot = sp.csr_matrix(np.array([[0.0, -1.0], [1.0, 0.0]]))
    return (sp.kron(D2, -d * sp.eye(2)) + sp.kron(D1, omega * rot)).tocsr()


def residual_vec(p: Params, u: np.ndarray) -> np.ndarray:
    u = check_field(u)
    return pack(residual(p, u, DerivativeScheme(u.size)))


def local_blocks(p: Params, u: np.ndarray) -> sp.csr_matrix:
    """Pointwise 2x2 blocks of (zeta - i - 2|u|^2) phi - u^2 conj(phi)."""
    n = u.size
    c = p.zeta - 2.0 * np.abs(u) ** 2
    w = -(u**2)
    a, b = w.real, w.imag
    blocks = np.empty((n, 2, 2))
    blocks[:, 0, 0] = c + a
    blocks[:, 0, 1] = 1.0 + b
    blocks[:, 1, 0] = -1.0 + b
    blocks[:, 1, 1] = c - a
    return sp.bsr_matrix((blocks, np.arange(n), np.arange(n + 1)), shape=(2 * n, 2 * n)).tocsr()


def jacobian(p: Params, u: np.ndarray) -> sp.csr_matrix:
    """Exact derivative of :func:`residual_vec` with respect to the packed state."""
    u = check_field(u)
    return (_linear_part(u.size, float(p.d), float(p.omega)) + local_blocks(p, u)).tocsr()


def param_derivative(p: Params, u: np.ndarray, name: str) -> np.ndarray:
    """Derivative of the packed residual with respect to ``f1`` or ``zeta``."""
    if name == "f1":
        return pack(1j * p.forcing.values(u.size))
    if name == "zeta":
        return pack(u)
    raise ValueError(f"unknown continuation parameter {name!r}")


class Norms(NamedTuple):
    l2: float
    l2_deriv: float
    linf: float


def inner(v: np.ndarray, w: np.ndarray) -> complex:
    """Periodic rectangle rule for the integral of v * conj(w) over [0, 2pi)."""
    return complex(np.sum(v * np.conj(w)) * 2.0 * np.pi / v.size)


def l2(u: np.ndarray) -> float:
    return float(np.sqrt(2.0 * np.pi / u.size * np.sum(np.abs(u) ** 2)))


def norms(u: np.ndarray) -> Norms:
    u = np.asarray(u, dtype=complex)
    scheme = DerivativeScheme(u.size)
    return Norms(l2(u), l2(scheme.d1(u)), float(np.max(np.abs(u))) if u.size else 0.0)
