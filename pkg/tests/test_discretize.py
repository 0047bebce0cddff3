import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from llecont.discretize import DerivativeScheme, jacobian, norms, pack, residual_vec, unpack
from llecont.model import Params, Sampled, grid
from llecont.trivial import param_point, turning_points


def manufactured_error(n, d=-0.1, zeta=3.0, omega=1.0):
    s = grid(n)
    w = np.exp(1j * s) * (1.2 + 0.3 * np.cos(s))
    w1 = 1j * w - 0.3 * np.exp(1j * s) * np.sin(s)
    w2 = 1j * w1 - 0.3 * (1j * np.exp(1j * s) * np.sin(s) + np.exp(1j * s) * np.cos(s))
    ft = 1j * (-d * w2 + 1j * omega * w1 + (zeta - 1j) * w - np.abs(w) ** 2 * w)
    p = Params(d=d, zeta=zeta, omega=omega, f0=0.0, f1=1.0, forcing=Sampled(ft))
    return np.max(np.abs(residual_vec(p, w)))


def observed_orders(ns=(64, 128, 256, 512)):
    errs = [manufactured_error(n) for n in ns]
    return np.log2(np.array(errs[:-1]) / np.array(errs[1:]))


def test_manufactured_solution_order():
    orders = observed_orders()
    assert np.all((orders >= 1.9) & (orders <= 2.1)), orders


def test_manufactured_derivatives_are_exact():
    # the analytic derivatives used above, checked against a spectral derivative
    n = 64
    s = grid(n)
    w = np.exp(1j * s) * (1.2 + 0.3 * np.cos(s))
    k = np.fft.fftfreq(n, 1.0 / n)
    w1 = np.fft.ifft(1j * k * np.fft.fft(w))
    np.testing.assert_allclose(w1, 1j * w - 0.3 * np.exp(1j * s) * np.sin(s), atol=1e-12)


def test_pack_roundtrip(rng):
    u = rng.normal(size=20) + 1j * rng.normal(size=20)
    np.testing.assert_array_equal(unpack(pack(u)), u)
    x = pack(u)
    assert x[0] == u[0].real and x[1] == u[0].imag


@pytest.mark.parametrize("m", [0, 1, 3, 17])
def test_stencil_symbols(m):
    ds = DerivativeScheme(64)
    e = np.exp(1j * m * grid(64))
    np.testing.assert_allclose(ds.d1(e), ds.symbol_d1(m) * e, atol=1e-12)
    np.testing.assert_allclose(ds.d2(e), ds.symbol_d2(m) * e, atol=1e-9)
    assert np.all(ds.d1(np.full(64, 3.0 + 1j)) == 0)


def test_residual_at_constants_and_zero():
    tp = param_point(0.37, 2.0)
    p = Params(d=-0.1, zeta=tp.zeta, omega=1.0, f0=2.0)
    assert np.max(np.abs(residual_vec(p, np.full(32, tp.u0)))) < 1e-13
    r = residual_vec(Params(d=-0.1, zeta=1.0, omega=1.0, f0=2.0), np.zeros(16, complex))
    assert np.all(r[0::2] == 0) and np.all(r[1::2] == 2)


def _fd_check(p, u, v, eps=1e-6):
    fd = (residual_vec(p, u + eps * v) - residual_vec(p, u - eps * v)) / (2 * eps)
    return np.max(np.abs(fd - jacobian(p, u) @ pack(v))) / np.max(np.abs(pack(v)))


def test_jacobian_directional_derivative_50_pairs():
    rng = np.random.default_rng(7)
    n = 64
    worst = 0.0
    for _ in range(50):
        p = Params(d=rng.uniform(0.05, 1) * rng.choice([-1, 1]), zeta=rng.normal(2, 1), omega=rng.normal(),
                   f0=rng.uniform(0, 2), f1=rng.normal())
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        worst = max(worst, _fd_check(p, u, v))
    assert worst <= 1e-6


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_jacobian_property(seed):
    rng = np.random.default_rng(seed)
    p = Params(d=-0.1, zeta=3.0, omega=1.0, f0=2.0, f1=0.2)
    u = 2 * (rng.normal(size=32) + 1j * rng.normal(size=32))
    v = rng.normal(size=32) + 1j * rng.normal(size=32)
    assert _fd_check(p, u, v) <= 1e-6


def test_jacobian_structure(rng):
    n = 16
    p = Params(d=0.4, zeta=1.2, omega=0.7, f0=1.0)
    u = rng.normal(size=n) + 1j * rng.normal(size=n)
    J, J0 = jacobian(p, u).toarray(), jacobian(p, np.zeros(n, complex)).toarray()
    diff = J - J0
    mask = np.zeros_like(diff, dtype=bool)
    for j in range(n):
        mask[2 * j:2 * j + 2, 2 * j:2 * j + 2] = True
    assert np.all(diff[~mask] == 0)
    # at u = 0 the operator is complex linear: J commutes with multiplication by i
    rot = np.kron(np.eye(n), [[0, -1], [1, 0]])
    np.testing.assert_allclose(J0 @ rot, rot @ J0, atol=1e-12)


def test_jacobian_singular_at_turning_point():
    t, z, r = turning_points(2.0).points[0]
    tp = param_point(t, 2.0)
    p = Params(d=-0.1, zeta=tp.zeta, omega=1.0, f0=2.0)
    J = jacobian(p, np.full(16, tp.u0)).toarray()
    # constant modes: sum the 2x2 blocks over the grid
    P = np.kron(np.ones((16, 1)), np.eye(2)) / 4
    assert abs(np.linalg.det(P.T @ J @ P)) < 1e-10
    tp = param_point(0.3, 2.0)
    J = jacobian(p.with_(zeta=tp.zeta), np.full(16, tp.u0)).toarray()
    assert abs(np.linalg.det(P.T @ J @ P)) > 1e-3


def test_norms_examples():
    c = 1.5 - 2j
    nr = norms(np.full(32, c))
    assert nr.l2 == pytest.approx(np.sqrt(2 * np.pi) * abs(c), rel=1e-14)
    assert nr.l2_deriv == 0 and nr.linf == pytest.approx(abs(c))
    n = 256
    h = 2 * np.pi / n
    nr = norms(np.exp(1j * grid(n)))
    assert nr.l2 == pytest.approx(np.sqrt(2 * np.pi), rel=1e-14)
    assert nr.l2_deriv == pytest.approx(np.sqrt(2 * np.pi) * np.sin(h) / h, rel=1e-13)
    assert norms(np.zeros(8, complex)) == (0.0, 0.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(-63, 63))
def test_l2_quadrature_exact_below_nyquist(m):
    assert norms(np.exp(1j * m * grid(128))).l2 == pytest.approx(np.sqrt(2 * np.pi), rel=1e-13)
