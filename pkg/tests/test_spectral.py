import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqglab.spectral import (
    PhysicalField, SpectralField, TorusGrid, advection_term, fractional_laplacian, from_function,
    inner, lebesgue_norm, load_snapshot, project_modes, random_field, riesz_velocity, save_snapshot,
    sobolev_norm, to_physical, to_spectral,
)

G64 = TorusGrid(64)
G16 = TorusGrid(16)


def rf(seed, grid=G64, kmax=np.inf):
    return random_field(grid, np.random.default_rng(seed), kmax=kmax)


def test_grid_validation():
    with pytest.raises(ValueError):
        TorusGrid(7)
    with pytest.raises(ValueError):
        TorusGrid(6)
    g = TorusGrid(64)
    assert g.retained[0, 0] == False  # noqa: E712
    assert np.abs(g.k1[g.retained]).max() == 31


def test_single_mode_transforms():
    c = G64.zeros().coeffs.copy()
    c[1, 0] = c[-1, 0] = 0.5
    f = SpectralField(G64, c)
    x, y = G64.x
    assert np.allclose(to_physical(f).values, np.cos(x), atol=1e-14)
    s = to_spectral(PhysicalField(G64, np.sin(y)))
    assert s.coeffs[0, 1] == pytest.approx(-0.5j)
    assert s.coeffs[0, -1] == pytest.approx(0.5j)
    mask = np.ones_like(s.coeffs, bool)
    mask[0, 1] = mask[0, -1] = False
    assert np.abs(s.coeffs[mask]).max() < 1e-15
    assert np.all(to_physical(G64.zeros()).values == 0)


def test_constant_field_removed():
    s = to_spectral(PhysicalField(G64, np.full((64, 64), 3.0)))
    assert np.abs(s.coeffs).max() == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_round_trip(seed):
    f = rf(seed)
    g = to_spectral(to_physical(f))
    assert np.abs(g.coeffs - f.coeffs).max() <= 1e-12 * np.abs(f.coeffs).max()


def test_invariants_checked():
    f = rf(1)
    f.check()
    bad = np.array(f.coeffs)
    bad[0, 0] = 1.0
    with pytest.raises(ValueError):
        SpectralField(G64, bad).check()
    with pytest.raises((ValueError, AttributeError, TypeError)):
        f.coeffs[1, 1] = 0.0


def test_fractional_laplacian_examples():
    c1 = from_function(G64, lambda x, y: np.cos(x))
    assert np.allclose(fractional_laplacian(c1, 1.5).coeffs, c1.coeffs, rtol=0, atol=1e-13)
    s = from_function(G64, lambda x, y: np.sin(x + y))
    out = fractional_laplacian(s, 1.5)
    assert np.allclose(out.coeffs, 2 ** 0.75 * s.coeffs, rtol=0, atol=1e-13)
    assert 2 ** 0.75 == pytest.approx(1.681793, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.floats(-2, 2), st.floats(-2, 2))
def test_fractional_laplacian_semigroup(seed, a, b):
    f = rf(seed)
    lhs = fractional_laplacian(fractional_laplacian(f, a), b).coeffs
    rhs = fractional_laplacian(f, a + b).coeffs
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


def test_riesz_examples():
    u = riesz_velocity(from_function(G64, lambda x, y: np.cos(x)))
    x, y = G64.x
    assert np.allclose(u.u1.values, 0, atol=1e-14) and np.allclose(u.u2.values, np.sin(x), atol=1e-14)
    u = riesz_velocity(from_function(G64, lambda x, y: np.sin(y)))
    assert np.allclose(u.u1.values, np.cos(y), atol=1e-14) and np.allclose(u.u2.values, 0, atol=1e-14)


def test_riesz_divergence_free():
    for seed in range(10):
        u = riesz_velocity(rf(seed))
        c1 = to_spectral(u.u1).coeffs
        c2 = to_spectral(u.u2).coeffs
        div = 1j * (G64.k1 * c1 + G64.k2 * c2)
        assert np.abs(div).max() < 1e-12


def _convolution_oracle(grid, theta):
    """Direct sum over interacting mode pairs, then 2/3 dealiasing."""
    c = theta.coeffs
    idx = [(i, j) for i in range(grid.n) for j in range(grid.n) if abs(c[i, j]) > 0]
    k1, k2, kinv = grid.k1, grid.k2, grid.kmod_inv
    out = np.zeros_like(c)
    for (a, b) in idx:
        u1 = 1j * k2[a, b] * kinv[a, b] * c[a, b]
        u2 = -1j * k1[a, b] * kinv[a, b] * c[a, b]
        for (p, q) in idx:
            g1, g2 = 1j * k1[p, q] * c[p, q], 1j * k2[p, q] * c[p, q]
            K1, K2 = k1[a, b] + k1[p, q], k2[a, b] + k2[p, q]
            out[int(K1) % grid.n, int(K2) % grid.n] += u1 * g1 + u2 * g2
    return out * grid.dealias_mask


def test_advection_against_convolution():
    f = from_function(G16, lambda x, y: np.cos(x) + np.cos(2 * y))
    got = advection_term(f).coeffs
    ref = _convolution_oracle(G16, f)
    assert np.abs(got - ref).max() < 1e-10
    assert np.abs(advection_term(from_function(G16, lambda x, y: np.cos(x))).coeffs).max() < 1e-15


def test_advection_random_band_limited_oracle():
    f = rf(3, G16, kmax=3)
    assert np.abs(advection_term(f).coeffs - _convolution_oracle(G16, f)).max() < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_advection_skew(seed):
    f = rf(seed)
    assert abs(inner(advection_term(f), f)) < 1e-10


def test_sobolev_examples():
    c1 = from_function(G64, lambda x, y: np.cos(x))
    for s in (-1.0, 0.0, 0.7, 2.0):
        assert sobolev_norm(c1, s) == pytest.approx(1 / math.sqrt(2), rel=1e-14)
    s2 = from_function(G64, lambda x, y: np.sin(2 * x))
    assert sobolev_norm(s2, 1.0) == pytest.approx(math.sqrt(2), rel=1e-14)
    f = rf(5)
    assert sobolev_norm(f, 0.5) == pytest.approx(sobolev_norm(fractional_laplacian(f, 0.5), 0.0), rel=1e-12)


def test_lebesgue_examples():
    c1 = from_function(G64, lambda x, y: np.cos(x))
    assert lebesgue_norm(c1, np.inf) == pytest.approx(1.0)
    assert lebesgue_norm(c1, 2) == pytest.approx(math.sqrt(2) * math.pi, rel=1e-13)
    # dense quadrature reference at n = 512
    xs = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    ref = (np.sum(np.cos(xs) ** 4) * (2 * np.pi / 512) * 2 * np.pi) ** 0.25
    assert lebesgue_norm(c1, 4) == pytest.approx(ref, rel=1e-12)
    assert ref == pytest.approx((3 * np.pi ** 2 / 2) ** 0.25, rel=1e-12)
    with pytest.raises(ValueError):
        lebesgue_norm(c1, 0.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_plancherel(seed):
    f = rf(seed)
    assert lebesgue_norm(to_physical(f), 2) == pytest.approx(2 * math.pi * sobolev_norm(f, 0), rel=1e-10)


def test_project_modes():
    f = from_function(G64, lambda x, y: np.cos(x) + np.cos(3 * y))
    assert np.allclose(project_modes(f, 2).coeffs, from_function(G64, lambda x, y: np.cos(x)).coeffs, atol=1e-15)
    g = rf(2)
    assert np.array_equal(project_modes(g, 32).coeffs, g.coeffs)
    for s in (0.0, 1.0):
        assert sobolev_norm(project_modes(g, 7.5), s) <= sobolev_norm(g, s)
    # inclusive cut-off: |k| = 1 exactly kept
    assert sobolev_norm(project_modes(from_function(G64, lambda x, y: np.cos(x)), 1.0), 0) > 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 2), st.floats(0, 1))
def test_gagliardo_nirenberg_coefficient_form(seed, beta, frac):
    f = rf(seed)
    beta = max(beta, 1e-3)
    alpha = frac * beta
    lhs = sobolev_norm(f, alpha)
    rhs = sobolev_norm(f, beta) ** (alpha / beta) * sobolev_norm(f, 0) ** (1 - alpha / beta)
    assert lhs <= rhs * (1 + 1e-12)


def test_random_field_contract():
    f = random_field(G64, np.random.default_rng(0), kmax=4, sigma=1.0, norm=2.0)
    assert sobolev_norm(f, 1.0) == pytest.approx(2.0)
    assert np.all(f.coeffs[G64.kmod > 4] == 0)
    f.check()


def test_snapshot_round_trip(tmp_path):
    f = rf(9)
    p = tmp_path / "f.sqgf"
    save_snapshot(p, f)
    raw = p.read_bytes()
    assert raw[:4] == b"SQGF" and len(raw) == 12 + 16 * 64 * 64
    g = load_snapshot(p)
    assert np.array_equal(g.coeffs, f.coeffs)
    assert not (tmp_path / "f.sqgf.partial").exists()


def test_snapshot_validation(tmp_path):
    p = tmp_path / "bad.sqgf"
    p.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ValueError):
        load_snapshot(p)
    q = tmp_path / "mean.sqgf"
    save_snapshot(q, rf(1))
    data = bytearray(q.read_bytes())
    data[12:20] = np.float64(1.0).tobytes()  # real part of the (0, 0) coefficient
    q.write_bytes(bytes(data))
    with pytest.raises(ValueError):
        load_snapshot(q)
