import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riesz_lab.atoms import make_atom
from riesz_lab.grid import Box, Cube, GridFunction, make_grid
from riesz_lab.kernel import BRParams, phi_radial
from riesz_lab.operators import (
    br_apply_convolution,
    br_apply_many,
    br_apply_spectral,
    br_maximal,
    dyadic_half_grid,
    frequency_grid,
    geometric_radii,
    hardy_littlewood,
    multiplier,
    refine_grid,
    support_halfwidth,
    wraparound_bound,
)
from riesz_lab.weights import Weight

BOX = Box(1, 16.0)


def bump(center=0.0, width=1.0, M=4096, box=BOX):
    def f(x):
        u = (x - center) / width
        out = np.zeros_like(x)
        inside = np.abs(u) < 1
        out[inside] = np.exp(-1 / (1 - u[inside] ** 2))
        return out

    return GridFunction.from_function(box, M, f)


def test_multiplier_range():
    xi = np.linspace(-3, 3, 601)
    m = multiplier(xi**2, 2.0, 0.7)
    assert np.all((m >= 0) & (m <= 1))
    assert np.all(m[np.abs(xi) >= 2] == 0)
    assert multiplier(np.array([0.0]), 2.0, 0.7)[0] == 1.0


def test_frequency_grid_is_dual_lattice():
    f = make_grid(Box(1, 2.0), 8)
    (xi,) = frequency_grid(f)
    np.testing.assert_allclose(xi[:4], [0, 0.25, 0.5, 0.75])


def test_constant_is_preserved():
    f = make_grid(BOX, 256).with_values(np.full(256, 3.25))
    g = br_apply_spectral(f, BRParams(dim=1, delta=0.5, R=2.0))
    np.testing.assert_allclose(g.values, 3.25, rtol=1e-14)


@pytest.mark.parametrize("k,R", [(8, 4.0), (70, 4.0), (64, 4.0), (3, 0.1)])
def test_single_mode(k, R):
    f = make_grid(BOX, 512)
    x = f.axis()
    xi0 = k / (2 * BOX.half_width)
    f = f.with_values(np.cos(2 * np.pi * xi0 * x))
    delta = 0.5
    g = br_apply_spectral(f, BRParams(dim=1, delta=delta, R=R))
    scale = max(0.0, 1 - xi0**2 / R**2) ** delta
    assert np.max(np.abs(g.values - scale * f.values)) < 1e-12


def test_single_mode_two_dimensions():
    f = make_grid(Box(2, 4.0), 64)
    x, y = f.coords()
    f = f.with_values(np.cos(2 * np.pi * (3 * x + 2 * y) / 8))
    g = br_apply_spectral(f, BRParams(dim=2, delta=1.5, R=1.0))
    xi_sq = (3 / 8) ** 2 + (2 / 8) ** 2
    assert np.max(np.abs(g.values - (1 - xi_sq) ** 1.5 * f.values)) < 1e-12


def test_spectral_rejects_complex():
    f = make_grid(BOX, 64).with_values(np.ones(64) * (1 + 1j))
    with pytest.raises(ValueError):
        br_apply_spectral(f, BRParams(dim=1, delta=0.5))


def test_output_spectrum_is_dominated(rng):
    f = make_grid(BOX, 1024).with_values(rng.standard_normal(1024))
    g = br_apply_spectral(f, BRParams(dim=1, delta=0.3, R=5.0))
    assert np.all(np.abs(np.fft.fft(g.values)) <= np.abs(np.fft.fft(f.values)) + 1e-10)


def test_routes_agree_on_bumps(rng):
    params = BRParams(dim=1, delta=0.5, R=4.0)
    for _ in range(3):
        f = bump(rng.uniform(-2, 2), rng.uniform(0.5, 2.0))
        a = br_apply_spectral(f, params).values
        c = br_apply_convolution(f, params)
        rel = np.linalg.norm(a - c.values) / np.linalg.norm(f.values)
        assert rel <= max(1e-3, c.meta["tail_estimate"])


def test_convolution_impulse_samples_kernel():
    M = 2048
    f = make_grid(BOX, M)
    h = f.spacing
    vals = np.zeros(M)
    vals[M // 2] = 1 / h
    g = br_apply_convolution(f.with_values(vals), BRParams(dim=1, delta=0.5, R=2.0))
    ref = 2.0 * phi_radial(2.0 * np.abs(f.axis()), BRParams(dim=1, delta=0.5))
    assert np.max(np.abs(g.values - ref)) < 20 * h


def test_convolution_window_tail_and_warning():
    f = bump(0.0, 0.5, M=1024)
    params = BRParams(dim=1, delta=0.5, R=4.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        g = br_apply_convolution(f, params, window=0.5)
    assert g.meta["tail_estimate"] > 0
    assert any("tail" in str(w.message) for w in caught)
    with pytest.warns(UserWarning, match="support"):
        br_apply_convolution(bump(0.0, 10.0, M=256), params)


def test_linearity(rng):
    params = BRParams(dim=1, delta=0.5, R=3.0)
    f, g = bump(-1.0, 1.0, M=512), bump(1.5, 0.7, M=512)
    a, b = 1.7, -0.4
    for route in (br_apply_spectral, br_apply_convolution):
        lhs = route(f.with_values(a * f.values + b * g.values), params).values
        rhs = a * route(f, params).values + b * route(g, params).values
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_radius_scaling_covariance():
    M, R, s = 1024, 3.0, 2.5
    f = bump(0.3, 1.0, M=M, box=Box(1, 8.0))
    Tf = br_apply_spectral(f, BRParams(dim=1, delta=0.5, R=R)).values
    # g(y) = f(y / s) on the box scaled by s; T_{R/s} g(s x) = T_R f(x)
    g = f.__class__(Box(1, 8.0 * s), M, f.values)
    Tg = br_apply_spectral(g, BRParams(dim=1, delta=0.5, R=R / s)).values
    assert np.max(np.abs(Tf - Tg)) < 1e-6


def test_wraparound_bound_shrinks_with_box():
    params = BRParams(dim=1, delta=0.5, R=4.0)
    small = wraparound_bound(bump(M=512, box=Box(1, 4.0)), params)
    large = wraparound_bound(bump(M=2048, box=Box(1, 16.0)), params)
    assert large < small


def test_support_halfwidth():
    f = bump(0.5, 1.0, M=1024)
    assert support_halfwidth(f) == pytest.approx(1.5, abs=2 * f.spacing)
    assert support_halfwidth(make_grid(BOX, 8)) == 0.0


def test_maximal_singleton_and_domination():
    f = bump(0.0, 1.0, M=1024)
    grid = dyadic_half_grid(0.5, 8.0, 9)
    Tstar = br_maximal(f, 0.5, grid).values
    stack = br_apply_many(f, 0.5, grid)
    assert np.all(Tstar >= np.abs(stack).max(axis=0) - 1e-15)
    single = br_maximal(f, 0.5, [2.0]).values
    ref = np.abs(br_apply_spectral(f, BRParams(dim=1, delta=0.5, R=2.0)).values)
    np.testing.assert_allclose(single, ref, atol=1e-14)
    with pytest.raises(ValueError):
        br_maximal(f, 0.5, [])


@pytest.mark.parametrize("seed", [0, 3])
def test_maximal_refinement_saturates(seed):
    # 16 dyadic-half radii 2^(k/2)/r against their 31-point midpoint refinement
    w = Weight.constant(BOX, 4096)
    a = make_atom(Cube((0.5,), 1.0), w, 2 / 3, 2.0, 0, seed=seed)
    g = 2.0 ** (np.arange(-4, 12) / 2)
    coarse = br_maximal(a.samples, 0.5, g).values
    fine = br_maximal(a.samples, 0.5, refine_grid(g)).values
    assert np.max(fine - coarse) < 0.02 * np.max(fine)


def test_refine_grid_superset():
    g = dyadic_half_grid(1.0, 16.0, 5)
    r = refine_grid(g)
    assert r.size == 9
    np.testing.assert_array_equal(r[::2], g)
    np.testing.assert_allclose(r[1::2], np.sqrt(g[:-1] * g[1:]))
    with pytest.raises(ValueError):
        dyadic_half_grid(0.0, 1.0, 3)


def test_hardy_littlewood_constant():
    f = make_grid(Box(2, 1.0), 32).with_values(np.ones((32, 32)))
    M = hardy_littlewood(f, geometric_radii(f))
    np.testing.assert_allclose(M.values, 1.0, rtol=1e-14)


def test_hardy_littlewood_dominates_samples(rng):
    f = make_grid(BOX, 256).with_values(rng.standard_normal(256))
    M = hardy_littlewood(f, [f.spacing, 1.0, 4.0])
    # window sums come from cumulative sums: rounding is relative to the running total
    assert np.all(M.values >= np.abs(f.values) - 1e-12)


def test_hardy_littlewood_indicator_closed_form():
    box = Box(1, 16.0)
    M_pts = 4096
    f = GridFunction.from_function(box, M_pts, lambda x: ((x >= 0) & (x < 1)).astype(float))
    Mf = hardy_littlewood(f, geometric_radii(f, ratio=1.01)).values
    x = f.axis()
    sel = (np.abs(x) >= 4) & (np.abs(x) <= 8)
    # the shortest centred interval holding [0, 1] reaches its far end; for
    # x < -(L - 1)/2 that interval is clipped by the box
    xs = x[sel]
    L = box.half_width
    length = np.where(xs < 0, 1 - np.maximum(2 * xs - 1, -L), 2 * xs)
    exact = 1 / length
    assert np.max(np.abs(Mf[sel] / exact - 1)) < 0.02
    # far out both sides approach 1/(2|x|)
    far = np.abs(x) >= 6
    assert np.max(np.abs(Mf[sel & far] * 2 * np.abs(x[sel & far]) - 1)) < 0.2


def test_geometric_radii_cover_box():
    f = make_grid(BOX, 64)
    r = geometric_radii(f)
    assert r[0] == f.spacing and r[-1] == 4 * BOX.half_width


@settings(max_examples=25, deadline=None)
@given(delta=st.floats(0.1, 2.0), R=st.floats(0.2, 20.0), c=st.floats(-5, 5))
def test_zero_frequency_identity(delta, R, c):
    f = make_grid(BOX, 128).with_values(np.full(128, c))
    g = br_apply_spectral(f, BRParams(dim=1, delta=delta, R=R))
    assert np.max(np.abs(g.values - c)) <= 1e-12 * max(1.0, abs(c))
