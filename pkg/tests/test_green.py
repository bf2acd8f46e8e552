import math

import numpy as np
import pytest

from greenmeasure.errors import (
    DimensionTooSmall,
    HeavyTailUnsupported,
    NotConverged,
    PreconditionError,
    SingularAtCoincidence,
    ZeroModeUncertain,
)
from greenmeasure.functions import CompactBump, GaussianBump, ZeroFunction
from greenmeasure.green import (
    bm_green,
    bm_potential,
    g_regular_fourier,
    g_regular_series,
    gauss_g0_closed,
    heat_kernel_time_integral,
    kernel_field,
    kernel_spectrum,
    newtonian_constant,
    potential,
    resolvent_apply,
    transition_density,
    transition_spectrum,
)
from greenmeasure.kernels import JumpKernel
from greenmeasure.spectral import GridSpec, RealField, convolve

GAUSS3 = JumpKernel("gauss", 3, 1.0)
SMALL = GridSpec(3, 32, 8.0)
MEDIUM = GridSpec(3, 64, 10.0)


# --- closed form -----------------------------------------------------------

def test_closed_form_origin():
    assert gauss_g0_closed(1.0, 3, [0, 0, 0]) == pytest.approx(0.165867, abs=1e-5)
    assert gauss_g0_closed(1.0, 3, 0.0) == pytest.approx((2 * math.pi) ** -1.5 * 2.612375348685488, rel=1e-10)


@pytest.mark.parametrize("b, d, zeta_half_d", [(2.0, 3, 2.612375348685488), (0.5, 4, math.pi**2 / 6), (1.0, 6, 1.2020569031595942)])
def test_closed_form_origin_general(b, d, zeta_half_d):
    assert gauss_g0_closed(b, d, np.zeros(d)) == pytest.approx((b / (2 * math.pi)) ** (d / 2) * zeta_half_d, rel=1e-10)


def test_closed_form_matches_brute_force_sum():
    # direct sum to 2e6 terms plus the integral tail of k^-3/2
    k = np.arange(1, 2_000_001, dtype=float)
    for r in (0.5, 2.0, 5.0):
        c = r * r / 2
        head = np.sum((k ** -1.5 * np.exp(-c / k))[::-1])
        tail = 2 / math.sqrt(k[-1] + 0.5)
        ref = (2 * math.pi) ** -1.5 * (head + tail)
        assert gauss_g0_closed(1.0, 3, r) == pytest.approx(ref, rel=1e-7)


def test_closed_form_far_field():
    for r in (6.0, 8.0, 10.0):
        assert abs(gauss_g0_closed(1.0, 3, r) * 2 * math.pi * r - 1) < 0.05


def test_closed_form_discounted():
    k = np.arange(1, 400, dtype=float)
    ref = np.sum((2 * math.pi * k) ** -1.5 * 1.1**-k)
    assert gauss_g0_closed(1.0, 3, 0.0, lam=0.1) == pytest.approx(ref, rel=1e-12)


def test_closed_form_dimension_gate():
    with pytest.raises(DimensionTooSmall):
        gauss_g0_closed(1.0, 2, [0, 0])


# --- spectral and series solvers --------------------------------------------

def test_fourier_matches_closed_form_discounted():
    est = g_regular_fourier(GAUSS3, GridSpec(3, 128, 10.0), 0.1)
    assert est.value_at([0, 0, 0]) == pytest.approx(gauss_g0_closed(1.0, 3, 0.0, lam=0.1), rel=1e-3)
    assert est.atom_weight == 1 / 1.1
    est.check_invariants()


def test_fourier_spectral_identity():
    est = g_regular_fourier(GAUSS3, SMALL, 0.3)
    ahat = kernel_spectrum(GAUSS3, SMALL).values.real
    assert np.abs(est.spectrum.values * (1.3 - ahat) - ahat).max() < 1e-10


def test_large_lambda_vanishes():
    est = g_regular_fourier(GAUSS3, SMALL, 1e8)
    assert np.abs(est.regular_part.values).max() < 1e-8


def test_series_first_term_is_kernel():
    est = g_regular_series(GAUSS3, SMALL, 0.0, K=1, strict=False)
    a = kernel_field(GAUSS3, SMALL).values
    # K = 1 at lambda = 0 drops only the zero mode of a
    np.testing.assert_allclose(est.regular_part.values, a - 1 / (SMALL.size * SMALL.cell_volume), atol=1e-15)
    est1 = g_regular_series(GAUSS3, SMALL, 1.0, K=1, strict=False)
    np.testing.assert_allclose(est1.regular_part.values, a / 2, atol=1e-15)


def test_series_matches_fourier():
    fourier = g_regular_fourier(GAUSS3, MEDIUM, 0.5)
    series = g_regular_series(GAUSS3, MEDIUM, 0.5, K=60, strict=False)
    gap = np.abs(fourier.regular_part.values - series.regular_part.values).max()
    assert gap <= max(1e-8, series.truncation_error_bound)


def test_series_bound_is_rigorous():
    fourier = g_regular_fourier(GAUSS3, SMALL, 0.2)
    for K in (5, 20, 40):
        series = g_regular_series(GAUSS3, SMALL, 0.2, K=K, strict=False, tol=0)
        gap = np.abs(fourier.regular_part.values - series.regular_part.values).max()
        assert gap <= series.truncation_error_bound * (1 + 1e-9) + 1e-15


def test_series_partial_sums_nondecreasing():
    est = g_regular_series(GAUSS3, SMALL, 0.2, K=30, strict=False, track=[(0, 0, 0), (2.0, 1.0, 0.0)])
    for hist in est.metadata["partial_sums"]:
        assert np.all(np.diff(hist) >= -1e-15)


def test_series_not_converged():
    with pytest.raises(NotConverged):
        g_regular_series(GAUSS3, SMALL, 0.01, K=5, tol=1e-10)


def test_lambda_monotone():
    vals = [g_regular_fourier(GAUSS3, SMALL, lam).regular_part.values for lam in (2.0, 0.5, 0.1)]
    assert np.all(vals[0] <= vals[1] + 1e-12)
    assert np.all(vals[1] <= vals[2] + 1e-12)


def test_zero_lambda_policies():
    grid = MEDIUM
    excl = g_regular_fourier(GAUSS3, grid, 0.0)
    assert excl.zero_mode_uncertain and excl.zero_mode_policy == "excluded"
    floor = g_regular_fourier(GAUSS3, grid, 0.0, zero_mode="lambda_floor", lambda_floor=(0.004, 0.002, 0.001))
    assert floor.zero_mode_policy == "lambda_floor"
    # both drop the k = 0 mode, so differences agree once the floors sit below the spectral gap
    x, ref = (2.0 * 0.3125, 0, 0), (0, 0, 0)
    d_excl = excl.value_at(x) - excl.value_at(ref)
    d_floor = floor.value_at(x) - floor.value_at(ref)
    assert d_floor == pytest.approx(d_excl, rel=1e-4)
    closed = gauss_g0_closed(1.0, 3, x) - gauss_g0_closed(1.0, 3, ref)
    # zero-mean periodic background of -D Laplacian: + r^2 / (6 D side^3), D = sigma^2 / 6
    background = x[0] ** 2 / (6 * 0.5 * (2 * grid.L) ** 3)
    assert d_excl - background == pytest.approx(closed, rel=1e-4)


def test_dimension_and_tail_gates():
    with pytest.raises(DimensionTooSmall):
        g_regular_fourier(JumpKernel("gauss", 2, 1.0), GridSpec(2, 32, 8.0), 0.0)
    with pytest.raises(HeavyTailUnsupported):
        g_regular_fourier(JumpKernel("heavy", 3, 1.0), SMALL, 0.5)
    est = g_regular_fourier(JumpKernel("heavy", 3, 1.0), SMALL, 0.5, allow_heavy=True)
    assert est.metadata["periodized"]


def test_export(tmp_path):
    est = g_regular_fourier(GAUSS3, GridSpec(3, 16, 8.0), 0.5)
    est.export(tmp_path / "g.csv", tmp_path / "g.json")
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "x1,x2,x3,g"
    import json

    side = json.loads((tmp_path / "g.json").read_text())
    assert side["method"] == "fourier" and side["lambda"] == 0.5 and side["kernel"] == "gauss:b=1,dim=3"


# --- resolvent and semigroup ----------------------------------------------------

def test_resolvent_identity():
    f = GaussianBump(3)
    rf = resolvent_apply(GAUSS3, f, 0.5, MEDIUM)
    af = convolve(kernel_field(GAUSS3, MEDIUM), rf, guard=False)
    resid = 1.5 * rf.values - af.values - f.on_grid(MEDIUM).values
    assert np.abs(resid).max() <= 1e-6 * f.sup_norm


def test_resolvent_trivial_inputs():
    assert np.all(resolvent_apply(GAUSS3, ZeroFunction(3), 0.5, SMALL).values == 0)
    const = RealField(SMALL, np.full(SMALL.shape, 2.0))
    np.testing.assert_allclose(resolvent_apply(GAUSS3, const, 0.25, SMALL).values, 8.0, rtol=1e-12)
    with pytest.raises(PreconditionError):
        resolvent_apply(GAUSS3, const, 0.0, SMALL)


def test_potential_equals_resolvent():
    f = GaussianBump(3)
    est = g_regular_fourier(GAUSS3, MEDIUM, 0.5)
    x = (0.3125, 0, 0)
    assert potential(est, f, x) == pytest.approx(resolvent_apply(GAUSS3, f, 0.5, MEDIUM).at(x), abs=1e-8)
    assert potential(est, ZeroFunction(3), x) == 0


def test_potential_zero_mode_policy():
    est = g_regular_fourier(GAUSS3, MEDIUM, 0.0)
    with pytest.raises(ZeroModeUncertain):
        potential(est, GaussianBump(3), (0, 0, 0))
    # a narrow unit-mass bump at the origin, probed far away, sees G_0
    w = 0.3
    bump = GaussianBump(3, width=w, height=(2 * math.pi * w * w) ** -1.5)
    x = (3.125, 0, 0)
    anchor = ((0, 0, 0), gauss_g0_closed(1.0, 3, 0.0))
    v = potential(est, bump, x, anchor=anchor)
    assert v == pytest.approx(gauss_g0_closed(1.0, 3, x), rel=0.02)


def test_transition_density():
    td0 = transition_density(GAUSS3, 0.0, SMALL)
    assert td0.atom_weight == 1.0 and np.abs(td0.density_part.values).max() < 1e-12
    for t in (0.5, 1.0, 2.0):
        td = transition_density(GAUSS3, t, SMALL)
        assert abs(td.total_mass() - 1) < 1e-8
        assert td.density_part.values.min() > -1e-10
    assert transition_density(GAUSS3, 1.0, SMALL).atom_weight == pytest.approx(0.367879441, abs=1e-9)
    p7 = transition_spectrum(GAUSS3, 0.7, SMALL).values
    assert np.abs(p7 * p7 - transition_spectrum(GAUSS3, 1.4, SMALL).values).max() < 1e-12


# --- Brownian motion -----------------------------------------------------------

def test_heat_kernel_integral():
    assert heat_kernel_time_integral(1.0, 3) == pytest.approx(1 / (4 * math.pi), rel=1e-6)
    assert heat_kernel_time_integral(1.0, 4) == pytest.approx(0.0253302959, rel=1e-6)
    scaled = [heat_kernel_time_integral(r, 3) * r for r in (0.5, 3.0, 40.0)]
    assert max(scaled) - min(scaled) < 1e-8


def test_newtonian_constant():
    assert newtonian_constant(3) == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert newtonian_constant(4) == pytest.approx(1 / (4 * math.pi**2), rel=1e-14)
    with pytest.raises(DimensionTooSmall):
        newtonian_constant(2)


def test_bm_green():
    assert bm_green([1, 0, 0], [0, 0, 0], 3) == pytest.approx(0.0795775, abs=1e-7)
    assert bm_green([0, 2, 0], [0, 0, 0], 3) == pytest.approx(0.0397887, abs=1e-7)
    assert bm_green([0, 0, 0, 2], [0, 0, 0, 0], 4) / bm_green([0, 0, 0, 1], [0, 0, 0, 0], 4) == pytest.approx(0.25, abs=1e-14)
    with pytest.raises(SingularAtCoincidence):
        bm_green([1, 1, 1], [1, 1, 1], 3)


def test_bm_potential():
    res = bm_potential(GaussianBump(3), [0, 0, 0], 3)
    assert res.value == pytest.approx(1.0, abs=1e-8)
    assert abs(res.value) <= res.cl_bound
    assert bm_potential(ZeroFunction(3), [0, 0, 0], 3).value == 0
    bump = CompactBump(3, radius=0.5, center=(10.0, 0, 0))
    far = bm_potential(bump, [0, 0, 0], 3)
    assert far.value == pytest.approx(bump.integral / (4 * math.pi * 10), rel=1e-3)


def test_bm_potential_offcenter_matches_shell_theorem():
    # outside a radial mass distribution the potential is m C(3) / |x| up to the tail beyond |x|
    f = GaussianBump(3, width=0.5)
    v = bm_potential(f, [0, 0, 6.0], 3).value
    assert v == pytest.approx(f.integral / (4 * math.pi * 6), rel=1e-8)
