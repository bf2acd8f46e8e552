import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from greenmeasure.audit import loglog_slope
from greenmeasure.green import g_regular_fourier, kernel_spectrum
from greenmeasure.kernels import JumpKernel, kernel_density, parse_kernel_spec
from greenmeasure.special import partial_zeta, zeta
from greenmeasure.spectral import GridSpec, RealField, dft_forward, dft_inverse, spectral_power

GRID2 = GridSpec(2, 16, 3.0)
finite = st.floats(-1e3, 1e3, allow_nan=False)

kernels = st.one_of(
    st.builds(JumpKernel, st.just("gauss"), st.integers(1, 4), st.floats(0.2, 5.0)),
    st.builds(JumpKernel, st.just("exp"), st.integers(1, 4), st.floats(0.2, 5.0)),
    st.builds(JumpKernel, st.just("moderate"), st.integers(1, 4), st.floats(2.1, 6.0), st.floats(0.5, 2.0)),
    st.builds(JumpKernel, st.just("heavy"), st.integers(1, 4), st.floats(0.1, 1.9), st.floats(0.5, 2.0)),
)


@given(arrays(float, GRID2.shape, elements=finite))
def test_transform_round_trip(values):
    f = RealField(GRID2, values)
    back = dft_inverse(dft_forward(f)).values
    assert np.abs(back - values).max() <= 1e-10 * max(np.abs(values).max(), 1e-300) + 1e-300


@given(arrays(float, GRID2.shape, elements=finite), arrays(float, GRID2.shape, elements=finite))
def test_transform_is_linear(a, b):
    fa, fb = dft_forward(RealField(GRID2, a)).values, dft_forward(RealField(GRID2, b)).values
    fab = dft_forward(RealField(GRID2, a + b)).values
    scale = max(np.abs(fa).max(), np.abs(fb).max(), 1.0)
    assert np.abs(fab - fa - fb).max() <= 1e-12 * scale


@given(kernels, st.integers(0, 10_000))
def test_density_symmetric_and_bounded(kernel, seed):
    x = np.random.default_rng(seed).normal(size=(50, kernel.dim)) * 3
    a = kernel_density(kernel, x)
    assert np.all(a >= 0) and np.all(a <= kernel.sup_density * (1 + 1e-12))
    np.testing.assert_allclose(a, kernel_density(kernel, -x), rtol=1e-12)


@given(kernels)
def test_spec_string_round_trip(kernel):
    assert parse_kernel_spec(kernel.spec_string()) == kernel


@given(st.integers(1, 6), st.integers(1, 6))
def test_spectral_power_additive(j, k):
    spec = kernel_spectrum(JumpKernel("exp", 2, 1.0), GRID2)
    lhs = spectral_power(spec, j + k).values
    rhs = spectral_power(spec, j).values * spectral_power(spec, k).values
    assert np.abs(lhs - rhs).max() < 1e-12


@given(st.floats(1.05, 8.0), st.integers(1, 5000))
def test_zeta_tail_bracket(s, n):
    gap = zeta(s).value - partial_zeta(s, n)
    assert -1e-12 <= gap <= n ** (1 - s) / (s - 1) + 1e-12


@given(st.floats(0.1, 4.0), st.floats(0.01, 100.0))
def test_slope_exact_on_power_laws(p, amp):
    r = np.geomspace(1.0, 30.0, 5)
    assert abs(loglog_slope(r, amp * r**-p)["value"] + p) < 1e-6


@given(st.floats(0.05, 3.0), st.floats(0.0, 2.0))
def test_lambda_monotonicity(lam, extra):
    grid = GridSpec(3, 16, 6.0)
    k = JumpKernel("gauss", 3, 1.0)
    hi = g_regular_fourier(k, grid, lam + extra).regular_part.values
    lo = g_regular_fourier(k, grid, lam).regular_part.values
    assert np.all(hi <= lo + 1e-12)
