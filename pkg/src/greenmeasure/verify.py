"""Cross-method invariant suite run by ``greenmeasure verify``.

Each check returns a :class:`CheckResult`; the suite passes only when all do.
Grids are kept small so the core suite finishes in seconds.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .functions import GaussianBump
from .green import (
    g_regular_fourier,
    g_regular_series,
    gauss_g0_closed,
    heat_kernel_time_integral,
    kernel_field,
    newtonian_constant,
    resolvent_apply,
    transition_density,
    transition_spectrum,
)
from .kernels import JumpKernel, validate_kernel
from .montecarlo import MCConfig, estimate_potential_cpp
from .special import zeta
from .spectral import GridSpec, convolve
from .errors import SpecError

__all__ = ["CheckResult", "run_suite", "SUITES"]

_GRID_POINTS = {1: 1024, 2: 128, 3: 64, 4: 32}


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check(name, value, threshold) -> CheckResult:
    value = float(value)
    return CheckResult(name, value, float(threshold), bool(value <= threshold))


def _core(d: int):
    if d not in _GRID_POINTS:
        raise SpecError(f"core suite supports d in 1..4, got {d}")
    grid = GridSpec(d, _GRID_POINTS[d], 10.0)
    kernel = JumpKernel("gauss", d, 1.0)
    f = GaussianBump(d)
    lam = 0.5
    origin = np.zeros(d)

    mom = validate_kernel(kernel)
    yield _check("kernel mass", abs(mom.mass - 1), 1e-6)

    td = transition_density(kernel, 1.0, grid)
    yield _check("conservation at t=1", abs(td.total_mass() - 1), 1e-8)

    p7 = transition_spectrum(kernel, 0.7, grid).values
    p14 = transition_spectrum(kernel, 1.4, grid).values
    yield _check("Chapman-Kolmogorov (0.7, 0.7)", np.abs(p7 * p7 - p14).max(), 1e-12)

    rf = resolvent_apply(kernel, f, lam, grid)
    af = convolve(kernel_field(kernel, grid), rf, guard=False)
    resid = (1 + lam) * rf.values - af.values - f.on_grid(grid).values
    yield _check("resolvent identity", np.abs(resid).max() / f.sup_norm, 1e-6)

    fourier = g_regular_fourier(kernel, grid, lam)
    series = g_regular_series(kernel, grid, lam, K=400, tol=1e-10)
    scale = np.abs(fourier.regular_part.values).max()
    gap = np.abs(fourier.regular_part.values - series.regular_part.values).max() / scale
    yield _check("fourier vs series", gap, 1e-8)

    closed = gauss_g0_closed(1.0, d, origin, lam=lam)
    yield _check("fourier vs closed form at 0", abs(fourier.value_at(origin) - closed) / closed, 1e-3)

    z = zeta(2.0)
    yield _check("zeta(2)", abs(z.value - math.pi**2 / 6), 1e-12)

    mc = estimate_potential_cpp(kernel, f, origin, MCConfig(paths=4000, horizon=30, lam=lam, seed=7))
    diff = abs(mc.mean - rf.at(origin))
    yield _check("Monte Carlo vs resolvent (units of stderr)", (diff - mc.tail_bias_bound) / mc.stderr, 4.0)

    if d >= 3:
        c = newtonian_constant(d)
        yield _check("C(d) vs heat kernel", abs(heat_kernel_time_integral(1.0, d) - c) / c, 1e-6)


SUITES = {"core": _core}


def run_suite(name: str = "core", d: int = 3) -> list[CheckResult]:
    if name not in SUITES:
        raise SpecError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    return list(SUITES[name](d))
