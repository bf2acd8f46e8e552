"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` to see the lines as
they are produced; a summary block is also printed at the end of any pytest
run that includes this file.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np

from greenmeasure.audit import audit_gauss_bound, zeta
from greenmeasure.cli import main
from greenmeasure.functions import GaussianBump
from greenmeasure.green import (
    bm_green,
    bm_potential,
    g_regular_fourier,
    g_regular_series,
    gauss_g0_closed,
    heat_kernel_time_integral,
    kernel_field,
    resolvent_apply,
    transition_density,
    transition_spectrum,
)
from greenmeasure.kernels import JumpKernel
from greenmeasure.montecarlo import MCConfig, estimate_potential_bm, estimate_potential_cpp
from greenmeasure.spectral import GridSpec, convolve

GAUSS3 = JumpKernel("gauss", 3, 1.0)
GRID = GridSpec(3, 128, 10.0)


def cli(*argv):
    return subprocess.run([sys.executable, "-m", "greenmeasure", *argv], capture_output=True, text=True)


def test_01_gaussian_green_at_origin(acceptance):
    t0 = time.perf_counter()
    value = gauss_g0_closed(1.0, 3, [0.0, 0.0, 0.0])
    elapsed = time.perf_counter() - t0
    oracle = (2 * math.pi) ** -1.5 * zeta(1.5).value
    ok = abs(value - 0.165867) <= 1e-5 and abs(value - oracle) <= 1e-10 and elapsed < 1.0
    acceptance(1, ok, f"G0(0) = {value:.8f} (zeta oracle {oracle:.8f}, target 0.165867 +- 1e-5), {elapsed:.3f}s")
    assert ok


def test_02_cross_method_agreement(acceptance):
    t0 = time.perf_counter()
    fourier = g_regular_fourier(GAUSS3, GRID, 0.1)
    series = g_regular_series(GAUSS3, GRID, 0.1, K=200)
    worst = 0.0
    for x in ((0, 0, 0), (1, 0, 0), (2, 1, 0)):
        exact = gauss_g0_closed(1.0, 3, x, lam=0.1)
        for est in (fourier, series):
            worst = max(worst, abs(est.value_at(x) - exact) / exact)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and series.order <= 200 and elapsed < 60
    acceptance(2, ok, f"max relative error {worst:.2e} <= 1e-3 (series K={series.order}), {elapsed:.1f}s")
    assert ok


def test_03_resolvent_identity(acceptance):
    t0 = time.perf_counter()
    f = GaussianBump(3)
    rf = resolvent_apply(GAUSS3, f, 0.5, GRID)
    af = convolve(kernel_field(GAUSS3, GRID), rf, guard=False)
    resid = np.abs(1.5 * rf.values - af.values - f.on_grid(GRID).values).max()
    elapsed = time.perf_counter() - t0
    ok = resid <= 1e-6 * f.sup_norm and elapsed < 30
    acceptance(3, ok, f"||(1+lam)Rf - a*Rf - f||_inf = {resid:.2e} <= 1e-6, {elapsed:.1f}s")
    assert ok


def test_04_semigroup(acceptance):
    t0 = time.perf_counter()
    mass_err = max(abs(transition_density(GAUSS3, t, GRID).total_mass() - 1) for t in (0.5, 1.0, 2.0))
    p7 = transition_spectrum(GAUSS3, 0.7, GRID).values
    ck = np.abs(p7 * p7 - transition_spectrum(GAUSS3, 1.4, GRID).values).max()
    elapsed = time.perf_counter() - t0
    ok = mass_err < 1e-8 and ck < 1e-12 and elapsed < 30
    acceptance(4, ok, f"conservation {mass_err:.1e} < 1e-8, Chapman-Kolmogorov {ck:.1e} < 1e-12, {elapsed:.1f}s")
    assert ok


def test_05_discounted_monte_carlo(acceptance):
    t0 = time.perf_counter()
    f = GaussianBump(3)
    est = estimate_potential_cpp(GAUSS3, f, [0, 0, 0], MCConfig(paths=100_000, horizon=40.0, lam=0.5, seed=42))
    exact = resolvent_apply(GAUSS3, f, 0.5, GRID).at([0, 0, 0])
    diff = abs(est.mean - exact)
    budget = 3 * est.stderr + f.sup_norm * math.exp(-20) / 0.5
    elapsed = time.perf_counter() - t0
    ok = diff <= budget and est.stderr / est.mean < 0.02 and elapsed < 120
    acceptance(
        5,
        ok,
        f"MC {est.mean:.5f} +- {est.stderr:.5f} vs resolvent {exact:.5f}: |diff| {diff:.2e} <= {budget:.2e}, "
        f"rel stderr {est.stderr / est.mean:.2%}, {elapsed:.1f}s",
    )
    assert ok


def test_06_brownian_potential(acceptance):
    t0 = time.perf_counter()
    f = GaussianBump(3)
    exact = bm_potential(f, [0, 0, 0], 3).value
    est = estimate_potential_bm(f, [0, 0, 0], MCConfig(paths=20_000, horizon=2000.0, dt=1e-2, seed=42))
    diff = abs(est.mean - exact)
    budget = 3 * est.stderr + 0.05
    elapsed = time.perf_counter() - t0
    ok = abs(exact - 1.0) < 1e-8 and diff <= budget and elapsed < 600
    acceptance(
        6,
        ok,
        f"BM MC {est.mean:.4f} +- {est.stderr:.4f} vs exact {exact:.8f}: |diff| {diff:.3f} <= {budget:.3f}, "
        f"{elapsed:.0f}s",
    )
    assert ok


def test_07_newtonian_far_field(acceptance):
    t0 = time.perf_counter()
    scaled = [gauss_g0_closed(1.0, 3, r) * 2 * math.pi * r for r in (6.0, 8.0, 10.0)]
    rep = audit_gauss_bound(1.0, 3, np.linspace(2, 10, 9))
    elapsed = time.perf_counter() - t0
    ok = (
        all(0.95 <= v <= 1.05 for v in scaled)
        and abs(rep.slope["value"] + 1) <= 0.05
        and rep.conclusion == "EnvelopeRatioGrows"
        and elapsed < 5
    )
    acceptance(
        7,
        ok,
        f"2 pi r G0(r) = {', '.join(f'{v:.4f}' for v in scaled)}; slope {rep.slope['value']:.4f}; "
        f"{rep.conclusion}, {elapsed:.2f}s",
    )
    assert ok


def test_08_newtonian_constant(acceptance):
    t0 = time.perf_counter()
    hk = heat_kernel_time_integral(1.0, 3)
    rel = abs(hk - 1 / (4 * math.pi)) * 4 * math.pi
    ratio = bm_green([2.0, 0, 0], [0, 0, 0], 3) / bm_green([1.0, 0, 0], [0, 0, 0], 3)
    elapsed = time.perf_counter() - t0
    ok = rel <= 1e-6 and abs(ratio - 0.5) <= 1e-12 and elapsed < 1
    acceptance(8, ok, f"heat-kernel integral rel error {rel:.1e} <= 1e-6; G(2r)/G(r) - 1/2 = {ratio - 0.5:.1e}, {elapsed:.2f}s")
    assert ok


def test_09_dimension_gate(acceptance, capsys):
    argv = ["green", "compute", "--kernel", "gauss:b=1", "--dim", "2", "--lambda", "0"]
    t0 = time.perf_counter()
    code = main(argv)
    elapsed = time.perf_counter() - t0
    error = json.loads(capsys.readouterr().err)["error"]
    # the real process must report the same exit status
    proc = cli(*argv)
    ok = code == 4 and proc.returncode == 4 and error == "DimensionTooSmall" and elapsed < 1.0
    acceptance(9, ok, f"exit code {code} in-process, {proc.returncode} as a process ({error}), {elapsed:.3f}s")
    assert ok


def test_10_determinism(acceptance):
    t0 = time.perf_counter()
    argv = ["mc", "--kernel", "gauss:b=1", "--dim", "3", "--lambda", "0.5", "--paths", "100000", "--horizon", "40",
            "--seed", "42"]
    first, second = cli(*argv), cli(*argv)
    threaded = cli(*argv, "--workers", "8")
    m1, m8 = json.loads(first.stdout)["mean"], json.loads(threaded.stdout)["mean"]
    elapsed = time.perf_counter() - t0
    identical = first.returncode == 0 and first.stdout == second.stdout
    ok = identical and abs(m1 - m8) <= 1e-12 and elapsed < 240
    acceptance(10, ok, f"byte-identical JSON: {identical}; |mean(1) - mean(8)| = {abs(m1 - m8):.1e}, {elapsed:.1f}s")
    assert ok
