"""Empirical decay audits for G_0 and the convolution powers a_n.

Every report is built from fitted constants only. No envelope is asserted;
each audit evaluates G_0 (or a_n) at the requested radii, fits the candidate
envelope by least squares on log values and records how the data sit
against it.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize, stats

from .errors import HeavyTailUnsupported, InsufficientData, SpecError, UnsupportedAnalytic
from .green import g_regular_fourier, gauss_g0_closed, kernel_spectrum, newtonian_constant
from .kernels import JumpKernel, TailClass, kernel_moments
from .special import ZetaValue, zeta
from .spectral import GridSpec, dft_inverse, spectral_power

__all__ = [
    "BoundReport",
    "ZetaValue",
    "zeta",
    "loglog_slope",
    "hankel_g0",
    "grid_g0",
    "audit_gauss_bound",
    "audit_exp_bound",
    "audit_an_bound",
    "audit_newtonian",
]

CONCLUSIONS = ("Consistent", "EnvelopeRatioGrows", "PolynomialDecayDetected", "Deviates")
ENVELOPES = ("gauss-quarter", "gauss-half", "exponential", "newtonian")
# Madelung-type constant of the zero-mean periodic Coulomb potential on a cube
_CUBIC_EWALD = 2.837297479480620


@dataclass(frozen=True)
class BoundReport:
    prop: str
    radii: list
    g0: list
    envelope: str
    constants: dict
    ratios: list
    ratio_grows: bool
    slope: dict
    conclusion: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if self.envelope not in ENVELOPES or self.conclusion not in CONCLUSIONS:
            raise ValueError(f"bad envelope/conclusion {self.envelope!r}/{self.conclusion!r}")
        lo, hi = self.slope["ci"]
        if not lo <= self.slope["value"] <= hi:
            raise ValueError("slope confidence interval does not contain the estimate")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check_radii(radii) -> np.ndarray:
    r = np.asarray(radii, dtype=float).ravel()
    if r.size < 3:
        raise InsufficientData(f"a decay fit needs at least 3 radii, got {r.size}")
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise SpecError("radii must be positive and strictly increasing")
    return r


def _ols(x, y, level=0.95):
    """Slope, intercept, slope CI and RMS residual of a straight-line fit."""
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    n = x.size
    if n > 2:
        half = stats.t.ppf(0.5 + level / 2, n - 2) * res.stderr
    else:
        half = math.inf
    return res.slope, res.intercept, (res.slope - half, res.slope + half), float(np.sqrt(np.mean(resid**2)))


def loglog_slope(radii, values, level: float = 0.95) -> dict:
    """Least-squares slope of log(values) against log(radii) with a t-interval."""
    r = _check_radii(radii)
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise SpecError("log-log fit needs positive values")
    s, c, (lo, hi), rms = _ols(np.log(r), np.log(v), level)
    return {"value": float(s), "ci": [float(lo), float(hi)], "intercept": float(c), "rms_residual": rms, "level": level}


def _grows(ratios) -> bool:
    return bool(np.all(np.diff(ratios) > 0))


# --------------------------------------------------------------------------
# G_0 routes


def hankel_g0(kernel: JumpKernel, radii) -> np.ndarray:
    """G_0(r) in d = 3 from ``(1/(2 pi^2 r)) int_0^inf k sin(kr) a_hat/(1-a_hat) dk``.

    Uses the analytic radial transform of the kernel; the integrand is smooth at
    k = 0 because ``1 - a_hat ~ sigma^2 k^2 / 6``.
    """
    if kernel.dim != 3:
        raise UnsupportedAnalytic(f"the Hankel route is implemented for d=3, got d={kernel.dim}")
    if not kernel.has_analytic_fourier():
        raise UnsupportedAnalytic(f"{kernel}: no analytic Fourier transform")

    def g(k):
        return kernel.fourier_radial(k) / kernel.one_minus_fourier(k)

    k1 = 20.0 / kernel.length_scale
    out = []
    for r in np.asarray(radii, dtype=float).ravel():
        head, _ = integrate.quad(lambda k: k * g(k) * math.sin(k * r), 0.0, k1, limit=400, epsabs=1e-13, epsrel=1e-11)
        tail, _ = integrate.quad(
            lambda u: (u + k1) * g(u + k1), 0.0, np.inf, weight="sin", wvar=r, limlst=200, epsabs=1e-14
        )
        # sin(r(u + k1)) = sin(ru)cos(rk1) + cos(ru)sin(rk1)
        tail_c, _ = integrate.quad(
            lambda u: (u + k1) * g(u + k1), 0.0, np.inf, weight="cos", wvar=r, limlst=200, epsabs=1e-14
        )
        total = head + tail * math.cos(r * k1) + tail_c * math.sin(r * k1)
        out.append(total / (2 * math.pi**2 * r))
    return np.array(out)


def grid_g0(kernel: JumpKernel, grid: GridSpec, radii, zero_mode: str = "excluded", lambda_floor=None) -> np.ndarray:
    """G_0 along the first axis from the zero-mode-free spectral solution (d = 3).

    The grid solution lacks the k = 0 mode, so it equals the free-space G_0 minus
    a background that, at the diffusive scale, is the mean-free periodic
    potential of ``-D Laplacian``, ``D = sigma^2/(2d)``, on a cube of side 2L.
    That background is added back in closed form.
    """
    if grid.d != 3:
        raise UnsupportedAnalytic("the background correction is implemented for d=3")
    kwargs = {} if lambda_floor is None else {"lambda_floor": lambda_floor}
    est = g_regular_fourier(kernel, grid, 0.0, zero_mode=zero_mode, **kwargs)
    sigma2 = kernel_moments(kernel, require_finite=True).second_moment
    diff = sigma2 / (2 * grid.d)
    side = 2 * grid.L
    out = []
    for r in np.asarray(radii, dtype=float).ravel():
        x = np.zeros(grid.d)
        x[0] = r
        background = (_CUBIC_EWALD / side - (2 * math.pi / 3) * r * r / side**3) / (4 * math.pi * diff)
        out.append(est.value_at(x) + background)
    return np.array(out)


# --------------------------------------------------------------------------
# audits


def audit_gauss_bound(b: float, d: int, radii, tol: float = 1e-12) -> BoundReport:
    """Gaussian-kernel G_0 at ``radii`` against ``exp(-b r^2/4)`` and ``exp(-b r^2/2)``."""
    r = _check_radii(radii)
    g0 = [gauss_g0_closed(b, d, float(ri), tol=tol) for ri in r]
    quarter = [g * math.exp(b * ri * ri / 4) for g, ri in zip(g0, r)]
    half = [g * math.exp(b * ri * ri / 2) for g, ri in zip(g0, r)]
    slope = loglog_slope(r, g0)
    grows = _grows(quarter)
    if grows:
        conclusion = "EnvelopeRatioGrows"
    elif slope["ci"][0] <= 2 - d <= slope["ci"][1]:
        conclusion = "PolynomialDecayDetected"
    else:
        conclusion = "Consistent"
    return BoundReport(
        prop="gauss",
        radii=[float(v) for v in r],
        g0=g0,
        envelope="gauss-quarter",
        constants={"C1_fitted": max(quarter), "C1_fitted_half": max(half), "b": b, "d": d},
        ratios=quarter,
        ratio_grows=grows,
        slope=slope,
        conclusion=conclusion,
        details={"ratios_half": half, "ratio_half_grows": _grows(half), "newtonian_slope": 2 - d},
    )


def audit_exp_bound(
    kernel: JumpKernel,
    grid: GridSpec | None,
    radii,
    zero_mode: str = "excluded",
    lambda_floor=None,
    route: str = "grid",
) -> BoundReport:
    """Compare ``log G_0 = log A - B r`` with ``log G_0 = log C + s log r``.

    ``route`` selects the G_0 evaluation: ``"grid"`` (spectral solution plus
    background correction) or ``"hankel"`` (1-D oscillatory quadrature).
    """
    r = _check_radii(radii)
    if kernel.dim < 3:
        raise SpecError(f"G_0 needs d >= 3, got d={kernel.dim}")
    if route == "grid":
        if grid is None:
            raise SpecError("the grid route needs a grid")
        g0 = grid_g0(kernel, grid, r, zero_mode, lambda_floor)
    elif route == "hankel":
        g0 = hankel_g0(kernel, r)
    else:
        raise SpecError(f"unknown route {route!r}; expected grid or hankel")
    if np.any(g0 <= 0):
        raise InsufficientData("non-positive G_0 values; enlarge the box or shrink the radii")
    logg = np.log(g0)
    b_slope, log_a, b_ci, exp_rms = _ols(r, logg)
    slope = loglog_slope(r, g0)
    amp_a, rate_b = math.exp(log_a), -b_slope
    ratios = [float(v) for v in g0 / (amp_a * np.exp(-rate_b * r))]
    poly_better = slope["rms_residual"] < exp_rms
    return BoundReport(
        prop="exp",
        radii=[float(v) for v in r],
        g0=[float(v) for v in g0],
        envelope="exponential",
        constants={"A_fitted": amp_a, "B_fitted": rate_b, "B_ci": [-b_ci[1], -b_ci[0]]},
        ratios=ratios,
        ratio_grows=_grows(ratios),
        slope=slope,
        conclusion="PolynomialDecayDetected" if poly_better else "Consistent",
        details={
            "kernel": kernel.spec_string(),
            "route": route,
            "grid": grid.to_dict() if grid is not None else None,
            "zero_mode": zero_mode,
            "exponential_rms_residual": exp_rms,
            "polynomial_rms_residual": slope["rms_residual"],
            "better_model": "polynomial" if poly_better else "exponential",
        },
    )


def _fit_an_envelope(r, values, n, c_max):
    """Profile fit of ``a_n(r) <= C n^(-d/2) exp(-c min(r, r^2/n))``.

    For each c the tightest log C is ``max_i(log a_i + c m_i)``; c minimizes the
    mean log-gap between envelope and data. The gap is convex and piecewise
    linear in c, so the minimizer is found exactly as a small linear program
    in ``(c, log C)``. Returns ``(c, log C)``.
    """
    m = np.minimum(r, r * r / n)
    logv = np.log(values)
    # minimize t - c mean(m)  subject to  logv_i + c m_i <= t,  0 <= c <= c_max
    res = optimize.linprog(
        c=[-np.mean(m), 1.0],
        A_ub=np.column_stack([m, -np.ones_like(m)]),
        b_ub=-logv,
        bounds=[(0.0, c_max), (None, None)],
        method="highs",
    )
    c = float(res.x[0])
    return c, float(np.max(logv + c * m))


def audit_an_bound(kernel: JumpKernel, n_list, grid: GridSpec, radii=None, r_min: float = 1.0) -> BoundReport:
    """Fitted (C, c) for ``a_n(x) <= C n^(-d/2) exp(-c min(|x|, |x|^2/n))`` on lattice radii.

    ``a_n`` is the n-th convolution power computed spectrally. Radii default to
    lattice points on the first axis in ``[r_min, L/2]``; values below
    ``1e-13`` of the peak are dropped from the fit as round-off.
    """
    ns = sorted({int(n) for n in n_list})
    if not ns or ns[0] < 1:
        raise SpecError("n_list must contain positive integers")
    if radii is None:
        axis = grid.axis()
        radii = axis[(axis >= r_min) & (axis <= grid.L / 2)]
    r = _check_radii(radii)
    idx = [grid.index_of(np.r_[ri, np.zeros(grid.d - 1)]) for ri in r]
    spec = kernel_spectrum(kernel, grid)
    d = grid.d
    c_max = 4.0 / kernel.length_scale
    per_n = []
    first = None
    for n in ns:
        an = dft_inverse(spectral_power(spec, n)).values
        vals = np.array([an[i] for i in idx])
        keep = vals > 1e-13 * an.max()
        if keep.sum() < 3:
            raise InsufficientData(f"a_{n} is resolved at fewer than 3 probed radii")
        c, log_c = _fit_an_envelope(r[keep], vals[keep] * n ** (d / 2), n, c_max)
        per_n.append(
            {
                "n": n,
                "C_fitted": math.exp(log_c),
                "c_fitted": c,
                "mass": float(an.sum() * grid.cell_volume),
                "radii_used": int(keep.sum()),
                "values": [float(v) for v in vals],
            }
        )
        if first is None:
            first = (vals, keep, c, log_c, n)
    vals, keep, c, log_c, n = first
    m = np.minimum(r, r * r / n)
    envelope = np.exp(log_c - c * m) * n ** (-d / 2)
    ratios = [float(v) for v in vals / envelope]
    slope = loglog_slope(r[keep], vals[keep])
    cs = [p["c_fitted"] for p in per_n]
    return BoundReport(
        prop="an",
        radii=[float(v) for v in r],
        g0=[float(v) for v in vals],
        envelope="exponential",
        constants={"C_fitted": per_n[0]["C_fitted"], "c_fitted": per_n[0]["c_fitted"], "n": n},
        ratios=ratios,
        ratio_grows=_grows(ratios),
        slope=slope,
        conclusion="Consistent",
        details={
            "kernel": kernel.spec_string(),
            "grid": grid.to_dict(),
            "per_n": per_n,
            "c_spread": float(max(cs) - min(cs)),
        },
    )


def audit_newtonian(
    kernel: JumpKernel, d: int, sigma2: float | None, radii, grid: GridSpec | None = None, tol: float = 0.05
) -> BoundReport:
    """Relative deviation of G_0 from the diffusive prediction ``(2d/sigma^2) C(d) r^(2-d)``.

    G_0 comes from the closed form for the Gaussian family, from the Hankel
    route in d = 3 when an analytic transform exists, and from the grid route
    otherwise. The conclusion is ``Consistent`` when every deviation is below
    ``tol`` and ``Deviates`` otherwise.
    """
    r = _check_radii(radii)
    if kernel.tail_class is TailClass.HEAVY:
        raise HeavyTailUnsupported(f"{kernel}: infinite second moment, no diffusive limit")
    if d != kernel.dim or d < 3:
        raise SpecError(f"need d >= 3 matching the kernel, got d={d}, kernel dim {kernel.dim}")
    if sigma2 is None:
        sigma2 = kernel_moments(kernel, require_finite=True).second_moment
    if kernel.family == "gauss":
        route = "closed"
        g0 = np.array([gauss_g0_closed(kernel.param, d, float(ri)) for ri in r])
    elif d == 3 and kernel.has_analytic_fourier():
        route = "hankel"
        g0 = hankel_g0(kernel, r)
    else:
        if grid is None:
            raise SpecError("a grid is needed for this kernel")
        route = "grid"
        g0 = grid_g0(kernel, grid, r)
    amp = 2 * d / sigma2 * newtonian_constant(d)
    pred = amp * r ** (2 - d)
    ratios = [float(v) for v in g0 / pred]
    dev = [abs(v - 1) for v in ratios]
    return BoundReport(
        prop="newtonian",
        radii=[float(v) for v in r],
        g0=[float(v) for v in g0],
        envelope="newtonian",
        constants={"amplitude": amp, "sigma2": float(sigma2), "C_d": newtonian_constant(d)},
        ratios=ratios,
        ratio_grows=_grows(ratios),
        slope=loglog_slope(r, g0),
        conclusion="Consistent" if max(dev) < tol else "Deviates",
        details={"kernel": kernel.spec_string(), "route": route, "relative_deviation": dev, "tol": tol},
    )
