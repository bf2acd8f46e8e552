"""Green measures of jump generators and of Brownian motion.

For the jump generator ``L f = a * f - f`` the resolvent kernel splits into an
atom and a regular part,

    (lambda - L)^-1 = (delta + G_lambda) / (1 + lambda),
    G_lambda = sum_{j>=1} a_j / (1 + lambda)^j,   a_j = a^{*j},

so that in Fourier variables ``G_lambda_hat = a_hat / (1 + lambda - a_hat)``.
The atom is carried as an explicit weight and never put on the grid.

On a periodic grid the lambda = 0 zero mode of ``G_0_hat`` is a genuine
divergence (``int G_0 = infinity``). Grid estimates at lambda = 0 therefore
drop it and are known only up to an additive constant; see
:func:`g_regular_fourier` and :func:`potential` for the available policies.

The Brownian part uses the generator Delta (not Delta/2): heat kernel
``(4 pi t)^(-d/2) exp(-|x|^2 / (4t))`` and Green function
``C(d) |x|^(2-d)``, ``C(d) = Gamma(d/2 - 1) / (4 pi^(d/2))``.
"""
from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import (
    DimensionTooSmall,
    HeavyTailUnsupported,
    NotConverged,
    PreconditionError,
    SingularAtCoincidence,
    SpecError,
    ValidationError,
    WrapAroundRisk,
    ZeroModeUncertain,
)
from .functions import TestFunction
from .kernels import JumpKernel, TailClass, sphere_area
from .special import power_tail
from .spectral import (
    WRAP_EPS,
    GridSpec,
    RealField,
    SpectralField,
    boundary_ratio,
    convolve,
    dft_forward,
    dft_inverse,
    spectral_eval,
    write_field_csv,
)

__all__ = [
    "GreenEstimate",
    "TransitionDensity",
    "BrownianPotential",
    "kernel_field",
    "kernel_spectrum",
    "g_regular_fourier",
    "g_regular_series",
    "gauss_g0_closed",
    "gauss_g0_radial",
    "resolvent_apply",
    "transition_spectrum",
    "transition_density",
    "potential",
    "newtonian_constant",
    "bm_green",
    "heat_kernel_time_integral",
    "bm_potential",
    "richardson_to_zero",
]

ZERO_MODE_POLICIES = ("excluded", "lambda_floor")
DEFAULT_LAMBDA_FLOOR = (0.1, 0.05, 0.025)


@dataclass(frozen=True)
class GreenEstimate:
    """Regular part G_lambda on a grid plus the weight of the delta atom."""

    grid: GridSpec
    regular_part: RealField
    atom_weight: float
    lam: float
    method: str  # "series" | "fourier"
    truncation_error_bound: float
    kernel_spec: str
    order: int | None = None
    zero_mode_policy: str = "included"
    lambda_floor: tuple | None = None
    metadata: dict = field(default_factory=dict, compare=False)
    spectrum: SpectralField | None = field(default=None, compare=False, repr=False)

    @property
    def zero_mode_uncertain(self) -> bool:
        return self.lam == 0 and self.zero_mode_policy != "included"

    def check_invariants(self) -> None:
        """Raise :class:`ValidationError` if positivity, symmetry or the atom weight fail."""
        v = self.regular_part.values
        if self.atom_weight != 1.0 / (1.0 + self.lam):
            raise ValidationError("atom weight differs from 1/(1+lambda)")
        if not self.zero_mode_uncertain and v.min() < -1e-10:
            raise ValidationError(f"regular part has negative value {v.min():.3e}")
        # x -> -x on the centered lattice maps index j to (n - j) mod n
        flipped = v
        for ax in range(v.ndim):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        scale = np.abs(v).max()
        if scale and np.abs(v - flipped).max() > 1e-10 * scale:
            raise ValidationError("regular part is not symmetric under x -> -x")

    def value_at(self, x) -> float:
        """G at a lattice point, or its trigonometric interpolant off the lattice."""
        try:
            return self.regular_part.at(x)
        except ValueError:
            if self.spectrum is None:
                raise
            return spectral_eval(self.spectrum, x)

    def sidecar(self) -> dict:
        return {
            "lambda": self.lam,
            "method": self.method,
            "order": self.order,
            "atom_weight": self.atom_weight,
            "truncation_error_bound": self.truncation_error_bound,
            "zero_mode_policy": self.zero_mode_policy,
            "zero_mode_uncertain": self.zero_mode_uncertain,
            "lambda_floor": list(self.lambda_floor) if self.lambda_floor else None,
            "kernel": self.kernel_spec,
            "grid": self.grid.to_dict(),
            "metadata": self.metadata,
        }

    def export(self, csv_path, json_path) -> None:
        write_field_csv(self.regular_part, csv_path, value_name="g")
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class TransitionDensity:
    t: float
    atom_weight: float
    density_part: RealField
    spectrum: SpectralField = field(compare=False, repr=False)

    def total_mass(self) -> float:
        return self.atom_weight + self.density_part.mass()


@dataclass(frozen=True)
class BrownianPotential:
    value: float
    bound_constant: float
    cl_norm: float

    @property
    def cl_bound(self) -> float:
        """The a-priori bound ``C ||f||_CL`` on |V(f, x)|."""
        return self.bound_constant * self.cl_norm


# --------------------------------------------------------------------------
# lattice kernel


@functools.lru_cache(maxsize=8)
def kernel_field(kernel: JumpKernel, grid: GridSpec) -> RealField:
    """Kernel density sampled on the grid and renormalized to unit lattice mass.

    The renormalization makes ``a_hat(0) = 1`` exactly, so the lattice jump
    law is a probability distribution and conservation holds to rounding.
    """
    if kernel.dim != grid.d:
        raise SpecError(f"kernel dimension {kernel.dim} differs from grid dimension {grid.d}")
    values = kernel.radial_density(grid.radius())
    values = values / (values.sum() * grid.cell_volume)
    return RealField(grid, values, unit="1/length^d")


@functools.lru_cache(maxsize=8)
def kernel_spectrum(kernel: JumpKernel, grid: GridSpec) -> SpectralField:
    """a_hat on the dual lattice (real: the lattice kernel is even)."""
    spec = dft_forward(kernel_field(kernel, grid))
    vals = spec.values.real.copy()
    vals[(0,) * grid.d] = 1.0
    return SpectralField(grid, vals, meta={"wrap_ratio": boundary_ratio(kernel_field(kernel, grid))})


def _check_solver_args(kernel: JumpKernel, grid: GridSpec, lam: float, allow_heavy: bool) -> None:
    if not (lam >= 0 and math.isfinite(lam)):
        raise SpecError(f"lambda must be finite and >= 0, got {lam!r}")
    if kernel.dim != grid.d:
        raise SpecError(f"kernel dimension {kernel.dim} differs from grid dimension {grid.d}")
    if lam == 0 and grid.d < 3:
        raise DimensionTooSmall(f"G_0 exists only for d >= 3 (got d={grid.d}); use lambda > 0")
    if kernel.tail_class is TailClass.HEAVY and not allow_heavy:
        raise HeavyTailUnsupported(f"{kernel}: heavy tails need the experimental flag")


def _metadata(kernel: JumpKernel, grid: GridSpec, regular: RealField) -> dict:
    kernel_wrap = boundary_ratio(kernel_field(kernel, grid))
    green_wrap = boundary_ratio(regular)
    return {
        "kernel_boundary_ratio": kernel_wrap,
        "green_boundary_ratio": green_wrap,
        "periodized": bool(kernel_wrap > WRAP_EPS or green_wrap > WRAP_EPS),
    }


def richardson_to_zero(lams, values):
    """Polynomial extrapolation of ``values[i] ~ F(lams[i])`` to lambda = 0."""
    lams = [float(v) for v in lams]
    out = 0.0
    for i, li in enumerate(lams):
        w = 1.0
        for j, lj in enumerate(lams):
            if j != i:
                w *= lj / (lj - li)
        out = out + w * values[i]
    return out


def _green_hat(ahat: np.ndarray, lam: float) -> np.ndarray:
    return ahat / (1.0 + lam - ahat)


def g_regular_fourier(
    kernel: JumpKernel,
    grid: GridSpec,
    lam: float,
    zero_mode: str = "excluded",
    lambda_floor=DEFAULT_LAMBDA_FLOOR,
    allow_heavy: bool = False,
) -> GreenEstimate:
    """G_lambda by spectral inversion of ``a_hat / (1 + lambda - a_hat)``.

    At lambda = 0 the zero mode is removed. ``zero_mode="excluded"`` does this
    directly; ``zero_mode="lambda_floor"`` instead Richardson-extrapolates the
    zero-mode-free G at the floor values of lambda. Both are flagged as
    mean-adjusted: only differences of values, and integrals against
    mean-zero functions, are certified. The floor extrapolation is accurate
    only when the floors are small next to the spectral gap
    ``1 - max_{k != 0} a_hat(k)``; its error indicator is the spread between the
    two- and three-point extrapolants.
    """
    _check_solver_args(kernel, grid, lam, allow_heavy)
    ahat = kernel_spectrum(kernel, grid).values.real
    zero = (0,) * grid.d
    policy = "included"
    floor = None
    bound = 0.0
    if lam > 0:
        ghat = _green_hat(ahat, lam)
    elif zero_mode == "excluded":
        with np.errstate(divide="ignore", invalid="ignore"):
            ghat = _green_hat(ahat, 0.0)
        ghat[zero] = 0.0
        policy = "excluded"
    elif zero_mode == "lambda_floor":
        floor = tuple(float(v) for v in lambda_floor)
        if len(floor) < 2 or min(floor) <= 0:
            raise SpecError("lambda_floor needs at least two positive values")
        stack = []
        for lf in floor:
            g = _green_hat(ahat, lf)
            g[zero] = 0.0
            stack.append(g)
        ghat = richardson_to_zero(floor, stack)
        two = richardson_to_zero(floor[-2:], stack[-2:])
        bound = float(np.abs(ghat - two).sum() / (grid.size * grid.cell_volume))
        policy = "lambda_floor"
    else:
        raise SpecError(f"unknown zero-mode policy {zero_mode!r}; expected one of {ZERO_MODE_POLICIES}")
    spec = SpectralField(grid, ghat)
    regular = dft_inverse(spec, unit="1/length^d")
    return GreenEstimate(
        grid=grid,
        regular_part=regular,
        atom_weight=1.0 / (1.0 + lam),
        lam=float(lam),
        method="fourier",
        truncation_error_bound=bound,
        kernel_spec=kernel.spec_string(),
        zero_mode_policy=policy,
        lambda_floor=floor,
        metadata=_metadata(kernel, grid, regular),
        spectrum=spec,
    )


def g_regular_series(
    kernel: JumpKernel,
    grid: GridSpec,
    lam: float,
    K: int = 200,
    tol: float = 1e-10,
    strict: bool = True,
    track=(),
    allow_heavy: bool = False,
) -> GreenEstimate:
    """Partial sums of ``sum_{j=1}^K a_j / (1 + lambda)^j`` in the spectral domain.

    The truncation bound is the rigorous sup-norm bound
    ``(1/V) sum_k r_k^(K+1) / (1 - r_k)``, ``r_k = |a_hat(k)| / (1 + lambda)``,
    on the box of volume V. Summation stops early once it drops below ``tol``;
    if it is still above ``tol`` at order ``K`` and ``strict`` is set,
    :class:`NotConverged` is raised.

    ``track`` is a list of lattice points at which the partial sums are
    recorded for every order; they are returned in ``metadata["partial_sums"]``.
    At lambda = 0 the zero mode is dropped, as in :func:`g_regular_fourier`.
    """
    _check_solver_args(kernel, grid, lam, allow_heavy)
    if K < 1:
        raise SpecError(f"series order must be >= 1, got {K}")
    ahat = kernel_spectrum(kernel, grid).values.real
    zero = (0,) * grid.d
    ratio = ahat / (1.0 + lam)
    if lam == 0:
        ratio = ratio.copy()
        ratio[zero] = 0.0
    r = np.abs(ratio)
    volume = grid.size * grid.cell_volume
    with np.errstate(divide="ignore"):
        tail_factor = r / (1.0 - r)
    term = ratio.copy()
    total = ratio.copy()
    phases = []
    for x in track:
        kx = sum(kc * xc for kc, xc in zip(grid.wavenumbers(), np.ravel(x)))
        phases.append(np.exp(1j * kx))
    history = [[float((term * p).sum().real / volume)] for p in phases]
    order = 1
    bound = float(np.sum(np.abs(term) * tail_factor) / volume)
    while bound >= tol and order < K:
        term *= ratio
        total += term
        order += 1
        for hist, p in zip(history, phases):
            hist.append(hist[-1] + float((term * p).sum().real / volume))
        bound = float(np.sum(np.abs(term) * tail_factor) / volume)
    if bound >= tol and strict:
        raise NotConverged(f"series truncation bound {bound:.3e} exceeds tol {tol:.1e} at K={order}")
    spec = SpectralField(grid, total)
    regular = dft_inverse(spec, unit="1/length^d")
    meta = _metadata(kernel, grid, regular)
    if track:
        meta["partial_sums"] = history
    return GreenEstimate(
        grid=grid,
        regular_part=regular,
        atom_weight=1.0 / (1.0 + lam),
        lam=float(lam),
        method="series",
        truncation_error_bound=bound,
        kernel_spec=kernel.spec_string(),
        order=order,
        zero_mode_policy="included" if lam > 0 else "excluded",
        metadata=meta,
        spectrum=spec,
    )


# --------------------------------------------------------------------------
# Gaussian closed form


def gauss_g0_radial(b: float, d: int, r, lam: float = 0.0, tol: float = 1e-12):
    """Vectorized ``sum_{k>=1} (b/(2 pi k))^(d/2) exp(-b r^2/(2k)) / (1+lam)^k``.

    For lam > 0 terms are summed until the geometric tail bound is below
    ``tol``. For lam = 0 the first N terms are summed directly (N >= 4c with
    ``c = b r^2 / 2``) and the remainder ``sum_{k>N} k^(-d/2) exp(-c/k)`` is
    expanded as ``sum_j (-c)^j / j! * sum_{k>N} k^(-d/2-j)``, an alternating
    series whose terms decrease, so its error is below the first omitted term.
    """
    if not b > 0:
        raise SpecError(f"b must be positive, got {b!r}")
    if lam == 0 and d < 3:
        raise DimensionTooSmall(f"G_0 diverges for d={d} < 3")
    r = np.asarray(r, dtype=float)
    flat, inverse = np.unique(np.abs(r).ravel(), return_inverse=True)
    amp = (b / (2 * math.pi)) ** (d / 2)
    c = 0.5 * b * flat * flat
    out = np.zeros_like(flat)
    if lam > 0:
        q = 1.0 / (1.0 + lam)
        # tail after N terms <= amp * N^(-d/2) q^(N+1) / (1 - q)
        n_max = 1
        while amp * n_max ** (-d / 2) * q ** (n_max + 1) / (1 - q) > tol:
            n_max *= 2
        k = np.arange(1, n_max + 1, dtype=float)
        logq = math.log(q)
        for start in range(0, flat.size, 4096):
            cc = c[start : start + 4096, None]
            terms = k ** (-d / 2) * np.exp(-cc / k + k * logq)
            out[start : start + 4096] = amp * terms[:, ::-1].sum(axis=1)
    else:
        n = int(max(256, math.ceil(4 * c.max()))) if c.size else 256
        k = np.arange(1, n + 1, dtype=float)
        for start in range(0, flat.size, 1024):
            cc = c[start : start + 1024, None]
            head = (k ** (-d / 2) * np.exp(-cc / k))[:, ::-1].sum(axis=1)
            cc = cc[:, 0]
            tail = np.zeros_like(cc)
            coef = np.ones_like(cc)
            for j in range(60):
                t, _ = power_tail(d / 2 + j, n)
                step = coef * t
                tail += step
                if np.all(np.abs(step) < 1e-3 * tol / amp):
                    break
                coef = coef * (-cc) / (j + 1)
            out[start : start + 1024] = amp * (head + tail)
    return out[inverse].reshape(r.shape)


def gauss_g0_closed(b: float, d: int, x, tol: float = 1e-12, lam: float = 0.0) -> float:
    """Grid-free G_lambda(x) for the Gaussian kernel ``(b/2pi)^(d/2) exp(-b|x|^2/2)``.

    The j-fold convolution is ``(b/(2 pi j))^(d/2) exp(-b|x|^2/(2j))``; at x = 0
    and lam = 0 the sum is ``(b/2pi)^(d/2) zeta(d/2)``.
    """
    if d < 3 and lam == 0:
        raise DimensionTooSmall(f"G_0 diverges for d={d} < 3")
    x = np.asarray(x, dtype=float).ravel()
    if x.size not in (1, d):
        raise ValueError(f"point has {x.size} coordinates, expected {d}")
    r = float(np.sqrt(np.sum(x * x))) if x.size == d else abs(float(x[0]))
    return float(gauss_g0_radial(b, d, r, lam=lam, tol=tol))


# --------------------------------------------------------------------------
# resolvent, semigroup, potential


def resolvent_apply(kernel: JumpKernel, f, lam: float, grid: GridSpec) -> RealField:
    """R_lambda f = (lambda - L)^-1 f = (f + G_lambda * f) / (1 + lambda), periodic on the box."""
    if not lam > 0:
        raise PreconditionError(f"resolvent needs lambda > 0, got {lam!r}")
    if kernel.dim != grid.d:
        raise SpecError(f"kernel dimension {kernel.dim} differs from grid dimension {grid.d}")
    fld = f.on_grid(grid) if isinstance(f, TestFunction) else f
    fhat = dft_forward(fld).values
    ahat = kernel_spectrum(kernel, grid).values.real
    return dft_inverse(SpectralField(grid, fhat / (1.0 + lam - ahat)), unit=fld.unit)


def transition_spectrum(kernel: JumpKernel, t: float, grid: GridSpec) -> SpectralField:
    """Full p_hat_t = exp(t (a_hat - 1)), atom included."""
    if not t >= 0:
        raise SpecError(f"time must be >= 0, got {t!r}")
    ahat = kernel_spectrum(kernel, grid).values.real
    return SpectralField(grid, np.exp(t * (ahat - 1.0)))


def transition_density(kernel: JumpKernel, t: float, grid: GridSpec) -> TransitionDensity:
    """p(t, .) = exp(-t) delta + density part; the density part is the inverse of p_hat_t - exp(-t)."""
    full = transition_spectrum(kernel, t, grid)
    atom = math.exp(-t)
    density = dft_inverse(SpectralField(grid, full.values - atom), unit="1/length^d")
    return TransitionDensity(t=float(t), atom_weight=atom, density_part=density, spectrum=full)


def potential(est: GreenEstimate, f, x, anchor=None) -> float:
    """V_lambda(f, x) = (f(x) + (G_lambda * f)(x)) / (1 + lambda).

    For mean-adjusted lambda = 0 estimates the result is certified only when
    ``int f = 0``; otherwise pass ``anchor=(x_ref, g0_ref)``, a trusted value of
    G_0 at one lattice point, which fixes the missing constant. Without either,
    :class:`ZeroModeUncertain` is raised.
    """
    grid = est.grid
    fld = f.on_grid(grid) if isinstance(f, TestFunction) else f
    ratio = boundary_ratio(fld)
    if ratio > WRAP_EPS:
        warnings.warn(f"test function boundary/peak ratio {ratio:.2e}", WrapAroundRisk, stacklevel=2)
    idx = grid.index_of(x)
    conv = convolve(est.regular_part, fld, guard=False).values[idx]
    if est.zero_mode_uncertain:
        integral = fld.mass()
        l1 = float(np.abs(fld.values).sum() * grid.cell_volume)
        if anchor is not None:
            x_ref, g_ref = anchor
            conv += (g_ref - est.regular_part.at(x_ref)) * integral
        elif abs(integral) > 1e-12 * max(l1, 1e-300):
            raise ZeroModeUncertain(
                "lambda=0 estimate is mean-adjusted; use a mean-zero f or supply an anchor value of G_0"
            )
    return float(est.atom_weight * (fld.values[idx] + conv))


# --------------------------------------------------------------------------
# Brownian motion


def heat_kernel_time_integral(r: float, d: int, t_max: float | None = None, tol: float = 1e-10) -> float:
    """int_0^inf (4 pi t)^(-d/2) exp(-r^2/(4t)) dt by quadrature in log time.

    The integral is computed on ``[0, t_max]`` (default ``1e6 r^2``); the tail
    beyond ``t_max`` lies between ``U exp(-r^2/(4 t_max))`` and
    ``U = (4 pi)^(-d/2) t_max^(1-d/2) / (d/2 - 1)``, and the midpoint is added.
    """
    if not r > 0:
        raise SpecError(f"radius must be positive, got {r!r}")
    if d < 3:
        raise DimensionTooSmall(f"heat kernel time integral diverges for d={d} < 3")
    if t_max is None:
        t_max = 1e6 * r * r

    def integrand(u):
        t = r * r * math.exp(u)
        return (4 * math.pi * t) ** (-d / 2) * math.exp(-r * r / (4 * t)) * t

    hi = math.log(t_max / (r * r))
    body = 0.0
    # integrand is negligible below u = -8 (exp(-e^8/4) underflows)
    edges = np.linspace(-8.0, hi, 9)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, epsabs=0, epsrel=min(tol, 1e-12) / 10, limit=200)
        body += val
    upper = (4 * math.pi) ** (-d / 2) * t_max ** (1 - d / 2) / (d / 2 - 1)
    lower = upper * math.exp(-r * r / (4 * t_max))
    return body + 0.5 * (upper + lower)


@functools.lru_cache(maxsize=None)
def newtonian_constant(d: int) -> float:
    """C(d) = Gamma(d/2 - 1) / (4 pi^(d/2)), checked against the heat-kernel quadrature."""
    if d < 3:
        raise DimensionTooSmall(f"no Newtonian Green function for d={d} < 3")
    c = math.gamma(d / 2 - 1) / (4 * math.pi ** (d / 2))
    for r in (1.0, 2.0):
        ref = heat_kernel_time_integral(r, d) * r ** (d - 2)
        if abs(ref - c) > 1e-7 * c:
            raise ValidationError(f"C({d}) = {c} disagrees with heat-kernel quadrature {ref} at r={r}")
    return c


def bm_green(x, y, d: int) -> float:
    """Green function C(d) |x - y|^(2-d) of Brownian motion with generator Delta."""
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    dist = float(np.sqrt(np.sum(diff * diff)))
    if d < 3:
        raise DimensionTooSmall(f"Brownian motion is recurrent for d={d} < 3")
    if dist == 0:
        raise SingularAtCoincidence("Green function is singular at x = y")
    return newtonian_constant(d) * dist ** (2 - d)


def _sphere_rule(d: int, n: int):
    """Product quadrature on S^(d-1): nodes (m, d) and weights summing to its area."""
    m = 2 * n
    phi = 2 * np.pi * np.arange(m) / m
    nodes = np.column_stack([np.cos(phi), np.sin(phi)])
    weights = np.full(m, 2 * np.pi / m)
    for k in range(2, d):
        # S^k = {(t, sqrt(1 - t^2) w)}, measure (1 - t^2)^((k-2)/2) dt dw
        t, wt = special.roots_gegenbauer(n, (k - 1) / 2)
        s = np.sqrt(1 - t * t)
        nodes = np.concatenate(
            [np.column_stack([np.full(len(nodes), ti), si * nodes]) for ti, si in zip(t, s)]
        )
        weights = np.concatenate([wi * weights for wi in wt])
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    return nodes, weights


def bm_potential(f: TestFunction, x, d: int, n_angular: int = 24, epsrel: float = 1e-10) -> BrownianPotential:
    """V(f, x) = C(d) int f(y) |x - y|^(2-d) dy for f in CL(R^d).

    Radial f (about a center c, ``s = |x - c|``): the sphere average of
    ``|x - y|^(2-d)`` over ``|y - c| = rho`` is ``max(s, rho)^(2-d)``, so
    ``V = C(d) |S^(d-1)| int_0^inf rho^(d-1) f(rho) max(s, rho)^(2-d) drho``,
    split at ``rho = s``.

    Other f (bounded support required): polar coordinates about x, where the
    kernel singularity cancels against the volume element,
    ``V = C(d) int_0^R r A(r) dr`` with ``A`` the integral of f over the
    sphere of radius r (product rule with ``n_angular`` nodes per angle) and
    composite Gauss-Legendre panels in r, finer inside r = 1. This route only
    resolves features wider than about ``r * pi / n_angular``.

    The reported a-priori bound is
    ``|V| <= C(d) (|S^(d-1)|/2 ||f||_inf + ||f||_1)``.
    """
    if d < 3:
        raise DimensionTooSmall(f"Brownian potential diverges for d={d} < 3")
    x = np.asarray(x, dtype=float).reshape(d)
    cd = newtonian_constant(d)
    bound_c = cd * max(sphere_area(d) / 2, 1.0)
    if f.radial_profile(0.0) is not None:
        s = float(np.linalg.norm(x - np.asarray(f.center)))

        def radial(rho):
            return rho ** (d - 1) * float(f.radial_profile(rho)) * max(s, rho) ** (2 - d)

        edges = sorted({0.0, s, *(([f.radius]) if hasattr(f, "radius") else [])})
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += integrate.quad(radial, lo, hi, epsabs=0, epsrel=epsrel, limit=200)[0]
        total += integrate.quad(radial, edges[-1], np.inf, epsabs=1e-15, epsrel=epsrel, limit=400)[0]
        return BrownianPotential(value=cd * sphere_area(d) * total, bound_constant=bound_c, cl_norm=f.cl_norm)
    nodes, weights = _sphere_rule(d, n_angular)
    support = f.negligible_radius(0.0)
    if support is None or not math.isfinite(support[1]):
        raise PreconditionError("the polar route needs f with bounded support or a radial profile")
    r_out = max(1.0, float(np.linalg.norm(x - np.asarray(support[0]))) + support[1])
    # composite Gauss-Legendre: the integrand is only piecewise smooth for sampled f
    gl_t, gl_w = np.polynomial.legendre.leggauss(8)
    edges = np.concatenate([np.linspace(0.0, 1.0, 65), np.linspace(1.0, r_out, 1 + 4 * int(math.ceil(16 * r_out)))[1:]])
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    radii = (mid[:, None] + half[:, None] * gl_t).ravel()
    rw = (half[:, None] * gl_w).ravel()
    total = 0.0
    for start in range(0, radii.size, 256):
        r = radii[start : start + 256]
        vals = np.asarray(f(x + r[:, None, None] * nodes[None]))
        total += float(np.sum(rw[start : start + 256] * r * (vals @ weights)))
    return BrownianPotential(value=cd * total, bound_constant=bound_c, cl_norm=f.cl_norm)
