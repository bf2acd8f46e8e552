"""Monte Carlo path functionals for potentials and resolvents.

Estimates ``E^x int_0^T exp(-lambda t) f(X(t)) dt`` for the unit-rate compound
Poisson process with jump density a (generator ``a * f - f``) and for
Brownian motion with generator Delta (increments ``N(0, 2 dt I)``).

Random streams
--------------
Paths are simulated in fixed-size chunks. Chunk ``c`` draws from a Philox
generator keyed by ``SeedSequence(seed, spawn_key=(c,))``, so the sample for
every path depends only on ``(seed, chunk size, path index)``, never on the
number of worker threads. Per-path values are written into one array and
reduced in index order, which makes results bit-identical for any worker
count.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .errors import RecurrentRegime, SpecError
from .functions import TestFunction
from .kernels import JumpKernel, kernel_moments, sample_jump

__all__ = [
    "MCConfig",
    "PotentialEstimate",
    "chunk_rng",
    "simulate_cpp_functional",
    "estimate_potential_cpp",
    "simulate_bm_functional",
    "estimate_potential_bm",
    "bm_positions",
]

# |sup excursion| > D within a skipped block has probability <= 4 d Phi(-Z)
SKIP_Z = 7.5


@dataclass(frozen=True)
class MCConfig:
    paths: int = 10_000
    horizon: float = 40.0
    lam: float = 0.0
    dt: float = 1e-2
    seed: int = 0
    chunk: int = 1024
    workers: int = 1
    skip_eps: float = 1e-14

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise SpecError(f"paths must be a positive integer, got {self.paths!r}")
        if not self.horizon > 0:
            raise SpecError(f"horizon must be positive, got {self.horizon!r}")
        if not (self.dt > 0 and self.dt <= self.horizon):
            raise SpecError(f"dt must lie in (0, horizon], got {self.dt!r}")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise SpecError(f"lambda must be finite and >= 0, got {self.lam!r}")
        if self.chunk < 1 or self.workers < 1:
            raise SpecError("chunk and workers must be positive")
        if not 0 <= self.seed < 2**64:
            raise SpecError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class PotentialEstimate:
    mean: float
    stderr: float
    paths: int
    horizon: float
    lam: float
    tail_bias_bound: float
    discretization_bias_bound: float
    seed: int
    diagnostics: dict = field(default_factory=dict)
    path_values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("path_values")
        out["M"] = out.pop("paths")
        out["T"] = out.pop("horizon")
        out["lambda"] = out.pop("lam")
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def write_paths_csv(self, path) -> None:
        if self.path_values is None:
            raise ValueError("estimate was computed without keep_paths=True")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("path_index,functional_value\n")
            for i, v in enumerate(self.path_values):
                fh.write(f"{i},{float(v)!r}\n")


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk_index,))))


def _segment_weights(s: np.ndarray, lam: float) -> np.ndarray:
    """Exact ``int_{s_i}^{s_{i+1}} exp(-lam t) dt`` for consecutive times along the last axis."""
    if lam == 0:
        return np.diff(s, axis=-1)
    e = np.exp(-lam * s)
    return (e[..., :-1] - e[..., 1:]) / lam


def _cpp_block(kernel: JumpKernel, f, x0, T, lam, rng, n_paths):
    n = int(T + 6 * math.sqrt(T) + 10)
    times = np.cumsum(rng.standard_exponential((n_paths, n)), axis=1)
    while np.any(times[:, -1] < T):
        more = times[:, -1:] + np.cumsum(rng.standard_exponential((n_paths, n)), axis=1)
        times = np.hstack([times, more])
    n_cols = times.shape[1]
    jumps = sample_jump(kernel, rng, (n_paths, n_cols - 1))
    states = np.empty((n_paths, n_cols, kernel.dim))
    states[:, 0] = x0
    np.cumsum(jumps, axis=1, out=states[:, 1:])
    states[:, 1:] += x0
    s = np.minimum(np.concatenate([np.zeros((n_paths, 1)), times], axis=1), T)
    values = np.sum(_segment_weights(s, lam) * f(states), axis=1)
    return values, np.sum(times < T, axis=1)


def simulate_cpp_functional(kernel: JumpKernel, f, x0, T: float, lam: float, rng: np.random.Generator) -> float:
    """One path of ``int_0^T exp(-lam t) f(X(t)) dt`` for the compound Poisson process.

    Jump times are partial sums of Exp(1) variables; the state is constant in
    between, so each segment is integrated exactly.
    """
    x0 = np.asarray(x0, dtype=float).reshape(kernel.dim)
    values, _ = _cpp_block(kernel, f, x0, float(T), float(lam), rng, 1)
    return float(values[0])


def _run_chunks(cfg: MCConfig, block):
    n_chunks = -(-cfg.paths // cfg.chunk)

    def run(c):
        size = min(cfg.chunk, cfg.paths - c * cfg.chunk)
        return block(chunk_rng(cfg.seed, c), size)

    if cfg.workers == 1:
        results = [run(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, range(n_chunks)))
    return [np.concatenate(parts) for parts in zip(*results)]


def _summary(values: np.ndarray):
    m = values.size
    mean = float(np.sum(values) / m)
    stderr = float(np.std(values, ddof=1) / math.sqrt(m)) if m > 1 else math.inf
    return mean, stderr


def estimate_potential_cpp(
    kernel: JumpKernel, f: TestFunction, x0, cfg: MCConfig, keep_paths: bool = False
) -> PotentialEstimate:
    """Mean of ``cfg.paths`` independent compound Poisson path functionals.

    The tail bias of truncating at T is bounded rigorously by
    ``||f||_inf exp(-lambda T) / lambda`` when lambda > 0. For lambda = 0 the
    reported bound is a local-limit heuristic,
    ``||f||_1 (d / (2 pi sigma^2))^(d/2) (2/(d-2)) T^(1-d/2)``.
    """
    d = kernel.dim
    if cfg.lam == 0 and d < 3:
        raise RecurrentRegime(f"the process is recurrent in d={d}; use lambda > 0")
    x0 = np.asarray(x0, dtype=float).reshape(d)
    T, lam = float(cfg.horizon), float(cfg.lam)
    values, njumps = _run_chunks(cfg, lambda rng, size: _cpp_block(kernel, f, x0, T, lam, rng, size))
    mean, stderr = _summary(values)
    if lam > 0:
        tail = f.sup_norm * math.exp(-lam * T) / lam
    else:
        sigma2 = kernel_moments(kernel).second_moment
        tail = f.l1_norm * (d / (2 * math.pi * sigma2)) ** (d / 2) * (2 / (d - 2)) * T ** (1 - d / 2)
    return PotentialEstimate(
        mean=mean,
        stderr=stderr,
        paths=cfg.paths,
        horizon=T,
        lam=lam,
        tail_bias_bound=tail,
        discretization_bias_bound=0.0,
        seed=cfg.seed,
        diagnostics={"mean_jumps": float(np.sum(njumps) / njumps.size), "kernel": kernel.spec_string()},
        path_values=values if keep_paths else None,
    )


def _bm_block(f, x0, T, dt, lam, rng, n_paths, eps):
    """Trapezoid rule for ``int_0^T exp(-lam t) f(B_t) dt`` on the grid ``t_i = i dt``.

    Where f is below ``eps`` on a ball around the path (the ball of radius
    ``D`` clears the region where |f| > eps), ``m`` grid steps are taken in
    one exact Gaussian increment, ``m = floor(D^2 / (2 d Z^2 dt))``; the
    chance that the skipped path reaches that region is below ``4 d Phi(-Z)``.
    Skipped interior points contribute at most ``eps`` each.
    """
    d = x0.size
    n_steps = int(round(T / dt))
    support = f.negligible_radius(eps) if eps > 0 else None
    pos = np.tile(x0, (n_paths, 1))
    step = np.zeros(n_paths, dtype=np.int64)
    f_prev = np.asarray(f(pos), dtype=float)
    acc = np.zeros(n_paths)
    variation = np.zeros(n_paths)
    skipped = np.zeros(n_paths)
    blocks = np.zeros(n_paths, dtype=np.int64)
    active = np.arange(n_paths)
    while active.size:
        p = pos[active]
        m = np.ones(active.size, dtype=np.int64)
        if support is not None:
            center, radius = support
            gap = np.linalg.norm(p - np.asarray(center), axis=1) - radius
            far = gap > 0
            m[far] = np.maximum(1, np.floor(gap[far] ** 2 / (2 * d * SKIP_Z**2 * dt))).astype(np.int64)
        m = np.minimum(m, n_steps - step[active])
        p = p + np.sqrt(2 * dt * m)[:, None] * rng.standard_normal((active.size, d))
        f_new = np.asarray(f(p), dtype=float)
        t0 = step[active] * dt
        t1 = (step[active] + m) * dt
        w0, w1 = (np.exp(-lam * t0), np.exp(-lam * t1)) if lam else (1.0, 1.0)
        acc[active] += 0.5 * dt * (w0 * f_prev[active] + w1 * f_new)
        variation[active] += np.abs(f_new - f_prev[active])
        long = m > 1
        skipped[active[long]] += (m[long] - 1) * dt
        blocks[active[long]] += 1
        pos[active] = p
        f_prev[active] = f_new
        step[active] += m
        active = active[step[active] < n_steps]
    return acc, variation, skipped, blocks


def simulate_bm_functional(f, x0, T: float, dt: float, rng: np.random.Generator, lam: float = 0.0, eps: float = 1e-14) -> float:
    """One Brownian path of ``int_0^T exp(-lam t) f(B_t) dt`` (trapezoid on a dt grid)."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    acc, *_ = _bm_block(f, x0, float(T), float(dt), float(lam), rng, 1, eps)
    return float(acc[0])


def estimate_potential_bm(f: TestFunction, x0, cfg: MCConfig, keep_paths: bool = False) -> PotentialEstimate:
    """Mean of Brownian path functionals, generator Delta.

    ``discretization_bias_bound`` is heuristic: the mean of
    ``(dt/2) sum_i |f(B_{t_(i+1)}) - f(B_{t_i})|`` (the trapezoid's local
    modulus along the path) plus the worst-case contribution of skipped
    steps, ``eps`` per step.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    d = x0.size
    if d != f.dim:
        raise SpecError(f"starting point has dimension {d}, test function {f.dim}")
    if cfg.lam == 0 and d < 3:
        raise RecurrentRegime(f"Brownian motion is recurrent in d={d}; use lambda > 0")
    T, dt, lam = float(cfg.horizon), float(cfg.dt), float(cfg.lam)
    if abs(round(T / dt) * dt - T) > 1e-9 * T:
        raise SpecError(f"horizon {T} is not a whole number of steps of {dt}")
    acc, variation, skipped, blocks = _run_chunks(
        cfg, lambda rng, size: _bm_block(f, x0, T, dt, lam, rng, size, cfg.skip_eps)
    )
    mean, stderr = _summary(acc)
    if lam > 0:
        tail = f.sup_norm * math.exp(-lam * T) / lam
    else:
        tail = f.l1_norm * (4 * math.pi) ** (-d / 2) * (2 / (d - 2)) * T ** (1 - d / 2)
    miss = 4 * d * special.ndtr(-SKIP_Z)
    disc = float(
        np.sum(0.5 * dt * variation) / acc.size
        + cfg.skip_eps * np.sum(skipped) / acc.size
        + miss * f.sup_norm * T * np.sum(blocks) / acc.size
    )
    return PotentialEstimate(
        mean=mean,
        stderr=stderr,
        paths=cfg.paths,
        horizon=T,
        lam=lam,
        tail_bias_bound=tail,
        discretization_bias_bound=disc,
        seed=cfg.seed,
        diagnostics={
            "dt": dt,
            "mean_skipped_time": float(np.sum(skipped) / acc.size),
            "mean_skip_blocks": float(np.sum(blocks) / acc.size),
        },
        path_values=acc if keep_paths else None,
    )


def bm_positions(d: int, paths: int, t: float, dt: float, rng: np.random.Generator) -> np.ndarray:
    """B(t) - B(0) for ``paths`` Brownian paths built from ``t/dt`` Gaussian steps."""
    n = int(round(t / dt))
    out = np.zeros((paths, d))
    for _ in range(n):
        out += math.sqrt(2 * dt) * rng.standard_normal((paths, d))
    return out
