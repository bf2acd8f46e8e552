"""Command line front end: ``greenmeasure <subcommand> [flags]``.

Settings come from an optional JSON run config (``--config``) merged with
flags; flags win. Every JSON output carries the canonical config echo under
``"config"``. Exit codes: 0 success, 2 parse error, 3 validation failure,
4 mathematical precondition, 5 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .audit import audit_an_bound, audit_exp_bound, audit_gauss_bound, audit_newtonian
from .errors import GreenMeasureError, SpecError, ValidationError
from .functions import parse_test_function
from .green import (
    bm_potential,
    g_regular_fourier,
    g_regular_series,
    gauss_g0_closed,
    potential,
    resolvent_apply,
)
from .kernels import kernel_fourier, parse_kernel_spec, validate_kernel
from .montecarlo import MCConfig, estimate_potential_bm, estimate_potential_cpp
from .spectral import GridSpec, write_field_csv
from .verify import run_suite

SUBCOMMANDS = ("kernel info", "green compute", "green potential", "mc", "mc-bm", "audit", "verify")


# --------------------------------------------------------------------------
# run config


@dataclass
class GridConfig:
    n: int = 128
    L: float = 10.0


@dataclass
class MCSettings:
    paths: int = 10_000
    horizon: float = 40.0
    dt: float = 0.01
    seed: int = 0
    workers: int = 1
    chunk: int = 1024


@dataclass
class Outputs:
    json: str | None = None
    csv: str | None = None
    paths_csv: str | None = None


@dataclass
class Tolerances:
    series_K: int = 200
    series_tol: float = 1e-10
    newtonian: float = 0.05


@dataclass
class RunConfig:
    subcommand: str
    kernel: str | None = None
    dim: int = 3
    grid: GridConfig = field(default_factory=GridConfig)
    lam: float = 0.0
    method: str = "fourier"
    zero_mode: str = "excluded"
    lambda_floor: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    f: str = "gauss:width=1,height=1"
    x: list | None = None
    process: str = "jump"
    mc: MCSettings = field(default_factory=MCSettings)
    outputs: Outputs = field(default_factory=Outputs)
    radii: list | None = None
    n_list: list = field(default_factory=lambda: [1, 2, 4])
    prop: str = "gauss"
    b: float = 1.0
    route: str = "grid"
    suite: str = "core"
    tolerances: Tolerances = field(default_factory=Tolerances)

    # JSON key <-> attribute name where they differ
    _RENAMES = {"lambda": "lam"}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return _build(cls, data, "")

    def to_dict(self) -> dict:
        inverse = {v: k for k, v in self._RENAMES.items()}
        return {inverse.get(k, k): v for k, v in dataclasses.asdict(self).items()}

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def point(self) -> np.ndarray:
        x = np.zeros(self.dim) if self.x is None else np.asarray(self.x, dtype=float)
        if x.shape != (self.dim,):
            raise SpecError(f"point has {x.size} coordinates, expected dim={self.dim}")
        return x

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.dim, int(self.grid.n), float(self.grid.L))

    def mc_config(self) -> MCConfig:
        m = self.mc
        return MCConfig(
            paths=int(m.paths),
            horizon=float(m.horizon),
            lam=float(self.lam),
            dt=float(m.dt),
            seed=int(m.seed),
            chunk=int(m.chunk),
            workers=int(m.workers),
        )


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise SpecError(f"config section {prefix or '<root>'!r} must be an object")
    renames = getattr(cls, "_RENAMES", {})
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        name = renames.get(key, key)
        if name not in fields or name.startswith("_"):
            raise SpecError(f"unknown config key {prefix + key!r}")
        sub = fields[name].default_factory if fields[name].default_factory is not dataclasses.MISSING else None
        if sub is not None and dataclasses.is_dataclass(sub):
            kwargs[name] = _build(sub, value, prefix + key + ".")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def _set(data: dict, dotted: str, value) -> None:
    *head, last = dotted.split(".")
    for part in head:
        data = data.setdefault(part, {})
    data[last] = value


# --------------------------------------------------------------------------
# flag parsing helpers


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def _radii(text: str) -> list:
    """``start:stop:count`` (inclusive, evenly spaced) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except (ValueError, IndexError):
            raise argparse.ArgumentTypeError(f"radii must be start:stop:count, got {text!r}") from None
        if len(parts) != 3 or count < 1:
            raise argparse.ArgumentTypeError(f"radii must be start:stop:count, got {text!r}")
        return [float(v) for v in np.linspace(start, stop, count)]
    return _floats(text)


# flag dest -> (config path, argparse kwargs)
_FLAGS = {
    "kernel": ("kernel", dict(help="kernel spec, e.g. gauss:b=1 or exp:delta=1")),
    "dim": ("dim", dict(type=int, help="space dimension")),
    "n": ("grid.n", dict(type=int, help="points per axis (power of two)")),
    "L": ("grid.L", dict(type=float, help="box half-width")),
    "lam": ("lam", dict(type=float, help="discount rate lambda >= 0")),
    "method": ("method", dict(choices=["fourier", "series"])),
    "zero_mode": ("zero_mode", dict(choices=["excluded", "lambda_floor"])),
    "lambda_floor": ("lambda_floor", dict(type=_floats, help="comma list of floor values")),
    "f": ("f", dict(help="test function, e.g. gauss:width=1,height=1,center=0;0;0")),
    "x": ("x", dict(type=_floats, help="evaluation / starting point, comma list")),
    "process": ("process", dict(choices=["jump", "brownian"])),
    "paths": ("mc.paths", dict(type=int)),
    "horizon": ("mc.horizon", dict(type=float)),
    "dt": ("mc.dt", dict(type=float)),
    "seed": ("mc.seed", dict(type=int)),
    "workers": ("mc.workers", dict(type=int)),
    "chunk": ("mc.chunk", dict(type=int)),
    "out": ("outputs.json", dict(help="JSON output path")),
    "csv": ("outputs.csv", dict(help="CSV output path")),
    "paths_csv": ("outputs.paths_csv", dict(help="per-path CSV output path")),
    "radii": ("radii", dict(type=_radii, help="start:stop:count or comma list")),
    "n_list": ("n_list", dict(type=_ints)),
    "prop": ("prop", dict(choices=["gauss", "exp", "an", "newtonian"])),
    "b": ("b", dict(type=float)),
    "route": ("route", dict(choices=["grid", "hankel"])),
    "suite": ("suite", dict()),
    "series_K": ("tolerances.series_K", dict(type=int)),
    "series_tol": ("tolerances.series_tol", dict(type=float)),
}

_COMMAND_FLAGS = {
    "kernel info": ["kernel", "dim"],
    "green compute": ["kernel", "dim", "n", "L", "lam", "method", "zero_mode", "lambda_floor", "series_K",
                      "series_tol", "out", "csv"],
    "green potential": ["kernel", "dim", "n", "L", "lam", "f", "x", "process", "out"],
    "mc": ["kernel", "dim", "lam", "f", "x", "paths", "horizon", "seed", "workers", "chunk", "out", "paths_csv"],
    "mc-bm": ["dim", "lam", "f", "x", "paths", "horizon", "dt", "seed", "workers", "chunk", "out", "paths_csv"],
    "audit": ["prop", "kernel", "b", "dim", "radii", "n", "L", "zero_mode", "lambda_floor", "route", "n_list", "out"],
    "verify": ["suite", "dim", "out"],
}


def _flag_name(dest: str) -> str:
    return {"lam": "--lambda"}.get(dest, "--" + dest.replace("_", "-"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="greenmeasure", description="Green measures of jump processes and Brownian motion")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    top = parser.add_subparsers(dest="command", required=True)

    def add(sub, name):
        sub.add_argument("--config", default=argparse.SUPPRESS, help="JSON run config; flags override it")
        for dest in _COMMAND_FLAGS[name]:
            sub.add_argument(_flag_name(dest), dest=dest, default=argparse.SUPPRESS, **_FLAGS[dest][1])
        sub.set_defaults(subcommand=name)

    for group, actions in (("kernel", ["info"]), ("green", ["compute", "potential"])):
        gp = top.add_parser(group)
        inner = gp.add_subparsers(dest="action", required=True)
        for action in actions:
            add(inner.add_parser(action), f"{group} {action}")
    for name in ("mc", "mc-bm", "audit", "verify"):
        add(top.add_parser(name), name)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    path = getattr(args, "config", None)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise SpecError("config root must be a JSON object")
        data.pop("subcommand", None)
        data = {RunConfig._RENAMES.get(k, k): v for k, v in data.items()}
    for dest in _COMMAND_FLAGS[args.subcommand]:
        if hasattr(args, dest):
            _set(data, _FLAGS[dest][0], getattr(args, dest))
    data["subcommand"] = args.subcommand
    cfg = RunConfig.from_dict(data)
    needs_kernel = cfg.subcommand in ("kernel info", "green compute", "mc") or (
        cfg.subcommand == "green potential" and cfg.process == "jump"
    )
    if needs_kernel and cfg.kernel is None:
        raise SpecError(f"{cfg.subcommand} needs --kernel")
    return cfg


# --------------------------------------------------------------------------
# outputs


class _Staged:
    """Collects output files and publishes them together; nothing is left behind on failure."""

    def __init__(self):
        self.parts: list[tuple[str, str]] = []

    def path(self, final: str) -> str:
        part = final + ".part"
        self.parts.append((part, final))
        return part

    def text(self, final: str, content: str) -> None:
        with open(self.path(final), "w", encoding="utf-8") as fh:
            fh.write(content)

    def commit(self) -> None:
        for part, final in self.parts:
            os.replace(part, final)
        self.parts = []

    def discard(self) -> None:
        for part, _ in self.parts:
            if os.path.exists(part):
                os.remove(part)
        self.parts = []


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats with strings so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return "infinite" if obj > 0 else ("-infinite" if obj < 0 else "nan")
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, default=_json_default, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_kernel_info(cfg: RunConfig, out: _Staged) -> dict:
    kernel = parse_kernel_spec(cfg.kernel, cfg.dim)
    mom = validate_kernel(kernel)
    ks = [0.0, 0.5, 1.0, 2.0, 4.0]
    ahat = [float(kernel_fourier(kernel, np.r_[k, np.zeros(cfg.dim - 1)])) for k in ks]
    return {
        "kernel": kernel.spec_string(),
        "tail_class": kernel.tail_class.value,
        "mass": mom.mass,
        "sigma2": mom.second_moment if mom.second_moment_finite else "infinite",
        "sup_density": mom.sup_density,
        "fourier_samples": {"k": ks, "a_hat": ahat, "analytic": kernel.has_analytic_fourier()},
    }


def cmd_green_compute(cfg: RunConfig, out: _Staged) -> dict:
    kernel = parse_kernel_spec(cfg.kernel, cfg.dim)
    grid = cfg.grid_spec()
    if cfg.method == "fourier":
        est = g_regular_fourier(kernel, grid, cfg.lam, zero_mode=cfg.zero_mode, lambda_floor=tuple(cfg.lambda_floor))
    else:
        est = g_regular_series(kernel, grid, cfg.lam, K=cfg.tolerances.series_K, tol=cfg.tolerances.series_tol)
    est.check_invariants()
    sidecar = est.sidecar()
    if cfg.outputs.csv:
        write_field_csv(est.regular_part, out.path(cfg.outputs.csv), value_name="g")
        sidecar["csv"] = cfg.outputs.csv
        json_path = cfg.outputs.json or os.path.splitext(cfg.outputs.csv)[0] + ".json"
        out.text(json_path, dumps({**sidecar, "config": cfg.to_dict()}))
    elif cfg.outputs.json:
        out.text(cfg.outputs.json, dumps({**sidecar, "config": cfg.to_dict()}))
    sidecar["g_at_origin"] = est.value_at(np.zeros(cfg.dim))
    return sidecar


def cmd_green_potential(cfg: RunConfig, out: _Staged) -> dict:
    f = parse_test_function(cfg.f, cfg.dim)
    x = cfg.point()
    if cfg.process == "brownian":
        bp = bm_potential(f, x, cfg.dim)
        return {"process": "brownian", "value": bp.value, "cl_bound": bp.cl_bound, "cl_norm": bp.cl_norm}
    kernel = parse_kernel_spec(cfg.kernel, cfg.dim)
    grid = cfg.grid_spec()
    result = {"process": "jump", "kernel": kernel.spec_string(), "lambda": cfg.lam}
    if cfg.lam > 0:
        result["value"] = resolvent_apply(kernel, f, cfg.lam, grid).at(x)
        return result
    est = g_regular_fourier(kernel, grid, 0.0, zero_mode=cfg.zero_mode, lambda_floor=tuple(cfg.lambda_floor))
    anchor = None
    if kernel.family == "gauss":
        origin = np.zeros(cfg.dim)
        anchor = (origin, gauss_g0_closed(kernel.param, cfg.dim, origin))
        result["anchor"] = "gauss closed form at origin"
    result["value"] = potential(est, f, x, anchor=anchor)
    return result


def _mc_result(cfg: RunConfig, est, out: _Staged) -> dict:
    if cfg.outputs.paths_csv:
        est.write_paths_csv(out.path(cfg.outputs.paths_csv))
    return est.to_dict()


def cmd_mc(cfg: RunConfig, out: _Staged) -> dict:
    kernel = parse_kernel_spec(cfg.kernel, cfg.dim)
    f = parse_test_function(cfg.f, cfg.dim)
    est = estimate_potential_cpp(kernel, f, cfg.point(), cfg.mc_config(), keep_paths=bool(cfg.outputs.paths_csv))
    return _mc_result(cfg, est, out)


def cmd_mc_bm(cfg: RunConfig, out: _Staged) -> dict:
    f = parse_test_function(cfg.f, cfg.dim)
    est = estimate_potential_bm(f, cfg.point(), cfg.mc_config(), keep_paths=bool(cfg.outputs.paths_csv))
    return _mc_result(cfg, est, out)


def cmd_audit(cfg: RunConfig, out: _Staged) -> dict:
    radii = cfg.radii
    if cfg.prop == "gauss":
        if radii is None:
            raise SpecError("audit --prop gauss needs --radii")
        return audit_gauss_bound(cfg.b, cfg.dim, radii).to_dict()
    kernel = parse_kernel_spec(cfg.kernel or "exp:delta=1", cfg.dim)
    grid = cfg.grid_spec()
    if cfg.prop == "an":
        return audit_an_bound(kernel, cfg.n_list, grid, radii).to_dict()
    if radii is None:
        raise SpecError(f"audit --prop {cfg.prop} needs --radii")
    if cfg.prop == "exp":
        floor = tuple(cfg.lambda_floor) if cfg.zero_mode == "lambda_floor" else None
        return audit_exp_bound(kernel, grid, radii, cfg.zero_mode, floor, cfg.route).to_dict()
    return audit_newtonian(kernel, cfg.dim, None, radii, grid, cfg.tolerances.newtonian).to_dict()


def cmd_verify(cfg: RunConfig, out: _Staged) -> dict:
    results = run_suite(cfg.suite, cfg.dim)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  {r.value:.3e} <= {r.threshold:.1e}")
    payload = {"suite": cfg.suite, "checks": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}
    if not payload["passed"]:
        failed = [r.name for r in results if not r.passed]
        err = ValidationError(f"invariant checks failed: {', '.join(failed)}")
        err.payload = payload
        raise err
    return payload


COMMANDS = {
    "kernel info": cmd_kernel_info,
    "green compute": cmd_green_compute,
    "green potential": cmd_green_potential,
    "mc": cmd_mc,
    "mc-bm": cmd_mc_bm,
    "audit": cmd_audit,
    "verify": cmd_verify,
}


def _fail(exc: Exception, code: int) -> int:
    body = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if hasattr(exc, "payload"):
        body["details"] = exc.payload
    sys.stderr.write(dumps(body))
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = _Staged()
    try:
        cfg = load_config(args)
        result = COMMANDS[cfg.subcommand](cfg, out)
        payload = {**result, "config": cfg.to_dict()}
        text = dumps(payload)
        if cfg.outputs.json and cfg.subcommand != "green compute":
            out.text(cfg.outputs.json, text)
        out.commit()
    except GreenMeasureError as exc:
        out.discard()
        return _fail(exc, exc.exit_code)
    except (ValueError, TypeError) as exc:
        out.discard()
        return _fail(exc, ValidationError.exit_code)
    except BaseException:
        out.discard()
        raise
    if cfg.subcommand != "verify":
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
