"""Command-line orchestration: classify | render | verify | estimate.

Exit codes: 0 when the command (and every executed check) succeeded,
2 when a verification check failed, 1 on usage or runtime errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, analysis, calculus, suites
from .errors import QrdynError, UsageError
from .geometry import Box
from .maps import MAP_NAMES, MapInstance, build_named_map
from .escape import DEFAULT_M_BIG, classify_grid, estimate_certificate
from .render import (
    ReportDocument,
    SliceSpec,
    export_voxels,
    load_grid,
    save_grid,
    write_class_ppm,
    write_escape_pgm,
    write_report,
    write_report_csv,
)

_CERT_CHOICES = ("auto", "holder", "doubling-search", "none")

# config-file keys mirror the long flags (hyphens or underscores both accepted)
_CONFIG_KEYS = {
    "map", "dim", "k", "lambda", "coeffs", "box", "res", "horizon", "cert",
    "mbig", "threads", "seed", "out", "figures", "slice_axis", "slice_offset",
    "suite", "samples", "uqr_bound", "eps_eq", "delta_eq", "radii", "grid",
    "at", "radius",
}


@dataclass
class RunConfig:
    command: str
    map_name: Optional[str]
    map_instance: Optional[MapInstance]
    dim: int
    box: Box
    resolution: int
    horizon: int
    cert_method: str
    m_big: float
    threads: int
    seed: int
    out: Path
    figures: bool
    slice_spec: SliceSpec
    suite: Optional[str] = None
    samples: int = 10_000
    uqr_bound: float = 4.5
    eps_eq: float = 1e-3
    delta_eq: float = 0.5
    radii: tuple = (10.0, 20.0, 40.0)
    grid_path: Optional[Path] = None
    at_point: Optional[tuple] = None
    index_radius: Optional[float] = None
    lam: float = 2.0
    map_params: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 1, not argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="qrdyn", description=__doc__)
    p.add_argument("--version", action="version", version=f"qrdyn {__version__}")
    sub = p.add_subparsers(dest="command")
    for name in ("classify", "render", "verify", "estimate"):
        sp = sub.add_parser(name, add_help=True)
        sp.add_argument("--config", type=str, default=None,
                        help="key = value file; flags override its entries")
        sp.add_argument("--map", type=str, default=None, choices=MAP_NAMES)
        sp.add_argument("--dim", type=int, default=None, choices=(2, 3))
        sp.add_argument("--k", type=int, default=None, help="winding parameter")
        sp.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="stretch of the conjugated quadratic")
        sp.add_argument("--coeffs", type=str, default=None,
                        help="complex polynomial coefficients, highest first: 're' or 're:im', comma separated")
        sp.add_argument("--box", type=str, default=None,
                        help="'lo,hi' for every axis, or per-axis 'x0,x1,y0,y1[,z0,z1]'")
        sp.add_argument("--res", type=int, default=None, help="cells per axis")
        sp.add_argument("--horizon", type=int, default=None)
        sp.add_argument("--cert", type=str, default=None, choices=_CERT_CHOICES)
        sp.add_argument("--mbig", type=float, default=None,
                        help="heuristic escape threshold for uncertified maps")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
        sp.add_argument("--slice-axis", dest="slice_axis", type=int, default=None)
        sp.add_argument("--slice-offset", dest="slice_offset", type=float, default=None)
        if name == "verify":
            sp.add_argument("--suite", type=str, default=None, choices=suites.SUITE_NAMES)
            sp.add_argument("--uqr-bound", dest="uqr_bound", type=float, default=None)
            sp.add_argument("--eps-eq", dest="eps_eq", type=float, default=None)
            sp.add_argument("--delta-eq", dest="delta_eq", type=float, default=None)
            sp.add_argument("--radii", type=str, default=None)
        if name in ("verify", "estimate"):
            sp.add_argument("--samples", type=int, default=None)
        if name == "render":
            sp.add_argument("--grid", type=str, default=None, help="grid container from classify")
        if name == "estimate":
            sp.add_argument("--at", type=str, default=None, help="point for the local index")
            sp.add_argument("--radius", type=float, default=None)
    return p


def _read_config_file(path: str) -> dict:
    values: dict = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown configuration key {key!r}")
        values[key] = value
    return values


def _pick(flag, filevals: dict, key: str, cast, default):
    if flag is not None:
        return flag
    if key in filevals:
        raw = filevals[key]
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"configuration key {key!r}: bad value {raw!r}") from exc
    return default


def _cast_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _parse_box(raw: str, dim: int) -> Box:
    parts = [float(v) for v in raw.split(",") if v.strip() != ""]
    if len(parts) == 2:
        lo, hi = parts
        return Box([lo] * dim, [hi] * dim)
    if len(parts) == 2 * dim:
        return Box(parts[0::2], parts[1::2])
    raise UsageError(f"box needs 'lo,hi' or {2 * dim} per-axis values, got {raw!r}")


def _parse_coeffs(raw: str):
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            re_s, im_s = item.split(":", 1)
            out.append((float(re_s), float(im_s)))
        else:
            out.append((float(item), 0.0))
    return out


def _default_dim(map_name: str) -> int:
    return 3 if map_name in ("winding", "zorich") else 2


# flags whose values may begin with '-' (argparse would read them as options)
_DASH_VALUE_FLAGS = ("--box", "--coeffs", "--at", "--radii", "--slice-offset")


def _join_dash_values(argv) -> list:
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _DASH_VALUE_FLAGS:
            val = next(it, None)
            if val is None:
                out.append(tok)
            else:
                out.append(f"{tok}={val}")
        else:
            out.append(tok)
    return out


def parse_config(argv) -> RunConfig:
    """Parse flags and optional config file into a fully validated RunConfig."""
    args = _build_parser().parse_args(_join_dash_values(argv))
    if args.command is None:
        raise UsageError("a command is required: classify | render | verify | estimate")
    filevals = _read_config_file(args.config) if args.config else {}

    map_name = _pick(args.map, filevals, "map", str, None)
    if map_name is not None and map_name not in MAP_NAMES:
        raise UsageError(f"unknown map {map_name!r}; choose from {', '.join(MAP_NAMES)}")
    if args.command != "render" and map_name is None:
        raise UsageError("--map is required for this command")

    dim = _pick(args.dim, filevals, "dim", int, _default_dim(map_name or "zsquared"))
    if dim not in (2, 3):
        raise UsageError("only dimensions 2 and 3 are supported")
    k = _pick(args.k, filevals, "k", int, None)
    lam = _pick(args.lam, filevals, "lambda", float, 2.0)
    coeffs_raw = _pick(args.coeffs, filevals, "coeffs", str, None)
    coeffs = _parse_coeffs(coeffs_raw) if coeffs_raw else None

    map_instance = None
    map_params: dict = {}
    if map_name is not None:
        try:
            map_instance = build_named_map(map_name, dim=dim, k=k, lam=lam, coeffs=coeffs)
        except (QrdynError, ValueError) as exc:
            raise UsageError(f"map configuration invalid: {exc}") from exc
        dim = map_instance.dim
        if map_name == "winding":
            map_params["k"] = k
        if map_name == "conjugated_quadratic":
            map_params["lambda"] = lam
        if map_name == "complex_poly":
            map_params["coeffs"] = [list(c) for c in coeffs]

    box_raw = _pick(args.box, filevals, "box", str, "-2.5,2.5")
    box = _parse_box(box_raw, dim)
    if box.dim != dim:
        raise UsageError(f"box has dimension {box.dim}, map needs {dim}")
    resolution = _pick(args.res, filevals, "res", int, 256 if dim == 2 else 64)
    if resolution < 1:
        raise UsageError("resolution must be positive")
    horizon = _pick(args.horizon, filevals, "horizon", int, 100)
    if not 1 <= horizon <= 0xFFFE:
        raise UsageError("horizon must be in [1, 65534]")
    cert_method = _pick(args.cert, filevals, "cert", str, "auto")
    if cert_method not in _CERT_CHOICES:
        raise UsageError(f"certificate method must be one of {_CERT_CHOICES}")
    m_big = _pick(args.mbig, filevals, "mbig", float, DEFAULT_M_BIG)
    env_threads = os.environ.get("QRDYN_THREADS")
    threads = _pick(args.threads, filevals, "threads", int,
                    int(env_threads) if env_threads else 1)
    if threads < 1:
        raise UsageError("threads must be >= 1")
    seed = _pick(args.seed, filevals, "seed", int, 0)
    out = Path(_pick(args.out, filevals, "out", str, "qrdyn-out"))
    figures = _pick(args.figures, filevals, "figures", _cast_bool, True)
    slice_axis = _pick(args.slice_axis, filevals, "slice_axis", int, dim - 1)
    axis_bound = 3 if args.command == "render" else dim  # render learns n from the grid file
    if not 0 <= slice_axis < axis_bound:
        raise UsageError(f"slice axis must be in [0, {axis_bound - 1}]")
    off_axis = min(slice_axis, dim - 1)  # render may slice an axis the default box lacks
    default_offset = float(0.5 * (box.low[off_axis] + box.high[off_axis]))
    slice_offset = _pick(args.slice_offset, filevals, "slice_offset", float, default_offset)

    cfg = RunConfig(
        command=args.command,
        map_name=map_name,
        map_instance=map_instance,
        dim=dim,
        box=box,
        resolution=resolution,
        horizon=horizon,
        cert_method=cert_method,
        m_big=m_big,
        threads=threads,
        seed=seed,
        out=out,
        figures=figures,
        slice_spec=SliceSpec(axis=slice_axis, offset=slice_offset),
        lam=lam,
        map_params=map_params,
    )

    if args.command == "verify":
        cfg.suite = _pick(args.suite, filevals, "suite", str, None)
        if cfg.suite is None:
            raise UsageError("verify requires --suite")
        if cfg.suite not in suites.SUITE_NAMES:
            raise UsageError(f"unknown suite {cfg.suite!r}")
        cfg.uqr_bound = _pick(args.uqr_bound, filevals, "uqr_bound", float, 4.5)
        cfg.eps_eq = _pick(args.eps_eq, filevals, "eps_eq", float, 1e-3)
        cfg.delta_eq = _pick(args.delta_eq, filevals, "delta_eq", float, 0.5)
        radii_raw = _pick(args.radii, filevals, "radii", str, "10,20,40")
        cfg.radii = tuple(float(v) for v in radii_raw.split(",") if v.strip())
    if args.command in ("verify", "estimate"):
        default_samples = 10_000 if args.command == "verify" else 2000
        cfg.samples = _pick(args.samples, filevals, "samples", int, default_samples)
    if args.command == "render":
        grid_raw = _pick(args.grid, filevals, "grid", str, None)
        if grid_raw is None:
            raise UsageError("render requires --grid")
        cfg.grid_path = Path(grid_raw)
    if args.command == "estimate":
        at_raw = _pick(args.at, filevals, "at", str, None)
        cfg.at_point = tuple(float(v) for v in at_raw.split(",")) if at_raw else None
        cfg.index_radius = _pick(args.radius, filevals, "radius", float, None)
    return cfg


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _map_descriptor(cfg: RunConfig) -> dict:
    desc = {"name": cfg.map_name}
    desc.update(cfg.map_params)
    if cfg.map_instance is not None:
        desc["metadata"] = cfg.map_instance.metadata.to_dict()
    return desc


def _certificate_for(cfg: RunConfig):
    f = cfg.map_instance
    if cfg.cert_method == "none":
        return None
    if cfg.cert_method == "auto":
        if not f.metadata.polynomial_type:
            return None
        return analysis.auto_certificate(f, "auto", seed=cfg.seed)
    return estimate_certificate(f, cfg.cert_method, seed=cfg.seed)


def _emit_figures(cfg: RunConfig, grid, boundary, cert) -> None:
    if not cfg.figures:
        return
    from . import figures as figmod

    figdir = cfg.out / "figures"
    figdir.mkdir(parents=True, exist_ok=True)
    title = cfg.map_name or "grid"
    figmod.render_escape_figure(grid, boundary, figdir / "escape_map.png",
                                spec=cfg.slice_spec, title=title)
    if cert is not None:
        figmod.render_certificate_figure(cert, figdir / "certificate.png", title=title)


def _cmd_classify(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    cfg.out.mkdir(parents=True, exist_ok=True)
    cert = _certificate_for(cfg)
    grid = classify_grid(cfg.map_instance, cfg.box, cfg.resolution, cert,
                         cfg.horizon, threads=cfg.threads, m_big=cfg.m_big)
    boundary = analysis.extract_boundary(grid)
    save_grid(grid, cfg.out / "grid.qrg")
    write_escape_pgm(grid, cfg.slice_spec, cfg.out / "escape.pgm")
    write_class_ppm(grid, boundary, cfg.slice_spec, cfg.out / "class.ppm")
    if grid.dim == 3:
        export_voxels(grid, cfg.out / "voxels.qrv")
    doc = ReportDocument(
        map_descriptor=_map_descriptor(cfg),
        certificate=cert.to_dict() if cert else None,
        grid_parameters=grid.parameters(),
        checks=[],
        tool_version=__version__,
        extra={"boundary_cells": int(boundary.cell_indices.size)},
    )
    doc.wall_clock_seconds = time.perf_counter() - t0
    write_report(doc, cfg.out / "report.json")
    write_report_csv(doc, cfg.out / "report.csv")
    _emit_figures(cfg, grid, boundary, cert)
    return 0


def _cmd_render(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    grid = load_grid(cfg.grid_path)
    spec = cfg.slice_spec
    if spec.axis >= grid.dim:
        spec = SliceSpec(axis=grid.dim - 1, offset=spec.offset)
    if grid.dim == 3 and not (grid.box.low[spec.axis] <= spec.offset <= grid.box.high[spec.axis]):
        spec = SliceSpec(axis=spec.axis,
                         offset=float(0.5 * (grid.box.low[spec.axis] + grid.box.high[spec.axis])))
    boundary = analysis.extract_boundary(grid)
    write_escape_pgm(grid, spec, cfg.out / "escape.pgm")
    write_class_ppm(grid, boundary, spec, cfg.out / "class.ppm")
    if cfg.figures:
        from . import figures as figmod

        figdir = cfg.out / "figures"
        figdir.mkdir(parents=True, exist_ok=True)
        figmod.render_escape_figure(grid, boundary, figdir / "escape_map.png", spec=spec)
    return 0


def _cmd_verify(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    cfg.out.mkdir(parents=True, exist_ok=True)
    f = cfg.map_instance
    if cfg.suite == "polyqr":
        result = suites.run_polyqr_suite(
            f, cfg.box, cfg.resolution, cfg.horizon,
            certificate_method=cfg.cert_method if cfg.cert_method != "none" else "auto",
            invariance_samples=cfg.samples, eps_eq=cfg.eps_eq, delta_eq=cfg.delta_eq,
            threads=cfg.threads, seed=cfg.seed,
        )
    elif cfg.suite == "uqr":
        result = suites.run_uqr_suite(
            f, cfg.box, cfg.resolution, cfg.horizon,
            map_name=cfg.map_name, lam=cfg.lam, uqr_bound=cfg.uqr_bound,
            certificate_method=cfg.cert_method if cfg.cert_method != "none" else "auto",
            threads=cfg.threads, seed=cfg.seed,
        )
    elif cfg.suite == "sharpness":
        result = suites.run_sharpness_suite(
            f, cfg.box, cfg.resolution, cfg.horizon,
            samples=cfg.samples, threads=cfg.threads, seed=cfg.seed,
        )
    elif cfg.suite == "essential":
        result = suites.run_essential_suite(
            f, radii=cfg.radii, horizon=min(cfg.horizon, 200), m_big=cfg.m_big,
            seed=cfg.seed,
        )
    else:  # unreachable after parse validation
        raise UsageError(f"unknown suite {cfg.suite!r}")

    doc = ReportDocument(
        map_descriptor=_map_descriptor(cfg),
        certificate=result.certificate.to_dict() if result.certificate else None,
        grid_parameters=result.grid.parameters() if result.grid else None,
        checks=result.checks,
        tool_version=__version__,
        extra={"suite": cfg.suite},
    )
    doc.wall_clock_seconds = time.perf_counter() - t0
    write_report(doc, cfg.out / "report.json")
    write_report_csv(doc, cfg.out / "report.csv")
    if result.grid is not None:
        _emit_figures(cfg, result.grid, result.boundary, result.certificate)
    for check in result.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}")
    return 0 if result.all_passed else 2


def _cmd_estimate(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    cfg.out.mkdir(parents=True, exist_ok=True)
    f = cfg.map_instance
    extra: dict = {}
    est = calculus.estimate_dilatation(f, cfg.box, cfg.samples, seed=cfg.seed)
    extra["dilatation"] = est.to_dict()
    if f.metadata.polynomial_type:
        rng = np.random.default_rng(cfg.seed)
        target = rng.standard_normal(f.dim)
        search = Box(2.0 * cfg.box.low, 2.0 * cfg.box.high)
        deg = calculus.estimate_degree(f, [target], search)
        extra["degree"] = deg.to_dict()
    if cfg.at_point is not None:
        radius = cfg.index_radius if cfg.index_radius is not None else 0.25
        extra["local_index"] = {
            "at": [float(v) for v in cfg.at_point],
            "radius": radius,
            "index": calculus.estimate_local_index(f, cfg.at_point, radius),
        }
    doc = ReportDocument(
        map_descriptor=_map_descriptor(cfg),
        certificate=None,
        grid_parameters=None,
        checks=[],
        tool_version=__version__,
        extra={"estimates": extra},
    )
    doc.wall_clock_seconds = time.perf_counter() - t0
    write_report(doc, cfg.out / "report.json")
    write_report_csv(doc, cfg.out / "report.csv")
    print(f"K_O_est={est.K_O_est:.6g} K_I_est={est.K_I_est:.6g} "
          f"(samples={est.samples_used}, rejected={est.rejected_near_branch})")
    return 0


def dispatch(cfg: RunConfig) -> int:
    if cfg.command == "classify":
        return _cmd_classify(cfg)
    if cfg.command == "render":
        return _cmd_render(cfg)
    if cfg.command == "verify":
        return _cmd_verify(cfg)
    if cfg.command == "estimate":
        return _cmd_estimate(cfg)
    raise UsageError(f"unknown command {cfg.command!r}")


def run(argv) -> int:
    try:
        cfg = parse_config(argv)
        return dispatch(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except QrdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))
