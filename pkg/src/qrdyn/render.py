"""Bit-exact file emission: PGM/PPM rasters, voxel export, grid container,
and the canonical JSON/CSV report."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analysis import BoundarySet, CheckReport
from .errors import DimensionMismatch
from .geometry import Box
from .escape import SENTINEL, EscapeCertificate, EscapeGrid

VOXEL_MAGIC = b"QRV1"
GRID_MAGIC = b"QRG1"


@dataclass(frozen=True)
class SliceSpec:
    """Axis-aligned slice of a 3D grid: fix `axis` at the cell layer containing
    `offset`; 2D grids take the trivial slice (axis/offset ignored)."""

    axis: int = 2
    offset: float = 0.0

    def layer(self, grid: EscapeGrid) -> int:
        lo = grid.box.low[self.axis]
        hi = grid.box.high[self.axis]
        if not lo <= self.offset <= hi:
            raise ValueError(f"slice offset {self.offset} outside the box along axis {self.axis}")
        w = grid.cell_widths[self.axis]
        return min(int((self.offset - lo) / w), grid.resolution[self.axis] - 1)


def _slice_times(grid: EscapeGrid, spec: Optional[SliceSpec]) -> np.ndarray:
    """2D time array (rows = second remaining axis, columns = first), with the
    top row at the maximal second-axis coordinate."""
    if grid.dim == 2:
        plane = grid.cells  # shape (ny, nx)
    else:
        spec = spec or SliceSpec()
        layer = spec.layer(grid)
        # cells shape (nz, ny, nx); array axis = 2 - coordinate axis
        arr_axis = 2 - spec.axis
        plane = np.take(grid.cells, layer, axis=arr_axis)
    return plane[::-1, :]  # top row = max second-axis coordinate


def _grade(times: np.ndarray, horizon: int) -> np.ndarray:
    t = times.astype(np.float64)
    vals = np.rint(255.0 * (1.0 - t / horizon))
    vals = np.clip(vals, 0.0, 255.0).astype(np.uint8)
    vals[times == SENTINEL] = 0
    return vals


def _write_bytes(path, blob: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def write_escape_pgm(grid: EscapeGrid, spec: Optional[SliceSpec], path) -> None:
    """Binary PGM (P5, maxval 255): 255*(1 - t/horizon) per escaping cell,
    0 for sentinel cells."""
    times = _slice_times(grid, spec)
    img = _grade(times, grid.horizon)
    h, w = img.shape
    _write_bytes(path, b"P5\n%d %d\n255\n" % (w, h) + img.tobytes())


def write_class_ppm(grid: EscapeGrid, boundary: BoundarySet, spec: Optional[SliceSpec], path) -> None:
    """Binary PPM (P6): escaping cells graded blue by time, sentinel black,
    boundary cells pure red."""
    if boundary.grid is not grid:
        raise ValueError("boundary was extracted from a different grid")
    times = _slice_times(grid, spec)
    blue = _grade(times, grid.horizon)
    h, w = blue.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:, :, 2] = blue
    bmask_full = boundary.mask()
    if grid.dim == 2:
        bmask = bmask_full
    else:
        s = spec or SliceSpec()
        bmask = np.take(bmask_full, s.layer(grid), axis=2 - s.axis)
    bmask = bmask[::-1, :]
    img[bmask] = (255, 0, 0)
    _write_bytes(path, b"P6\n%d %d\n255\n" % (w, h) + img.tobytes())


def export_voxels(grid: EscapeGrid, path) -> None:
    """Binary voxel dump: magic "QRV1", three u32-LE cell counts (x, y, z),
    then u16-LE escape times in row-major x-fastest order."""
    if grid.dim != 3:
        raise DimensionMismatch("voxel export is defined for 3D grids only")
    nx, ny, nz = grid.resolution
    payload = grid.cells.astype("<u2").tobytes()
    _write_bytes(path, VOXEL_MAGIC + struct.pack("<III", nx, ny, nz) + payload)


# ---------------------------------------------------------------------------
# grid container (round-trips classify -> render)
# ---------------------------------------------------------------------------

def save_grid(grid: EscapeGrid, path) -> None:
    header = {
        "box": grid.box.to_dict(),
        "resolution": list(grid.resolution),
        "horizon": grid.horizon,
        "m_big": grid.m_big,
        "certificate": grid.certificate.to_dict() if grid.certificate else None,
    }
    head = _canonical_json(header).encode("utf-8")
    blob = GRID_MAGIC + struct.pack("<I", len(head)) + head + grid.cells.astype("<u2").tobytes()
    _write_bytes(path, blob)


def load_grid(path) -> EscapeGrid:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != GRID_MAGIC:
        raise ValueError(f"{path}: not a grid container (bad magic)")
    (hlen,) = struct.unpack("<I", blob[4:8])
    header = json.loads(blob[8:8 + hlen].decode("utf-8"))
    res = tuple(int(r) for r in header["resolution"])
    cells = np.frombuffer(blob[8 + hlen:], dtype="<u2").reshape(res[::-1]).copy()
    cert = None
    if header["certificate"] is not None:
        c = header["certificate"]
        cert = EscapeCertificate(
            alpha=c["alpha"], C=c["C"], R=c["R"], r_prime=c["r_prime"],
            method=c["method"],
            validation=tuple((tuple(v["point"]), v["ratio"]) for v in c["validation"]),
        )
    return EscapeGrid(
        box=Box(header["box"]["low"], header["box"]["high"]),
        resolution=res,
        horizon=int(header["horizon"]),
        cells=cells,
        certificate=cert,
        m_big=float(header["m_big"]),
    )


# ---------------------------------------------------------------------------
# report document
# ---------------------------------------------------------------------------

@dataclass
class ReportDocument:
    map_descriptor: dict
    certificate: Optional[dict]
    grid_parameters: Optional[dict]
    checks: list = field(default_factory=list)
    tool_version: str = "0.1.0"
    wall_clock_seconds: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "map": self.map_descriptor,
            "certificate": self.certificate,
            "grid": self.grid_parameters,
            "checks": [c.to_dict() if isinstance(c, CheckReport) else c for c in self.checks],
            "tool_version": self.tool_version,
            "wall_clock_seconds": self.wall_clock_seconds,
        }
        doc.update(self.extra)
        return doc


def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError("reports must not contain NaN or infinite values")
    return format(float(x), ".17g")


def _canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(
                f'{pad}  {json.dumps(str(key), ensure_ascii=False)}: '
                + _canonical_json(obj[key], indent + 1)
            )
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}  " + _canonical_json(v, indent + 1) for v in seq]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj)} into the report")


def write_report(doc: ReportDocument, path) -> None:
    """UTF-8 JSON with lexicographically sorted keys; byte-identical for
    identical documents."""
    text = _canonical_json(doc.to_dict()) + "\n"
    _write_bytes(path, text.encode("utf-8"))


def write_report_csv(doc: ReportDocument, path) -> None:
    """Delimited per-check summary next to the JSON report."""
    lines = ["check,passed,witnesses,notes"]
    for c in doc.checks:
        d = c.to_dict() if isinstance(c, CheckReport) else c
        notes = str(d.get("notes", "")).replace('"', "'")
        lines.append(
            f'{d["name"]},{str(bool(d["passed"])).lower()},{len(d.get("witnesses", []))},"{notes}"'
        )
    _write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))
