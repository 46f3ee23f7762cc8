"""Matplotlib figure rendering for the report path.

Figures are human-facing diagnostics next to the bit-exact rasters: an
escape-time heatmap with the boundary overlay, and the certificate's
validation ratios against radius.
"""

from __future__ import annotations

from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .analysis import BoundarySet
from .escape import SENTINEL, EscapeCertificate, EscapeGrid
from .render import SliceSpec, _slice_times

_PNG_META = {"Software": None}  # keep PNG text chunks version-independent


def render_escape_figure(
    grid: EscapeGrid,
    boundary: Optional[BoundarySet],
    path,
    spec: Optional[SliceSpec] = None,
    title: str = "",
) -> None:
    times = _slice_times(grid, spec).astype(float)
    shown = np.ma.masked_where(times == SENTINEL, times)
    if grid.dim == 2:
        ax_x, ax_y = 0, 1
    else:
        s = spec or SliceSpec()
        ax_x, ax_y = [a for a in range(3) if a != s.axis]
    extent = [
        grid.box.low[ax_x], grid.box.high[ax_x],
        grid.box.low[ax_y], grid.box.high[ax_y],
    ]
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    im = ax.imshow(shown, origin="upper", extent=extent, cmap="viridis",
                   interpolation="nearest")
    im.cmap.set_bad("black")
    if boundary is not None and boundary.cell_indices.size:
        bmask = boundary.mask()
        if grid.dim == 3:
            s = spec or SliceSpec()
            bmask = np.take(bmask, s.layer(grid), axis=2 - s.axis)
        bmask = bmask[::-1, :]
        ys, xs = np.nonzero(bmask)
        h, w = bmask.shape
        px = extent[0] + (xs + 0.5) * (extent[1] - extent[0]) / w
        py = extent[3] - (ys + 0.5) * (extent[3] - extent[2]) / h
        ax.plot(px, py, ".", color="red", markersize=1.2, rasterized=True)
    fig.colorbar(im, ax=ax, label="escape time")
    ax.set_xlabel(f"x{ax_x + 1}")
    ax.set_ylabel(f"x{ax_y + 1}")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata=_PNG_META)
    plt.close(fig)


def render_certificate_figure(cert: EscapeCertificate, path, title: str = "") -> None:
    pts = np.array([p for p, _ in cert.validation])
    ratios = np.array([r for _, r in cert.validation])
    radii = np.linalg.norm(pts, axis=1)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(radii, ratios, ".", markersize=4, label="validation samples")
    ax.axhline(2.0, color="red", linewidth=1, label="doubling threshold")
    ax.axvline(cert.r_prime, color="gray", linestyle="--", linewidth=1,
               label=f"R' = {cert.r_prime:.4g}")
    ax.set_xlabel("|x|")
    ax.set_ylabel("|f(x)| / |x|")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata=_PNG_META)
    plt.close(fig)
