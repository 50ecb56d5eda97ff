"""Deterministic escape-time and itinerary-coloring images of planar slices.

Pixel centers sample the window (never corners), the v axis points up, and
rows are stored top to bottom.  Identical (SliceSpec, MapParams, max_iter,
height_cap) inputs give byte-identical serialized output.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

import numpy as np

from . import backend
from .basemap import fold_batch
from .core import HEIGHT_SAFETY_LIMIT, MapParams, TrayIndex

__all__ = [
    "SliceSpec", "ImageGrid", "render_slice", "write_ppm", "grid_to_csv",
    "PALETTES",
]


@dataclass(frozen=True)
class SliceSpec:
    """Axis-aligned 2-d slice: coordinates (axis_u, axis_v) vary over the
    window, every other coordinate is pinned by `fixed`."""

    axis_u: int
    axis_v: int
    fixed: tuple[tuple[int, float], ...]  # ((coordinate index, value), ...)
    window: tuple[float, float, float, float]  # u_min, u_max, v_min, v_max
    resolution: tuple[int, int]  # width, height in pixels

    def __post_init__(self):
        if self.axis_u == self.axis_v:
            raise ValueError("axis_u and axis_v must differ")
        u0, u1, v0, v1 = self.window
        if not (u0 < u1 and v0 < v1):
            raise ValueError("window must be non-degenerate")
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ValueError("resolution must be >= 1x1")
        object.__setattr__(self, "fixed", tuple(
            (int(i), float(v)) for i, v in self.fixed))

    def validate_for_dim(self, dim: int) -> None:
        axes = {self.axis_u, self.axis_v}
        if not all(0 <= a < dim for a in axes):
            raise ValueError(f"slice axes {axes} out of range for d={dim}")
        fixed_axes = {i for i, _ in self.fixed}
        if fixed_axes & axes:
            raise ValueError("fixed coordinates overlap the slice axes")
        missing = set(range(dim)) - axes - fixed_axes
        if missing:
            raise ValueError(f"coordinates {sorted(missing)} neither sliced nor fixed")


@dataclass
class ImageGrid:
    """Row-major per-pixel classification records (row 0 = top of image)."""

    spec: SliceSpec
    dim: int
    lam: float
    max_iter: int
    height_cap: float
    escape_step: np.ndarray    # (H, W) int32, -1 = did not escape
    first_parity: np.ndarray   # (H, W) uint8, sigma(first tray) mod 2
    first_sign: np.ndarray     # (H, W) int8, tray sign of the pixel point
    first_lateral: np.ndarray  # (H, W, d-1) int64
    final_height: np.ndarray   # (H, W) float64

    def first_tray(self, row: int, col: int) -> TrayIndex:
        return TrayIndex(tuple(int(v) for v in self.first_lateral[row, col]),
                         int(self.first_sign[row, col]))

    def pixel_uv(self) -> tuple[np.ndarray, np.ndarray]:
        """(u (W,), v (H,)) pixel-center coordinates, v[0] = top row."""
        u0, u1, v0, v1 = self.spec.window
        w, h = self.spec.resolution
        cols = np.arange(w, dtype=np.float64)
        rows = np.arange(h, dtype=np.float64)
        u = u0 + (cols + 0.5) * (u1 - u0) / w
        v = v0 + (h - 1.0 - rows + 0.5) * (v1 - v0) / h
        return u, v


def render_slice(spec: SliceSpec, params: MapParams, max_iter: int,
                 height_cap: float) -> ImageGrid:
    """Classify every pixel-center point by forward iteration."""
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    cap = float(height_cap)
    if not (params.lam * np.e <= cap <= HEIGHT_SAFETY_LIMIT):
        raise ValueError(f"height_cap must lie in [lam*e, {HEIGHT_SAFETY_LIMIT}]")
    spec.validate_for_dim(params.dim)
    w, h = spec.resolution
    d = params.dim

    grid = ImageGrid(
        spec=spec, dim=d, lam=params.lam, max_iter=max_iter, height_cap=cap,
        escape_step=np.empty((h, w), dtype=np.int32),
        first_parity=np.empty((h, w), dtype=np.uint8),
        first_sign=np.empty((h, w), dtype=np.int8),
        first_lateral=np.empty((h, w, d - 1), dtype=np.int64),
        final_height=np.empty((h, w), dtype=np.float64),
    )
    u, v = grid.pixel_uv()
    pts = np.empty((h * w, d), dtype=np.float64)
    for i, val in spec.fixed:
        pts[:, i] = val
    uu, vv = np.meshgrid(u, v)  # (H, W)
    pts[:, spec.axis_u] = uu.ravel()
    pts[:, spec.axis_v] = vv.ravel()

    esc, height = backend.classify_escape(pts, params.lam, max_iter, cap)
    _, lat, sign, parity = fold_batch(pts)
    if np.any(np.abs(lat) > 2 ** 62):
        raise ValueError("window coordinates too large for integer tray indices")

    grid.escape_step[:] = esc.reshape(h, w)
    grid.first_parity[:] = parity.astype(np.uint8).reshape(h, w)
    grid.first_sign[:] = sign.astype(np.int8).reshape(h, w)
    grid.first_lateral[:] = lat.astype(np.int64).reshape(h, w, d - 1)
    grid.final_height[:] = height.reshape(h, w)
    return grid


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _palette_hue(esc: np.ndarray) -> np.ndarray:
    """Cyclic hue over escape step; non-escaping pixels black."""
    h, w = esc.shape
    rgb = np.zeros((h, w, 3), dtype=np.uint8)
    steps = np.unique(esc[esc >= 0])
    for s in steps:
        hue = (int(s) % 24) / 24.0
        r, g, b = colorsys.hsv_to_rgb(hue, 0.85, 1.0)
        rgb[esc == s] = (round(r * 255), round(g * 255), round(b * 255))
    return rgb


def _palette_gray(esc: np.ndarray) -> np.ndarray:
    rgb = np.zeros((*esc.shape, 3), dtype=np.uint8)
    lit = esc >= 0
    shade = (40 + (esc[lit].astype(np.int64) * 13) % 216).astype(np.uint8)
    rgb[lit] = shade[:, None]
    return rgb


PALETTES = {"hue": _palette_hue, "gray": _palette_gray}


def write_ppm(grid: ImageGrid, palette: str, path) -> None:
    """Binary PPM (P6): ASCII header, then RGB byte triples, rows top-down."""
    if palette not in PALETTES:
        raise ValueError(f"unknown palette {palette!r}; have {sorted(PALETTES)}")
    rgb = PALETTES[palette](grid.escape_step)
    w, h = grid.spec.resolution
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(rgb.tobytes())
    except OSError as exc:
        raise OSError(f"writing PPM to {path}: {exc}") from exc


def grid_to_csv(grid: ImageGrid, path, seed=None) -> None:
    """Per-pixel records u, v, escape_step, sigma parity of the first tray."""
    from . import __version__
    u, v = grid.pixel_uv()
    lines = [
        f"# dim={grid.dim} lambda={grid.lam!r} max_iter={grid.max_iter} "
        f"height_cap={grid.height_cap!r}",
        f"# seed={seed if seed is not None else 'none'} version={__version__}",
    ]
    h, w = grid.spec.resolution[1], grid.spec.resolution[0]
    for row in range(h):
        for col in range(w):
            step = int(grid.escape_step[row, col])
            lines.append(
                f"{float(u[col])!r},{float(v[row])!r},"
                f"{step if step >= 0 else ''},{int(grid.first_parity[row, col])}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
