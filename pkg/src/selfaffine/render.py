"""Deterministic rasterization of attractors and uniqueness overlays.

Two methods: a chaos game (many parallel chains of random digit draws,
seeded and chunk-deterministic, so the image is byte-identical for a
fixed seed regardless of worker count) and subdivision (enumerate all
digit prefixes until cylinder diameter drops below a pixel, by repeated
doubling of the prefix-point set with viewport pruning).  The canonical
output is binary PGM (P5, maxval 255, log-scaled hit counts); PNG comes
from a small zlib encoder for convenience.
"""

from __future__ import annotations

import math
import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import SystemSpec, Word, bounding_set, digit_weights, periodic, project
from .errors import ViewportEmpty
from .geometry import Disc

_CHAIN_CHUNK = 1024
_MAX_SUBDIVISION_DEPTH = 24


@dataclass(frozen=True)
class ChaosGame:
    iterations: int
    seed: int
    burn_in: int = 100


@dataclass(frozen=True)
class Subdivision:
    depth: int


@dataclass(frozen=True)
class RasterConfig:
    width: int
    height: int
    method: Union[ChaosGame, Subdivision]
    viewport: Optional[tuple[tuple[float, float], tuple[float, float]]] = None
    threads: int = 1

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("raster dimensions must be positive")
        if self.viewport is not None:
            (x_lo, x_hi), (y_lo, y_hi) = self.viewport
            if not (x_lo < x_hi and y_lo < y_hi):
                raise ValueError("viewport must be non-degenerate")


def default_viewport(spec: SystemSpec) -> tuple[tuple[float, float], tuple[float, float]]:
    """Bounding set inflated by 5 percent."""
    shape = bounding_set(spec).shape
    if isinstance(shape, Disc):
        r = shape.radius * 1.05
        cx, cy = shape.center
        return ((cx - r, cx + r), (cy - r, cy + r))
    v = shape.vertices
    cx, cy = v.mean(axis=0)
    hx = (v[:, 0].max() - v[:, 0].min()) / 2 * 1.05
    hy = (v[:, 1].max() - v[:, 1].min()) / 2 * 1.05
    return ((cx - hx, cx + hx), (cy - hy, cy + hy))


@dataclass(frozen=True, eq=False)
class Raster:
    """Hit-count grid over a viewport; row 0 is the top of the image."""

    counts: np.ndarray
    viewport: tuple[tuple[float, float], tuple[float, float]]

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    def occupied(self) -> np.ndarray:
        return self.counts > 0

    def to_grey(self) -> np.ndarray:
        m = self.counts.max()
        if m == 0:
            return np.zeros(self.counts.shape, dtype=np.uint8)
        scaled = np.log1p(self.counts.astype(np.float64)) / math.log1p(float(m))
        return np.round(255.0 * scaled).astype(np.uint8)

    def to_pgm_bytes(self) -> bytes:
        grey = self.to_grey()
        header = f"P5\n{self.width} {self.height}\n255\n".encode("ascii")
        return header + grey.tobytes()

    def to_png_bytes(self, overlay: Optional["Raster"] = None) -> bytes:
        grey = self.to_grey()
        if overlay is None:
            return _encode_png(grey, None)
        if overlay.counts.shape != self.counts.shape:
            raise ValueError("overlay raster shape mismatch")
        return _encode_png(grey, overlay.occupied())

    def save(self, path: str, overlay: Optional["Raster"] = None) -> None:
        if path.endswith(".png"):
            data = self.to_png_bytes(overlay)
        else:
            data = self.to_pgm_bytes()
        with open(path, "wb") as fh:
            fh.write(data)


def _encode_png(grey: np.ndarray, overlay_mask: Optional[np.ndarray]) -> bytes:
    h, w = grey.shape
    if overlay_mask is None:
        color_type, row_data = 0, grey[:, :, None]
    else:
        rgb = np.repeat(grey[:, :, None], 3, axis=2)
        rgb[overlay_mask] = (255, 32, 32)
        color_type, row_data = 2, rgb
    raw = b"".join(b"\x00" + row_data[i].tobytes() for i in range(h))

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return (
            struct.pack(">I", len(payload))
            + tag
            + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw, 9))
        + chunk(b"IEND", b"")
    )


# ---------------------------------------------------------------------------
# binning
# ---------------------------------------------------------------------------


def _bin_points(points: np.ndarray, viewport, width: int, height: int) -> np.ndarray:
    (x_lo, x_hi), (y_lo, y_hi) = viewport
    xs = (points[:, 0] - x_lo) / (x_hi - x_lo) * width
    ys = (y_hi - points[:, 1]) / (y_hi - y_lo) * height
    ix = np.floor(xs).astype(np.int64)
    iy = np.floor(ys).astype(np.int64)
    mask = (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
    flat = iy[mask] * width + ix[mask]
    counts = np.bincount(flat, minlength=width * height)
    return counts.reshape(height, width).astype(np.uint64)


# ---------------------------------------------------------------------------
# chaos game
# ---------------------------------------------------------------------------


def _chaos_chunk(spec: SystemSpec, seed: int, chunk_index: int, chains: int,
                 steps: int, burn_in: int, viewport, width: int, height: int):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, chunk_index])))
    m = spec.matrix
    u = spec.translation
    start = project(spec, periodic("p"))
    x = np.full(chains, start[0])
    y = np.full(chains, start[1])
    m00, m01, m10, m11 = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    xs = np.empty((steps, chains))
    ys = np.empty((steps, chains))
    for step in range(burn_in + steps):
        if step >= burn_in:
            xs[step - burn_in] = x
            ys[step - burn_in] = y
        digits = rng.integers(0, 2, size=chains) * 2 - 1
        x, y = (
            m00 * x + m01 * y + digits * u[0],
            m10 * x + m11 * y + digits * u[1],
        )
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    return _bin_points(pts, viewport, width, height)


def _render_chaos(spec: SystemSpec, config: RasterConfig, viewport) -> Raster:
    method = config.method
    total = max(1, method.iterations)
    chains = min(4096, total)
    steps = max(1, total // chains)
    chunk_plans = []
    start = 0
    idx = 0
    while start < chains:
        size = min(_CHAIN_CHUNK, chains - start)
        chunk_plans.append((idx, size))
        start += size
        idx += 1

    def run(plan):
        ci, size = plan
        return _chaos_chunk(
            spec, method.seed, ci, size, steps, method.burn_in,
            viewport, config.width, config.height,
        )

    if config.threads > 1 and len(chunk_plans) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            parts = list(pool.map(run, chunk_plans))
    else:
        parts = [run(p) for p in chunk_plans]
    counts = np.zeros((config.height, config.width), dtype=np.uint64)
    for part in parts:
        counts += part
    return Raster(counts=counts, viewport=viewport)


# ---------------------------------------------------------------------------
# subdivision
# ---------------------------------------------------------------------------


def _cylinder_diameters(spec: SystemSpec, max_depth: int) -> list[float]:
    """Diameter of the image of the bounding set at each depth."""
    shape = bounding_set(spec).shape
    m = spec.matrix
    power = np.eye(2)
    out = []
    for _ in range(max_depth + 1):
        if isinstance(shape, Disc):
            out.append(2.0 * shape.radius * float(np.linalg.norm(power, 2)))
        else:
            img = shape.vertices @ power.T
            d2 = np.sum((img[:, None, :] - img[None, :, :]) ** 2, axis=-1)
            out.append(float(np.sqrt(d2.max())))
        power = m @ power
    return out


def _render_subdivision(spec: SystemSpec, config: RasterConfig, viewport) -> Raster:
    depth_cap = min(config.method.depth, _MAX_SUBDIVISION_DEPTH)
    (x_lo, x_hi), (y_lo, y_hi) = viewport
    pixel = min((x_hi - x_lo) / config.width, (y_hi - y_lo) / config.height)
    diams = _cylinder_diameters(spec, depth_cap)
    # refine well below pixel size so that thin attractor slivers still
    # receive a cylinder center in their pixel
    depth = depth_cap
    for d, diam in enumerate(diams):
        if diam < pixel / 4.0:
            depth = d
            break
    weights = digit_weights(spec, max(depth, 1))
    pts = np.zeros((1, 2))
    for i in range(depth):
        col = weights[:, i]
        pts = np.concatenate([pts + col, pts - col])
        # prune prefixes whose whole cylinder stays outside the viewport
        reach = diams[i + 1] / 2.0
        keep = (
            (pts[:, 0] >= x_lo - reach)
            & (pts[:, 0] <= x_hi + reach)
            & (pts[:, 1] >= y_lo - reach)
            & (pts[:, 1] <= y_hi + reach)
        )
        pts = pts[keep]
    counts = _bin_points(pts, viewport, config.width, config.height)
    return Raster(counts=counts, viewport=viewport)


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def render_attractor(spec: SystemSpec, config: RasterConfig) -> Raster:
    """Raster the attractor with the configured method; deterministic for a
    fixed method and seed."""
    viewport = config.viewport or default_viewport(spec)
    bbox = default_viewport(spec)
    if (
        viewport[0][1] < bbox[0][0]
        or viewport[0][0] > bbox[0][1]
        or viewport[1][1] < bbox[1][0]
        or viewport[1][0] > bbox[1][1]
    ):
        raise ViewportEmpty("viewport does not meet the attractor bounding set")
    if isinstance(config.method, ChaosGame):
        return _render_chaos(spec, config, viewport)
    return _render_subdivision(spec, config, viewport)


def render_words(
    spec: SystemSpec, words: Sequence[Word], config: RasterConfig
) -> Raster:
    """Plot the prefix projections of explicit words (one point each)."""
    viewport = config.viewport or default_viewport(spec)
    if not words:
        counts = np.zeros((config.height, config.width), dtype=np.uint64)
        return Raster(counts=counts, viewport=viewport)
    from .core import project_words

    pts = np.array(
        [project_words(spec, np.array(w.digits))[0] for w in words]
    )
    return Raster(
        counts=_bin_points(pts, viewport, config.width, config.height),
        viewport=viewport,
    )


def render_overlay_uniqueness(spec: SystemSpec, cert, config: RasterConfig) -> Raster:
    """Raster the code language of a uniqueness certificate: block words
    are refined breadth-first until each cylinder is subpixel, then their
    prefix points are plotted as a second channel."""
    viewport = config.viewport or default_viewport(spec)
    (x_lo, x_hi), (y_lo, y_hi) = viewport
    pixel = min((x_hi - x_lo) / config.width, (y_hi - y_lo) / config.height)
    radius0 = bounding_set(spec).diameter() / 2.0

    blocks = cert.blocks()
    block_maps = []
    for block in blocks:
        from .core import affine_of_word

        amap = affine_of_word(spec, block)
        block_maps.append((amap.linear, amap.offset))

    pts = []
    frontier = [(np.eye(2), np.zeros(2))]
    budget = 1 << 20
    while frontier and budget > 0:
        nxt = []
        for lin, off in frontier:
            budget -= 1
            radius = float(np.linalg.norm(lin, 2)) * radius0
            if 2.0 * radius < pixel:
                pts.append(off)
                continue
            for blin, boff in block_maps:
                nxt.append((lin @ blin, lin @ boff + off))
        frontier = nxt
    if not pts:
        counts = np.zeros((config.height, config.width), dtype=np.uint64)
        return Raster(counts=counts, viewport=viewport)
    pts = np.array(pts)
    return Raster(
        counts=_bin_points(pts, viewport, config.width, config.height),
        viewport=viewport,
    )
