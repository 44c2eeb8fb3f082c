import io
import math
from pathlib import Path

import numpy as np
import pytest

from selfaffine.core import SystemSpec, Word, periodic, project
from selfaffine.errors import ViewportEmpty
from selfaffine.hull import hull_mixed_real
from selfaffine.render import (
    ChaosGame,
    RasterConfig,
    Subdivision,
    default_viewport,
    render_attractor,
    render_overlay_uniqueness,
    render_words,
)
from selfaffine.uniqueness import certify_uniqueness

GOLDENS = Path(__file__).parent / "goldens"
RAUZY_RE, RAUZY_IM = -0.4196433776070805, 0.6062907292071993


def small_chaos(seed=3, iterations=200_000):
    return RasterConfig(128, 128, ChaosGame(iterations=iterations, seed=seed))


class TestFormats:
    def test_pgm_header(self):
        spec = SystemSpec.complex_pair(0.5, 0.5)
        raster = render_attractor(spec, small_chaos())
        data = raster.to_pgm_bytes()
        assert data.startswith(b"P5\n128 128\n255\n")
        assert len(data) == len(b"P5\n128 128\n255\n") + 128 * 128

    def test_png_magic_and_decodes(self):
        spec = SystemSpec.complex_pair(0.5, 0.5)
        raster = render_attractor(spec, small_chaos())
        png = raster.to_png_bytes()
        assert png.startswith(b"\x89PNG\r\n\x1a\n")
        from PIL import Image

        img = Image.open(io.BytesIO(png))
        img.load()
        assert img.size == (128, 128)

    def test_save_dispatch(self, tmp_path):
        spec = SystemSpec.complex_pair(0.5, 0.5)
        raster = render_attractor(spec, small_chaos())
        pgm = tmp_path / "out.pgm"
        png = tmp_path / "out.png"
        raster.save(str(pgm))
        raster.save(str(png))
        assert pgm.read_bytes().startswith(b"P5")
        assert png.read_bytes().startswith(b"\x89PNG")


class TestChaosGame:
    def test_determinism(self):
        spec = SystemSpec.complex_pair(0.5, 0.5)
        a = render_attractor(spec, small_chaos())
        b = render_attractor(spec, small_chaos())
        assert (a.counts == b.counts).all()
        assert a.to_pgm_bytes() == b.to_pgm_bytes()

    def test_thread_determinism(self):
        spec = SystemSpec.complex_pair(0.5, 0.5)
        cfg1 = RasterConfig(128, 128, ChaosGame(iterations=3_000_000, seed=5), threads=1)
        cfg4 = RasterConfig(128, 128, ChaosGame(iterations=3_000_000, seed=5), threads=4)
        assert (
            render_attractor(spec, cfg1).counts == render_attractor(spec, cfg4).counts
        ).all()

    def test_seed_changes_image(self):
        spec = SystemSpec.complex_pair(0.5, 0.5)
        a = render_attractor(spec, small_chaos(seed=1))
        b = render_attractor(spec, small_chaos(seed=2))
        assert (a.counts != b.counts).any()

    def test_single_iteration_plots_fixed_point(self):
        # one iteration from the T_p fixed point, no burn-in: exactly the
        # pixel of pi(p^inf)
        spec = SystemSpec.complex_pair(0.5, 0.5)
        cfg = RasterConfig(64, 64, ChaosGame(iterations=1, seed=1, burn_in=0))
        raster = render_attractor(spec, cfg)
        assert raster.counts.sum() == 1
        target = project(spec, periodic("p"))
        (x_lo, x_hi), (y_lo, y_hi) = raster.viewport
        ix = int((target[0] - x_lo) / (x_hi - x_lo) * 64)
        iy = int((y_hi - target[1]) / (y_hi - y_lo) * 64)
        assert raster.counts[iy, ix] == 1

    def test_pixels_stay_in_viewport_hull(self):
        # all chaos hits lie within the bounding disc viewport by construction
        spec = SystemSpec.complex_pair(0.4, 0.5)
        raster = render_attractor(spec, small_chaos())
        assert raster.counts.sum() > 0


class TestSubdivision:
    def test_matches_chaos_occupancy(self):
        spec = SystemSpec.complex_pair(0.5, 0.5)
        chaos = render_attractor(
            spec, RasterConfig(256, 256, ChaosGame(iterations=4_000_000, seed=11))
        )
        sub = render_attractor(spec, RasterConfig(256, 256, Subdivision(depth=24)))
        o1, o2 = chaos.occupied(), sub.occupied()
        agreement = (o1 & o2).sum() / (o1 | o2).sum()
        assert agreement >= 0.99

    def test_viewport_pruning(self):
        # a small off-center viewport still renders, with fewer points
        spec = SystemSpec.complex_pair(0.5, 0.5)
        cfg = RasterConfig(
            64, 64, Subdivision(depth=20), viewport=((0.5, 1.5), (-0.5, 0.5))
        )
        raster = render_attractor(spec, cfg)
        assert raster.counts.sum() > 0

    def test_empty_viewport_rejected(self):
        spec = SystemSpec.complex_pair(0.5, 0.5)
        cfg = RasterConfig(
            64, 64, Subdivision(depth=10), viewport=((50.0, 51.0), (50.0, 51.0))
        )
        with pytest.raises(ViewportEmpty):
            render_attractor(spec, cfg)


class TestInvariance:
    def test_occupied_set_nearly_invariant(self):
        # R contains the pixelization of T_m(R) and T_p(R) up to a 1-pixel
        # boundary band
        spec = SystemSpec.complex_pair(0.5, 0.5)
        raster = render_attractor(
            spec, RasterConfig(256, 256, ChaosGame(iterations=4_000_000, seed=13))
        )
        occ = raster.occupied()
        (x_lo, x_hi), (y_lo, y_hi) = raster.viewport
        h, w = occ.shape
        iy, ix = np.nonzero(occ)
        cx = x_lo + (ix + 0.5) * (x_hi - x_lo) / w
        cy = y_hi - (iy + 0.5) * (y_hi - y_lo) / h
        pts = np.stack([cx, cy], axis=1)
        m, u = spec.matrix, spec.translation
        padded = np.pad(occ, 1, constant_values=False)
        neighborhood = np.zeros_like(occ)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                neighborhood |= padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        for digit in (-1, 1):
            image = pts @ m.T + digit * u
            jx = np.floor((image[:, 0] - x_lo) / (x_hi - x_lo) * w).astype(int)
            jy = np.floor((y_hi - image[:, 1]) / (y_hi - y_lo) * h).astype(int)
            ok = (jx >= 0) & (jx < w) & (jy >= 0) & (jy < h)
            hits = neighborhood[jy[ok], jx[ok]]
            assert hits.mean() > 0.995


class TestGoldens:
    @pytest.mark.parametrize(
        "name,params",
        [("dragon_512", (0.5, 0.5)), ("rauzy_512", (RAUZY_RE, RAUZY_IM))],
    )
    def test_byte_exact(self, name, params):
        spec = SystemSpec.complex_pair(*params)
        cfg = RasterConfig(512, 512, ChaosGame(iterations=10_000_000, seed=7))
        raster = render_attractor(spec, cfg)
        golden = (GOLDENS / f"{name}.pgm").read_bytes()
        assert raster.to_pgm_bytes() == golden


class TestOverlay:
    def test_rauzy_overlay_inside_attractor(self):
        spec = SystemSpec.complex_pair(RAUZY_RE, RAUZY_IM)
        cert = certify_uniqueness(spec)
        cfg = RasterConfig(256, 256, ChaosGame(iterations=4_000_000, seed=17))
        base = render_attractor(spec, cfg)
        overlay = render_overlay_uniqueness(spec, cert, cfg)
        assert overlay.counts.sum() > 0
        # overlay pixels sit inside (or on the 1-pixel boundary of) the
        # attractor raster
        occ = base.occupied()
        padded = np.pad(occ, 1, constant_values=False)
        h, w = occ.shape
        near = np.zeros_like(occ)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                near |= padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        oy, ox = np.nonzero(overlay.occupied())
        assert near[oy, ox].all()

    def test_mixed_overlay_inside_hull(self):
        spec = SystemSpec.mixed_real(0.55, 0.8)
        cert = certify_uniqueness(spec)
        cfg = RasterConfig(128, 128, ChaosGame(iterations=100_000, seed=3))
        overlay = render_overlay_uniqueness(spec, cert, cfg)
        hull = hull_mixed_real(0.55, 0.8, 1e-6)
        (x_lo, x_hi), (y_lo, y_hi) = overlay.viewport
        iy, ix = np.nonzero(overlay.occupied())
        cx = x_lo + (ix + 0.5) * (x_hi - x_lo) / 128
        cy = y_hi - (iy + 0.5) * (y_hi - y_lo) / 128
        pixel = max((x_hi - x_lo) / 128, (y_hi - y_lo) / 128)
        pts = np.stack([cx, cy], axis=1)
        assert hull.contains_many(pts, slack=pixel).all()

    def test_empty_word_list(self):
        spec = SystemSpec.mixed_real(0.55, 0.8)
        cfg = RasterConfig(64, 64, ChaosGame(iterations=1000, seed=3))
        raster = render_words(spec, [], cfg)
        assert raster.counts.sum() == 0

    def test_fused_png(self):
        spec = SystemSpec.complex_pair(RAUZY_RE, RAUZY_IM)
        cert = certify_uniqueness(spec)
        cfg = RasterConfig(128, 128, ChaosGame(iterations=200_000, seed=19))
        base = render_attractor(spec, cfg)
        overlay = render_overlay_uniqueness(spec, cert, cfg)
        png = base.to_png_bytes(overlay=overlay)
        from PIL import Image

        img = Image.open(io.BytesIO(png))
        img.load()
        assert img.mode == "RGB"
