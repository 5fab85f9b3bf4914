import math

import numpy as np
import pytest

from gmlight.decompose import IlluminationParams
from gmlight.fixtures import nearest_pixel
from gmlight.projection import (
    ProjectionConfig,
    gaussian_map,
    progressive_maps,
    reproject,
    spatially_varying_map,
)
from gmlight.sphere import AnchorSet, generate_anchors, pixel_direction


def single(direction, intensity=(5.0, 5.0, 5.0), ambient=(0.0, 0.0, 0.0), depth=2.0):
    return IlluminationParams([1.0], intensity, ambient, [depth]), AnchorSet([direction])


def random_params(rng, n, depth_range=(1.0, 4.0)):
    p = rng.uniform(size=n)
    return IlluminationParams(p / p.sum(), rng.uniform(0, 10, 3), rng.uniform(0, 0.5, 3), rng.uniform(*depth_range, n))


def test_config_validation():
    assert ProjectionConfig().s_schedule == (0.04, 0.01, 0.0025)
    assert ProjectionConfig.single(8, 4, 0.1).s_schedule == (0.1,)
    for bad in [dict(width=0), dict(angular_size=0), dict(s_schedule=(0.01, 0.04, 0.0025)),
                dict(s_schedule=(0.04, 0.01)), dict(s_schedule=())]:
        with pytest.raises(ValueError):
            ProjectionConfig(**bad)


def test_aligned_pixel_value(backend):
    h, w = 17, 24
    direction = pixel_direction(8, 6, h, w)
    params, anchors = single(direction, ambient=(0.1, 0.2, 0.3))
    m = gaussian_map(params, anchors, ProjectionConfig.single(w, h))
    assert np.allclose(m.pixels[8, 6], [5.1, 5.2, 5.3], atol=1e-9, rtol=0)


def test_antipodal_pixel_is_ambient(backend):
    h, w = 17, 24
    params, anchors = single(pixel_direction(8, 6, h, w), ambient=(0.1, 0.2, 0.3))
    m = gaussian_map(params, anchors, ProjectionConfig.single(w, h))
    assert np.allclose(m.pixels[8, 18], [0.1, 0.2, 0.3], atol=1e-300, rtol=1e-15)


def test_zero_intensity_constant_map(anchors128):
    params = IlluminationParams(np.full(128, 1 / 128), [0, 0, 0], [0.3, 0.2, 0.1], np.ones(128))
    m = gaussian_map(params, anchors128, ProjectionConfig.single(64, 32))
    assert np.all(m.pixels == np.array([0.3, 0.2, 0.1]))


def test_lobe_matches_closed_form():
    d = np.array([0.3, -0.5, 0.8]) / np.linalg.norm([0.3, -0.5, 0.8])
    params, anchors = single(d, intensity=(1.0, 2.0, 3.0))
    m = gaussian_map(params, anchors, ProjectionConfig.single(12, 6, 0.2))
    for r in range(6):
        for c in range(12):
            expect = math.exp((float(pixel_direction(r, c, 6, 12) @ d) - 1) / 0.2)
            assert np.allclose(m.pixels[r, c], np.array([1, 2, 3]) * expect, rtol=1e-13)


def test_mismatch_and_bad_s(anchors128):
    params, _ = single([0, 0, 1.0])
    with pytest.raises(ValueError):
        gaussian_map(params, anchors128)
    with pytest.raises(ValueError):
        gaussian_map(params, AnchorSet([[0, 0, 1.0]]), s=0.0)


def test_doubling_intensity_doubles_lobes(rng, anchors128, backend):
    params = random_params(rng, 128)
    dark = IlluminationParams(params.distribution, params.intensity, [0, 0, 0], params.depth)
    bright = IlluminationParams(params.distribution, 2 * params.intensity, [0, 0, 0], params.depth)
    cfg = ProjectionConfig.single(64, 32, 0.01)
    assert np.array_equal(2 * gaussian_map(dark, anchors128, cfg).pixels, gaussian_map(bright, anchors128, cfg).pixels)
    # with ambient present the subtraction itself rounds
    lit = IlluminationParams(params.distribution, 2 * params.intensity, params.ambient, params.depth)
    base = gaussian_map(params, anchors128, cfg).pixels - params.ambient
    doubled = gaussian_map(lit, anchors128, cfg).pixels - params.ambient
    assert np.allclose(doubled, 2 * base, rtol=0, atol=1e-12 * doubled.max())


def test_floor_is_ambient(rng, anchors128):
    params = random_params(rng, 128)
    m = gaussian_map(params, anchors128, ProjectionConfig.single(64, 32))
    assert np.all(m.pixels >= params.ambient.min())


def test_progressive_maps(rng, anchors128):
    params = random_params(rng, 128)
    cfg = ProjectionConfig(64, 32)
    maps = progressive_maps(params, anchors128, cfg)
    assert len(maps) == 3
    assert all(m.shape == (32, 64) for m in maps)
    assert np.array_equal(maps[-1].pixels, gaussian_map(params, anchors128, cfg).pixels)


def test_larger_s_spreads_a_single_light():
    # at the lobe centre every level reaches v + A; a wider lobe lowers the peak relative to the mean
    params, anchors = single([1.0, 0, 0], ambient=(0.1, 0.1, 0.1))
    maps = progressive_maps(params, anchors, ProjectionConfig(256, 128))
    ratios = [m.pixels[..., 0].max() / m.pixels[..., 0].mean() for m in maps]
    assert ratios[0] < ratios[1] < ratios[2]


# -- reprojection -------------------------------------------------------------


def test_reproject_zero_offset_identity(rng, anchors128):
    params = random_params(rng, 128)
    moved, anchors = reproject(params, anchors128, (0, 0, 0))
    assert moved is params and anchors is anchors128


def test_reproject_collinear():
    params, anchors = single([0, 0, 1.0], intensity=(1.0, 2.0, 3.0), depth=2.0)
    moved, new = reproject(params, anchors, (0, 0, 1))
    assert moved.depth[0] == 1.0
    assert np.array_equal(new.directions[0], [0, 0, 1.0])
    assert np.array_equal(moved.intensity, [2.0, 4.0, 6.0])
    assert moved.distribution[0] == 1.0
    sq, _ = reproject(params, anchors, (0, 0, 1), falloff="inverse-square")
    assert np.array_equal(sq.intensity, [4.0, 8.0, 12.0])


def test_reproject_matches_linear_falloff_weights(rng, anchors128):
    params = random_params(rng, 128)
    off = np.array([0.2, -0.3, 0.1])
    moved, _ = reproject(params, anchors128, off)
    assert abs(moved.distribution.sum() - 1) <= 1e-9
    lobes = moved.distribution[:, None] * moved.intensity
    world = params.depth[:, None] * anchors128.directions - off
    expect = (params.distribution * params.depth / np.linalg.norm(world, axis=1))[:, None] * params.intensity
    assert np.allclose(lobes, expect, rtol=1e-12)
    assert np.array_equal(moved.ambient, params.ambient)


def test_reproject_round_trip(rng, anchors128):
    for _ in range(10):
        params = random_params(rng, 128)
        off = rng.uniform(-0.17, 0.17, 3)  # |off| < 0.3 keeps both legs inside the shell
        there, a1 = reproject(params, anchors128, off)
        back, a2 = reproject(there, a1, -off)
        assert np.abs(back.depth - params.depth).max() <= 1e-9
        assert np.abs(a2.directions - anchors128.directions).max() <= 1e-9
        assert np.abs(back.distribution - params.distribution).max() <= 1e-9
        assert np.allclose(back.intensity, params.intensity, rtol=1e-9)


def test_reproject_errors(rng, anchors128):
    params = random_params(rng, 128, (1.0, 2.0))
    with pytest.raises(ValueError):
        reproject(params, anchors128, (params.depth.min(), 0, 0))
    with pytest.raises(ValueError):
        reproject(params, anchors128, (0, np.nan, 0))
    with pytest.raises(ValueError):
        reproject(params, anchors128, (0.1, 0, 0), falloff="cubic")


def test_spatially_varying_zero_offset_bit_identical(rng, anchors128):
    params = random_params(rng, 128)
    cfg = ProjectionConfig.single(64, 32)
    a = spatially_varying_map(params, anchors128, (0.0, 0.0, 0.0), cfg).pixels
    b = gaussian_map(params, anchors128, cfg).pixels
    assert a.tobytes() == b.tobytes()


def test_moving_toward_light_brightens_peak():
    params, anchors = single([0, 0, 1.0], depth=3.0)
    cfg = ProjectionConfig.single(256, 128)
    peaks = [spatially_varying_map(params, anchors, (0, 0, dz), cfg).pixels.max() for dz in (0.0, 1.0, 2.0)]
    assert peaks[0] < peaks[1] < peaks[2]


def test_moving_sideways_shifts_peak_column():
    h, w = 128, 256
    params, anchors = single([1.0, 0, 0], depth=2.0)
    cfg = ProjectionConfig.single(w, h)
    before = np.unravel_index(np.argmax(gaussian_map(params, anchors, cfg).pixels[..., 0]), (h, w))
    after_map = spatially_varying_map(params, anchors, (0, 1.0, 0), cfg).pixels[..., 0]
    after = np.unravel_index(np.argmax(after_map), (h, w))
    # light is now seen along (2, -1, 0)
    assert after == nearest_pixel((2, -1, 0), h, w)
    assert after[1] != before[1] and after[0] == before[0]


def test_many_anchor_lattice_renders(anchors128):
    params = IlluminationParams(np.full(128, 1 / 128), [1, 1, 1], [0, 0, 0], np.ones(128))
    m = gaussian_map(params, generate_anchors(128), ProjectionConfig.single(32, 16, 0.04))
    assert np.all(np.isfinite(m.pixels)) and m.pixels.min() > 0
