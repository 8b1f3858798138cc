import math

import numpy as np
import pytest

from difx.errors import NoSignalError
from difx.estimate import (
    EstimateParams, Roi, bumpiness, chromaticity, estimate_all, estimate_from_difference,
    gaussian_kernel, gravity_center, make_roi, rms_extent, smoothed_gradient_magnitude,
)


def brute_center_rms(mask):
    sx = sy = n = 0
    for y in range(mask.shape[0]):
        for x in range(mask.shape[1]):
            if mask[y, x]:
                sx += x
                sy += y
                n += 1
    x0, y0 = sx / n, sy / n
    vx = vy = 0.0
    for y in range(mask.shape[0]):
        for x in range(mask.shape[1]):
            if mask[y, x]:
                vx += (x - x0) ** 2
                vy += (y - y0) ** 2
    return (x0, y0), (math.sqrt(vx / n), math.sqrt(vy / n))


def full_roi(shape):
    h, w = shape[:2]
    return Roi(((w - 1) / 2, (h - 1) / 2), w / 2, h / 2, 0, w - 1, 0, h - 1)


def test_gravity_center_examples():
    m = np.zeros((30, 30), bool)
    m[20, 10] = True
    assert gravity_center(m) == (10, 20)
    m = np.zeros((10, 10), bool)
    m[5, 0] = m[5, 2] = True
    assert gravity_center(m) == (1, 5)
    assert rms_extent(m, (1, 5)) == (1, 0)


def test_single_pixel_rms_zero():
    m = np.zeros((4, 4), bool)
    m[1, 2] = True
    assert rms_extent(m, gravity_center(m)) == (0, 0)


def test_empty_mask_errors():
    with pytest.raises(NoSignalError):
        gravity_center(np.zeros((3, 3), bool))
    with pytest.raises(NoSignalError):
        rms_extent(np.zeros((3, 3), bool), (0, 0))


@pytest.mark.parametrize("seed", range(10))
def test_center_and_rms_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((23, 37)) < rng.uniform(0.01, 0.6)
    mask[rng.integers(23), rng.integers(37)] = True
    (bx, by), (bw, bh) = brute_center_rms(mask)
    c = gravity_center(mask)
    w, h = rms_extent(mask, c)
    assert c == pytest.approx((bx, by), rel=1e-9)
    assert (w, h) == pytest.approx((bw, bh), rel=1e-9, abs=1e-12)


def test_make_roi_examples():
    roi = make_roi((50, 50), 10, 10, 2, (200, 200))
    assert (roi.x0, roi.x1, roi.y0, roi.y1) == (30, 70, 30, 70)
    corner = make_roi((0, 0), 10, 10, 2, (200, 200))
    assert (corner.x0, corner.y0) == (0, 0) and (corner.x1, corner.y1) == (20, 20)
    tiny = make_roi((5, 5), 0, 0, 2, (20, 20))
    assert tiny.half_width_px == 1 and (tiny.x0, tiny.x1) == (4, 6)
    edge = make_roi((199, 10), 30, 3, 2, (200, 100))
    assert edge.x1 == 199 and edge.area_px >= 1


def test_gaussian_kernel():
    k = gaussian_kernel(5)
    assert len(k) == 31 and k.sum() == pytest.approx(1)
    assert len(gaussian_kernel(1.2)) == 2 * 4 + 1


def oracle_gradient_magnitude(region, sigma):
    """Direct 2D convolution with an outer-product Gaussian and explicit differences."""
    r = math.ceil(3 * sigma)
    x = np.arange(-r, r + 1)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    g2 = np.outer(g, g)
    g2 /= g2.sum()
    p = np.pad(region, r, mode="edge")
    h, w = region.shape
    s = np.zeros_like(region)
    for dy in range(2 * r + 1):
        for dx in range(2 * r + 1):
            s += g2[dy, dx] * p[dy:dy + h, dx:dx + w]
    q = np.pad(s, 1, mode="edge")
    gx = q[1:-1, 2:] - q[1:-1, :-2]
    gy = q[2:, 1:-1] - q[:-2, 1:-1]
    return np.sqrt(gx**2 + gy**2)


@pytest.mark.parametrize("sigma", [5.0, 1.5])
def test_smoothed_gradient_matches_oracle(sigma):
    region = np.random.default_rng(2).random((40, 55))
    assert np.allclose(smoothed_gradient_magnitude(region, sigma),
                       oracle_gradient_magnitude(region, sigma), atol=1e-12)


def test_bumpiness_constant_is_zero():
    dg = np.full((50, 60), 0.3)
    assert bumpiness(dg, full_roi(dg.shape)) == pytest.approx(0, abs=1e-12)


def test_bumpiness_ramp():
    h, w = 60, 80
    dg = np.tile(np.arange(w, dtype=float) + 1.0, (h, 1))
    g = smoothed_gradient_magnitude(dg, 5.0)
    # the [1, 0, -1] stencil spans two pixels; smoothing keeps a ramp a ramp
    assert np.allclose(g[20:40, 16:-16], 2.0, atol=1e-9)
    roi = full_roi(dg.shape)
    assert bumpiness(dg, roi) == pytest.approx(oracle_gradient_magnitude(dg, 5.0).mean() / dg.mean(), rel=1e-12)
    assert bumpiness(dg, roi) < 2.0 / dg.mean()  # replicated edges flatten the border


def test_bumpiness_scale_invariant_and_errors():
    dg = np.random.default_rng(1).random((30, 30))
    roi = make_roi((15, 15), 5, 5, 2, (30, 30))
    assert bumpiness(3.7 * dg, roi) == pytest.approx(bumpiness(dg, roi), rel=1e-12)
    with pytest.raises(NoSignalError):
        bumpiness(-dg, roi)


def test_chromaticity_examples():
    roi = full_roi((4, 4))
    assert chromaticity(np.tile([1.0, 1.0, 0.0], (4, 4, 1)), roi) == (0.5, 0.5, 0.0)
    assert chromaticity(np.tile([2.0, 1.0, 1.0], (4, 4, 1)), roi) == (0.5, 0.25, 0.25)
    c = chromaticity(np.random.default_rng(0).random((4, 4, 3)), roi)
    assert sum(c) == pytest.approx(1, abs=1e-12)
    with pytest.raises(NoSignalError):
        chromaticity(np.zeros((4, 4, 3)), roi)


def blob_pair(shape=(90, 160), color=(0.8, 0.3, 0.0)):
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    blob = np.exp(-(((xx - 100) / 15) ** 2 + ((yy - 40) / 8) ** 2))
    p2 = np.full((h, w, 3), 0.2)
    p1 = p2 + blob[..., None] * np.array(color)
    return p1, p2


def test_estimate_all_identical_is_no_signal():
    p = np.random.default_rng(0).random((20, 30, 3))
    r = estimate_all(p, p)
    assert r.no_signal and r.width_rms_px is None and r.chromaticity is None


def test_estimate_all_on_synthetic_blob():
    p1, p2 = blob_pair()
    r = estimate_all(p1, p2)
    assert not r.no_signal
    assert r.gravity_center == pytest.approx((100, 40), abs=1e-6)
    assert r.width_rms_px > r.height_rms_px > 0
    assert r.bumpiness > 0
    assert r.chromaticity == pytest.approx((0.8 / 1.1, 0.3 / 1.1, 0.0), abs=1e-9)
    assert sum(r.chromaticity) == pytest.approx(1, abs=1e-9)


def test_estimate_scale_invariance():
    p1, p2 = blob_pair()
    d = p1 - p2
    a = estimate_from_difference(d)
    b = estimate_from_difference(d * 4.0)
    assert (a.width_rms_px, a.height_rms_px, a.mask_area_px) == (b.width_rms_px, b.height_rms_px, b.mask_area_px)
    assert b.bumpiness == pytest.approx(a.bumpiness, rel=1e-12)
    assert b.chromaticity == pytest.approx(a.chromaticity, rel=1e-12)


def test_estimate_params_flow_through():
    p1, p2 = blob_pair()
    loose = estimate_all(p1, p2, EstimateParams(tau=0.01))
    tight = estimate_all(p1, p2, EstimateParams(tau=0.5))
    assert loose.mask_area_px > tight.mask_area_px


def test_report_dict_fields():
    p1, p2 = blob_pair()
    d = estimate_all(p1, p2).to_dict()
    assert set(d) == {"width_rms_px", "height_rms_px", "gravity_center", "mask_area_px",
                      "bumpiness", "chromaticity", "no_signal"}


def test_default_pair_regression_golden(small_scene):
    from difx.render import render_scene

    r = estimate_all(render_scene(small_scene, True, 7), render_scene(small_scene, False, 7))
    assert not r.no_signal
    # goldens from the first verified run of this fixture
    assert r.width_rms_px == pytest.approx(13.204016426528932, rel=1e-6)
    assert r.height_rms_px == pytest.approx(12.192712020461625, rel=1e-6)
    assert r.mask_area_px == 1922
    assert r.bumpiness == pytest.approx(0.11779739858669262, rel=1e-6)
    # the difference is jacket light times ground colour (0.8, 0.55, 0.35) times jacket colour (1, 1, 0)
    assert r.chromaticity == pytest.approx((0.8 / 1.35, 0.55 / 1.35, 0.0), abs=1e-7)
