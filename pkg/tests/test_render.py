import math

import numpy as np
import pytest
from dataclasses import replace

from difx.noise import signal_energy
from difx.render import (
    GROUND, PhotonMap, build_bump_field, bump_height, camera_rays, gather_irradiance,
    perturbed_normal, render_scene, trace_photons, MIN_GATHER_RADIUS_M,
)
from difx.scene import JacketConfig


def fd_normal(field, u, v, h=1e-5):
    hu = (bump_height(field, u + h, v) - bump_height(field, u - h, v)) / (2 * h)
    hv = (bump_height(field, u, v + h) - bump_height(field, u, v - h)) / (2 * h)
    n = np.stack([-hu, -hv, -np.ones_like(hu)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True), hu, hv


def random_points(jacket, n, seed):
    rng = np.random.default_rng(seed)
    return (rng.uniform(-jacket.width_m / 2, jacket.width_m / 2, n),
            rng.uniform(0, jacket.height_m, n))


class TestBumpField:
    def test_flat_when_depth_zero(self):
        j = JacketConfig(bump_depth_cm=0.0)
        f = build_bump_field(j, 5)
        u, v = random_points(j, 200, 0)
        assert np.all(bump_height(f, u, v) == 0)
        assert np.array_equal(perturbed_normal(f, u, v), np.tile([0.0, 0.0, -1.0], (200, 1)))

    def test_deterministic(self):
        j = JacketConfig()
        assert np.array_equal(build_bump_field(j, 9).centers, build_bump_field(j, 9).centers)
        assert not np.array_equal(build_bump_field(j, 9).centers, build_bump_field(j, 10).centers)

    def test_zero_area_has_no_bumps(self):
        assert len(build_bump_field(JacketConfig(width_m=0.0), 1).centers) == 0
        assert len(build_bump_field(JacketConfig(height_m=0.0), 1).centers) == 0

    def test_density(self):
        # expected one center per 0.3 m square over the jacket (plus edge straddlers)
        j = JacketConfig(width_m=1.5, height_m=2.0)
        counts = [len(build_bump_field(j, s).centers) for s in range(200)]
        r = j.bump_char_width_m / 2
        padded = j.width_m * j.height_m + 2 * r * (j.width_m + j.height_m) + math.pi * r * r
        assert np.mean(counts) == pytest.approx(padded / 0.09, rel=0.05)

    def test_nested_windows(self):
        small = build_bump_field(JacketConfig(width_m=0.5), 4)
        big = build_bump_field(JacketConfig(width_m=1.5), 4)
        assert {tuple(c) for c in small.centers} <= {tuple(c) for c in big.centers}
        u, v = random_points(JacketConfig(width_m=0.5), 300, 1)
        assert np.array_equal(bump_height(small, u, v), bump_height(big, u, v))

    @pytest.mark.parametrize("depth", [2.0, 10.0, 20.0])
    def test_height_range(self, depth):
        j = JacketConfig(bump_depth_cm=depth)
        h = bump_height(build_bump_field(j, 2), *random_points(j, 5000, 3))
        assert h.min() >= 0 and h.max() <= depth / 100 + 1e-15
        assert h.max() > 0

    def test_center_is_extremum(self):
        j = JacketConfig()
        f = build_bump_field(j, 8)
        # an isolated bump: a field with a single center
        single = replace(f, centers=f.centers[:1])
        u, v = single.centers[0]
        assert np.allclose(perturbed_normal(single, u, v), [0, 0, -1])
        assert bump_height(single, u, v) == pytest.approx(j.bump_depth_cm / 100)

    @pytest.mark.parametrize("depth", [5.0, 10.0, 20.0])
    def test_gradient_matches_central_differences(self, depth):
        j = JacketConfig(bump_depth_cm=depth)
        f = build_bump_field(j, 11)
        u, v = random_points(j, 1000, 12)
        _, hu_fd, hv_fd = fd_normal(f, u, v)
        hu, hv = f.gradient(u, v)
        assert np.max(np.abs(hu - hu_fd)) < 1e-4
        assert np.max(np.abs(hv - hv_fd)) < 1e-4


class TestPhotons:
    def test_absent_or_degenerate_is_empty(self, small_scene):
        assert len(trace_photons(small_scene, False)) == 0
        assert len(trace_photons(small_scene.with_jacket(width_m=0.0), True)) == 0

    def test_conservation_and_channels(self, small_scene):
        pm = trace_photons(small_scene, True, seed=4)
        assert len(pm) > 0
        assert np.all(pm.power.sum(axis=0) <= pm.emitted_power + 1e-12)
        assert np.all(pm.power[:, 2] == 0)  # default colour (1, 1, 0)
        assert np.allclose(np.linalg.norm(pm.incident, axis=1), 1)

    def test_deposits_on_surfaces(self, small_scene):
        pm = trace_photons(small_scene, True, seed=4)
        g = pm.surface == GROUND
        assert np.allclose(pm.positions[g, 1], 0, atol=1e-9)
        assert np.allclose(pm.positions[~g, 2], 0, atol=1e-9)
        assert np.all(np.abs(pm.positions[~g, 0]) <= 0.5 + 1e-9)

    def test_flat_mirror_lands_on_mirror_image_rays(self, small_scene):
        # flat mirror: each deposit lies on the line from the light's mirror image
        s = small_scene.with_jacket(bump_depth_cm=0.0)
        pm = trace_photons(s, True, seed=1).subset(GROUND)
        zj = s.jacket_plane_z
        image = s.light_position * [1, 1, -1] + [0, 0, 2 * zj]
        d = pm.positions - image
        t = (zj - image[2]) / d[:, 2]
        at_plane = image + t[:, None] * d
        assert np.all(np.abs(at_plane[:, 0]) <= s.jacket.width_m / 2 + 1e-9)
        assert np.all((at_plane[:, 1] >= -1e-9) & (at_plane[:, 1] <= s.jacket.height_m + 1e-9))

    def test_thread_count_independent(self, small_scene):
        a = trace_photons(small_scene, True, seed=8, workers=1)
        b = trace_photons(small_scene, True, seed=8, workers=3)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.power, b.power)


class TestGather:
    def test_empty_map(self):
        assert np.array_equal(gather_irradiance(PhotonMap.empty(), [0, 0, 0], [0, 1, 0], 5), np.zeros(3))

    def test_single_deposit_radius_floor(self):
        pm = PhotonMap(np.zeros((1, 3)), np.array([[2.0, 1.0, 0.0]]),
                       np.array([[0.0, -1.0, 0.0]]), np.zeros(1, np.int8))
        e = gather_irradiance(pm, [0, 0, 0], [0, 1, 0], 1)
        assert np.allclose(e, np.array([2.0, 1.0, 0.0]) / (math.pi * MIN_GATHER_RADIUS_M**2))

    def test_back_facing_deposits_ignored(self):
        pm = PhotonMap(np.zeros((2, 3)), np.ones((2, 3)),
                       np.array([[0.0, -1.0, 0.0], [0.0, 1.0, 0.0]]), np.zeros(2, np.int8))
        e = gather_irradiance(pm, [0, 0, 0], [0, 1, 0], 2)
        assert np.allclose(e, 1 / (math.pi * MIN_GATHER_RADIUS_M**2))

    def test_uniform_disk_density(self):
        # closed form: n deposits of power p spread uniformly over a disk of
        # radius R have irradiance n p / (pi R^2) everywhere inside it
        rng = np.random.default_rng(0)
        n, R, p = 40_000, 0.5, 1e-3
        r = R * np.sqrt(rng.random(n))
        phi = rng.uniform(0, 2 * math.pi, n)
        pos = np.column_stack([r * np.cos(phi), np.zeros(n), r * np.sin(phi)])
        pm = PhotonMap(pos, np.full((n, 3), p), np.tile([0, -1.0, 0], (n, 1)), np.zeros(n, np.int8))
        queries = np.array([[0, 0, 0], [0.2, 0, 0.1], [-0.15, 0, -0.2]])
        e = gather_irradiance(pm, queries, [0, 1, 0], 200)
        expected = n * p / (math.pi * R**2)
        assert np.all(np.abs(e / expected - 1) < 0.10)


class TestRenderScene:
    def test_deterministic_across_workers(self, small_scene):
        a = render_scene(small_scene, True, seed=2, workers=1)
        b = render_scene(small_scene, True, seed=2, workers=4)
        assert a.dtype == np.float32 and a.shape == (90, 160, 3)
        assert a.tobytes() == b.tobytes()

    def test_zero_width_equals_absent(self, small_scene):
        p1 = render_scene(small_scene.with_jacket(width_m=0.0), True, seed=2)
        p2 = render_scene(small_scene, False, seed=2)
        assert p1.tobytes() == p2.tobytes()

    def test_absent_ignores_jacket(self, small_scene):
        other = small_scene.with_jacket(width_m=1.3, height_m=1.1, bump_depth_cm=3, color=(0, 1, 1))
        for seed in (0, 17):
            assert render_scene(small_scene, False, seed).tobytes() == render_scene(other, False, seed).tobytes()

    def test_difference_is_non_negative(self, small_scene):
        d = render_scene(small_scene, True, 2).astype(float) - render_scene(small_scene, False, 2)
        assert d.min() >= -1e-9
        assert d.max() > 0

    def test_wall_shadow_visible(self, small_scene):
        img = render_scene(small_scene, False, 0).max(axis=2)
        eye, d = camera_rays(small_scene)
        # floor hits, independently of the renderer's own intersection code
        t = np.where(d[..., 1] < 0, -eye[1] / d[..., 1], np.nan)
        x = eye[0] + t * d[..., 0]
        z = eye[2] + t * d[..., 2]
        # shadow of the wall by similar triangles from the light (3 m high, 1 m behind)
        z_end = 1.0 * 1.9 / (3.0 - 1.9)
        in_shadow = (z > 0.05) & (z < z_end - 0.05) & (np.abs(x) < 0.5 * (1 + z) - 0.05)
        lit = (z > 0) & ((z > z_end + 0.05) | (np.abs(x) > 0.5 * (1 + z) + 0.05))
        assert in_shadow.sum() > 100 and lit.sum() > 100
        assert img[in_shadow].min() < 0.5 * np.median(img[lit])

    def test_brightest_lit_floor_pixel_calibrated(self):
        from difx.scene import default_scene

        s = replace(default_scene(), resolution=(800, 450))
        s = s.with_render(photon_count=1)
        img = render_scene(s, False)
        assert img.max() == pytest.approx(0.5, abs=0.01)

    @pytest.mark.parametrize("sizes", [
        [(w, 1.5) for w in np.linspace(0.5, 1.5, 8)],
        [(0.75, h) for h in np.linspace(1.0, 2.0, 8)],
        [(0.5, 1.0), (0.75, 1.25), (1.0, 1.5), (1.25, 1.75), (1.5, 2.0)],
    ], ids=["width", "height", "both"])
    def test_energy_grows_with_jacket_area(self, small_scene, sizes):
        p2 = render_scene(small_scene, False, 5)
        energies = []
        for w, h in sizes:
            p1 = render_scene(small_scene.with_jacket(width_m=w, height_m=h), True, 5)
            energies.append(signal_energy(p1.astype(float) - p2))
        assert energies == sorted(energies)
