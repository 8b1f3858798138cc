"""Forward model: direct light with shadows plus photon-mapped jacket bounce.

The jacket is a mirror whose normals are perturbed by a bump height field.
Photons are emitted from the point light towards the jacket only, reflected
once about the perturbed normal, and deposited where they next hit the floor
or the wall. Shading casts one ray per pixel center; floor hits receive the
analytic direct term and a k-nearest-neighbour irradiance estimate from the
photon map.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .scene import JacketConfig, SceneConfig

GROUND, WALL = 0, 1
WALL_COLOR = np.zeros(3)
LIGHT_COLOR = np.ones(3)
# lower bound on the gather radius, meters
MIN_GATHER_RADIUS_M = 0.01
_JACKET_NORMAL = np.array([0.0, 0.0, -1.0])


# -- bump field ----------------------------------------------------------------


@dataclass(frozen=True)
class BumpField:
    """Random cosine-squared bumps on the jacket rectangle.

    Surface coordinates are ``u`` (meters, rightward, 0 at the jacket's
    vertical center line) and ``v`` (meters above the floor). Overlapping
    bumps combine as ``depth * (1 - prod(1 - c_i))`` where ``c_i`` is each
    bump's unit profile, which keeps the height within ``[0, depth_m]``.
    """

    seed: int
    centers: np.ndarray  # (n, 2) of (u, v)
    radius_m: float
    depth_m: float

    def _profiles(self, u: np.ndarray, v: np.ndarray):
        du = u[..., None] - self.centers[:, 0]
        dv = v[..., None] - self.centers[:, 1]
        r = np.hypot(du, dv)
        a = math.pi / (2.0 * self.radius_m)
        inside = r < self.radius_m
        c = np.where(inside, np.cos(a * r) ** 2, 0.0)
        # dc/dr = -a sin(2 a r); sin(2 a r) / r = 2a sinc(2 a r / pi)
        dcdr_over_r = np.where(inside, -a * 2.0 * a * np.sinc(2.0 * a * r / math.pi), 0.0)
        return c, dcdr_over_r * du, dcdr_over_r * dv

    def height(self, u, v) -> np.ndarray:
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        if self.depth_m == 0.0 or len(self.centers) == 0:
            return np.zeros(np.broadcast(u, v).shape)
        c, _, _ = self._profiles(u, v)
        return self.depth_m * (1.0 - np.prod(1.0 - c, axis=-1))

    def gradient(self, u, v) -> tuple[np.ndarray, np.ndarray]:
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        shape = np.broadcast(u, v).shape
        if self.depth_m == 0.0 or len(self.centers) == 0:
            return np.zeros(shape), np.zeros(shape)
        c, cu, cv = self._profiles(u, v)
        q = 1.0 - c
        # product of all other factors, without dividing by possibly-zero q_i
        ones = np.ones(q.shape[:-1] + (1,))
        before = np.cumprod(np.concatenate([ones, q[..., :-1]], axis=-1), axis=-1)
        after = np.cumprod(np.concatenate([ones, q[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
        others = before * after
        hu = self.depth_m * np.sum(cu * others, axis=-1)
        hv = self.depth_m * np.sum(cv * others, axis=-1)
        return hu, hv


# Photons and bumps live on a fixed canvas covering the largest valid jacket
# (width x height, meters). The jacket is a window onto it, so a larger
# jacket carries a superset of a smaller one's bumps and reflected photons.
JACKET_CANVAS_M = (1.5, 2.0)


def _canvas(jacket: JacketConfig) -> tuple[float, float]:
    return max(JACKET_CANVAS_M[0], jacket.width_m), max(JACKET_CANVAS_M[1], jacket.height_m)


def build_bump_field(jacket: JacketConfig, seed: int) -> BumpField:
    """Uniform bumps at one expected center per char_width**2 of area.

    Every bump whose footprint touches the jacket rectangle is kept.
    """
    cw, ch = _canvas(jacket)
    radius = jacket.bump_char_width_m / 2.0
    rng = np.random.default_rng(seed)
    # pad the canvas so bumps straddling its edge are drawn too
    pw, ph = cw + 2 * radius, ch + 2 * radius
    n = int(rng.poisson(pw * ph / jacket.bump_char_width_m**2))
    u = rng.uniform(-pw / 2, pw / 2, n)
    v = rng.uniform(-radius, ch + radius, n)
    # distance from each center to the jacket rectangle
    du = np.maximum(np.abs(u) - jacket.width_m / 2, 0.0)
    dv = np.maximum(np.maximum(-v, v - jacket.height_m), 0.0)
    keep = np.hypot(du, dv) < radius
    if jacket.width_m <= 0 or jacket.height_m <= 0:
        keep[:] = False
    return BumpField(
        seed=seed,
        centers=np.column_stack([u[keep], v[keep]]),
        radius_m=radius,
        depth_m=jacket.bump_depth_cm / 100.0,
    )


def bump_height(field: BumpField, u, v) -> np.ndarray:
    return field.height(u, v)


def perturbed_normal(field: BumpField, u, v) -> np.ndarray:
    """Unit normal of the bump-mapped jacket at ``(u, v)``; shape ``(..., 3)``.

    The geometric normal faces the wall (-z) with tangents U = +x, V = +y, so
    the perturbed normal is ``n - h_u U - h_v V``.
    """
    hu, hv = field.gradient(u, v)
    n = np.stack([-hu, -hv, np.broadcast_to(_JACKET_NORMAL[2], hu.shape)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


# -- photon map ----------------------------------------------------------------


@dataclass
class PhotonMap:
    positions: np.ndarray  # (n, 3) meters
    power: np.ndarray  # (n, 3)
    incident: np.ndarray  # (n, 3) unit travel directions
    surface: np.ndarray  # (n,) GROUND or WALL
    emitted_power: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __len__(self) -> int:
        return len(self.positions)

    @classmethod
    def empty(cls) -> "PhotonMap":
        z = np.empty((0, 3))
        return cls(z, z.copy(), z.copy(), np.empty(0, dtype=np.int8))

    def subset(self, surface: int) -> "PhotonMap":
        keep = self.surface == surface
        return PhotonMap(
            self.positions[keep], self.power[keep], self.incident[keep],
            self.surface[keep], self.emitted_power,
        )

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.positions)


def _wall_blocks(scene: SceneConfig, origin: np.ndarray, direction: np.ndarray,
                 t_max: np.ndarray, eps: float = 0.0) -> np.ndarray:
    """True where origin + t*direction crosses the wall rectangle for 0 < t < t_max.

    ``eps`` widens the rectangle's bottom edge, for rays grazing the wall base.
    """
    dz = direction[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -origin[:, 2] / dz
    hit = (dz != 0) & (t > 0) & (t < t_max)
    x = origin[:, 0] + t * direction[:, 0]
    y = origin[:, 1] + t * direction[:, 1]
    return hit & (np.abs(x) <= scene.wall_width_m / 2) & (y >= -eps) & (y <= scene.wall_height_m)


def _trace_batch(scene: SceneConfig, bumps: BumpField, count: int, seed: int):
    j = scene.jacket
    cw, ch = _canvas(j)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-cw / 2, cw / 2, count)
    v = rng.uniform(0.0, ch, count)
    hit = np.column_stack([u, v, np.full(count, scene.jacket_plane_z)])

    light = scene.light_position
    to_jacket = hit - light
    dist = np.linalg.norm(to_jacket, axis=1)
    d = to_jacket / dist[:, None]
    # area sampling of the canvas: each photon carries I * cos / r^2 * A / N
    cos_j = np.maximum(d[:, 2], 0.0)
    weight = scene.light_power * cos_j / dist**2 * (cw * ch / scene.render.photon_count)
    emitted = weight.sum() * LIGHT_COLOR

    on_jacket = (np.abs(u) <= j.width_m / 2) & (v <= j.height_m)
    alive = on_jacket & (cos_j > 0)
    alive &= ~_wall_blocks(scene, np.broadcast_to(light, hit.shape), d, dist)
    n = perturbed_normal(bumps, u, v)
    dn = np.einsum("ij,ij->i", d, n)
    r = d - 2.0 * dn[:, None] * n
    # light must arrive on the front of the facet and leave towards the wall
    alive &= (dn < 0) & (r[:, 2] < 0)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(r[:, 1] < 0, -hit[:, 1] / r[:, 1], np.inf)
        t_wall = -hit[:, 2] / r[:, 2]
    wx = hit[:, 0] + t_wall * r[:, 0]
    wy = hit[:, 1] + t_wall * r[:, 1]
    on_wall = (np.abs(wx) <= scene.wall_width_m / 2) & (wy >= 0) & (wy <= scene.wall_height_m)
    on_wall &= t_wall < t_ground
    alive &= on_wall | np.isfinite(t_ground)

    t = np.where(on_wall, t_wall, t_ground)[alive]
    pos = hit[alive] + t[:, None] * r[alive]
    power = weight[alive, None] * LIGHT_COLOR * np.asarray(j.color)
    surface = np.where(on_wall[alive], WALL, GROUND).astype(np.int8)
    return pos, power, r[alive], surface, emitted


def trace_photons(scene: SceneConfig, present: bool, seed: int | None = None,
                  workers: int = 1) -> PhotonMap:
    """Shoot ``photon_count`` photons towards the jacket canvas and record deposits.

    Photons missing the jacket itself are lost.
    Batch ``b`` draws from a generator seeded with ``seed ^ b``, and batches are
    concatenated in index order, so the map does not depend on ``workers``.
    """
    j = scene.jacket
    if not present or j.width_m <= 0 or j.height_m <= 0:
        return PhotonMap.empty()
    seed = scene.render.seed if seed is None else seed
    # the fabric belongs to the scene; ``seed`` only drives the photon streams
    bumps = build_bump_field(j, scene.render.seed)
    total, bs = scene.render.photon_count, scene.render.batch_size
    jobs = [(b, min(bs, total - b * bs)) for b in range(-(-total // bs))]

    def run(job):
        b, count = job
        return _trace_batch(scene, bumps, count, seed ^ b)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    emitted = np.zeros(3)
    for p in parts:
        emitted = emitted + p[4]
    return PhotonMap(
        positions=np.concatenate([p[0] for p in parts]),
        power=np.concatenate([p[1] for p in parts]),
        incident=np.concatenate([p[2] for p in parts]),
        surface=np.concatenate([p[3] for p in parts]),
        emitted_power=emitted,
    )


def gather_irradiance(pmap: PhotonMap, points, normal, k: int,
                      workers: int = 1) -> np.ndarray:
    """k-nearest photon density estimate of irradiance at ``points``.

    Returns an ``(..., 3)`` array. Only deposits arriving on the front side
    (``incident . normal < 0``) contribute; the radius is floored at
    ``MIN_GATHER_RADIUS_M``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    points = np.asarray(points, dtype=float)
    lead = points.shape[:-1]
    if len(pmap) == 0:
        return np.zeros(lead + (3,))
    q = points.reshape(-1, 3)
    k_eff = min(k, len(pmap))
    dist, idx = pmap.tree.query(q, k=k_eff, workers=workers)
    dist = dist.reshape(len(q), k_eff)
    idx = idx.reshape(len(q), k_eff)
    normal = np.asarray(normal, dtype=float)
    facing = pmap.incident[idx] @ normal < 0
    flux = np.einsum("ij,ijc->ic", facing.astype(float), pmap.power[idx])
    radius = np.maximum(dist[:, -1], MIN_GATHER_RADIUS_M)
    return (flux / (math.pi * radius**2)[:, None]).reshape(lead + (3,))


# -- camera and shading ----------------------------------------------------------


def camera_rays(scene: SceneConfig) -> tuple[np.ndarray, np.ndarray]:
    """Camera origin and unit ray directions through pixel centers, shape (H, W, 3)."""
    w, h = scene.resolution
    eye = scene.camera_position
    fwd = scene.camera_target - eye
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, [0.0, 1.0, 0.0])
    right /= np.linalg.norm(right)
    up = np.cross(right, fwd)
    half = math.tan(math.radians(scene.camera_hfov_deg) / 2)
    sx = ((np.arange(w) + 0.5) / w * 2 - 1) * half
    sy = (1 - (np.arange(h) + 0.5) / h * 2) * half * h / w
    d = fwd + sx[None, :, None] * right + sy[:, None, None] * up
    return eye, d / np.linalg.norm(d, axis=-1, keepdims=True)


def _jacket_blocks(scene: SceneConfig, origin, direction, t_max) -> np.ndarray:
    j = scene.jacket
    if j.width_m <= 0 or j.height_m <= 0:
        return np.zeros(len(origin), dtype=bool)
    dz = direction[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (scene.jacket_plane_z - origin[:, 2]) / dz
    hit = (dz != 0) & (t > 0) & (t < t_max)
    x = origin[:, 0] + t * direction[:, 0]
    y = origin[:, 1] + t * direction[:, 1]
    return hit & (np.abs(x) <= j.width_m / 2) & (y >= 0) & (y <= j.height_m)


def direct_irradiance(scene: SceneConfig, points: np.ndarray, present: bool) -> np.ndarray:
    """Unoccluded point-light irradiance on floor points (normal +y), shape (n,)."""
    to_light = scene.light_position - points
    dist = np.linalg.norm(to_light, axis=1)
    d = to_light / dist[:, None]
    cos = np.maximum(d[:, 1], 0.0)
    blocked = _wall_blocks(scene, points, d, dist)
    if present:
        blocked |= _jacket_blocks(scene, points, d, dist)
    return np.where(blocked, 0.0, scene.light_power * cos / dist**2)


def _floor_hits(scene: SceneConfig):
    """Per-pixel floor hit points; wall hits and misses are excluded."""
    eye, d = camera_rays(scene)
    flat = d.reshape(-1, 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(flat[:, 1] < 0, -eye[1] / flat[:, 1], np.inf)
    origin = np.broadcast_to(eye, flat.shape)
    # The jacket stands behind the camera and is never seen by primary rays.
    wall_first = _wall_blocks(scene, origin, flat, t_ground * (1 + 1e-9), eps=1e-9)
    floor = np.isfinite(t_ground) & ~wall_first
    pts = eye + t_ground[floor, None] * flat[floor]
    return floor, pts


def render_scene(scene: SceneConfig, present: bool, seed: int | None = None,
                 workers: int = 1, photon_map: PhotonMap | None = None) -> np.ndarray:
    """Render the scene with (P1) or without (P2) the photographer.

    Returns a float32 ``(H, W, 3)`` linear-light image. The result depends only
    on ``(scene, present, seed)``.
    """
    w, h = scene.resolution
    img = np.zeros((w * h, 3))
    floor, pts = _floor_hits(scene)
    # Wall pixels stay at zero: the wall is black, so both terms vanish.
    direct = direct_irradiance(scene, pts, present)
    if photon_map is None:
        photon_map = trace_photons(scene, present, seed, workers)
    indirect = gather_irradiance(
        photon_map.subset(GROUND), pts, [0.0, 1.0, 0.0], scene.render.gather_k, workers
    )
    irradiance = direct[:, None] * LIGHT_COLOR + indirect
    c = np.asarray(scene.ground_color)
    img[floor] = scene.ground_ambient * c + scene.ground_diffuse * c * irradiance / math.pi
    return img.reshape(h, w, 3).astype(np.float32)


def calibrate_light_power(scene: SceneConfig, target: float = 0.5) -> float:
    """Light intensity putting the brightest directly lit floor pixel at ``target``."""
    _, pts = _floor_hits(scene)
    unit = direct_irradiance(replace(scene, light_power=1.0), pts, False)
    c = max(scene.ground_color)
    return (target - scene.ground_ambient * c) / (scene.ground_diffuse * c * unit.max() / math.pi)
