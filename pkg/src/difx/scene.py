"""Scene parameterization: one wall, one point light, one reflective jacket.

World frame: x to the right (as seen from the camera), y up, z from the wall
towards the camera. The wall's front face lies in the plane z = 0 and its base
edge is centered on the origin. The camera sits at ``(0, camera_height_m,
camera_wall_distance_m)``, the light at ``(0, light_height_m,
-light_behind_wall_m)``. The jacket is a vertical rectangle facing the wall,
standing on the floor ``offset_behind_camera_m`` behind the camera.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidArgument

RGB = tuple[float, float, float]

# Radiant intensity of the point light. Calibrated with
# ``render.calibrate_light_power`` so the brightest directly lit floor pixel of
# the default photographer-absent render is 0.5 (max channel, linear units).
LIGHT_POWER = 17.97323174972046

FULL_PHOTON_COUNT = 20_000_000
DESK_PHOTON_COUNT = 1_000_000


@dataclass(frozen=True)
class JacketConfig:
    width_m: float = 0.75
    height_m: float = 1.5
    bump_depth_cm: float = 10.0
    bump_char_width_m: float = 0.30
    color: RGB = (1.0, 1.0, 0.0)
    offset_behind_camera_m: float = 0.3

    @property
    def area_m2(self) -> float:
        return self.width_m * self.height_m


@dataclass(frozen=True)
class RenderSettings:
    photon_count: int = FULL_PHOTON_COUNT
    gather_k: int = 200
    seed: int = 0
    batch_size: int = 1 << 16


@dataclass(frozen=True)
class SceneConfig:
    ground_color: RGB = (0.80, 0.55, 0.35)
    wall_width_m: float = 1.0
    wall_height_m: float = 1.9
    wall_ambient: float = 0.1
    wall_diffuse: float = 0.9
    ground_ambient: float = 0.1
    ground_diffuse: float = 0.9
    camera_height_m: float = 1.5
    camera_wall_distance_m: float = 2.0
    camera_hfov_deg: float = 90.0
    light_height_m: float = 3.0
    light_behind_wall_m: float = 1.0
    light_power: float = LIGHT_POWER
    resolution: tuple[int, int] = (1600, 900)
    jacket: JacketConfig = field(default_factory=JacketConfig)
    render: RenderSettings = field(default_factory=RenderSettings)

    @property
    def camera_position(self) -> np.ndarray:
        return np.array([0.0, self.camera_height_m, self.camera_wall_distance_m])

    @property
    def camera_target(self) -> np.ndarray:
        # midpoint of the wall's base edge
        return np.zeros(3)

    @property
    def light_position(self) -> np.ndarray:
        return np.array([0.0, self.light_height_m, -self.light_behind_wall_m])

    @property
    def jacket_plane_z(self) -> float:
        return self.camera_wall_distance_m + self.jacket.offset_behind_camera_m

    def with_jacket(self, **changes: Any) -> "SceneConfig":
        return replace(self, jacket=replace(self.jacket, **changes))

    def with_render(self, **changes: Any) -> "SceneConfig":
        return replace(self, render=replace(self.render, **changes))

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["ground_color"] = list(self.ground_color)
        d["resolution"] = list(self.resolution)
        d["jacket"]["color"] = list(self.jacket.color)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SceneConfig":
        """Build a config from a (possibly partial) dict; unknown keys raise."""
        base = cls()
        d = dict(data)
        _reject_unknown(d, cls, "")
        jacket = base.jacket
        if "jacket" in d:
            jd = dict(d.pop("jacket"))
            _reject_unknown(jd, JacketConfig, "jacket.")
            if "color" in jd:
                jd["color"] = _triple(jd["color"], "jacket.color")
            jacket = replace(jacket, **jd)
        render = base.render
        if "render" in d:
            rd = dict(d.pop("render"))
            _reject_unknown(rd, RenderSettings, "render.")
            render = replace(render, **rd)
        if "ground_color" in d:
            d["ground_color"] = _triple(d["ground_color"], "ground_color")
        if "resolution" in d:
            res = d["resolution"]
            if len(res) != 2:
                raise InvalidArgument("resolution must be [width_px, height_px]")
            d["resolution"] = (int(res[0]), int(res[1]))
        return replace(base, jacket=jacket, render=render, **d)

    @classmethod
    def from_json(cls, text: str) -> "SceneConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"scene config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidArgument("scene config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "SceneConfig":
        return cls.from_json(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _reject_unknown(d: dict, cls: type, prefix: str) -> None:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise InvalidArgument(
            "unknown config key(s): " + ", ".join(prefix + k for k in unknown)
        )


def _triple(value: Any, name: str) -> RGB:
    if len(value) != 3:
        raise InvalidArgument(f"{name} must have 3 components")
    return (float(value[0]), float(value[1]), float(value[2]))


def default_scene() -> SceneConfig:
    """The reference configuration: 1600x900, 20M photons, default jacket."""
    return SceneConfig()


def desk_scene() -> SceneConfig:
    """Reduced-cost preset: 400x225 pixels, 1M photons, 60-photon gather."""
    return replace(
        SceneConfig(),
        resolution=(400, 225),
        render=RenderSettings(photon_count=DESK_PHOTON_COUNT, gather_k=60),
    )


PRESETS = {"paper": default_scene, "desk": desk_scene}


@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(config: SceneConfig) -> ValidationResult:
    """Check every invariant of ``config``; violations are returned, not raised."""
    out: list[str] = []

    def unit(name: str, v: float) -> None:
        if not (np.isfinite(v) and 0.0 <= v <= 1.0):
            out.append(f"{name}: {v!r} not in [0, 1]")

    def positive(name: str, v: float) -> None:
        if not (np.isfinite(v) and v > 0):
            out.append(f"{name}: {v!r} must be > 0")

    def within(name: str, v: float, lo: float, hi: float) -> None:
        if not (np.isfinite(v) and lo <= v <= hi):
            out.append(f"{name}: {v!r} not in [{lo}, {hi}]")

    for i, c in enumerate(config.ground_color):
        unit(f"ground_color[{i}]", c)
    for name in ("wall_ambient", "wall_diffuse", "ground_ambient", "ground_diffuse"):
        unit(name, getattr(config, name))
    for surf in ("wall", "ground"):
        a = getattr(config, f"{surf}_ambient")
        d = getattr(config, f"{surf}_diffuse")
        if a + d > 1.0 + 1e-12:
            out.append(f"{surf}_ambient + {surf}_diffuse: {a + d!r} exceeds 1")
    for name in (
        "wall_width_m",
        "wall_height_m",
        "camera_height_m",
        "camera_wall_distance_m",
        "light_height_m",
        "light_behind_wall_m",
        "light_power",
    ):
        positive(name, getattr(config, name))
    hfov = config.camera_hfov_deg
    if not (np.isfinite(hfov) and 0 < hfov < 180):
        out.append(f"camera_hfov_deg: {hfov!r} not in (0, 180)")
    w, h = config.resolution
    if not (isinstance(w, (int, np.integer)) and isinstance(h, (int, np.integer)) and w > 0 and h > 0):
        out.append(f"resolution: {config.resolution!r} must be two positive integers")

    j = config.jacket
    within("jacket.width_m", j.width_m, 0.0, 1.5)
    within("jacket.height_m", j.height_m, 0.0, 2.0)
    within("jacket.bump_depth_cm", j.bump_depth_cm, 0.0, 20.0)
    positive("jacket.bump_char_width_m", j.bump_char_width_m)
    for i, c in enumerate(j.color):
        unit(f"jacket.color[{i}]", c)
    if not (np.isfinite(j.offset_behind_camera_m) and j.offset_behind_camera_m >= 0):
        out.append(f"jacket.offset_behind_camera_m: {j.offset_behind_camera_m!r} must be >= 0")

    r = config.render
    for name in ("photon_count", "gather_k", "batch_size"):
        v = getattr(r, name)
        if not (isinstance(v, (int, np.integer)) and v >= 1):
            out.append(f"render.{name}: {v!r} must be a positive integer")
    if not (isinstance(r.seed, (int, np.integer)) and 0 <= r.seed < 2**64):
        out.append(f"render.seed: {r.seed!r} must be an unsigned 64-bit integer")
    return ValidationResult(out)


def sweep_points(low: float, high: float, n: int) -> list[float]:
    """``n`` equally spaced values from ``low`` to ``high`` inclusive."""
    if n < 2:
        raise InvalidArgument(f"need at least 2 sweep points, got {n}")
    if low > high:
        raise InvalidArgument(f"low {low} exceeds high {high}")
    return [float(v) for v in np.linspace(low, high, n)]
