"""Single-parameter sweeps over the jacket, with render caching and CSV output.

Seeding
-------
Every random stream of a sweep is derived from ``base_seed`` with
:func:`derive_seed`, a splitmix64 chain over
``(base_seed, value_index, present, snr_index, role)``:

* the jacket fabric (bump layout) uses role ``FABRIC`` with all indices 0;
* renders use role ``RENDER`` with ``value_index = 0``, so every point of a
  sweep sees the same photon streams (common random numbers) and only the
  swept parameter changes between points;
* noise uses role ``NOISE`` with the real value and SNR indices, and the
  present/absent flag keeps the two images of a pair independent.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgument
from .estimate import EstimateParams, EstimateReport, estimate_all
from .noise import DEFAULT_SNR_LEVELS, add_gaussian_snr, format_snr, parse_snr
from .raster import read_rawf32, write_rawf32
from .render import render_scene
from .scene import PRESETS, SceneConfig, sweep_points, validate

log = logging.getLogger(__name__)

FABRIC, RENDER, NOISE = 0, 1, 2

PARAMETERS = ("width", "height", "bump_depth", "green")
ALIASES = {"bump": "bump_depth", "g": "green"}
DEFAULT_RANGES = {
    "width": (0.5, 1.5),
    "height": (1.0, 2.0),
    "bump_depth": (0.0, 20.0),
    "green": (0.0, 1.0),
}
# column of the report each sweep is judged on
METRIC = {
    "width": "width_rms_px",
    "height": "height_rms_px",
    "bump_depth": "bumpiness",
    "green": "chrom_g",
}
AXIS_LABELS = {
    "width": ("Reference jacket width (m)", "Estimated width W_RMS (px)"),
    "height": ("Reference jacket height (m)", "Estimated height H_RMS (px)"),
    "bump_depth": ("Reference bump depth (cm)", "Estimated bumpiness"),
    "green": ("Reference chromaticity G' = g / (1 + g)", "Estimated chromaticity G'"),
}
CSV_HEADER = [
    "param", "value", "snr_db", "width_rms_px", "height_rms_px",
    "bumpiness", "chrom_r", "chrom_g", "chrom_b", "no_signal",
]


def canonical_parameter(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in PARAMETERS:
        raise InvalidArgument(f"unknown sweep parameter {name!r}")
    return name


def reference_value(parameter: str, value: float) -> float:
    """x-axis value for plots: the swept value, or g/(1+g) for the green sweep."""
    if parameter == "green":
        return value / (1.0 + value)
    return value


def derive_seed(base_seed: int, value_index: int = 0, present: bool = False,
                snr_index: int = 0, role: int = 0) -> int:
    def mix(x: int) -> int:
        x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        return x ^ (x >> 31)

    h = mix(base_seed & 0xFFFFFFFFFFFFFFFF)
    for part in (value_index, int(present), snr_index, role):
        h = mix(h ^ (part & 0xFFFFFFFFFFFFFFFF))
    return h


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    low: float | None = None
    high: float | None = None
    n_points: int = 8
    snr_levels: tuple[float, ...] = DEFAULT_SNR_LEVELS
    base_seed: int = 0
    preset: str = "desk"
    resolution: tuple[int, int] | None = None
    photon_count: int | None = None
    estimate: EstimateParams = field(default_factory=EstimateParams)

    def __post_init__(self):
        object.__setattr__(self, "parameter", canonical_parameter(self.parameter))
        lo, hi = DEFAULT_RANGES[self.parameter]
        if self.low is None:
            object.__setattr__(self, "low", lo)
        if self.high is None:
            object.__setattr__(self, "high", hi)
        if self.preset not in PRESETS:
            raise InvalidArgument(f"unknown preset {self.preset!r}")
        if not self.snr_levels:
            raise InvalidArgument("need at least one SNR level")
        object.__setattr__(self, "snr_levels", tuple(parse_snr(s) for s in self.snr_levels))

    @property
    def values(self) -> list[float]:
        return sweep_points(self.low, self.high, self.n_points)

    def base_scene(self) -> SceneConfig:
        scene = PRESETS[self.preset]()
        if self.resolution is not None:
            scene = replace(scene, resolution=tuple(self.resolution))
        if self.photon_count is not None:
            scene = scene.with_render(photon_count=self.photon_count)
        return scene.with_render(seed=derive_seed(self.base_seed, role=FABRIC))

    def scene_for(self, value: float) -> SceneConfig:
        base = self.base_scene()
        if self.parameter == "width":
            return base.with_jacket(width_m=value)
        if self.parameter == "height":
            return base.with_jacket(height_m=value)
        if self.parameter == "bump_depth":
            return base.with_jacket(bump_depth_cm=value)
        r, _, b = base.jacket.color
        return base.with_jacket(color=(r, value, b))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_levels"] = [format_snr(s) for s in self.snr_levels]
        return d


@dataclass
class SweepRow:
    value: float
    snr: float
    seed_pair: tuple[int, int]
    report: EstimateReport
    wall_time: float = 0.0

    def csv_fields(self, parameter: str) -> list[str]:
        r = self.report
        chrom = r.chromaticity or (None, None, None)
        cells = [r.width_rms_px, r.height_rms_px, r.bumpiness, *chrom]
        return [parameter, repr(float(self.value)), format_snr(self.snr)] + [
            "" if c is None else repr(float(c)) for c in cells
        ] + [str(int(r.no_signal))]


@dataclass
class SweepTable:
    parameter: str
    rows: list[SweepRow]
    provenance: dict = field(default_factory=dict)

    @property
    def snr_levels(self) -> list[float]:
        return sorted({r.snr for r in self.rows})

    def series(self, snr: float, metric: str | None = None) -> tuple[list[float], list[float | None]]:
        """(values, metric) along the sweep at one SNR level."""
        metric = metric or METRIC[self.parameter]
        rows = [r for r in self.rows if r.snr == snr]
        return [r.value for r in rows], [metric_of(r.report, metric) for r in rows]


def metric_of(report: EstimateReport, metric: str) -> float | None:
    if metric.startswith("chrom_"):
        if report.chromaticity is None:
            return None
        return report.chromaticity["rgb".index(metric[-1])]
    return getattr(report, metric)


# -- render cache ----------------------------------------------------------------


def default_cache_dir() -> Path:
    env = os.environ.get("DIFX_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "difx"


def render_key(scene: SceneConfig, present: bool, seed: int) -> str:
    payload = json.dumps(
        {"scene": scene.to_dict(), "present": present, "seed": seed, "version": __version__},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


class RenderCache:
    """On-disk cache of noiseless renders keyed by scene, flag and seed."""

    def __init__(self, directory: str | Path | None = None, enabled: bool = True):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.enabled = enabled

    def render(self, scene: SceneConfig, present: bool, seed: int, workers: int = 1) -> np.ndarray:
        if not self.enabled:
            return render_scene(scene, present, seed, workers=workers)
        path = self.directory / f"{render_key(scene, present, seed)}.difx.f32"
        if path.exists():
            return read_rawf32(path)
        img = render_scene(scene, present, seed, workers=workers)
        self.directory.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp{os.getpid()}")
        write_rawf32(img, tmp)
        tmp.replace(path)
        return img


# -- sweeps ----------------------------------------------------------------------


def run_sweep(spec: SweepSpec, cache: RenderCache | None = None, workers: int = 1) -> SweepTable:
    """Render each sweep point once, then estimate at every SNR level."""
    cache = cache if cache is not None else RenderCache()
    for value in spec.values:
        check = validate(spec.scene_for(value))
        if not check.ok:
            raise InvalidArgument("invalid sweep scene: " + "; ".join(check.violations))

    absent_seed = derive_seed(spec.base_seed, 0, False, 0, RENDER)
    present_seed = derive_seed(spec.base_seed, 0, True, 0, RENDER)
    t0 = time.perf_counter()
    p2 = cache.render(spec.base_scene(), False, absent_seed, workers)
    log.info("absent render: %.1fs", time.perf_counter() - t0)

    jobs = []
    for i, value in enumerate(spec.values):
        t0 = time.perf_counter()
        p1 = cache.render(spec.scene_for(value), True, present_seed, workers)
        render_time = time.perf_counter() - t0
        log.info("%s=%g rendered in %.1fs", spec.parameter, value, render_time)
        for k, snr in enumerate(spec.snr_levels):
            seeds = (
                derive_seed(spec.base_seed, i, True, k, NOISE),
                derive_seed(spec.base_seed, i, False, k, NOISE),
            )
            jobs.append((value, snr, seeds, p1, render_time))

    def run(job) -> SweepRow:
        value, snr, seeds, p1, render_time = job
        t0 = time.perf_counter()
        report = estimate_all(
            add_gaussian_snr(p1, snr, seeds[0]),
            add_gaussian_snr(p2, snr, seeds[1]),
            spec.estimate,
        )
        return SweepRow(value, snr, seeds, report, render_time + time.perf_counter() - t0)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(job) for job in jobs]
    rows.sort(key=lambda r: (r.value, r.snr))
    provenance = {
        "code_version": __version__,
        "config_hash": hashlib.sha256(
            json.dumps(spec.to_dict(), sort_keys=True).encode()
        ).hexdigest(),
        "spec": spec.to_dict(),
        "render_seeds": {"present": present_seed, "absent": absent_seed},
    }
    return SweepTable(spec.parameter, rows, provenance)


# -- scoring ---------------------------------------------------------------------


def monotonicity_inversions(values) -> int:
    """Number of adjacent pairs that decrease by more than 1e-12."""
    v = list(values)
    if len(v) < 2:
        raise InvalidArgument("need at least 2 values")
    return sum(1 for a, b in zip(v, v[1:]) if b < a - 1e-12)


def linear_fit_r(xs, ys) -> float:
    """Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or len(x) < 3:
        raise InvalidArgument("need at least 3 paired points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise InvalidArgument("degenerate variance")
    return float(dx @ dy) / math.sqrt(sxx * syy)


# -- CSV -------------------------------------------------------------------------


def write_csv(table: SweepTable, path: str | Path) -> None:
    if not table.rows:
        raise InvalidArgument("empty table")
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in table.rows:
            w.writerow(row.csv_fields(table.parameter))


def write_provenance(table: SweepTable, path: str | Path) -> None:
    rows = [
        {"value": r.value, "snr_db": format_snr(r.snr), "seed_pair": list(r.seed_pair),
         "wall_time_s": r.wall_time, "report": r.report.to_dict()}
        for r in table.rows
    ]
    doc = {"parameter": table.parameter, "provenance": table.provenance, "rows": rows}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_csv(path: str | Path) -> SweepTable:
    """Parse a sweep CSV back into a table (seeds and timings are not stored)."""

    def num(cell: str) -> float | None:
        return None if cell == "" else float(cell)

    rows: list[SweepRow] = []
    parameter = None
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != CSV_HEADER:
            raise InvalidArgument(f"unexpected CSV header {header}")
        for cells in reader:
            parameter = canonical_parameter(cells[0])
            w, h, b, cr, cg, cb = (num(c) for c in cells[3:9])
            report = EstimateReport(
                width_rms_px=w, height_rms_px=h, bumpiness=b,
                chromaticity=None if cr is None else (cr, cg, cb),
                no_signal=cells[9] == "1",
            )
            rows.append(SweepRow(float(cells[1]), parse_snr(cells[2]), (0, 0), report))
    if parameter is None:
        raise InvalidArgument("CSV has no rows")
    return SweepTable(parameter, rows)
