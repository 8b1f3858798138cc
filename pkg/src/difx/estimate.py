"""Photographer parameter estimators working on a (P1, P2) photo pair.

Pixel coordinates are pixel centers with x rightward, y downward and the
origin at the top-left pixel, so pixel ``[row, col]`` sits at ``(col, row)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .differential import ThresholdParams, diff, grayscale, threshold
from .errors import NoSignalError


@dataclass(frozen=True)
class EstimateParams:
    tau: float = 1.0 / 20.0
    epsilon_floor: float = 1e-6
    alpha: float = 2.0
    sigma_px: float = 5.0

    @property
    def threshold(self) -> ThresholdParams:
        return ThresholdParams(self.tau, self.epsilon_floor)


@dataclass(frozen=True)
class Roi:
    center: tuple[float, float]
    half_width_px: float
    half_height_px: float
    # inclusive integer bounds after clipping
    x0: int
    x1: int
    y0: int
    y1: int

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1 + 1), slice(self.x0, self.x1 + 1)

    @property
    def area_px(self) -> int:
        return (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)


@dataclass
class EstimateReport:
    width_rms_px: float | None = None
    height_rms_px: float | None = None
    gravity_center: tuple[float, float] | None = None
    mask_area_px: int | None = None
    bumpiness: float | None = None
    chromaticity: tuple[float, float, float] | None = None
    no_signal: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("gravity_center", "chromaticity"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


def _mask_coords(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        raise NoSignalError("mask has no set pixels")
    return xs.astype(np.float64), ys.astype(np.float64)


def gravity_center(mask: np.ndarray) -> tuple[float, float]:
    xs, ys = _mask_coords(mask)
    return float(xs.mean()), float(ys.mean())


def rms_extent(mask: np.ndarray, center: tuple[float, float]) -> tuple[float, float]:
    """RMS horizontal and vertical distance of the set pixels from ``center``."""
    xs, ys = _mask_coords(mask)
    x0, y0 = center
    return (
        math.sqrt(np.mean((xs - x0) ** 2)),
        math.sqrt(np.mean((ys - y0) ** 2)),
    )


def make_roi(center: tuple[float, float], w_rms: float, h_rms: float,
             alpha: float, image_dims: tuple[int, int]) -> Roi:
    """Rectangle centered on ``center`` with half extents ``alpha`` times the RMS size.

    ``image_dims`` is ``(width_px, height_px)``. Half extents never drop below
    one pixel; the integer rectangle is clipped to the image.
    """
    if w_rms < 0 or h_rms < 0:
        raise ValueError("RMS extents must be non-negative")
    width, height = image_dims
    cx, cy = center
    hw = max(1.0, alpha * w_rms)
    hh = max(1.0, alpha * h_rms)
    x0 = min(max(0, math.floor(cx - hw)), width - 1)
    x1 = max(min(width - 1, math.ceil(cx + hw)), x0)
    y0 = min(max(0, math.floor(cy - hh)), height - 1)
    y1 = max(min(height - 1, math.ceil(cy + hh)), y0)
    return Roi((cx, cy), hw, hh, x0, x1, y0, y1)


def gaussian_kernel(sigma_px: float) -> np.ndarray:
    """Unit-sum 1D Gaussian truncated at radius ceil(3 sigma)."""
    radius = math.ceil(3.0 * sigma_px)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma_px) ** 2)
    return k / k.sum()


def smoothed_gradient_magnitude(region: np.ndarray, sigma_px: float) -> np.ndarray:
    """|grad| of the Gaussian-smoothed region, [1, 0, -1] stencils, edges replicated."""
    k = gaussian_kernel(sigma_px)
    s = convolve1d(region, k, axis=0, mode="nearest")
    s = convolve1d(s, k, axis=1, mode="nearest")
    stencil = np.array([1.0, 0.0, -1.0])
    gx = convolve1d(s, stencil, axis=1, mode="nearest")
    gy = convolve1d(s, stencil, axis=0, mode="nearest")
    return np.hypot(gx, gy)


def bumpiness(dg: np.ndarray, roi: Roi, sigma_px: float = 5.0) -> float:
    """Mean smoothed-gradient magnitude over the ROI divided by the mean ROI value."""
    region = np.asarray(dg, dtype=np.float64)[roi.slices]
    mean = region.mean()
    if not mean > 0:
        raise NoSignalError("ROI mean of the grayscale difference is not positive")
    return float(smoothed_gradient_magnitude(region, sigma_px).mean() / mean)


def chromaticity(d: np.ndarray, roi: Roi) -> tuple[float, float, float]:
    means = np.asarray(d, dtype=np.float64)[roi.slices].reshape(-1, 3).mean(axis=0)
    total = means.sum()
    if not total > 0:
        raise NoSignalError("ROI channel means do not sum to a positive value")
    r, g, b = means / total
    return float(r), float(g), float(b)


def estimate_from_difference(d: np.ndarray, params: EstimateParams = EstimateParams()) -> EstimateReport:
    dg = grayscale(d)
    try:
        mask = threshold(dg, params.threshold)
    except NoSignalError:
        return EstimateReport(no_signal=True)
    center = gravity_center(mask)
    w_rms, h_rms = rms_extent(mask, center)
    roi = make_roi(center, w_rms, h_rms, params.alpha, (dg.shape[1], dg.shape[0]))
    report = EstimateReport(
        width_rms_px=w_rms,
        height_rms_px=h_rms,
        gravity_center=center,
        mask_area_px=int(mask.sum()),
    )
    # A non-positive ROI mean leaves that single field empty.
    try:
        report.bumpiness = bumpiness(dg, roi, params.sigma_px)
    except NoSignalError:
        pass
    try:
        report.chromaticity = chromaticity(d, roi)
    except NoSignalError:
        pass
    return report


def estimate_all(p1: np.ndarray, p2: np.ndarray, params: EstimateParams = EstimateParams()) -> EstimateReport:
    """Run the full chain diff, grayscale, threshold, size, ROI, bumpiness, colour."""
    return estimate_from_difference(diff(p1, p2), params)
