"""Scene difference, its grayscale version, and the max-relative threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NoSignalError
from .raster import check_rgb, check_same_shape


@dataclass(frozen=True)
class ThresholdParams:
    tau: float = 1.0 / 20.0
    # maxima at or below this are treated as "no difference" (linear units)
    epsilon_floor: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise InvalidArgument(f"tau must lie in (0, 1), got {self.tau}")
        if not self.epsilon_floor > 0:
            raise InvalidArgument("epsilon_floor must be positive")


def diff(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Signed pixelwise difference ``p1 - p2`` in float64, unclamped."""
    p1, p2 = np.asarray(p1), np.asarray(p2)
    check_same_shape(p1, p2)
    check_rgb(p1)
    return p1.astype(np.float64) - p2.astype(np.float64)


def grayscale(d: np.ndarray) -> np.ndarray:
    d = check_rgb(np.asarray(d, dtype=np.float64))
    return (d[..., 0] + d[..., 1] + d[..., 2]) / 3.0


def threshold(dg: np.ndarray, params: ThresholdParams = ThresholdParams()) -> np.ndarray:
    """Mask of pixels at or above ``tau * max(dg)``.

    Raises NoSignalError when the maximum does not exceed ``epsilon_floor``.
    """
    dg = np.asarray(dg)
    m = dg.max()
    if not m > params.epsilon_floor:
        raise NoSignalError(f"difference maximum {m:.3g} is at or below the floor")
    return dg >= params.tau * m
