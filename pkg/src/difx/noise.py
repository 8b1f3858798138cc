"""SNR-calibrated additive Gaussian sensor noise.

SNR levels are plain floats in dB; ``math.inf`` is the noiseless case.
Noise samples come from a counter-based generator keyed by
``(seed, pixel index, channel)``, so the noise at a pixel does not depend on
image layout or on how the work is split.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgument, NoSignalError
from .raster import check_rgb, check_same_shape

INF = math.inf
DEFAULT_SNR_LEVELS = (25.0, 30.0, 35.0, 40.0, 45.0, 50.0, INF)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def parse_snr(text: str | float) -> float:
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        s = text.strip().lower()
        value = INF if s in ("inf", "+inf", "infinity") else float(s)
    if not value > 0:
        raise InvalidArgument(f"SNR must be positive dB or inf, got {text!r}")
    return value


def format_snr(snr: float) -> str:
    return "inf" if math.isinf(snr) else repr(float(snr))


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return _splitmix64_raw(x)


def _splitmix64_raw(x: np.ndarray) -> np.ndarray:
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def counter_normals(seed: int, counters: np.ndarray) -> np.ndarray:
    """Standard normal deviates, one per counter, via Box-Muller."""
    key = _splitmix64(np.array(seed % 2**64, dtype=np.uint64))
    c = np.asarray(counters, dtype=np.uint64) * np.uint64(2)
    h1 = _splitmix64(key ^ _splitmix64(c))
    h2 = _splitmix64(key ^ _splitmix64(c + np.uint64(1)))
    u1 = ((h1 >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
    u2 = (h2 >> np.uint64(11)).astype(np.float64) * 2.0**-53  # [0, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def signal_energy(img: np.ndarray) -> float:
    """Sum of squares over all pixels and channels."""
    a = np.asarray(img, dtype=np.float64)
    return float(np.sum(a * a))


def add_gaussian_snr(img: np.ndarray, snr: float, seed: int) -> np.ndarray:
    """Add i.i.d. Gaussian noise whose expected energy is ``energy / 10**(snr/10)``.

    The result is not clamped. ``snr = inf`` returns ``img`` untouched.
    """
    img = check_rgb(np.asarray(img))
    if math.isinf(snr) and snr > 0:
        return img
    energy = signal_energy(img)
    if energy <= 0:
        raise NoSignalError("cannot calibrate noise against a zero-energy image")
    sigma = math.sqrt(energy / (img.size * 10.0 ** (snr / 10.0)))
    z = counter_normals(seed, np.arange(img.size, dtype=np.uint64)).reshape(img.shape)
    out_dtype = img.dtype if np.issubdtype(img.dtype, np.floating) else np.float64
    return (img.astype(np.float64) + sigma * z).astype(out_dtype)


def measure_snr(clean: np.ndarray, noisy: np.ndarray) -> float:
    check_same_shape(np.asarray(clean), np.asarray(noisy))
    residual = np.asarray(noisy, dtype=np.float64) - np.asarray(clean, dtype=np.float64)
    noise = signal_energy(residual)
    if noise == 0:
        return INF
    signal = signal_energy(clean)
    if signal <= 0:
        raise NoSignalError("clean image has zero energy")
    return 10.0 * math.log10(signal / noise)
