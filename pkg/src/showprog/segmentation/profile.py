"""Vertical projection profiles and gap (separator) detection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..imaging import TextMask


@dataclass(frozen=True, eq=False)
class ProjectionProfile:
    values: np.ndarray
    smoothed: np.ndarray
    sigma: float

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class PeakParams:
    """Gap detection knobs.

    ``distance`` is the minimum spacing between two separators in pixels. When
    left as ``None`` the segmentation pipeline derives it from the reference
    width (``distance_fraction`` x median); standalone calls fall back to 1.
    """

    distance: int | None = None
    distance_fraction: float = 0.2
    prominence_fraction: float = 0.10
    sigma_fraction: float = 1 / 200
    sigma: float | None = None

    def sigma_for(self, width: int) -> float:
        if self.sigma is not None:
            return self.sigma
        return max(width * self.sigma_fraction, 0.5)

    def distance_for(self, reference_width: float | None) -> int:
        if self.distance is not None:
            return self.distance
        if reference_width is None:
            return 1
        return max(1, int(round(self.distance_fraction * reference_width)))


def gaussian_smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    """Convolve with a normalised Gaussian truncated at 4 sigma, mirroring edges."""
    values = np.asarray(values, dtype=np.float64)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = max(1, int(math.ceil(4.0 * sigma)))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()
    padded = np.pad(values, radius, mode="symmetric")
    return np.convolve(padded, kernel, mode="valid")


def vertical_projection(mask: TextMask, sigma: float | None = None) -> ProjectionProfile:
    """Count text pixels per column and smooth the counts.

    ``sigma`` defaults to ``width / 200``.
    """
    values = mask.bits.sum(axis=0).astype(np.float64)
    if sigma is None:
        sigma = PeakParams().sigma_for(mask.width_px)
    return ProjectionProfile(values, gaussian_smooth(values, sigma), float(sigma))


def _plateau_maxima(x: np.ndarray) -> list[tuple[int, int]]:
    # Strict local maxima, flat tops allowed; a plateau touching either edge
    # is not a peak.
    out = []
    n = len(x)
    i = 1
    while i < n - 1:
        if x[i - 1] < x[i]:
            ahead = i + 1
            while ahead < n - 1 and x[ahead] == x[i]:
                ahead += 1
            if x[ahead] < x[i]:
                out.append((i, ahead - 1))
                i = ahead
                continue
        i += 1
    return out


def _prominence(x: np.ndarray, left: int, right: int) -> float:
    top = x[left]
    i = left
    left_min = top
    while i >= 0 and x[i] <= top:
        left_min = min(left_min, x[i])
        i -= 1
    j = right
    right_min = top
    while j < len(x) and x[j] <= top:
        right_min = min(right_min, x[j])
        j += 1
    return float(top - max(left_min, right_min))


def find_gap_peaks(
    smoothed: np.ndarray, distance: int = 1, prominence_fraction: float = 0.10
) -> list[int]:
    """Locate separator columns as maxima of the inverted profile.

    Returns split positions, i.e. boundaries between columns: a gap plateau
    covering columns ``l..r`` yields ``(l + r + 1) // 2``. Peaks below
    ``prominence_fraction * max(smoothed)`` are dropped, then the tallest
    peaks win within ``distance`` pixels of each other.
    """
    smoothed = np.asarray(smoothed, dtype=np.float64)
    if smoothed.size < 3:
        return []
    top = float(smoothed.max())
    if top <= 0:
        return []
    inverted = top - smoothed
    # Suppress float noise so that flat regions form genuine plateaus.
    inverted = np.round(inverted, 9)
    threshold = prominence_fraction * top

    candidates = []
    for left, right in _plateau_maxima(inverted):
        prom = _prominence(inverted, left, right)
        if prom >= threshold and prom > 0:
            candidates.append(((left + right + 1) // 2, inverted[left]))

    kept: list[int] = []
    for pos, _height in sorted(candidates, key=lambda c: (-c[1], c[0])):
        if all(abs(pos - k) >= distance for k in kept):
            kept.append(pos)
    return sorted(kept)
