"""Streaming intensity-correlation estimator and image metrics.

The estimator forms G = <I_ref * I_2> - <I_ref><I_2> over shots, one selected
reference component against the full image-plane map, in a single pass with
compensated (Kahan) summation. Accumulators are mergeable, so shot streams
may be partitioned across workers and combined in any grouping; merged and
serial results agree to the compensation error.

Normalization by the reference variance sigma^2(I_ref) turns G into the
recovered image: for a chaotic reference the covariance identity kills every
component but the selected one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    EmptyImageError,
    GeometryError,
    InsufficientShotsError,
)
from .grid import fourier_shift


class _KahanSum:
    """Compensated running sum of arrays (or scalars as 0-d arrays)."""

    __slots__ = ("total", "comp")

    def __init__(self, shape=()):
        self.total = np.zeros(shape, dtype=np.float64)
        self.comp = np.zeros(shape, dtype=np.float64)

    def add(self, value) -> None:
        y = np.asarray(value, dtype=np.float64) - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t

    def merge(self, other: "_KahanSum") -> None:
        self.add(other.total)
        self.add(other.comp)

    @property
    def value(self) -> np.ndarray:
        return self.total + self.comp


@dataclass
class ShotRecord:
    """One shot: reference-arm component intensities plus the image map."""

    shot_index: int
    reference: np.ndarray
    intensity_map: np.ndarray

    def __post_init__(self):
        self.reference = np.asarray(self.reference, dtype=np.float64)
        self.intensity_map = np.asarray(self.intensity_map, dtype=np.float64)
        if self.reference.ndim != 1:
            raise GeometryError("invalid geometry: reference must be a 1-d sequence")
        if self.intensity_map.ndim != 2:
            raise GeometryError("invalid geometry: intensity map must be 2-d")
        if not (np.all(np.isfinite(self.reference)) and np.all(self.reference >= 0.0)):
            raise GeometryError("invalid geometry: reference intensities must be finite and nonnegative")
        if not (np.all(np.isfinite(self.intensity_map)) and np.all(self.intensity_map >= 0.0)):
            raise GeometryError("invalid geometry: intensity map must be finite and nonnegative")


class CorrelationResult(NamedTuple):
    """finalize() output; g_map already carries the unbiased normalization."""

    shot_count: int
    g_map: np.ndarray
    mean_map: np.ndarray
    sigma2_ref: float
    normalized: np.ndarray | None
    degenerate: bool


class CorrelationAccumulator:
    """Mergeable single-pass moment sums for the correlation estimator.

    Parameters
    ----------
    reference_index : int
        Which reference component j to correlate against.
    map_shape : tuple of int
        Shape of the per-shot intensity maps.
    """

    def __init__(self, reference_index: int, map_shape: tuple[int, int]):
        if reference_index < 0:
            raise GeometryError("invalid geometry: reference index must be nonnegative")
        self.reference_index = int(reference_index)
        self.map_shape = tuple(map_shape)
        self.shot_count = 0
        self._sum_ref = _KahanSum()
        self._sum_ref_sq = _KahanSum()
        self._sum_map = _KahanSum(self.map_shape)
        self._sum_cross = _KahanSum(self.map_shape)

    def accumulate(self, shot: ShotRecord) -> "CorrelationAccumulator":
        """Fold one shot into the sums. Returns self for chaining."""
        if shot.intensity_map.shape != self.map_shape:
            raise GeometryError("grid mismatch between shot and accumulator")
        if self.reference_index >= shot.reference.size:
            raise GeometryError("grid mismatch: reference index beyond component count")
        ref = float(shot.reference[self.reference_index])
        self._sum_ref.add(ref)
        self._sum_ref_sq.add(ref * ref)
        self._sum_map.add(shot.intensity_map)
        self._sum_cross.add(ref * shot.intensity_map)
        self.shot_count += 1
        return self

    def merge(self, other: "CorrelationAccumulator") -> "CorrelationAccumulator":
        """Fold another accumulator (disjoint shots) into this one."""
        if other.map_shape != self.map_shape or other.reference_index != self.reference_index:
            raise GeometryError("grid mismatch between accumulators")
        self._sum_ref.merge(other._sum_ref)
        self._sum_ref_sq.merge(other._sum_ref_sq)
        self._sum_map.merge(other._sum_map)
        self._sum_cross.merge(other._sum_cross)
        self.shot_count += other.shot_count
        return self

    def mean_map(self) -> np.ndarray:
        """Running mean of the intensity maps (defined from one shot on)."""
        if self.shot_count < 1:
            raise InsufficientShotsError("insufficient shots")
        return self._sum_map.value / self.shot_count

    def finalize(self) -> CorrelationResult:
        """Unbiased covariance map, mean map, reference variance, normalized map.

        Raises
        ------
        InsufficientShotsError
            With fewer than two accumulated shots.
        """
        m = self.shot_count
        if m < 2:
            raise InsufficientShotsError("insufficient shots")
        sum_ref = float(self._sum_ref.value)
        sum_ref_sq = float(self._sum_ref_sq.value)
        sum_map = self._sum_map.value
        sum_cross = self._sum_cross.value

        mean_map = sum_map / m
        g_map = (sum_cross - sum_ref * mean_map) / (m - 1)
        sigma2 = (sum_ref_sq - sum_ref * sum_ref / m) / (m - 1)
        scale = sum_ref_sq / m  # magnitude yardstick for the degeneracy test
        degenerate = sigma2 <= 1e-14 * max(scale, np.finfo(np.float64).tiny)
        normalized = None if degenerate else g_map / sigma2
        return CorrelationResult(m, g_map, mean_map, float(sigma2), normalized, degenerate)


class CovarianceCheck(NamedTuple):
    covariance: float
    sigma2: float
    ratio: float


def covariance_identity_check(shots, j: int, n: int) -> CovarianceCheck:
    """Sample covariance of two reference components, over at least 100 shots.

    For a chaotic source cov(I_j, I_n) equals sigma^2(I_n) when j = n and
    vanishes otherwise. ``shots`` may be a sequence of ShotRecord or a
    2-d array of reference intensities with one row per shot.

    Raises
    ------
    InsufficientShotsError
        With fewer than 100 shots.
    """
    if isinstance(shots, np.ndarray):
        refs = np.asarray(shots, dtype=np.float64)
    else:
        refs = np.array([s.reference for s in shots], dtype=np.float64)
    if refs.ndim != 2:
        raise GeometryError("invalid geometry: expected one reference row per shot")
    m = refs.shape[0]
    if m < 100:
        raise InsufficientShotsError("insufficient shots")
    a = refs[:, j]
    b = refs[:, n]
    cov = float(np.sum((a - a.mean()) * (b - b.mean())) / (m - 1))
    sigma2 = float(np.var(b, ddof=1))
    if sigma2 == 0.0:
        return CovarianceCheck(cov, sigma2, 0.0 if cov == 0.0 else np.inf)
    return CovarianceCheck(cov, sigma2, cov / sigma2)


@dataclass
class ImageMetrics:
    ncc: float
    contrast: float
    background_rms: float

    def to_key_value(self, prefix: str = "") -> str:
        p = prefix
        return (
            f"{p}ncc={self.ncc:.12g}\n"
            f"{p}contrast={self.contrast:.12g}\n"
            f"{p}background_rms={self.background_rms:.12g}\n"
        )


def image_metrics(
    recovered: np.ndarray,
    reference: np.ndarray,
    expected_shift: tuple[float, float] = (0.0, 0.0),
    pitch: float = 1.0,
) -> ImageMetrics:
    """Compare a recovered map against a reference mask at a known shift.

    The reference is translated by expected_shift (meters, Fourier shift
    with periodic wrap, matching how the pipeline places images), then:

    * ncc: Pearson correlation between the two maps over all pixels,
    * contrast: (mean in-feature - mean background) / (sum of the two),
      features being reference pixels above half its maximum,
    * background_rms: RMS of the recovered map over background pixels.

    Raises
    ------
    EmptyImageError
        If the recovered map is identically zero.
    GeometryError
        On shape mismatch or an all-zero reference.
    """
    recovered = np.asarray(recovered, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if recovered.shape != reference.shape:
        raise GeometryError("grid mismatch between recovered map and reference")
    if not np.any(recovered != 0.0):
        raise EmptyImageError("empty image")
    if not np.any(reference != 0.0):
        raise GeometryError("empty object")

    if expected_shift != (0.0, 0.0):
        reference = fourier_shift(reference, expected_shift, pitch)

    a = recovered - recovered.mean()
    b = reference - reference.mean()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    ncc = float(np.sum(a * b) / denom) if denom > 0.0 else 0.0

    feature = reference > 0.5 * reference.max()
    background = ~feature
    mean_in = float(recovered[feature].mean()) if np.any(feature) else 0.0
    mean_bg = float(recovered[background].mean()) if np.any(background) else 0.0
    denom_c = mean_in + mean_bg
    contrast = float((mean_in - mean_bg) / denom_c) if denom_c != 0.0 else 0.0
    bg_rms = float(np.sqrt(np.mean(recovered[background] ** 2))) if np.any(background) else 0.0
    return ImageMetrics(ncc, contrast, bg_rms)


def correlation_peak_shift(
    recovered: np.ndarray, reference: np.ndarray, pitch: float = 1.0
) -> tuple[float, float]:
    """Locate the translation of `reference` inside `recovered`.

    Cross-correlates via FFT (periodic), takes the argmax, and refines it
    with a 3-point parabolic fit per axis. Returns (dx, dy) in meters;
    positive dx means the recovered features sit at +x relative to the
    reference.
    """
    recovered = np.asarray(recovered, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if recovered.shape != reference.shape:
        raise GeometryError("grid mismatch between recovered map and reference")
    a = recovered - recovered.mean()
    b = reference - reference.mean()
    corr = np.fft.ifft2(np.fft.fft2(a) * np.conj(np.fft.fft2(b))).real
    ny, nx = corr.shape
    iy, ix = np.unravel_index(np.argmax(corr), corr.shape)

    def _refine(cm: float, c0: float, cp: float) -> float:
        denom = cm - 2.0 * c0 + cp
        if denom == 0.0:
            return 0.0
        return float(np.clip(0.5 * (cm - cp) / denom, -0.5, 0.5))

    fx = _refine(corr[iy, (ix - 1) % nx], corr[iy, ix], corr[iy, (ix + 1) % nx])
    fy = _refine(corr[(iy - 1) % ny, ix], corr[iy, ix], corr[(iy + 1) % ny, ix])
    # argmax indices are circular lags; map to signed shifts
    sx = ix if ix <= nx // 2 else ix - nx
    sy = iy if iy <= ny // 2 else iy - ny
    return ((sx + fx) * pitch, (sy + fy) * pitch)
