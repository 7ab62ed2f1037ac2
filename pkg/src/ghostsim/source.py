"""Chaotic seed model: frozen directions, per-shot Gaussian amplitudes.

The seed is a superposition of N plane waves. Directions are drawn once per
experiment, uniformly over the transverse direction-cosine disc of a given
half-angle, and stay fixed; each shot redraws the complex amplitudes from a
circular Gaussian so every component's intensity is exponential.

Randomness is counter based (Philox). Stream layout:

* key ``(rng_seed, 0)``  direction draws,
* key ``(rng_seed, 1)``, counter block ``shot_index``  amplitude draws,

so any shot can be generated independently of the others, in any order, on
any worker, with identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy import stats

from .errors import AliasingError, GeometryError, InsufficientStatisticsError, OversamplingError
from .grid import ComplexField, GridSpec
from .optics import transverse_to_angles

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SourceConfig:
    """Chaotic source parameters.

    n_components is the number N of plane waves, max_angle the half-angle
    of the direction cone in radians (paraxial, at most 0.1), and
    amplitude_scale sets sqrt(E[|a|^2]) per component.
    """

    n_components: int
    max_angle: float
    amplitude_scale: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_components < 1:
            raise GeometryError("invalid geometry: need at least one seed component")
        if not (0.0 < self.max_angle <= 0.1):
            raise GeometryError("invalid geometry: max_angle must lie in (0, 0.1] rad")
        if not (self.amplitude_scale > 0.0 and np.isfinite(self.amplitude_scale)):
            raise GeometryError("invalid geometry: amplitude_scale must be positive")


@dataclass(frozen=True)
class PlaneWaveComponent:
    """One seed plane wave: tilt angles, wavevector, complex amplitude."""

    theta: float
    beta: float
    kx: float
    ky: float
    kz: float
    amplitude: complex

    @property
    def intensity(self) -> float:
        return abs(self.amplitude) ** 2


@dataclass
class ChaoticSeed:
    """Seed realization for one shot."""

    components: list[PlaneWaveComponent]
    shot_index: int
    rng_stream_id: int

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.components], dtype=np.complex128)

    @property
    def transverse(self) -> np.ndarray:
        """(N, 2) array of (kx, ky)."""
        return np.array([(c.kx, c.ky) for c in self.components], dtype=np.float64)


def _direction_rng(cfg: SourceConfig) -> Generator:
    return Generator(Philox(key=[cfg.rng_seed & _MASK64, 0]))


def _amplitude_rng(cfg: SourceConfig, shot_index: int) -> Generator:
    if shot_index < 0:
        raise GeometryError("invalid geometry: shot_index must be nonnegative")
    return Generator(Philox(key=[cfg.rng_seed & _MASK64, 1], counter=[0, 0, shot_index, 0]))


def fix_component_directions(
    cfg: SourceConfig,
    grid: GridSpec | None = None,
    wavelength: float | None = None,
) -> np.ndarray:
    """Draw the N frozen component directions for an experiment.

    Directions are uniform over the transverse direction-cosine disc of
    radius sin(max_angle), so every component satisfies
    arcsin(|k_t| / k) <= max_angle exactly (a wavelength-free statement).
    Returns an (N, 2) array of (theta, beta) pairs, all pairwise distinct.

    When a grid and wavelength are supplied, the component count is checked
    against the number of grid-resolvable transverse modes inside the cone.

    Raises
    ------
    OversamplingError
        If N exceeds the distinguishable mode count of the supplied grid.
    """
    if grid is not None:
        if wavelength is None:
            raise GeometryError("invalid geometry: mode check needs the seed wavelength")
        k = 2.0 * np.pi / wavelength
        dqx = 2.0 * np.pi / (grid.nx * grid.pitch)
        dqy = 2.0 * np.pi / (grid.ny * grid.pitch)
        n_modes = np.pi * (k * np.sin(cfg.max_angle)) ** 2 / (dqx * dqy)
        if cfg.n_components > n_modes:
            raise OversamplingError("mode oversampling")

    rng = _direction_rng(cfg)
    rows: list[tuple[float, float]] = []
    # Rejection on exact duplicates; with float64 draws this never loops
    # in practice but keeps the pairwise-distinct contract unconditional.
    while len(rows) < cfg.n_components:
        u, phi = rng.random(2)
        sin_r = np.sin(cfg.max_angle) * np.sqrt(u)
        cx = sin_r * np.cos(2.0 * np.pi * phi)
        cy = sin_r * np.sin(2.0 * np.pi * phi)
        theta, beta = transverse_to_angles(cx, cy, 1.0)
        if (theta, beta) not in rows:
            rows.append((float(theta), float(beta)))
    return np.array(rows, dtype=np.float64)


def draw_shot_amplitudes(
    directions: np.ndarray, cfg: SourceConfig, shot_index: int, wavelength: float
) -> ChaoticSeed:
    """Realize one shot of the chaotic seed.

    Amplitudes are circular complex Gaussians,
    a = (g1 + i g2) * amplitude_scale / sqrt(2), drawn from the Philox
    substream addressed by (rng_seed, shot_index): deterministic, and
    independent across shots and components.
    """
    directions = np.asarray(directions, dtype=np.float64)
    if directions.ndim != 2 or directions.shape[1] != 2:
        raise GeometryError("invalid geometry: directions must be an (N, 2) array")
    n = directions.shape[0]
    k = 2.0 * np.pi / wavelength
    rng = _amplitude_rng(cfg, shot_index)
    g = rng.standard_normal((n, 2))
    amps = (g[:, 0] + 1j * g[:, 1]) * (cfg.amplitude_scale / np.sqrt(2.0))

    comps = []
    for i in range(n):
        theta, beta = directions[i]
        kx = k * np.sin(beta)
        ky = k * np.cos(beta) * np.sin(theta)
        kz = np.sqrt(k * k - kx * kx - ky * ky)
        comps.append(PlaneWaveComponent(theta, beta, kx, ky, kz, complex(amps[i])))
    return ChaoticSeed(comps, shot_index, shot_index)


def amplitude_matrix(
    directions: np.ndarray, cfg: SourceConfig, n_shots: int, first_shot: int = 0
) -> np.ndarray:
    """Complex amplitudes for a block of shots, shape (n_shots, N).

    Row m equals draw_shot_amplitudes(..., first_shot + m).amplitudes; this
    is the bulk path used by the runner and the statistics checks.
    """
    n = np.asarray(directions).shape[0]
    out = np.empty((n_shots, n), dtype=np.complex128)
    scale = cfg.amplitude_scale / np.sqrt(2.0)
    for m in range(n_shots):
        g = _amplitude_rng(cfg, first_shot + m).standard_normal((n, 2))
        out[m] = (g[:, 0] + 1j * g[:, 1]) * scale
    return out


def seed_field_on_grid(seed: ChaoticSeed, grid: GridSpec) -> ComplexField:
    """Evaluate the seed superposition sum_n a_n exp(-i k_n . r) on a grid.

    Raises
    ------
    AliasingError
        If any component's transverse frequency exceeds the grid Nyquist.
    """
    trans = seed.transverse
    if np.max(np.abs(trans)) > grid.nyquist:
        raise AliasingError("aliasing: maximum transverse frequency exceeds grid Nyquist")
    x, y = grid.meshgrid()
    amps = seed.amplitudes
    total = np.zeros(grid.shape, dtype=np.complex128)
    for a, (kx, ky) in zip(amps, trans):
        total += a * np.exp(-1j * (kx * x + ky * y))
    knorm = np.sqrt(np.sum(np.array([seed.components[0].kx,
                                     seed.components[0].ky,
                                     seed.components[0].kz]) ** 2))
    return ComplexField(grid, total, 2.0 * np.pi / knorm)


def field_value_series(
    directions: np.ndarray,
    cfg: SourceConfig,
    n_shots: int,
    point_xy: tuple[float, float],
    wavelength: float,
) -> np.ndarray:
    """Seed field value at one point across shots (temporal record)."""
    k = 2.0 * np.pi / wavelength
    directions = np.asarray(directions, dtype=np.float64)
    kx = k * np.sin(directions[:, 1])
    ky = k * np.cos(directions[:, 1]) * np.sin(directions[:, 0])
    phase = np.exp(-1j * (kx * point_xy[0] + ky * point_xy[1]))
    amps = amplitude_matrix(directions, cfg, n_shots)
    return amps @ phase


def reference_intensities(seed: ChaoticSeed) -> np.ndarray:
    """Per-component intensities |a_n|^2 (the reference-arm record)."""
    return np.abs(seed.amplitudes) ** 2


@dataclass
class ThermalReport:
    """Summary statistics of an intensity sample against the exponential law."""

    n_samples: int
    mean: float
    variance: float
    ks_distance: float
    bin_centers: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    expected_counts: np.ndarray = field(repr=False)

    def to_key_value(self) -> str:
        lines = [
            f"n_samples={self.n_samples}",
            f"mean={self.mean:.12g}",
            f"variance={self.variance:.12g}",
            f"ks_distance={self.ks_distance:.12g}",
            f"variance_over_mean_sq={self.variance / self.mean**2:.12g}",
        ]
        return "\n".join(lines) + "\n"

    def hist_rows(self):
        for c, n, e in zip(self.bin_centers, self.counts, self.expected_counts):
            yield float(c), int(n), float(e)


def thermal_statistics_report(samples: np.ndarray, n_bins: int | None = None) -> ThermalReport:
    """Compare an intensity sample with the exponential (thermal) law.

    The Kolmogorov-Smirnov distance is computed against Exp(sample mean).
    For thermal light the variance equals the squared mean; both moments
    are reported so the caller can check that too.

    Raises
    ------
    InsufficientStatisticsError
        For fewer than 100 samples.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < 100:
        raise InsufficientStatisticsError("insufficient statistics")
    if not np.all(np.isfinite(samples)) or np.any(samples < 0.0):
        raise GeometryError("invalid geometry: intensities must be finite and nonnegative")

    mean = float(np.mean(samples))
    variance = float(np.var(samples, ddof=1))
    if mean <= 0.0:
        raise InsufficientStatisticsError("insufficient statistics")
    ks = float(stats.kstest(samples, "expon", args=(0.0, mean)).statistic)

    if n_bins is None:
        n_bins = int(np.clip(samples.size // 128, 16, 64))
    counts, edges = np.histogram(samples, bins=n_bins, range=(0.0, float(np.max(samples))))
    centers = 0.5 * (edges[:-1] + edges[1:])
    cdf = 1.0 - np.exp(-edges / mean)
    expected = samples.size * np.diff(cdf)
    return ThermalReport(samples.size, mean, variance, ks, centers, counts, expected)
