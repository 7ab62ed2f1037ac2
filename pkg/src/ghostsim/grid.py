"""Sampling grids and complex scalar fields.

Conventions used throughout the package:

* arrays are indexed ``[iy, ix]`` with shape ``(ny, nx)``,
* pixels are square with pitch in meters,
* the grid is centered: index ``(ny // 2, nx // 2)`` sits at ``x = y = 0``,
* SI units everywhere (meters, radians), fields are complex128.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True)
class GridSpec:
    """Uniform square-pixel sampling grid.

    Parameters
    ----------
    nx, ny : int
        Sample counts along x (columns) and y (rows).
    pitch : float
        Meters per sample, identical along both axes.
    """

    nx: int
    ny: int
    pitch: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise GeometryError("invalid geometry: grid needs at least 2 samples per axis")
        if self.nx % 2 or self.ny % 2:
            # centered transforms pin x=0 to index n//2, which needs even n
            raise GeometryError("invalid geometry: sample counts must be even")
        if not (self.pitch > 0.0 and np.isfinite(self.pitch)):
            raise GeometryError("invalid geometry: pitch must be positive and finite")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def extent_x(self) -> float:
        """Full width nx * pitch in meters."""
        return self.nx * self.pitch

    @property
    def extent_y(self) -> float:
        return self.ny * self.pitch

    def x_coords(self) -> np.ndarray:
        """Centered x coordinates of pixel centers, shape (nx,)."""
        return (np.arange(self.nx) - self.nx // 2) * self.pitch

    def y_coords(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.pitch

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (X, Y) coordinate arrays, each shaped (ny, nx)."""
        return np.meshgrid(self.x_coords(), self.y_coords())

    def freq_meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular spatial frequencies (QX, QY) in rad/m, FFT (wrapped) order."""
        qx = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.pitch)
        qy = 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.pitch)
        return np.meshgrid(qx, qy)

    @property
    def nyquist(self) -> float:
        """Largest representable angular spatial frequency, rad/m."""
        return np.pi / self.pitch


@dataclass
class ComplexField:
    """Monochromatic scalar field sampled on a :class:`GridSpec`.

    Attributes
    ----------
    grid : GridSpec
    amplitudes : ndarray
        Complex samples, shape ``grid.shape``.
    wavelength : float
        Vacuum wavelength in meters.
    """

    grid: GridSpec
    amplitudes: np.ndarray = field(repr=False)
    wavelength: float

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != self.grid.shape:
            raise GeometryError(
                "invalid geometry: amplitude shape "
                f"{self.amplitudes.shape} does not match grid {self.grid.shape}"
            )
        if not (self.wavelength > 0.0 and np.isfinite(self.wavelength)):
            raise GeometryError("invalid geometry: wavelength must be positive and finite")

    @property
    def k(self) -> float:
        """Vacuum wavenumber 2*pi/wavelength."""
        return 2.0 * np.pi / self.wavelength

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.amplitudes.copy(), self.wavelength)


def intensity(fld: ComplexField) -> np.ndarray:
    """|amplitude|^2 map of a field, float64, shape (ny, nx)."""
    return np.abs(fld.amplitudes) ** 2


def energy(fld: ComplexField) -> float:
    """Discrete field energy: sum(|a|^2) * pitch^2."""
    return float(np.sum(np.abs(fld.amplitudes) ** 2) * fld.grid.pitch**2)


def invert_exact(arr: np.ndarray) -> np.ndarray:
    """Point reflection about the grid center pixel.

    Maps index w to (-w) mod n on both axes, which is the exact inversion
    implemented by a forward-forward DFT pair on an even grid. Works for
    real or complex 2-d arrays.
    """
    return np.roll(np.roll(arr[::-1, ::-1], 1, axis=0), 1, axis=1)


def fourier_shift(arr: np.ndarray, shift_xy: tuple[float, float], pitch: float) -> np.ndarray:
    """Translate a sampled map by (dx, dy) meters via the Fourier shift theorem.

    Positive dx moves features toward +x. The shift is circular (periodic
    boundary), exact for integer-pixel shifts and band-limited otherwise.
    """
    dx, dy = shift_xy
    ny, nx = arr.shape
    qx = 2.0 * np.pi * np.fft.fftfreq(nx, d=pitch)
    qy = 2.0 * np.pi * np.fft.fftfreq(ny, d=pitch)
    ramp = np.exp(-1j * (qx[None, :] * dx + qy[:, None] * dy))
    out = np.fft.ifft2(np.fft.fft2(arr) * ramp)
    if np.isrealobj(arr):
        return out.real
    return out
