"""Scalar wave optics: geometry, free propagation, and pump imaging.

The propagation model is paraxial throughout. Two discrete propagators are
provided:

``propagate_free``
    Angular-spectrum propagation on a fixed grid. The transfer function is
    the paraxial quadratic phase ``exp(+i q^2 z / (2k))``, matching the
    convention in which plane waves are written ``exp(-i k . r)``; with that
    pairing a converging quadratic phase refocuses at positive distances.

``fresnel_single_step``
    Single-FFT Fresnel propagation onto the conjugate (scaled) grid with
    output pitch ``lambda |z| / (n pitch)``. This is the far-zone tool; it
    changes the grid and is exactly unitary, and composing it with the lens
    relay below cancels the imaging chirps sample by sample.

``image_pump_2f2f``
    The lens relay that carries the object field to the crystal face: an
    inner quadratic phase, a centered DFT, and an outer quadratic phase.
    The object sits two focal lengths before the lens, the crystal a
    distance ``lens_to_crystal`` behind it, and the relayed image would
    come to focus a further ``image_distance`` downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasingError, GeometryError
from .grid import ComplexField, GridSpec


@dataclass(frozen=True)
class ImagingGeometry:
    """Distances and wavenumbers of the imaging arrangement.

    Parameters
    ----------
    focal_length : float
        Focal length of the relay lens (meters).
    lens_to_crystal : float
        Distance from the lens to the crystal face (meters). Must be less
        than twice the focal length so the relayed image lies beyond the
        crystal.
    wavelength_seed, wavelength_generated, wavelength_pump : float
        Vacuum wavelengths of the seed, the generated wave, and the pump.

    Notes
    -----
    ``image_distance`` is the remaining distance from the crystal to the
    relayed image of the object, ``2 f - lens_to_crystal``. The generated
    wave refocuses closer to the crystal, at
    ``image_plane_distance = (k_generated / k_pump) * image_distance``;
    at that plane the generated image has unit magnification regardless of
    the wavelength ratio.
    """

    focal_length: float
    lens_to_crystal: float
    wavelength_seed: float
    wavelength_generated: float
    wavelength_pump: float

    def __post_init__(self):
        if not (self.focal_length > 0.0 and np.isfinite(self.focal_length)):
            raise GeometryError("invalid geometry: focal length must be positive")
        if not (self.lens_to_crystal > 0.0 and np.isfinite(self.lens_to_crystal)):
            raise GeometryError("invalid geometry: lens-to-crystal distance must be positive")
        for lam in (self.wavelength_seed, self.wavelength_generated, self.wavelength_pump):
            if not (lam > 0.0 and np.isfinite(lam)):
                raise GeometryError("invalid geometry: wavelengths must be positive")
        if self.image_distance <= 0.0:
            raise GeometryError("invalid geometry: image plane does not lie beyond the crystal")

    @property
    def image_distance(self) -> float:
        """Crystal face to the relayed pump image, 2f - lens_to_crystal."""
        return 2.0 * self.focal_length - self.lens_to_crystal

    @property
    def k_seed(self) -> float:
        return 2.0 * np.pi / self.wavelength_seed

    @property
    def k_generated(self) -> float:
        return 2.0 * np.pi / self.wavelength_generated

    @property
    def k_pump(self) -> float:
        return 2.0 * np.pi / self.wavelength_pump

    @property
    def image_plane_distance(self) -> float:
        """Where the generated wave comes to focus, (k2/k3) * image_distance."""
        return (self.k_generated / self.k_pump) * self.image_distance


def angles_to_transverse(theta: float, beta: float, k: float):
    """Transverse wavevector (kx, ky) of a ray tilted by (theta, beta).

    beta is the in-plane angle (rotation in the x-z plane) and theta the
    elevation out of it: kx = k sin(beta), ky = k cos(beta) sin(theta).
    Both relations are exact, not small-angle.
    """
    return k * np.sin(beta), k * np.cos(beta) * np.sin(theta)


def transverse_to_angles(kx: float, ky: float, k: float):
    """Inverse of :func:`angles_to_transverse`; requires |kx| <= k."""
    beta = np.arcsin(kx / k)
    theta = np.arcsin(ky / (k * np.cos(beta)))
    return theta, beta


def _centered_idft2(arr: np.ndarray) -> np.ndarray:
    """Unnormalized inverse DFT with both indices centered on the grid."""
    ny, nx = arr.shape
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(arr))) * (nx * ny)


def _centered_dft2(arr: np.ndarray) -> np.ndarray:
    """Forward counterpart of :func:`_centered_idft2` (no normalization)."""
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(arr)))


def propagate_free(fld: ComplexField, distance: float) -> ComplexField:
    """Propagate a field through free space on its own grid.

    Angular-spectrum method with the paraxial transfer function
    ``exp(+i q^2 z / (2k))``. Energy is conserved exactly and distances
    compose: two hops equal one combined hop. Negative distance
    back-propagates.

    Raises
    ------
    AliasingError
        If the transfer-function chirp is not resolved on the grid, which
        happens for |distance| > min(nx, ny) * pitch^2 / wavelength.
    """
    if distance == 0.0:
        return fld.copy()
    g = fld.grid
    zmax = min(g.nx, g.ny) * g.pitch**2 / fld.wavelength
    if abs(distance) > zmax:
        raise AliasingError("aliasing: maximum transverse frequency exceeds grid Nyquist")
    qx, qy = g.freq_meshgrid()
    kernel = np.exp(1j * (qx**2 + qy**2) * distance / (2.0 * fld.k))
    out = np.fft.ifft2(np.fft.fft2(fld.amplitudes) * kernel)
    return ComplexField(g, out, fld.wavelength)


def fresnel_single_step(fld: ComplexField, distance: float) -> ComplexField:
    """Fresnel-propagate onto the scaled conjugate grid (one FFT).

    The output grid pitch is ``wavelength * |distance| / (n * pitch)``; the
    transform is exactly unitary and ``fresnel_single_step(..., -z)`` on the
    result recovers the input bit-for-bit up to FFT rounding.

    The sampled entrance chirp ``exp(-i k r^2 / 2z)`` is only resolved for
    |distance| above ``n pitch^2 / wavelength``. Below that the factors
    alias; composing with a source whose exit chirp cancels them (as the
    pump relay does) remains exact because cancellation happens pointwise.

    Requires a square grid (nx == ny), otherwise the output pixels would
    not be square.
    """
    g = fld.grid
    if g.nx != g.ny:
        raise GeometryError("invalid geometry: single-step Fresnel requires a square grid")
    if distance == 0.0 or not np.isfinite(distance):
        raise GeometryError("invalid geometry: propagation distance must be finite and nonzero")
    n = g.nx
    k = fld.k
    zabs = abs(distance)
    out_pitch = fld.wavelength * zabs / (n * g.pitch)
    out_grid = GridSpec(n, n, out_pitch)

    xin, yin = g.meshgrid()
    xout, yout = out_grid.meshgrid()
    rin2 = xin**2 + yin**2
    rout2 = xout**2 + yout**2

    if distance > 0.0:
        core = _centered_idft2(fld.amplitudes * np.exp(-1j * k * rin2 / (2.0 * distance)))
        pref = 1j * k / (2.0 * np.pi * distance) * g.pitch**2
        out = pref * np.exp(-1j * k * rout2 / (2.0 * distance)) * core
    else:
        core = _centered_dft2(fld.amplitudes * np.exp(1j * k * rin2 / (2.0 * zabs)))
        pref = -1j * k / (2.0 * np.pi * zabs) * g.pitch**2
        out = pref * np.exp(1j * k * rout2 / (2.0 * zabs)) * core
    return ComplexField(out_grid, out, fld.wavelength)


def image_pump_2f2f(obj: ComplexField, geometry: ImagingGeometry) -> ComplexField:
    """Relay the object field through the 2f-2f lens onto the crystal face.

    Implements the converging relay field

    ``U(r_F) = k3/(2 pi i d) * exp(i k3 r_F^2 / 2d)
       * sum_r U_O(r) exp(i k3 (d_F - f) r^2 / (2 d f)) exp(i k3 r_F . r / d)``

    with ``d = image_distance`` and the sum realized as a centered DFT, so
    the crystal-plane pitch is ``2 pi d / (k3 * nx * pitch)``. The relayed
    image is inverted, as a 2f-2f system demands.

    Parameters
    ----------
    obj : ComplexField
        Object-plane field at the pump wavelength.
    geometry : ImagingGeometry

    Returns
    -------
    ComplexField
        Field on the crystal face, same sample count, scaled pitch.
    """
    g = obj.grid
    if g.nx != g.ny:
        raise GeometryError("invalid geometry: pump relay requires a square grid")
    k3 = geometry.k_pump
    if abs(obj.wavelength - geometry.wavelength_pump) > 1e-9 * geometry.wavelength_pump:
        raise GeometryError("invalid geometry: object field is not at the pump wavelength")
    d = geometry.image_distance
    if d <= 0.0:
        raise GeometryError("invalid geometry")

    f = geometry.focal_length
    d_f = geometry.lens_to_crystal
    xo, yo = g.meshgrid()
    inner = np.exp(1j * k3 * (d_f - f) / (2.0 * d * f) * (xo**2 + yo**2))
    core = _centered_idft2(obj.amplitudes * inner)

    out_pitch = 2.0 * np.pi * d / (k3 * g.nx * g.pitch)
    out_grid = GridSpec(g.nx, g.ny, out_pitch)
    xf, yf = out_grid.meshgrid()
    outer = np.exp(1j * k3 / (2.0 * d) * (xf**2 + yf**2))
    pref = k3 / (2.0 * np.pi * 1j * d) * g.pitch**2
    return ComplexField(out_grid, pref * outer * core, geometry.wavelength_pump)
