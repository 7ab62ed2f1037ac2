"""Low-gain three-wave mixing and the generated image plane.

Each seed plane wave mixes with the image-bearing pump on the crystal face
and produces one generated component. Transverse momentum is conserved
exactly (the generated transverse wavevector is the negative of the seed's);
the longitudinal mismatch is reported per component and can optionally
attenuate the coupling.

Generated components are carried to the image plane as an envelope plus an
analytic carrier: the envelope is propagated with the single-FFT Fresnel
transform, the carrier becomes a lateral shift (Fourier shift theorem), a
linear phase, and a constant phase. That decomposition is exact for the
paraxial propagator and avoids sampling fast carriers on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import EvanescentError, GeometryError, OffGridError
from .grid import ComplexField, GridSpec, fourier_shift
from .optics import ImagingGeometry, angles_to_transverse, fresnel_single_step, transverse_to_angles
from .source import ChaoticSeed, PlaneWaveComponent


@dataclass(frozen=True)
class CrystalConfig:
    """Nonlinear crystal parameters for the low-gain regime.

    thickness is the interaction length L in meters, gain the effective
    coupling g_eff (the dimensionless product gain * thickness is the small
    parameter of the regime). pm_mode selects the phase-matching weight:
    "unity" applies no angular attenuation, "sinc" applies
    sin(dkz L / 2) / (dkz L / 2) clipped to [0, 1]. A custom weight
    callable (theta, beta, delta_kz) -> float may be supplied instead and
    must equal 1 at normal incidence.
    """

    thickness: float
    gain: float
    pm_mode: str = "unity"
    exact_gain: bool = False
    pm_custom: Callable[[float, float, float], float] | None = None

    def __post_init__(self):
        if not (self.thickness > 0.0 and np.isfinite(self.thickness)):
            raise GeometryError("invalid geometry: crystal thickness must be positive")
        if not (self.gain >= 0.0 and np.isfinite(self.gain)):
            raise GeometryError("invalid geometry: gain must be nonnegative")
        if self.pm_mode not in ("unity", "sinc"):
            raise GeometryError("invalid geometry: pm_mode must be 'unity' or 'sinc'")
        if self.pm_custom is not None:
            w0 = float(self.pm_custom(0.0, 0.0, 0.0))
            if abs(w0 - 1.0) > 1e-9:
                raise GeometryError("invalid geometry: custom pm weight must be 1 on axis")

    def weight(self, theta: float, beta: float, delta_kz: float) -> float:
        """Phase-matching amplitude weight in [0, 1]."""
        if self.pm_custom is not None:
            return float(np.clip(self.pm_custom(theta, beta, delta_kz), 0.0, 1.0))
        if self.pm_mode == "unity":
            return 1.0
        # np.sinc(x) = sin(pi x)/(pi x), so feed it dkz L / (2 pi)
        val = np.sinc(delta_kz * self.thickness / (2.0 * np.pi))
        return float(np.clip(val, 0.0, 1.0))


class PhaseMatchResult(NamedTuple):
    theta: float
    beta: float
    delta_kz: float


def phase_match(component: PlaneWaveComponent, geometry: ImagingGeometry) -> PhaseMatchResult:
    """Solve transverse phase matching for one seed component.

    The generated transverse wavevector is exactly the negative of the
    seed's, its modulus is fixed by the generated wavelength, and the
    longitudinal wavevector points forward. Returns the generated tilt
    angles and the longitudinal mismatch
    delta_kz = k_pump - k_seed_z - k_generated_z (a diagnostic; it is not
    forced to zero).

    Raises
    ------
    EvanescentError
        If the transverse wavevector exceeds the generated (or seed)
        wavenumber, so no forward-propagating generated wave exists.
    """
    k2 = geometry.k_generated
    kt = np.hypot(component.kx, component.ky)
    if kt > min(k2, geometry.k_seed):
        raise EvanescentError("evanescent: unmatchable component")
    g_kx, g_ky = -component.kx, -component.ky
    k2z = np.sqrt(k2 * k2 - kt * kt)
    theta2, beta2 = transverse_to_angles(g_kx, g_ky, k2)
    delta_kz = geometry.k_pump - component.kz - k2z
    return PhaseMatchResult(float(theta2), float(beta2), float(delta_kz))


def _sinhc(x: np.ndarray) -> np.ndarray:
    """sinh(x)/x with the removable singularity filled in."""
    out = np.ones_like(x, dtype=np.float64)
    nz = x != 0.0
    out[nz] = np.sinh(x[nz]) / x[nz]
    return out


def mix_low_gain(
    seed_amp: complex,
    pump_amp: complex | np.ndarray,
    crystal: CrystalConfig,
    angles: tuple[float, float] = (0.0, 0.0),
    delta_kz: float = 0.0,
):
    """Generated amplitude after one pass through the crystal.

    Linear (default) regime:

        a_gen = i * gain * L * w * conj(a_seed) * a_pump

    with w the phase-matching weight for the generated angles. With
    ``exact_gain`` the pump amplitude enters through sinh instead,

        a_gen = i * gain * L * w * conj(a_seed) * a_pump
                * sinh(w |a_pump| L) / (w |a_pump| L)

    which reduces to the linear form to first order in the pump and is 0
    for a vanishing pump. The seed amplitude is conjugated: the generated
    wave is a phase-conjugate replica, which is what makes the intensity
    correlation image-forming.

    pump_amp may be an array (the pump cross-section); the operation is
    applied pointwise.
    """
    w = crystal.weight(angles[0], angles[1], delta_kz)
    lead = 1j * crystal.gain * crystal.thickness * w * np.conj(seed_amp)
    pump = np.asarray(pump_amp, dtype=np.complex128)
    if not crystal.exact_gain:
        out = lead * pump
    else:
        arg = w * np.abs(pump) * crystal.thickness
        out = lead * pump * _sinhc(arg)
    if np.isscalar(pump_amp) or np.ndim(pump_amp) == 0:
        return complex(out)
    return out


@dataclass
class GeneratedComponent:
    """One generated plane-wave component for one shot.

    amplitude_map is the generated cross-section on the crystal face (the
    mixed pump envelope, carrier not included). The carrier is carried
    symbolically: (kx, ky) of the generated wave plus the image-plane shift
    it produces. coupling is the per-component constant
    i * gain * L * weight, recorded for introspection.
    """

    amplitude_map: ComplexField
    theta: float
    beta: float
    kx: float
    ky: float
    shift_x: float
    shift_y: float
    weight: float
    delta_kz: float
    coupling: complex
    seed_amplitude: complex


def component_shift(geometry: ImagingGeometry, gen_kx: float, gen_ky: float) -> tuple[float, float]:
    """Image-plane displacement of a generated component.

    Equals image_plane_distance * k_t / k_generated, which reproduces
    (sin(beta), cos(beta) sin(theta)) times the plane distance exactly.
    """
    s = geometry.image_plane_distance
    k2 = geometry.k_generated
    return s * gen_kx / k2, s * gen_ky / k2


def generate_shot_field(
    seed: ChaoticSeed,
    pump: ComplexField,
    crystal: CrystalConfig,
    geometry: ImagingGeometry,
) -> list[GeneratedComponent]:
    """Mix every seed component with the pump cross-section.

    The pump must be the relayed field on the crystal face at the pump
    wavelength. Each returned component holds the generated envelope at the
    generated wavelength together with its carrier bookkeeping.
    """
    if abs(pump.wavelength - geometry.wavelength_pump) > 1e-9 * geometry.wavelength_pump:
        raise GeometryError("invalid geometry: pump field is not at the pump wavelength")
    k1 = geometry.k_seed
    out = []
    for comp in seed.components:
        knorm = np.sqrt(comp.kx**2 + comp.ky**2 + comp.kz**2)
        if abs(knorm - k1) > 1e-9 * k1:
            raise GeometryError("invalid geometry: seed component wavelength mismatch")
        pm = phase_match(comp, geometry)
        w = crystal.weight(pm.theta, pm.beta, pm.delta_kz)
        env = mix_low_gain(comp.amplitude, pump.amplitudes, crystal, (pm.theta, pm.beta), pm.delta_kz)
        gen_kx, gen_ky = angles_to_transverse(pm.theta, pm.beta, geometry.k_generated)
        sx, sy = component_shift(geometry, gen_kx, gen_ky)
        out.append(
            GeneratedComponent(
                amplitude_map=ComplexField(pump.grid, env, geometry.wavelength_generated),
                theta=pm.theta,
                beta=pm.beta,
                kx=gen_kx,
                ky=gen_ky,
                shift_x=sx,
                shift_y=sy,
                weight=w,
                delta_kz=pm.delta_kz,
                coupling=1j * crystal.gain * crystal.thickness * w,
                seed_amplitude=complex(comp.amplitude),
            )
        )
    return out


def _carried_image(
    envelope: ComplexField,
    geometry: ImagingGeometry,
    kx: float,
    ky: float,
    shift_x: float,
    shift_y: float,
) -> ComplexField:
    """Propagate one generated envelope to the image plane with its carrier.

    The envelope is propagated without the carrier; the carrier is then
    restored analytically as shift + linear phase + constant phase. The
    composition equals propagating envelope * exp(-i k_t . r) directly.
    """
    base = fresnel_single_step(envelope, geometry.image_plane_distance)
    g = base.grid
    if abs(shift_x) > g.extent_x / 2.0 or abs(shift_y) > g.extent_y / 2.0:
        raise OffGridError("image shifted off grid")
    shifted = fourier_shift(base.amplitudes, (shift_x, shift_y), g.pitch)
    x, y = g.meshgrid()
    s = geometry.image_plane_distance
    k2 = geometry.k_generated
    carrier = np.exp(-1j * (kx * x + ky * y) + 0.5j * (kx * kx + ky * ky) * s / k2)
    return ComplexField(g, shifted * carrier, envelope.wavelength)


@dataclass
class IntensityMap:
    """Intensity map on the image-plane grid."""

    grid: GridSpec
    values: np.ndarray
    mode: str


def image_plane_intensity(
    components: Sequence[GeneratedComponent],
    geometry: ImagingGeometry,
    mode: str = "coherent",
) -> IntensityMap:
    """Intensity of the generated light at the image plane.

    In coherent mode the component fields are summed before squaring (the
    physical single-shot map, cross terms included). In incoherent mode
    the squared moduli are summed, which equals the ensemble mean of the
    coherent map and serves as the fast path and the analytic oracle.
    """
    if mode not in ("coherent", "incoherent"):
        raise GeometryError("invalid geometry: mode must be 'coherent' or 'incoherent'")
    if not components:
        raise GeometryError("invalid geometry: no components to image")
    grid0 = components[0].amplitude_map.grid
    for c in components[1:]:
        if c.amplitude_map.grid != grid0:
            raise GeometryError("invalid geometry: components live on different grids")

    total_field = None
    total_intensity = None
    out_grid = None
    for c in components:
        img = _carried_image(c.amplitude_map, geometry, c.kx, c.ky, c.shift_x, c.shift_y)
        out_grid = img.grid
        if mode == "coherent":
            total_field = img.amplitudes if total_field is None else total_field + img.amplitudes
        else:
            term = np.abs(img.amplitudes) ** 2
            total_intensity = term if total_intensity is None else total_intensity + term
    if mode == "coherent":
        values = np.abs(total_field) ** 2
    else:
        values = total_intensity
    return IntensityMap(out_grid, values, mode)


def image_basis(
    pump: ComplexField,
    matched: Sequence,
    geometry: ImagingGeometry,
) -> tuple[GridSpec, np.ndarray]:
    """Per-component unit-amplitude image maps (the runner's hot path).

    Because every component shares the same envelope shape (the pump
    cross-section), the image of component n for any shot is
    gamma_n * basis_n with gamma_n = coupling_n * conj(a_n). This builds
    the basis once; the per-shot work then reduces to a weighted sum.

    ``matched`` supplies (kx, ky, shift_x, shift_y) per component (any
    objects with those attributes). Returns the image grid and an
    (N, ny, nx) complex array.
    """
    env = ComplexField(pump.grid, pump.amplitudes, geometry.wavelength_generated)
    base = fresnel_single_step(env, geometry.image_plane_distance)
    g = base.grid
    x, y = g.meshgrid()
    s = geometry.image_plane_distance
    k2 = geometry.k_generated
    maps = np.empty((len(matched), g.ny, g.nx), dtype=np.complex128)
    for i, m in enumerate(matched):
        if abs(m.shift_x) > g.extent_x / 2.0 or abs(m.shift_y) > g.extent_y / 2.0:
            raise OffGridError("image shifted off grid")
        shifted = fourier_shift(base.amplitudes, (m.shift_x, m.shift_y), g.pitch)
        carrier = np.exp(-1j * (m.kx * x + m.ky * y) + 0.5j * (m.kx**2 + m.ky**2) * s / k2)
        maps[i] = shifted * carrier
    return g, maps


@dataclass(frozen=True)
class MatchedDirection:
    """Shot-independent phase matching record for one seed direction."""

    theta: float
    beta: float
    kx: float
    ky: float
    shift_x: float
    shift_y: float
    weight: float
    delta_kz: float
    coupling: complex


def match_directions(
    directions: np.ndarray,
    geometry: ImagingGeometry,
    crystal: CrystalConfig,
) -> list[MatchedDirection]:
    """Phase-match a table of seed directions once per experiment."""
    k1 = geometry.k_seed
    out = []
    for theta1, beta1 in np.asarray(directions, dtype=np.float64):
        kx1, ky1 = angles_to_transverse(theta1, beta1, k1)
        kz1 = np.sqrt(k1 * k1 - kx1 * kx1 - ky1 * ky1)
        probe = PlaneWaveComponent(theta1, beta1, kx1, ky1, kz1, 1.0 + 0.0j)
        pm = phase_match(probe, geometry)
        w = crystal.weight(pm.theta, pm.beta, pm.delta_kz)
        gen_kx, gen_ky = angles_to_transverse(pm.theta, pm.beta, geometry.k_generated)
        sx, sy = component_shift(geometry, gen_kx, gen_ky)
        out.append(
            MatchedDirection(
                theta=pm.theta,
                beta=pm.beta,
                kx=gen_kx,
                ky=gen_ky,
                shift_x=sx,
                shift_y=sy,
                weight=w,
                delta_kz=pm.delta_kz,
                coupling=1j * crystal.gain * crystal.thickness * w,
            )
        )
    return out
