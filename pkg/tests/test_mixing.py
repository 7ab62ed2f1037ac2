"""Low-gain mixing, phase matching, and the generated image plane."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ghostsim import (
    ComplexField,
    CrystalConfig,
    EvanescentError,
    GeometryError,
    GridSpec,
    ImagingGeometry,
    OffGridError,
    PlaneWaveComponent,
    SourceConfig,
    component_shift,
    draw_shot_amplitudes,
    fix_component_directions,
    generate_shot_field,
    image_basis,
    image_plane_intensity,
    image_pump_2f2f,
    invert_exact,
    match_directions,
    mix_low_gain,
    phase_match,
)

from oracles import disc_object

GEO = ImagingGeometry(focal_length=0.20, lens_to_crystal=0.15,
                      wavelength_seed=1064e-9, wavelength_generated=1064e-9,
                      wavelength_pump=532e-9)
CRYSTAL = CrystalConfig(thickness=4e-3, gain=25.0)  # gain * L = 0.1


def pump_of_three_discs(n=32, pitch=16e-6):
    centers = ((-72e-6, -56e-6), (72e-6, -56e-6), (8e-6, 72e-6))
    mask = disc_object(n, pitch, centers, 128e-6)
    obj = ComplexField(GridSpec(n, n, pitch), mask.astype(complex),
                       GEO.wavelength_pump)
    return mask, image_pump_2f2f(obj, GEO)


def test_unit_mixing_value():
    crystal = CrystalConfig(thickness=1.0, gain=1.0)
    assert mix_low_gain(1.0, 1.0, crystal) == 1j


def test_generated_phase_conjugates_the_seed():
    """arg(a_gen) = pi/2 - arg(a_seed) + arg(a_pump)."""
    seed = 0.7 * np.exp(0.9j)
    pump = 1.3 * np.exp(0.4j)
    out = mix_low_gain(seed, pump, CRYSTAL)
    assert_allclose(abs(out), 0.1 * 0.7 * 1.3, rtol=1e-12)
    assert_allclose(np.angle(out), np.pi / 2 - 0.9 + 0.4, rtol=1e-12)


def test_mixing_is_linear_in_both_inputs():
    seed = 0.3 + 0.4j
    pump = 1.1 - 0.2j
    base = mix_low_gain(seed, pump, CRYSTAL)
    assert_allclose(mix_low_gain(seed, 2.0 * pump, CRYSTAL), 2.0 * base, rtol=1e-12)
    # conjugate-linear in the seed
    phase = np.exp(0.37j)
    assert_allclose(mix_low_gain(phase * seed, pump, CRYSTAL),
                    np.conj(phase) * base, rtol=1e-12)


def test_mixing_applies_pointwise_to_a_pump_cross_section():
    rng = np.random.default_rng(21)
    pump = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    out = mix_low_gain(0.8 - 0.1j, pump, CRYSTAL)
    for idx in np.ndindex(pump.shape):
        assert_allclose(out[idx], mix_low_gain(0.8 - 0.1j, complex(pump[idx]), CRYSTAL),
                        rtol=1e-12)


def test_exact_gain_reduces_to_linear_at_low_pump():
    lin = CrystalConfig(thickness=4e-3, gain=25.0, exact_gain=False)
    ex = CrystalConfig(thickness=4e-3, gain=25.0, exact_gain=True)
    assert mix_low_gain(1.0, 0.0, ex) == 0.0
    pump = 0.05
    a_lin = mix_low_gain(1.0, pump, lin)
    a_ex = mix_low_gain(1.0, pump, ex)
    # sinh(x)/x = 1 + x^2/6 + ..., here x = |pump| L = 2e-4
    assert abs(a_ex - a_lin) / abs(a_lin) < 1e-7
    assert abs(mix_low_gain(1.0, 3.0, ex)) > abs(mix_low_gain(1.0, 3.0, lin))


def test_phase_matching_weights():
    L = 4e-3
    unity = CrystalConfig(thickness=L, gain=1.0, pm_mode="unity")
    sinc = CrystalConfig(thickness=L, gain=1.0, pm_mode="sinc")
    assert unity.weight(0.01, -0.02, 3e4) == 1.0
    assert sinc.weight(0.0, 0.0, 0.0) == 1.0
    dkz = 2.0 / L  # dkz L / 2 = 1
    assert_allclose(sinc.weight(0.0, 0.0, dkz), np.sin(1.0) / 1.0, rtol=1e-12)
    dkz_neg = 8.0 / L  # first negative lobe, clipped
    assert sinc.weight(0.0, 0.0, dkz_neg) == 0.0


def test_custom_phase_matching_weight():
    half = CrystalConfig(thickness=4e-3, gain=25.0,
                         pm_custom=lambda t, b, d: 1.0 if d == 0.0 else 0.5)
    assert_allclose(mix_low_gain(1.0, 1.0, half, delta_kz=100.0), 0.05j, rtol=1e-12)
    with pytest.raises(GeometryError, match="pm weight"):
        CrystalConfig(thickness=4e-3, gain=25.0, pm_custom=lambda t, b, d: 0.9)


def test_phase_match_mirrors_the_transverse_wavevector():
    cfg = SourceConfig(n_components=12, max_angle=0.02, rng_seed=4)
    d = fix_component_directions(cfg)
    seed = draw_shot_amplitudes(d, cfg, 0, GEO.wavelength_seed)
    k2 = GEO.k_generated
    for c in seed.components:
        pm = phase_match(c, GEO)
        gen_kx = k2 * np.sin(pm.beta)
        gen_ky = k2 * np.cos(pm.beta) * np.sin(pm.theta)
        assert_allclose(gen_kx, -c.kx, rtol=1e-12, atol=1e-6)
        assert_allclose(gen_ky, -c.ky, rtol=1e-12, atol=1e-6)
        # longitudinal mismatch against direct kinematics
        kt2 = c.kx**2 + c.ky**2
        want = GEO.k_pump - c.kz - np.sqrt(k2**2 - kt2)
        assert_allclose(pm.delta_kz, want, rtol=1e-12, atol=1e-9)


def test_phase_match_rejects_evanescent_components():
    # long generated wavelength: k2 < seed transverse wavevector
    geo = ImagingGeometry(0.20, 0.15, 800e-9, 2000e-9, 532e-9)
    k2 = geo.k_generated
    comp = PlaneWaveComponent(theta=0.0, beta=0.5, kx=1.2 * k2, ky=0.0,
                              kz=np.sqrt(geo.k_seed**2 - (1.2 * k2) ** 2),
                              amplitude=1.0 + 0j)
    with pytest.raises(EvanescentError, match="evanescent"):
        phase_match(comp, geo)


def test_image_shift_follows_the_relay_scaling():
    """Lateral shift is (k2/k3) d sin(beta_gen), i.e. d k_gen / k3."""
    assert_allclose(GEO.image_plane_distance, 0.125, rtol=1e-12)
    k2, k3, d = GEO.k_generated, GEO.k_pump, GEO.image_distance
    for gen_kx, gen_ky in ((1e4, -3e3), (0.0, 2e4), (-7e3, 0.0)):
        sx, sy = component_shift(GEO, gen_kx, gen_ky)
        assert_allclose(sx, d * gen_kx / k3, rtol=1e-12)
        assert_allclose(sy, d * gen_ky / k3, rtol=1e-12)
        beta = np.arcsin(gen_kx / k2)
        assert_allclose(sx, (k2 / k3) * d * np.sin(beta), rtol=1e-12)


def test_matched_directions_carry_unit_pump_couplings():
    cfg = SourceConfig(n_components=8, max_angle=2e-3, rng_seed=6)
    d = fix_component_directions(cfg)
    seed = draw_shot_amplitudes(d, cfg, 0, GEO.wavelength_seed)
    matched = match_directions(d, GEO, CRYSTAL)
    assert len(matched) == 8
    for m, c in zip(matched, seed.components):
        assert_allclose(m.kx, -c.kx, rtol=1e-12, atol=1e-6)
        assert_allclose(m.ky, -c.ky, rtol=1e-12, atol=1e-6)
        assert m.weight == 1.0
        assert_allclose(m.coupling,
                        mix_low_gain(1.0, 1.0, CRYSTAL, (m.theta, m.beta), m.delta_kz),
                        rtol=1e-12)
        sx, sy = component_shift(GEO, m.kx, m.ky)
        assert_allclose((m.shift_x, m.shift_y), (sx, sy), rtol=1e-12)


def test_on_axis_component_images_the_inverted_object():
    """Unit magnification and point inversion, pixel exact."""
    mask, pump = pump_of_three_discs()
    matched = match_directions(np.array([[0.0, 0.0]]), GEO, CRYSTAL)
    grid, basis = image_basis(pump, matched, GEO)
    assert_allclose(grid.pitch, 16e-6, rtol=1e-12)
    mod = np.abs(basis[0])
    want = invert_exact(mask)
    assert np.linalg.norm(mod / mod.max() - want) / np.linalg.norm(want) < 1e-9


def test_shot_field_equals_coupling_weighted_basis():
    cfg = SourceConfig(n_components=6, max_angle=2e-3, rng_seed=11)
    d = fix_component_directions(cfg)
    _, pump = pump_of_three_discs()
    matched = match_directions(d, GEO, CRYSTAL)
    grid, basis = image_basis(pump, matched, GEO)

    seed = draw_shot_amplitudes(d, cfg, 3, GEO.wavelength_seed)
    comps = generate_shot_field(seed, pump, CRYSTAL, GEO)
    gammas = np.array([m.coupling for m in matched]) * np.conj(seed.amplitudes)

    coh = image_plane_intensity(comps, GEO, mode="coherent")
    want_coh = np.abs(np.tensordot(gammas, basis, axes=(0, 0))) ** 2
    assert_allclose(coh.values, want_coh, rtol=0, atol=1e-9 * want_coh.max())

    inc = image_plane_intensity(comps, GEO, mode="incoherent")
    want_inc = np.tensordot(np.abs(gammas) ** 2, np.abs(basis) ** 2, axes=(0, 0))
    assert_allclose(inc.values, want_inc, rtol=0, atol=1e-9 * want_inc.max())


def test_single_component_modes_coincide():
    cfg = SourceConfig(n_components=1, max_angle=2e-3, rng_seed=13)
    d = fix_component_directions(cfg)
    _, pump = pump_of_three_discs()
    seed = draw_shot_amplitudes(d, cfg, 0, GEO.wavelength_seed)
    comps = generate_shot_field(seed, pump, CRYSTAL, GEO)
    coh = image_plane_intensity(comps, GEO, mode="coherent").values
    inc = image_plane_intensity(comps, GEO, mode="incoherent").values
    assert_allclose(coh, inc, rtol=0, atol=1e-9 * coh.max())


def test_steep_component_shifts_off_grid():
    _, pump = pump_of_three_discs()
    steep = np.array([[6e-3, 0.0]])  # shift 750 um, half extent 256 um
    matched = match_directions(steep, GEO, CRYSTAL)
    with pytest.raises(OffGridError, match="off grid"):
        image_basis(pump, matched, GEO)
    cfg = SourceConfig(n_components=1, max_angle=6.5e-3, rng_seed=0)
    seed = draw_shot_amplitudes(steep, cfg, 0, GEO.wavelength_seed)
    comps = generate_shot_field(seed, pump, CRYSTAL, GEO)
    with pytest.raises(OffGridError, match="off grid"):
        image_plane_intensity(comps, GEO)


def test_image_plane_intensity_validation():
    cfg = SourceConfig(n_components=2, max_angle=2e-3, rng_seed=14)
    d = fix_component_directions(cfg)
    _, pump = pump_of_three_discs()
    seed = draw_shot_amplitudes(d, cfg, 0, GEO.wavelength_seed)
    comps = generate_shot_field(seed, pump, CRYSTAL, GEO)
    with pytest.raises(GeometryError):
        image_plane_intensity(comps, GEO, mode="bogus")
    with pytest.raises(GeometryError):
        image_plane_intensity([], GEO)


def test_generate_shot_field_rejects_wrong_pump_wavelength():
    cfg = SourceConfig(n_components=2, max_angle=2e-3, rng_seed=15)
    d = fix_component_directions(cfg)
    seed = draw_shot_amplitudes(d, cfg, 0, GEO.wavelength_seed)
    wrong = ComplexField(GridSpec(32, 32, 16e-6), np.ones((32, 32), complex),
                         1064e-9)
    with pytest.raises(GeometryError, match="pump"):
        generate_shot_field(seed, wrong, CRYSTAL, GEO)
