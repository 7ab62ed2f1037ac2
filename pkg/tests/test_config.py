"""Config defaults, parsing, and the canonical echo."""

import pytest

from ghostsim import ConfigError, ExperimentConfig, load_config, parse_config_text, with_overrides


def test_defaults_are_consistent():
    cfg = ExperimentConfig()
    assert cfg.nx == cfg.ny == 64
    assert cfg.pitch == 16e-6
    assert cfg.wavelength_pump == 532e-9
    assert cfg.shots == 2000
    assert cfg.n_components == 32
    # derived builders agree with the scalars
    assert cfg.grid().nx == 64
    assert cfg.geometry().image_distance == pytest.approx(0.25)
    assert cfg.crystal().gain * cfg.crystal().thickness == pytest.approx(0.1)


def test_wavelengths_must_conserve_frequency():
    with pytest.raises(ConfigError, match="frequency conservation"):
        ExperimentConfig(wavelength_pump=600e-9)
    # nondegenerate combination that satisfies 1/l3 = 1/l1 + 1/l2
    cfg = ExperimentConfig(wavelength_seed=800e-9, wavelength_generated=800e-9,
                           wavelength_pump=400e-9)
    assert cfg.wavelength_pump == 400e-9


def test_echo_round_trips_through_the_parser():
    cfg = with_overrides(ExperimentConfig(), shots=137, rng_seed=99,
                         max_angle=3.7e-3, mode="incoherent")
    text = "\n".join(f"{k}={v}" for k, v in cfg.to_key_value().items())
    back = parse_config_text(text)
    assert back == cfg


def test_config_file_loading(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment line\n"
        "source.N=8\n"
        "run.shots=50\n"
        "object.hole_centers=-0.0001,0.0;0.0001,0.0\n"
    )
    cfg = load_config(path)
    assert cfg.n_components == 8
    assert cfg.shots == 50
    assert cfg.hole_centers == ((-1e-4, 0.0), (1e-4, 0.0))


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config_text("source.M=3\n")


def test_malformed_values_are_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("run.shots=many\n")
    with pytest.raises(ConfigError):
        parse_config_text("object.hole_centers=1,2;3\n")


def test_run_parameter_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(shots=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(mode="both")
    with pytest.raises(ConfigError):
        ExperimentConfig(reference_component=32)
    with pytest.raises(ConfigError):
        ExperimentConfig(hole_centers=())


def test_overrides_build_a_new_config():
    cfg = ExperimentConfig()
    out = with_overrides(cfg, shots=5, out_dir="elsewhere")
    assert out.shots == 5
    assert out.out_dir == "elsewhere"
    assert cfg.shots == 2000
    with pytest.raises(ConfigError):
        with_overrides(cfg, bogus=1)
