import numpy as np
import pytest

from ghostsim import ExperimentConfig, with_overrides


@pytest.fixture
def small_config(tmp_path):
    """32x32 run that keeps every component shift on the grid."""
    cfg = ExperimentConfig()
    return with_overrides(
        cfg,
        nx=32, ny=32,
        n_components=8,
        max_angle=2.0e-3,
        hole_diameter=128e-6,
        hole_centers=((-72e-6, -56e-6), (72e-6, -56e-6), (8e-6, 72e-6)),
        shots=200,
        out_dir=str(tmp_path / "out"),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
