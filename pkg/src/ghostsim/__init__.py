"""Seeded frequency-conversion imaging simulator.

A chaotic seed (a sum of plane waves with random complex amplitudes) mixes
with a pump that carries an object image onto a nonlinear crystal; every
seed component generates a displaced copy of the image, so the single-shot
output is scrambled. Correlating the output intensity with one seed
component's intensity over many shots recovers the image at that
component's displacement.
"""

from .config import ExperimentConfig, load_config, parse_config_text, with_overrides
from .correlation import (
    CorrelationAccumulator,
    CorrelationResult,
    ImageMetrics,
    ShotRecord,
    correlation_peak_shift,
    covariance_identity_check,
    image_metrics,
)
from .errors import (
    AliasingError,
    ConfigError,
    EmptyImageError,
    EmptyObjectError,
    EvanescentError,
    GeometryError,
    GhostsimError,
    InsufficientShotsError,
    InsufficientStatisticsError,
    OffGridError,
    OversamplingError,
    StageError,
)
from .grid import ComplexField, GridSpec, energy, fourier_shift, intensity, invert_exact
from .mixing import (
    CrystalConfig,
    GeneratedComponent,
    IntensityMap,
    MatchedDirection,
    component_shift,
    generate_shot_field,
    image_basis,
    image_plane_intensity,
    match_directions,
    mix_low_gain,
    phase_match,
)
from .optics import ImagingGeometry, fresnel_single_step, image_pump_2f2f, propagate_free
from .runner import (
    RunManifest,
    SimulationSetup,
    ground_truth,
    incoherent_expected_map,
    make_three_hole_mask,
    plane_wave_reference_map,
    prepare,
    run_experiment,
    simulate,
    sweep,
)
from .source import (
    ChaoticSeed,
    PlaneWaveComponent,
    SourceConfig,
    ThermalReport,
    amplitude_matrix,
    draw_shot_amplitudes,
    field_value_series,
    fix_component_directions,
    reference_intensities,
    seed_field_on_grid,
    thermal_statistics_report,
)

__version__ = "0.1.0"
