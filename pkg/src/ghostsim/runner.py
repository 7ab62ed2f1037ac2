"""Experiment runner: staged pipeline, artifact emission, sweeps.

A run is a fixed stage sequence (object, pump-relay, source, phase-match,
imaging, correlation, statistics, metrics, artifacts); any failure is
re-raised as a StageError naming the stage, which the CLI turns into a
nonzero exit with a diagnostic.

Shots are processed in fixed blocks of 256 and the per-block partial
accumulators are merged in block order, so the numerical output does not
depend on how many workers processed the blocks. Worker count comes from
the GHOSTSIM_WORKERS environment variable (default 1).
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import figures
from .config import ExperimentConfig
from .correlation import (
    CorrelationAccumulator,
    CorrelationResult,
    ShotRecord,
    correlation_peak_shift,
    image_metrics,
)
from .errors import (
    AliasingError,
    ConfigError,
    EmptyObjectError,
    GeometryError,
    GhostsimError,
    InsufficientShotsError,
    InsufficientStatisticsError,
    StageError,
)
from .fileio import (
    read_pgm,
    sha256_of,
    write_complex_field,
    write_csv,
    write_key_value,
    write_pgm,
    write_real_map,
)
from .grid import ComplexField, GridSpec, invert_exact
from .mixing import MatchedDirection, image_basis, match_directions
from .optics import image_pump_2f2f
from .source import (
    draw_shot_amplitudes,
    amplitude_matrix,
    fix_component_directions,
    seed_field_on_grid,
    thermal_statistics_report,
)

_BLOCK = 256


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except GhostsimError as exc:
        raise StageError(name, exc) from exc


def make_three_hole_mask(grid: GridSpec, hole_diameter: float, centers, path=None) -> np.ndarray:
    """Binary object mask: union of discs, 1 inside, 0 outside.

    A pixel belongs to a disc iff its center lies strictly inside. Centers
    on the half-pixel lattice therefore give even-width discs; the default
    256 um holes on 16 um pitch come out exactly 16 pixels across.
    """
    if not np.isfinite(hole_diameter) or hole_diameter < 0.0:
        raise GeometryError("invalid geometry: hole diameter must be a nonnegative length")
    r = hole_diameter / 2.0
    x, y = grid.meshgrid()
    mask = np.zeros(grid.shape, dtype=bool)
    for cx, cy in centers:
        if abs(cx) + r > grid.extent_x / 2.0 or abs(cy) + r > grid.extent_y / 2.0:
            raise GeometryError("invalid geometry: hole does not fit on grid")
        mask |= (x - cx) ** 2 + (y - cy) ** 2 < r * r
    if not mask.any():
        raise EmptyObjectError("empty object")
    out = mask.astype(np.float64)
    if path is not None:
        write_pgm(path, out, maxval=255)
    return out


@dataclass
class SimulationSetup:
    """Everything shot-independent, computed once per experiment."""

    cfg: ExperimentConfig
    grid: GridSpec
    mask: np.ndarray
    mask_source: str
    pump: ComplexField
    directions: np.ndarray
    matched: list[MatchedDirection]
    image_grid: GridSpec
    basis: np.ndarray
    reference_index: int

    @property
    def couplings(self) -> np.ndarray:
        return np.array([m.coupling for m in self.matched], dtype=np.complex128)


def prepare(cfg: ExperimentConfig) -> SimulationSetup:
    """Run the shot-independent stages of the pipeline."""
    grid = cfg.grid()
    geometry = cfg.geometry()
    crystal = cfg.crystal()
    source_cfg = cfg.source()
    if cfg.nx != cfg.ny:
        raise StageError("object", GeometryError("invalid geometry: imaging path needs a square grid"))

    def _load_mask():
        if cfg.mask_path:
            try:
                arr = read_pgm(cfg.mask_path)
            except OSError as exc:
                raise ConfigError(f"cannot read mask file: {cfg.mask_path}") from exc
            if arr.shape != grid.shape:
                raise ConfigError(
                    f"invalid config: mask shape {arr.shape} does not match grid {grid.shape}"
                )
            return arr, cfg.mask_path
        return make_three_hole_mask(grid, cfg.hole_diameter, cfg.hole_centers), "generated"

    mask, mask_source = _stage("object", _load_mask)
    obj = ComplexField(grid, mask.astype(np.complex128), cfg.wavelength_pump)
    pump = _stage("pump-relay", image_pump_2f2f, obj, geometry)
    directions = _stage(
        "source", fix_component_directions, source_cfg, grid=pump.grid, wavelength=cfg.wavelength_seed
    )
    matched = _stage("phase-match", match_directions, directions, geometry, crystal)
    image_grid, basis = _stage("imaging", image_basis, pump, matched, geometry)

    if cfg.reference_component >= 0:
        ref = cfg.reference_component
    else:
        shifts = np.array([[m.shift_x, m.shift_y] for m in matched])
        ref = int(np.argmin(np.sum(shifts**2, axis=1)))
    return SimulationSetup(
        cfg=cfg,
        grid=grid,
        mask=mask,
        mask_source=mask_source,
        pump=pump,
        directions=directions,
        matched=matched,
        image_grid=image_grid,
        basis=basis,
        reference_index=ref,
    )


@dataclass
class SimulationOutput:
    shot_count: int
    mode: str
    accumulators: dict[int, CorrelationAccumulator]
    results: dict[int, CorrelationResult]
    single_shot_map: np.ndarray
    reference_matrix: np.ndarray  # (M, N) per-shot component intensities
    mean_map: np.ndarray


def _worker_count() -> int:
    raw = os.environ.get("GHOSTSIM_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def simulate(
    setup: SimulationSetup,
    shots: int,
    reference_indices=None,
    mode: str | None = None,
    workers: int | None = None,
) -> SimulationOutput:
    """Monte Carlo over shots; returns finalized correlations per reference.

    With a single shot the correlation estimate is undefined: accumulators
    are returned but ``results`` stays empty.
    """
    cfg = setup.cfg
    n = len(setup.matched)
    if reference_indices is None:
        reference_indices = [setup.reference_index]
    for j in reference_indices:
        if j < 0 or j >= n:
            raise GeometryError("invalid geometry: reference index out of range")
    if shots < 1:
        raise InsufficientShotsError("insufficient shots")
    mode = cfg.mode if mode is None else mode
    if mode not in ("coherent", "incoherent"):
        raise GeometryError(f"invalid geometry: unknown mode {mode!r}")

    flat = setup.basis.reshape(n, -1)
    flat_sq = np.abs(flat) ** 2 if mode == "incoherent" else None
    couplings = setup.couplings
    map_shape = setup.image_grid.shape
    src = cfg.source()

    def _block(task):
        first, count = task
        amps = amplitude_matrix(setup.directions, src, count, first_shot=first)
        gammas = np.conj(amps) * couplings[None, :]
        if mode == "coherent":
            maps = np.abs(gammas @ flat) ** 2
        else:
            maps = (np.abs(gammas) ** 2) @ flat_sq
        refs = np.abs(amps) ** 2
        accs = {j: CorrelationAccumulator(j, map_shape) for j in reference_indices}
        for m in range(count):
            shot = ShotRecord(first + m, refs[m], maps[m].reshape(map_shape))
            for acc in accs.values():
                acc.accumulate(shot)
        single = maps[0].reshape(map_shape).copy() if first == 0 else None
        return first, accs, refs, single

    tasks = [(start, min(_BLOCK, shots - start)) for start in range(0, shots, _BLOCK)]
    nworkers = _worker_count() if workers is None else max(1, workers)
    if nworkers == 1 or len(tasks) == 1:
        partials = [_block(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            partials = list(pool.map(_block, tasks))
    partials.sort(key=lambda p: p[0])

    merged = {j: CorrelationAccumulator(j, map_shape) for j in reference_indices}
    ref_rows = []
    single_shot = None
    for first, accs, refs, single in partials:
        for j in reference_indices:
            merged[j].merge(accs[j])
        ref_rows.append(refs)
        if single is not None:
            single_shot = single
    reference_matrix = np.concatenate(ref_rows, axis=0)

    results: dict[int, CorrelationResult] = {}
    if shots >= 2:
        results = {j: merged[j].finalize() for j in reference_indices}
        mean_map = results[reference_indices[0]].mean_map
    else:
        mean_map = merged[reference_indices[0]].mean_map()
    return SimulationOutput(
        shot_count=shots,
        mode=mode,
        accumulators=merged,
        results=results,
        single_shot_map=single_shot,
        reference_matrix=reference_matrix,
        mean_map=mean_map,
    )


def plane_wave_reference_map(setup: SimulationSetup) -> np.ndarray:
    """Deterministic single-component on-axis image (no chaos).

    The seed is one unit plane wave along the axis with amplitude equal to
    amplitude_scale; the result is the clean direct image of the object.
    """
    matched = match_directions(np.zeros((1, 2)), setup.cfg.geometry(), setup.cfg.crystal())
    _, basis = image_basis(setup.pump, matched, setup.cfg.geometry())
    gamma = matched[0].coupling * setup.cfg.amplitude_scale
    return np.abs(gamma * basis[0]) ** 2


def incoherent_expected_map(setup: SimulationSetup) -> np.ndarray:
    """Closed-form ensemble mean of the image intensity.

    Cross terms average to zero for independent zero-mean amplitudes, so the
    mean is the incoherent sum of per-component images weighted by the
    amplitude variance.
    """
    weights = (np.abs(setup.couplings) ** 2) * setup.cfg.amplitude_scale**2
    return np.tensordot(weights, np.abs(setup.basis) ** 2, axes=(0, 0))


def ground_truth(setup: SimulationSetup) -> np.ndarray:
    """Point-reflected object transmission |T|^2 on the image grid, unshifted.

    The imaging chain inverts the object; per-component displacement is
    applied by the metric helpers from the component table.
    """
    return invert_exact(setup.mask**2)


@dataclass
class ArtifactEntry:
    name: str
    path: str
    sha256: str
    size: int


@dataclass
class RunManifest:
    config_echo: dict[str, str]
    artifacts: list[ArtifactEntry]
    skipped: dict[str, str]
    wall_seconds: float
    shots_per_second: float
    out_dir: str

    def to_key_value(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for key, val in self.config_echo.items():
            out[f"config.{key}"] = val
        out["note.geometry"] = (
            "focal_length and lens_to_crystal are simulation defaults chosen to "
            "keep image shifts on-grid; they are not measured values"
        )
        for art in self.artifacts:
            out[f"artifact.{art.name}.path"] = art.path
            out[f"artifact.{art.name}.sha256"] = art.sha256
            out[f"artifact.{art.name}.bytes"] = str(art.size)
        for stage_name, reason in self.skipped.items():
            out[f"skipped.{stage_name}"] = reason
        out["timing.wall_seconds"] = f"{self.wall_seconds:.3f}"
        out["timing.shots_per_second"] = f"{self.shots_per_second:.1f}"
        return out

    def write(self, path) -> None:
        write_key_value(path, self.to_key_value())


class _ArtifactWriter:
    """Tracks every emitted file so the manifest lists each exactly once."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.entries: list[ArtifactEntry] = []

    def _register(self, name: str, path: Path) -> None:
        self.entries.append(
            ArtifactEntry(
                name=name,
                path=str(path.relative_to(self.out_dir)),
                sha256=sha256_of(path),
                size=path.stat().st_size,
            )
        )

    def _check_finite(self, name: str, values: np.ndarray) -> None:
        if not np.all(np.isfinite(values)):
            raise GhostsimError(f"non-finite values in artifact {name}")

    def real_map(self, name: str, filename: str, values, grid: GridSpec, preview: bool = True):
        self._check_finite(name, values)
        path = self.out_dir / filename
        write_real_map(path, values, grid)
        self._register(name, path)
        self._register(name + "_meta", Path(str(path) + ".meta"))
        if preview:
            ppath = self.out_dir / (Path(filename).stem + ".pgm")
            write_pgm(ppath, values)
            self._register(name + "_preview", ppath)
            self._register(name + "_preview_minmax", Path(str(ppath) + ".minmax"))

    def complex_field(self, name: str, filename: str, fld: ComplexField):
        self._check_finite(name, np.abs(fld.amplitudes))
        path = self.out_dir / filename
        write_complex_field(path, fld)
        self._register(name, path)
        self._register(name + "_meta", Path(str(path) + ".meta"))

    def text(self, name: str, filename: str, content: str):
        path = self.out_dir / filename
        path.write_text(content, encoding="ascii")
        self._register(name, path)

    def key_value(self, name: str, filename: str, items: dict):
        path = self.out_dir / filename
        write_key_value(path, items)
        self._register(name, path)

    def csv(self, name: str, filename: str, header, rows):
        path = self.out_dir / filename
        write_csv(path, header, rows)
        self._register(name, path)

    def file(self, name: str, path: Path):
        self._register(name, path)


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    """Full pipeline with artifact emission; see module docstring for stages.

    Returns the manifest after writing it to <out_dir>/manifest.txt.
    """
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    skipped: dict[str, str] = {}

    setup = prepare(cfg)
    ref = setup.reference_index
    matched_ref = setup.matched[ref]

    t_corr = time.perf_counter()
    sim = _stage("correlation", simulate, setup, cfg.shots)
    corr_elapsed = time.perf_counter() - t_corr
    if cfg.shots < 2:
        skipped["correlation"] = "insufficient shots"

    plane_map = None
    if cfg.plane_wave_reference:
        plane_map = _stage("plane-wave", plane_wave_reference_map, setup)

    # thermal statistics: temporal record of the reference component across
    # shots, and the spatial profile of the first shot on the crystal face
    temporal_report = None
    spatial_report = None
    try:
        temporal_report = thermal_statistics_report(sim.reference_matrix[:, ref])
    except InsufficientStatisticsError as exc:
        skipped["statistics_temporal"] = str(exc)
    try:
        seed0 = draw_shot_amplitudes(setup.directions, cfg.source(), 0, cfg.wavelength_seed)
        seed_map = seed_field_on_grid(seed0, setup.pump.grid)
        spatial_report = thermal_statistics_report(np.abs(seed_map.amplitudes.ravel()) ** 2)
    except (InsufficientStatisticsError, AliasingError) as exc:
        skipped["statistics_spatial"] = str(exc)

    # metrics against the point-reflected object at the reference shift
    truth = ground_truth(setup)
    pitch = setup.image_grid.pitch
    expected_shift = (matched_ref.shift_x, matched_ref.shift_y)
    metric_rows: list[tuple[str, object]] = [
        ("shots", cfg.shots),
        ("components", cfg.n_components),
        ("mode", sim.mode),
        ("reference_component", ref),
        ("reference_shift_x", expected_shift[0]),
        ("reference_shift_y", expected_shift[1]),
    ]

    def _map_metrics(tag, values):
        m = image_metrics(values, truth, expected_shift, pitch)
        metric_rows.append((f"{tag}_ncc", m.ncc))
        metric_rows.append((f"{tag}_contrast", m.contrast))
        metric_rows.append((f"{tag}_background_rms", m.background_rms))
        return m

    result = sim.results.get(ref)
    if result is not None:
        if result.degenerate:
            raise StageError("metrics", GhostsimError("degenerate reference variance"))
        g_display = result.normalized
        _map_metrics("g_map", g_display)
        mx, my = correlation_peak_shift(g_display, truth, pitch)
        metric_rows.append(("measured_shift_x", mx))
        metric_rows.append(("measured_shift_y", my))
        metric_rows.append(("sigma2_reference", result.sigma2_ref))
    _map_metrics("single_shot", sim.single_shot_map)
    _map_metrics("mean_map", sim.mean_map)
    if sim.mode == "coherent" and cfg.shots >= 2:
        expected = incoherent_expected_map(setup)
        rel = float(np.linalg.norm(sim.mean_map - expected) / np.linalg.norm(expected))
        metric_rows.append(("incoherent_match_rel_l2", rel))
    if plane_map is not None:
        m = image_metrics(plane_map, truth, (0.0, 0.0), pitch)
        metric_rows.append(("plane_wave_ncc", m.ncc))
        metric_rows.append(("plane_wave_contrast", m.contrast))
    if temporal_report is not None:
        metric_rows.append(("thermal_temporal_ks", temporal_report.ks_distance))
        metric_rows.append(("thermal_temporal_n", temporal_report.n_samples))
    if spatial_report is not None:
        metric_rows.append(("thermal_spatial_ks", spatial_report.ks_distance))
        metric_rows.append(("thermal_spatial_n", spatial_report.n_samples))

    def _write_artifacts() -> _ArtifactWriter:
        w = _ArtifactWriter(out_dir)
        mask_path = out_dir / "object_mask.pgm"
        write_pgm(mask_path, setup.mask, maxval=255)
        w.file("object_mask", mask_path)
        w.file("object_mask_minmax", Path(str(mask_path) + ".minmax"))
        w.complex_field("pump_field", "pump_field.raw", setup.pump)
        if result is not None:
            w.real_map("g_map_raw", "g_map_raw.raw", result.g_map, setup.image_grid, preview=False)
            w.real_map("g_map_normalized", "g_map_normalized.raw", result.normalized, setup.image_grid)
        if plane_map is not None:
            w.real_map("plane_wave_reference", "plane_wave_reference.raw", plane_map, setup.image_grid)
        w.real_map("single_shot", "single_shot.raw", sim.single_shot_map, setup.image_grid)
        w.real_map("mean_map", "mean_map.raw", sim.mean_map, setup.image_grid)
        for tag, report in (("temporal", temporal_report), ("spatial", spatial_report)):
            if report is None:
                continue
            w.text(f"thermal_{tag}_report", f"thermal_{tag}.txt", report.to_key_value())
            w.csv(
                f"thermal_{tag}_hist",
                f"thermal_{tag}_hist.csv",
                ["bin_center", "count", "expected_count"],
                report.hist_rows(),
            )
            fig_path = out_dir / f"thermal_{tag}.png"
            figures.render_thermal(fig_path, report, f"{tag} intensity statistics")
            w.file(f"figure_thermal_{tag}", fig_path)
        w.csv(
            "components",
            "components.csv",
            [
                "index", "theta", "beta", "kx", "ky",
                "shift_x", "shift_y", "pm_weight", "delta_kz", "coupling_mag", "is_reference",
            ],
            [
                [i, m.theta, m.beta, m.kx, m.ky, m.shift_x, m.shift_y,
                 m.weight, m.delta_kz, abs(m.coupling), int(i == ref)]
                for i, m in enumerate(setup.matched)
            ],
        )
        w.csv("metrics", "metrics.csv", ["metric", "value"], metric_rows)
        w.key_value("config_echo", "config.txt", cfg.to_key_value())

        panels = []
        if result is not None:
            panels.append(("recovered image (normalized G)", result.normalized))
        if plane_map is not None:
            panels.append(("plane-wave reference", plane_map))
        panels.append(("single shot", sim.single_shot_map))
        panels.append(("shot-averaged mean", sim.mean_map))
        fig_path = out_dir / "summary.png"
        figures.render_map_grid(fig_path, panels, setup.image_grid)
        w.file("figure_summary", fig_path)
        return w

    writer = _stage("artifacts", _write_artifacts)

    wall = time.perf_counter() - t0
    manifest = RunManifest(
        config_echo=cfg.to_key_value(),
        artifacts=writer.entries,
        skipped=skipped,
        wall_seconds=wall,
        shots_per_second=cfg.shots / corr_elapsed if corr_elapsed > 0 else float(cfg.shots),
        out_dir=str(out_dir),
    )
    manifest.write(out_dir / "manifest.txt")
    return manifest


_SWEEP_PARAMS = {
    "shots": ("shots", int),
    "N": ("n_components", int),
    "g_eff_L": ("gain_length", float),
    "max_angle": ("max_angle", float),
}

_SWEEP_HEADER = [
    "parameter", "value", "shots", "g_ncc", "g_contrast",
    "single_shot_contrast", "mean_map_contrast", "sigma2_reference",
]


def sweep(cfg: ExperimentConfig, parameter: str, values, out_dir=None) -> list[list]:
    """Rerun the pipeline across one parameter; one metrics row per value.

    Writes sweep_<parameter>.csv (plus a convergence figure) when out_dir is
    given. An empty value list yields a header-only CSV.
    """
    if parameter not in _SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter: {parameter}")
    attr, cast = _SWEEP_PARAMS[parameter]
    rows: list[list] = []
    for value in values:
        try:
            typed = cast(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for sweep parameter {parameter}: {value!r}") from exc
        cfg_i = replace(cfg, **{attr: typed})
        if cfg_i.shots < 2:
            raise InsufficientShotsError("insufficient shots")
        setup = prepare(cfg_i)
        sim = _stage("correlation", simulate, setup, cfg_i.shots)
        truth = ground_truth(setup)
        m_ref = setup.matched[setup.reference_index]
        shift = (m_ref.shift_x, m_ref.shift_y)
        pitch = setup.image_grid.pitch
        result = sim.results[setup.reference_index]
        g = image_metrics(result.normalized, truth, shift, pitch)
        single = image_metrics(sim.single_shot_map, truth, shift, pitch)
        mean = image_metrics(sim.mean_map, truth, shift, pitch)
        rows.append(
            [parameter, typed, cfg_i.shots, g.ncc, g.contrast,
             single.contrast, mean.contrast, result.sigma2_ref]
        )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(out_dir / f"sweep_{parameter}.csv", _SWEEP_HEADER, rows)
        if rows:
            figures.render_sweep(
                out_dir / f"sweep_{parameter}.png",
                parameter,
                [r[1] for r in rows],
                [r[3] for r in rows],
            )
    return rows
