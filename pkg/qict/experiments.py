"""
Experiment runners, one per scenario kind.

Each runner takes a validated scenario and an output directory, writes its
artifacts and returns the headline metrics that go into ``summary.json``.
"""
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from qict.errors import DomainError, QICTError
from qict.physics.detector import sample_counts
from qict.physics.imaging import bar_modulation, edge_response_fwhm, scan_image
from qict.physics.interferometer import fringe_visibility, sweep_arm_loss
from qict.physics.sample import enumerate_paths
from qict.physics.spectra import FringeRecord
from qict.physics.tomography import (
    Peak,
    Scene,
    axial_resolution_theory,
    detect_peaks,
    fd_reconstruct,
    fine_phase_scan,
    fringe_contrast,
    recover_thicknesses,
    resolution_vs_delay,
    snr_estimate,
    snr_slope,
    td_burst_centers,
    td_scan,
    to_counts,
)
from qict.schemas import Scenario
from qict.utils import write_csv, write_fringe_csv, write_matrix_csv, write_pgm, write_summary

logger = logging.getLogger(__name__)

Artifacts = List[Path]
Metrics = Dict[str, Any]
Runner = Callable[[Scenario, Path, int], Tuple[Metrics, Artifacts]]

RUNNERS: Dict[str, Runner] = {}


def runner(kind: str):
    """Register the runner for one scenario kind"""
    def register(func: Runner) -> Runner:
        RUNNERS[kind] = func
        return func
    return register


def _visibility(scenario: Scenario) -> Optional[float]:
    try:
        return fringe_visibility(scenario.to_config())
    except QICTError:
        return None


def _peak_rows(peaks: List[Peak]):
    return [(p.position, p.fwhm, p.amplitude) for p in peaks]


def _peak_table(peaks: List[Peak]) -> List[Dict[str, float]]:
    return [{"position_m": p.position, "fwhm_m": p.fwhm, "amplitude": p.amplitude} for p in peaks]


def _scene(scenario: Scenario) -> Scene:
    stack = scenario.sample.to_stack()
    paths = enumerate_paths(stack, scenario.sample.max_order, scenario.sample.path_cap)
    return Scene(
        cfg=scenario.to_config(),
        paths=paths,
        spec=scenario.spectrum.to_spectrum(),
        rate_scale=scenario.detector.rate_scale,
        window=scenario.reconstruction.window,
        pad_factor=scenario.reconstruction.pad_factor,
        include_cross_terms=scenario.reconstruction.include_cross_terms,
        cross_term_weight=scenario.reconstruction.cross_term_weight,
        phase_model=scenario.reconstruction.phase_model,
    )


def _sampled(record: FringeRecord, scenario: Scenario, threads: int) -> FringeRecord:
    """Poisson draws on a mean-count record, unless the scenario is noiseless"""
    if scenario.detector.noiseless:
        return record
    det = scenario.detector.to_detector(scenario.seed)
    return record.with_samples(sample_counts(record.expected, det, stream=0, threads=threads))


def _acquire(scenario: Scenario, scene: Scene, threads: int):
    """Counts fringe and its idler-blocked reference"""
    counts, reference = scene.counts_records(scenario.detector.to_detector(scenario.seed))
    return _sampled(counts, scenario, threads), reference


@runner("td-scan")
def run_td_scan(scenario: Scenario, out_dir: Path, threads: int):
    cfg = scenario.to_config()
    spec = scenario.spectrum.to_spectrum()
    paths = enumerate_paths(scenario.sample.to_stack(), scenario.sample.max_order, scenario.sample.path_cap)
    record = td_scan(cfg, paths, spec, scenario.td_scan.values())

    det = scenario.detector.to_detector(scenario.seed)
    record = _sampled(to_counts(record, det, scenario.detector.rate_scale), scenario, threads)

    bursts = td_burst_centers(record, min_prominence=scenario.reconstruction.min_prominence)
    artifacts = [
        write_fringe_csv(out_dir / "fringe_td.csv", record),
        write_csv(out_dir / "bursts.csv", ["position_m", "fwhm_m", "amplitude"], _peak_rows(bursts)),
    ]
    metrics = {
        "fringe_contrast": fringe_contrast(record),
        "bursts": _peak_table(bursts),
        "expected_burst_positions_m": sorted(p.optical_roundtrip + cfg.delay_mismatch for p in paths),
        "axial_resolution_theory_m": axial_resolution_theory(spec),
    }
    return metrics, artifacts


@runner("fd-scan")
def run_fd_scan(scenario: Scenario, out_dir: Path, threads: int):
    scene = _scene(scenario)
    counts, reference = _acquire(scenario, scene, threads)
    artifacts = [
        write_fringe_csv(out_dir / "fringe_fd.csv", counts),
        write_fringe_csv(out_dir / "reference_fd.csv", reference),
    ]
    metrics = {
        "points": int(counts.scan_axis.size),
        "total_counts": float(np.sum(counts.values())),
        "nyquist_depth_m": scene.spec.nyquist_depth,
        "path_count": len(scene.paths),
    }
    return metrics, artifacts


@runner("reconstruct")
def run_reconstruct(scenario: Scenario, out_dir: Path, threads: int):
    scene = _scene(scenario)
    recon = scenario.reconstruction
    counts, reference = _acquire(scenario, scene, threads)
    profile = fd_reconstruct(counts, scene.spec, window=recon.window, reference=reference,
                             pad_factor=recon.pad_factor)
    peaks = detect_peaks(profile, min_prominence=recon.min_prominence)
    resolution = axial_resolution_theory(scene.spec)
    layers = scenario.sample.layers
    rows = _thickness_rows(scenario, peaks, resolution) if layers else []

    artifacts = [
        write_fringe_csv(out_dir / "fringe_fd.csv", counts),
        write_csv(out_dir / "depth_profile.csv", ["depth_m", "magnitude"],
                  zip(profile.depth_axis, profile.magnitude)),
        write_csv(out_dir / "peaks.csv", ["position_m", "fwhm_m", "amplitude"], _peak_rows(peaks)),
    ]
    metrics: Metrics = {
        "peaks": _peak_table(peaks),
        "axial_resolution_theory_m": resolution,
        "depth_bin_m": profile.bin_width,
        "path_count": len(scene.paths),
    }

    if layers:
        artifacts.append(write_csv(
            out_dir / "thicknesses.csv",
            ["layer", "group_index", "configured_m", "recovered_m", "relative_error"],
            rows,
        ))
        metrics["thicknesses"] = [
            {"layer": r[0], "group_index": r[1], "configured_m": r[2], "recovered_m": r[3], "relative_error": r[4]}
            for r in rows
        ]
    return metrics, artifacts


def _thickness_rows(scenario: Scenario, peaks: List[Peak], resolution: float):
    """Match every interface to its nearest detected peak and convert spacings to thicknesses"""
    stack = scenario.sample.to_stack()
    mismatch = scenario.to_config().delay_mismatch
    interfaces = [abs(position + mismatch) for position in stack.interface_positions()]

    matched = []
    for k, expected in enumerate(interfaces):
        nearest = min(peaks, key=lambda p: abs(p.position - expected), default=None)
        if nearest is None or abs(nearest.position - expected) > resolution:
            raise DomainError(
                f"interface {k} at {expected:.4e} m has no detected peak within {resolution:.3e} m; "
                "lower reconstruction.min_prominence or check the sample geometry"
            )
        matched.append(nearest.position)

    layers = scenario.sample.layers
    recovered = recover_thicknesses(matched, [layer.group_index for layer in layers])
    rows = []
    for k, (layer, thickness) in enumerate(zip(layers, recovered)):
        label = layer.label or f"layer {k + 1}"
        error = (thickness - layer.thickness) / layer.thickness if layer.thickness > 0 else math.nan
        rows.append((label, layer.group_index, layer.thickness, thickness, error))
    return rows


@runner("phase-scan")
def run_phase_scan(scenario: Scenario, out_dir: Path, threads: int):
    cfg = scenario.to_config()
    record = fine_phase_scan(cfg, scenario.phase_scan.values())
    det = scenario.detector.to_detector(scenario.seed)
    record = _sampled(to_counts(record, det, scenario.detector.rate_scale), scenario, threads)
    artifacts = [write_fringe_csv(out_dir / "fringe_phase.csv", record)]
    metrics = {
        "fringe_contrast": fringe_contrast(record),
        "fringe_period_m": cfg.lambda_i0 / 2.0,
    }
    return metrics, artifacts


@runner("visibility-sweep")
def run_visibility_sweep(scenario: Scenario, out_dir: Path, threads: int):
    section = scenario.visibility_sweep
    points = sweep_arm_loss(scenario.to_config(), section.arm, section.transmissions,
                            idler_double_pass=section.idler_double_pass)
    artifacts = [write_csv(out_dir / "visibility_sweep.csv", ["transmission", "visibility"], points)]

    x, y = (np.array(v) for v in zip(*points))
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    spread = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - np.sum(residual ** 2) / spread if spread > 0 else 1.0
    metrics = {
        "arm": section.arm,
        "fit_slope": float(slope),
        "fit_intercept": float(intercept),
        "fit_r_squared": float(r_squared),
        "points": [{"transmission": t, "visibility": v} for t, v in points],
    }
    return metrics, artifacts


@runner("resolution-curve")
def run_resolution_curve(scenario: Scenario, out_dir: Path, threads: int):
    spec = scenario.spectrum.to_spectrum()
    points = resolution_vs_delay(spec, scenario.resolution_curve.delays,
                                 pad_factor=scenario.reconstruction.pad_factor,
                                 window=scenario.reconstruction.window)
    artifacts = [write_csv(out_dir / "resolution.csv", ["delay_m", "fwhm_m", "amplitude"], points)]

    resolved = [p.fwhm for p in points if p.delay > 2 * axial_resolution_theory(spec) and math.isfinite(p.fwhm)]
    metrics = {
        "axial_resolution_theory_m": axial_resolution_theory(spec),
        "plateau_fwhm_m": float(np.median(resolved)) if resolved else math.nan,
        "nyquist_depth_m": spec.nyquist_depth,
        "points": [{"delay_m": p.delay, "fwhm_m": p.fwhm, "amplitude": p.amplitude} for p in points],
    }
    return metrics, artifacts


@runner("snr-curve")
def run_snr_curve(scenario: Scenario, out_dir: Path, threads: int):
    scene = _scene(scenario)
    section = scenario.snr_curve
    points = snr_estimate(
        scene,
        scenario.detector.to_detector(scenario.seed),
        section.integration_times,
        repeats=section.repeats,
        target_depth=section.target_depth,
        noiseless=scenario.detector.noiseless,
        threads=threads,
    )
    artifacts = [write_csv(out_dir / "snr.csv", ["integration_time_s", "snr"], points)]
    metrics: Metrics = {"points": [{"integration_time_s": t, "snr": s} for t, s in points]}
    if not scenario.detector.noiseless:
        metrics["snr_slope"] = snr_slope(points)
    return metrics, artifacts


@runner("image")
def run_image(scenario: Scenario, out_dir: Path, threads: int):
    section = scenario.imaging
    regions = {"present": section.regions.present.to_stack()}
    if section.regions.absent is not None:
        regions["absent"] = section.regions.absent.to_stack()
    image = scan_image(
        regions,
        section.mask.to_mask(),
        section.to_beam(),
        section.step,
        section.depth_select,
        scenario.imaging_setup(threads),
        shape=(section.ny, section.nx),
        scan_origin=(section.scan_origin[0], section.scan_origin[1]),
    )
    artifacts = [
        write_matrix_csv(out_dir / "image.csv", image.pixels),
        write_pgm(out_dir / "image.pgm", image.pixels),
    ]
    center_row = [v for _, v in image.line(axis="x")]
    metrics: Metrics = {
        "beam_fwhm_m": [section.beam.fwhm_x, section.beam.fwhm_y],
        "coupling": section.coupling,
        "center_row_modulation": bar_modulation(center_row),
        "pixel_max": float(image.pixels.max()),
    }
    if section.edge_axis is not None:
        line = image.line(axis=section.edge_axis)
        metrics["lsf_fwhm_m"] = edge_response_fwhm(line)
        artifacts.append(write_csv(out_dir / "edge_line.csv", ["position_m", "amplitude"], line))
    return metrics, artifacts


def run_scenario(scenario: Scenario, out_dir: Path, threads: int = 1) -> Tuple[Metrics, Artifacts]:
    """Run one scenario and write its artifacts plus ``summary.json`` into ``out_dir``"""
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info("running scenario %s (%s) with seed %d", scenario.name, scenario.kind, scenario.seed)
    metrics, artifacts = RUNNERS[scenario.kind](scenario, out_dir, threads)

    summary = {
        "scenario": scenario.name,
        "kind": scenario.kind,
        "seed": scenario.seed,
        "visibility": _visibility(scenario),
        "metrics": metrics,
    }
    artifacts.append(write_summary(out_dir / "summary.json", summary))
    for path in artifacts:
        logger.info("wrote %s", path)
    return summary, artifacts
