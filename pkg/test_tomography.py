import math

import numpy as np
import pytest

from qict.errors import DomainError, ResamplingRequiredError, UndefinedSNRError, UsageError
from qict.physics.detector import DetectorModel
from qict.physics.interferometer import fringe_visibility
from qict.physics.sample import LayerStack, ReflectionPath, enumerate_paths
from qict.physics.spectra import FringeRecord, envelope_reference, synthesize_fd_fringe
from qict.physics.tomography import (
    DepthProfile,
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


def _profile(cfg, paths, spec, pad_factor=8, **kwargs):
    fringe = synthesize_fd_fringe(cfg, paths, spec, **kwargs)
    return fd_reconstruct(fringe, spec, reference=envelope_reference(cfg, spec), pad_factor=pad_factor)


def _nearest(peaks, depth):
    return min(peaks, key=lambda p: abs(p.position - depth))


def test_depth_axis_calibration(ideal_cfg, spectrum):
    """A mirror 1 mm away reconstructs as one peak at 1 mm with the theoretical width"""
    profile = _profile(ideal_cfg, enumerate_paths(LayerStack.mirror(reference_plane_offset=-1e-3)), spectrum)
    assert profile.bin_width == pytest.approx(spectrum.center_wavelength ** 2 / (2048 * spectrum.grid_step))
    peaks = detect_peaks(profile, min_prominence=0.2)
    assert len(peaks) == 1
    assert abs(peaks[0].position - 1e-3) <= profile.bin_width
    assert abs(peaks[0].fwhm / axial_resolution_theory(spectrum) - 1) < 0.03


def test_profile_axis_ends_at_nyquist(ideal_cfg, spectrum):
    profile = _profile(ideal_cfg, [ReflectionPath(1e-3, 1.0 + 0j, 0)], spectrum, pad_factor=1)
    assert profile.depth_axis[0] == 0.0
    assert profile.depth_axis[-1] == pytest.approx(spectrum.nyquist_depth)


def test_window_widens_the_peak(ideal_cfg, spectrum):
    fringe = synthesize_fd_fringe(ideal_cfg, [ReflectionPath(1e-3, 1.0 + 0j, 0)], spectrum)
    reference = envelope_reference(ideal_cfg, spectrum)
    plain = detect_peaks(fd_reconstruct(fringe, spectrum, reference=reference, pad_factor=8))
    tapered = detect_peaks(fd_reconstruct(fringe, spectrum, "hann", reference, pad_factor=8))
    assert tapered[0].fwhm > plain[0].fwhm
    assert abs(tapered[0].position - plain[0].position) < 2 * plain[0].fwhm / 10


def test_depth_beyond_nyquist_aliases(ideal_cfg, spectrum):
    """5.0 mm folds back to 2 z_nyq - 5.0 mm"""
    profile = _profile(ideal_cfg, [ReflectionPath(5e-3, 1.0 + 0j, 0)], spectrum)
    peak = detect_peaks(profile, min_prominence=0.2)[-1]
    assert abs(peak.position - (2 * spectrum.nyquist_depth - 5e-3)) <= 2 * profile.bin_width


def test_depth_below_nyquist_is_not_folded(ideal_cfg, spectrum):
    profile = _profile(ideal_cfg, [ReflectionPath(4.5e-3, 1.0 + 0j, 0)], spectrum)
    peak = detect_peaks(profile, min_prominence=0.2)[-1]
    assert abs(peak.position - 4.5e-3) <= profile.bin_width


def test_resolution_curve(spectrum):
    resolution = axial_resolution_theory(spectrum)
    zero, plateau, far = resolution_vs_delay(spectrum, [0.0, 1e-3, 4.5e-3])
    assert zero.fwhm < 0.6 * resolution
    assert abs(plateau.fwhm / resolution - 1) < 0.03
    # Roll-off lowers the peak toward the Nyquist depth
    assert far.amplitude < plateau.amplitude


def test_resolution_curve_rejects_aliased_delays(spectrum):
    with pytest.raises(DomainError):
        resolution_vs_delay(spectrum, [5e-3])


def test_sample1_thicknesses(ideal_cfg, spectrum, sample1_stack):
    """Sapphire 0.442 mm and air gap 0.431 mm recovered within 1%"""
    profile = _profile(ideal_cfg, enumerate_paths(sample1_stack, max_order=2), spectrum)
    peaks = detect_peaks(profile, min_prominence=0.1)
    resolution = axial_resolution_theory(spectrum)
    positions = []
    for expected in sample1_stack.interface_positions():
        peak = _nearest(peaks, expected)
        assert abs(peak.position - expected) < resolution / 2
        positions.append(peak.position)
    thicknesses = recover_thicknesses(positions, [1.77, 1.0])
    assert thicknesses == pytest.approx([0.442e-3, 0.431e-3], rel=0.01)


def test_sample2_thicknesses_and_multiple_reflection(ideal_cfg, spectrum, sample2_stack):
    profile = _profile(ideal_cfg, enumerate_paths(sample2_stack, max_order=2), spectrum)
    peaks = detect_peaks(profile, min_prominence=0.05)
    resolution = axial_resolution_theory(spectrum)
    expected_positions = [0.35e-3, 2.162e-3, 2.662e-3, 4.393e-3]
    positions = [_nearest(peaks, z).position for z in expected_positions]
    assert positions == pytest.approx(expected_positions, abs=resolution / 4)
    thicknesses = recover_thicknesses(positions, [3.61, 1.0, 1.77])
    assert thicknesses == pytest.approx([0.251e-3, 0.25e-3, 0.489e-3], rel=0.08)
    # Second roundtrip inside the silicon
    assert abs(_nearest(peaks, 3.974e-3).position - 3.974e-3) < resolution / 2


def test_peak_position_tracks_delay_linearly(ideal_cfg, spectrum):
    """Mirror moved through ten delays: fitted slope one, intercept within a bin"""
    delays = np.linspace(0.5e-3, 4.0e-3, 10)
    positions = []
    for delay in delays:
        profile = _profile(ideal_cfg, [ReflectionPath(float(delay), 1.0 + 0j, 0)], spectrum)
        positions.append(max(detect_peaks(profile, min_prominence=0.2), key=lambda p: p.amplitude).position)
    slope, intercept = np.polyfit(delays, positions, 1)
    assert abs(slope - 1.0) < 0.01
    assert abs(intercept) <= profile.bin_width


def test_negative_roundtrip_folds_to_positive_depth(ideal_cfg, spectrum):
    profile = _profile(ideal_cfg, [ReflectionPath(-1e-3, 1.0 + 0j, 0)], spectrum)
    peaks = detect_peaks(profile, min_prominence=0.2)
    assert len(peaks) == 1
    assert abs(peaks[0].position - 1e-3) <= profile.bin_width


def test_td_and_fd_agree_on_peak_separation(ideal_cfg, spectrum):
    paths = [ReflectionPath(0.5e-3, 0.5 + 0j, 0), ReflectionPath(1.4e-3, 0.5 + 0j, 0)]
    bursts = td_burst_centers(td_scan(ideal_cfg, paths, spectrum, np.linspace(0.2e-3, 1.7e-3, 15001)))
    peaks = detect_peaks(_profile(ideal_cfg, paths, spectrum), min_prominence=0.2)
    assert len(bursts) == 2 and len(peaks) == 2
    td_separation = bursts[1].position - bursts[0].position
    fd_separation = peaks[1].position - peaks[0].position
    assert abs(td_separation - 0.9e-3) < 5e-6
    assert abs(fd_separation - 0.9e-3) < 5e-6
    assert abs(td_separation - fd_separation) < 5e-6


def test_cross_terms_add_a_difference_peak(ideal_cfg, spectrum):
    paths = [ReflectionPath(1e-3, 0.5 + 0j, 0), ReflectionPath(1.5e-3, 0.5 + 0j, 0)]
    with_cross = detect_peaks(_profile(ideal_cfg, paths, spectrum, include_cross_terms=True), min_prominence=0.05)
    without = detect_peaks(_profile(ideal_cfg, paths, spectrum), min_prominence=0.05)
    resolution = axial_resolution_theory(spectrum)
    assert any(abs(p.position - 0.5e-3) < resolution / 2 for p in with_cross)
    assert not any(abs(p.position - 0.5e-3) < resolution for p in without)


def test_reconstruct_rejects_wrong_inputs(ideal_cfg, spectrum):
    fringe = synthesize_fd_fringe(ideal_cfg, [ReflectionPath(1e-3, 1.0 + 0j, 0)], spectrum)
    td = td_scan(ideal_cfg, [ReflectionPath(1e-3, 1.0 + 0j, 0)], spectrum, np.linspace(0, 2e-3, 101))
    with pytest.raises(UsageError):
        fd_reconstruct(td, spectrum)
    with pytest.raises(UsageError):
        fd_reconstruct(fringe, spectrum, window="kaiser")
    with pytest.raises(UsageError):
        fd_reconstruct(fringe, spectrum, pad_factor=0)
    uneven = FringeRecord(scan_axis=[0.0, 1e-10, 3e-10, 4e-10], expected=[1.0, 2.0, 1.0, 2.0],
                          kind="FD", axis_unit="relative_wavelength_m")
    with pytest.raises(ResamplingRequiredError):
        fd_reconstruct(uneven, spectrum)


def test_recover_thicknesses_needs_matching_lengths():
    assert recover_thicknesses([0.0, 3e-3], [1.5]) == pytest.approx([1e-3])
    with pytest.raises(DomainError):
        recover_thicknesses([0.0, 1e-3], [1.5, 2.0])


def test_detect_peaks_on_empty_profile():
    assert detect_peaks(DepthProfile(np.linspace(0, 1e-3, 10), np.zeros(10))) == []


def test_td_burst_at_mirror_position(ideal_cfg, spectrum):
    record = td_scan(ideal_cfg, [ReflectionPath(0.5e-3, 1.0 + 0j, 0)], spectrum, np.linspace(0.2e-3, 0.8e-3, 6001))
    bursts = td_burst_centers(record)
    assert len(bursts) == 1
    assert abs(bursts[0].position - 0.5e-3) < 2e-6
    assert abs(bursts[0].fwhm / axial_resolution_theory(spectrum) - 1) < 0.05


def test_td_burst_needs_td_record(ideal_cfg, spectrum):
    fringe = synthesize_fd_fringe(ideal_cfg, [ReflectionPath(1e-3, 1.0 + 0j, 0)], spectrum)
    with pytest.raises(UsageError):
        td_burst_centers(fringe)


def test_phase_scan_contrast_matches_visibility(measured_cfg):
    record = fine_phase_scan(measured_cfg, np.linspace(0, 1.6e-6, 161))
    assert abs(fringe_contrast(record) - fringe_visibility(measured_cfg)) < 2e-3
    # Double pass: one period per half idler wavelength
    period = measured_cfg.lambda_i0 / 2
    shifted = fine_phase_scan(measured_cfg, np.array([0.0, period]))
    assert shifted.expected[0] == pytest.approx(shifted.expected[1])


def test_to_counts_scales_expected(ideal_cfg, spectrum):
    fringe = synthesize_fd_fringe(ideal_cfg, [ReflectionPath(1e-3, 1.0 + 0j, 0)], spectrum)
    det = DetectorModel(efficiency=0.5, integration_time=0.01)
    counts = to_counts(fringe, det, rate_scale=1e6)
    assert np.allclose(counts.expected, fringe.expected * 1e6 * 0.5 * 0.01)
    assert counts.sampled is None


def _mirror_scene(ideal_cfg, spectrum):
    return Scene(ideal_cfg, enumerate_paths(LayerStack.mirror(reference_plane_offset=-1e-3)), spectrum, rate_scale=1e5)


def test_snr_grows_linearly_with_integration_time(ideal_cfg, spectrum):
    scene = _mirror_scene(ideal_cfg, spectrum)
    points = snr_estimate(scene, DetectorModel(rng_seed=5), [0.001, 0.002, 0.005, 0.01, 0.02, 0.0316])
    assert all(np.isfinite(p.snr) and p.snr > 1 for p in points)
    assert abs(snr_slope(points) - 1.0) < 0.15


def test_snr_independent_of_threads(ideal_cfg, spectrum):
    scene = _mirror_scene(ideal_cfg, spectrum)
    det = DetectorModel(rng_seed=9)
    assert snr_estimate(scene, det, [0.01], threads=1) == snr_estimate(scene, det, [0.01], threads=3)


def test_noiseless_snr_has_no_slope(ideal_cfg, spectrum):
    scene = _mirror_scene(ideal_cfg, spectrum)
    points = snr_estimate(scene, DetectorModel(), [0.01, 0.02], noiseless=True)
    assert all(math.isinf(p.snr) for p in points)
    with pytest.raises(UndefinedSNRError):
        snr_slope(points)


def test_snr_needs_enough_repeats(ideal_cfg, spectrum):
    with pytest.raises(DomainError):
        snr_estimate(_mirror_scene(ideal_cfg, spectrum), DetectorModel(), [0.01], repeats=5)
