"""
Time-domain scans and frequency-domain depth reconstruction.

Depth is reported as optical path difference: the signal-arm single-pass
equivalent of the idler-arm roundtrip. A layer's geometric thickness is the
spacing of its two surface peaks divided by 2 n_g.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks, get_window, hilbert

from qict.errors import DomainError, ResamplingRequiredError, UndefinedSNRError, UsageError
from qict.physics.detector import DetectorModel, expected_counts, sample_counts
from qict.physics.interferometer import (
    InterferometerConfig,
    fringe_offset,
    fringe_visibility,
    ideal_config,
    mean_signal_rate,
    signal_rate,
)
from qict.physics.sample import ReflectionPath
from qict.physics.spectra import (
    DEFAULT_CROSS_TERM_WEIGHT,
    FOUR_LN2,
    FringeKind,
    FringeRecord,
    SignalSpectrum,
    envelope_reference,
    subtract_dc,
    synthesize_fd_fringe,
)
from qict.utils import parallel_map

logger = logging.getLogger(__name__)

WINDOWS = ("none", "hann")


@dataclass(frozen=True)
class DepthProfile:
    depth_axis: np.ndarray
    magnitude: np.ndarray

    @property
    def bin_width(self) -> float:
        return float(self.depth_axis[1] - self.depth_axis[0]) if self.depth_axis.size > 1 else 0.0

    def value_near(self, depth: float, half_window: float) -> float:
        """Largest magnitude within +-half_window of ``depth``."""
        mask = np.abs(self.depth_axis - depth) <= max(half_window, self.bin_width / 2)
        if not np.any(mask):
            return 0.0
        return float(self.magnitude[mask].max())


class Peak(NamedTuple):
    position: float
    fwhm: float
    amplitude: float


class ResolutionPoint(NamedTuple):
    delay: float
    fwhm: float
    amplitude: float


class SNRPoint(NamedTuple):
    integration_time: float
    snr: float


def axial_resolution_theory(spec: SignalSpectrum) -> float:
    """FWHM of the amplitude depth profile of a Gaussian spectrum."""
    return FOUR_LN2 / math.pi * spec.center_wavelength ** 2 / spec.fwhm


def coherence_envelope(path_difference, spec: SignalSpectrum) -> np.ndarray:
    """Normalized magnitude of the Fourier transform of the spectral envelope."""
    resolution = axial_resolution_theory(spec)
    return np.exp(-FOUR_LN2 * (np.asarray(path_difference, dtype=float) / resolution) ** 2)


def td_scan(
    cfg: InterferometerConfig,
    paths: Sequence[ReflectionPath],
    spec: SignalSpectrum,
    delay_grid: Sequence[float],
) -> FringeRecord:
    """
    Count rate versus an additional signal-arm delay. Each path produces a
    fringe burst centered where the delay matches its optical roundtrip.
    """
    delays = np.asarray(delay_grid, dtype=float)
    mean = mean_signal_rate(cfg)
    gamma = fringe_visibility(cfg)
    offset = cfg.phi + fringe_offset(cfg)

    modulation = np.zeros_like(delays)
    for path in paths:
        mismatch = path.optical_roundtrip + cfg.delay_mismatch - delays
        carrier = np.exp(1j * (offset + 2.0 * math.pi * mismatch / spec.center_wavelength))
        modulation += gamma * np.imag(path.amplitude * coherence_envelope(mismatch, spec) * carrier)

    expected = np.clip(mean * (1.0 + modulation), 0.0, None)
    return FringeRecord(scan_axis=delays, expected=expected, kind=FringeKind.TD, axis_unit="signal_delay_m")


def fine_phase_scan(cfg: InterferometerConfig, mirror_displacement_grid: Sequence[float]) -> FringeRecord:
    """Count rate versus idler reference-mirror displacement (double pass: 4 pi d / lambda_i0)."""
    displacements = np.asarray(mirror_displacement_grid, dtype=float)
    phases = cfg.phi + 4.0 * math.pi * displacements / cfg.lambda_i0
    expected = np.array([signal_rate(cfg, phi) for phi in phases])
    return FringeRecord(
        scan_axis=displacements, expected=expected, kind=FringeKind.PHASE, axis_unit="mirror_displacement_m"
    )


def fringe_contrast(record: FringeRecord) -> float:
    values = record.values()
    high, low = float(values.max()), float(values.min())
    if high + low == 0:
        return 0.0
    return (high - low) / (high + low)


def td_burst_centers(record: FringeRecord, min_prominence: float = 0.2) -> List[Peak]:
    """Burst centers of a TD record from the Hilbert envelope of its oscillating part."""
    if record.kind is not FringeKind.TD:
        raise UsageError(f"burst detection needs a TD record, got {record.kind.value}")
    values = record.values()
    envelope = np.abs(hilbert(values - np.median(values)))
    order = np.argsort(record.scan_axis)
    profile = DepthProfile(depth_axis=record.scan_axis[order], magnitude=envelope[order])
    return detect_peaks(profile, min_prominence=min_prominence, fold_at_origin=False)


def fd_reconstruct(
    fringe: FringeRecord,
    spec: SignalSpectrum,
    window: str = "none",
    reference: Optional[FringeRecord] = None,
    pad_factor: int = 1,
) -> DepthProfile:
    """
    Depth profile as the magnitude of the Fourier transform over relative
    wavelength. Positive and negative depths fold onto one axis.
    """
    if fringe.kind is not FringeKind.FD:
        raise UsageError(f"FD reconstruction needs an FD record, got {fringe.kind.value}")
    if window not in WINDOWS:
        raise UsageError(f"unknown window {window!r}; expected one of {WINDOWS}")
    if pad_factor < 1:
        raise UsageError("pad_factor must be >= 1")
    if reference is not None:
        fringe = subtract_dc(fringe, reference)

    steps = np.diff(fringe.scan_axis)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
        raise ResamplingRequiredError("FD reconstruction needs a uniform wavelength grid; resample first")
    step = abs(float(steps[0]))

    values = fringe.values()
    n = values.size
    taper = np.ones(n) if window == "none" else get_window("hann", n, fftbins=False)
    n_fft = n * pad_factor
    spectrum = np.fft.rfft(values * taper, n=n_fft)
    magnitude = 2.0 * np.abs(spectrum) / taper.sum()
    depth_axis = np.arange(spectrum.size) * spec.center_wavelength ** 2 / (n_fft * step)
    return DepthProfile(depth_axis=depth_axis, magnitude=magnitude)


def _half_max_crossing(axis: np.ndarray, values: np.ndarray, index: int, half: float, direction: int) -> float:
    j = index
    while 0 <= j + direction < values.size:
        nxt = j + direction
        if values[nxt] < half:
            fraction = (values[j] - half) / (values[j] - values[nxt])
            return float(axis[j] + fraction * (axis[nxt] - axis[j]))
        j = nxt
    # Ran off the axis: the visible extent ends at its edge
    return float(axis[j])


def detect_peaks(profile: DepthProfile, min_prominence: float = 0.1, fold_at_origin: bool = True) -> List[Peak]:
    """
    Local maxima whose prominence exceeds ``min_prominence`` times the global
    maximum. Positions are refined by parabolic interpolation and widths come
    from interpolated half-maximum crossings.
    """
    magnitude = np.asarray(profile.magnitude, dtype=float)
    axis = np.asarray(profile.depth_axis, dtype=float)
    if magnitude.size == 0 or magnitude.max() <= 0:
        return []

    if fold_at_origin and magnitude.size > 1:
        # The profile is even in depth; mirroring lets a peak sit at depth zero
        mirrored = np.concatenate([magnitude[:0:-1], magnitude])
        shift = magnitude.size - 1
    else:
        floor = magnitude.min() - magnitude.max()
        mirrored = np.concatenate([[floor], magnitude, [floor]])
        shift = 1
    candidates, _ = find_peaks(mirrored, prominence=min_prominence * magnitude.max())

    step = axis[1] - axis[0] if axis.size > 1 else 0.0
    peaks = []
    for candidate in candidates:
        i = int(candidate - shift)
        if i < 0 or i >= magnitude.size:
            continue
        position, amplitude = axis[i], magnitude[i]
        if 0 < i < magnitude.size - 1:
            left, right = magnitude[i - 1], magnitude[i + 1]
            curvature = left - 2.0 * amplitude + right
            if curvature < 0:
                delta = 0.5 * (left - right) / curvature
                position = axis[i] + delta * step
                amplitude = amplitude - 0.25 * (left - right) * delta
        half = 0.5 * amplitude
        width = _half_max_crossing(axis, magnitude, i, half, +1) - _half_max_crossing(axis, magnitude, i, half, -1)
        if width <= 0:
            width = abs(step)
        peaks.append(Peak(position=float(position), fwhm=float(width), amplitude=float(amplitude)))

    peaks.sort(key=lambda p: p.position)
    return peaks


def recover_thicknesses(positions: Sequence[float], group_indices: Sequence[float]) -> List[float]:
    """Geometric layer thicknesses from consecutive surface-peak spacings."""
    if len(positions) != len(group_indices) + 1:
        raise DomainError("need exactly one more surface peak than layers")
    return [(positions[k + 1] - positions[k]) / (2.0 * n_g) for k, n_g in enumerate(group_indices)]


def resolution_vs_delay(
    spec: SignalSpectrum,
    delays: Sequence[float],
    pad_factor: int = 8,
    window: str = "none",
) -> List[ResolutionPoint]:
    """
    Reconstruct a single mirror at each delay and measure the peak width and
    height. Near zero delay the folded images overlap and the peak narrows;
    near the Nyquist depth its height follows the roll-off.
    """
    # Fringe maximum at the matched delay so the zero-delay term survives
    cfg = ideal_config(lambda_s0=spec.center_wavelength, phi0=math.pi / 2)
    reference = envelope_reference(cfg, spec)
    resolution = axial_resolution_theory(spec)

    points = []
    for delay in delays:
        if abs(delay) > spec.nyquist_depth:
            raise DomainError(f"delay {delay!r} lies beyond the Nyquist depth {spec.nyquist_depth:.4e} m")
        fringe = synthesize_fd_fringe(cfg, [ReflectionPath(float(delay), 1.0 + 0j, 0)], spec)
        profile = fd_reconstruct(fringe, spec, window=window, reference=reference, pad_factor=pad_factor)
        peaks = detect_peaks(profile, min_prominence=0.2)
        nearest = min(peaks, key=lambda p: abs(p.position - abs(delay)), default=None)
        if nearest is None or abs(nearest.position - abs(delay)) > resolution:
            points.append(ResolutionPoint(float(delay), float("nan"), 0.0))
        else:
            points.append(ResolutionPoint(float(delay), nearest.fwhm, nearest.amplitude))
        logger.debug("delay %.4e m -> %s", delay, points[-1])
    return points


def to_counts(record: FringeRecord, det: DetectorModel, rate_scale: float) -> FringeRecord:
    """Expected rates of a record converted to mean counts per integration window."""
    return replace(record, expected=expected_counts(record.expected, det, rate_scale), sampled=None)


@dataclass(frozen=True)
class Scene:
    """An FD measurement: interferometer, sample paths, spectrum and count scale."""

    cfg: InterferometerConfig
    paths: Sequence[ReflectionPath]
    spec: SignalSpectrum
    rate_scale: float = 1e6
    window: str = "none"
    pad_factor: int = 1
    include_cross_terms: bool = False
    cross_term_weight: float = DEFAULT_CROSS_TERM_WEIGHT
    phase_model: str = "linear"

    def fringe(self) -> FringeRecord:
        return synthesize_fd_fringe(
            self.cfg, self.paths, self.spec,
            include_cross_terms=self.include_cross_terms,
            cross_term_weight=self.cross_term_weight,
            phase_model=self.phase_model,
        )

    def path_depths(self) -> np.ndarray:
        return np.abs(np.array([p.optical_roundtrip for p in self.paths]) + self.cfg.delay_mismatch)

    def counts_records(self, det: DetectorModel):
        """Mean-count fringe and idler-blocked reference for one integration window."""
        return (
            to_counts(self.fringe(), det, self.rate_scale),
            to_counts(envelope_reference(self.cfg, self.spec), det, self.rate_scale),
        )

    def measure(self, det: DetectorModel, stream: int = 0) -> DepthProfile:
        """One noisy FD acquisition, DC-subtracted and reconstructed."""
        counts, reference = self.counts_records(det)
        sampled = counts.with_samples(sample_counts(counts.expected, det, stream=stream))
        return fd_reconstruct(sampled, self.spec, window=self.window, reference=reference, pad_factor=self.pad_factor)


def snr_estimate(
    scene: Scene,
    det: DetectorModel,
    integration_times: Sequence[float],
    repeats: int = 20,
    target_depth: Optional[float] = None,
    noiseless: bool = False,
    threads: int = 1,
) -> List[SNRPoint]:
    """
    Power SNR (peak power at the target depth over the mean noise-floor power
    away from all reflections), averaged over repeated acquisitions.
    """
    if repeats < 10:
        raise DomainError(f"repeats must be >= 10, got {repeats!r}")
    depths = scene.path_depths()
    if target_depth is None:
        strongest = int(np.argmax([abs(p.amplitude) for p in scene.paths]))
        target_depth = float(depths[strongest])
    resolution = axial_resolution_theory(scene.spec)

    results = []
    for t_index, integration_time in enumerate(integration_times):
        det_t = det.with_integration_time(integration_time)
        counts, reference = scene.counts_records(det_t)

        def acquire(repeat: int) -> float:
            stream = t_index * repeats + repeat
            if noiseless:
                record = counts.with_samples(counts.expected)
            else:
                record = counts.with_samples(sample_counts(counts.expected, det_t, stream=stream))
            profile = fd_reconstruct(
                record, scene.spec, window=scene.window, reference=reference, pad_factor=scene.pad_factor
            )
            power = profile.magnitude ** 2
            peak = profile.value_near(target_depth, resolution / 2) ** 2
            if peak <= 0:
                raise UndefinedSNRError(f"no signal at target depth {target_depth:.4e} m")
            if noiseless:
                return float("inf")
            far = np.all(np.abs(profile.depth_axis[:, None] - depths[None, :]) > 3.0 * resolution, axis=1)
            noise = float(power[far].mean()) if np.any(far) else 0.0
            return float("inf") if noise == 0 else peak / noise

        values = parallel_map(acquire, list(range(repeats)), threads)
        snr = float(np.mean(values))
        logger.info("integration time %.4g s: SNR %.4g", integration_time, snr)
        results.append(SNRPoint(float(integration_time), snr))
    return results


def snr_slope(points: Sequence[SNRPoint]) -> float:
    """Least-squares slope of log SNR versus log integration time."""
    finite = [(t, s) for t, s in points if np.isfinite(s) and s > 0]
    if len(finite) < 2:
        raise UndefinedSNRError("need at least two finite SNR points for a slope")
    times, snrs = zip(*finite)
    slope, _ = np.polyfit(np.log10(times), np.log10(snrs), 1)
    return float(slope)
