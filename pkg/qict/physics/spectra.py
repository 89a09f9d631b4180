"""
Frequency-domain fringes.

With all arm lengths fixed, each reflection path k at optical roundtrip D_k
imprints a sinusoid on the signal spectrum whose frequency in the relative
wavelength axis is D_k / lambda_s0^2. The record returned here is the expected
count rate versus relative signal wavelength, before detection noise.
"""
import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from qict.errors import AlignmentError, DomainError
from qict.physics.interferometer import (
    InterferometerConfig,
    fringe_offset,
    fringe_visibility,
    mean_signal_rate,
)
from qict.physics.sample import ReflectionPath

logger = logging.getLogger(__name__)

FOUR_LN2 = 4.0 * math.log(2.0)
DEFAULT_CROSS_TERM_WEIGHT = 0.25


class FringeKind(str, enum.Enum):
    FD = "FD"
    TD = "TD"
    PHASE = "PHASE"


class PhaseModel(str, enum.Enum):
    LINEAR = "linear"
    EXACT = "exact"


@dataclass(frozen=True)
class SignalSpectrum:
    center_wavelength: float = 810e-9
    fwhm: float = 2.9244e-9
    grid_step: float = 0.07e-9
    grid_span: float = 17.92e-9

    def __post_init__(self):
        if self.center_wavelength <= 0:
            raise DomainError("center wavelength must be positive")
        if self.fwhm <= 0:
            raise DomainError(f"spectral fwhm must be positive, got {self.fwhm!r}")
        if self.grid_step <= 0:
            raise DomainError(f"grid step must be positive, got {self.grid_step!r}")
        if self.grid_span < 4.0 * self.fwhm * (1 - 1e-9):
            raise DomainError("spectral grid must cover at least four times the fwhm")

    @classmethod
    def for_resolution(
        cls,
        resolution: float,
        center_wavelength: float = 810e-9,
        grid_step: float = 0.07e-9,
        points: int = 256,
    ) -> "SignalSpectrum":
        """
        Spectrum whose Gaussian envelope yields the given axial (amplitude)
        resolution. ``points`` is a minimum: finer resolutions widen the grid
        to keep four FWHM covered.
        """
        if resolution <= 0:
            raise DomainError(f"axial resolution must be positive, got {resolution!r}")
        fwhm = FOUR_LN2 / math.pi * center_wavelength ** 2 / resolution
        points = max(points, math.ceil(4.0 * fwhm / grid_step))
        return cls(center_wavelength=center_wavelength, fwhm=fwhm, grid_step=grid_step, grid_span=points * grid_step)

    @property
    def points(self) -> int:
        return int(round(self.grid_span / self.grid_step))

    @property
    def nyquist_depth(self) -> float:
        return self.center_wavelength ** 2 / (2.0 * self.grid_step)

    def relative_axis(self) -> np.ndarray:
        """Uniform relative-wavelength grid centered on lambda_s0 (meters)."""
        n = self.points
        return (np.arange(n) - n // 2) * self.grid_step

    def envelope(self, relative_wavelength: np.ndarray) -> np.ndarray:
        return np.exp(-FOUR_LN2 * (np.asarray(relative_wavelength) / self.fwhm) ** 2)


@dataclass(frozen=True)
class FringeRecord:
    scan_axis: np.ndarray
    expected: np.ndarray
    kind: FringeKind
    axis_unit: str
    sampled: Optional[np.ndarray] = None
    dc_subtracted: bool = False

    def __post_init__(self):
        axis = np.asarray(self.scan_axis, dtype=float)
        expected = np.asarray(self.expected, dtype=float)
        object.__setattr__(self, "scan_axis", axis)
        object.__setattr__(self, "expected", expected)
        object.__setattr__(self, "kind", FringeKind(self.kind))
        if self.sampled is not None:
            object.__setattr__(self, "sampled", np.asarray(self.sampled))
            if self.sampled.shape != axis.shape:
                raise DomainError("sampled counts must match the scan axis")
        if expected.shape != axis.shape:
            raise DomainError("expected values must match the scan axis")
        if axis.size > 1:
            steps = np.diff(axis)
            if not (np.all(steps > 0) or np.all(steps < 0)):
                raise DomainError("scan axis must be strictly monotone")
        if not self.dc_subtracted and np.any(expected < 0):
            raise DomainError("expected rates must be non-negative")

    def with_samples(self, sampled: np.ndarray) -> "FringeRecord":
        return replace(self, sampled=np.asarray(sampled))

    def values(self) -> np.ndarray:
        """Sampled counts when present, expected values otherwise."""
        return self.expected if self.sampled is None else np.asarray(self.sampled, dtype=float)


def rolloff_factor(depth: float, spec: SignalSpectrum) -> float:
    """Fringe washout from integrating over one rectangular spectral bin."""
    if depth < 0:
        raise DomainError(f"depth must be non-negative, got {depth!r}")
    return float(abs(np.sinc(depth * spec.grid_step / spec.center_wavelength ** 2)))


def _path_phases(depths: np.ndarray, axis: np.ndarray, spec: SignalSpectrum, phase_model: PhaseModel) -> np.ndarray:
    lam0 = spec.center_wavelength
    if phase_model is PhaseModel.EXACT:
        wavenumber_shift = 1.0 / (lam0 + axis) - 1.0 / lam0
    else:
        wavenumber_shift = -axis / lam0 ** 2
    return 2.0 * math.pi * np.outer(depths, wavenumber_shift)


def synthesize_fd_fringe(
    cfg: InterferometerConfig,
    paths: Sequence[ReflectionPath],
    spec: SignalSpectrum,
    include_cross_terms: bool = False,
    cross_term_weight: float = DEFAULT_CROSS_TERM_WEIGHT,
    phase_model: str = PhaseModel.LINEAR,
) -> FringeRecord:
    """
    Expected count rate versus relative signal wavelength for a sample in
    the idler arm.
    """
    if not paths:
        raise DomainError("at least one reflection path is required")
    phase_model = PhaseModel(phase_model)

    axis = spec.relative_axis()
    envelope = spec.envelope(axis)
    mean = mean_signal_rate(cfg)
    gamma = fringe_visibility(cfg)
    offset = cfg.phi + fringe_offset(cfg)

    depths = np.array([p.optical_roundtrip for p in paths]) + cfg.delay_mismatch
    amplitudes = np.array([p.amplitude for p in paths], dtype=complex)
    # Signed sinc is the exact bin average of a sinusoid
    rolloff = np.sinc(depths * spec.grid_step / spec.center_wavelength ** 2)
    phases = _path_phases(depths, axis, spec, phase_model)

    field_sum = ((amplitudes * rolloff)[:, None] * np.exp(1j * phases)).sum(axis=0)
    modulation = gamma * np.imag(np.exp(1j * offset) * field_sum)

    if include_cross_terms and len(paths) > 1:
        cross = np.zeros_like(axis)
        for j in range(len(paths)):
            for k in range(j + 1, len(paths)):
                separation = abs(depths[j] - depths[k])
                weight = np.sinc(separation * spec.grid_step / spec.center_wavelength ** 2)
                product = amplitudes[j] * np.conj(amplitudes[k])
                cross += weight * np.real(product * np.exp(1j * (phases[j] - phases[k])))
        modulation = modulation + gamma * cross_term_weight * cross

    expected = np.clip(mean * envelope * (1.0 + modulation), 0.0, None)
    logger.debug("synthesized FD fringe: %d points, %d paths", axis.size, len(paths))
    return FringeRecord(scan_axis=axis, expected=expected, kind=FringeKind.FD, axis_unit="relative_wavelength_m")


def envelope_reference(cfg: InterferometerConfig, spec: SignalSpectrum) -> FringeRecord:
    """Record measured with one idler path blocked: the spectrum without interference."""
    axis = spec.relative_axis()
    expected = mean_signal_rate(cfg) * spec.envelope(axis)
    return FringeRecord(scan_axis=axis, expected=expected, kind=FringeKind.FD, axis_unit="relative_wavelength_m")


def subtract_dc(fringe: FringeRecord, reference: FringeRecord) -> FringeRecord:
    """Pointwise difference of a fringe and its idler-blocked reference."""
    if fringe.scan_axis.shape != reference.scan_axis.shape or not np.allclose(
        fringe.scan_axis, reference.scan_axis, rtol=0, atol=1e-9 * np.max(np.abs(fringe.scan_axis), initial=1.0)
    ):
        raise AlignmentError("fringe and reference scan axes differ")

    sampled = None
    if fringe.sampled is not None:
        reference_values = reference.values()
        sampled = np.asarray(fringe.sampled, dtype=float) - reference_values
    return replace(
        fringe,
        expected=fringe.expected - reference.expected,
        sampled=sampled,
        dc_subtracted=True,
    )


def linearization_error(depth: float, spec: SignalSpectrum) -> float:
    """Largest phase deviation (cycles) between the exact and linearized fringe across the grid."""
    axis = spec.relative_axis()
    depths = np.array([depth])
    exact = _path_phases(depths, axis, spec, PhaseModel.EXACT)
    linear = _path_phases(depths, axis, spec, PhaseModel.LINEAR)
    return float(np.max(np.abs(exact - linear)) / (2.0 * math.pi))
