"""
Scenario documents.

A scenario is a JSON object in SI units (meters, seconds, radians). Numbers
must be plain JSON numbers: strict validation rejects strings such as "1mm".
"""
import math
from typing import Annotated, Callable, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from qict.errors import DomainError, QICTError, ScenarioValidationError
from qict.physics.detector import DetectorModel
from qict.physics.imaging import BeamProfile, ImagingSetup, PatternMask
from qict.physics.interferometer import InterferometerConfig
from qict.physics.pairsource import PairSourceParams, balanced_sources, from_efficiencies
from qict.physics.sample import Layer, LayerStack
from qict.physics.spectra import SignalSpectrum

ExperimentKind = Literal[
    "td-scan", "fd-scan", "phase-scan", "reconstruct",
    "visibility-sweep", "resolution-curve", "snr-curve", "image",
]

# Sections each experiment kind reads
REQUIRED_SECTIONS: Dict[str, Tuple[str, ...]] = {
    "td-scan": ("sample", "td_scan"),
    "fd-scan": ("sample",),
    "phase-scan": ("phase_scan",),
    "reconstruct": ("sample",),
    "visibility-sweep": ("visibility_sweep",),
    "resolution-curve": ("resolution_curve",),
    "snr-curve": ("sample", "snr_curve"),
    "image": ("imaging",),
}

# A complex amplitude: a real number or [re, im]
ComplexValue = Union[float, Annotated[List[float], Field(min_length=2, max_length=2)]]
Point = Annotated[List[float], Field(min_length=2, max_length=2)]


def _complex(value: ComplexValue) -> complex:
    return complex(value[0], value[1]) if isinstance(value, list) else complex(value)


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class SourceSection(Section):
    """Either measured heralding efficiencies or raw state amplitudes."""

    mu_s_to_i: Optional[float] = Field(None, gt=0, le=1)
    mu_i_to_s: Optional[float] = Field(None, gt=0, le=1)
    c_gain: ComplexValue = 1 / math.sqrt(2)
    p: Optional[ComplexValue] = None
    q: ComplexValue = 0.0
    r: ComplexValue = 0.0

    @model_validator(mode="after")
    def check_form(self):
        by_efficiency = self.mu_s_to_i is not None or self.mu_i_to_s is not None
        if by_efficiency and self.p is not None:
            raise ValueError("give either mu_s_to_i/mu_i_to_s or raw amplitudes p/q/r, not both")
        if by_efficiency and (self.mu_s_to_i is None or self.mu_i_to_s is None):
            raise ValueError("both mu_s_to_i and mu_i_to_s are required")
        try:
            self.to_params()
        except DomainError as exc:
            raise ValueError(exc.detail)
        return self

    def to_params(self) -> PairSourceParams:
        if self.mu_s_to_i is not None:
            return from_efficiencies(self.mu_s_to_i, self.mu_i_to_s, c_gain=_complex(self.c_gain))
        p = 1.0 if self.p is None else self.p
        return PairSourceParams(c_gain=_complex(self.c_gain), p=_complex(p), q=_complex(self.q), r=_complex(self.r))


class SourcesSection(Section):
    source1: SourceSection = Field(default_factory=SourceSection)
    source2: SourceSection = Field(default_factory=SourceSection)
    # Equal unattenuated signal brightness from both crystals
    balanced: bool = False

    def to_params(self) -> Tuple[PairSourceParams, PairSourceParams]:
        src1, src2 = self.source1.to_params(), self.source2.to_params()
        return balanced_sources(src1, src2) if self.balanced else (src1, src2)


class InterferometerSection(Section):
    eta_s: float = Field(1.0, ge=0, le=1)
    eta_i: float = Field(1.0, ge=0, le=1)
    phi: float = 0.0
    phi0: float = 0.0
    tau0: float = 0.0
    tau1: float = 0.0
    tau2: float = 0.0
    # Sets tau0 so that c(tau0 - (tau1 - tau2)) equals this path (meters)
    delay_mismatch: Optional[float] = None
    lambda_s0: float = Field(810e-9, gt=0)
    lambda_i0: Optional[float] = Field(None, gt=0)
    lambda_pump: Optional[float] = Field(532e-9, gt=0)
    merge_idlers: bool = True

    def to_config(self, sources: SourcesSection) -> InterferometerConfig:
        src1, src2 = sources.to_params()
        cfg = InterferometerConfig(
            src1=src1, src2=src2, eta_s=self.eta_s, eta_i=self.eta_i, phi=self.phi, phi0=self.phi0,
            tau0=self.tau0, tau1=self.tau1, tau2=self.tau2, lambda_s0=self.lambda_s0,
            lambda_i0=self.lambda_i0, lambda_pump=self.lambda_pump, merge_idlers=self.merge_idlers,
        )
        return cfg if self.delay_mismatch is None else cfg.with_delay_mismatch(self.delay_mismatch)


class SpectrumSection(Section):
    center_wavelength: float = Field(810e-9, gt=0)
    fwhm: Optional[float] = Field(None, gt=0)
    # Alternative to fwhm: the axial (amplitude) resolution to calibrate for
    axial_resolution: Optional[float] = Field(None, gt=0)
    grid_step: float = Field(0.07e-9, gt=0)
    points: int = Field(256, ge=16)

    @model_validator(mode="after")
    def check_width(self):
        if self.fwhm is not None and self.axial_resolution is not None:
            raise ValueError("give fwhm or axial_resolution, not both")
        return self

    def to_spectrum(self) -> SignalSpectrum:
        if self.axial_resolution is not None:
            return SignalSpectrum.for_resolution(self.axial_resolution, self.center_wavelength,
                                                 self.grid_step, self.points)
        width = {} if self.fwhm is None else {"fwhm": self.fwhm}
        return SignalSpectrum(
            center_wavelength=self.center_wavelength,
            grid_step=self.grid_step,
            grid_span=self.points * self.grid_step,
            **width,
        )


class LayerSection(Section):
    thickness: float = Field(..., ge=0)
    group_index: float = Field(..., ge=1)
    phase_index: Optional[float] = Field(None, ge=1)
    label: str = ""


class SampleSection(Section):
    layers: List[LayerSection] = Field(default_factory=list)
    ambient_index: float = Field(1.0, ge=1)
    substrate_index: float = Field(1.0, ge=1)
    reference_plane_offset: float = 0.0
    substrate_reflectivity: Optional[float] = Field(None, ge=-1, le=1)
    max_order: int = Field(2, ge=0)
    path_cap: int = Field(20000, ge=1)

    def to_stack(self) -> LayerStack:
        return LayerStack(
            layers=tuple(Layer(l.thickness, l.group_index, l.phase_index) for l in self.layers),
            ambient_index=self.ambient_index,
            substrate_index=self.substrate_index,
            reference_plane_offset=self.reference_plane_offset,
            substrate_reflectivity=self.substrate_reflectivity,
        )


class DetectorSection(Section):
    efficiency: float = Field(1.0, ge=0, le=1)
    dark_rate: float = Field(0.0, ge=0)
    integration_time: float = Field(1.0, gt=0)
    # Counts per second per unit of the normalized signal rate
    rate_scale: float = Field(1e6, ge=0)
    noiseless: bool = False

    def to_detector(self, seed: int) -> DetectorModel:
        return DetectorModel(self.efficiency, self.dark_rate, self.integration_time, rng_seed=seed)


class ReconstructionSection(Section):
    window: Literal["none", "hann"] = "none"
    pad_factor: int = Field(1, ge=1)
    min_prominence: float = Field(0.1, ge=0, le=1)
    include_cross_terms: bool = False
    cross_term_weight: float = Field(0.25, ge=0)
    phase_model: Literal["linear", "exact"] = "linear"


class GridSection(Section):
    start: float
    stop: float
    points: int = Field(..., ge=2)

    @model_validator(mode="after")
    def check_order(self):
        if self.stop <= self.start:
            raise ValueError("stop must exceed start")
        return self

    def values(self) -> List[float]:
        step = (self.stop - self.start) / (self.points - 1)
        return [self.start + k * step for k in range(self.points)]


class VisibilitySweepSection(Section):
    arm: Literal["signal", "idler"]
    transmissions: List[Annotated[float, Field(ge=0, le=1)]] = Field(..., min_length=2)
    idler_double_pass: bool = False


class ResolutionCurveSection(Section):
    delays: List[float] = Field(..., min_length=1)


class SNRCurveSection(Section):
    integration_times: List[Annotated[float, Field(gt=0)]] = Field(..., min_length=2)
    repeats: int = Field(20, ge=10)
    target_depth: Optional[float] = Field(None, ge=0)


class BeamSection(Section):
    fwhm_x: float = Field(..., gt=0)
    fwhm_y: float = Field(..., gt=0)


class MaskSection(Section):
    type: Literal["uniform", "half_plane", "three_bars"]
    value: float = Field(1.0, ge=0, le=1)
    edge: float = 0.0
    axis: Literal["x", "y"] = "x"
    reflective_side: Literal["positive", "negative"] = "positive"
    bar_width: Optional[float] = Field(None, gt=0)
    bar_length: Optional[float] = Field(None, gt=0)
    negative: bool = True
    origin: Point = Field(default_factory=lambda: [0.0, 0.0])

    @model_validator(mode="after")
    def check_bars(self):
        if self.type == "three_bars" and (self.bar_width is None or self.bar_length is None):
            raise ValueError("three_bars needs bar_width and bar_length")
        return self

    def to_mask(self) -> PatternMask:
        if self.type == "uniform":
            mask = PatternMask.uniform(self.value)
        elif self.type == "half_plane":
            mask = PatternMask.half_plane(self.edge, self.axis, self.reflective_side)
        else:
            mask = PatternMask.three_bars(self.bar_width, self.bar_length, self.axis, self.negative)
        return mask.moved(self.origin[0], self.origin[1])


class RegionsSection(Section):
    present: SampleSection
    absent: Optional[SampleSection] = None


class ImagingSection(Section):
    beam: BeamSection
    mask: MaskSection
    regions: RegionsSection
    step: float = Field(..., gt=0)
    nx: int = Field(64, ge=1)
    ny: int = Field(64, ge=1)
    scan_origin: Point = Field(default_factory=lambda: [0.0, 0.0])
    depth_select: float = Field(..., ge=0)
    coupling: Literal["confocal", "f_squared", "linear"] = "confocal"
    full_pipeline: bool = True
    points_per_fwhm: int = Field(32, ge=8)
    # Fit an edge response along this axis and report the line spread function
    edge_axis: Optional[Literal["x", "y"]] = None

    def to_beam(self) -> BeamProfile:
        return BeamProfile(self.beam.fwhm_x, self.beam.fwhm_y)


class Scenario(Section):
    name: str = Field(..., min_length=1)
    description: str = ""
    kind: ExperimentKind
    seed: int = Field(0, ge=0, lt=2 ** 64)
    sources: SourcesSection = Field(default_factory=SourcesSection)
    interferometer: InterferometerSection = Field(default_factory=InterferometerSection)
    spectrum: SpectrumSection = Field(default_factory=SpectrumSection)
    sample: Optional[SampleSection] = None
    detector: DetectorSection = Field(default_factory=DetectorSection)
    reconstruction: ReconstructionSection = Field(default_factory=ReconstructionSection)
    td_scan: Optional[GridSection] = None
    phase_scan: Optional[GridSection] = None
    visibility_sweep: Optional[VisibilitySweepSection] = None
    resolution_curve: Optional[ResolutionCurveSection] = None
    snr_curve: Optional[SNRCurveSection] = None
    imaging: Optional[ImagingSection] = None
    output_dir: Optional[str] = None

    @field_validator("name")
    @classmethod
    def validate_name(cls, v):
        if any(ch in v for ch in "/\\"):
            raise ValueError("name must not contain path separators")
        return v

    @model_validator(mode="after")
    def check_sections(self):
        missing = [s for s in REQUIRED_SECTIONS[self.kind] if getattr(self, s) is None]
        if missing:
            raise ValueError(f"kind {self.kind!r} requires section(s): {', '.join(missing)}")
        return self

    def to_config(self) -> InterferometerConfig:
        return self.interferometer.to_config(self.sources)

    def imaging_setup(self, threads: int = 1) -> ImagingSetup:
        section = self.imaging
        return ImagingSetup(
            cfg=self.to_config(),
            spec=self.spectrum.to_spectrum(),
            coupling=section.coupling,
            max_order=section.regions.present.max_order,
            pad_factor=self.reconstruction.pad_factor,
            window=self.reconstruction.window,
            points_per_fwhm=section.points_per_fwhm,
            rate_scale=self.detector.rate_scale,
            detector=None if self.detector.noiseless else self.detector.to_detector(self.seed),
            full_pipeline=section.full_pipeline,
            threads=threads,
        )


def _physics_checks(scenario: Scenario) -> List[Tuple[str, Callable[[], object]]]:
    checks = [
        ("interferometer", scenario.to_config),
        ("spectrum", scenario.spectrum.to_spectrum),
        ("detector", lambda: scenario.detector.to_detector(scenario.seed)),
    ]
    if scenario.sample is not None:
        checks.append(("sample", scenario.sample.to_stack))
    if scenario.imaging is not None:
        checks.append(("imaging.beam", scenario.imaging.to_beam))
        checks.append(("imaging.regions.present", scenario.imaging.regions.present.to_stack))
        if scenario.imaging.regions.absent is not None:
            checks.append(("imaging.regions.absent", scenario.imaging.regions.absent.to_stack))
    return checks


def validate_scenario(document: dict) -> Scenario:
    """
    Validate a parsed scenario document, then build every physics object it
    describes so module invariants are enforced before anything runs.
    """
    try:
        scenario = Scenario.model_validate(document)
    except ValidationError as exc:
        error = exc.errors()[0]
        field = ".".join(str(part) for part in error["loc"])
        raise ScenarioValidationError(error["msg"], field=field)

    for field, build in _physics_checks(scenario):
        try:
            build()
        except QICTError as exc:
            raise ScenarioValidationError(exc.detail, field=field)
    return scenario
