"""
Transverse raster imaging.

A focused idler spot (elliptical Gaussian intensity) illuminates a patterned
sample. The fraction of the spot that lands on each region of the pattern
scales that region's reflection paths, then every pixel runs the FD pipeline
and reads the depth profile at a selected peak.

Coupling of a region back into the collecting mode:

* ``confocal``  reflectivity weighted by illumination x collection intensity
                (I^2), the point-spread form of the f^2 return law
* ``f_squared`` square of the intensity overlap fraction f
* ``linear``    f itself
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import erf

from qict.errors import DomainError, FitError, RangeError
from qict.physics.detector import DetectorModel
from qict.physics.interferometer import InterferometerConfig
from qict.physics.sample import LayerStack, ReflectionPath, enumerate_paths
from qict.physics.spectra import SignalSpectrum, envelope_reference, rolloff_factor
from qict.physics.tomography import Scene, axial_resolution_theory, fd_reconstruct
from qict.utils import parallel_map

logger = logging.getLogger(__name__)

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
COUPLINGS = ("confocal", "f_squared", "linear")
QUADRATURE_HALF_SPAN = 3.0  # in FWHM

MaskMap = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BeamProfile:
    fwhm_x: float
    fwhm_y: float

    def __post_init__(self):
        if self.fwhm_x <= 0 or self.fwhm_y <= 0:
            raise DomainError("beam FWHM must be positive along both axes")


@dataclass(frozen=True)
class PatternMask:
    """Reflecting-region indicator m(x, y) in [0, 1], defined relative to ``origin``."""

    reflectivity_map: MaskMap
    extent: Tuple[float, float]
    description: str = ""
    origin: Tuple[float, float] = (0.0, 0.0)

    def local(self, x_local, y_local) -> np.ndarray:
        values = np.asarray(self.reflectivity_map(np.asarray(x_local), np.asarray(y_local)), dtype=float)
        return np.clip(np.broadcast_to(values, np.broadcast(x_local, y_local).shape), 0.0, 1.0)

    def __call__(self, x, y) -> np.ndarray:
        return self.local(np.asarray(x) - self.origin[0], np.asarray(y) - self.origin[1])

    def moved(self, dx: float, dy: float) -> "PatternMask":
        return PatternMask(self.reflectivity_map, self.extent, self.description,
                           (self.origin[0] + dx, self.origin[1] + dy))

    @classmethod
    def uniform(cls, value: float = 1.0, extent: Tuple[float, float] = (1e-3, 1e-3)) -> "PatternMask":
        return cls(lambda x, y: np.full(np.broadcast(x, y).shape, value), extent, f"uniform {value}")

    @classmethod
    def half_plane(cls, edge: float = 0.0, axis: str = "x", reflective_side: str = "positive",
                   extent: Tuple[float, float] = (1e-3, 1e-3)) -> "PatternMask":
        if axis not in ("x", "y") or reflective_side not in ("positive", "negative"):
            raise DomainError("half-plane needs axis in {x, y} and side in {positive, negative}")

        def reflect(x, y):
            coord = x if axis == "x" else y
            inside = coord >= edge if reflective_side == "positive" else coord < edge
            return np.broadcast_to(inside, np.broadcast(x, y).shape).astype(float)

        return cls(reflect, extent, f"half-plane edge at {axis}={edge:g}")

    @classmethod
    def three_bars(cls, bar_width: float, bar_length: float, axis: str = "x", negative: bool = True,
                   extent: Tuple[float, float] = (1e-3, 1e-3)) -> "PatternMask":
        """
        USAF-style group of three bars, each ``bar_width`` wide and spaced by
        one bar width, centered on the origin. ``negative`` leaves the bars
        uncoated on a reflecting background.
        """
        if bar_width <= 0 or bar_length <= 0:
            raise DomainError("bar dimensions must be positive")
        centers = (-2.0 * bar_width, 0.0, 2.0 * bar_width)

        def reflect(x, y):
            across, along = (x, y) if axis == "x" else (y, x)
            in_bar = np.zeros(np.broadcast(x, y).shape, dtype=bool)
            for center in centers:
                in_bar |= (np.abs(across - center) < bar_width / 2) & (np.abs(along) < bar_length / 2)
            return (~in_bar if negative else in_bar).astype(float)

        return cls(reflect, extent, f"three bars, width {bar_width:g} m")


@dataclass(frozen=True)
class ScanImage:
    pixels: np.ndarray
    step: float
    origin: Tuple[float, float] = (0.0, 0.0)

    def line(self, row: Optional[int] = None, axis: str = "x") -> List[Tuple[float, float]]:
        """(position, amplitude) pairs along one row (axis x) or column (axis y)."""
        ny, nx = self.pixels.shape
        if axis == "x":
            row = ny // 2 if row is None else row
            return [(self.origin[0] + i * self.step, float(self.pixels[row, i])) for i in range(nx)]
        row = nx // 2 if row is None else row
        return [(self.origin[1] + j * self.step, float(self.pixels[j, row])) for j in range(ny)]


def _quadrature(beam: BeamProfile, points_per_fwhm: int, power: int):
    if points_per_fwhm < 8:
        raise DomainError("overlap quadrature needs at least 8 points per FWHM")
    spacing = min(beam.fwhm_x, beam.fwhm_y) / points_per_fwhm
    # I^power narrows the spot by sqrt(power)
    half_x = math.ceil(QUADRATURE_HALF_SPAN * beam.fwhm_x / math.sqrt(power) / spacing)
    half_y = math.ceil(QUADRATURE_HALF_SPAN * beam.fwhm_y / math.sqrt(power) / spacing)
    # Cell midpoints: no sample sits on the spot axis
    u = (np.arange(-half_x, half_x) + 0.5) * spacing
    v = (np.arange(-half_y, half_y) + 0.5) * spacing
    uu, vv = np.meshgrid(u, v)
    intensity = np.exp(-4.0 * math.log(2.0) * ((uu / beam.fwhm_x) ** 2 + (vv / beam.fwhm_y) ** 2))
    weights = intensity ** power
    return uu, vv, weights / weights.sum()


def _local_overlap(mask: PatternMask, quadrature, local_x: float, local_y: float) -> float:
    uu, vv, weights = quadrature
    return float(np.sum(weights * mask.local(local_x + uu, local_y + vv)))


def overlap_fraction(beam: BeamProfile, mask: PatternMask, center: Tuple[float, float],
                     points_per_fwhm: int = 32, power: int = 1) -> float:
    """
    Fraction of the spot intensity (or of I^power) centered at ``center``
    that falls on the reflecting region of the mask.
    """
    quadrature = _quadrature(beam, points_per_fwhm, power)
    return _local_overlap(mask, quadrature, center[0] - mask.origin[0], center[1] - mask.origin[1])


@dataclass(frozen=True)
class ImagingSetup:
    cfg: InterferometerConfig
    spec: SignalSpectrum
    coupling: str = "confocal"
    max_order: int = 2
    pad_factor: int = 4
    window: str = "none"
    points_per_fwhm: int = 32
    rate_scale: float = 1e6
    detector: Optional[DetectorModel] = None
    full_pipeline: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.coupling not in COUPLINGS:
            raise DomainError(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")


def _couplings(coupling: str, quadrature, mask: PatternMask, lx: float, ly: float) -> Tuple[float, float]:
    covered = _local_overlap(mask, quadrature, lx, ly)
    if coupling == "f_squared":
        return covered ** 2, (1.0 - covered) ** 2
    return covered, 1.0 - covered


def scan_image(
    stacks_by_region: Mapping[str, Optional[LayerStack]],
    mask: PatternMask,
    beam: BeamProfile,
    step: float,
    depth_select: float,
    setup: ImagingSetup,
    shape: Tuple[int, int] = (64, 64),
    scan_origin: Tuple[float, float] = (0.0, 0.0),
) -> ScanImage:
    """
    Raster the spot over ``shape`` = (ny, nx) pixels and image the reflection
    at ``depth_select``. ``stacks_by_region`` maps ``present`` (mask = 1) and
    optionally ``absent`` (mask = 0) to the layer stacks found there.
    """
    if step <= 0:
        raise DomainError(f"scan step must be positive, got {step!r}")
    if not 0 <= depth_select <= setup.spec.nyquist_depth:
        raise RangeError(f"depth_select {depth_select!r} lies outside [0, {setup.spec.nyquist_depth:.4e}] m")
    if "present" not in stacks_by_region or stacks_by_region["present"] is None:
        raise DomainError("stacks_by_region needs a 'present' stack")

    region_paths: Dict[str, List[ReflectionPath]] = {
        region: enumerate_paths(stack, setup.max_order)
        for region, stack in stacks_by_region.items()
        if stack is not None and region in ("present", "absent")
    }
    power = 2 if setup.coupling == "confocal" else 1
    quadrature = _quadrature(beam, setup.points_per_fwhm, power)
    resolution = axial_resolution_theory(setup.spec)
    reference = envelope_reference(setup.cfg, setup.spec)

    ny, nx = shape
    # Mask-local scan coordinates; translating mask and scan together cancels here
    rel_x = scan_origin[0] - mask.origin[0]
    rel_y = scan_origin[1] - mask.origin[1]

    def pixel(index: int) -> float:
        j, i = divmod(index, nx)
        present, absent = _couplings(setup.coupling, quadrature, mask, rel_x + i * step, rel_y + j * step)
        scaled = [ReflectionPath(p.optical_roundtrip, p.amplitude * present, p.order)
                  for p in region_paths["present"]]
        scaled += [ReflectionPath(p.optical_roundtrip, p.amplitude * absent, p.order)
                   for p in region_paths.get("absent", [])]
        if not setup.full_pipeline:
            return _analytic_amplitude(scaled, setup, depth_select, resolution)
        scene = Scene(setup.cfg, scaled, setup.spec, rate_scale=setup.rate_scale,
                      window=setup.window, pad_factor=setup.pad_factor)
        if setup.detector is not None:
            profile = scene.measure(setup.detector, stream=index)
        else:
            profile = fd_reconstruct(scene.fringe(), setup.spec, window=setup.window,
                                     reference=reference, pad_factor=setup.pad_factor)
        return profile.value_near(depth_select, resolution / 2)

    values = parallel_map(pixel, list(range(nx * ny)), setup.threads)

    logger.info("scanned %dx%d pixels at depth %.4e m", nx, ny, depth_select)
    return ScanImage(pixels=np.array(values).reshape(ny, nx), step=step, origin=scan_origin)


def _analytic_amplitude(paths: Sequence[ReflectionPath], setup: ImagingSetup,
                        depth_select: float, resolution: float) -> float:
    near = [
        p for p in paths
        if abs(abs(p.optical_roundtrip + setup.cfg.delay_mismatch) - depth_select) <= resolution / 2
    ]
    return float(sum(
        abs(p.amplitude) * rolloff_factor(abs(p.optical_roundtrip + setup.cfg.delay_mismatch), setup.spec)
        for p in near
    ))


def _edge_model(x, amplitude, baseline, center, width):
    return baseline + amplitude * 0.5 * (1.0 + erf((x - center) / (math.sqrt(2.0) * width)))


def edge_response_fwhm(image_line: Sequence[Tuple[float, float]]) -> float:
    """
    Fit an error-function edge to (position, amplitude) samples and return the
    FWHM of its derivative, the line spread function.
    """
    if len(image_line) < 4:
        raise FitError("edge fit needs at least four samples")
    x, y = (np.asarray(v, dtype=float) for v in zip(*sorted(image_line)))
    span = float(y.max() - y.min())
    if span <= 1e-12 * max(float(np.abs(y).max()), 1e-300):
        raise FitError("no edge transition in the line")

    first, last = y[: max(1, y.size // 8)].mean(), y[-max(1, y.size // 8):].mean()
    midpoint = 0.5 * (first + last)
    center_guess = x[int(np.argmin(np.abs(y - midpoint)))]
    guess = (last - first, first, center_guess, (x[-1] - x[0]) / 10.0)
    try:
        params, _ = curve_fit(_edge_model, x, y, p0=guess, maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"edge fit did not converge: {exc}") from exc

    width = abs(float(params[3]))
    if not np.isfinite(width) or width == 0:
        raise FitError("edge fit returned a degenerate width")
    return FWHM_PER_SIGMA * width


def bar_modulation(values: Sequence[float]) -> float:
    """Michelson contrast (max - min)/(max + min) of a profile across bars."""
    values = np.asarray(values, dtype=float)
    high, low = float(values.max()), float(values.min())
    return 0.0 if high + low == 0 else (high - low) / (high + low)
