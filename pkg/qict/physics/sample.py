"""
Layered samples in the idler arm.

A stack is an ambient medium, an ordered list of layers and a substrate. The
light reflected back toward the interferometer is decomposed into discrete
reflection paths: every bounce sequence that enters from the ambient side and
leaves again, each with its Fresnel amplitude and its roundtrip optical path
(2 n_g d summed over every traversed section) measured from a reference plane.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

from qict.errors import DomainError, EnumerationLimitError

logger = logging.getLogger(__name__)

DEFAULT_MAX_ORDER = 2
DEFAULT_PATH_CAP = 20000
DEFAULT_CHROME_REFLECTIVITY = 0.9
AMPLITUDE_FLOOR = 1e-15


@dataclass(frozen=True)
class Layer:
    thickness: float
    group_index: float
    phase_index: Optional[float] = None

    def __post_init__(self):
        if self.thickness < 0:
            raise DomainError(f"layer thickness must be non-negative, got {self.thickness!r}")
        if self.phase_index is None:
            # Only group indices are known for the reference samples
            object.__setattr__(self, "phase_index", self.group_index)
        if self.group_index < 1 or self.phase_index < 1:
            raise DomainError("layer indices must be >= 1")

    @property
    def optical_roundtrip(self) -> float:
        return 2.0 * self.group_index * self.thickness


@dataclass(frozen=True)
class LayerStack:
    layers: Tuple[Layer, ...] = ()
    ambient_index: float = 1.0
    substrate_index: float = 1.0
    reference_plane_offset: float = 0.0
    # Overrides the Fresnel coefficient of the last interface (e.g. a metal coating)
    substrate_reflectivity: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.ambient_index < 1 or self.substrate_index < 1:
            raise DomainError("ambient and substrate indices must be >= 1")
        if self.substrate_reflectivity is not None and abs(self.substrate_reflectivity) > 1:
            raise DomainError("substrate reflectivity must have magnitude <= 1")
        if self.reference_plane_offset != self.reference_plane_offset or abs(self.reference_plane_offset) == float("inf"):
            raise DomainError("reference plane offset must be finite")

    @classmethod
    def mirror(cls, reflectivity: float = 1.0, reference_plane_offset: float = 0.0) -> "LayerStack":
        """A single reflecting surface."""
        return cls(substrate_reflectivity=reflectivity, reference_plane_offset=reference_plane_offset)

    @property
    def interface_count(self) -> int:
        return len(self.layers) + 1

    def phase_indices(self) -> List[float]:
        return [self.ambient_index] + [layer.phase_index for layer in self.layers] + [self.substrate_index]

    def interface_positions(self) -> List[float]:
        """Roundtrip optical path of each interface relative to the reference plane."""
        positions = [-self.reference_plane_offset]
        for layer in self.layers:
            positions.append(positions[-1] + layer.optical_roundtrip)
        return positions

    def shifted(self, delta: float) -> "LayerStack":
        return replace(self, reference_plane_offset=self.reference_plane_offset + delta)


class ReflectionPath(NamedTuple):
    optical_roundtrip: float
    amplitude: complex
    order: int


def fresnel_reflectivity(n_from: float, n_to: float) -> float:
    """Normal-incidence amplitude reflection coefficient."""
    if n_from < 1 or n_to < 1:
        raise DomainError("refractive indices must be >= 1")
    return (n_from - n_to) / (n_from + n_to)


def fresnel_transmissivity(n_from: float, n_to: float) -> float:
    """Normal-incidence amplitude transmission coefficient; t(a,b) t(b,a) = 1 - r^2."""
    if n_from < 1 or n_to < 1:
        raise DomainError("refractive indices must be >= 1")
    return 2.0 * n_from / (n_from + n_to)


def _interface_coefficients(stack: LayerStack):
    indices = stack.phase_indices()
    last = len(indices) - 2
    down_r, up_r, down_t, up_t = [], [], [], []
    for k in range(len(indices) - 1):
        n_above, n_below = indices[k], indices[k + 1]
        down_r.append(fresnel_reflectivity(n_above, n_below))
        up_r.append(fresnel_reflectivity(n_below, n_above))
        down_t.append(fresnel_transmissivity(n_above, n_below))
        up_t.append(fresnel_transmissivity(n_below, n_above))
    if stack.substrate_reflectivity is not None:
        down_r[last] = stack.substrate_reflectivity
    return down_r, up_r, down_t, up_t


def enumerate_paths(
    stack: LayerStack,
    max_order: int = DEFAULT_MAX_ORDER,
    path_cap: int = DEFAULT_PATH_CAP,
) -> List[ReflectionPath]:
    """
    Every bounce sequence with at most ``max_order`` internal roundtrips.

    A path with 2k+1 reflections has order k. Light transmitted into the
    substrate is lost. Paths are returned sorted by optical roundtrip.
    """
    if max_order < 0:
        raise DomainError(f"max_order must be >= 0, got {max_order!r}")

    down_r, up_r, down_t, up_t = _interface_coefficients(stack)
    section = [layer.optical_roundtrip / 2.0 for layer in stack.layers]
    last_interface = len(down_r) - 1
    max_reflections = 2 * max_order + 1
    paths: List[ReflectionPath] = []

    # Explicit stack of (interface, going_down, amplitude, optical path so far, reflections)
    # Each layer crossing adds n_g d, so a returning path holds the full roundtrip
    pending = [(0, True, 1.0 + 0j, 0.0, 0)]
    while pending:
        interface, going_down, amplitude, path, reflections = pending.pop()
        if abs(amplitude) < AMPLITUDE_FLOOR:
            continue

        if going_down:
            # Hitting interface k from medium k
            if reflections < max_reflections:
                # Reflect back up into medium k
                reflected = amplitude * down_r[interface]
                if interface == 0:
                    _record(paths, path, reflected, reflections + 1, stack, path_cap)
                else:
                    pending.append((interface - 1, False, reflected, path + section[interface - 1], reflections + 1))
            if interface < last_interface:
                # Transmit into layer k (index interface) and reach the next interface
                pending.append(
                    (interface + 1, True, amplitude * down_t[interface], path + section[interface], reflections)
                )
        else:
            # Hitting interface k from medium k+1, travelling up
            transmitted = amplitude * up_t[interface]
            if interface == 0:
                _record(paths, path, transmitted, reflections, stack, path_cap)
            else:
                pending.append((interface - 1, False, transmitted, path + section[interface - 1], reflections))
            if reflections < max_reflections:
                # Reflect down into medium k+1 and travel to interface k+1
                pending.append(
                    (interface + 1, True, amplitude * up_r[interface], path + section[interface], reflections + 1)
                )

    paths.sort(key=lambda p: (p.optical_roundtrip, p.order))
    logger.debug("enumerated %d reflection paths up to order %d", len(paths), max_order)
    return paths


def _record(paths: List[ReflectionPath], roundtrip: float, amplitude: complex, reflections: int,
            stack: LayerStack, path_cap: int):
    if abs(amplitude) < AMPLITUDE_FLOOR:
        return
    if len(paths) >= path_cap:
        raise EnumerationLimitError(
            f"reflection path enumeration exceeded the cap of {path_cap} paths; lower max_order"
        )
    paths.append(
        ReflectionPath(
            optical_roundtrip=roundtrip - stack.reference_plane_offset,
            amplitude=complex(amplitude),
            order=(reflections - 1) // 2,
        )
    )


def total_reflected_power(paths: Sequence[ReflectionPath]) -> float:
    """Incoherent sum of path powers."""
    return sum(abs(p.amplitude) ** 2 for p in paths)
