"""
Photon-pair source amplitudes and heralding efficiencies.

One SPDC crystal emits the state C (p s i + q s j + r t i)|0>, where s/i are
the major signal/idler modes and t/j collect unpaired photons. Amplitudes are
normalized per source (|p|^2 + |q|^2 + |r|^2 = 1) so that the overall
brightness lives entirely in ``c_gain``.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Tuple

from qict.errors import DomainError, UndefinedEfficiencyError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PairSourceParams:
    c_gain: complex
    p: complex
    q: complex = 0j
    r: complex = 0j

    def __post_init__(self):
        norm = abs(self.p) ** 2 + abs(self.q) ** 2 + abs(self.r) ** 2
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"pair amplitudes must satisfy |p|^2+|q|^2+|r|^2=1, got {norm!r}")

    @property
    def brightness(self) -> float:
        """Unattenuated signal emission |C|^2 (|p|^2 + |q|^2)"""
        return abs(self.c_gain) ** 2 * (abs(self.p) ** 2 + abs(self.q) ** 2)

    def with_gain(self, c_gain: complex) -> "PairSourceParams":
        return replace(self, c_gain=c_gain)


def heralding_efficiencies(src: PairSourceParams) -> Tuple[float, float]:
    """
    Return (mu_s_to_i, mu_i_to_s): the probability that a detected signal
    (idler) photon heralds its twin in the major idler (signal) mode.
    """
    p2 = abs(src.p) ** 2
    signal_total = p2 + abs(src.q) ** 2
    idler_total = p2 + abs(src.r) ** 2
    if signal_total == 0 or idler_total == 0:
        raise UndefinedEfficiencyError("heralding efficiency undefined for a source without paired emission")
    return p2 / signal_total, p2 / idler_total


def from_efficiencies(
    mu_s_to_i: float,
    mu_i_to_s: float,
    c_gain: complex = 1 / math.sqrt(2),
) -> PairSourceParams:
    """Build zero-phase source amplitudes reproducing the given efficiencies."""
    for name, mu in (("mu_s_to_i", mu_s_to_i), ("mu_i_to_s", mu_i_to_s)):
        if not 0 < mu <= 1:
            raise DomainError(f"{name} must lie in (0, 1], got {mu!r}")

    # |q|^2 and |r|^2 relative to |p|^2, then normalize
    q_rel = 1.0 / mu_s_to_i - 1.0
    r_rel = 1.0 / mu_i_to_s - 1.0
    p2 = 1.0 / (1.0 + q_rel + r_rel)
    q2 = p2 * q_rel
    r2 = 1.0 - p2 - q2

    return PairSourceParams(
        c_gain=c_gain,
        p=complex(math.sqrt(p2)),
        q=complex(math.sqrt(q2)),
        r=complex(math.sqrt(max(r2, 0.0))),
    )


def balanced_sources(src1: PairSourceParams, src2: PairSourceParams) -> Tuple[PairSourceParams, PairSourceParams]:
    """
    Rescale the gains so both sources give the same unattenuated signal
    brightness, keeping |C1|^2 + |C2|^2 = 1.
    """
    w1 = abs(src1.p) ** 2 + abs(src1.q) ** 2
    w2 = abs(src2.p) ** 2 + abs(src2.q) ** 2
    if w1 == 0 or w2 == 0:
        raise UndefinedEfficiencyError("cannot balance a source that emits no signal photons")

    # |C1|^2 w1 = |C2|^2 w2 with |C1|^2 + |C2|^2 = 1
    c1_sq = w2 / (w1 + w2)
    c2_sq = w1 / (w1 + w2)
    logger.debug("balanced gains |C1|^2=%.6f |C2|^2=%.6f", c1_sq, c2_sq)
    return src1.with_gain(math.sqrt(c1_sq)), src2.with_gain(math.sqrt(c2_sq))
