"""
Hybrid induced-coherence interferometer.

Two pair sources share one idler path: the idler of source 1 passes an
attenuator (eta_i) and is aligned onto the idler mode of source 2, while the
two signal beams meet on a 50:50 splitter after an attenuator (eta_s) in the
source-1 arm and a phase shifter (phi) in the source-2 arm. Counting signal
photons at one splitter output reveals a fringe whose contrast is set by the
idler overlap, although no idler photon is ever detected.

Two independent evaluations are provided: closed-form rate and visibility
expressions, and a mode-amplitude expansion of the final state followed by an
explicit trace over idler modes. The second serves as the oracle for the
first.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from qict.errors import DomainError, UndefinedVisibilityError
from qict.physics.pairsource import PairSourceParams

logger = logging.getLogger(__name__)

WAVELENGTH_TOLERANCE = 1e-6

SIGNAL_MODES = ("s1", "s2", "s3", "t1", "t2")
IDLER_MODES = ("i1", "i2", "i3", "j1", "j2")


@dataclass(frozen=True)
class InterferometerConfig:
    src1: PairSourceParams
    src2: PairSourceParams
    eta_s: float = 1.0
    eta_i: float = 1.0
    phi: float = 0.0
    phi0: float = 0.0
    tau0: float = 0.0
    tau1: float = 0.0
    tau2: float = 0.0
    lambda_s0: float = 810e-9
    lambda_i0: Optional[float] = None
    lambda_pump: Optional[float] = 532e-9
    merge_idlers: bool = True

    def __post_init__(self):
        for name in ("eta_s", "eta_i"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value!r}")

        # Two of the three wavelengths fix the third through energy conservation
        if self.lambda_i0 is None and self.lambda_pump is None:
            raise DomainError("either lambda_i0 or lambda_pump is required")
        if self.lambda_i0 is None:
            object.__setattr__(self, "lambda_i0", 1.0 / (1.0 / self.lambda_pump - 1.0 / self.lambda_s0))
        elif self.lambda_pump is None:
            object.__setattr__(self, "lambda_pump", 1.0 / (1.0 / self.lambda_s0 + 1.0 / self.lambda_i0))

        if min(self.lambda_s0, self.lambda_i0, self.lambda_pump) <= 0:
            raise DomainError("wavelengths must be positive")
        pump_freq = 1.0 / self.lambda_pump
        mismatch = abs(pump_freq - (1.0 / self.lambda_s0 + 1.0 / self.lambda_i0)) / pump_freq
        if mismatch > WAVELENGTH_TOLERANCE:
            raise DomainError(f"wavelengths violate energy conservation (relative mismatch {mismatch:.2e})")

    @property
    def delay_mismatch(self) -> float:
        """Idler-minus-signal path mismatch c(tau0 - (tau1 - tau2)) in meters; zero when matched."""
        return SPEED_OF_LIGHT * (self.tau0 - (self.tau1 - self.tau2))

    def with_delay_mismatch(self, mismatch: float) -> "InterferometerConfig":
        """Set tau0 so that ``delay_mismatch`` equals the given optical path (meters)."""
        return replace(self, tau0=mismatch / SPEED_OF_LIGHT + (self.tau1 - self.tau2))

    def replace(self, **changes) -> "InterferometerConfig":
        return replace(self, **changes)


class ModeTerm(NamedTuple):
    signal: str
    idler: str
    amplitude: complex
    source: int


@dataclass(frozen=True)
class ModeAmplitudeState:
    """Final two-photon state as a list of (signal mode, idler mode, amplitude) terms."""

    terms: Tuple[ModeTerm, ...]
    phi: float = 0.0

    def collect(self) -> Dict[Tuple[str, str], complex]:
        """Sum amplitudes of identical mode pairs."""
        merged: Dict[Tuple[str, str], complex] = {}
        for term in self.terms:
            key = (term.signal, term.idler)
            merged[key] = merged.get(key, 0j) + term.amplitude
        return merged

    def total_probability(self) -> float:
        return sum(abs(a) ** 2 for a in self.collect().values())


def _source2_phase(phi: float, phi0: float) -> complex:
    # -pi/2 turns the cosine cross term into the sin(phi + phi0) fringe
    return complex(np.exp(1j * (phi + phi0 - math.pi / 2)))


def expand_final_state(cfg: InterferometerConfig) -> ModeAmplitudeState:
    """
    Propagate both pair amplitudes through the attenuators, the phase shifter
    and the combining splitter, returning every nonzero product term.
    """
    c1, p1, q1, r1 = cfg.src1.c_gain, cfg.src1.p, cfg.src1.q, cfg.src1.r
    c2, p2, q2, r2 = cfg.src2.c_gain, cfg.src2.p, cfg.src2.q, cfg.src2.r
    sqrt_es, loss_es = math.sqrt(cfg.eta_s), math.sqrt(1.0 - cfg.eta_s)
    sqrt_ei, loss_ei = math.sqrt(cfg.eta_i), math.sqrt(1.0 - cfg.eta_i)
    half = 1.0 / math.sqrt(2.0)
    phase = _source2_phase(cfg.phi, cfg.phi0)
    idler2 = "i1" if cfg.merge_idlers else "i2"

    # Source-1 signal after the attenuator and splitter, idler after its attenuator
    signal1 = [("s1", sqrt_es * half), ("s2", sqrt_es * half), ("s3", loss_es)]
    idler1 = [("i1", sqrt_ei), ("i3", loss_ei)]
    # Source-2 signal picks up the phase shift and the splitter's minus sign
    signal2 = [("s1", phase * half), ("s2", -phase * half)]

    terms: List[ModeTerm] = []

    def add(signal: str, idler: str, amplitude: complex, source: int):
        if amplitude != 0:
            terms.append(ModeTerm(signal, idler, complex(amplitude), source))

    for s_mode, s_amp in signal1:
        for i_mode, i_amp in idler1:
            add(s_mode, i_mode, c1 * p1 * s_amp * i_amp, 1)
        add(s_mode, "j1", c1 * q1 * s_amp, 1)
    for i_mode, i_amp in idler1:
        add("t1", i_mode, c1 * r1 * i_amp, 1)

    for s_mode, s_amp in signal2:
        add(s_mode, idler2, c2 * p2 * s_amp, 2)
        add(s_mode, "j2", c2 * q2 * s_amp, 2)
    add("t2", idler2, c2 * r2, 2)

    logger.debug("expanded final state into %d terms", len(terms))
    return ModeAmplitudeState(terms=tuple(terms), phi=cfg.phi)


def signal_rate_oracle(state: ModeAmplitudeState, phi_applied: float, detector_mode: str = "s1") -> float:
    """
    Count rate at one splitter output: trace out the idler modes and project
    onto a single photon in ``detector_mode``.
    """
    shift = complex(np.exp(1j * (phi_applied - state.phi)))
    by_idler: Dict[str, complex] = {}
    for term in state.terms:
        if term.signal != detector_mode:
            continue
        amplitude = term.amplitude * shift if term.source == 2 else term.amplitude
        by_idler[term.idler] = by_idler.get(term.idler, 0j) + amplitude
    return float(sum(abs(a) ** 2 for a in by_idler.values()))


def mean_signal_rate(cfg: InterferometerConfig) -> float:
    """Phase-independent part of the output count rate."""
    s1, s2 = cfg.src1, cfg.src2
    return 0.5 * (
        abs(s1.c_gain * s1.p) ** 2 * cfg.eta_s
        + abs(s2.c_gain * s2.p) ** 2
        + abs(s1.c_gain * s1.q) ** 2 * cfg.eta_s
        + abs(s2.c_gain * s2.q) ** 2
    )


def interference_amplitude(cfg: InterferometerConfig) -> float:
    """Half the peak-to-peak fringe excursion of the output count rate."""
    if not cfg.merge_idlers:
        return 0.0
    s1, s2 = cfg.src1, cfg.src2
    return abs(s1.c_gain * s2.c_gain * s1.p * s2.p) * math.sqrt(cfg.eta_s) * math.sqrt(cfg.eta_i)


def fringe_offset(cfg: InterferometerConfig) -> float:
    """Constant fringe phase: phi0 plus the relative phase of the paired amplitudes."""
    s1, s2 = cfg.src1, cfg.src2
    return cfg.phi0 + float(np.angle(s2.c_gain * s2.p)) - float(np.angle(s1.c_gain * s1.p))


def signal_rate(cfg: InterferometerConfig, phi: Optional[float] = None) -> float:
    """Closed-form output count rate at phase setting ``phi`` (defaults to cfg.phi)."""
    phi = cfg.phi if phi is None else phi
    return mean_signal_rate(cfg) + interference_amplitude(cfg) * math.sin(phi + fringe_offset(cfg))


def fringe_visibility(cfg: InterferometerConfig) -> float:
    """Fringe contrast (max - min)/(max + min) of the output count rate."""
    s1, s2 = cfg.src1, cfg.src2
    denominator = (
        (abs(s1.p) ** 2 + abs(s1.q) ** 2) * abs(s1.c_gain) ** 2 * cfg.eta_s
        + (abs(s2.p) ** 2 + abs(s2.q) ** 2) * abs(s2.c_gain) ** 2
    )
    if denominator == 0:
        raise UndefinedVisibilityError("visibility undefined: no signal photons reach the detector")
    return 2.0 * interference_amplitude(cfg) / denominator


def oracle_visibility(cfg: InterferometerConfig, n_phases: int = 64) -> float:
    """Visibility from a uniform phase sweep of the trace oracle."""
    state = expand_final_state(cfg)
    phases = np.arange(n_phases) * (2.0 * math.pi / n_phases)
    rates = np.array([signal_rate_oracle(state, phi) for phi in phases])
    # The fringe is a pure first harmonic in phi
    spectrum = np.fft.rfft(rates)
    mean = spectrum[0].real / n_phases
    if mean <= 0:
        raise UndefinedVisibilityError("visibility undefined: oracle rate is zero at every phase")
    return float(2.0 * abs(spectrum[1]) / n_phases / mean)


def sweep_arm_loss(
    cfg: InterferometerConfig,
    arm: str,
    transmission_grid: Sequence[float],
    idler_double_pass: bool = False,
) -> List[Tuple[float, float]]:
    """
    Visibility versus the transmission of a filter placed in one arm.

    With ``idler_double_pass`` the idler filter is traversed twice (Michelson
    arm), so its effective power transmittance is T^2.
    """
    if arm not in ("signal", "idler"):
        raise DomainError(f"arm must be 'signal' or 'idler', got {arm!r}")

    results = []
    for transmission in transmission_grid:
        if not 0.0 <= transmission <= 1.0:
            raise DomainError(f"transmission must lie in [0, 1], got {transmission!r}")
        if arm == "signal":
            swept = cfg.replace(eta_s=transmission)
        else:
            eta_i = transmission ** 2 if idler_double_pass else transmission
            swept = cfg.replace(eta_i=eta_i)
        results.append((float(transmission), fringe_visibility(swept)))
    return results


def ideal_config(**overrides) -> InterferometerConfig:
    """Lossless, symmetric interferometer with unit heralding efficiencies."""
    src = PairSourceParams(c_gain=1 / math.sqrt(2), p=1 + 0j)
    return InterferometerConfig(src1=src, src2=src, **overrides)
