"""
Photon counting.

Expected rates (in the proportional units of the interferometer model) are
turned into mean counts, then into Poisson draws. Draws are generated in
fixed-size index blocks, each from its own generator seeded with
(seed, stream, block), so the result never depends on how blocks are
distributed over worker threads.
"""
import logging
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from qict.errors import DomainError
from qict.utils import parallel_map

logger = logging.getLogger(__name__)

SAMPLING_BLOCK = 1024

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dark_rate: float = 0.0
    integration_time: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise DomainError(f"detector efficiency must lie in [0, 1], got {self.efficiency!r}")
        if self.dark_rate < 0:
            raise DomainError(f"dark rate must be non-negative, got {self.dark_rate!r}")
        if self.integration_time <= 0:
            raise DomainError(f"integration time must be positive, got {self.integration_time!r}")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise DomainError("rng_seed must be a 64-bit unsigned integer")

    def with_integration_time(self, integration_time: float) -> "DetectorModel":
        return replace(self, integration_time=integration_time)


def expected_counts(rate: ArrayLike, det: DetectorModel, rate_scale: float) -> ArrayLike:
    """Mean counts in one integration window: (rate * scale * efficiency + dark) * T."""
    values = np.asarray(rate, dtype=float)
    if np.any(values < 0):
        raise DomainError("count rates must be non-negative")
    if rate_scale < 0:
        raise DomainError("rate_scale must be non-negative")
    means = (values * rate_scale * det.efficiency + det.dark_rate) * det.integration_time
    return float(means) if means.ndim == 0 else means


def _block_generator(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, block]))


def sample_counts(means, det: DetectorModel, stream: int = 0, threads: int = 1) -> np.ndarray:
    """Independent Poisson draws, reproducible from (rng_seed, stream, index)."""
    means = np.asarray(means, dtype=float)
    if np.any(means < 0):
        raise DomainError("mean counts must be non-negative")

    flat = means.ravel()
    counts = np.empty(flat.shape, dtype=np.int64)
    starts = range(0, flat.size, SAMPLING_BLOCK)

    def draw(start: int):
        stop = min(start + SAMPLING_BLOCK, flat.size)
        rng = _block_generator(det.rng_seed, stream, start // SAMPLING_BLOCK)
        counts[start:stop] = rng.poisson(flat[start:stop])

    parallel_map(draw, list(starts), threads)
    return counts.reshape(means.shape)
