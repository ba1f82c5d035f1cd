"""Seeded random processes: slow-fading channel gains and Poisson arrivals.

Every draw is addressed, not streamed: sample index (review index for the
channel, slot for arrivals) is fed into a counter-based generator, so
(seed, stream, index) fully determines each sample and processes can be
replayed or evaluated out of order. Weighted and unweighted runs with the
same seeds therefore see identical arrival and fading realizations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .network import Link

#: stream tags keep channel and arrival keys apart even under a shared seed
CHANNEL_STREAM = 0
ARRIVAL_STREAM = 1


def _philox_key(seed: int, stream: int) -> np.ndarray:
    return np.random.SeedSequence([int(seed), int(stream)]).generate_state(2, np.uint64)


def _rng_at(key: np.ndarray, index: int) -> np.random.Generator:
    """Generator positioned at a counter block reserved for ``index``.

    Blocks are spaced 2^128 counter steps apart, far beyond what one draw can
    consume, so different indices never see overlapping Philox output.
    """
    return np.random.Generator(np.random.Philox(key=key, counter=int(index) << 128))


def achievable_rate(gain, sigma2: float = 1.0):
    """Rate of a link with power gain ``gain`` over noise ``sigma2`` (natural log)."""
    return np.log1p(np.asarray(gain, dtype=float) / sigma2)


@dataclass
class ChannelState:
    """Per-link gains and rates, held fixed for one review period."""

    links: tuple[Link, ...]
    gains: np.ndarray
    rates: np.ndarray
    _pos: dict[Link, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self._pos:
            self._pos = {link: p for p, link in enumerate(self.links)}

    def gain(self, link: Link) -> float:
        return float(self.gains[self._pos[link]])

    def rate(self, link: Link) -> float:
        return float(self.rates[self._pos[link]])

    def position(self, link: Link) -> int:
        return self._pos[link]


class ChannelModel:
    """Truncated fading gains per link, redrawn i.i.d. each review period.

    ``gain_model``:
      * ``"power"``     -- power gain is exponential with the given mean
                           (squared-Rayleigh amplitude), the default reading;
      * ``"amplitude"`` -- the gain itself is Rayleigh with the given mean;
      * ``"fixed"``     -- degenerate channel, gains pinned at their means.

    Gains are capped at ``truncation_factor`` times the link mean so that
    rates stay bounded. ``fixed_rates`` pins the rate map directly (the gain
    is back-computed), which keeps integer floors exact in tests.
    """

    def __init__(
        self,
        links,
        mean_gain: dict[Link, float],
        sigma2: float = 1.0,
        truncation_factor: float = 10.0,
        gain_model: str = "power",
        seed: int = 0,
        stream: int = CHANNEL_STREAM,
        fixed_rates: Optional[dict[Link, float]] = None,
    ):
        if gain_model not in ("power", "amplitude", "fixed"):
            raise ValueError(f"unknown gain model {gain_model!r}")
        if sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")
        if truncation_factor <= 0:
            raise ValueError("truncation factor must be > 0")
        self.links = tuple(links)
        missing = [l for l in self.links if l not in mean_gain]
        if missing and fixed_rates is None:
            raise ValueError(f"no mean gain for links {missing}")
        self.sigma2 = float(sigma2)
        self.truncation_factor = float(truncation_factor)
        self.gain_model = gain_model
        self.seed = int(seed)
        self.stream = int(stream)
        self._key = _philox_key(seed, stream)
        self._fixed_rates = None
        if fixed_rates is not None:
            self._fixed_rates = np.array([float(fixed_rates[l]) for l in self.links])
            if np.any(self._fixed_rates < 0):
                raise ValueError("fixed rates must be >= 0")
            self.mean_gain = np.expm1(self._fixed_rates) * self.sigma2
            self.gain_model = "fixed"
        else:
            self.mean_gain = np.array([float(mean_gain[l]) for l in self.links])
            if np.any(self.mean_gain < 0):
                raise ValueError("mean gains must be >= 0")
        self.gain_cap = self.mean_gain * self.truncation_factor

    @property
    def max_rate(self) -> float:
        """Upper bound on any achievable rate under truncation."""
        if self._fixed_rates is not None:
            return float(self._fixed_rates.max(initial=0.0))
        if len(self.links) == 0:
            return 0.0
        return float(np.log1p(self.gain_cap.max() / self.sigma2))

    def draw(self, review_index: int) -> ChannelState:
        """Fresh i.i.d. gains for every link; same index -> same state."""
        if review_index < 0:
            raise ValueError("review index must be >= 0")
        if self.gain_model == "fixed":
            gains = self.mean_gain.copy()
            if self._fixed_rates is not None:
                return ChannelState(self.links, gains, self._fixed_rates.copy())
            return ChannelState(self.links, gains, achievable_rate(gains, self.sigma2))
        rng = _rng_at(self._key, review_index)
        if self.gain_model == "power":
            gains = rng.exponential(self.mean_gain)
        else:
            gains = rng.rayleigh(scale=self.mean_gain / np.sqrt(np.pi / 2.0))
        gains = np.minimum(gains, self.gain_cap)
        return ChannelState(self.links, gains, achievable_rate(gains, self.sigma2))


class ArrivalProcess:
    """Independent Poisson packet arrivals per (source node, flow), per slot.

    Counts are generated in fixed blocks of slots keyed by block index, so a
    slot's draw is a pure function of (seed, stream, slot) -- independent of
    the order in which slots are queried and of anything the controller does.
    """

    _BLOCK = 512

    def __init__(self, sources, rates, seed: int = 0, stream: int = ARRIVAL_STREAM):
        self.sources: tuple[tuple[int, int], ...] = tuple((int(i), int(f)) for i, f in sources)
        self.rates = np.asarray(rates, dtype=float)
        if self.rates.shape != (len(self.sources),):
            raise ValueError("one rate per (source, flow) required")
        if np.any(self.rates < 0):
            raise ValueError("arrival rates must be >= 0")
        self.seed = int(seed)
        self.stream = int(stream)
        self._key = _philox_key(seed, stream)
        self._block_index = -1
        self._block: Optional[np.ndarray] = None

    def draw(self, slot: int) -> np.ndarray:
        """Arrival counts aligned with ``sources``; same slot -> same counts."""
        if slot < 0:
            raise ValueError("slot must be >= 0")
        if len(self.sources) == 0:
            return np.zeros(0, dtype=np.int64)
        block, offset = divmod(slot, self._BLOCK)
        if block != self._block_index:
            rng = _rng_at(self._key, block)
            self._block = rng.poisson(self.rates, size=(self._BLOCK, len(self.sources)))
            self._block_index = block
        return self._block[offset]
