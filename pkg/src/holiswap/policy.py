"""Hot-line detection: per-set epoch counters and per-line hit counters.

Counters are stored per physical way and move with their line on a swap.
Two representations are supported:

* ``exact``: plain integers clamped at the epoch length.
* ``logarithmic``: a base-2 exponent per counter (``-1`` encodes zero).
  The first increment sets the exponent to 0 (value 1); afterwards an
  increment advances exponent ``e`` with probability ``2**-e``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

EXACT = "exact"
LOGARITHMIC = "logarithmic"
ZERO = -1
MAX_EXPONENT = 15
RNG_ALGORITHM = "PCG64"

_MODE_ALIASES = {"exact": EXACT, "log": LOGARITHMIC, "logarithmic": LOGARITHMIC}


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[str(mode).lower()]
    except KeyError:
        raise ValueError(f"unknown counter mode {mode!r}") from None


def _log2(n: int) -> int:
    return n.bit_length() - 1


@dataclass(frozen=True)
class PolicyConfig:
    epoch_len: int = 256
    threshold: int = 128
    counter_mode: str = LOGARITHMIC
    rng_seed: int = 0
    enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "counter_mode", normalize_mode(self.counter_mode))
        if self.epoch_len <= 0 or self.threshold <= 0:
            raise ValueError("epoch_len and threshold must be positive")
        if self.counter_mode == LOGARITHMIC:
            for name in ("epoch_len", "threshold"):
                v = getattr(self, name)
                if v & (v - 1):
                    raise ValueError(f"{name}={v} must be a power of two with logarithmic counters")
            if _log2(self.epoch_len) > MAX_EXPONENT:
                raise ValueError(f"epoch_len above 2**{MAX_EXPONENT} cannot be represented")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ValueError("rng_seed must fit in 64 bits")


class PolicyAction(NamedTuple):
    kind: str = "none"
    hot_way: int = 0

    @property
    def is_swap(self) -> bool:
        return self.kind == "swap"


NO_ACTION = PolicyAction()


class RandomBits:
    """Buffered source of uniform 64-bit words from a seeded PCG64 stream."""

    algorithm = RNG_ALGORITHM

    def __init__(self, seed: int = 0, chunk: int = 4096):
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._chunk = chunk
        self._buf = []

    def next_word(self) -> int:
        if not self._buf:
            words = self._gen.integers(0, 2 ** 64, size=self._chunk, dtype=np.uint64)
            self._buf = words.tolist()[::-1]
        return self._buf.pop()

    def one_in_pow2(self, e: int) -> bool:
        """True with probability ``2**-e``."""
        if e <= 0:
            return True
        return self.next_word() & ((1 << e) - 1) == 0


def log_increment(exponent: int, rng: RandomBits) -> int:
    if exponent == ZERO:
        return 0
    if exponent >= MAX_EXPONENT:
        return MAX_EXPONENT
    return exponent + 1 if rng.one_in_pow2(exponent) else exponent


def estimate(value: int, mode: str = EXACT) -> int:
    """Counter value as seen by the controller."""
    if normalize_mode(mode) == EXACT:
        return value
    return 0 if value == ZERO else 1 << value


def storage_bits(cfg, associativity: int) -> int:
    """Counter bits per set: one epoch counter plus one hit counter per way."""
    mode = cfg.counter_mode if isinstance(cfg, PolicyConfig) else normalize_mode(cfg)
    width = 8 if mode == EXACT else 4
    return width * (associativity + 1)


class SetCounters:
    __slots__ = ("c", "h")

    def __init__(self, associativity: int, zero: int):
        self.c = zero
        self.h = [zero] * associativity

    def reset(self, zero: int) -> None:
        self.c = zero
        for i in range(len(self.h)):
            self.h[i] = zero


class HoLiSwapPolicy:
    """Counter state for every set of one cache instance."""

    def __init__(self, cfg: PolicyConfig, set_count: int, associativity: int):
        self.cfg = cfg
        self.associativity = associativity
        self.log_mode = cfg.counter_mode == LOGARITHMIC
        self._zero = ZERO if self.log_mode else 0
        if self.log_mode:
            self._epoch_end = _log2(cfg.epoch_len)
            self._hot = _log2(cfg.threshold)
        else:
            self._epoch_end = cfg.epoch_len
            self._hot = cfg.threshold
        self.rng = RandomBits(cfg.rng_seed)
        self.sets = [SetCounters(associativity, self._zero) for _ in range(set_count)]

    def _bump(self, v: int) -> int:
        if self.log_mode:
            return log_increment(v, self.rng)
        return min(v + 1, self.cfg.epoch_len)

    def record_access(self, set_index: int, hit_way: Optional[int]) -> PolicyAction:
        """Count one access to ``set_index``; ``hit_way`` is None on a miss."""
        if not self.cfg.enabled:
            return NO_ACTION
        sc = self.sets[set_index]
        sc.c = self._bump(sc.c)
        if sc.c >= self._epoch_end:
            # the closing access of an epoch cannot make a line hot; with
            # T = E/2 this keeps detection to one line per epoch
            sc.reset(self._zero)
            return NO_ACTION
        if hit_way is None:
            return NO_ACTION
        before = sc.h[hit_way]
        after = self._bump(before)
        sc.h[hit_way] = after
        if hit_way != 0 and before < self._hot <= after:
            return PolicyAction("swap", hit_way)
        return NO_ACTION

    def on_fill(self, set_index: int, way: int) -> None:
        self.sets[set_index].h[way] = self._zero

    def on_swap(self, set_index: int, a: int, b: int) -> None:
        h = self.sets[set_index].h
        h[a], h[b] = h[b], h[a]

    def estimates(self, set_index: int) -> tuple:
        """``(epoch_count, [hit_count per way])`` in counted units."""
        mode = self.cfg.counter_mode
        sc = self.sets[set_index]
        return estimate(sc.c, mode), [estimate(v, mode) for v in sc.h]
