"""Logical set-associative cache with explicit physical way placement.

Ways are physical slots: way 0 is the subarray nearest the way multiplexer.
Replacement is LRU, and recency is tracked per logical line so that moving a
line between ways never changes which line is evicted next.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional


class CacheCorruptionError(RuntimeError):
    """Raised when a set holds two valid copies of the same tag."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CacheConfig:
    capacity_bytes: int = 32768
    line_bytes: int = 64
    associativity: int = 4

    def __post_init__(self):
        for name in ("capacity_bytes", "line_bytes", "associativity"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")
        if not _is_pow2(self.line_bytes):
            raise ValueError("line_bytes must be a power of two")
        frame = self.line_bytes * self.associativity
        if self.capacity_bytes % frame:
            raise ValueError("capacity_bytes must be a multiple of line_bytes * associativity")
        if not _is_pow2(self.capacity_bytes // frame):
            raise ValueError("set count must be a power of two")

    @property
    def set_count(self) -> int:
        return self.capacity_bytes // (self.line_bytes * self.associativity)


@dataclass
class CacheLine:
    valid: bool = False
    tag: int = 0
    dirty: bool = False

    def as_tuple(self):
        return (self.valid, self.tag, self.dirty)


@dataclass
class CacheSet:
    ways: list
    # way indices, most- to least-recently used
    lru_order: list

    @classmethod
    def empty(cls, associativity: int) -> "CacheSet":
        # reversed so an all-invalid set fills W0, W1, ... in order
        return cls([CacheLine() for _ in range(associativity)],
                   list(range(associativity - 1, -1, -1)))

    @property
    def associativity(self) -> int:
        return len(self.ways)

    def touch(self, way: int) -> None:
        self.lru_order.remove(way)
        self.lru_order.insert(0, way)

    def victim(self) -> int:
        for w, line in enumerate(self.ways):
            if not line.valid:
                return w
        return self.lru_order[-1]


class AccessOutcome(NamedTuple):
    hit: bool
    way: int
    victim_evicted: bool = False
    victim_dirty: bool = False
    victim_tag: Optional[int] = None


def index_of(addr: int, cfg: CacheConfig) -> tuple:
    """Split a byte address into ``(set_index, tag)``."""
    line = addr // cfg.line_bytes
    return line % cfg.set_count, line // cfg.set_count


def lookup(cset: CacheSet, tag: int) -> Optional[int]:
    """Return the physical way holding ``tag``, or None on a miss."""
    found = None
    for w, line in enumerate(cset.ways):
        if line.valid and line.tag == tag:
            if found is not None:
                raise CacheCorruptionError(f"tag {tag:#x} present in ways {found} and {w}")
            found = w
    return found


def swap_ways(cset: CacheSet, a: int, b: int) -> None:
    """Exchange the lines in ways ``a`` and ``b``.

    Each line keeps its recency rank, so replacement decisions are unchanged.
    Swapping a way with itself is a no-op.
    """
    n = cset.associativity
    if not (0 <= a < n and 0 <= b < n):
        raise IndexError(f"way out of range for {n}-way set: {a}, {b}")
    if a == b:
        return
    cset.ways[a], cset.ways[b] = cset.ways[b], cset.ways[a]
    ia, ib = cset.lru_order.index(a), cset.lru_order.index(b)
    cset.lru_order[ia], cset.lru_order[ib] = b, a


@dataclass
class CacheState:
    config: CacheConfig = field(default_factory=CacheConfig)
    sets: list = field(init=False)

    def __post_init__(self):
        self.sets = [CacheSet.empty(self.config.associativity)
                     for _ in range(self.config.set_count)]

    def access(self, addr: int, is_store: bool = False) -> AccessOutcome:
        """Reference ``addr`` with write-back, write-allocate semantics."""
        s, tag = index_of(addr, self.config)
        cset = self.sets[s]
        way = lookup(cset, tag)
        if way is not None:
            cset.touch(way)
            if is_store:
                cset.ways[way].dirty = True
            return AccessOutcome(True, way)
        way = cset.victim()
        old = cset.ways[way]
        cset.ways[way] = CacheLine(True, tag, bool(is_store))
        cset.touch(way)
        if old.valid:
            return AccessOutcome(False, way, True, old.dirty, old.tag)
        return AccessOutcome(False, way)

    def swap_ways(self, set_index: int, a: int, b: int) -> None:
        swap_ways(self.sets[set_index], a, b)

    def check(self) -> None:
        """Validate LRU permutations and tag uniqueness in every set."""
        n = self.config.associativity
        for s, cset in enumerate(self.sets):
            if sorted(cset.lru_order) != list(range(n)):
                raise CacheCorruptionError(f"set {s}: lru_order {cset.lru_order} is not a permutation")
            tags = [l.tag for l in cset.ways if l.valid]
            if len(tags) != len(set(tags)):
                raise CacheCorruptionError(f"set {s}: duplicate tags {tags}")
