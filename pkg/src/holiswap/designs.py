"""The four lookup designs and the per-access simulation step.

Each :class:`Simulator` owns one cache, its HoLiSwap counters, an optional
way predictor or L0 filter cache, and the running statistics. ``step``
charges latency and energy for one reference and applies any swap the policy
requests before the next reference.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional

from .cache_model import CacheConfig, CacheState, index_of
from .energy import PARALLEL_RULE, SEQUENTIAL_RULE, EnergyLedger, EnergyTable
from .policy import HoLiSwapPolicy, PolicyConfig


class DesignKind(str, enum.Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"
    PREDICTION_STATIC = "prediction_static"
    PREDICTION_PC = "prediction_pc"
    FILTER = "filter"

    @classmethod
    def parse(cls, name) -> "DesignKind":
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("-", "_")
        if key == "prediction":
            key = "prediction_static"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown design {name!r}") from None

    @property
    def is_prediction(self) -> bool:
        return self in (DesignKind.PREDICTION_STATIC, DesignKind.PREDICTION_PC)


@dataclass(frozen=True)
class TimingParams:
    seq_hit: int = 3
    par_hit: int = 2
    pred_correct_load: int = 2
    pred_penalty: int = 1
    l0_hit: int = 1
    swap_block: int = 4
    miss_penalty: int = 20

    def __post_init__(self):
        for k, v in vars(self).items():
            if int(v) <= 0:
                raise ValueError(f"timing parameter {k} must be positive")


class PredictorState:
    """Static way-0 predictor or a PC-indexed last-way table."""

    def __init__(self, kind: str = "static_w0", index_bits: int = 10, associativity: int = 4):
        if kind not in ("static_w0", "pc_table"):
            raise ValueError(f"unknown predictor {kind!r}")
        self.kind = kind
        self.index_bits = index_bits
        self.associativity = associativity
        self.table = [0] * (1 << index_bits) if kind == "pc_table" else None

    def index(self, pc: int) -> int:
        return (pc >> 2) & ((1 << self.index_bits) - 1)

    def predict(self, pc: int) -> int:
        if self.table is None:
            return 0
        return self.table[self.index(pc)]

    def update(self, pc: int, actual_way: int) -> None:
        if self.table is not None:
            self.table[self.index(pc)] = actual_way

    @property
    def storage_bits(self) -> int:
        if self.table is None:
            return 0
        return max(1, (self.associativity - 1).bit_length()) * len(self.table)


def predict_way(p: PredictorState, pc: int) -> int:
    return p.predict(pc)


def update_predictor(p: PredictorState, pc: int, actual_way: int) -> None:
    p.update(pc, actual_way)


class L0Cache:
    """Direct-mapped filter cache; write-through, so lines are never dirty."""

    def __init__(self, capacity_bytes: int = 1024, line_bytes: int = 64):
        if capacity_bytes % line_bytes:
            raise ValueError("L0 capacity must be a multiple of the line size")
        self.line_bytes = line_bytes
        self.n_lines = capacity_bytes // line_bytes
        self.tags: List[Optional[int]] = [None] * self.n_lines

    def _split(self, addr: int):
        line = addr // self.line_bytes
        return line % self.n_lines, line // self.n_lines

    def access(self, addr: int) -> bool:
        i, tag = self._split(addr)
        return self.tags[i] == tag

    def fill(self, addr: int) -> None:
        i, tag = self._split(addr)
        self.tags[i] = tag


def l0_access(l0: L0Cache, addr: int) -> bool:
    return l0.access(addr)


@dataclass
class StepResult:
    cycles: int
    hit: bool
    way: int
    sram: float = 0.0
    wire: float = 0.0
    swap: float = 0.0
    counter: float = 0.0
    l0: float = 0.0
    l1_accessed: bool = True
    l0_hit: Optional[bool] = None
    predicted_way: Optional[int] = None
    correct: Optional[bool] = None
    swapped_from: Optional[int] = None
    evicted_tag: Optional[int] = None
    blocked: int = 0

    @property
    def energy(self) -> float:
        return self.sram + self.wire + self.swap + self.counter + self.l0


@dataclass
class SimStats:
    references: int = 0
    accesses: int = 0
    loads: int = 0
    stores: int = 0
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    dirty_evictions: int = 0
    swaps: int = 0
    blocked_cycles: int = 0
    access_cycles: int = 0
    predictions: int = 0
    correct: int = 0
    l0_hits: int = 0
    l0_misses: int = 0
    way_histogram: List[int] = field(default_factory=list)
    load_way_histogram: List[int] = field(default_factory=list)
    # sum of per-step totals, cross-checked against the ledger
    replay_pj: float = 0.0

    @property
    def total_cycles(self) -> int:
        return self.access_cycles + self.blocked_cycles


class Simulator:
    def __init__(self, design="sequential", cache: CacheConfig = None, policy: PolicyConfig = None,
                 timing: TimingParams = None, table: EnergyTable = None,
                 predictor_index_bits: int = 10, filter_l1_lookup: str = "sequential",
                 l0_bytes: int = 1024):
        self.design = DesignKind.parse(design)
        self.cache_cfg = cache or CacheConfig()
        self.policy_cfg = policy or PolicyConfig()
        self.timing = timing or TimingParams()
        self.table = table or EnergyTable()
        A = self.cache_cfg.associativity
        if self.table.ways != A:
            raise ValueError(f"energy table has {self.table.ways} ways, cache has {A}")
        if filter_l1_lookup not in (SEQUENTIAL_RULE, PARALLEL_RULE):
            raise ValueError(f"filter_l1_lookup must be sequential or parallel, not {filter_l1_lookup!r}")
        self.filter_l1_lookup = filter_l1_lookup

        self.cache = CacheState(self.cache_cfg)
        self.policy = HoLiSwapPolicy(self.policy_cfg, self.cache_cfg.set_count, A)
        self.predictor = None
        if self.design.is_prediction:
            kind = "static_w0" if self.design is DesignKind.PREDICTION_STATIC else "pc_table"
            self.predictor = PredictorState(kind, predictor_index_bits, A)
        self.l0 = L0Cache(l0_bytes, self.cache_cfg.line_bytes) if self.design is DesignKind.FILTER else None
        self.ledger = EnergyLedger()
        self.stats = SimStats(way_histogram=[0] * A, load_way_histogram=[0] * A)
        self._counter_pj = self.table.counter_energy_per_access() if self.policy_cfg.enabled else 0.0

    def run(self, records) -> "Simulator":
        for rec in records:
            self.step(rec)
        return self

    def step(self, rec) -> StepResult:
        pc, addr, op = rec[0], rec[1], rec[2]
        is_store = op == "S" or op is True or op == 1
        st = self.stats
        st.references += 1
        if is_store:
            st.stores += 1
        else:
            st.loads += 1

        if self.l0 is not None:
            l0_hit = self.l0.access(addr)
            if l0_hit:
                st.l0_hits += 1
            else:
                st.l0_misses += 1
            if l0_hit and not is_store:
                res = StepResult(self.timing.l0_hit, True, -1, l0=self.table.l0_access,
                                 l1_accessed=False, l0_hit=True)
                return self._commit(res)
            res = self._l1_access(pc, addr, is_store, self.filter_l1_lookup)
            # stores write through to L1 even when L0 holds the line
            res.cycles += self.timing.l0_hit
            res.l0 = self.table.l0_access
            res.l0_hit = l0_hit
            self.l0.fill(addr)
            return self._commit(res)

        rule = PARALLEL_RULE if self.design is DesignKind.PARALLEL else SEQUENTIAL_RULE
        return self._commit(self._l1_access(pc, addr, is_store, rule))

    def _l1_access(self, pc: int, addr: int, is_store: bool, rule: str) -> StepResult:
        t = self.timing
        table = self.table
        st = self.stats
        set_index, _ = index_of(addr, self.cache_cfg)
        predicted = None
        if self.predictor is not None and not is_store:
            predicted = self.predictor.predict(pc)

        out = self.cache.access(addr, is_store)
        way = out.way
        st.accesses += 1
        res = StepResult(0, out.hit, way)

        if self.predictor is not None:
            if is_store:
                cycles = t.pred_correct_load + t.pred_penalty
                sram, wire = table.access_energy(SEQUENTIAL_RULE, way)
            else:
                cycles = t.pred_correct_load
                sram, wire = table.access_energy(SEQUENTIAL_RULE, predicted)
                if out.hit and predicted != way:
                    cycles += t.pred_penalty
                    s2, w2 = table.access_energy(SEQUENTIAL_RULE, way)
                    sram += s2
                    wire += w2
                elif not out.hit:
                    s2, w2 = table.access_energy(SEQUENTIAL_RULE, way)
                    sram += s2
                    wire += w2
                if out.hit:
                    st.predictions += 1
                    res.correct = predicted == way
                    st.correct += res.correct
                res.predicted_way = predicted
                self.predictor.update(pc, way)
        else:
            cycles = t.par_hit if rule == PARALLEL_RULE else t.seq_hit
            sram, wire = table.access_energy(rule, way)

        if out.hit:
            st.hits += 1
            st.way_histogram[way] += 1
            if not is_store:
                st.load_way_histogram[way] += 1
        else:
            st.misses += 1
            cycles += t.miss_penalty
            if out.victim_evicted:
                res.evicted_tag = out.victim_tag
                st.evictions += 1
                st.dirty_evictions += out.victim_dirty
            self.policy.on_fill(set_index, way)

        res.cycles = cycles
        res.sram = sram
        res.wire = wire
        res.counter = self._counter_pj

        action = self.policy.record_access(set_index, way if out.hit else None)
        if action.is_swap:
            hot = action.hot_way
            self.cache.swap_ways(set_index, hot, 0)
            self.policy.on_swap(set_index, hot, 0)
            res.swap = table.swap_energy(0, hot)
            res.swapped_from = hot
            res.blocked = t.swap_block
            st.swaps += 1
        return res

    def _commit(self, res: StepResult) -> StepResult:
        st = self.stats
        st.access_cycles += res.cycles
        st.blocked_cycles += res.blocked
        self.ledger.add(res.sram, res.wire, res.swap, res.counter, res.l0)
        st.replay_pj += res.energy
        return res


def simulate_access(sim: Simulator, rec) -> StepResult:
    return sim.step(rec)
