"""scikit-learn style front end.

``X`` is a trace: a sequence of :class:`~holiswap.trace_io.TraceRecord` or an
integer array of shape ``(n, 3)`` with columns ``(pc, addr, is_store)``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cache_model import CacheConfig
from .designs import DesignKind, Simulator, TimingParams
from .energy import default_energy
from .metrics import classify_residencies, finalize_report, hot_line_stats, sweep_epoch
from .policy import PolicyConfig
from .trace_io import TraceRecord

OUTCOME_COLUMNS = ("hit", "way", "cycles", "energy_pj", "swapped")


def check_trace(X) -> list:
    """Validate a trace and return it as a list of ``TraceRecord``."""
    if isinstance(X, np.ndarray):
        if X.ndim != 2 or X.shape[1] != 3:
            raise ValueError(f"trace array must have shape (n, 3), got {X.shape}")
        if not np.issubdtype(X.dtype, np.integer) and X.dtype != bool:
            raise ValueError(f"trace array must be integer typed, got {X.dtype}")
        if X.size and (X[:, :2] < 0).any():
            raise ValueError("pc and addr must be non-negative")
        return [TraceRecord(int(pc), int(addr), "S" if st else "L") for pc, addr, st in X.tolist()]
    out = []
    for i, rec in enumerate(X):
        if isinstance(rec, TraceRecord):
            out.append(rec)
            continue
        try:
            pc, addr, op = rec
        except (TypeError, ValueError):
            raise ValueError(f"record {i} is not a (pc, addr, op) triple: {rec!r}") from None
        if op in ("L", "S"):
            out.append(TraceRecord(int(pc), int(addr), op))
        elif op in (0, 1, True, False):
            out.append(TraceRecord(int(pc), int(addr), "S" if op else "L"))
        else:
            raise ValueError(f"record {i}: op must be L/S or 0/1, got {op!r}")
    return out


def trace_to_array(records) -> np.ndarray:
    recs = check_trace(records)
    return np.array([(r.pc, r.addr, r.is_store) for r in recs], dtype=np.uint64).reshape(-1, 3)


class CacheSimulator(BaseEstimator, TransformerMixin):
    """Trace-driven L1 simulation with optional HoLiSwap migration.

    ``fit`` runs the whole trace and stores ``report_``; ``transform``
    replays a trace from a cold cache and returns one row per reference with
    columns :data:`OUTCOME_COLUMNS` (way is -1 for L0 hits).
    """

    def __init__(self, design="sequential", holiswap=True, epoch_len=256, threshold=128,
                 counters="logarithmic", seed=0, capacity_bytes=32768, line_bytes=64,
                 associativity=4, energy=None, timing=None, predictor_index_bits=10,
                 filter_l1_lookup="sequential", hot_stats=False):
        self.design = design
        self.holiswap = holiswap
        self.epoch_len = epoch_len
        self.threshold = threshold
        self.counters = counters
        self.seed = seed
        self.capacity_bytes = capacity_bytes
        self.line_bytes = line_bytes
        self.associativity = associativity
        self.energy = energy
        self.timing = timing
        self.predictor_index_bits = predictor_index_bits
        self.filter_l1_lookup = filter_l1_lookup
        self.hot_stats = hot_stats

    def simulator_kwargs(self) -> dict:
        cache = CacheConfig(self.capacity_bytes, self.line_bytes, self.associativity)
        return dict(
            design=DesignKind.parse(self.design),
            cache=cache,
            policy=PolicyConfig(self.epoch_len, self.threshold, self.counters, self.seed,
                                bool(self.holiswap)),
            timing=self.timing or TimingParams(),
            table=self.energy or default_energy(self.capacity_bytes, self.associativity),
            predictor_index_bits=self.predictor_index_bits,
            filter_l1_lookup=self.filter_l1_lookup,
        )

    def _simulator(self) -> Simulator:
        return Simulator(**self.simulator_kwargs())

    def fit(self, X, y=None):
        trace = check_trace(X)
        sim = self._simulator().run(trace)
        self.simulator_ = sim
        hot = hot_line_stats(trace, sim.cache_cfg) if self.hot_stats else None
        self.report_ = finalize_report(sim, hot)
        self.n_references_ = len(trace)
        return self

    def transform(self, X):
        trace = check_trace(X)
        sim = self._simulator()
        out = np.empty((len(trace), len(OUTCOME_COLUMNS)), dtype=float)
        for i, rec in enumerate(trace):
            r = sim.step(rec)
            out[i] = (r.hit, r.way, r.cycles + r.blocked, r.energy,
                      -1 if r.swapped_from is None else r.swapped_from)
        return out

    def score(self, X, y=None):
        """Negative total energy in pJ (higher is better)."""
        return -self.fit(X).report_.total_energy

    def sweep(self, X, epochs=(4, 16, 64, 256, 1024), n_jobs=1):
        return sweep_epoch(self.simulator_kwargs(), epochs, check_trace(X), n_jobs=n_jobs)

    @property
    def report(self):
        check_is_fitted(self, "report_")
        return self.report_


class HotLineAnalyzer(BaseEstimator, TransformerMixin):
    """Offline hot-line analysis, independent of any migration policy.

    ``transform`` flags each reference that belongs to a hot residency.
    """

    def __init__(self, capacity_bytes=32768, line_bytes=64, associativity=4, window=128, min_hits=64):
        self.capacity_bytes = capacity_bytes
        self.line_bytes = line_bytes
        self.associativity = associativity
        self.window = window
        self.min_hits = min_hits

    def _cfg(self):
        return CacheConfig(self.capacity_bytes, self.line_bytes, self.associativity)

    def fit(self, X, y=None):
        self.stats_ = hot_line_stats(check_trace(X), self._cfg(), self.window, self.min_hits)
        return self

    def transform(self, X):
        check_is_fitted(self, "stats_")
        ids, res = classify_residencies(check_trace(X), self._cfg(), self.window, self.min_hits)
        return np.array([res[i].hot for i in ids], dtype=bool)
