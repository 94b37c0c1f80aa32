"""Hot-line statistics, simulation reports, epoch sweeps and serialization."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .cache_model import CacheConfig, CacheState, index_of
from .designs import Simulator
from .policy import RNG_ALGORITHM, storage_bits

SCHEMA = "hlsw-report-1"
ENERGY_DIGITS = 3
RATIO_DIGITS = 4
HOT_WINDOW = 128
HOT_MIN_HITS = 64


class InvariantViolation(RuntimeError):
    """A report failed an internal consistency check (simulator bug)."""


@dataclass
class HotLineStats:
    accesses: int = 0
    hot_accesses: int = 0
    distinct_lines: int = 0
    hot_lines: int = 0
    residencies: int = 0
    hot_residencies: int = 0
    mean_hot_duration: float = 0.0
    mean_cold_duration: float = 0.0

    @property
    def hot_access_share(self) -> float:
        return self.hot_accesses / self.accesses if self.accesses else 0.0

    @property
    def hot_line_share(self) -> float:
        return self.hot_lines / self.distinct_lines if self.distinct_lines else 0.0

    def to_dict(self) -> dict:
        return {
            "accesses": self.accesses,
            "hot_accesses": self.hot_accesses,
            "distinct_lines": self.distinct_lines,
            "hot_lines": self.hot_lines,
            "residencies": self.residencies,
            "hot_residencies": self.hot_residencies,
            "hot_access_share": round(self.hot_access_share, RATIO_DIGITS),
            "hot_line_share": round(self.hot_line_share, RATIO_DIGITS),
            "mean_hot_duration": round(self.mean_hot_duration, ENERGY_DIGITS),
            "mean_cold_duration": round(self.mean_cold_duration, ENERGY_DIGITS),
        }


class Residency:
    """One stay of a line in the cache, from fill to eviction."""

    __slots__ = ("rid", "line", "start", "end", "accesses", "hot", "window", "window_hits")

    def __init__(self, rid, line, start):
        self.rid = rid
        self.line = line
        self.start = start
        self.end = start
        self.accesses = 1
        self.hot = False
        self.window = -1
        self.window_hits = 0

    @property
    def duration(self) -> int:
        return self.end - self.start


def classify_residencies(trace, cfg: CacheConfig = None, window: int = HOT_WINDOW,
                         min_hits: int = HOT_MIN_HITS):
    """Replay ``trace`` through a plain LRU cache and classify residencies.

    A residency is hot if it collects ``min_hits`` hits inside any aligned,
    non-overlapping window of ``window`` accesses to its set. Durations count
    accesses to the set between fill and eviction (or the end of the trace).

    Returns ``(residency id per access, list of residencies)``.
    """
    cfg = cfg or CacheConfig()
    cache = CacheState(cfg)
    set_clock = [0] * cfg.set_count
    resident: Dict[tuple, Residency] = {}
    residencies: List[Residency] = []
    ids = []
    for rec in trace:
        addr = rec[1]
        s, tag = index_of(addr, cfg)
        t = set_clock[s]
        set_clock[s] = t + 1
        out = cache.access(addr, False)
        if out.hit:
            r = resident[(s, tag)]
            r.accesses += 1
            w = t // window
            if w != r.window:
                r.window, r.window_hits = w, 0
            r.window_hits += 1
            if r.window_hits >= min_hits:
                r.hot = True
        else:
            if out.victim_evicted:
                resident.pop((s, out.victim_tag)).end = t
            r = Residency(len(residencies), (s, tag), t)
            resident[(s, tag)] = r
            residencies.append(r)
        ids.append(r.rid)
    for (s, _), r in resident.items():
        r.end = set_clock[s]
    return ids, residencies


def hot_line_stats(trace, cfg: CacheConfig = None, window: int = HOT_WINDOW,
                   min_hits: int = HOT_MIN_HITS) -> HotLineStats:
    _, res = classify_residencies(trace, cfg, window, min_hits)
    hot = [r for r in res if r.hot]
    cold = [r for r in res if not r.hot]
    lines = {r.line for r in res}
    return HotLineStats(
        accesses=sum(r.accesses for r in res),
        hot_accesses=sum(r.accesses for r in hot),
        distinct_lines=len(lines),
        hot_lines=len({r.line for r in hot}),
        residencies=len(res),
        hot_residencies=len(hot),
        mean_hot_duration=sum(r.duration for r in hot) / len(hot) if hot else 0.0,
        mean_cold_duration=sum(r.duration for r in cold) / len(cold) if cold else 0.0,
    )


@dataclass
class SimReport:
    config: dict
    totals: dict
    energy_pj: dict
    way_histogram: list
    load_way_histogram: list
    prediction: dict
    counter_storage_bits: int
    hot_lines: Optional[HotLineStats] = None

    @property
    def total_energy(self) -> float:
        return self.energy_pj["total_pj"]

    def ratios(self) -> dict:
        t = self.totals
        hits = t["hits"]
        return {
            "miss_rate": t["misses"] / t["accesses"] if t["accesses"] else 0.0,
            "way0_hit_share": self.way_histogram[0] / hits if hits else 0.0,
            "blocked_share": t["blocked_cycles"] / t["total_cycles"] if t["total_cycles"] else 0.0,
            "prediction_accuracy": self.prediction["accuracy"],
        }

    def to_dict(self) -> dict:
        """JSON-ready dict with fixed key order and rounded floats."""
        return {
            "schema": SCHEMA,
            "config": dict(self.config),
            "totals": dict(self.totals),
            "energy_pj": {k: round(v, ENERGY_DIGITS) for k, v in self.energy_pj.items()},
            "way_histogram": list(self.way_histogram),
            "load_way_histogram": list(self.load_way_histogram),
            "prediction": {k: round(v, RATIO_DIGITS) if isinstance(v, float) else v
                           for k, v in self.prediction.items()},
            "ratios": {k: round(v, RATIO_DIGITS) for k, v in self.ratios().items()},
            "counter_storage_bits": self.counter_storage_bits,
            "hot_lines": self.hot_lines.to_dict() if self.hot_lines is not None else None,
        }


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise InvariantViolation(msg)


def finalize_report(sim: Simulator, hot: HotLineStats = None) -> SimReport:
    st = sim.stats
    led = sim.ledger
    pcfg = sim.policy_cfg
    ccfg = sim.cache_cfg
    _check(st.hits + st.misses == st.accesses, "hits + misses != accesses")
    _check(st.loads + st.stores == st.references, "loads + stores != references")
    _check(sum(st.way_histogram) == st.hits, "way histogram does not sum to hits")
    _check(st.correct <= st.predictions, "more correct predictions than predictions")
    _check(st.blocked_cycles == sim.timing.swap_block * st.swaps, "blocked cycles != swap_block * swaps")
    if sim.l0 is not None:
        _check(st.l0_hits + st.l0_misses == st.references, "L0 hits + misses != references")
    else:
        _check(st.accesses == st.references, "L1 accesses != references")
    if not pcfg.enabled:
        _check(st.swaps == 0 and led.swap_pj == 0 and led.counter_pj == 0,
               "disabled policy produced swaps or counter energy")
    comps = (led.sram_pj, led.wire_pj, led.swap_pj, led.counter_pj, led.l0_pj)
    _check(min(comps) >= 0, "negative energy component")
    _check(abs(led.total_pj - st.replay_pj) <= 1e-6 * max(1.0, st.replay_pj),
           "energy ledger disagrees with per-access replay")
    try:
        sim.cache.check()
    except RuntimeError as exc:
        raise InvariantViolation(str(exc)) from exc

    predictor_bits = sim.predictor.storage_bits if sim.predictor is not None else 0
    return SimReport(
        config={
            "design": sim.design.value,
            "holiswap": pcfg.enabled,
            "epoch_len": pcfg.epoch_len,
            "threshold": pcfg.threshold,
            "counter_mode": pcfg.counter_mode,
            "seed": pcfg.rng_seed,
            "rng": RNG_ALGORITHM,
            "capacity_bytes": ccfg.capacity_bytes,
            "line_bytes": ccfg.line_bytes,
            "associativity": ccfg.associativity,
            "miss_penalty": sim.timing.miss_penalty,
        },
        totals={
            "references": st.references,
            "accesses": st.accesses,
            "loads": st.loads,
            "stores": st.stores,
            "hits": st.hits,
            "misses": st.misses,
            "evictions": st.evictions,
            "dirty_evictions": st.dirty_evictions,
            "swaps": st.swaps,
            "blocked_cycles": st.blocked_cycles,
            "total_cycles": st.total_cycles,
            "l0_hits": st.l0_hits,
            "l0_misses": st.l0_misses,
        },
        energy_pj=led.as_dict(),
        way_histogram=list(st.way_histogram),
        load_way_histogram=list(st.load_way_histogram),
        prediction={
            "predictions": st.predictions,
            "correct": st.correct,
            "accuracy": st.correct / st.predictions if st.predictions else 0.0,
            "predictor_bits": predictor_bits,
        },
        counter_storage_bits=storage_bits(pcfg, ccfg.associativity) if pcfg.enabled else 0,
        hot_lines=hot,
    )


def _run_one(sim_kwargs: dict, trace) -> SimReport:
    return finalize_report(Simulator(**sim_kwargs).run(trace))


def sweep_epoch(sim_kwargs: dict, epochs: Sequence[int], trace, n_jobs: int = 1) -> List[dict]:
    """One simulation per epoch length (threshold E/2) plus one
    policy-disabled baseline on the same trace.

    ``sim_kwargs`` are :class:`Simulator` keyword arguments; its ``policy``
    supplies the counter mode and seed shared by every row.
    """
    from .policy import PolicyConfig

    base = sim_kwargs.get("policy") or PolicyConfig()
    epochs = sorted(set(int(e) for e in epochs))
    if any(e < 2 for e in epochs):
        raise ValueError("epoch lengths must be at least 2")
    jobs = [dict(sim_kwargs, policy=dataclasses.replace(base, enabled=False))]
    for e in epochs:
        jobs.append(dict(sim_kwargs, policy=dataclasses.replace(base, epoch_len=e, threshold=e // 2,
                                                                enabled=True)))
    if n_jobs == 1:
        reports = [_run_one(kw, trace) for kw in jobs]
    else:
        from joblib import Parallel, delayed
        reports = Parallel(n_jobs=n_jobs)(delayed(_run_one)(kw, trace) for kw in jobs)

    baseline, rows = reports[0], []
    b_energy = baseline.total_energy
    b_cycles = baseline.totals["total_cycles"]
    for e, rep in zip(epochs, reports[1:]):
        t = rep.totals
        rows.append({
            "epoch_len": e,
            "threshold": e // 2,
            "swaps": t["swaps"],
            "blocked_cycles": t["blocked_cycles"],
            "total_cycles": t["total_cycles"],
            "blocked_share": t["blocked_cycles"] / t["total_cycles"] if t["total_cycles"] else 0.0,
            "energy_pj": rep.total_energy,
            "wire_pj": rep.energy_pj["wire_pj"],
            "swap_pj": rep.energy_pj["swap_pj"],
            "baseline_energy_pj": b_energy,
            "energy_savings": 1 - rep.total_energy / b_energy if b_energy else 0.0,
            "slowdown": t["total_cycles"] / b_cycles - 1 if b_cycles else 0.0,
        })
    return rows


_ENERGY_KEYS = ("energy_pj", "wire_pj", "swap_pj", "baseline_energy_pj")


def _fmt(key: str, v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        digits = ENERGY_DIGITS if key.endswith("_pj") or key in _ENERGY_KEYS or "duration" in key \
            else RATIO_DIGITS
        return f"{v:.{digits}f}"
    if v is None:
        return ""
    return str(v)


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        elif isinstance(v, list):
            for i, x in enumerate(v):
                out[f"{key}.{i}"] = x
        else:
            out[key] = v
    return out


def _csv(rows: List[dict]) -> bytes:
    buf = io.StringIO()
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        header = list(rows[0])
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(k.rsplit(".", 1)[-1], row.get(k)) for k in header])
    return buf.getvalue().encode()


def emit(report: SimReport, fmt: str = "json") -> bytes:
    """Serialize a report deterministically as JSON or single-row CSV."""
    d = report.to_dict()
    if fmt == "json":
        return (json.dumps(d, indent=2) + "\n").encode()
    if fmt == "csv":
        flat = flatten(d)
        if d["hot_lines"] is None:
            flat.pop("hot_lines", None)
        return _csv([flat])
    raise ValueError(f"unknown format {fmt!r}")


def emit_rows(rows: List[dict], fmt: str = "csv") -> bytes:
    """Serialize sweep rows."""
    if fmt == "csv":
        return _csv(rows)
    if fmt == "json":
        out = [{k: round(v, ENERGY_DIGITS if k in _ENERGY_KEYS else RATIO_DIGITS)
                if isinstance(v, float) else v for k, v in r.items()} for r in rows]
        return (json.dumps({"schema": SCHEMA, "sweep": out}, indent=2) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def emit_stats(stats: HotLineStats, fmt: str = "json") -> bytes:
    d = stats.to_dict()
    if fmt == "json":
        return (json.dumps({"schema": SCHEMA, "hot_lines": d}, indent=2) + "\n").encode()
    if fmt == "csv":
        return _csv([d])
    raise ValueError(f"unknown format {fmt!r}")
