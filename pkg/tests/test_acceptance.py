"""Exit criteria. Each test prints one PASS/FAIL line (also collected in the
terminal summary) and then asserts."""
import json
import random
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from holiswap.cache_model import CacheConfig
from holiswap.designs import Simulator
from holiswap.energy import EnergyTable, GeometryModel
from holiswap.estimator import CacheSimulator
from holiswap.metrics import emit, sweep_epoch
from holiswap.policy import ZERO, PolicyConfig, RandomBits, log_increment, storage_bits
from holiswap.trace_io import SyntheticSpec, generate
from oracles import TABLE_PAR, TABLE_SEQ, TABLE_WIRE, hot_line_wire_oracle, run_with_recount

TABLE_TOL = 0.05


def verdict(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_c01_energy_table_fidelity():
    t0 = time.perf_counter()
    t = EnergyTable()
    errs = []
    for w in range(4):
        errs.append(abs(sum(t.access_energy("sequential", w)) - TABLE_SEQ[w]))
        errs.append(abs(sum(t.access_energy("parallel", w)) - TABLE_PAR[w]))
        errs.append(abs(t.access_energy("sequential", w)[1] - TABLE_WIRE[w]))
    ratio = t.wire[3] / t.wire[0]
    dt = time.perf_counter() - t0
    verdict("C1 energy table", max(errs) <= TABLE_TOL and ratio > 6 and dt < 1,
            f"max cell error {max(errs):.4f} pJ (<= {TABLE_TOL}), wire W3/W0 = {ratio:.3f} (> 6), {dt:.3f}s")


def test_c02_geometry_fit():
    t0 = time.perf_counter()
    g = GeometryModel()
    err = max(abs(g.wire(w) - TABLE_WIRE[w]) for w in range(4))
    dt = time.perf_counter() - t0
    verdict("C2 geometry fit", err <= TABLE_TOL and dt < 1, f"max wire error {err:.4f} pJ, {dt:.3f}s")


N_TRACES = 1000


@pytest.fixture(scope="module")
def invariance_run():
    """Criterion-3 workload, shared with criterion 4's recount check."""
    cfg = CacheConfig(512, 64, 4)  # 2 sets: plenty of evictions and swaps
    t0 = time.perf_counter()
    equal = swaps = mismatches = 0
    kinds = {"uniform": 0, "zipf": 0, "hotset": 0}
    for i in range(N_TRACES):
        rng = random.Random(i)
        kind = rng.choice(list(kinds))
        kinds[kind] += 1
        spec = SyntheticSpec(kind, 300, 64 * rng.choice([8, 12, 16]), zipf_alpha=rng.uniform(0.3, 1.5),
                             hot_lines=rng.choice([1, 2]), hot_fraction=rng.uniform(0.3, 0.9),
                             store_ratio=rng.uniform(0, 0.4), seed=rng.getrandbits(32),
                             set_count=cfg.set_count, warmup=rng.random() < 0.5)
        trace = generate(spec)
        E = rng.choice([4, 8, 16, 32, 64])
        seed = rng.getrandbits(64)
        off = Simulator("sequential", cfg, PolicyConfig(E, E // 2, "exact", enabled=False))
        base = [(r.hit, r.evicted_tag) for r in map(off.step, trace)]
        exact = Simulator("sequential", cfg, PolicyConfig(E, E // 2, "exact", seed))
        out_exact, mm = run_with_recount(exact, trace, E, E // 2)
        log = Simulator("sequential", cfg, PolicyConfig(E, E // 2, "log", seed))
        out_log = [(r.hit, r.evicted_tag) for r in map(log.step, trace)]
        equal += out_exact == base and out_log == base
        swaps += exact.stats.swaps + log.stats.swaps
        mismatches += mm
    return dict(equal=equal, swaps=swaps, mismatches=mismatches, kinds=kinds, seconds=time.perf_counter() - t0)


def test_c03_miss_rate_invariance(invariance_run):
    r = invariance_run
    verdict("C3 miss-rate invariance",
            r["equal"] == N_TRACES and r["swaps"] > 0 and min(r["kinds"].values()) > 0 and r["seconds"] < 60,
            f"{r['equal']}/{N_TRACES} traces identical on vs off ({r['kinds']}, {r['swaps']} swaps exercised), "
            f"{r['seconds']:.1f}s")


def test_c04_counters(invariance_run):
    t0 = time.perf_counter()
    rng = RandomBits(2024)
    total = 0
    for _ in range(10_000):
        e = ZERO
        for _ in range(128):
            e = log_increment(e, rng)
        total += 2 ** e - 1
    mean = total / 10_000
    dt = time.perf_counter() - t0
    mm = invariance_run["mismatches"]
    verdict("C4 counters", 121.6 <= mean <= 134.4 and mm == 0 and dt < 10,
            f"Morris mean 2^e-1 over 10000x128 = {mean:.2f} (in [121.6, 134.4]); "
            f"exact-vs-recount mismatches on {N_TRACES} traces = {mm}; {dt:.1f}s")


def test_c05_counter_storage():
    log_bits = storage_bits(PolicyConfig(counter_mode="log"), 4)
    exact_bits = storage_bits(PolicyConfig(counter_mode="exact"), 4)
    verdict("C5 counter storage", (log_bits, exact_bits) == (20, 40), f"log {log_bits} bits, exact {exact_bits} bits")


PER_SET = 1000


@pytest.fixture(scope="module")
def hot_w3_trace():
    # 4 lines per set; warm-up places cold lines in W0-W2 and the hot line in W3
    return generate(SyntheticSpec("hotset", 128 * 4 + 128 * PER_SET, 32768, hot_lines=1, hot_fraction=0.6,
                                  seed=42))


def test_c06_hot_line_savings_oracle(hot_w3_trace):
    t0 = time.perf_counter()
    trace = hot_w3_trace
    on = Simulator("sequential", policy=PolicyConfig(256, 128, "exact")).run(trace)
    off = Simulator("sequential", policy=PolicyConfig(256, 128, "exact", enabled=False)).run(trace)
    base_wire, _, _ = hot_line_wire_oracle(trace, 128, 64, 256, 128, enabled=False)
    holi_wire, n_swaps, swap_pj = hot_line_wire_oracle(trace, 128, 64, 256, 128, enabled=True)
    err_base = abs(off.ledger.wire_pj - base_wire) / base_wire
    err_holi = abs((on.ledger.wire_pj + on.ledger.swap_pj) - (holi_wire + swap_pj)) / (holi_wire + swap_pj)
    savings = 1 - (on.ledger.wire_pj + on.ledger.swap_pj) / off.ledger.wire_pj
    dt = time.perf_counter() - t0
    verdict("C6 hot-line savings oracle",
            err_base <= 0.05 and err_holi <= 0.05 and savings > 0.30 and dt < 10,
            f"baseline wire err {err_base:.2%}, HoLiSwap wire+swap err {err_holi:.2%} "
            f"(oracle swaps {n_swaps}, sim swaps {on.stats.swaps}), wire savings net of swaps {savings:.1%} "
            f"(> 30%), {dt:.1f}s")


def test_c07_epoch_sweep_shape():
    t0 = time.perf_counter()
    trace = generate(SyntheticSpec("hotset", 128 * 4 + 128 * 1100, 32768, hot_fraction=0.6, seed=7))
    rows = sweep_epoch(dict(policy=PolicyConfig(counter_mode="exact", rng_seed=7)), [4, 16, 64, 256, 1024], trace)
    swaps = [r["swaps"] for r in rows]
    shares = [r["blocked_share"] for r in rows]
    ok = (all(a >= b for a, b in zip(swaps, swaps[1:]))
          and all(r["blocked_cycles"] == 4 * r["swaps"] for r in rows)
          and all(a >= b for a, b in zip(shares, shares[1:])) and shares[0] > shares[-1])
    dt = time.perf_counter() - t0
    verdict("C7 epoch sweep", ok and dt < 30,
            f"swaps {swaps}, blocked share {[f'{s:.4%}' for s in shares]}, {dt:.1f}s")


def test_c08_static_predictor_coupling(hot_w3_trace):
    t0 = time.perf_counter()
    acc = {}
    consistent = True
    for enabled in (True, False):
        st = Simulator("prediction_static", policy=PolicyConfig(256, 128, "exact", enabled=enabled)) \
            .run(hot_w3_trace).stats
        acc[enabled] = st.correct / st.predictions
        hist = st.load_way_histogram
        consistent &= st.correct == hist[0] and st.predictions == sum(hist)
        consistent &= st.way_histogram == hist  # load-only trace
    gain = acc[True] - acc[False]
    dt = time.perf_counter() - t0
    verdict("C8 static predictor coupling", gain >= 0.20 and consistent and dt < 10,
            f"accuracy {acc[False]:.1%} -> {acc[True]:.1%} (+{gain * 100:.1f} pp, >= 20), "
            f"equals way-0 load-hit share: {consistent}, {dt:.1f}s")


def test_c09_log_vs_exact_gap():
    t0 = time.perf_counter()
    gaps = []
    for seed in range(20):
        trace = generate(SyntheticSpec("hotset", 128 * 4 + 128 * 300, 32768, hot_fraction=0.6, seed=seed))
        exact = Simulator(policy=PolicyConfig(counter_mode="exact", rng_seed=seed)).run(trace).ledger.total_pj
        log = Simulator(policy=PolicyConfig(counter_mode="log", rng_seed=seed)).run(trace).ledger.total_pj
        gaps.append(abs(log - exact) / exact)
    mean = float(np.mean(gaps))
    dt = time.perf_counter() - t0
    verdict("C9 log vs exact", mean <= 0.02 and dt < 60,
            f"mean |E_log - E_exact| / E_exact over 20 seeds = {mean:.3%} (max {max(gaps):.3%}), {dt:.1f}s")


def test_c10_determinism(tmp_path):
    from holiswap.cli import main

    t0 = time.perf_counter()
    trace = generate(SyntheticSpec("zipf", 20_000, 65536, zipf_alpha=1.1, store_ratio=0.2, seed=3))
    est = dict(design="prediction_pc", counters="logarithmic", epoch_len=64, threshold=32, seed=99, hot_stats=True)
    a = emit(CacheSimulator(**est).fit(trace).report_, "json")
    b = emit(CacheSimulator(**est).fit(trace).report_, "json")
    from holiswap.trace_io import write_trace
    p = tmp_path / "t.txt"
    write_trace(p, trace)
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        main(["run", "--design", "prediction-pc", "--counters", "log", "--seed", "99", "--epoch", "64",
              "--trace", str(p), "--out", str(out)])
        outs.append(out.read_bytes())
    ok = a == b and outs[0] == outs[1] and json.loads(outs[0])["totals"]["swaps"] > 0
    dt = time.perf_counter() - t0
    verdict("C10 determinism", ok and dt < 10, f"estimator and CLI JSON byte-identical across runs: {ok}, {dt:.1f}s")
