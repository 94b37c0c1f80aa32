"""Command-line front end.

Subcommands: ``run``, ``sweep``, ``gen`` and ``analyze``. Defaults may be
supplied through an INI file named by ``HLSW_CONFIG``; its ``[run]`` section
uses the long flag names without dashes (``design``, ``epoch``, ``cache_kb``,
...) and an optional ``[timing]`` section overrides latency parameters.
Command-line flags take precedence.

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal invariant
violation.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import logging
import os
import sys

from .cache_model import CacheConfig, CacheCorruptionError
from .designs import DesignKind, Simulator, TimingParams
from .energy import EnergyConfigError, default_energy, read_config, table_from_config
from .metrics import InvariantViolation, emit, emit_rows, emit_stats, finalize_report, hot_line_stats, sweep_epoch
from .policy import PolicyConfig
from .trace_io import SyntheticSpec, TraceFormatError, generate, read_trace, write_trace

log = logging.getLogger("holiswap")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

DESIGNS = ["sequential", "parallel", "prediction", "prediction-static", "prediction-pc", "filter"]

BUILTIN = {
    "design": "sequential",
    "holiswap": "on",
    "epoch": 256,
    "threshold": None,
    "counters": "log",
    "seed": 0,
    "cache_kb": 32,
    "line_bytes": 64,
    "assoc": 4,
    "geometry": None,
    "format": "json",
    "filter_l1": "sequential",
}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _cache_flags(p):
    p.add_argument("--cache-kb", type=int)
    p.add_argument("--line-bytes", type=int)
    p.add_argument("--assoc", type=int)


def _sim_flags(p):
    p.add_argument("--design", choices=DESIGNS)
    p.add_argument("--holiswap", choices=["on", "off"])
    p.add_argument("--epoch", type=int)
    p.add_argument("--threshold", type=int)
    p.add_argument("--counters", choices=["exact", "log"])
    p.add_argument("--seed", type=int)
    _cache_flags(p)
    p.add_argument("--geometry", metavar="FILE", help="energy table or geometry (INI)")
    p.add_argument("--filter-l1", choices=["sequential", "parallel"],
                   help="L1 lookup beneath the L0 filter cache")


def _io_flags(p, trace_required=True):
    p.add_argument("--trace", metavar="FILE", required=trace_required)
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--out", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holiswap", description="HoLiSwap L1 cache simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    run = sub.add_parser("run", help="simulate one configuration")
    _sim_flags(run)
    _io_flags(run)
    run.add_argument("--hot-stats", action="store_true", help="include offline hot-line statistics")

    sweep = sub.add_parser("sweep", help="epoch-length sweep with threshold E/2")
    _sim_flags(sweep)
    _io_flags(sweep)
    sweep.add_argument("--epochs", default="4,16,64,256,1024")
    sweep.add_argument("--jobs", type=int, default=1)

    gen = sub.add_parser("gen", help="write a synthetic trace")
    gen.add_argument("--kind", choices=["uniform", "zipf", "hotset"], default="hotset")
    gen.add_argument("--records", type=int, default=100_000)
    gen.add_argument("--span", type=int, default=32768, help="address span in bytes")
    gen.add_argument("--alpha", type=float, default=1.0)
    gen.add_argument("--hot-lines", type=int, default=1)
    gen.add_argument("--hot-fraction", type=float, default=0.6)
    gen.add_argument("--store-ratio", type=float, default=0.0)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--no-warmup", action="store_true")
    gen.add_argument("--binary", action="store_true", help="packed HLSW1 format")
    _cache_flags(gen)
    gen.add_argument("--out", metavar="FILE", required=True)

    analyze = sub.add_parser("analyze", help="offline hot-line statistics")
    _cache_flags(analyze)
    _io_flags(analyze)
    return parser


def load_defaults(env=None):
    """Read ``[run]``/``[timing]`` from the file named by HLSW_CONFIG."""
    env = os.environ if env is None else env
    path = env.get("HLSW_CONFIG")
    if not path:
        return {}, None
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise InputError(f"HLSW_CONFIG: cannot read {path}: {exc}") from exc
    run = {k.replace("-", "_"): v for k, v in cp["run"].items()} if cp.has_section("run") else {}
    unknown = set(run) - set(BUILTIN)
    if unknown:
        raise UsageError(f"HLSW_CONFIG: unknown keys {sorted(unknown)}")
    return run, cp


def _get(args, defaults, name, conv=str):
    v = getattr(args, name, None)
    if v is not None:
        return v
    if name in defaults and defaults[name] != "":
        try:
            return conv(defaults[name])
        except ValueError as exc:
            raise UsageError(f"HLSW_CONFIG: bad value for {name}: {defaults[name]!r}") from exc
    return BUILTIN[name]


def _timing(*cps) -> TimingParams:
    kw = {}
    names = {f.name for f in dataclasses.fields(TimingParams)}
    for cp in cps:
        if cp is None or not cp.has_section("timing"):
            continue
        for k, v in cp["timing"].items():
            if k not in names:
                raise UsageError(f"unknown timing parameter {k!r}")
            try:
                kw[k] = int(v)
            except ValueError as exc:
                raise UsageError(f"timing parameter {k} must be an integer") from exc
    try:
        return TimingParams(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cache_config(args, defaults) -> CacheConfig:
    kb = _get(args, defaults, "cache_kb", int)
    try:
        return CacheConfig(kb * 1024, _get(args, defaults, "line_bytes", int), _get(args, defaults, "assoc", int))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def sim_kwargs(args, defaults, cp) -> dict:
    cache = _cache_config(args, defaults)
    epoch = _get(args, defaults, "epoch", int)
    threshold = _get(args, defaults, "threshold", int)
    if threshold is None:
        threshold = max(1, epoch // 2)
    if threshold > epoch:
        raise UsageError(f"--threshold {threshold} exceeds --epoch {epoch}; no line could become hot")
    counters = _get(args, defaults, "counters")
    holiswap = _get(args, defaults, "holiswap")
    if holiswap not in ("on", "off"):
        raise UsageError(f"holiswap must be on or off, not {holiswap!r}")
    try:
        policy = PolicyConfig(epoch, threshold, counters, _get(args, defaults, "seed", int), holiswap == "on")
        design = DesignKind.parse(_get(args, defaults, "design"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    geometry = _get(args, defaults, "geometry")
    geo_cp = None
    try:
        if geometry:
            geo_cp = read_config(geometry)
            table = table_from_config(geo_cp, cache.associativity)
        else:
            table = default_energy(cache.capacity_bytes, cache.associativity)
    except EnergyConfigError as exc:
        raise InputError(str(exc)) from exc
    if table.ways != cache.associativity:
        raise UsageError(f"energy table has {table.ways} ways but --assoc is {cache.associativity}")
    return dict(design=design, cache=cache, policy=policy, timing=_timing(cp, geo_cp), table=table,
                filter_l1_lookup=_get(args, defaults, "filter_l1"))


def _load_trace(path):
    try:
        return read_trace(path)
    except OSError as exc:
        raise InputError(f"cannot read trace {path}: {exc.strerror or exc}") from exc
    except TraceFormatError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _write(data: bytes, out) -> None:
    if out:
        try:
            with open(out, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def cmd_run(args, defaults, cp):
    kw = sim_kwargs(args, defaults, cp)
    trace = _load_trace(args.trace)
    sim = Simulator(**kw).run(trace)
    hot = hot_line_stats(trace, sim.cache_cfg) if args.hot_stats else None
    report = finalize_report(sim, hot)
    _write(emit(report, _get(args, defaults, "format")), args.out)
    log.info("run: %d references, %d swaps, %.3f pJ", report.totals["references"],
             report.totals["swaps"], report.total_energy)


def cmd_sweep(args, defaults, cp):
    kw = sim_kwargs(args, defaults, cp)
    try:
        epochs = [int(e) for e in args.epochs.split(",") if e.strip()]
    except ValueError as exc:
        raise UsageError(f"--epochs must be a comma-separated integer list: {args.epochs!r}") from exc
    if not epochs:
        raise UsageError("--epochs is empty")
    if kw["policy"].counter_mode == "logarithmic" and any(e & (e - 1) for e in epochs):
        raise UsageError("logarithmic counters need power-of-two epoch lengths")
    trace = _load_trace(args.trace)
    try:
        rows = sweep_epoch(kw, epochs, trace, n_jobs=args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    fmt = args.format or defaults.get("format") or "csv"
    _write(emit_rows(rows, fmt), args.out)


def cmd_gen(args, defaults, cp):
    cache = _cache_config(args, defaults)
    seed = args.seed if args.seed is not None else _get(argparse.Namespace(), defaults, "seed", int)
    try:
        spec = SyntheticSpec(kind=args.kind, n_records=args.records, address_span=args.span,
                             zipf_alpha=args.alpha, hot_lines=args.hot_lines, hot_fraction=args.hot_fraction,
                             store_ratio=args.store_ratio, seed=seed, line_bytes=cache.line_bytes,
                             set_count=cache.set_count, warmup=not args.no_warmup)
        records = generate(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        write_trace(args.out, records, binary=args.binary)
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc}") from exc


def cmd_analyze(args, defaults, cp):
    cache = _cache_config(args, defaults)
    stats = hot_line_stats(_load_trace(args.trace), cache)
    _write(emit_stats(stats, _get(args, defaults, "format")), args.out)


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "gen": cmd_gen, "analyze": cmd_analyze}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"holiswap: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        defaults, cp = load_defaults()
        COMMANDS[args.command](args, defaults, cp)
    except UsageError as exc:
        print(f"holiswap: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"holiswap: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantViolation, CacheCorruptionError) as exc:
        print(f"holiswap: internal invariant violation: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
