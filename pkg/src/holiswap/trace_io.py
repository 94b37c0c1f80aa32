"""Memory-reference traces: text/binary formats and synthetic generators.

Text format, one reference per line::

    <op> <pc-hex> <addr-hex>

with ``op`` in ``{L, S}``. Lines starting with ``#`` and blank lines are
ignored. The packed binary format starts with the magic ``HLSW1`` followed by
17-byte little-endian records ``(op: u8, pc: u64, addr: u64)`` where ``op`` is
the ASCII code of ``L`` or ``S``.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, List, NamedTuple, Union

import numpy as np

MAGIC = b"HLSW1"
_REC = struct.Struct("<BQQ")
_U64 = 2 ** 64

HOT_PC_BASE = 0x400000
COLD_PC_BASE = 0x500000


class TraceFormatError(ValueError):
    def __init__(self, msg: str, lineno: int = 0):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)


class TraceRecord(NamedTuple):
    pc: int
    addr: int
    op: str = "L"

    @property
    def is_store(self) -> bool:
        return self.op == "S"


def _parse_hex(tok: str, lineno: int) -> int:
    try:
        v = int(tok, 16)
    except ValueError:
        raise TraceFormatError(f"bad hex value {tok!r}", lineno) from None
    if not 0 <= v < _U64:
        raise TraceFormatError(f"value {tok} does not fit in 64 bits", lineno)
    return v


def parse_text(lines: Iterable[str]) -> List[TraceRecord]:
    out = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] not in ("L", "S"):
            raise TraceFormatError(f"unknown op {parts[0]!r}", lineno)
        if len(parts) != 3:
            raise TraceFormatError(f"expected 3 fields, got {len(parts)}", lineno)
        out.append(TraceRecord(_parse_hex(parts[1], lineno), _parse_hex(parts[2], lineno), parts[0]))
    return out


def parse_binary(data: bytes) -> List[TraceRecord]:
    if not data.startswith(MAGIC):
        raise TraceFormatError("missing HLSW1 magic")
    body = memoryview(data)[len(MAGIC):]
    if len(body) % _REC.size:
        raise TraceFormatError(f"truncated record at byte {len(MAGIC) + len(body) // _REC.size * _REC.size}")
    out = []
    for i, (op, pc, addr) in enumerate(_REC.iter_unpack(body), 1):
        if op not in (0x4C, 0x53):
            raise TraceFormatError(f"unknown op byte {op:#x}", i)
        out.append(TraceRecord(pc, addr, chr(op)))
    return out


def parse_trace(stream: Union[bytes, str, BinaryIO]) -> List[TraceRecord]:
    """Parse a text or binary trace from bytes, str or a binary stream."""
    if isinstance(stream, str):
        return parse_text(stream.splitlines())
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    if data.startswith(MAGIC):
        return parse_binary(bytes(data))
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise TraceFormatError(f"non-ASCII text trace: {exc}") from None
    return parse_text(text.splitlines())


def read_trace(path) -> List[TraceRecord]:
    with open(path, "rb") as fh:
        return parse_trace(fh)


def serialize_text(records: Iterable[TraceRecord]) -> str:
    buf = io.StringIO()
    for r in records:
        buf.write(f"{r.op} {r.pc:#x} {r.addr:#x}\n")
    return buf.getvalue()


def serialize_binary(records: Iterable[TraceRecord]) -> bytes:
    return MAGIC + b"".join(_REC.pack(ord(r.op), r.pc, r.addr) for r in records)


def write_trace(path, records, binary: bool = False) -> None:
    if binary:
        with open(path, "wb") as fh:
            fh.write(serialize_binary(records))
    else:
        with open(path, "w") as fh:
            fh.write(serialize_text(records))


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "hotset"
    n_records: int = 100_000
    address_span: int = 32768
    zipf_alpha: float = 1.0
    hot_lines: int = 1
    hot_fraction: float = 0.6
    store_ratio: float = 0.0
    seed: int = 0
    line_bytes: int = 64
    set_count: int = 128
    # prepend one pass over each set's lines, cold lines first
    warmup: bool = True
    pc_pool: int = 8

    def __post_init__(self):
        if self.kind not in ("uniform", "zipf", "hotset"):
            raise ValueError(f"unknown trace kind {self.kind!r}")
        if self.n_records < 0:
            raise ValueError("n_records must be non-negative")
        if self.address_span < self.line_bytes:
            raise ValueError("address_span must cover at least one line")
        if not 0.0 <= self.hot_fraction <= 1.0:
            raise ValueError("hot_fraction must lie in [0, 1]")
        if not 0.0 <= self.store_ratio <= 1.0:
            raise ValueError("store_ratio must lie in [0, 1]")
        if self.kind == "zipf" and not self.zipf_alpha > 0:
            raise ValueError("zipf_alpha must be positive")
        if self.pc_pool < 1:
            raise ValueError("pc_pool must be positive")

    @property
    def n_lines(self) -> int:
        return self.address_span // self.line_bytes


def _assemble(rng, lines: np.ndarray, pcs: np.ndarray, spec: SyntheticSpec) -> List[TraceRecord]:
    n = len(lines)
    offsets = rng.integers(0, max(1, spec.line_bytes // 8), size=n) * 8
    stores = rng.random(n) < spec.store_ratio
    addrs = lines.astype(np.uint64) * np.uint64(spec.line_bytes) + offsets.astype(np.uint64)
    ops = np.where(stores, "S", "L")
    return [TraceRecord(int(p), int(a), str(o)) for p, a, o in zip(pcs.tolist(), addrs.tolist(), ops)]


def _class_pcs(lines: np.ndarray, base: int, pool: int) -> np.ndarray:
    return base + 4 * (lines % pool)


def generate_uniform(spec: SyntheticSpec, seed: int = None) -> List[TraceRecord]:
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    lines = rng.integers(0, spec.n_lines, size=spec.n_records)
    return _assemble(rng, lines, _class_pcs(lines, HOT_PC_BASE, spec.pc_pool), spec)


def zipf_weights(n: int, alpha: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1, dtype=float) ** alpha
    return w / w.sum()


def generate_zipf(spec: SyntheticSpec, seed: int = None) -> List[TraceRecord]:
    """Line popularity follows Zipf(alpha); ranks are shuffled over the span."""
    if not spec.zipf_alpha > 0:
        raise ValueError("zipf_alpha must be positive")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    by_rank = rng.permutation(spec.n_lines)
    ranks = rng.choice(spec.n_lines, size=spec.n_records, p=zipf_weights(spec.n_lines, spec.zipf_alpha))
    lines = by_rank[ranks]
    # top ranks share the hot PC pool
    hot = ranks < spec.pc_pool
    pcs = np.where(hot, _class_pcs(lines, HOT_PC_BASE, spec.pc_pool),
                   _class_pcs(lines, COLD_PC_BASE, spec.pc_pool))
    return _assemble(rng, lines, pcs, spec)


def generate_hotset(spec: SyntheticSpec, seed: int = None) -> List[TraceRecord]:
    """Per-set skew: the designated hot lines of each set receive
    ``hot_fraction`` of that set's references; the rest go uniformly to the
    set's cold lines.

    Set ``s`` owns lines ``s + k * set_count``; the last ``hot_lines`` values
    of ``k`` are hot. With ``warmup`` the trace opens with one reference per
    line, cold lines first, so hot lines land in the highest-numbered ways of
    an empty LRU cache.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    per_set = spec.n_lines // spec.set_count
    hot = spec.hot_lines if spec.hot_fraction > 0 else 0
    if spec.hot_fraction > 0 and spec.hot_lines < 1:
        raise ValueError("hot_fraction > 0 needs at least one hot line per set")
    cold = per_set - hot
    if per_set < 1 or cold < 0:
        raise ValueError(f"address_span holds {per_set} lines per set, fewer than hot_lines={hot}")
    if cold == 0 and spec.hot_fraction < 1:
        raise ValueError("no cold lines left for the non-hot share of references")
    S = spec.set_count

    pro_k = np.arange(per_set) if spec.warmup else np.empty(0, dtype=int)
    prologue = (np.arange(S)[None, :] + pro_k[:, None] * S).ravel()[: spec.n_records]

    n = spec.n_records - len(prologue)
    sets = rng.integers(0, S, size=n)
    is_hot = rng.random(n) < spec.hot_fraction
    k = np.where(is_hot,
                 cold + rng.integers(0, max(hot, 1), size=n),
                 rng.integers(0, max(cold, 1), size=n))
    body = sets + k * S
    lines = np.concatenate([prologue, body]).astype(np.int64)
    hot_line = (lines // S) >= cold
    pcs = np.where(hot_line, _class_pcs(lines, HOT_PC_BASE, spec.pc_pool),
                   _class_pcs(lines, COLD_PC_BASE, spec.pc_pool))
    return _assemble(rng, lines, pcs, spec)


_GENERATORS = {"uniform": generate_uniform, "zipf": generate_zipf, "hotset": generate_hotset}


def generate(spec: SyntheticSpec, seed: int = None) -> List[TraceRecord]:
    return _GENERATORS[spec.kind](spec, seed)
