"""Per-access, per-swap and counter energy accounting (all values in pJ).

Energies come either from a measured per-way table or from a subarray
placement grid where each way's output wire is routed Manhattan-style to the
way multiplexer next to subarray (0, 0).

Configuration files use INI syntax::

    [table]
    total_seq = 5.7, 8.8, 10.9, 14.0
    wire = 1.6, 4.7, 6.8, 9.9
    # optional; derived as sum(total_seq - wire) + wire when omitted
    total_par = 18.0, 21.1, 23.2, 26.3
    l0_access = 4.1

    [geometry]
    rows = 2
    cols = 2
    base_wire = 1.6
    hop_x = 3.1
    hop_y = 5.2
    sram_access = 4.1
    # way = x:y[;x:y...]  (several positions are averaged)
    positions = 0=0:0, 1=1:0, 2=0:1, 3=1:1

A file holds either section; ``[geometry]`` wins if both are present.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from typing import Dict, List, Tuple

L0_ACCESS_PJ = 4.1
COUNTER_ENERGY_FRACTION = 0.0062

SEQUENTIAL_RULE = "sequential"
PARALLEL_RULE = "parallel"


class EnergyConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyTable:
    total_seq: Tuple[float, ...] = (5.7, 8.8, 10.9, 14.0)
    wire: Tuple[float, ...] = (1.6, 4.7, 6.8, 9.9)
    total_par: Tuple[float, ...] = (18.0, 21.1, 23.2, 26.3)
    l0_access: float = L0_ACCESS_PJ

    def __post_init__(self):
        object.__setattr__(self, "total_seq", tuple(float(v) for v in self.total_seq))
        object.__setattr__(self, "wire", tuple(float(v) for v in self.wire))
        if not self.total_par:
            sram_all = sum(t - w for t, w in zip(self.total_seq, self.wire))
            object.__setattr__(self, "total_par", tuple(sram_all + w for w in self.wire))
        object.__setattr__(self, "total_par", tuple(float(v) for v in self.total_par))
        n = len(self.total_seq)
        if n == 0 or len(self.wire) != n or len(self.total_par) != n:
            raise EnergyConfigError("total_seq, wire and total_par need one entry per way")
        if any(v < 0 for v in self.total_seq + self.wire + self.total_par):
            raise EnergyConfigError("energies must be non-negative")
        if any(t < w for t, w in zip(self.total_seq, self.wire)):
            raise EnergyConfigError("wire energy exceeds total sequential energy")

    @property
    def ways(self) -> int:
        return len(self.total_seq)

    @property
    def sram_seq(self) -> Tuple[float, ...]:
        return tuple(t - w for t, w in zip(self.total_seq, self.wire))

    @property
    def sram_all(self) -> float:
        return sum(self.sram_seq)

    def _check_way(self, way: int) -> None:
        if not 0 <= way < self.ways:
            raise EnergyConfigError(f"no energy entry for way {way} ({self.ways}-way table)")

    def access_energy(self, rule: str, way: int) -> Tuple[float, float]:
        """``(sram, wire)`` for reading ``way`` under a lookup rule.

        Parallel probes use the parallel row for the array part, so a table
        whose parallel row is not ``sram_all + wire`` is honored as given.
        """
        self._check_way(way)
        wire = self.wire[way]
        if rule == PARALLEL_RULE:
            return self.total_par[way] - wire, wire
        return self.total_seq[way] - wire, wire

    def swap_energy(self, a: int, b: int) -> float:
        """Two reads and two writes, write energy taken equal to read energy."""
        if a == b:
            raise ValueError("swap needs two distinct ways")
        self._check_way(a)
        self._check_way(b)
        return 2.0 * (self.total_seq[a] + self.total_seq[b])

    def counter_energy_per_access(self) -> float:
        mean_seq = sum(self.total_seq) / self.ways
        return COUNTER_ENERGY_FRACTION * mean_seq


def counter_overhead_energy(table: EnergyTable, enabled: bool, events: int) -> float:
    if not enabled:
        return 0.0
    return events * table.counter_energy_per_access()


@dataclass(frozen=True)
class GeometryModel:
    rows: int = 2
    cols: int = 2
    base_wire: float = 1.6
    hop_x: float = 3.1
    hop_y: float = 5.2
    sram_access: float = 4.1
    # way -> list of (x, y) subarray coordinates
    way_position: Dict[int, Tuple[Tuple[int, int], ...]] = field(
        default_factory=lambda: {0: ((0, 0),), 1: ((1, 0),), 2: ((0, 1),), 3: ((1, 1),)})

    def __post_init__(self):
        norm = {}
        for way, pos in self.way_position.items():
            if pos and isinstance(pos[0], int):
                pos = (pos,)
            pos = tuple((int(x), int(y)) for x, y in pos)
            for x, y in pos:
                if not (0 <= x < self.cols and 0 <= y < self.rows):
                    raise EnergyConfigError(f"way {way} placed at ({x},{y}) outside {self.rows}x{self.cols} grid")
            if not pos:
                raise EnergyConfigError(f"way {way} has no subarray")
            norm[int(way)] = pos
        object.__setattr__(self, "way_position", norm)

    @classmethod
    def round_robin(cls, rows: int, cols: int, associativity: int = 4, **kw) -> "GeometryModel":
        """Assign subarrays (row-major) to ways round-robin."""
        cells = [(x, y) for y in range(rows) for x in range(cols)]
        mapping: Dict[int, List[Tuple[int, int]]] = {w: [] for w in range(associativity)}
        for i, cell in enumerate(cells):
            mapping[i % associativity].append(cell)
        for w in range(associativity):
            if not mapping[w]:
                # fewer subarrays than ways: ways share subarrays
                mapping[w].append(cells[w % len(cells)])
        return cls(rows=rows, cols=cols, way_position={w: tuple(p) for w, p in mapping.items()}, **kw)

    @classmethod
    def for_capacity(cls, capacity_bytes: int, associativity: int = 4, subarray_bytes: int = 8192,
                     **kw) -> "GeometryModel":
        """Two-row grids of fixed-size subarrays: 16KB 2x1, 32KB 2x2, 64KB 2x4."""
        n_sub = max(1, capacity_bytes // subarray_bytes)
        rows = 2 if n_sub >= 2 else 1
        cols = max(1, n_sub // rows)
        return cls.round_robin(rows, cols, associativity, **kw)

    @property
    def ways(self) -> int:
        return len(self.way_position)

    def wire(self, way: int) -> float:
        try:
            pos = self.way_position[way]
        except KeyError:
            raise EnergyConfigError(f"way {way} has no position in the geometry") from None
        return sum(self.base_wire + x * self.hop_x + y * self.hop_y for x, y in pos) / len(pos)

    def to_table(self, l0_access: float = L0_ACCESS_PJ) -> EnergyTable:
        ways = sorted(self.way_position)
        if ways != list(range(len(ways))):
            raise EnergyConfigError("geometry must place ways 0..A-1")
        wire = [self.wire(w) for w in ways]
        seq = [self.sram_access + w for w in wire]
        par = [self.sram_access * len(ways) + w for w in wire]
        return EnergyTable(tuple(seq), tuple(wire), tuple(par), l0_access)


def wire_from_geometry(g: GeometryModel, way: int) -> float:
    return g.wire(way)


@dataclass
class EnergyLedger:
    sram_pj: float = 0.0
    wire_pj: float = 0.0
    swap_pj: float = 0.0
    counter_pj: float = 0.0
    l0_pj: float = 0.0

    def add(self, sram=0.0, wire=0.0, swap=0.0, counter=0.0, l0=0.0) -> None:
        if min(sram, wire, swap, counter, l0) < 0:
            raise ValueError("negative energy charge")
        self.sram_pj += sram
        self.wire_pj += wire
        self.swap_pj += swap
        self.counter_pj += counter
        self.l0_pj += l0

    @property
    def total_pj(self) -> float:
        return self.sram_pj + self.wire_pj + self.swap_pj + self.counter_pj + self.l0_pj

    def as_dict(self) -> Dict[str, float]:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["total_pj"] = self.total_pj
        return d


def _floats(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise EnergyConfigError(f"bad number list {text!r}") from exc


def _positions(text: str) -> Dict[int, Tuple[Tuple[int, int], ...]]:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            way, cells = item.split("=")
            out[int(way)] = tuple(tuple(int(c) for c in cell.split(":")) for cell in cells.split(";"))
        except ValueError as exc:
            raise EnergyConfigError(f"bad position entry {item.strip()!r}") from exc
    return out


def read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise EnergyConfigError(f"cannot read {path}: {exc}") from exc
    return cp


def table_from_config(cp: configparser.ConfigParser, associativity: int = 4) -> EnergyTable:
    """Build an EnergyTable from a parsed config; built-in defaults if empty."""
    l0 = L0_ACCESS_PJ
    if cp.has_section("table"):
        l0 = cp.getfloat("table", "l0_access", fallback=L0_ACCESS_PJ)
    if cp.has_section("geometry"):
        sec = cp["geometry"]
        kw = {}
        for name in ("base_wire", "hop_x", "hop_y", "sram_access"):
            if name in sec:
                kw[name] = sec.getfloat(name)
        rows = sec.getint("rows", fallback=2)
        cols = sec.getint("cols", fallback=2)
        if "positions" in sec:
            return GeometryModel(rows=rows, cols=cols, way_position=_positions(sec["positions"]),
                                 **kw).to_table(l0)
        return GeometryModel.round_robin(rows, cols, associativity, **kw).to_table(l0)
    if cp.has_section("table"):
        sec = cp["table"]
        if "total_seq" not in sec or "wire" not in sec:
            raise EnergyConfigError("[table] needs total_seq and wire")
        par = _floats(sec["total_par"]) if "total_par" in sec else ()
        return EnergyTable(_floats(sec["total_seq"]), _floats(sec["wire"]), par, l0)
    return EnergyTable()


def load_energy(path, associativity: int = 4) -> EnergyTable:
    return table_from_config(read_config(path), associativity)



def default_energy(capacity_bytes: int = 32768, associativity: int = 4) -> EnergyTable:
    """Measured table for 32KB/4-way; a round-robin geometry otherwise."""
    if capacity_bytes == 32768 and associativity == 4:
        return EnergyTable()
    return GeometryModel.for_capacity(capacity_bytes, associativity).to_table()
