from .cache_model import AccessOutcome, CacheConfig, CacheLine, CacheSet, CacheState, index_of, lookup, swap_ways
from .designs import DesignKind, L0Cache, PredictorState, Simulator, TimingParams
from .energy import EnergyLedger, EnergyTable, GeometryModel
from .estimator import CacheSimulator, HotLineAnalyzer, check_trace
from .metrics import HotLineStats, SimReport, emit, finalize_report, hot_line_stats, sweep_epoch
from .policy import HoLiSwapPolicy, PolicyConfig, storage_bits
from .trace_io import SyntheticSpec, TraceRecord, generate, parse_trace, read_trace, write_trace

__version__ = "0.1.0"
