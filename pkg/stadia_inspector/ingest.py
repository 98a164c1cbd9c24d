"""Load packet traces and WebRTC-internals traces of the public dataset

The dataset files are bare tshark exports: no header, one packet per line,
whitespace separated. A TOML manifest supplies the column schema and the
stream metadata of every file::

    base_dir = "Stadia_cloud_gaming_dataset_2020"   # optional

    [[trace]]
    path = "D1/TR_RTP_downlink.txt"
    game = "TR"              # TR | TH | SP
    protocol = "RTP"         # RTP | RTCP | DTLS | STUN | MIXED
    direction = "downlink"   # downlink | uplink
    codec = "VP9"            # VP9 | H264 | NA (default NA)
    resolution = "1080p"     # 720p | 1080p | 4K | NA (default NA)
    dataset = "D1"           # D1 .. D8
    schema = ["Y1", "Y2", "Y3"]

Relative paths resolve against ``base_dir``, itself relative to the manifest.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Literal, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from stadia_inspector.config import (
    DELTA_TOLERANCE_S,
    MAX_PAYLOAD_LEN,
    MIN_PAYLOAD_LEN,
    PACKET_COLUMNS,
    STATS_COLUMNS,
    TIMESTAMP_DECIMALS,
)
from stadia_inspector.errors import (
    ConfigError,
    DatasetLoadError,
    StadiaInspectorError,
    TraceParseError,
    TraceValidationError,
)
from stadia_inspector.settings import load_toml, parse_model

logger = logging.getLogger(__name__)

Game = Literal['TR', 'TH', 'SP']
Protocol = Literal['RTP', 'RTCP', 'DTLS', 'STUN', 'MIXED']
Direction = Literal['downlink', 'uplink']
Codec = Literal['VP9', 'H264', 'NA']
Resolution = Literal['720p', '1080p', '4K', 'NA']
DatasetId = Literal['D1', 'D2', 'D3', 'D4', 'D5', 'D6', 'D7', 'D8']
Column = Literal['Y1', 'Y2', 'Y3', 'Y4', 'Y5', 'Y6', 'Y7', 'Y8']


class StreamMeta(BaseModel):
    """Game, protocol, direction and encoding of one captured stream"""
    model_config = ConfigDict(frozen=True)

    game: Game
    protocol: Protocol
    direction: Direction
    codec: Codec = 'NA'
    resolution: Resolution = 'NA'
    dataset_id: DatasetId = 'D1'

    @property
    def label(self) -> str:
        """Short label such as 'TR RTP downlink'"""
        return f"{self.game} {self.protocol} {self.direction}"


@dataclass(frozen=True)
class PacketRecord:
    """One captured packet (dataset columns Y1, Y2, Y3)"""
    t_epoch: float
    delta: float
    payload_len: int


@dataclass(frozen=True, eq=False)
class Trace:
    """An ordered packet sequence with its stream metadata

    Records are held column-wise in numpy arrays; ``records`` materialises
    PacketRecord objects on demand.
    """
    meta: StreamMeta
    t_epoch: np.ndarray
    delta: np.ndarray
    payload_len: np.ndarray
    source: Optional[Path] = None

    @classmethod
    def from_records(cls, meta: StreamMeta, records: Sequence[PacketRecord],
                     source: Optional[Path] = None) -> "Trace":
        return cls(
            meta=meta,
            t_epoch=np.array([r.t_epoch for r in records], dtype=np.float64),
            delta=np.array([r.delta for r in records], dtype=np.float64),
            payload_len=np.array([r.payload_len for r in records], dtype=np.int64),
            source=source,
        )

    @classmethod
    def from_times(cls, meta: StreamMeta, times: np.ndarray, sizes: np.ndarray,
                   start_epoch: float = 0.0) -> "Trace":
        """Build a trace from relative times, rounding to microsecond resolution"""
        t = np.round(np.asarray(times, dtype=np.float64) + start_epoch, TIMESTAMP_DECIMALS)
        delta = np.round(np.diff(t, prepend=t[:1]), TIMESTAMP_DECIMALS) if len(t) else t.copy()
        return cls(meta=meta, t_epoch=t, delta=delta,
                   payload_len=np.asarray(sizes, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.t_epoch)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (self.meta == other.meta
                and np.array_equal(self.t_epoch, other.t_epoch)
                and np.array_equal(self.delta, other.delta)
                and np.array_equal(self.payload_len, other.payload_len))

    @property
    def records(self) -> List[PacketRecord]:
        return [
            PacketRecord(float(t), float(d), int(n))
            for t, d, n in zip(self.t_epoch, self.delta, self.payload_len)
        ]

    @property
    def duration(self) -> float:
        """Span between first and last packet in seconds"""
        if len(self) < 2:
            return 0.0
        return float(self.t_epoch[-1] - self.t_epoch[0])

    @property
    def relative_times(self) -> np.ndarray:
        """Arrival times in seconds since the first packet"""
        if len(self) == 0:
            return self.t_epoch.copy()
        return self.t_epoch - self.t_epoch[0]

    def window(self, start: float, end: float) -> "Trace":
        """Sub-trace of packets with start <= relative time < end"""
        rel = self.relative_times
        mask = (rel >= start) & (rel < end)
        return Trace(self.meta, self.t_epoch[mask], self.delta[mask], self.payload_len[mask], self.source)

    def select(self, mask: np.ndarray, meta: Optional[StreamMeta] = None) -> "Trace":
        """Sub-trace of the masked packets with recomputed deltas"""
        t = self.t_epoch[mask]
        delta = np.round(np.diff(t, prepend=t[:1]), TIMESTAMP_DECIMALS) if len(t) else t.copy()
        return Trace(meta or self.meta, t, delta, self.payload_len[mask], self.source)


@dataclass(frozen=True)
class StatsRecord:
    """One second of WebRTC-internals metrics (dataset columns Y4..Y8)"""
    frame_height: Optional[float] = None
    fps: Optional[float] = None
    rtt: Optional[float] = None
    packets_lost: Optional[float] = None
    jitter_buffer_delay: Optional[float] = None


STATS_FIELDS = {
    'Y4': 'frame_height',
    'Y5': 'fps',
    'Y6': 'rtt',
    'Y7': 'packets_lost',
    'Y8': 'jitter_buffer_delay',
}


@dataclass(frozen=True)
class StatsTrace:
    """Per-second WebRTC-internals series of one experiment"""
    meta: StreamMeta
    records: List[StatsRecord] = field(default_factory=list)
    source: Optional[Path] = None

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        """Values of one StatsRecord field, NaN where absent"""
        return np.array([
            np.nan if getattr(r, name) is None else getattr(r, name)
            for r in self.records
        ], dtype=np.float64)


class ManifestEntry(BaseModel):
    """One file listed in a dataset manifest"""
    model_config = ConfigDict(frozen=True)

    path: Path
    meta: StreamMeta
    schema_: Tuple[Column, ...]

    @field_validator('schema_')
    @classmethod
    def _check_schema(cls, schema: Tuple[str, ...]) -> Tuple[str, ...]:
        if not schema:
            raise ValueError("schema must not be empty")
        if len(set(schema)) != len(schema):
            raise ValueError(f"schema has duplicate columns: {schema}")
        if ('Y2' in schema or 'Y3' in schema) and 'Y1' not in schema:
            raise ValueError("schema with Y2 or Y3 must contain Y1")
        return schema

    @property
    def is_packet_trace(self) -> bool:
        return 'Y1' in self.schema_


class DatasetManifest(BaseModel):
    """All entries of a dataset manifest"""
    entries: Tuple[ManifestEntry, ...]

    @model_validator(mode='after')
    def _unique_paths(self) -> "DatasetManifest":
        seen = set()
        for entry in self.entries:
            if entry.path in seen:
                raise ValueError(f"duplicate file path in manifest: {entry.path}")
            seen.add(entry.path)
        return self


def _parse_numeric(text: str, line_number: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TraceParseError(f"non-numeric field {text!r}", line_number) from None
    if not math.isfinite(value):
        raise TraceParseError(f"non-finite field {text!r}", line_number)
    return value


def _split_lines(text: Union[str, TextIO, Iterable[str]], width: int) -> Iterator[Tuple[int, List[float]]]:
    """Yield (line number, numeric fields) for every non-blank line"""
    lines = text.splitlines() if isinstance(text, str) else text
    for line_number, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != width:
            raise TraceParseError(f"expected {width} columns, found {len(parts)}", line_number)
        yield line_number, [_parse_numeric(p, line_number) for p in parts]


def _check_record(record: PacketRecord, previous: Optional[PacketRecord], line_number: int) -> None:
    if not MIN_PAYLOAD_LEN <= record.payload_len <= MAX_PAYLOAD_LEN:
        raise TraceValidationError(
            f"payload length {record.payload_len} outside [{MIN_PAYLOAD_LEN}, {MAX_PAYLOAD_LEN}]", line_number)
    if record.delta < 0:
        raise TraceValidationError(f"negative delta {record.delta}", line_number)
    if previous is None:
        return
    if record.t_epoch < previous.t_epoch:
        raise TraceValidationError("timestamps decrease", line_number)
    gap = record.t_epoch - previous.t_epoch
    if abs(record.delta - gap) > DELTA_TOLERANCE_S:
        raise TraceValidationError(
            f"delta {record.delta:.6f} inconsistent with timestamp gap {gap:.6f}", line_number)


def parse_trace_file(text: Union[str, TextIO, Iterable[str]], schema: Sequence[str]) -> List[PacketRecord]:
    """Parse one packet trace into records

    Args:
        text: File contents, an open file, or an iterable of lines
        schema: Ordered column names (subset of Y1..Y8); Y1 and Y3 are required,
            Y2 is recomputed from Y1 when absent, other columns are ignored

    Returns:
        One PacketRecord per non-blank line, in file order

    Raises:
        TraceParseError: wrong column count or non-numeric field
        TraceValidationError: a record violates a PacketRecord invariant
    """
    schema = list(schema)
    if not schema:
        raise ConfigError("schema must not be empty")
    if 'Y1' not in schema or 'Y3' not in schema:
        raise ConfigError(f"packet schema needs Y1 and Y3, got {schema}")
    i_t = schema.index('Y1')
    i_len = schema.index('Y3')
    i_delta = schema.index('Y2') if 'Y2' in schema else None

    records: List[PacketRecord] = []
    previous: Optional[PacketRecord] = None
    for line_number, values in _split_lines(text, len(schema)):
        t = values[i_t]
        if i_delta is not None:
            delta = values[i_delta]
        else:
            delta = round(t - previous.t_epoch, TIMESTAMP_DECIMALS) if previous else 0.0
        length = values[i_len]
        if length != int(length):
            raise TraceParseError(f"payload length {length} is not an integer", line_number)
        record = PacketRecord(t_epoch=t, delta=delta, payload_len=int(length))
        _check_record(record, previous, line_number)
        records.append(record)
        previous = record
    return records


def parse_stats_file(text: Union[str, TextIO, Iterable[str]], schema: Sequence[str]) -> List[StatsRecord]:
    """Parse a WebRTC-internals trace (columns among Y4..Y8)"""
    schema = list(schema)
    unknown = [c for c in schema if c not in STATS_COLUMNS]
    if not schema or unknown:
        raise ConfigError(f"stats schema must use only {STATS_COLUMNS}, got {schema}")
    records = []
    for _, values in _split_lines(text, len(schema)):
        records.append(StatsRecord(**{STATS_FIELDS[c]: v for c, v in zip(schema, values)}))
    return records


def write_trace_file(trace: Trace, out: TextIO, schema: Sequence[str] = PACKET_COLUMNS) -> None:
    """Write a trace in the dataset text format (tab separated, no header)"""
    formatters = {
        'Y1': lambda t, d, n: f"{t:.6f}",
        'Y2': lambda t, d, n: f"{d:.6f}",
        'Y3': lambda t, d, n: f"{n:d}",
    }
    unknown = [c for c in schema if c not in formatters]
    if unknown:
        raise ConfigError(f"cannot write columns {unknown} for a packet trace")
    for t, d, n in zip(trace.t_epoch, trace.delta, trace.payload_len):
        out.write('\t'.join(formatters[c](t, d, int(n)) for c in schema) + '\n')


def load_trace(path: Path, meta: StreamMeta, schema: Sequence[str]) -> Trace:
    """Load and validate one packet trace file"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"trace file not found: {path}")
    with open(path, 'r') as f:
        try:
            records = parse_trace_file(f, schema)
        except TraceParseError as e:
            raise TraceParseError(e.reason, e.line_number, path) from None
    if not records:
        raise TraceValidationError(f"{path}: trace contains no packets")
    return Trace.from_records(meta, records, source=path)


def load_manifest(path: Path) -> DatasetManifest:
    """Parse a TOML manifest, resolving file paths against its location"""
    path = Path(path)
    data = load_toml(path)
    base = path.parent / data.get('base_dir', '.')
    raw_entries = data.get('trace', [])
    if not isinstance(raw_entries, list) or not raw_entries:
        raise ConfigError(f"{path}: manifest lists no [[trace]] entries")

    entries = []
    for i, raw in enumerate(raw_entries):
        raw = dict(raw)
        try:
            file_path = base / raw.pop('path')
            schema = tuple(raw.pop('schema'))
        except KeyError as e:
            raise ConfigError(f"{path}: trace entry {i} is missing {e}") from None
        if 'dataset' in raw:
            raw['dataset_id'] = raw.pop('dataset')
        meta = parse_model(StreamMeta, raw, f"{path} entry {i}")
        entries.append({'path': file_path, 'meta': meta, 'schema_': schema})
    return parse_model(DatasetManifest, {'entries': entries}, str(path))


class TraceCollection:
    """Loaded traces indexed by file path and queryable by stream metadata"""

    def __init__(self, traces: Dict[Path, Trace], stats: Optional[Dict[Path, StatsTrace]] = None):
        self.traces = traces
        self.stats = stats or {}

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces.values())

    def query(self, game: Optional[str] = None, protocol: Optional[str] = None,
              direction: Optional[str] = None, dataset_id: Optional[str] = None) -> List[Trace]:
        """Traces whose metadata matches every given field"""
        wanted = {'game': game, 'protocol': protocol, 'direction': direction, 'dataset_id': dataset_id}
        return [
            trace for trace in self.traces.values()
            if all(value is None or getattr(trace.meta, key) == value for key, value in wanted.items())
        ]

    def get(self, game: str, protocol: str, direction: str, dataset_id: Optional[str] = None) -> Trace:
        """The single trace matching the query"""
        matches = self.query(game, protocol, direction, dataset_id)
        if len(matches) != 1:
            raise KeyError(f"expected one {game} {protocol} {direction} trace, found {len(matches)}")
        return matches[0]


def load_dataset(manifest: DatasetManifest) -> TraceCollection:
    """Load every manifest entry

    Raises:
        DatasetLoadError: aggregating every missing, unparsable or invalid file
    """
    logger.info("Loading %d traces...", len(manifest.entries))
    traces: Dict[Path, Trace] = {}
    stats: Dict[Path, StatsTrace] = {}
    failures: List[Tuple[Path, Exception]] = []

    for entry in manifest.entries:
        try:
            if entry.is_packet_trace:
                traces[entry.path] = load_trace(entry.path, entry.meta, entry.schema_)
            else:
                with open(entry.path, 'r') as f:
                    stats[entry.path] = StatsTrace(entry.meta, parse_stats_file(f, entry.schema_), entry.path)
        except (StadiaInspectorError, OSError) as e:
            logger.warning("Failed to load %s: %s", entry.path, e)
            failures.append((entry.path, e))

    if failures:
        raise DatasetLoadError(failures)
    logger.info("Loaded %d packet traces and %d stats traces", len(traces), len(stats))
    return TraceCollection(traces, stats)
