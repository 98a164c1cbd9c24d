"""CSV and JSON writers for stats, distributions, series, logs and reports

Every CSV writer formats floats with a fixed number of decimals so that equal
inputs produce byte-identical files.
"""

import csv
import json
import math
from dataclasses import asdict, is_dataclass
from typing import TYPE_CHECKING, Any, Iterable, List, Mapping, Sequence, TextIO, Tuple

from pydantic import BaseModel

from stadia_inspector.config import REPORT_HEADER, REPORT_VERSION

if TYPE_CHECKING:
    from stadia_inspector.adaptation import ResolutionChange
    from stadia_inspector.analyzer import Ecdf, LoadSeries, TrafficStats
    from stadia_inspector.harness import ComparisonReport, SimReport
    from stadia_inspector.link import LinkLogRow

FLOAT_DECIMALS = 6


def format_value(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        return f"{value:.{FLOAT_DECIMALS}f}"
    return str(value)


def write_csv(out: TextIO, columns: Sequence[str], rows: Iterable[Sequence[Any]],
              preamble: Sequence[str] = ()) -> None:
    """Comment lines, a header row, then formatted rows"""
    for line in preamble:
        out.write(f"{line}\n")
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])


def _default(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode='json')
    if is_dataclass(value):
        return asdict(value)
    if hasattr(value, 'tolist'):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(value: Any) -> str:
    return json.dumps(value, indent=2, sort_keys=True, default=_default)


STATS_COLUMNS = ('label', 'packets', 'duration_s', 'mean_pkt_size', 'stdev_pkt_size',
                 'mean_ipt_ms', 'load_mbps', 'min_pkt', 'max_pkt', 'top_sizes')


def stats_to_row(label: str, s: 'TrafficStats') -> Tuple:
    """One STATS_COLUMNS row; top sizes as space separated size:share pairs"""
    top = ' '.join(f"{size}:{share:.4f}" for size, share in s.top_sizes)
    return (label, s.packet_count, s.duration, s.mean_pkt_size, s.stdev_pkt_size,
            s.mean_ipt, s.load, s.min_pkt, s.max_pkt, top)


def write_stats_csv(out: TextIO, stats: Mapping[str, 'TrafficStats']) -> None:
    write_csv(out, STATS_COLUMNS, (stats_to_row(label, s) for label, s in stats.items()))


def write_ecdf_csv(out: TextIO, ecdf: 'Ecdf') -> None:
    write_csv(out, ('value', 'fraction'), zip(ecdf.values.tolist(), ecdf.fractions.tolist()))


def write_series_csv(out: TextIO, series: 'LoadSeries') -> None:
    rows = zip(series.starts.tolist(), series.lengths.tolist(), series.values.tolist())
    write_csv(out, ('start_s', 'length_s', 'load_mbps'), rows)


def write_link_log_csv(out: TextIO, log: Iterable['LinkLogRow']) -> None:
    rows = ((r.t_arrival, r.direction, r.size, r.outcome, r.t_out) for r in log)
    write_csv(out, ('t_arrival', 'direction', 'size', 'outcome', 't_out'), rows)


def change_rows(changes: Iterable['ResolutionChange']) -> List[Tuple]:
    return [(c.t, c.old.resolution, c.old.encoder_bitrate, c.new.resolution, c.new.encoder_bitrate, c.reason)
            for c in changes]


CHANGE_COLUMNS = ('t', 'old_resolution', 'old_bitrate', 'new_resolution', 'new_bitrate', 'reason')


def write_change_log_csv(out: TextIO, changes: Iterable['ResolutionChange']) -> None:
    write_csv(out, CHANGE_COLUMNS, change_rows(changes))


def write_gcc_history_csv(out: TextIO, history: Iterable[Tuple[float, float, float, float]]) -> None:
    write_csv(out, ('t', 'ar', 'as', 'target'), history)


REPORT_COLUMNS = ('second', 'resolution_height', 'fps', 'rtt', 'packets_lost', 'jitter_buffer_delay',
                  'delivered_load', 'target_rate', 'encoder_bitrate', 'phase')


def write_report_csv(out: TextIO, report: 'SimReport') -> None:
    """The versioned per-second report

    Comment lines carry the scenario identity and the refusal marker; a refused
    session has a header row and no records.
    """
    scenario = report.scenario
    preamble = [
        REPORT_HEADER,
        f"# scenario={scenario.name} game={scenario.game} codec={scenario.codec} "
        f"max_resolution={scenario.max_resolution} duration={format_value(float(scenario.duration))} "
        f"seed={scenario.seed}",
    ]
    if report.refused:
        preamble.append(f"# refused: {report.reason}")
    rows = ((r.second, r.resolution_height, r.fps, r.rtt, r.packets_lost, r.jitter_buffer_delay,
             r.delivered_load, r.target_rate, r.encoder_bitrate, r.phase) for r in report.records)
    write_csv(out, REPORT_COLUMNS, rows, preamble)


def report_to_dict(report: 'SimReport') -> dict:
    return {
        'version': REPORT_VERSION,
        'scenario': report.scenario.model_dump(mode='json'),
        'refused': report.refused,
        'reason': report.reason,
        'records': [asdict(r) for r in report.records],
        'changes': [dict(zip(CHANGE_COLUMNS, row)) for row in change_rows(report.changes)],
        'streams': {name: asdict(c) for name, c in report.streams.items()},
        'summary': report.summary() if report.records else None,
    }


def write_comparison_csv(out: TextIO, comparison: 'ComparisonReport') -> None:
    rows = ((r.metric, r.value, r.target, r.low, r.high, r.tolerance, r.passed) for r in comparison.rows)
    write_csv(out, ('metric', 'value', 'target', 'low', 'high', 'tolerance', 'passed'), rows,
              [f"# overall: {'pass' if comparison.passed else 'fail'}"])
