"""stadia-inspector command line

Usage:
  stadia-inspector [-v | -vv] [--format csv|json] analyze MANIFEST [--filter GAME,PROTO,DIR] [--ecdf ipt|size]
  stadia-inspector fit TRACE --game TR [-o PARAMS]
  stadia-inspector generate PARAMS --duration S --seed N [-o TRACE]
  stadia-inspector simulate SCENARIO [-o REPORT] [--link-log PATH]
  stadia-inspector compare SOURCE TARGETS

PARAMS is a parameter TOML file or a shipped preset name such as tr_1080p.
SOURCE for compare is a scenario TOML (simulated first), a JSON report written
by ``simulate --format json`` or a JSON stats file written by
``analyze --format json`` holding a single trace.
"""

import argparse
import io
import json
import logging
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from stadia_inspector import exporters
from stadia_inspector.analyzer import Ecdf, ecdf_build, fit_generator_params, load_timeseries, summary_stats, traffic_share
from stadia_inspector.config import GAMES, PROTOCOLS
from stadia_inspector.errors import ConfigError, InsufficientDataError, StadiaInspectorError
from stadia_inspector.generator import GeneratorParams, generate_session, list_presets, load_params, load_preset, save_params
from stadia_inspector.harness import compare, load_scenario, load_targets, run
from stadia_inspector.ingest import StreamMeta, TraceCollection, load_dataset, load_manifest, load_trace, write_trace_file

logger = logging.getLogger(__name__)


def _open_output(path: Optional[str]):
    if path is None or path == '-':
        return sys.stdout
    return open(path, 'w', newline='')


def _emit(args: argparse.Namespace, text: str) -> None:
    out = _open_output(args.output)
    try:
        out.write(text)
    finally:
        if out is not sys.stdout:
            out.close()


def _parse_filter(value: Optional[str]) -> Dict[str, Optional[str]]:
    """'TR,RTP,downlink' with empty fields as wildcards"""
    fields = {'game': None, 'protocol': None, 'direction': None}
    if not value:
        return fields
    parts = [p.strip() or None for p in value.split(',')]
    if len(parts) > 3:
        raise ConfigError(f"--filter takes game,protocol,direction; got {value!r}")
    for key, part in zip(fields, parts):
        fields[key] = part
    return fields


def _key(trace) -> str:
    return f"{trace.meta.dataset_id} {trace.meta.label}"


def _ecdf(trace, kind: str) -> Ecdf:
    """ECDF of inter-packet times in ms or of payload sizes in bytes"""
    samples = trace.delta[1:] * 1000.0 if kind == 'ipt' else trace.payload_len
    return ecdf_build(samples)


def cmd_analyze(args: argparse.Namespace) -> int:
    manifest = load_manifest(Path(args.manifest))
    collection: TraceCollection = load_dataset(manifest)
    traces = collection.query(**_parse_filter(args.filter))
    if not traces:
        logger.warning("No traces match %s", args.filter)
    stats = {_key(trace): summary_stats(trace) for trace in traces}

    if args.format == 'json':
        payload = {'stats': {label: s.to_dict() for label, s in stats.items()}}
        if traces:
            payload['share'] = traffic_share(traces)
        if args.series:
            payload['series'] = {_key(t): load_timeseries(t, args.window).to_rows() for t in traces}
        if args.ipt_ecdf:
            payload['ipt_below_1ms'] = {
                _key(t): ecdf_build(t.delta[1:] * 1000.0).fraction_below(1.0) for t in traces if len(t) > 1
            }
        if args.ecdf:
            payload['ecdf'] = {}
            for t in traces:
                if len(t) > 1:
                    e = _ecdf(t, args.ecdf)
                    payload['ecdf'][_key(t)] = {'value': e.values, 'fraction': e.fractions}
        _emit(args, exporters.to_json(payload) + '\n')
        return 0

    out = io.StringIO()
    exporters.write_stats_csv(out, stats)
    if args.series and len(traces) == 1:
        out.write('\n')
        exporters.write_series_csv(out, load_timeseries(traces[0], args.window))
    if args.ecdf:
        if len(traces) == 1 and len(traces[0]) > 1:
            out.write('\n')
            exporters.write_ecdf_csv(out, _ecdf(traces[0], args.ecdf))
        else:
            logger.warning("--ecdf in csv needs a filter that matches one trace of two or more packets")
    _emit(args, out.getvalue())
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    meta = StreamMeta(game=args.game, protocol='RTP', direction='downlink', dataset_id=args.dataset)
    trace = load_trace(Path(args.trace), meta, tuple(args.schema.split(',')))
    params = fit_generator_params(trace, audio_assumed=not args.no_audio)
    out = io.StringIO()
    save_params(params, out)
    _emit(args, out.getvalue())
    logger.info("Fitted %s from %d packets", params.name, len(trace))
    return 0


def _resolve_params(value: str) -> GeneratorParams:
    path = Path(value)
    if path.exists():
        return load_params(path)
    if value.lower() in list_presets():
        game, resolution = value.split('_', 1)
        return load_preset(game.upper(), '4K' if resolution.lower() == '4k' else resolution, 'VP9')
    raise ConfigError(f"{value} is neither a parameter file nor a preset ({', '.join(list_presets())})")


def cmd_generate(args: argparse.Namespace) -> int:
    params = _resolve_params(args.params)
    if args.seed is not None:
        params = params.with_seed(args.seed)
    trace = generate_session(params, args.duration, protocol=args.protocol, direction=args.direction)
    out = io.StringIO()
    write_trace_file(trace, out)
    _emit(args, out.getvalue())
    logger.info("Generated %d packets over %.1f s", len(trace), args.duration)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(Path(args.scenario))
    report = run(scenario, log_packets=args.link_log is not None)
    _emit(args, report.to_json() + '\n' if args.format == 'json' else report.to_csv())
    if args.changes:
        with open(args.changes, 'w', newline='') as f:
            exporters.write_change_log_csv(f, report.changes)
    if args.gcc_history:
        with open(args.gcc_history, 'w', newline='') as f:
            exporters.write_gcc_history_csv(f, report.gcc_history)
    if args.link_log:
        with open(args.link_log, 'w', newline='') as f:
            exporters.write_link_log_csv(f, report.link_log)
    return 0


def _load_source(path: Path):
    if path.suffix == '.toml':
        return run(load_scenario(path))
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    if 'records' in data:
        if not data.get('summary'):
            raise InsufficientDataError(f"{path}: report has no records")
        return data['summary']
    stats = data.get('stats', {})
    if len(stats) != 1:
        raise ConfigError(f"{path}: expected stats for exactly one trace, found {len(stats)}")
    values = dict(next(iter(stats.values())))
    values.pop('top_sizes', None)
    return values


def cmd_compare(args: argparse.Namespace) -> int:
    comparison = compare(_load_source(Path(args.source)), load_targets(Path(args.targets)))
    if args.format == 'json':
        _emit(args, exporters.to_json({'passed': comparison.passed, 'rows': list(comparison.rows)}) + '\n')
    else:
        out = io.StringIO()
        exporters.write_comparison_csv(out, comparison)
        _emit(args, out.getvalue())
    for row in comparison.failures():
        logger.warning("%s = %s outside [%s, %s]", row.metric, row.value, row.low, row.high)
    return 0 if comparison.passed else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='stadia-inspector', description=__doc__.splitlines()[0])
    parser.add_argument('-v', '--verbose', action='count', default=0, help="-v for INFO, -vv for DEBUG")
    parser.add_argument('--format', choices=('csv', 'json'), default='csv')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('analyze', help="per-trace traffic statistics of a manifest")
    p.add_argument('manifest')
    p.add_argument('--filter', help="game,protocol,direction; empty fields match all")
    p.add_argument('--series', action='store_true', help="include the load time series")
    p.add_argument('--window', type=float, default=1.0, help="series window in seconds")
    p.add_argument('--ipt-ecdf', action='store_true', help="share of inter-packet times below 1 ms (json)")
    p.add_argument('--ecdf', choices=('ipt', 'size'), help="empirical CDF of inter-packet times (ms) or sizes")
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser('fit', help="fit generator parameters to an RTP downlink trace")
    p.add_argument('trace')
    p.add_argument('--game', choices=GAMES, required=True)
    p.add_argument('--dataset', default='D2')
    p.add_argument('--schema', default='Y1,Y2,Y3')
    p.add_argument('--no-audio', action='store_true', help="the trace has no audio packets")
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser('generate', help="generate a synthetic trace")
    p.add_argument('params')
    p.add_argument('--duration', type=float, required=True)
    p.add_argument('--seed', type=int)
    p.add_argument('--protocol', choices=[x for x in PROTOCOLS if x != 'MIXED'], default='RTP')
    p.add_argument('--direction', choices=('downlink', 'uplink'), default='downlink')
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('simulate', help="run a scenario and write the per-second report")
    p.add_argument('scenario')
    p.add_argument('-o', '--output')
    p.add_argument('--changes', help="also write the resolution change log (CSV)")
    p.add_argument('--gcc-history', help="also write the (t, Ar, As, target) history (CSV)")
    p.add_argument('--link-log', help="also write every link admission and its outcome (CSV)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('compare', help="check a report or stats against targets")
    p.add_argument('source')
    p.add_argument('targets')
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except (StadiaInspectorError, FileNotFoundError) as e:
        logger.error("%s", e)
        return 1


if __name__ == '__main__':
    sys.exit(main())
