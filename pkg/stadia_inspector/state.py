"""Application state management for the Stadia Inspector web UI"""

import logging
from datetime import datetime
from typing import Dict, List, Optional

import reflex as rx

import rxconfig
import stadia_inspector.cache as cache
from stadia_inspector.analyzer import load_timeseries, summary_stats
from stadia_inspector.config import FILTER_DEFAULTS, SCENARIO_DEFAULTS
from stadia_inspector.errors import StadiaInspectorError
from stadia_inspector.harness import Scenario, run
from stadia_inspector.ingest import load_dataset, load_manifest
from stadia_inspector.link import drop_scenario, raise_scenario

logger = logging.getLogger(__name__)

REPORT_ID = 'ui'


class TraceSummary(rx.Base):
    """Summary of a trace for display"""
    trace_id: str
    label: str
    game: str
    protocol: str
    direction: str
    dataset_id: str
    resolution: str
    packet_count: int
    duration: float


class State(rx.State):
    """Application state"""

    # Summaries of every manifest trace (packets stay in the cache)
    all_traces: List[TraceSummary] = []
    filtered_traces: List[TraceSummary] = []
    load_error: str = ""

    game_filter: str = ""
    protocol_filter: str = ""
    direction_filter: str = ""
    min_duration: int = FILTER_DEFAULTS['min_duration']
    max_duration: int = FILTER_DEFAULTS['max_duration']
    filters_expanded: bool = False

    selected_trace_id: Optional[str] = None

    # Scenario runner
    scenario_game: str = 'TR'
    scenario_kind: str = SCENARIO_DEFAULTS['kind']
    scenario_limit: float = SCENARIO_DEFAULTS['limit_mbps']
    scenario_at: float = SCENARIO_DEFAULTS['at_s']
    scenario_duration: float = SCENARIO_DEFAULTS['duration_s']
    scenario_max_resolution: str = '1080p'
    scenario_seed: int = 0
    report_ready: bool = False
    report_refused: bool = False
    scenario_error: str = ""
    report_time: str = ""

    def toggle_filters(self):
        self.filters_expanded = not self.filters_expanded

    def reset_filters(self):
        """Reset all filters to their default values"""
        for attr_name, default_value in FILTER_DEFAULTS.items():
            setattr(self, attr_name, default_value)
        self.game_filter = ""
        self.protocol_filter = ""
        self.direction_filter = ""
        self.apply_filters()

    @rx.var
    def active_filter_count(self) -> int:
        count = sum(1 for f in (self.game_filter, self.protocol_filter, self.direction_filter) if f)
        if (self.min_duration != FILTER_DEFAULTS['min_duration']
                or self.max_duration != FILTER_DEFAULTS['max_duration']):
            count += 1
        return count

    def load_data(self):
        """Load every trace listed in <data_dir>/manifest.toml"""
        manifest_path = rxconfig.data_dir / "manifest.toml"
        if not manifest_path.exists():
            self.load_error = f"No manifest at {manifest_path}"
            logger.warning(self.load_error)
            return
        try:
            collection = load_dataset(load_manifest(manifest_path))
        except StadiaInspectorError as e:
            self.load_error = str(e)
            logger.error("Could not load %s: %s", manifest_path, e)
            return

        summaries = []
        for path, trace in collection.traces.items():
            trace_id = str(path)
            cache.store_trace(trace_id, trace)
            meta = trace.meta
            summaries.append(TraceSummary(
                trace_id=trace_id,
                label=meta.label,
                game=meta.game,
                protocol=meta.protocol,
                direction=meta.direction,
                dataset_id=meta.dataset_id,
                resolution=meta.resolution,
                packet_count=len(trace),
                duration=round(trace.duration, 1),
            ))
        self.all_traces = summaries
        self.load_error = ""
        logger.info("Loaded %d traces into the inspector", len(summaries))
        self.apply_filters()

    def apply_filters(self):
        """Apply current filters to the trace list"""
        filtered = []
        for summary in self.all_traces:
            if self.game_filter and summary.game != self.game_filter:
                continue
            if self.protocol_filter and summary.protocol != self.protocol_filter:
                continue
            if self.direction_filter and summary.direction != self.direction_filter:
                continue
            if summary.duration < self.min_duration or summary.duration > self.max_duration:
                continue
            filtered.append(summary)
        filtered.sort(key=lambda s: (s.dataset_id, s.game, s.protocol, s.direction))
        self.filtered_traces = filtered

    def set_numeric_filter(self, filter_name: str, value: str):
        """Update a min/max filter from an input field, empty meaning default"""
        try:
            setattr(self, filter_name, int(value) if value else FILTER_DEFAULTS.get(filter_name, 0))
            self.apply_filters()
        except ValueError:
            pass

    def set_game_filter(self, value: str):
        self.game_filter = "" if value == "all" else value
        self.apply_filters()

    def set_protocol_filter(self, value: str):
        self.protocol_filter = "" if value == "all" else value
        self.apply_filters()

    def set_direction_filter(self, value: str):
        self.direction_filter = "" if value == "all" else value
        self.apply_filters()

    def select_trace(self, trace_id: str):
        """Select a trace and compute its stats and load series if needed"""
        self.selected_trace_id = trace_id
        trace = cache.get_trace(trace_id)
        if trace is None or cache.get_stats(trace_id) is not None:
            return
        try:
            cache.cache_stats(trace_id, summary_stats(trace))
            cache.cache_series(trace_id, load_timeseries(trace))
        except StadiaInspectorError as e:
            logger.warning("No stats for %s: %s", trace_id, e)

    def clear_selection(self):
        self.selected_trace_id = None

    @rx.var
    def selected_stats(self) -> Dict[str, str]:
        if not self.selected_trace_id:
            return {}
        stats = cache.get_stats(self.selected_trace_id)
        if stats is None:
            return {}
        top = ", ".join(f"{size} B ({share:.0%})" for size, share in stats.top_sizes)
        return {
            'packets': str(stats.packet_count),
            'duration': f"{stats.duration:.1f} s",
            'mean_size': f"{stats.mean_pkt_size:.1f} B",
            'stdev_size': f"{stats.stdev_pkt_size:.1f} B",
            'mean_ipt': f"{stats.mean_ipt:.3f} ms",
            'load': f"{stats.load:.2f} Mbit/s",
            'top_sizes': top,
        }

    @rx.var
    def load_chart_data(self) -> List[Dict[str, float]]:
        if not self.selected_trace_id:
            return []
        series = cache.get_series(self.selected_trace_id)
        if series is None:
            return []
        return [{'t': round(row['start'], 1), 'load': round(row['load'], 3)} for row in series.to_rows()]

    # -- scenario runner -----------------------------------------------------

    def set_scenario_game(self, value: str):
        self.scenario_game = value

    def set_scenario_kind(self, value: str):
        self.scenario_kind = value

    def set_scenario_max_resolution(self, value: str):
        self.scenario_max_resolution = value

    def set_scenario_number(self, field_name: str, value: str):
        """Update a numeric scenario field, ignoring unparsable input"""
        try:
            parsed = int(value) if field_name == 'scenario_seed' else float(value)
        except ValueError:
            return
        setattr(self, field_name, parsed)

    def run_scenario(self):
        """Simulate the configured drop/raise scenario and cache the report"""
        self.scenario_error = ""
        self.report_ready = False
        try:
            builder = drop_scenario if self.scenario_kind == 'drop' else raise_scenario
            link = builder(self.scenario_limit * 1e6, at=self.scenario_at)
            scenario = Scenario(
                name=f"{self.scenario_kind}_{self.scenario_limit:g}",
                game=self.scenario_game,
                max_resolution=self.scenario_max_resolution,
                link=link,
                duration=self.scenario_duration,
                seed=self.scenario_seed,
            )
            report = run(scenario)
        except (StadiaInspectorError, ValueError) as e:
            self.scenario_error = str(e)
            logger.warning("Scenario failed: %s", e)
            return
        now = datetime.now()
        cache.cache_report(REPORT_ID, report, now)
        self.report_refused = report.refused
        self.report_ready = True
        self.report_time = now.strftime("%H:%M:%S")

    @rx.var
    def report_chart_data(self) -> List[Dict[str, float]]:
        if not self.report_ready:
            return []
        report = cache.get_report(REPORT_ID)
        if report is None:
            return []
        return [
            {
                't': r.second,
                'height': r.resolution_height,
                'fps': r.fps,
                'rtt_ms': round(r.rtt * 1000, 2) if r.rtt is not None else 0.0,
                'lost': r.packets_lost,
                'load': round(r.delivered_load, 2),
                'target': round(r.target_rate / 1e6, 2),
            }
            for r in report.records
        ]

    @rx.var
    def report_summary(self) -> Dict[str, str]:
        if not self.report_ready:
            return {}
        report = cache.get_report(REPORT_ID)
        if report is None or report.refused:
            return {}
        summary = report.summary()
        return {
            key: "n/a" if value is None else f"{value:.2f}"
            for key, value in summary.items()
        }
