"""Module-level cache for traces and simulation reports to reduce state serialization"""

from datetime import datetime
from typing import Dict, Optional

from stadia_inspector.analyzer import LoadSeries, TrafficStats
from stadia_inspector.harness import SimReport
from stadia_inspector.ingest import Trace

# Module-level cache (shared across all state instances)
# These variables are NOT part of State, so they don't get serialized to frontend
_trace_cache: Dict[str, Trace] = {}
_stats_cache: Dict[str, TrafficStats] = {}
_series_cache: Dict[str, LoadSeries] = {}
_report_cache: Dict[str, SimReport] = {}
_report_run_times: Dict[str, datetime] = {}


def store_trace(trace_id: str, trace: Trace) -> None:
    """Store a loaded trace; derived stats and series are dropped"""
    _trace_cache[trace_id] = trace
    _stats_cache.pop(trace_id, None)
    _series_cache.pop(trace_id, None)


def get_trace(trace_id: str) -> Optional[Trace]:
    return _trace_cache.get(trace_id)


def cache_stats(trace_id: str, stats: TrafficStats) -> None:
    _stats_cache[trace_id] = stats


def get_stats(trace_id: str) -> Optional[TrafficStats]:
    return _stats_cache.get(trace_id)


def cache_series(trace_id: str, series: LoadSeries) -> None:
    _series_cache[trace_id] = series


def get_series(trace_id: str) -> Optional[LoadSeries]:
    return _series_cache.get(trace_id)


def cache_report(report_id: str, report: SimReport, run_time: datetime) -> None:
    """Store a finished simulation report"""
    _report_cache[report_id] = report
    _report_run_times[report_id] = run_time


def get_report(report_id: str) -> Optional[SimReport]:
    return _report_cache.get(report_id)


def get_run_time(report_id: str) -> Optional[datetime]:
    """When the report was produced"""
    return _report_run_times.get(report_id)


def clear_cache() -> None:
    """Clear all cached data"""
    _trace_cache.clear()
    _stats_cache.clear()
    _series_cache.clear()
    _report_cache.clear()
    _report_run_times.clear()


def get_cache_stats() -> dict:
    """Get cache statistics for debugging"""
    packets = sum(len(t) for t in _trace_cache.values())
    return {
        'traces_cached': len(_trace_cache),
        'reports_cached': len(_report_cache),
        'total_packets_in_cache': packets,
        # three 8-byte columns per packet
        'memory_estimate_mb': packets * 24 / (1024 * 1024),
    }
