"""Tests for cache module"""

from datetime import datetime

import pytest

import stadia_inspector.cache as cache
from stadia_inspector.analyzer import load_timeseries, summary_stats
from stadia_inspector.harness import Scenario, run


# Test Fixtures

@pytest.fixture(autouse=True)
def empty_cache():
    """Start and end every test with an empty cache"""
    cache.clear_cache()
    yield
    cache.clear_cache()


# Tests for trace entries

def test_store_and_get_trace(constant_trace):
    """Test a stored trace comes back by id"""
    cache.store_trace('t1', constant_trace)

    assert cache.get_trace('t1') is constant_trace
    assert cache.get_trace('missing') is None


def test_store_trace_drops_derived_entries(constant_trace):
    """Test re-storing a trace forgets its stats and series"""
    cache.store_trace('t1', constant_trace)
    cache.cache_stats('t1', summary_stats(constant_trace))
    cache.cache_series('t1', load_timeseries(constant_trace))
    assert cache.get_stats('t1') is not None
    assert cache.get_series('t1') is not None

    cache.store_trace('t1', constant_trace)

    assert cache.get_stats('t1') is None
    assert cache.get_series('t1') is None


def test_get_cache_stats(constant_trace):
    """Test cache statistics count traces and packets"""
    cache.store_trace('t1', constant_trace)
    cache.store_trace('t2', constant_trace)

    stats = cache.get_cache_stats()

    assert stats['traces_cached'] == 2
    assert stats['reports_cached'] == 0
    assert stats['total_packets_in_cache'] == 2000
    assert stats['memory_estimate_mb'] == pytest.approx(2000 * 24 / (1024 * 1024))


# Tests for report entries

def test_cache_report_and_run_time():
    """Test a report is stored with the time it was produced"""
    report = run(Scenario(name='short', game='TR', duration=1, seed=0))
    now = datetime(2026, 1, 1, 12, 0, 0)

    cache.cache_report('ui', report, now)

    assert cache.get_report('ui') is report
    assert cache.get_run_time('ui') == now
    assert cache.get_cache_stats()['reports_cached'] == 1


def test_clear_cache(constant_trace):
    """Test clearing removes every entry"""
    cache.store_trace('t1', constant_trace)
    cache.cache_stats('t1', summary_stats(constant_trace))

    cache.clear_cache()

    assert cache.get_trace('t1') is None
    assert cache.get_stats('t1') is None
    assert cache.get_run_time('ui') is None
    assert cache.get_cache_stats()['traces_cached'] == 0
