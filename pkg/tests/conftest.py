"""Shared fixtures for the Stadia Inspector tests"""

import numpy as np
import pytest

from stadia_inspector.ingest import StreamMeta, Trace


@pytest.fixture
def downlink_meta():
    """Metadata of a TR RTP downlink stream"""
    return StreamMeta(game='TR', protocol='RTP', direction='downlink', codec='VP9', resolution='1080p')


@pytest.fixture
def constant_trace(downlink_meta):
    """Ten seconds of 1000 B packets every 10 ms (about 0.8 Mbit/s)"""
    times = np.arange(1000) * 0.01
    sizes = np.full(1000, 1000)
    return Trace.from_times(downlink_meta, times, sizes)
