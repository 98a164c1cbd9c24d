"""Tunable settings and the TOML config grammar shared by every input file

All manifests, generator presets, scenarios and comparison targets are TOML
documents. Each loader reads the document with ``load_toml`` and validates it
into a pydantic model; any failure surfaces as ``ConfigError``.
"""

import tomllib
from pathlib import Path
from typing import Any, Dict, Type, TypeVar

from pydantic import BaseModel, ConfigDict, ValidationError

from stadia_inspector.config import (
    ADAPTATION_DEFAULTS,
    ANALYZER_DEFAULTS,
    GCC_DEFAULTS,
    HARNESS_DEFAULTS,
)
from stadia_inspector.errors import ConfigError

ModelT = TypeVar('ModelT', bound=BaseModel)


def load_toml(path: Path) -> Dict[str, Any]:
    """Read a TOML file, wrapping I/O and syntax errors in ConfigError"""
    path = Path(path)
    try:
        with open(path, 'rb') as f:
            return tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


def parse_model(model: Type[ModelT], data: Dict[str, Any], source: str = "config") -> ModelT:
    """Validate a mapping into a model, converting pydantic errors to ConfigError"""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {e}") from e


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')


class AnalyzerConfig(FrozenModel):
    """Tolerances used by the traffic analyzer"""
    group_gap_ms: float = ANALYZER_DEFAULTS['group_gap_ms']
    state_trim_s: float = ANALYZER_DEFAULTS['state_trim_s']
    min_period_ms: float = ANALYZER_DEFAULTS['min_period_ms']
    max_period_ms: float = ANALYZER_DEFAULTS['max_period_ms']
    min_concentration: float = ANALYZER_DEFAULTS['min_concentration']
    audio_size_min: int = ANALYZER_DEFAULTS['audio_size_min']
    audio_size_max: int = ANALYZER_DEFAULTS['audio_size_max']
    audio_period_ms: float = ANALYZER_DEFAULTS['audio_period_ms']
    audio_period_tolerance_ms: float = ANALYZER_DEFAULTS['audio_period_tolerance_ms']
    fit_min_duration_s: float = ANALYZER_DEFAULTS['fit_min_duration_s']


class GccConfig(FrozenModel):
    """Constants of the delay-based and loss-based controllers"""
    gradient_alpha: float = GCC_DEFAULTS['gradient_alpha']
    overuse_threshold_ms: float = GCC_DEFAULTS['overuse_threshold_ms']
    increase_factor: float = GCC_DEFAULTS['increase_factor']
    # scale the increase to the time between frame samples
    increase_per_second: bool = GCC_DEFAULTS['increase_per_second']
    receive_rate_cap: float = GCC_DEFAULTS['receive_rate_cap']
    overuse_backoff: float = GCC_DEFAULTS['overuse_backoff']
    receive_window_s: float = GCC_DEFAULTS['receive_window_s']
    loss_low: float = GCC_DEFAULTS['loss_low']
    loss_high: float = GCC_DEFAULTS['loss_high']
    loss_increase: float = GCC_DEFAULTS['loss_increase']
    loss_decrease_gain: float = GCC_DEFAULTS['loss_decrease_gain']
    as_min: float = GCC_DEFAULTS['as_min']
    as_max: float = GCC_DEFAULTS['as_max']
    notify_interval_s: float = GCC_DEFAULTS['notify_interval_s']
    notify_change: float = GCC_DEFAULTS['notify_change']


class AdaptationConfig(FrozenModel):
    """Thresholds and timers of the resolution state machine"""
    refuse_capacity: float = ADAPTATION_DEFAULTS['refuse_capacity']
    max_720p_capacity: float = ADAPTATION_DEFAULTS['max_720p_capacity']
    max_1080p_capacity: float = ADAPTATION_DEFAULTS['max_1080p_capacity']
    headroom: float = ADAPTATION_DEFAULTS['headroom']
    loss_trigger: float = ADAPTATION_DEFAULTS['loss_trigger']
    loss_reports: int = ADAPTATION_DEFAULTS['loss_reports']
    hold_s: float = ADAPTATION_DEFAULTS['hold_s']
    probe_window_s: float = ADAPTATION_DEFAULTS['probe_window_s']
    max_hold_s: float = ADAPTATION_DEFAULTS['max_hold_s']
    steady_after_s: float = ADAPTATION_DEFAULTS['steady_after_s']
    upswitch_margin: float = ADAPTATION_DEFAULTS['upswitch_margin']
    upswitch_after_s: float = ADAPTATION_DEFAULTS['upswitch_after_s']


class HarnessConfig(FrozenModel):
    """Client-side playout model used by the simulator"""
    jitter_alpha: float = HARNESS_DEFAULTS['jitter_alpha']
    jitter_gain: float = HARNESS_DEFAULTS['jitter_gain']
    jitter_min_ms: float = HARNESS_DEFAULTS['jitter_min_ms']
    jitter_max_ms: float = HARNESS_DEFAULTS['jitter_max_ms']
    report_interval_s: float = HARNESS_DEFAULTS['report_interval_s']
