"""Pipeline configuration: every tunable in one dataclass.

Defaults follow the published operating point of the algorithm (40 ms / 10 ms
frames, 1 s detection windows, 2 s refinement windows); the rest are the
toolkit's own documented choices. Precedence when resolving: CLI flags >
config file > defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

SAMPLE_RATE = 8000


@dataclass(frozen=True)
class PipelineConfig:
    # framing
    frame_ms: float = 40.0
    hop_ms: float = 10.0
    # fused feature construction
    n_mels: int = 26
    n_mfcc: int = 13
    n_fft: int = 512
    mel_fmin: float = 0.0
    mel_fmax: float = 4000.0
    delta_window: int = 2
    lpc_order: int = 10
    dct_keep: int = 51
    log_floor: float = 1e-10
    # speech activity detection
    sad_mode: str = "builtin"  # builtin | external
    sad_median_frames: int = 11
    sad_min_island_frames: int = 6
    # change detection
    g3_window_s: float = 1.0
    g3_hop_s: float = 0.1
    min_gap_s: float = 0.5
    min_speech_fraction: float = 0.5
    em_max_iters: int = 50
    em_tol: float = 1e-4
    var_floor: float = 1e-4
    weight_floor: float = 0.01
    # clustering
    min_segment_frames: int = 5
    cluster_subsample_rows: int | None = None
    # primary speaker identification
    formant_low_hz: float = 200.0
    formant_high_hz: float = 3500.0
    formant_band_hz: float = 150.0
    refine_window_s: float = 2.0
    # execution
    jobs: int = 1

    def __post_init__(self):
        if self.frame_ms <= 0 or self.hop_ms <= 0:
            raise ConfigError("frame_ms and hop_ms must be positive")
        if self.frame_ms < self.hop_ms:
            raise ConfigError("frame_ms must be >= hop_ms")
        if self.g3_window_s <= 0 or self.g3_hop_s <= 0 or self.refine_window_s <= 0:
            raise ConfigError("window durations must be positive")
        if self.g3_window_s < self.g3_hop_s:
            raise ConfigError("g3_window_s must be >= g3_hop_s")
        if self.sad_mode not in ("builtin", "external"):
            raise ConfigError(f"unknown sad_mode {self.sad_mode!r}")
        if not 0.0 < self.min_speech_fraction <= 1.0:
            raise ConfigError("min_speech_fraction must be in (0, 1]")
        if self.lpc_order < 1:
            raise ConfigError("lpc_order must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.cluster_subsample_rows is not None and self.cluster_subsample_rows < 1:
            raise ConfigError("cluster_subsample_rows must be >= 1 or null")

    # derived frame-grid quantities (all exact integers at 8 kHz)
    @property
    def frame_length(self) -> int:
        return int(round(self.frame_ms * SAMPLE_RATE / 1000.0))

    @property
    def hop_length(self) -> int:
        return int(round(self.hop_ms * SAMPLE_RATE / 1000.0))

    @property
    def g3_window_frames(self) -> int:
        return int(round(self.g3_window_s * 1000.0 / self.hop_ms))

    @property
    def g3_hop_frames(self) -> int:
        return int(round(self.g3_hop_s * 1000.0 / self.hop_ms))

    @property
    def min_gap_frames(self) -> int:
        return int(round(self.min_gap_s * 1000.0 / self.hop_ms))

    @property
    def refine_window_frames(self) -> int:
        return int(round(self.refine_window_s * 1000.0 / self.hop_ms))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: d[k] for k in sorted(d)}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> PipelineConfig:
    """Read a config JSON file; a diarize run.json is accepted too."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object: {p}")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # run.json wraps the resolved config
    return PipelineConfig.from_dict(raw)
