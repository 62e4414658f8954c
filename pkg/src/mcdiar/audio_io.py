"""Audio loading, resampling, framing, and the session manifest.

All downstream processing assumes 8 kHz mono in [-1, 1]; this module is the
only place sample rates and WAV encodings are handled.
"""

from __future__ import annotations

import json
import struct
import warnings
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from .errors import AudioError, ManifestError

TARGET_RATE = 8000
SUPPORTED_RATES = (8000, 16000, 22050, 44100, 48000)


@dataclass
class Waveform:
    samples: np.ndarray  # float64 mono, amplitudes in [-1, 1]
    sample_rate: int

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameGrid:
    """40 ms frames on a 10 ms hop; frame i covers samples [i*hop, i*hop+length)."""

    frame_length: int
    hop: int
    num_frames: int
    sample_rate: int = TARGET_RATE
    origin_time: float = 0.0

    @property
    def hop_seconds(self) -> float:
        return self.hop / self.sample_rate

    def start_times(self) -> np.ndarray:
        return self.origin_time + np.arange(self.num_frames) * self.hop_seconds

    def midpoint_times(self) -> np.ndarray:
        return self.start_times() + 0.5 * self.frame_length / self.sample_rate

    def time_to_frame(self, t: float) -> int:
        """Index of the frame whose start tick contains time t (clipped)."""
        idx = int(np.floor((t - self.origin_time) / self.hop_seconds + 1e-9))
        return min(max(idx, 0), self.num_frames - 1) if self.num_frames else 0


@dataclass(frozen=True)
class ChannelSpec:
    channel_id: int
    member_label: str
    role: str  # "leader" | "student"
    audio_path: Path


@dataclass
class SessionManifest:
    session_id: str
    channels: list[ChannelSpec]
    notes: str | None = None
    base_dir: Path = field(default_factory=Path)

    def channel(self, channel_id: int) -> ChannelSpec:
        for ch in self.channels:
            if ch.channel_id == channel_id:
                return ch
        raise ManifestError(f"no channel {channel_id} in session {self.session_id}")

    @property
    def leader_channel_id(self) -> int:
        return next(ch.channel_id for ch in self.channels if ch.role == "leader")


def load_manifest(path: str | Path) -> SessionManifest:
    """Parse and validate a session manifest JSON file."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON in manifest {p}: {exc}") from exc

    if not isinstance(raw, dict) or "session_id" not in raw or "channels" not in raw:
        raise ManifestError(f"manifest {p} must contain session_id and channels")
    chans = raw["channels"]
    if not isinstance(chans, list) or len(chans) < 2:
        raise ManifestError("manifest needs at least 2 channels (cross-channel refinement)")

    base = p.parent
    specs = []
    for entry in chans:
        try:
            specs.append(
                ChannelSpec(
                    channel_id=int(entry["channel_id"]),
                    member_label=str(entry["member_label"]),
                    role=str(entry["role"]),
                    audio_path=base / entry["audio_path"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad channel entry {entry!r} in {p}: {exc}") from exc

    ids = sorted(ch.channel_id for ch in specs)
    if ids != list(range(1, len(specs) + 1)):
        raise ManifestError(f"channel_ids must be unique and contiguous from 1, got {ids}")
    roles = [ch.role for ch in specs]
    if any(r not in ("leader", "student") for r in roles):
        raise ManifestError(f"roles must be leader or student, got {sorted(set(roles))}")
    if roles.count("leader") != 1:
        raise ManifestError(f"exactly one leader channel required, found {roles.count('leader')}")
    labels = [ch.member_label for ch in specs]
    if len(set(labels)) != len(labels):
        raise ManifestError("member_labels must be unique")

    specs.sort(key=lambda ch: ch.channel_id)
    return SessionManifest(
        session_id=str(raw["session_id"]),
        channels=specs,
        notes=raw.get("notes"),
        base_dir=base,
    )


def load_channel(path: str | Path) -> Waveform:
    """Load a PCM WAV file (8/16-bit) as normalized mono at its native rate."""
    p = Path(path)
    try:
        with wave.open(str(p), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            comptype = wf.getcomptype()
            raw = wf.readframes(n_frames)
    except FileNotFoundError as exc:
        raise AudioError(f"cannot read {p}: file not found") from exc
    except (wave.Error, EOFError) as exc:
        raise AudioError(f"cannot read {p}: {exc}") from exc

    if comptype != "NONE":
        raise AudioError(f"unsupported encoding in {p}: compression {comptype!r}")
    if sampwidth not in (1, 2):
        raise AudioError(f"unsupported encoding in {p}: {8 * sampwidth}-bit samples")
    if n_frames == 0:
        raise AudioError(f"zero-length audio in {p}")

    if sampwidth == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    else:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0

    if n_channels > 1:
        warnings.warn(f"{p}: {n_channels} channels, taking channel 0")
        data = data[::n_channels]
    return Waveform(samples=data, sample_rate=rate)


def save_wav(path: str | Path, w: Waveform) -> None:
    """Write a waveform as 16-bit PCM WAV."""
    q = np.clip(np.rint(w.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(w.sample_rate)
        wf.writeframes(q.tobytes())


def write_wav_8bit(path: str | Path, samples: np.ndarray, rate: int) -> None:
    """8-bit unsigned PCM writer, kept for fixture generation."""
    q = np.clip(np.rint(samples * 128.0) + 128, 0, 255).astype(np.uint8)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(1)
        wf.setframerate(rate)
        wf.writeframes(q.tobytes())


_RESAMPLE_RATIOS = {
    8000: (1, 1),
    16000: (1, 2),
    22050: (160, 441),
    44100: (80, 441),
    48000: (1, 6),
}


def resample_to_8k(w: Waveform) -> Waveform:
    """Polyphase windowed-sinc resampling to 8 kHz; 8 kHz input passes through."""
    if w.sample_rate == TARGET_RATE:
        return w
    if w.sample_rate not in _RESAMPLE_RATIOS:
        raise AudioError(
            f"unsupported source rate {w.sample_rate}; expected one of {SUPPORTED_RATES}"
        )
    up, down = _RESAMPLE_RATIOS[w.sample_rate]
    out = resample_poly(w.samples, up, down, window=("kaiser", 8.0))
    return Waveform(samples=out, sample_rate=TARGET_RATE)


def frame_signal(w: Waveform, frame_length: int = 320, hop: int = 80) -> tuple[FrameGrid, np.ndarray]:
    """Slice a waveform into frames; no window is applied here."""
    if w.sample_rate != TARGET_RATE:
        raise AudioError(f"framing expects {TARGET_RATE} Hz audio, got {w.sample_rate}")
    n = len(w.samples)
    num = (n - frame_length) // hop + 1 if n >= frame_length else 0
    grid = FrameGrid(frame_length=frame_length, hop=hop, num_frames=num)
    if num == 0:
        return grid, np.empty((0, frame_length))
    idx = np.arange(num)[:, None] * hop + np.arange(frame_length)[None, :]
    return grid, w.samples[idx]


def write_tone_wav(path: str | Path, freq_hz: float, duration_s: float, rate: int,
                   amplitude: float = 0.5) -> None:
    """Low-level 16-bit tone writer that bypasses Waveform/save_wav on purpose
    (test fixtures need a generator independent of the loader under test)."""
    n = int(round(duration_s * rate))
    frames = bytearray()
    for i in range(n):
        v = amplitude * np.sin(2.0 * np.pi * freq_hz * i / rate)
        frames += struct.pack("<h", int(round(v * 32767)))
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(bytes(frames))
