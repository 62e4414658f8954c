"""Synthetic multi-channel sessions with exact ground truth.

Each speaker is a harmonic source (fixed f0 with slight vibrato) shaped by
two formant resonators and a spectral tilt. Every utterance is mixed into all
channels: at full level on the speaker's own channel and attenuated by the
cross-channel gain elsewhere, over a white noise floor. Alongside the WAVs
the generator emits the session manifest, per-channel and session reference
RTTMs, speech-activity labels, and a truth JSON with turn counts and
speaking-time shares. Everything is deterministic given the script and seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio_io import Waveform, save_wav
from .config import SAMPLE_RATE
from .errors import ConfigError
from .fileio import atomic_write_text
from .rttm import format_rttm


@dataclass(frozen=True)
class SpeakerVoice:
    member: str
    role: str  # leader | student
    f0: float  # Hz
    formants: tuple[tuple[float, float], ...]  # ((F1, bw1), (F2, bw2))
    tilt: float  # one-pole lowpass coefficient, 0..0.98
    level_db: float  # utterance RMS in dBFS


@dataclass(frozen=True)
class Utterance:
    speaker: str
    start: float
    end: float


@dataclass
class SessionScript:
    session_id: str
    duration_s: float
    speakers: list[SpeakerVoice]
    schedule: list[Utterance]
    cross_gain_db: float = -6.0
    noise_floor_db: float = -45.0
    seed: int = 0
    allow_overlap: bool = False

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be positive")
        names = [v.member for v in self.speakers]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate speaker members")
        if len(self.speakers) < 2:
            raise ConfigError("need at least 2 speakers (one channel each)")
        if sum(v.role == "leader" for v in self.speakers) != 1:
            raise ConfigError("exactly one leader required")
        for v in self.speakers:
            if not 80.0 <= v.f0 <= 300.0:
                raise ConfigError(f"{v.member}: f0 {v.f0} outside [80, 300] Hz")
            freqs = [f for f, _ in v.formants]
            if len(freqs) != 2 or not (freqs[0] < freqs[1] < 3500.0):
                raise ConfigError(f"{v.member}: need two formants with F1 < F2 < 3500")
        prev_end = None
        for utt in sorted(self.schedule, key=lambda u: u.start):
            if utt.speaker not in names:
                raise ConfigError(f"schedule references unknown speaker {utt.speaker!r}")
            if utt.end <= utt.start or utt.start < 0 or utt.end > self.duration_s + 1e-9:
                raise ConfigError(f"utterance ({utt.start}, {utt.end}) outside session")
            if prev_end is not None and utt.start < prev_end - 1e-9 and not self.allow_overlap:
                raise ConfigError(f"overlapping utterances at {utt.start:.3f}s")
            prev_end = max(prev_end or utt.end, utt.end)


@dataclass
class GeneratedSession:
    outdir: Path
    manifest_path: Path
    wav_paths: dict[int, Path]
    sad_paths: dict[int, Path]
    ref_channel_paths: dict[int, Path]
    ref_session_path: Path
    truth_path: Path
    truth: dict = field(repr=False, default_factory=dict)


def load_script(path: str | Path) -> SessionScript:
    """Parse and validate a session script JSON file."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"script not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in script {p}: {exc}") from exc
    try:
        speakers = [
            SpeakerVoice(
                member=s["member"],
                role=s["role"],
                f0=float(s["f0"]),
                formants=tuple((float(f), float(b)) for f, b in s["formants"]),
                tilt=float(s["tilt"]),
                level_db=float(s["level_db"]),
            )
            for s in raw["speakers"]
        ]
        schedule = [
            Utterance(speaker=u["speaker"], start=float(u["start"]), end=float(u["end"]))
            for u in raw["schedule"]
        ]
        script = SessionScript(
            session_id=str(raw["session_id"]),
            duration_s=float(raw["duration_s"]),
            speakers=speakers,
            schedule=schedule,
            cross_gain_db=float(raw.get("cross_gain_db", -6.0)),
            noise_floor_db=float(raw.get("noise_floor_db", -45.0)),
            seed=int(raw.get("seed", 0)),
            allow_overlap=bool(raw.get("allow_overlap", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad script field in {p}: {exc!r}") from exc
    script.validate()
    return script


def synthesize_utterance(voice: SpeakerVoice, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """One steady utterance: vibrato'd impulse train + aspiration noise,
    through two resonators and a tilt filter, faded and RMS-normalized."""
    sr = SAMPLE_RATE
    t = np.arange(n_samples) / sr
    inst_freq = voice.f0 * (1.0 + 0.015 * np.sin(2.0 * np.pi * 4.5 * t))
    phase = np.cumsum(inst_freq) / sr
    pulses = np.zeros(n_samples)
    pulses[np.flatnonzero(np.diff(np.floor(phase)) > 0)] = 1.0
    excitation = pulses + 0.03 * rng.standard_normal(n_samples)

    signal = excitation
    for freq, bw in voice.formants:
        r = np.exp(-np.pi * bw / sr)
        theta = 2.0 * np.pi * freq / sr
        signal = lfilter([1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r], signal)
    signal = lfilter([1.0], [1.0, -voice.tilt], signal)

    fade = min(int(0.020 * sr), n_samples // 2)
    if fade > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
        signal[:fade] *= ramp
        signal[-fade:] *= ramp[::-1]

    rms = float(np.sqrt(np.mean(signal**2)))
    if rms > 0:
        signal = signal * (10.0 ** (voice.level_db / 20.0) / rms)
    return signal


def generate_session(script: SessionScript, outdir: str | Path) -> GeneratedSession:
    """Render WAVs, manifest, reference RTTMs, SAD labels, and truth JSON."""
    script.validate()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sr = SAMPLE_RATE
    n = int(round(script.duration_s * sr))
    voices = {v.member: v for v in script.speakers}
    channel_of = {v.member: i + 1 for i, v in enumerate(script.speakers)}
    cross_gain = 10.0 ** (script.cross_gain_db / 20.0)
    noise_sigma = 10.0 ** (script.noise_floor_db / 20.0)
    schedule = sorted(script.schedule, key=lambda u: (u.start, u.speaker))

    channels = {
        ch: np.random.default_rng([script.seed, ch]).normal(0.0, noise_sigma, n)
        for ch in channel_of.values()
    }
    for utt_index, utt in enumerate(schedule):
        i0 = int(round(utt.start * sr))
        i1 = min(int(round(utt.end * sr)), n)
        rng = np.random.default_rng([script.seed, 100_000 + utt_index])
        signal = synthesize_utterance(voices[utt.speaker], i1 - i0, rng)
        own = channel_of[utt.speaker]
        for ch, buf in channels.items():
            buf[i0:i1] += signal if ch == own else cross_gain * signal

    wav_paths, sad_paths, ref_channel_paths = {}, {}, {}
    for ch in sorted(channels):
        clipped = np.clip(channels[ch], -1.0, 1.0)
        wav_paths[ch] = outdir / f"channel_{ch}.wav"
        save_wav(wav_paths[ch], Waveform(samples=clipped, sample_rate=sr))

        sad_lines = [f"{u.start:.3f} {u.end:.3f} speech" for u in schedule]
        sad_paths[ch] = outdir / f"sad_{ch}.lab"
        atomic_write_text(sad_paths[ch], "\n".join(sad_lines) + ("\n" if sad_lines else ""))

        member = next(m for m, c in channel_of.items() if c == ch)
        intervals = [
            (u.start, u.end - u.start, "primary" if u.speaker == member else "secondary")
            for u in schedule
        ]
        ref_channel_paths[ch] = outdir / f"ref_channel_{ch}.rttm"
        atomic_write_text(ref_channel_paths[ch], format_rttm(script.session_id, intervals))

    ref_session_path = outdir / "ref_session.rttm"
    atomic_write_text(
        ref_session_path,
        format_rttm(script.session_id, [(u.start, u.end - u.start, u.speaker) for u in schedule]),
    )

    manifest_path = outdir / "manifest.json"
    manifest = {
        "session_id": script.session_id,
        "channels": [
            {
                "channel_id": channel_of[v.member],
                "member_label": v.member,
                "role": v.role,
                "audio_path": wav_paths[channel_of[v.member]].name,
            }
            for v in script.speakers
        ],
        "notes": "synthetic session",
    }
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    transitions = sum(
        1 for a, b in zip(schedule, schedule[1:]) if a.speaker != b.speaker
    )
    member_speech = {
        m: float(sum(u.end - u.start for u in schedule if u.speaker == m)) for m in channel_of
    }
    total_speech = float(sum(member_speech.values()))
    truth = {
        "session_id": script.session_id,
        "duration_s": script.duration_s,
        "transitions": transitions,
        "turns_per_channel": {str(ch): transitions for ch in sorted(channels)},
        "member_speech_s": member_speech,
        "member_share": {
            m: (s / total_speech if total_speech > 0 else 0.0) for m, s in member_speech.items()
        },
        "total_speech_s": total_speech,
        "num_utterances": len(schedule),
    }
    truth_path = outdir / "truth.json"
    atomic_write_text(truth_path, json.dumps(truth, indent=2, sort_keys=True) + "\n")

    return GeneratedSession(
        outdir=outdir,
        manifest_path=manifest_path,
        wav_paths=wav_paths,
        sad_paths=sad_paths,
        ref_channel_paths=ref_channel_paths,
        ref_session_path=ref_session_path,
        truth_path=truth_path,
        truth=truth,
    )


# -- voice presets and schedule helper (used by the bundled demos and tests) --

EASY_VOICES = [
    SpeakerVoice("leader", "leader", 112.0, ((530.0, 70.0), (1680.0, 100.0)), 0.30, -20.0),
    SpeakerVoice("student1", "student", 208.0, ((840.0, 75.0), (2280.0, 110.0)), 0.55, -20.0),
    SpeakerVoice("student2", "student", 152.0, ((400.0, 65.0), (1080.0, 90.0)), 0.72, -20.0),
    SpeakerVoice("student3", "student", 262.0, ((700.0, 70.0), (2850.0, 120.0)), 0.42, -20.0),
    SpeakerVoice("student4", "student", 132.0, ((620.0, 70.0), (1950.0, 100.0)), 0.60, -20.0),
    SpeakerVoice("student5", "student", 232.0, ((950.0, 80.0), (1450.0, 95.0)), 0.48, -20.0),
]


def easy_speakers(n_channels: int) -> list[SpeakerVoice]:
    if not 2 <= n_channels <= len(EASY_VOICES):
        raise ConfigError(f"easy preset supports 2..{len(EASY_VOICES)} channels")
    return EASY_VOICES[:n_channels]


def make_schedule(
    duration_s: float,
    speakers: list[SpeakerVoice],
    seed: int,
    leader_block_s: float = 4.0,
    student_block_s: float = 2.0,
    gap_s: float = 0.2,
) -> list[Utterance]:
    """Alternating leader/student blocks aligned to the block grid, each
    utterance ending gap_s early. Students rotate in seeded random order with
    no immediate repeats, so consecutive speakers always differ."""
    rng = np.random.default_rng(seed)
    leader = next(v.member for v in speakers if v.role == "leader")
    students = [v.member for v in speakers if v.role != "leader"]
    schedule = []
    t = 0.0
    turn_is_leader = True
    prev_student = None
    while True:
        block = leader_block_s if turn_is_leader else student_block_s
        if t + block > duration_s + 1e-9:
            break
        if turn_is_leader:
            speaker = leader
        else:
            choices = [s for s in students if s != prev_student] or students
            speaker = choices[int(rng.integers(len(choices)))]
            prev_student = speaker
        schedule.append(Utterance(speaker=speaker, start=round(t, 3), end=round(t + block - gap_s, 3)))
        t += block
        turn_is_leader = not turn_is_leader
    return schedule


def script_to_json(script: SessionScript) -> str:
    payload = {
        "session_id": script.session_id,
        "duration_s": script.duration_s,
        "seed": script.seed,
        "cross_gain_db": script.cross_gain_db,
        "noise_floor_db": script.noise_floor_db,
        "allow_overlap": script.allow_overlap,
        "speakers": [
            {
                "member": v.member,
                "role": v.role,
                "f0": v.f0,
                "formants": [list(f) for f in v.formants],
                "tilt": v.tilt,
                "level_db": v.level_db,
            }
            for v in script.speakers
        ],
        "schedule": [
            {"speaker": u.speaker, "start": u.start, "end": u.end} for u in script.schedule
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
