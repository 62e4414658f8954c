"""Primary-speaker identification and cross-channel refinement.

Per channel, the louder of the two clusters (mean energy summed over the
first two formant bands, computed from unnormalized audio) is the wearer.
Because only one person speaks at a time, windows where several channels
claim the primary speaker are resolved in favour of the most energetic
channel; everyone else's claim in that window is reversed to secondary.
"""

from __future__ import annotations

from dataclasses import dataclass
from warnings import warn

import numpy as np

from .clustering import Segment, TwoClusterAssignment
from .config import SAMPLE_RATE, PipelineConfig
from .features import lpc_coefficients

NONSPEECH = 0
PRIMARY = 1
SECONDARY = 2

LABEL_NAMES = {NONSPEECH: "nonspeech", PRIMARY: "primary", SECONDARY: "secondary"}

UNATTRIBUTED = -1


@dataclass
class ChannelDiarization:
    channel_id: int
    labels: np.ndarray  # int8 per frame: NONSPEECH / PRIMARY / SECONDARY


@dataclass
class SessionDiarization:
    labels: np.ndarray  # per frame: channel_id of the primary speaker,
    #                     UNATTRIBUTED for unclaimed speech, NONSPEECH (0) else
    members: dict[int, str]  # channel_id -> member label


def formant_band_energy(
    frames: np.ndarray,
    speech_mask: np.ndarray | None = None,
    cfg: PipelineConfig = PipelineConfig(),
) -> np.ndarray:
    """Per-frame energy summed over +-band_hz around the two lowest-frequency
    peaks of the order-10 LPC envelope inside [formant_low, formant_high] Hz.
    Frames where fewer than two peaks exist fall back to the whole band;
    non-speech frames are zero by convention."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[None, :]
    n_fft = cfg.n_fft
    freqs = np.arange(n_fft // 2 + 1) * SAMPLE_RATE / n_fft
    in_band = (freqs >= cfg.formant_low_hz) & (freqs <= cfg.formant_high_hz)

    power = np.abs(np.fft.rfft(frames * np.hamming(frames.shape[1]), n=n_fft, axis=1)) ** 2
    a = lpc_coefficients(frames, cfg.lpc_order)
    env = 1.0 / (np.abs(np.fft.rfft(a, n=n_fft, axis=1)) ** 2 + 1e-300)

    is_peak = np.zeros_like(env, dtype=bool)
    is_peak[:, 1:-1] = (env[:, 1:-1] > env[:, :-2]) & (env[:, 1:-1] >= env[:, 2:])
    is_peak &= in_band[None, :]

    energy = np.zeros(len(frames))
    for i in range(len(frames)):
        peak_bins = np.flatnonzero(is_peak[i])
        if len(peak_bins) >= 2:
            f1, f2 = freqs[peak_bins[0]], freqs[peak_bins[1]]
            sel = (np.abs(freqs - f1) <= cfg.formant_band_hz) | (
                np.abs(freqs - f2) <= cfg.formant_band_hz
            )
        else:
            sel = in_band
        energy[i] = power[i, sel].sum()

    if speech_mask is not None:
        energy = np.where(np.asarray(speech_mask, dtype=bool), energy, 0.0)
    return energy


def assign_primary(
    assignment: TwoClusterAssignment,
    segments: list[Segment],
    energy: np.ndarray,
    speech_mask: np.ndarray,
    channel_id: int,
) -> ChannelDiarization:
    """Label the higher-mean-energy cluster primary; ties go to the cluster
    with more frames, then to cluster_a."""
    labels = np.full(len(speech_mask), NONSPEECH, dtype=np.int8)
    if not segments:
        return ChannelDiarization(channel_id=channel_id, labels=labels)

    rows_by_cluster = {0: [], 1: []}
    for seg, cluster in zip(segments, assignment.labels):
        rows_by_cluster[int(cluster)].append(seg.feature_rows)
    rows = {
        k: (np.concatenate(v) if v else np.empty(0, dtype=int)) for k, v in rows_by_cluster.items()
    }

    if len(rows[1]) == 0 or len(rows[0]) == 0:
        warn(f"channel {channel_id}: degenerate single-cluster assignment, all primary")
        primary_cluster = 0 if len(rows[0]) else 1
    else:
        mean_a = float(energy[rows[0]].mean())
        mean_b = float(energy[rows[1]].mean())
        if mean_a > mean_b:
            primary_cluster = 0
        elif mean_b > mean_a:
            primary_cluster = 1
        elif len(rows[0]) != len(rows[1]):
            primary_cluster = 0 if len(rows[0]) > len(rows[1]) else 1
        else:
            primary_cluster = 0

    labels[rows[primary_cluster]] = PRIMARY
    other = rows[1 - primary_cluster]
    if len(other):
        labels[other] = SECONDARY
    return ChannelDiarization(channel_id=channel_id, labels=labels)


def cross_channel_refine(
    tracks: list[ChannelDiarization],
    energies: list[np.ndarray],
    cfg: PipelineConfig = PipelineConfig(),
) -> list[ChannelDiarization]:
    """Within each fixed window (2 s, phase-locked to t=0), keep the primary
    claim only on the channel whose claimed frames carry the most energy;
    reverse every other channel's claimed frames to secondary."""
    if not tracks:
        return []
    lengths = {len(t.labels) for t in tracks} | {len(e) for e in energies}
    if len(lengths) != 1:
        raise ValueError(f"track/energy lengths differ: {sorted(lengths)}")
    n = lengths.pop()
    win = cfg.refine_window_frames

    out = [ChannelDiarization(t.channel_id, t.labels.copy()) for t in tracks]
    for lo in range(0, n, win):
        hi = min(lo + win, n)
        claims = [i for i, t in enumerate(out) if np.any(t.labels[lo:hi] == PRIMARY)]
        if len(claims) <= 1:
            continue
        sums = []
        for i in claims:
            sel = out[i].labels[lo:hi] == PRIMARY
            sums.append(float(energies[i][lo:hi][sel].sum()))
        winner = claims[int(np.argmax(sums))]
        for i in claims:
            if i == winner:
                continue
            window = out[i].labels[lo:hi]
            window[window == PRIMARY] = SECONDARY
    return out


def merge_session(
    tracks: list[ChannelDiarization],
    members: dict[int, str],
) -> SessionDiarization:
    """Combine refined per-channel decisions into one session timeline."""
    if not tracks:
        return SessionDiarization(labels=np.empty(0, dtype=np.int32), members=members)
    n = len(tracks[0].labels)
    label_matrix = np.stack([t.labels for t in tracks])
    primary_counts = (label_matrix == PRIMARY).sum(axis=0)
    if np.any(primary_counts > 1):
        bad = int(np.flatnonzero(primary_counts > 1)[0])
        raise ValueError(
            f"unrefined input: frame {bad} is primary on {int(primary_counts[bad])} channels"
        )
    session = np.full(n, NONSPEECH, dtype=np.int32)
    any_speech = np.any(label_matrix != NONSPEECH, axis=0)
    session[any_speech] = UNATTRIBUTED
    channel_ids = np.array([t.channel_id for t in tracks])
    primary_rows = np.argmax(label_matrix == PRIMARY, axis=0)
    has_primary = primary_counts == 1
    session[has_primary] = channel_ids[primary_rows[has_primary]]
    return SessionDiarization(labels=session, members=members)
