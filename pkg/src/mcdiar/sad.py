"""Speech activity detection.

The built-in detector is a transparent stand-in: per-frame log energy,
spectral flatness, and zero-crossing rate are reduced to one score by PCA,
thresholded where a 2-component 1-d GMM's posteriors cross, and smoothed.
External label files can replace it wholesale so the rest of the pipeline can
run with oracle speech marks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import FrameGrid, Waveform, frame_signal
from .change_detection import fit_gmm2
from .config import PipelineConfig
from .errors import RttmError

_ENERGY_FLOOR = 1e-12
_SILENCE_RMS = 1e-4  # below this the degenerate-score fallback calls non-speech


@dataclass
class SadScoreTrack:
    scores: np.ndarray  # per frame, higher = more speech-like
    threshold: float

    @property
    def mask(self) -> np.ndarray:
        return self.scores >= self.threshold


@dataclass
class SpeechMask:
    frames: np.ndarray  # bool per frame
    source: str  # "builtin" | "external"


def frame_scores(frames: np.ndarray) -> np.ndarray:
    """PCA score over {log energy, spectral flatness, zero-crossing rate},
    signed so that higher means more speech-like (positive energy loading)."""
    power = np.abs(np.fft.rfft(frames * np.hamming(frames.shape[1]), n=512, axis=1)) ** 2
    log_energy = np.log(np.sum(frames**2, axis=1) + _ENERGY_FLOOR)
    flatness = np.exp(np.mean(np.log(power + _ENERGY_FLOOR), axis=1)) / (
        np.mean(power, axis=1) + _ENERGY_FLOOR
    )
    signs = np.sign(frames)
    zcr = np.mean(np.abs(np.diff(signs, axis=1)) > 0, axis=1)

    feats = np.stack([log_energy, flatness, zcr], axis=1)
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0)
    sd = np.where(sd < 1e-12, 1.0, sd)
    z = (feats - mu) / sd
    cov = (z.T @ z) / max(len(z), 1)
    _, vecs = np.linalg.eigh(cov)
    pc = vecs[:, -1]
    score = z @ pc
    if float(np.dot(score, z[:, 0])) < 0.0:  # align with the energy axis
        score = -score
    return score


def _posterior_crossing(model, lo: float, hi: float) -> float:
    """Score where the two 1-d component posteriors are equal (grid + linear
    interpolation); falls back to the midpoint when they never cross."""
    if hi - lo < 1e-12:
        return 0.5 * (lo + hi)
    xs = np.linspace(lo, hi, 1001)
    lp = np.empty((len(xs), 2))
    for k in range(2):
        v = model.variances[k, 0]
        lp[:, k] = (
            np.log(model.weights[k])
            - 0.5 * np.log(2.0 * np.pi * v)
            - 0.5 * (xs - model.means[k, 0]) ** 2 / v
        )
    diff = lp[:, 1] - lp[:, 0]
    sign_change = np.flatnonzero(np.diff(np.sign(diff)) != 0)
    if len(sign_change) == 0:
        return 0.5 * (lo + hi)
    i = sign_change[0]
    frac = diff[i] / (diff[i] - diff[i + 1])
    return float(xs[i] + frac * (xs[i + 1] - xs[i]))


def smooth_mask(mask: np.ndarray, median_frames: int = 11, min_island: int = 6) -> np.ndarray:
    """Median-filter the boolean mask, then drop speech islands shorter than
    min_island frames (a single median pass can still leave them)."""
    mask = np.asarray(mask, dtype=bool)
    n = len(mask)
    if n == 0:
        return mask.copy()
    half = median_frames // 2
    padded = np.pad(mask.astype(np.int32), half, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, median_frames)
    out = windows.sum(axis=1) > half

    # enforce the minimum speech-island length
    idx = 0
    while idx < n:
        if out[idx]:
            end = idx
            while end < n and out[end]:
                end += 1
            if end - idx < min_island:
                out[idx:end] = False
            idx = end
        else:
            idx += 1
    return out


def detect_speech(
    w: Waveform, cfg: PipelineConfig = PipelineConfig()
) -> tuple[SadScoreTrack, SpeechMask]:
    """Built-in detector; see module docstring for the recipe."""
    grid, frames = frame_signal(w, cfg.frame_length, cfg.hop_length)
    if grid.num_frames < int(round(w.sample_rate / cfg.hop_length)):  # < 1 s of frames
        warnings.warn("channel shorter than 1 s; marking everything as speech")
        scores = np.ones(grid.num_frames)
        return SadScoreTrack(scores, 0.0), SpeechMask(np.ones(grid.num_frames, dtype=bool), "builtin")

    scores = frame_scores(frames)
    if float(scores.std()) < 1e-12:
        speech = float(np.sqrt(np.mean(frames**2))) > _SILENCE_RMS
        mask = np.full(grid.num_frames, speech, dtype=bool)
        return SadScoreTrack(scores, np.inf if not speech else -np.inf), SpeechMask(mask, "builtin")

    model = fit_gmm2(scores[:, None], cfg=cfg)
    lo, hi = sorted(float(m) for m in model.means[:, 0])
    threshold = _posterior_crossing(model, lo, hi)
    track = SadScoreTrack(scores, threshold)
    mask = smooth_mask(track.mask, cfg.sad_median_frames, cfg.sad_min_island_frames)
    return track, SpeechMask(mask, "builtin")


def parse_label_file(path: str | Path) -> list[tuple[float, float, str]]:
    """Read `start end label` lines; labels are speech/nonspeech."""
    intervals = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3 or parts[2] not in ("speech", "nonspeech"):
            raise RttmError(f"{path}:{lineno}: expected 'start end speech|nonspeech', got {line!r}")
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise RttmError(f"{path}:{lineno}: bad interval times") from exc
        if end <= start:
            raise RttmError(f"{path}:{lineno}: empty or negative interval")
        intervals.append((start, end, parts[2]))
    return intervals


def load_external_mask(path: str | Path, grid: FrameGrid) -> SpeechMask:
    """Rasterize a label file onto the frame grid: a frame is speech when its
    midpoint lies inside a speech interval."""
    intervals = parse_label_file(path)
    for (s1, e1, _), (s2, _, _) in zip(intervals, intervals[1:]):
        if s2 < s1:
            raise RttmError(f"{path}: intervals out of order at {s2:.3f}")
        if s2 < e1:
            raise RttmError(f"{path}: overlapping intervals at {s2:.3f}")
    speech = [(s, e) for s, e, lab in intervals if lab == "speech"]
    duration = (grid.num_frames - 1) * grid.hop_seconds + grid.frame_length / grid.sample_rate
    if intervals and intervals[-1][1] > duration + grid.hop_seconds + 1e-6:
        raise RttmError(
            f"{path}: interval end {intervals[-1][1]:.3f}s beyond audio length {duration:.3f}s"
        )
    mask = np.zeros(grid.num_frames, dtype=bool)
    mids = grid.midpoint_times()
    for s, e in speech:
        mask |= (mids >= s) & (mids < e)
    return SpeechMask(frames=mask, source="external")


def mask_to_intervals(mask: np.ndarray, grid: FrameGrid) -> list[tuple[float, float]]:
    """Maximal speech runs as (start, end) second pairs on the frame grid."""
    mask = np.asarray(mask, dtype=bool)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(np.int8), [0]])))
    starts, ends = edges[0::2], edges[1::2]
    return [(float(s * grid.hop_seconds), float(e * grid.hop_seconds)) for s, e in zip(starts, ends)]


def write_label_file(path: str | Path, mask: np.ndarray, grid: FrameGrid) -> None:
    lines = [f"{s:.3f} {e:.3f} speech" for s, e in mask_to_intervals(mask, grid)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def sad_eer(scores: np.ndarray, truth: np.ndarray) -> float:
    """Equal error rate (percent) of a score track against a boolean truth
    mask, interpolated linearly between adjacent operating points."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if len(scores) != len(truth):
        raise ValueError("scores and truth lengths differ")
    n_speech = int(truth.sum())
    n_nonspeech = len(truth) - n_speech
    if n_speech == 0 or n_nonspeech == 0:
        raise ValueError("EER undefined: truth has a single class")

    order = np.argsort(scores, kind="stable")
    sorted_truth = truth[order]
    # threshold swept upward through each distinct score: frames strictly below
    # the threshold become non-speech
    miss = np.concatenate([[0], np.cumsum(sorted_truth)]) / n_speech
    fa = (n_nonspeech - np.concatenate([[0], np.cumsum(~sorted_truth)])) / n_nonspeech
    diff = fa - miss
    flip = np.flatnonzero(np.diff(np.sign(diff)) != 0)
    if len(flip) == 0:
        i = int(np.argmin(np.abs(diff)))
        return float(100.0 * 0.5 * (fa[i] + miss[i]))
    i = flip[0]
    denom = (miss[i + 1] - miss[i]) - (fa[i + 1] - fa[i])
    frac = diff[i] / denom if abs(denom) > 1e-300 else 0.0
    return float(100.0 * (fa[i] + frac * (fa[i + 1] - fa[i])))
