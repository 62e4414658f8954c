"""Per-frame fused features: 39-d MFCC(+deltas) and 51 DCT coefficients of the
320-point real cepstrum of the LPC residual, concatenated to 90 dimensions.

All stages accept a whole frame matrix (num_frames x 320) and vectorize across
frames; single frames are handled as 1-row matrices. The "51-point DCT" of the
residual cepstrum is realized as the first 51 coefficients of the orthonormal
DCT-II over the full 320-point vector (the only reading that makes
39 + 51 = 90); see README for the rationale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .audio_io import FrameGrid
from .config import SAMPLE_RATE, PipelineConfig

LOG_FLOOR = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int = 26,
    n_fft: int = 512,
    rate: int = SAMPLE_RATE,
    fmin: float = 0.0,
    fmax: float = 4000.0,
) -> np.ndarray:
    """Triangular unit-height filters, centers equally spaced on the mel scale."""
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bin_hz = np.arange(n_fft // 2 + 1) * rate / n_fft
    fb = np.zeros((n_mels, len(bin_hz)))
    for j in range(n_mels):
        lo, mid, hi = edges_hz[j], edges_hz[j + 1], edges_hz[j + 2]
        rising = (bin_hz - lo) / (mid - lo)
        falling = (hi - bin_hz) / (hi - mid)
        fb[j] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def _as_frames(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


def mfcc_static(frames: np.ndarray, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """13 static cepstra (c0 retained) per frame: Hamming window, power
    spectrum, mel filterbank, floored log, orthonormal DCT-II."""
    frames = _as_frames(frames)
    window = np.hamming(frames.shape[1])
    spec = np.fft.rfft(frames * window, n=cfg.n_fft, axis=1)
    power = np.abs(spec) ** 2
    fb = mel_filterbank(cfg.n_mels, cfg.n_fft, SAMPLE_RATE, cfg.mel_fmin, cfg.mel_fmax)
    energies = power @ fb.T + cfg.log_floor
    return scipy.fft.dct(np.log(energies), type=2, norm="ortho", axis=1)[:, : cfg.n_mfcc]


def add_deltas(static: np.ndarray, window: int = 2) -> np.ndarray:
    """Append delta and delta-delta columns (regression over +-window frames,
    edge replication at stream boundaries)."""
    static = np.asarray(static, dtype=np.float64)
    denom = 2.0 * sum(n * n for n in range(1, window + 1))

    def delta(x):
        padded = np.pad(x, ((window, window), (0, 0)), mode="edge")
        out = np.zeros_like(x)
        for n in range(1, window + 1):
            out += n * (padded[window + n : window + n + len(x)] - padded[window - n : window - n + len(x)])
        return out / denom

    d1 = delta(static)
    d2 = delta(d1)
    return np.hstack([static, d1, d2])


def mfcc39(frames: np.ndarray, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Full 39-d MFCC stream (13 static + 13 delta + 13 delta-delta)."""
    return add_deltas(mfcc_static(frames, cfg), cfg.delta_window)


def lpc_coefficients(frames: np.ndarray, order: int = 10) -> np.ndarray:
    """Error-filter coefficients [1, a_1..a_p] per frame via the
    autocorrelation method and Levinson-Durbin, estimated on Hamming-windowed
    frames. Degenerate (all-zero) frames get the identity filter."""
    frames = _as_frames(frames)
    n_frames, flen = frames.shape
    windowed = frames * np.hamming(flen)

    nfft = scipy.fft.next_fast_len(2 * flen - 1)
    spec = np.fft.rfft(windowed, n=nfft, axis=1)
    r = np.fft.irfft(np.abs(spec) ** 2, n=nfft, axis=1)[:, : order + 1]

    a = np.zeros((n_frames, order + 1))
    a[:, 0] = 1.0
    err = r[:, 0].copy()
    alive = err > 0.0
    err = np.where(alive, err, 1.0)  # placeholder, dead rows keep identity filter
    for i in range(1, order + 1):
        acc = r[:, i] + np.einsum("nj,nj->n", a[:, 1:i], r[:, i - 1 : 0 : -1])
        k = np.where(alive, -acc / err, 0.0)
        a_prev = a[:, 1:i].copy()
        a[:, 1:i] = a_prev + k[:, None] * a_prev[:, ::-1]
        a[:, i] = k
        err = err * (1.0 - k * k)
        alive = alive & (err > 1e-20)
    return a


def lpc_residual(frames: np.ndarray, order: int = 10) -> np.ndarray:
    """Inverse-filter each unwindowed frame with its own LPC error filter,
    zero history at the frame start."""
    frames = _as_frames(frames)
    a = lpc_coefficients(frames, order)
    flen = frames.shape[1]
    residual = np.zeros_like(frames)
    for k in range(order + 1):
        shifted = np.zeros_like(frames)
        shifted[:, k:] = frames[:, : flen - k] if k else frames
        residual += a[:, k : k + 1] * shifted
    return residual


def real_cepstrum(x: np.ndarray, eps: float = LOG_FLOOR) -> np.ndarray:
    """Real cepstrum via same-length transforms: IDFT(log(|DFT(x)| + eps))."""
    x = _as_frames(x)
    n = x.shape[1]
    mag = np.abs(np.fft.rfft(x, n=n, axis=1))
    return np.fft.irfft(np.log(mag + eps), n=n, axis=1)


def dct_head(c: np.ndarray, keep: int = 51) -> np.ndarray:
    """First `keep` coefficients of the orthonormal DCT-II over the full input."""
    c = _as_frames(c)
    return scipy.fft.dct(c, type=2, norm="ortho", axis=1)[:, :keep]


def fuse(mfcc: np.ndarray, dct: np.ndarray) -> np.ndarray:
    """Concatenate [39-d MFCC | 51-d residual-cepstrum DCT] per frame."""
    mfcc = _as_frames(mfcc)
    dct = _as_frames(dct)
    if mfcc.shape[1] != 39 or dct.shape[1] != 51:
        raise ValueError(f"expected 39- and 51-d inputs, got {mfcc.shape[1]} and {dct.shape[1]}")
    if mfcc.shape[0] != dct.shape[0]:
        raise ValueError("frame counts differ")
    return np.hstack([mfcc, dct])


def znormalize(frames: np.ndarray, speech_mask: np.ndarray) -> np.ndarray:
    """Per-dimension z-normalization with statistics from speech frames only
    (falls back to all frames when the mask is empty)."""
    stats_rows = frames[speech_mask] if speech_mask.sum() >= 2 else frames
    if len(stats_rows) == 0:
        return frames.copy()
    mean = stats_rows.mean(axis=0)
    std = stats_rows.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return (frames - mean) / std


@dataclass
class FusedFeatureStream:
    frames: np.ndarray  # num_frames x 90, z-normalized per channel
    times: np.ndarray  # frame start seconds
    speech_mask: np.ndarray  # bool per frame
    grid: FrameGrid

    def __post_init__(self):
        if not (len(self.frames) == len(self.times) == len(self.speech_mask)):
            raise ValueError("frames, times and speech_mask lengths differ")

    @property
    def num_frames(self) -> int:
        return len(self.frames)


def fused_feature_stream(
    audio_frames: np.ndarray,
    grid: FrameGrid,
    speech_mask: np.ndarray,
    cfg: PipelineConfig = PipelineConfig(),
) -> FusedFeatureStream:
    """Run the full feature stack over a channel's frame matrix."""
    if len(audio_frames) == 0:
        empty = np.empty((0, 90))
        return FusedFeatureStream(empty, np.empty(0), np.zeros(0, dtype=bool), grid)
    m = mfcc39(audio_frames, cfg)
    residual = lpc_residual(audio_frames, cfg.lpc_order)
    d = dct_head(real_cepstrum(residual, cfg.log_floor), cfg.dct_keep)
    fused = znormalize(fuse(m, d), np.asarray(speech_mask, dtype=bool))
    return FusedFeatureStream(fused, grid.start_times(), np.asarray(speech_mask, dtype=bool), grid)


def write_feature_dump(path_base, stream: FusedFeatureStream) -> None:
    """Binary float32 records (90 per frame, little-endian) + JSON sidecar."""
    import json
    from pathlib import Path

    base = Path(path_base)
    base.with_suffix(".f32").write_bytes(stream.frames.astype("<f4").tobytes())
    sidecar = {
        "dims": int(stream.frames.shape[1]),
        "num_frames": int(stream.num_frames),
        "times": [round(float(t), 6) for t in stream.times],
        "speech_mask": [bool(b) for b in stream.speech_mask],
    }
    base.with_suffix(".json").write_text(json.dumps(sidecar, sort_keys=True))


def read_feature_dump(path_base) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of write_feature_dump; returns (frames, times, speech_mask)."""
    import json
    from pathlib import Path

    base = Path(path_base)
    sidecar = json.loads(base.with_suffix(".json").read_text())
    frames = np.frombuffer(base.with_suffix(".f32").read_bytes(), dtype="<f4")
    frames = frames.reshape(sidecar["num_frames"], sidecar["dims"]).astype(np.float64)
    return frames, np.array(sidecar["times"]), np.array(sidecar["speech_mask"], dtype=bool)
