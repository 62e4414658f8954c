"""Unsupervised speaker-change detection.

For each candidate time t, the fused-feature frames of the two adjacent
1-second windows are modeled two ways: jointly by one 2-component diagonal
GMM, and separately by one diagonal Gaussian per window. A positive
log-likelihood ratio (separate minus joint) indicates a speaker change at t.
Raw positives arrive in runs, so changes are taken at local maxima of the
ratio trace with a minimum gap between kept points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import PipelineConfig
from .features import FusedFeatureStream

GAUSS_MIN_FRAMES = 10
GMM_MIN_FRAMES = 20


@dataclass(frozen=True)
class GaussianModel:
    mean: np.ndarray
    var: np.ndarray  # diagonal, floored


@dataclass(frozen=True)
class Gmm2Model:
    weights: np.ndarray  # (2,), floored to [0.01, 0.99]
    means: np.ndarray  # (2, dim)
    variances: np.ndarray  # (2, dim), floored
    ll_trace: np.ndarray = field(default=None, repr=False, compare=False)


@dataclass
class LlrTrace:
    eval_times: np.ndarray
    d_llr: np.ndarray
    window_s: float = 1.0
    hop_s: float = 0.1

    def to_csv(self) -> str:
        lines = ["time,d_llr"]
        lines += [f"{t:.2f},{v!r}" for t, v in zip(self.eval_times, self.d_llr)]
        return "\n".join(lines) + "\n"


@dataclass
class ChangePointList:
    times: np.ndarray  # strictly increasing seconds
    channel_id: int


def fit_gaussian(x: np.ndarray, var_floor: float = 1e-4) -> GaussianModel:
    """ML mean and biased per-dimension variance, variance-floored."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < GAUSS_MIN_FRAMES:
        raise ValueError(f"need >= {GAUSS_MIN_FRAMES} frames, got {x.shape[0]}")
    return GaussianModel(mean=x.mean(axis=0), var=np.maximum(x.var(axis=0), var_floor))


def gaussian_loglik(x: np.ndarray, model: GaussianModel) -> float:
    return kernels.gaussian_loglik_sum(np.asarray(x, dtype=np.float64), model.mean, model.var)


def gmm2_loglik(x: np.ndarray, model: Gmm2Model) -> float:
    return kernels.gmm2_loglik_sum(
        np.asarray(x, dtype=np.float64), model.weights, model.means, model.variances
    )


def fit_gmm2(x: np.ndarray, seed: int = 0, cfg: PipelineConfig = PipelineConfig()) -> Gmm2Model:
    """EM fit of a 2-component diagonal GMM.

    Initialization is deterministic (global mean split +-0.1 std along the
    highest-variance dimension), so `seed` is currently unused; it stays in
    the signature for a future randomized-restart option.
    """
    del seed
    x = np.asarray(x, dtype=np.float64)
    n, dim = x.shape
    if n < GMM_MIN_FRAMES:
        raise ValueError(f"need >= {GMM_MIN_FRAMES} frames, got {n}")

    mean = x.mean(axis=0)
    var = np.maximum(x.var(axis=0), cfg.var_floor)
    split_dim = int(np.argmax(var))
    offset = np.zeros(dim)
    offset[split_dim] = 0.1 * np.sqrt(var[split_dim])
    means = np.stack([mean - offset, mean + offset])
    variances = np.stack([var, var])
    weights = np.array([0.5, 0.5])

    x_sq = x**2
    trace = []
    prev_ll = -np.inf
    for _ in range(cfg.em_max_iters):
        # E-step
        lp = np.empty((n, 2))
        for k in range(2):
            log_norm = np.log(weights[k]) - 0.5 * np.sum(np.log(2.0 * np.pi * variances[k]))
            lp[:, k] = log_norm - 0.5 * np.sum((x - means[k]) ** 2 / variances[k], axis=1)
        hi = lp.max(axis=1)
        log_total = hi + np.log(np.sum(np.exp(lp - hi[:, None]), axis=1))
        ll = float(log_total.sum())
        trace.append(ll)
        resp = np.exp(lp - log_total[:, None])
        # M-step with weight and variance floors
        counts = resp.sum(axis=0)
        weights = np.clip(counts / n, cfg.weight_floor, 1.0 - cfg.weight_floor)
        weights = weights / weights.sum()
        counts = np.maximum(counts, 1e-12)
        means = (resp.T @ x) / counts[:, None]
        variances = np.maximum((resp.T @ x_sq) / counts[:, None] - means**2, cfg.var_floor)
        if ll - prev_ll < cfg.em_tol and len(trace) > 1:
            break
        prev_ll = ll

    return Gmm2Model(
        weights=weights, means=means, variances=variances, ll_trace=np.array(trace)
    )


def d_llr(u: np.ndarray, v: np.ndarray, cfg: PipelineConfig = PipelineConfig()) -> float:
    """Log-likelihood ratio of the split-window hypothesis over the joint one.

    Positive values mean two separate Gaussians explain the adjacent windows
    better than a single 2-component GMM over their union.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w = np.vstack([u, v])
    phi_u = fit_gaussian(u, cfg.var_floor)
    phi_v = fit_gaussian(v, cfg.var_floor)
    phi_w = fit_gmm2(w, cfg=cfg)
    l_h1 = gaussian_loglik(u, phi_u) + gaussian_loglik(v, phi_v)
    l_h0 = gmm2_loglik(w, phi_w)
    return l_h1 - l_h0


def detect_changes(
    stream: FusedFeatureStream,
    channel_id: int = 0,
    cfg: PipelineConfig = PipelineConfig(),
) -> tuple[ChangePointList, LlrTrace]:
    """Slide the paired windows over the stream and pick change points.

    A time index is evaluated when both adjacent windows hold enough speech
    frames and the frame at t is itself speech (keeps reported changes inside
    speech regions). Changes are local maxima of the trace with positive
    ratio, thinned to one per min_gap by keeping the larger value.
    """
    win = cfg.g3_window_frames
    hop = cfg.g3_hop_frames
    mask = np.asarray(stream.speech_mask, dtype=bool)
    n = stream.num_frames
    hop_s = stream.grid.hop_seconds

    eval_times: list[float] = []
    values: list[float] = []
    min_speech = max(int(np.ceil(cfg.min_speech_fraction * win)), GAUSS_MIN_FRAMES)
    speech_idx = np.flatnonzero(mask)
    cum = np.concatenate([[0], np.cumsum(mask)])

    for t_idx in range(win, n - win + 1, hop):
        if not mask[t_idx]:
            continue
        n_left = cum[t_idx] - cum[t_idx - win]
        n_right = cum[t_idx + win] - cum[t_idx]
        if n_left < min_speech or n_right < min_speech:
            continue
        left = speech_idx[np.searchsorted(speech_idx, t_idx - win) : np.searchsorted(speech_idx, t_idx)]
        right = speech_idx[np.searchsorted(speech_idx, t_idx) : np.searchsorted(speech_idx, t_idx + win)]
        value = d_llr(stream.frames[left], stream.frames[right], cfg)
        eval_times.append(t_idx * hop_s)
        values.append(value)

    trace = LlrTrace(
        eval_times=np.array(eval_times),
        d_llr=np.array(values),
        window_s=cfg.g3_window_s,
        hop_s=cfg.g3_hop_s,
    )
    changes = _pick_changes(trace, cfg.min_gap_s)
    return ChangePointList(times=changes, channel_id=channel_id), trace


def _pick_changes(trace: LlrTrace, min_gap_s: float) -> np.ndarray:
    d = trace.d_llr
    t = trace.eval_times
    if len(d) == 0:
        return np.empty(0)
    left = np.concatenate([[-np.inf], d[:-1]])
    right = np.concatenate([d[1:], [-np.inf]])
    cand = np.flatnonzero((d > 0.0) & (d >= left) & (d >= right))
    # keep the larger ratio within any min_gap neighbourhood
    order = sorted(cand, key=lambda i: (-d[i], t[i]))
    kept: list[int] = []
    for i in order:
        if all(abs(t[i] - t[j]) >= min_gap_s - 1e-9 for j in kept):
            kept.append(i)
    return t[np.array(sorted(kept), dtype=int)] if kept else np.empty(0)
