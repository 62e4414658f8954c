"""Two-cluster speaker grouping.

Speech regions are split at detected change points into segments; segments
are then merged agglomeratively, always joining the pair of clusters whose
fused-feature row sets have the smallest Hausdorff distance, until exactly
two clusters remain. Merged clusters are represented by the row union of
their members, and distances touching the merged cluster are recomputed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from warnings import warn

import numpy as np

from . import kernels
from .audio_io import FrameGrid
from .change_detection import ChangePointList
from .config import PipelineConfig
from .features import FusedFeatureStream


@dataclass
class Segment:
    channel_id: int
    start: float
    end: float
    feature_rows: np.ndarray  # speech-frame indices into the channel stream

    @property
    def num_rows(self) -> int:
        return len(self.feature_rows)


@dataclass
class TwoClusterAssignment:
    labels: np.ndarray  # 0 = cluster_a, 1 = cluster_b, one per segment
    merge_trace: list[dict] = field(default_factory=list, repr=False)


def directed_hausdorff(a1: np.ndarray, a2: np.ndarray) -> float:
    """max over rows of a1 of the min Euclidean distance to rows of a2."""
    return kernels.directed_hausdorff(a1, a2)


def hausdorff(a1: np.ndarray, a2: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two feature matrices."""
    return max(kernels.directed_hausdorff(a1, a2), kernels.directed_hausdorff(a2, a1))


def build_segments(
    changes: ChangePointList,
    mask: np.ndarray,
    grid: FrameGrid,
    min_frames: int = 5,
) -> list[Segment]:
    """Split speech regions at change points; pieces shorter than min_frames
    are absorbed into a neighbour (preferring the preceding piece)."""
    mask = np.asarray(mask, dtype=bool)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(np.int8), [0]])))
    region_starts, region_ends = edges[0::2], edges[1::2]
    change_frames = sorted({grid.time_to_frame(t) for t in np.asarray(changes.times)})

    pieces: list[np.ndarray] = []  # each an array of speech frame indices
    for rs, re in zip(region_starts, region_ends):
        cuts = [c for c in change_frames if rs < c < re]
        bounds = [rs, *cuts, re]
        for lo, hi in zip(bounds, bounds[1:]):
            pieces.append(np.arange(lo, hi))

    # absorb short pieces; protect the degenerate single-piece session
    idx = 0
    while len(pieces) > 1 and idx < len(pieces):
        if len(pieces[idx]) < min_frames:
            target = idx - 1 if idx > 0 else idx + 1
            merged = np.concatenate([pieces[min(idx, target)], pieces[max(idx, target)]])
            pieces[min(idx, target)] = merged
            del pieces[max(idx, target)]
            idx = max(idx - 1, 0)
        else:
            idx += 1

    hop_s = grid.hop_seconds
    return [
        Segment(
            channel_id=changes.channel_id,
            start=float(rows[0] * hop_s),
            end=float((rows[-1] + 1) * hop_s),
            feature_rows=rows,
        )
        for rows in pieces
    ]


def _subsample(rows: np.ndarray, limit: int | None) -> np.ndarray:
    if limit is None or len(rows) <= limit:
        return rows
    pick = np.linspace(0, len(rows) - 1, limit).round().astype(int)
    return rows[np.unique(pick)]


class _Cluster:
    __slots__ = ("segment_ids", "rows", "start", "matrix")

    def __init__(self, segment_ids, rows, start, matrix):
        self.segment_ids = segment_ids
        self.rows = rows
        self.start = start
        self.matrix = matrix


def cluster_to_two(
    segments: list[Segment],
    stream: FusedFeatureStream,
    cfg: PipelineConfig = PipelineConfig(),
) -> TwoClusterAssignment:
    """Greedy agglomeration by minimum Hausdorff distance down to 2 clusters.

    Ties are broken deterministically by the earlier start time of each
    cluster's first segment, then by segment index. With row subsampling
    enabled (cfg.cluster_subsample_rows) distances are computed on at most
    that many evenly spaced rows per cluster.
    """
    n = len(segments)
    if n == 0:
        return TwoClusterAssignment(labels=np.empty(0, dtype=int))
    if n == 1:
        warn("single segment: degenerate one-cluster assignment")
        return TwoClusterAssignment(labels=np.zeros(1, dtype=int))

    feats = stream.frames
    limit = cfg.cluster_subsample_rows
    clusters: dict[int, _Cluster] = {}
    for i, seg in enumerate(segments):
        rows = np.asarray(seg.feature_rows, dtype=int)
        clusters[i] = _Cluster((i,), rows, (seg.start, i), feats[_subsample(rows, limit)])

    dist: dict[tuple[int, int], float] = {}
    ids = sorted(clusters)
    for a_pos, a in enumerate(ids):
        for b in ids[a_pos + 1 :]:
            dist[(a, b)] = max(
                kernels.directed_hausdorff(clusters[a].matrix, clusters[b].matrix),
                kernels.directed_hausdorff(clusters[b].matrix, clusters[a].matrix),
            )

    trace: list[dict] = []
    next_id = n
    step = 0
    while len(clusters) > 2:
        best = min(
            dist.items(),
            key=lambda kv: (kv[1], min(clusters[kv[0][0]].start, clusters[kv[0][1]].start),
                            max(clusters[kv[0][0]].start, clusters[kv[0][1]].start)),
        )
        (a, b), d_min = best
        merged_rows = np.sort(np.concatenate([clusters[a].rows, clusters[b].rows]))
        merged = _Cluster(
            clusters[a].segment_ids + clusters[b].segment_ids,
            merged_rows,
            min(clusters[a].start, clusters[b].start),
            feats[_subsample(merged_rows, limit)],
        )
        trace.append({"step": step, "merged": [a, b], "distance": d_min, "new_id": next_id})
        step += 1
        del clusters[a], clusters[b]
        dist = {k: v for k, v in dist.items() if a not in k and b not in k}
        for other in clusters:
            key = (other, next_id) if other < next_id else (next_id, other)
            dist[key] = max(
                kernels.directed_hausdorff(clusters[other].matrix, merged.matrix),
                kernels.directed_hausdorff(merged.matrix, clusters[other].matrix),
            )
        clusters[next_id] = merged
        next_id += 1

    final = sorted(clusters.values(), key=lambda c: c.start)
    labels = np.zeros(n, dtype=int)
    for seg_id in final[-1].segment_ids:
        labels[seg_id] = 1
    return TwoClusterAssignment(labels=labels, merge_trace=trace)
