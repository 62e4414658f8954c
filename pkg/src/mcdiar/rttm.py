"""RTTM segment files: the exchange format for hypotheses and references.

Dialect: `SPEAKER <session> 1 <tbeg> <tdur> <NA> <NA> <speaker> <NA> <NA>`,
one line per maximal same-speaker run, times in seconds with 3 decimals.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import FrameGrid
from .errors import RttmError
from .primary_id import LABEL_NAMES, NONSPEECH, SessionDiarization


def labels_to_intervals(labels: np.ndarray, grid: FrameGrid) -> list[tuple[float, float, int]]:
    """Maximal runs of identical labels as (start_sec, dur_sec, label)."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        return []
    hop = grid.hop_seconds
    change = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [len(labels)]])
    return [
        (float(s * hop), float((e - s) * hop), int(labels[s]))
        for s, e in zip(starts, ends)
    ]


def format_rttm(session_id: str, intervals: list[tuple[float, float, str]]) -> str:
    lines = [
        f"SPEAKER {session_id} 1 {tbeg:.3f} {tdur:.3f} <NA> <NA> {speaker} <NA> <NA>"
        for tbeg, tdur, speaker in intervals
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def channel_rttm(session_id: str, labels: np.ndarray, grid: FrameGrid) -> str:
    """Per-channel RTTM with primary/secondary speaker names."""
    intervals = [
        (tbeg, tdur, LABEL_NAMES[lab])
        for tbeg, tdur, lab in labels_to_intervals(labels, grid)
        if lab != NONSPEECH
    ]
    return format_rttm(session_id, intervals)


def session_rttm(session_id: str, sdiar: SessionDiarization, grid: FrameGrid) -> str:
    """Session-level RTTM; only member-attributed speech is written."""
    intervals = [
        (tbeg, tdur, sdiar.members[lab])
        for tbeg, tdur, lab in labels_to_intervals(sdiar.labels, grid)
        if lab in sdiar.members
    ]
    return format_rttm(session_id, intervals)


def read_rttm(path: str | Path) -> list[tuple[float, float, str]]:
    """Parse an RTTM file into (tbeg, tdur, speaker) tuples."""
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        parts = line.split()
        if len(parts) < 8 or parts[0] != "SPEAKER":
            raise RttmError(f"{path}:{lineno}: malformed RTTM line: {line!r}")
        try:
            tbeg, tdur = float(parts[3]), float(parts[4])
        except ValueError as exc:
            raise RttmError(f"{path}:{lineno}: bad times in RTTM line") from exc
        if tdur < 0:
            raise RttmError(f"{path}:{lineno}: negative duration")
        entries.append((tbeg, tdur, parts[7]))
    return entries


def rasterize(
    entries: list[tuple[float, float, str]],
    grid: FrameGrid,
    name_to_label: dict[str, int],
    fill: int = NONSPEECH,
) -> np.ndarray:
    """Paint RTTM entries onto the frame grid: a frame takes an entry's label
    when its midpoint lies inside [tbeg, tbeg+tdur)."""
    out = np.full(grid.num_frames, fill, dtype=np.int32)
    mids = grid.midpoint_times()
    for tbeg, tdur, speaker in entries:
        if speaker not in name_to_label:
            raise RttmError(f"unknown speaker name in RTTM: {speaker!r}")
        out[(mids >= tbeg) & (mids < tbeg + tdur)] = name_to_label[speaker]
    return out
