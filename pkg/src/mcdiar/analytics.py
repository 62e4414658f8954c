"""Conversation analytics derived from diarization output: turn counts per
channel and member, speaking time and participation shares, plus the report
files (CSV/JSON/SVG) a session run leaves behind.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import FrameGrid
from .change_detection import ChangePointList, LlrTrace
from .fileio import atomic_write_text
from .primary_id import PRIMARY, UNATTRIBUTED, ChannelDiarization, SessionDiarization


@dataclass
class TurnReport:
    per_channel: dict[int, int]  # change events per channel
    per_member: dict[str, int]  # changes whose following segment is the wearer's
    session_average: float  # mean of per-channel totals


@dataclass
class ParticipationReport:
    member_seconds: dict[str, float]
    member_proportion: dict[str, float]  # share of attributed + unattributed speech
    unattributed_seconds: float
    unattributed_proportion: float
    has_speech: bool


def count_turns(
    changes: dict[int, ChangePointList],
    tracks: list[ChannelDiarization],
    members: dict[int, str],
    grid: FrameGrid,
) -> TurnReport:
    """Turns taken = speaker-change events per channel; a change is credited
    to a member when the wearer's channel is primary right after it."""
    track_by_id = {t.channel_id: t for t in tracks}
    per_channel: dict[int, int] = {}
    per_member = {members[ch]: 0 for ch in sorted(members)}
    for ch in sorted(changes):
        cpl = changes[ch]
        per_channel[ch] = len(cpl.times)
        labels = track_by_id[ch].labels
        for t in cpl.times:
            idx = grid.time_to_frame(float(t))
            following = labels[idx:]
            speech = np.flatnonzero(following != 0)
            if len(speech) and following[speech[0]] == PRIMARY:
                per_member[members[ch]] += 1
    avg = float(np.mean(list(per_channel.values()))) if per_channel else 0.0
    return TurnReport(per_channel=per_channel, per_member=per_member, session_average=avg)


def participation(sdiar: SessionDiarization, grid: FrameGrid) -> ParticipationReport:
    """Speaking time per member from the merged timeline. Proportions are
    shares of all speech (attributed plus unattributed) so that the member
    shares and the unattributed share sum to one."""
    hop = grid.hop_seconds
    labels = sdiar.labels
    member_seconds = {
        member: float((labels == ch).sum() * hop) for ch, member in sorted(sdiar.members.items())
    }
    unattributed = float((labels == UNATTRIBUTED).sum() * hop)
    total = sum(member_seconds.values()) + unattributed
    if total <= 0.0:
        zero = {m: 0.0 for m in member_seconds}
        return ParticipationReport(member_seconds, zero, 0.0, 0.0, has_speech=False)
    proportions = {m: s / total for m, s in member_seconds.items()}
    return ParticipationReport(
        member_seconds=member_seconds,
        member_proportion=proportions,
        unattributed_seconds=unattributed,
        unattributed_proportion=unattributed / total,
        has_speech=True,
    )


def turns_csv(report: TurnReport, members: dict[int, str]) -> str:
    lines = ["channel,member,change_events,attributed_turns"]
    for ch in sorted(report.per_channel):
        member = members[ch]
        lines.append(f"{ch},{member},{report.per_channel[ch]},{report.per_member[member]}")
    lines.append(f"average,,{report.session_average!r},")
    return "\n".join(lines) + "\n"


def participation_csv(report: ParticipationReport) -> str:
    lines = ["member,seconds,proportion"]
    for m in report.member_seconds:
        lines.append(f"{m},{report.member_seconds[m]!r},{report.member_proportion[m]!r}")
    lines.append(f"unattributed,{report.unattributed_seconds!r},{report.unattributed_proportion!r}")
    return "\n".join(lines) + "\n"


_PALETTE = ["#4e79a7", "#f28e2b", "#76b7b2", "#e15759", "#59a14f", "#edc948",
            "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"]


def participation_svg(report: ParticipationReport, size: int = 420) -> str:
    """Deterministic pie chart of participation shares (unattributed last)."""
    cx = cy = size / 2.0
    r = size / 2.0 - 50.0
    shares = [(m, report.member_proportion[m]) for m in report.member_seconds]
    shares.append(("unattributed", report.unattributed_proportion))
    shares = [(name, p) for name, p in shares if p > 0.0]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<title>participation</title>',
    ]
    if not shares:
        parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{r:.1f}" fill="#dddddd"/>')
    cum = 0.0
    for i, (name, p) in enumerate(shares):
        color = _PALETTE[i % len(_PALETTE)]
        angle = 360.0 * p
        if p >= 1.0 - 1e-12:
            parts.append(
                f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{r:.1f}" fill="{color}" '
                f'data-label="{name}" data-angle="360.0000"/>'
            )
            cum += p
            continue
        a0 = 2.0 * math.pi * cum - 0.5 * math.pi
        a1 = 2.0 * math.pi * (cum + p) - 0.5 * math.pi
        x0, y0 = cx + r * math.cos(a0), cy + r * math.sin(a0)
        x1, y1 = cx + r * math.cos(a1), cy + r * math.sin(a1)
        large = 1 if angle > 180.0 else 0
        parts.append(
            f'<path d="M {cx:.4f} {cy:.4f} L {x0:.4f} {y0:.4f} '
            f'A {r:.4f} {r:.4f} 0 {large} 1 {x1:.4f} {y1:.4f} Z" '
            f'fill="{color}" data-label="{name}" data-angle="{angle:.4f}"/>'
        )
        cum += p
    # legend
    y = 16
    for i, (name, p) in enumerate(shares):
        color = _PALETTE[i % len(_PALETTE)]
        parts.append(
            f'<rect x="8" y="{y - 10}" width="10" height="10" fill="{color}"/>'
            f'<text x="22" y="{y}" font-size="11" font-family="sans-serif">'
            f"{name} {100.0 * p:.1f}%</text>"
        )
        y += 16
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(
    outdir: str | Path,
    session_report: dict,
    turn_report: TurnReport,
    part_report: ParticipationReport,
    members: dict[int, str],
    llr_traces: dict[int, LlrTrace] | None = None,
    formats: tuple[str, ...] = ("json", "csv", "svg"),
) -> list[Path]:
    """Write the report bundle; returns the created paths. Identical inputs
    produce byte-identical files."""
    outdir = Path(outdir)
    written = []
    if "json" in formats:
        path = outdir / "session.json"
        atomic_write_text(path, json.dumps(session_report, indent=2, sort_keys=True) + "\n")
        written.append(path)
    if "csv" in formats:
        path = outdir / "turns.csv"
        atomic_write_text(path, turns_csv(turn_report, members))
        written.append(path)
        path = outdir / "participation.csv"
        atomic_write_text(path, participation_csv(part_report))
        written.append(path)
    if "svg" in formats:
        path = outdir / "participation.svg"
        atomic_write_text(path, participation_svg(part_report))
        written.append(path)
    for ch, trace in sorted((llr_traces or {}).items()):
        path = outdir / f"llr_{ch}.csv"
        atomic_write_text(path, trace.to_csv())
        written.append(path)
    return written
