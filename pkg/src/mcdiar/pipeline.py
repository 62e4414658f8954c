"""End-to-end session processing.

Per channel: load + resample, speech activity detection, fused features,
change detection, two-cluster grouping, primary/secondary assignment.
Channels run independently (optionally in parallel); cross-channel
refinement and the session merge are synchronization barriers. Results do
not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import (
    FrameGrid,
    SessionManifest,
    Waveform,
    frame_signal,
    load_channel,
    load_manifest,
    resample_to_8k,
)
from .change_detection import ChangePointList, LlrTrace, detect_changes
from .clustering import Segment, TwoClusterAssignment, build_segments, cluster_to_two
from .config import PipelineConfig
from .errors import ManifestError
from .features import fused_feature_stream
from .primary_id import (
    ChannelDiarization,
    SessionDiarization,
    assign_primary,
    cross_channel_refine,
    formant_band_energy,
    merge_session,
)
from .sad import SadScoreTrack, SpeechMask, detect_speech, load_external_mask


@dataclass
class ChannelResult:
    channel_id: int
    member: str
    mask: SpeechMask
    sad_scores: SadScoreTrack | None
    changes: ChangePointList
    llr_trace: LlrTrace
    segments: list[Segment]
    assignment: TwoClusterAssignment
    energy: np.ndarray
    track: ChannelDiarization  # pre-refinement


@dataclass
class SessionResult:
    session_id: str
    grid: FrameGrid
    members: dict[int, str]
    channels: dict[int, ChannelResult]
    tracks: list[ChannelDiarization]  # refined, ordered by channel id
    session: SessionDiarization
    config: PipelineConfig
    manifest: SessionManifest = field(repr=False, default=None)


def _process_channel(
    channel_id: int,
    member: str,
    wave: Waveform,
    cfg: PipelineConfig,
    sad_dir: Path | None,
) -> ChannelResult:
    grid, frames = frame_signal(wave, cfg.frame_length, cfg.hop_length)
    if cfg.sad_mode == "external":
        if sad_dir is None:
            raise ManifestError("external SAD requested but no label directory given")
        mask = load_external_mask(Path(sad_dir) / f"sad_{channel_id}.lab", grid)
        scores = None
    else:
        scores, mask = detect_speech(wave, cfg)

    stream = fused_feature_stream(frames, grid, mask.frames, cfg)
    changes, trace = detect_changes(stream, channel_id, cfg)
    segments = build_segments(changes, mask.frames, grid, cfg.min_segment_frames)
    assignment = cluster_to_two(segments, stream, cfg)
    energy = formant_band_energy(frames, mask.frames, cfg)
    track = assign_primary(assignment, segments, energy, mask.frames, channel_id)
    return ChannelResult(
        channel_id=channel_id,
        member=member,
        mask=mask,
        sad_scores=scores,
        changes=changes,
        llr_trace=trace,
        segments=segments,
        assignment=assignment,
        energy=energy,
        track=track,
    )


def diarize_session(
    manifest: SessionManifest | str | Path,
    cfg: PipelineConfig = PipelineConfig(),
    channel_ids: list[int] | None = None,
    sad_dir: str | Path | None = None,
) -> SessionResult:
    """Run the full pipeline over a session manifest."""
    if not isinstance(manifest, SessionManifest):
        manifest = load_manifest(manifest)
    specs = manifest.channels
    if channel_ids is not None:
        wanted = set(channel_ids)
        unknown = wanted - {ch.channel_id for ch in specs}
        if unknown:
            raise ManifestError(f"unknown channel ids requested: {sorted(unknown)}")
        specs = [ch for ch in specs if ch.channel_id in wanted]

    waves = {ch.channel_id: resample_to_8k(load_channel(ch.audio_path)) for ch in specs}
    shortest = min(len(w.samples) for w in waves.values())
    waves = {
        cid: Waveform(samples=w.samples[:shortest], sample_rate=w.sample_rate)
        for cid, w in waves.items()
    }

    members = {ch.channel_id: ch.member_label for ch in specs}
    sad_path = Path(sad_dir) if sad_dir is not None else None

    def work(spec):
        return _process_channel(spec.channel_id, spec.member_label, waves[spec.channel_id], cfg, sad_path)

    if cfg.jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(work, specs))
    else:
        results = [work(spec) for spec in specs]
    channels = {r.channel_id: r for r in sorted(results, key=lambda r: r.channel_id)}

    ordered = [channels[cid] for cid in sorted(channels)]
    refined = cross_channel_refine([r.track for r in ordered], [r.energy for r in ordered], cfg)
    session = merge_session(refined, members)

    num_frames = (shortest - cfg.frame_length) // cfg.hop_length + 1 if shortest >= cfg.frame_length else 0
    grid = FrameGrid(frame_length=cfg.frame_length, hop=cfg.hop_length, num_frames=num_frames)
    return SessionResult(
        session_id=manifest.session_id,
        grid=grid,
        members=members,
        channels=channels,
        tracks=refined,
        session=session,
        config=cfg,
        manifest=manifest,
    )
