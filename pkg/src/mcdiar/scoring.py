"""Diarization error rate and turn-count error.

Scoring is frame-based: the hypothesis and reference label grids share the
10 ms hop, and every count in the error rate is a count of frames. The rate
is (false alarms + misses + speaker confusions) / reference speech frames,
so it can exceed 1 only through false alarms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScoringError
from .primary_id import NONSPEECH


@dataclass(frozen=True)
class DerBreakdown:
    l_fa: int  # reference non-speech scored as speech
    l_miss: int  # reference speech scored as non-speech
    l_err: int  # speech on both sides, wrong speaker
    l_total: int  # reference speech frames

    @property
    def der(self) -> float:
        return (self.l_fa + self.l_miss + self.l_err) / self.l_total


def der(hyp: np.ndarray, ref: np.ndarray) -> DerBreakdown:
    """Frame-level error breakdown of a hypothesis grid against a reference
    grid (labels: 0 = non-speech, anything else = a speaker class)."""
    hyp = np.asarray(hyp)
    ref = np.asarray(ref)
    if hyp.shape != ref.shape:
        raise ScoringError(f"grid lengths differ: {hyp.shape} vs {ref.shape}")
    ref_speech = ref != NONSPEECH
    hyp_speech = hyp != NONSPEECH
    l_total = int(ref_speech.sum())
    if l_total == 0:
        raise ScoringError("reference contains no speech; error rate undefined")
    l_fa = int((~ref_speech & hyp_speech).sum())
    l_miss = int((ref_speech & ~hyp_speech).sum())
    l_err = int((ref_speech & hyp_speech & (hyp != ref)).sum())
    return DerBreakdown(l_fa=l_fa, l_miss=l_miss, l_err=l_err, l_total=l_total)


def average_der(breakdowns: list[DerBreakdown]) -> float:
    """Unweighted mean of per-channel rates, as a percentage."""
    if not breakdowns:
        raise ScoringError("no channels to average")
    return 100.0 * float(np.mean([b.der for b in breakdowns]))


def turn_error(estimated: int, truth: int) -> float:
    """Absolute relative turn-count error, as a percentage."""
    if truth <= 0:
        raise ScoringError("turn error undefined for zero true turns")
    return 100.0 * abs(estimated - truth) / truth
