"""Exception types shared across the toolkit.

The CLI maps these onto distinct exit codes, so keep the hierarchy flat and
the categories coarse: manifest problems, audio problems, config problems.
"""


class McdiarError(Exception):
    """Base class for all toolkit errors."""


class ManifestError(McdiarError):
    """Session manifest is missing, malformed, or violates its invariants."""


class AudioError(McdiarError):
    """Audio file is unreadable, unsupported, or empty."""


class ConfigError(McdiarError):
    """Pipeline configuration is invalid."""


class RttmError(McdiarError):
    """RTTM or SAD label file could not be parsed."""


class ScoringError(McdiarError):
    """Scoring is undefined for the given inputs (e.g. empty reference)."""
