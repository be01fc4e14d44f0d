"""Demonstration data pipeline: record, archive, trim, stats, chunks, manifest."""

from .archive import ArchiveError, read_episode, record, write_episode
from .chunks import DEFAULT_CHUNK, ChunkSample, make_chunks
from .episode import ACTION_DIM, BadEpisode, Episode, EpisodeMeta, episode_from_steps
from .manifest import (
    EXPECTED_EPISODE_COUNT,
    TRAINING_DEFAULTS,
    ChecksumMismatch,
    export_manifest,
    find_archives,
    validate_manifest,
)
from .plots import emit_trim_plot
from .stats import STD_FLOOR, EmptyDataset, NormStats, compute_norm_stats
from .trim import TooShort, TrimConfig, TrimResult, detect_motion_onset, trim_episode

__all__ = [
    "Episode",
    "EpisodeMeta",
    "BadEpisode",
    "episode_from_steps",
    "ACTION_DIM",
    "record",
    "write_episode",
    "read_episode",
    "ArchiveError",
    "TrimConfig",
    "TrimResult",
    "TooShort",
    "detect_motion_onset",
    "trim_episode",
    "emit_trim_plot",
    "NormStats",
    "EmptyDataset",
    "STD_FLOOR",
    "compute_norm_stats",
    "ChunkSample",
    "DEFAULT_CHUNK",
    "make_chunks",
    "ChecksumMismatch",
    "TRAINING_DEFAULTS",
    "EXPECTED_EPISODE_COUNT",
    "export_manifest",
    "validate_manifest",
    "find_archives",
]
