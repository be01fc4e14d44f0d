"""Self-contained episode archive files (``.wbep``).

One file per episode: a fixed 16-byte preamble, a JSON index header, then a
binary blob holding each numeric series as raw little-endian values plus all
JFIF frame payloads back to back. The JSON header carries byte offsets into
the blob, so readers can slice any series without scanning. The layout is
documented byte-for-byte in docs/episode-format.md.

Writes go through a temp file in the destination directory followed by an
atomic rename, so a crash or full disk never leaves a truncated archive at
the target path.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..types import CAMERA_NAMES, FramePacket, ObservationBundle
from .episode import BadEpisode, Episode, EpisodeMeta, episode_from_steps

MAGIC = b"WBEP"
FORMAT_VERSION = 1
PREAMBLE_SIZE = 16  # magic + version + 3 reserved + u64 header length
SCHEMA = "wbcd-episode/1"

_SERIES_SPEC = (
    # attribute, dtype, width (columns; 0 = 1-D)
    ("joints", "<f8", 18),
    ("actions", "<f8", 16),
    ("ee_left_pos", "<f8", 3),
    ("ee_left_quat", "<f8", 4),
    ("ee_right_pos", "<f8", 3),
    ("ee_right_quat", "<f8", 4),
    ("timestamps_ns", "<i8", 0),
)


class ArchiveError(ValueError):
    """Archive file is unreadable or structurally invalid."""


def write_episode(episode: Episode, path) -> Path:
    """Serialize an episode to ``path`` atomically; returns the final path."""
    episode.validate()
    out = Path(path)

    blob_parts: List[bytes] = []
    offset = 0
    series_index: Dict[str, dict] = {}
    for name, dtype, _ in _SERIES_SPEC:
        arr = np.ascontiguousarray(getattr(episode, name))
        raw = arr.astype(dtype, copy=False).tobytes()
        series_index[name] = {"offset": offset, "length": len(raw), "dtype": dtype, "shape": list(arr.shape)}
        blob_parts.append(raw)
        offset += len(raw)

    frame_index: Dict[str, list] = {}
    for camera in CAMERA_NAMES:
        entries = []
        for frame in episode.frames[camera]:
            entries.append(
                {
                    "offset": offset,
                    "length": len(frame.payload),
                    "seq": frame.seq,
                    "capture_time_ns": frame.capture_time_ns,
                    "codec": frame.codec,
                    "width": frame.width,
                    "height": frame.height,
                }
            )
            blob_parts.append(frame.payload)
            offset += len(frame.payload)
        frame_index[camera] = entries

    header = {
        "schema": SCHEMA,
        "steps": episode.steps,
        "meta": {
            "task": episode.meta.task,
            "operator_mode": episode.meta.operator_mode,
            "dt_s": episode.meta.dt_s,
            "config_hash": episode.meta.config_hash,
            "frame_counts": episode.meta.frame_counts,
        },
        "series": series_index,
        "frames": frame_index,
    }
    header_raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    preamble = MAGIC + bytes([FORMAT_VERSION, 0, 0, 0]) + len(header_raw).to_bytes(8, "little")

    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=out.name + ".", suffix=".tmp", dir=out.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(preamble)
            fh.write(header_raw)
            for part in blob_parts:
                fh.write(part)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, out)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    return out


def read_episode(path) -> Episode:
    """Load an archive written by :func:`write_episode`."""
    p = Path(path)
    raw = p.read_bytes()
    if len(raw) < PREAMBLE_SIZE:
        raise ArchiveError(f"{p}: too short to be an episode archive")
    if raw[:4] != MAGIC:
        raise ArchiveError(f"{p}: bad magic {raw[:4]!r}")
    if raw[4] != FORMAT_VERSION:
        raise ArchiveError(f"{p}: unsupported archive version {raw[4]}")
    header_len = int.from_bytes(raw[8:16], "little")
    if PREAMBLE_SIZE + header_len > len(raw):
        raise ArchiveError(f"{p}: truncated header")
    try:
        header = json.loads(raw[PREAMBLE_SIZE : PREAMBLE_SIZE + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ArchiveError(f"{p}: unreadable header: {e}") from e
    if header.get("schema") != SCHEMA:
        raise ArchiveError(f"{p}: unsupported schema {header.get('schema')!r}")

    blob = memoryview(raw)[PREAMBLE_SIZE + header_len :]

    def series(name: str) -> np.ndarray:
        try:
            entry = header["series"][name]
        except KeyError:
            raise ArchiveError(f"{p}: series {name!r} missing") from None
        start, length = entry["offset"], entry["length"]
        if start + length > len(blob):
            raise ArchiveError(f"{p}: series {name!r} extends past end of file")
        arr = np.frombuffer(blob[start : start + length], dtype=entry["dtype"])
        return arr.reshape(entry["shape"]).copy()

    frames: Dict[str, List[FramePacket]] = {}
    for camera in CAMERA_NAMES:
        entries = header.get("frames", {}).get(camera)
        if entries is None:
            raise ArchiveError(f"{p}: camera {camera!r} missing from frame index")
        packets = []
        for entry in entries:
            start, length = entry["offset"], entry["length"]
            if start + length > len(blob):
                raise ArchiveError(f"{p}: frame payload extends past end of file")
            packets.append(
                FramePacket(
                    camera_id=CAMERA_NAMES.index(camera),
                    seq=entry["seq"],
                    capture_time_ns=entry["capture_time_ns"],
                    codec=entry["codec"],
                    width=entry["width"],
                    height=entry["height"],
                    payload=bytes(blob[start : start + length]),
                )
            )
        frames[camera] = packets

    meta_raw = header.get("meta", {})
    try:
        meta = EpisodeMeta(
            task=meta_raw["task"],
            operator_mode=meta_raw["operator_mode"],
            dt_s=meta_raw["dt_s"],
            config_hash=meta_raw["config_hash"],
            frame_counts={k: int(v) for k, v in meta_raw.get("frame_counts", {}).items()},
        )
        return Episode(
            meta=meta,
            joints=series("joints"),
            actions=series("actions"),
            ee_left_pos=series("ee_left_pos"),
            ee_left_quat=series("ee_left_quat"),
            ee_right_pos=series("ee_right_pos"),
            ee_right_quat=series("ee_right_quat"),
            timestamps_ns=series("timestamps_ns"),
            frames=frames,
        )
    except (KeyError, BadEpisode, ValueError) as e:
        raise ArchiveError(f"{p}: invalid episode content: {e}") from e


def record(
    steps: Sequence[Tuple[ObservationBundle, np.ndarray]],
    meta: EpisodeMeta,
    path,
) -> Path:
    """Assemble an episode from recorded steps and write its archive.

    Zero steps are rejected before any file is created.
    """
    episode = episode_from_steps(steps, meta)
    return write_episode(episode, path)
