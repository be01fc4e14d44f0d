#!/usr/bin/env python3
"""Regenerate tests/fixtures/wire_vectors.json from the server's codec.

The console must speak the server's wire format bit for bit, so the fixture
file pins frames produced by the Python encoder; the TypeScript tests decode
each one and re-encode it back to the same bytes. Re-run after any wire
format change (requires the wbcd package on PYTHONPATH):

    python3 scripts/make_wire_fixtures.py
"""

import json
import math
from pathlib import Path

from wbcd.protocol import (
    CommandRetarget,
    ControlOp,
    EventKind,
    FrameMsg,
    JointStateMsg,
    SessionControl,
    SessionEvent,
    encode,
)

CASES = [
    (
        "command_neutral",
        CommandRetarget(
            left_position=(0.0, 0.0, 0.0),
            left_quat=(1.0, 0.0, 0.0, 0.0),
            right_position=(0.0, 0.0, 0.0),
            right_quat=(1.0, 0.0, 0.0, 0.0),
            clutch_engaged=False,
            left_gripper_closed=False,
            right_gripper_closed=False,
        ),
        dict(seq=0, send_time_ns=0, flags=0),
    ),
    (
        "command_engaged_awkward_floats",
        CommandRetarget(
            left_position=(0.1, -2.5e-3, math.pi),
            left_quat=(0.7071067811865476, 0.0, 0.7071067811865476, 0.0),
            right_position=(-1e-9, 1e9, 0.3333333333333333),
            right_quat=(0.5, -0.5, 0.5, -0.5),
            clutch_engaged=True,
            left_gripper_closed=True,
            right_gripper_closed=False,
        ),
        dict(seq=4242, send_time_ns=1_755_000_000_123_456_789, flags=0),
    ),
    (
        "joint_state_ready",
        JointStateMsg(values=tuple(float(i) * 0.125 - 1.0 for i in range(18))),
        dict(seq=77, send_time_ns=123_456, flags=0),
    ),
    (
        "frame_tiny_jfif",
        FrameMsg(
            camera_id=1,
            frame_seq=900,
            capture_time_ns=2**53 + 1,  # exceeds double precision on purpose
            codec=0,
            width=128,
            height=96,
            payload=b"\xff\xd8\x00\x01\x02stub\xff\xd9",
        ),
        dict(seq=900, send_time_ns=2**63 + 5, flags=0),
    ),
    (
        "control_subscribe_video",
        SessionControl(op=int(ControlOp.SUBSCRIBE), topic="video/wrist_left"),
        dict(seq=1, send_time_ns=10, flags=0),
    ),
    (
        "control_heartbeat_echo",
        SessionControl(op=int(ControlOp.HEARTBEAT), topic=""),
        dict(seq=3, send_time_ns=999, flags=1),
    ),
    (
        "event_subtask_start_alpha_half",
        SessionEvent(kind=int(EventKind.SUBTASK_START), subtask_id=2, event_time_ns=5_000_000_000, alpha=0.5),
        dict(seq=12, send_time_ns=5_000_000_100, flags=0),
    ),
    (
        "event_component_unicode_label",
        SessionEvent(kind=int(EventKind.COMPONENT_ACHIEVED), subtask_id=3, event_time_ns=7, alpha=0.0, label="place pizza 🍕"),
        dict(seq=13, send_time_ns=8, flags=0),
    ),
]


def main() -> None:
    out = []
    for name, msg, opts in CASES:
        frame = encode(msg, **opts)
        out.append(
            {
                "name": name,
                "hex": frame.hex(),
                "seq": opts["seq"],
                "send_time_ns": str(opts["send_time_ns"]),  # u64-safe as string
                "flags": opts["flags"],
            }
        )
    path = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "wire_vectors.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {len(out)} vectors to {path}")


if __name__ == "__main__":
    main()
