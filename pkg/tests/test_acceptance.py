"""Acceptance gate: one test per shipping requirement, each against an
independent oracle and a wall-clock budget.

Every test in this module answers a single question end to end — "does the
published score reproduce", "does the codec survive arbitrary bytes" — so
``pytest -v tests/test_acceptance.py`` reads as the release checklist. The
expected values come from sources outside the code under test: an exact-
arithmetic script that shares no code with the engine, central finite
differences, closed-form counting identities, or brute-force enumeration.
"""

import re
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from wbcd.config import load_config
from wbcd.geometry import (
    Pose,
    quat_conjugate,
    quat_multiply,
    quat_normalize,
    rotvec_from_quat,
)
from wbcd.kinematics import forward_kinematics, jacobian, solve_ik
from wbcd.pipeline import (
    Episode,
    EpisodeMeta,
    TrimConfig,
    detect_motion_onset,
    make_chunks,
    read_episode,
    trim_episode,
    write_episode,
)
from wbcd.pipeline.episode import OPERATOR_MODES
from wbcd.protocol import (
    MAGIC,
    CommandRetarget,
    FrameMsg,
    JointStateMsg,
    SessionControl,
    SessionEvent,
    WireError,
    decode,
    encode,
)
from wbcd.protocol.session import TopicBuffer
from wbcd.scoring import mean_round_durations, total_score
from wbcd.scoring.table1 import official_rounds
from wbcd.types import CAMERA_NAMES, FramePacket

REPO_ROOT = Path(__file__).resolve().parent.parent
ORACLE_SCRIPT = REPO_ROOT / "scripts" / "table1_oracle.py"


class Budget:
    """Assert a block finished inside its wall-clock allowance."""

    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self.t0
        if exc_type is None:
            assert self.elapsed < self.seconds, (
                f"finished correct but too slow: {self.elapsed:.2f}s >= {self.seconds}s budget"
            )
        return False


def run_oracle() -> dict:
    """Run the exact-arithmetic competition-record script and parse its report.

    The script lives in scripts/, imports nothing from this package, and keeps
    its own copy of the published per-subtask times and points, so agreement
    is evidence rather than tautology.
    """
    proc = subprocess.run(
        [sys.executable, str(ORACLE_SCRIPT)],
        capture_output=True,
        text=True,
        check=True,
    )
    out = proc.stdout

    def grab(label: str) -> float:
        m = re.search(rf"^{re.escape(label)}:\s*([-0-9.]+)", out, re.MULTILINE)
        assert m, f"oracle output missing {label!r}:\n{out}"
        return float(m.group(1))

    return {
        "total_score": grab("total score"),
        "mean_all": grab("mean round duration (all 9 rounds)"),
        "mean_complete": grab("mean round duration (8 fully timed rounds)"),
    }


# ---------------------------------------------------------------------------
# 1. published total score
# ---------------------------------------------------------------------------


def test_competition_record_total_score_matches_exact_arithmetic():
    with Budget(1.0):
        oracle = run_oracle()
        engine = total_score(official_rounds())
    rel = abs(engine - oracle["total_score"]) / abs(oracle["total_score"])
    assert rel <= 1e-9, f"engine {engine!r} vs oracle {oracle['total_score']!r} (rel {rel:.3e})"
    print(f"\n  total score engine={engine:.12f} oracle={oracle['total_score']:.12f} rel={rel:.1e}")


# ---------------------------------------------------------------------------
# 2. published mean round durations
# ---------------------------------------------------------------------------


def test_competition_record_mean_round_durations_are_exact():
    mean_all, mean_complete = mean_round_durations(official_rounds())
    assert mean_all == 192.0
    assert mean_complete == 204.25
    oracle = run_oracle()
    assert mean_all == oracle["mean_all"]
    assert mean_complete == oracle["mean_complete"]
    print(f"\n  mean durations: all-9 {mean_all}s, 8-complete {mean_complete}s")


# ---------------------------------------------------------------------------
# 3. kinematics: analytic Jacobian and IK convergence
# ---------------------------------------------------------------------------


def finite_difference_jacobian(arm, q: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of the FK pose; the orientation rows come from the
    relative quaternion between the two perturbed poses."""
    J = np.zeros((6, 7))
    for i in range(7):
        qp, qm = q.copy(), q.copy()
        qp[i] += h
        qm[i] -= h
        pp = forward_kinematics(arm, qp)
        pm = forward_kinematics(arm, qm)
        J[:3, i] = (pp.position - pm.position) / (2 * h)
        rel = quat_multiply(pp.orientation, quat_conjugate(pm.orientation))
        if rel[0] < 0:  # matrix->quat sign is arbitrary; keep the short arc
            rel = -rel
        J[3:, i] = rotvec_from_quat(rel) / (2 * h)
    return J


def test_jacobian_matches_finite_differences_and_ik_closes_on_targets(cfg):
    rng = np.random.default_rng(303)
    arms = (cfg.left_arm, cfg.right_arm)
    with Budget(30.0):
        worst = 0.0
        for trial in range(100):
            arm = arms[trial % 2]
            lo, hi = arm.limits[:, 0], arm.limits[:, 1]
            margin = 1e-3 * (hi - lo)
            q = rng.uniform(lo + margin, hi - margin)
            J = jacobian(arm, q)
            J_fd = finite_difference_jacobian(arm, q)
            err = np.max(np.abs(J - J_fd)) / max(1.0, np.max(np.abs(J)))
            worst = max(worst, err)
        assert worst < 1e-5, f"worst Jacobian rel error {worst:.3e}"

        converged = 0
        for trial in range(1000):
            arm = arms[trial % 2]
            base = cfg.ready.left if trial % 2 == 0 else cfg.ready.right
            goal_q = arm.clamp(base + rng.uniform(-0.15, 0.15, size=7))
            target = forward_kinematics(arm, goal_q)
            q_sol, ok, iters = solve_ik(arm, base, target)
            assert iters <= 50
            if ok:
                reached = forward_kinematics(arm, q_sol).position
                assert np.linalg.norm(reached - target.position) < 1e-4
                converged += 1
        assert converged >= 990, f"only {converged}/1000 IK solves converged"
    print(f"\n  jacobian worst rel err {worst:.2e}; IK converged {converged}/1000")


# ---------------------------------------------------------------------------
# 4. static-prefix trimming on generated episodes
# ---------------------------------------------------------------------------


def _episode_from_arrays(rng, ee_left_pos: np.ndarray, ee_right_pos: np.ndarray) -> Episode:
    t = ee_left_pos.shape[0]
    quats = quat_normalize(rng.normal(size=4))
    stub = b"\xff\xd8" + bytes(rng.integers(0, 256, size=6, dtype=np.uint8)) + b"\xff\xd9"
    frames = {
        cam: [
            FramePacket(camera_id=i, seq=k, capture_time_ns=k, codec=0, width=4, height=4, payload=stub)
            for k in range(t)
        ]
        for i, cam in enumerate(CAMERA_NAMES)
    }
    return Episode(
        meta=EpisodeMeta(task="generated", operator_mode="remote", dt_s=0.02, config_hash="0" * 64),
        joints=rng.normal(size=(t, 18)),
        actions=rng.normal(size=(t, 16)),
        ee_left_pos=ee_left_pos,
        ee_left_quat=np.tile(quats, (t, 1)),
        ee_right_pos=ee_right_pos,
        ee_right_quat=np.tile(quats, (t, 1)),
        timestamps_ns=np.cumsum(rng.integers(1, 10**7, size=t)).astype(np.int64),
        frames=frames,
    )


def _episode_with_onset(rng, n_steps: int, onset: int) -> Episode:
    """Left EE holds (with sub-threshold jitter) through frame onset-1, then
    every step moves by at least 2.5 mm; right EE jitters throughout."""
    jitter = lambda: rng.uniform(-2e-4, 2e-4, size=3)  # step norm <= 0.35 mm
    left = [rng.normal(size=3)]
    for t in range(1, n_steps):
        if t < onset:
            left.append(left[-1] + jitter())
        else:
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            left.append(left[-1] + direction * rng.uniform(2.5e-3, 0.05))
    right = [rng.normal(size=3)]
    for _ in range(1, n_steps):
        right.append(right[-1] + jitter())
    return _episode_from_arrays(rng, np.array(left), np.array(right))


def test_motion_onset_detected_exactly_on_generated_episodes():
    rng = np.random.default_rng(404)
    with Budget(60.0):
        episodes = []
        for _ in range(1000):
            n_steps = int(rng.integers(6, 31))
            onset = int(rng.integers(1, n_steps))
            episodes.append((onset, _episode_with_onset(rng, n_steps, onset)))

        hits = sum(detect_motion_onset(ep) == onset for onset, ep in episodes)
        assert hits == 1000, f"onset exact on {hits}/1000 episodes"

        for onset, ep in episodes[::20]:  # idempotence spot-checks
            once, r1 = trim_episode(ep)
            twice, r2 = trim_episode(once)
            assert r1.onset == onset
            assert r2.dropped_steps == 0
            assert twice.equals(once)
    print(f"\n  onset exact on {hits}/1000 generated episodes; trim idempotent")


# ---------------------------------------------------------------------------
# 5. archive round trip
# ---------------------------------------------------------------------------


def _fuzzed_episode(rng) -> Episode:
    t = int(rng.integers(1, 13))

    def fuzzed_payload() -> tuple:
        codec = int(rng.integers(0, 2))
        body = bytes(rng.integers(0, 256, size=int(rng.integers(0, 64)), dtype=np.uint8))
        if codec == 0:
            body = b"\xff\xd8" + body + b"\xff\xd9"
        return codec, body

    frames = {}
    for i, cam in enumerate(CAMERA_NAMES):
        packets = []
        for k in range(t):
            codec, body = fuzzed_payload()
            packets.append(
                FramePacket(
                    camera_id=i,
                    seq=int(rng.integers(0, 2**31)),
                    capture_time_ns=int(rng.integers(0, 2**62)),
                    codec=codec,
                    width=int(rng.integers(1, 4096)),
                    height=int(rng.integers(1, 4096)),
                    payload=body,
                )
            )
        frames[cam] = packets

    quat = lambda n: np.array([quat_normalize(rng.normal(size=4)) for _ in range(n)])
    t0 = int(rng.integers(0, 2**40))
    return Episode(
        meta=EpisodeMeta(
            task=f"fuzz-{rng.integers(0, 10**9):09d}-žő",
            operator_mode=str(rng.choice(OPERATOR_MODES)),
            dt_s=float(rng.uniform(1e-3, 0.5)),
            config_hash=bytes(rng.integers(0, 256, size=32, dtype=np.uint8)).hex(),
        ),
        joints=rng.normal(scale=10.0, size=(t, 18)),
        actions=rng.normal(scale=10.0, size=(t, 16)),
        ee_left_pos=rng.normal(size=(t, 3)),
        ee_left_quat=quat(t),
        ee_right_pos=rng.normal(size=(t, 3)),
        ee_right_quat=quat(t),
        timestamps_ns=(t0 + np.cumsum(rng.integers(1, 10**9, size=t))).astype(np.int64),
        frames=frames,
    )


def test_archive_round_trip_is_bit_exact_on_fuzzed_episodes(tmp_path):
    rng = np.random.default_rng(505)
    with Budget(60.0):
        for case in range(200):
            ep = _fuzzed_episode(rng)
            p1 = tmp_path / f"fuzz-{case}.wbep"
            p2 = tmp_path / f"fuzz-{case}.rewrite.wbep"
            write_episode(ep, p1)
            back = read_episode(p1)
            assert back.equals(ep), f"case {case}: read-back differs"
            write_episode(back, p2)
            assert p1.read_bytes() == p2.read_bytes(), f"case {case}: rewrite not byte-identical"
    print("\n  200/200 fuzzed episodes round-tripped bit-exact (frames included)")


# ---------------------------------------------------------------------------
# 6. action chunking, exhaustively
# ---------------------------------------------------------------------------


def test_chunking_counts_and_padding_masks_exhaustively():
    rng = np.random.default_rng(606)
    with Budget(5.0):
        for t_steps in range(1, 41):
            ep = _episode_from_arrays(rng, rng.normal(size=(t_steps, 3)), rng.normal(size=(t_steps, 3)))
            for k in (1, 5, 30):
                chunks = make_chunks(ep, k)
                assert len(chunks) == t_steps
                for t, sample in enumerate(chunks):
                    assert sample.action_chunk.shape == (k, 16)
                    assert int(sample.pad_mask.sum()) == min(k, t_steps - t)
                    for i in range(k):
                        src = min(t + i, t_steps - 1)
                        assert np.array_equal(sample.action_chunk[i], ep.actions[src])
                total = sum(int(s.pad_mask.sum()) for s in chunks)
                assert total == sum(min(k, t_steps - t) for t in range(t_steps))
    print("\n  chunk counts and mask totals exact for all (T, K) in [1..40] x {1, 5, 30}")


# ---------------------------------------------------------------------------
# 7. wire protocol: totality, bijection, drop accounting
# ---------------------------------------------------------------------------


def _fuzzed_message(rng):
    kind = int(rng.integers(0, 5))
    if kind == 0:
        f = lambda n: tuple(float(x) for x in rng.normal(size=n))
        return CommandRetarget(
            left_position=f(3),
            left_quat=f(4),
            right_position=f(3),
            right_quat=f(4),
            clutch_engaged=bool(rng.integers(0, 2)),
            left_gripper_closed=bool(rng.integers(0, 2)),
            right_gripper_closed=bool(rng.integers(0, 2)),
        )
    if kind == 1:
        return JointStateMsg(values=tuple(float(x) for x in rng.normal(size=18)))
    if kind == 2:
        codec = int(rng.integers(0, 3))
        body = bytes(rng.integers(0, 256, size=int(rng.integers(0, 128)), dtype=np.uint8))
        if codec == 0:
            body = b"\xff\xd8" + body + b"\xff\xd9"
        return FrameMsg(
            camera_id=int(rng.integers(0, 256)),
            frame_seq=int(rng.integers(0, 2**32)),
            capture_time_ns=int(rng.integers(0, 2**63)),
            codec=codec,
            width=int(rng.integers(1, 2**16)),
            height=int(rng.integers(1, 2**16)),
            payload=body,
        )
    if kind == 3:
        topic = "".join(rng.choice(list("abc/_0ž"), size=int(rng.integers(0, 12))))
        return SessionControl(op=int(rng.integers(1, 4)), topic=topic)
    return SessionEvent(
        kind=int(rng.integers(1, 6)),
        subtask_id=int(rng.integers(0, 4)),
        event_time_ns=int(rng.integers(0, 2**63)),
        alpha=float(rng.uniform(0.0, 8.0)),
        label="".join(rng.choice(list("lock side ž"), size=int(rng.integers(0, 16)))),
    )


def test_codec_survives_random_bytes_round_trips_and_counts_drops():
    rng = np.random.default_rng(707)
    with Budget(60.0):
        # Totality: a million arbitrary byte strings either decode or raise
        # WireError; nothing else may escape. A tenth lead with the real magic
        # so the fuzz reaches the header and payload validators.
        blob = rng.integers(0, 256, size=2_000_000, dtype=np.uint8).tobytes()
        starts = rng.integers(0, len(blob) - 64, size=1_000_000)
        lengths = rng.integers(0, 64, size=1_000_000)
        decoded_ok = 0
        for i in range(1_000_000):
            chunk = blob[starts[i] : starts[i] + lengths[i]]
            if i % 10 == 0:
                chunk = MAGIC + chunk
            try:
                decode(chunk)
                decoded_ok += 1
            except WireError:
                pass
        # Random bytes essentially never form a valid frame (version, type,
        # length and payload checks all have to pass).
        assert decoded_ok == 0

        # Bijection: fuzzed messages survive encode -> decode -> encode with
        # every header field intact and byte-identical wire frames.
        for _ in range(10_000):
            msg = _fuzzed_message(rng)
            seq = int(rng.integers(0, 2**32))
            t_ns = int(rng.integers(0, 2**64, dtype=np.uint64))
            flags = int(rng.integers(0, 2**16))
            frame = encode(msg, seq=seq, send_time_ns=t_ns, flags=flags)
            out, header, consumed = decode(frame)
            assert out == msg
            assert consumed == len(frame)
            assert (header.seq, header.send_time_ns, header.flags) == (seq, t_ns, flags)
            assert encode(out, seq=seq, send_time_ns=t_ns, flags=flags) == frame

        # Drop accounting against a counting identity: every sequence number
        # inside the delivered span that never reached the reader is a drop,
        # plus one drop per ring-buffer eviction; regressions are rejections.
        probe = SessionEvent(kind=1)
        for case in range(300):
            video = case % 2 == 0
            capacity = int(rng.integers(1, 9))
            buf = TopicBuffer("video/head" if video else "events", capacity)
            seq, seqs = int(rng.integers(0, 8)), []
            for _ in range(int(rng.integers(1, 40))):
                seqs.append(seq)
                seq = max(0, seq + int(rng.choice([-4, -1, 0, 1, 1, 1, 2, 7])))
            for s in seqs:
                buf.push(probe, s, None)
            accepted = []
            for s in seqs:
                if not accepted or s > accepted[-1]:
                    accepted.append(s)
            gap_drops = (accepted[-1] - accepted[0] + 1) - len(accepted)
            evictions = max(0, len(accepted) - capacity) if video else 0
            assert buf.out_of_order == len(seqs) - len(accepted)
            assert buf.dropped == gap_drops + evictions
            assert buf.received == len(accepted)
            assert len(buf.drain()) == (min(capacity, len(accepted)) if video else len(accepted))
    print("\n  codec total on 1e6 random buffers; 1e4 round trips bit-exact; drops exact in 300 scenarios")


# ---------------------------------------------------------------------------
# 8. end-to-end determinism
# ---------------------------------------------------------------------------


def test_recorded_sessions_reproduce_byte_for_byte(tmp_path):
    with Budget(30.0):
        archives = []
        for run in range(2):
            path = tmp_path / f"run{run}.wbep"
            subprocess.run(
                [
                    sys.executable,
                    "-m",
                    "wbcd",
                    "serve",
                    "--script",
                    "square",
                    "--seed",
                    "0",
                    "--record",
                    str(path),
                ],
                capture_output=True,
                text=True,
                check=True,
            )
            archives.append(path.read_bytes())
    assert archives[0] == archives[1], "two seeded recordings differ"
    assert len(archives[0]) > 0
    print(f"\n  two seeded recordings identical ({len(archives[0])} bytes)")
