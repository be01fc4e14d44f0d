"""Robot-side teleoperation glue: commands in, targets out, episodes recorded.

Two entry points share all of this logic: the network ``serve`` loop (real
sockets, wall clock) and the scripted lockstep session (in-process loopback,
virtual clock). The lockstep path is fully deterministic — time is the
simulator's integer clock and every message hop happens at a defined point
in the tick — which is what makes recorded archives reproducible byte for
byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .config import RobotConfig
from .geometry import Pose, quat_normalize
from .kinematics import capture_anchors, retarget
from .pipeline import EpisodeMeta, record
from .protocol import (
    TOPIC_COMMANDS,
    TOPIC_JOINTS,
    VIDEO_TOPICS,
    CommandRetarget,
    FrameMsg,
    JointStateMsg,
    Session,
    loopback_pair,
)
from .simulator import RobotModel, SimState, initial_state, set_target, snapshot, tick
from .types import JointState, ObservationBundle


def _safe_quat(raw) -> np.ndarray:
    q = np.asarray(raw, dtype=np.float64)
    norm = np.linalg.norm(q)
    if not np.isfinite(norm) or norm < 1e-6:
        return np.array([1.0, 0.0, 0.0, 0.0])
    return q / norm


class TeleopController:
    """Applies operator commands to the simulator's target state.

    Tracks the clutch edge: anchors are captured the moment the clutch
    engages and dropped on release, so controller motion while disengaged
    never moves the robot.
    """

    def __init__(self, cfg: RobotConfig):
        self.cfg = cfg
        self.params = cfg.retarget
        self.anchors = None
        self._prev_clutch = False

    def apply(self, current: JointState, cmd: CommandRetarget) -> JointState:
        left_hand = Pose(np.asarray(cmd.left_position, dtype=np.float64), _safe_quat(cmd.left_quat))
        right_hand = Pose(np.asarray(cmd.right_position, dtype=np.float64), _safe_quat(cmd.right_quat))
        engaged = cmd.clutch_engaged
        if engaged and not self._prev_clutch:
            self.anchors = capture_anchors(current, left_hand, right_hand, self.cfg.left_arm, self.cfg.right_arm)
        if not engaged:
            self.anchors = None
        self._prev_clutch = engaged
        self.params.clutch_engaged = engaged
        return retarget(
            current,
            left_hand,
            right_hand,
            (cmd.left_gripper_closed, cmd.right_gripper_closed),
            self.params,
            self.anchors,
            self.cfg.left_arm,
            self.cfg.right_arm,
        )


class EpisodeRecorder:
    """Buffers (observation, action) steps; writes one atomic archive at the end.

    Nothing touches the filesystem until finalize, so an interrupted session
    leaves either a complete archive or no file at all.
    """

    def __init__(self, cfg: RobotConfig, task: str = "teleop", operator_mode: str = "remote"):
        self.meta = EpisodeMeta(task=task, operator_mode=operator_mode, dt_s=cfg.dt_s, config_hash=cfg.config_hash)
        self.steps: List[Tuple[ObservationBundle, np.ndarray]] = []

    def append(self, obs: ObservationBundle, action: np.ndarray) -> None:
        self.steps.append((obs, np.asarray(action, dtype=np.float64)))

    def finalize(self, path) -> Optional[Path]:
        """Write the archive; returns None (and writes nothing) if no steps."""
        if not self.steps:
            return None
        return record(self.steps, self.meta, path)


# ---------------------------------------------------------------------------
# Scripted operator
# ---------------------------------------------------------------------------

SCRIPT_SCHEMA = "wbcd-teleop-script/1"


@dataclass(frozen=True)
class ScriptSegment:
    """A stretch of ticks with constant button state and linear hand motion."""

    ticks: int
    clutch: bool = False
    left_move: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    right_move: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    left_gripper: bool = False
    right_gripper: bool = False


_HOME_LEFT = np.array([0.40, 0.25, 0.30])
_HOME_RIGHT = np.array([0.40, -0.25, 0.30])
_IDENTITY_QUAT = (1.0, 0.0, 0.0, 0.0)


def square_script(side_m: float = 0.08, ticks_per_side: int = 30) -> List[ScriptSegment]:
    """Clutch in, drive both hands around a square, grip mid-way, release.

    The first leg pulls inward (-x) so the whole square stays in the
    well-conditioned part of the workspace where the one-step tracker
    follows closely.
    """
    return [
        ScriptSegment(ticks=20, clutch=False),
        ScriptSegment(ticks=ticks_per_side, clutch=True, left_move=(-side_m, 0, 0), right_move=(-side_m, 0, 0)),
        ScriptSegment(
            ticks=ticks_per_side,
            clutch=True,
            left_move=(0, 0, side_m),
            right_move=(0, 0, side_m),
            left_gripper=True,
            right_gripper=True,
        ),
        ScriptSegment(
            ticks=ticks_per_side,
            clutch=True,
            left_move=(side_m, 0, 0),
            right_move=(side_m, 0, 0),
            left_gripper=True,
            right_gripper=True,
        ),
        ScriptSegment(ticks=ticks_per_side, clutch=True, left_move=(0, 0, -side_m), right_move=(0, 0, -side_m)),
        ScriptSegment(ticks=20, clutch=False),
    ]


def load_script(source: str) -> List[ScriptSegment]:
    """``square`` (builtin) or a path to a JSON segment list."""
    if source == "square":
        return square_script()
    path = Path(source)
    raw = json.loads(path.read_text())
    if raw.get("schema") != SCRIPT_SCHEMA:
        raise ValueError(f"unsupported script schema {raw.get('schema')!r}")
    segments = []
    for seg in raw["segments"]:
        segments.append(
            ScriptSegment(
                ticks=int(seg["ticks"]),
                clutch=bool(seg.get("clutch", False)),
                left_move=tuple(seg.get("left_move", (0, 0, 0))),
                right_move=tuple(seg.get("right_move", (0, 0, 0))),
                left_gripper=bool(seg.get("left_gripper", False)),
                right_gripper=bool(seg.get("right_gripper", False)),
            )
        )
    return segments


class ScriptedOperator:
    """Emits one CommandRetarget per tick from a segment list."""

    def __init__(self, segments: List[ScriptSegment]):
        self.segments = segments
        self.left = _HOME_LEFT.copy()
        self.right = _HOME_RIGHT.copy()
        self._plan: List[CommandRetarget] = []
        for seg in segments:
            left_step = np.asarray(seg.left_move, dtype=np.float64) / seg.ticks
            right_step = np.asarray(seg.right_move, dtype=np.float64) / seg.ticks
            for _ in range(seg.ticks):
                self.left = self.left + left_step
                self.right = self.right + right_step
                self._plan.append(
                    CommandRetarget(
                        left_position=tuple(self.left),
                        left_quat=_IDENTITY_QUAT,
                        right_position=tuple(self.right),
                        right_quat=_IDENTITY_QUAT,
                        clutch_engaged=seg.clutch,
                        left_gripper_closed=seg.left_gripper,
                        right_gripper_closed=seg.right_gripper,
                    )
                )

    @property
    def total_ticks(self) -> int:
        return len(self._plan)

    def command_at(self, tick_index: int) -> CommandRetarget:
        return self._plan[min(tick_index, len(self._plan) - 1)]


# ---------------------------------------------------------------------------
# Deterministic lockstep session
# ---------------------------------------------------------------------------


@dataclass
class LockstepResult:
    ticks: int
    final_state: SimState
    archive_path: Optional[Path]
    operator_session: Session
    robot_session: Session


def run_lockstep_session(
    cfg: RobotConfig,
    segments: List[ScriptSegment],
    *,
    record_path=None,
    task: str = "scripted",
) -> LockstepResult:
    """Run a scripted operator against the simulator over in-process loopback.

    All timestamps come from the simulator's integer clock; two runs of the
    same script produce bit-identical trajectories, frames and archives.
    """
    model = RobotModel(cfg)
    state = initial_state(cfg)
    clock = lambda: state.sim_time_ns  # noqa: E731 - the session clock is sim time
    operator, robot = loopback_pair(frame_buffer=cfg.frame_buffer, clock_ns=clock)
    robot.subscribe(TOPIC_COMMANDS)
    operator.subscribe(TOPIC_JOINTS)
    for topic in VIDEO_TOPICS:
        operator.subscribe(topic)

    controller = TeleopController(cfg)
    recorder = EpisodeRecorder(cfg, task=task) if record_path is not None else None
    driver = ScriptedOperator(segments)

    for i in range(driver.total_ticks):
        operator.publish(TOPIC_COMMANDS, driver.command_at(i))
        for cmd in robot.poll(TOPIC_COMMANDS):
            set_target(model, state, controller.apply(state.joints, cmd))
        tick(model, state)
        obs = snapshot(model, state)
        if recorder is not None:
            recorder.append(obs, state.target.as_action())
        robot.publish(TOPIC_JOINTS, JointStateMsg(values=tuple(state.joints.as_vector())))
        if state.tick_index % cfg.stream_every_n_ticks == 0:
            for frame in obs.frames:
                robot.publish(
                    VIDEO_TOPICS[frame.camera_id],
                    FrameMsg(
                        camera_id=frame.camera_id,
                        frame_seq=frame.seq,
                        capture_time_ns=frame.capture_time_ns,
                        codec=frame.codec,
                        width=frame.width,
                        height=frame.height,
                        payload=frame.payload,
                    ),
                )
        operator.poll(TOPIC_JOINTS)
        for topic in VIDEO_TOPICS:
            operator.poll(topic)

    archive = recorder.finalize(record_path) if recorder is not None else None
    return LockstepResult(
        ticks=driver.total_ticks,
        final_state=state,
        archive_path=archive,
        operator_session=operator,
        robot_session=robot,
    )


def replay_archive(cfg: RobotConfig, episode) -> SimState:
    """Drive the simulator open-loop with an episode's recorded actions."""
    model = RobotModel(cfg)
    state = initial_state(cfg)
    for action in episode.actions:
        target = JointState.from_vector(np.concatenate([action, state.joints.head]))
        set_target(model, state, target)
        tick(model, state)
    return state
