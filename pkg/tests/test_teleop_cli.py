"""Teleop controller clutch behavior, scripted sessions, and the command line."""

import json
import subprocess
import sys

import numpy as np
import pytest

from wbcd.cli import main
from wbcd.pipeline import read_episode
from wbcd.protocol import CommandRetarget
from wbcd.teleop import (
    EpisodeRecorder,
    ScriptedOperator,
    ScriptSegment,
    TeleopController,
    load_script,
    replay_archive,
    run_lockstep_session,
    square_script,
)


def command(pos_l=(0.4, 0.25, 0.3), pos_r=(0.4, -0.25, 0.3), clutch=False, quat=(1.0, 0.0, 0.0, 0.0), grip=(False, False)):
    return CommandRetarget(
        left_position=tuple(pos_l),
        left_quat=tuple(quat),
        right_position=tuple(pos_r),
        right_quat=tuple(quat),
        clutch_engaged=clutch,
        left_gripper_closed=grip[0],
        right_gripper_closed=grip[1],
    )


# A short script for tests that do not care about the full square: idle,
# one inward leg with the grippers closing, idle.
SHORT_SEGMENTS = [
    ScriptSegment(ticks=5, clutch=False),
    ScriptSegment(ticks=20, clutch=True, left_move=(-0.05, 0, 0), right_move=(-0.05, 0, 0), left_gripper=True),
    ScriptSegment(ticks=5, clutch=False),
]


def write_short_script(path):
    payload = {
        "schema": "wbcd-teleop-script/1",
        "segments": [
            {"ticks": 5},
            {"ticks": 20, "clutch": True, "left_move": [-0.05, 0, 0], "right_move": [-0.05, 0, 0], "left_gripper": True},
            {"ticks": 5},
        ],
    }
    path.write_text(json.dumps(payload))
    return path


# -- controller -------------------------------------------------------------------


def test_disengaged_clutch_holds_pose(cfg):
    controller = TeleopController(cfg)
    current = cfg.ready
    for x in (0.4, 0.9, -0.3):  # hand wanders; robot must not care
        target = controller.apply(current, command(pos_l=(x, 0.25, 0.3)))
        assert np.allclose(target.as_vector(), current.as_vector())
    assert controller.anchors is None


def test_clutch_edge_captures_anchors_and_tracks(cfg, model):
    controller = TeleopController(cfg)
    state = cfg.ready
    ee_before, _ = model.ee_poses(state)
    # rising edge: anchor at the current hand pose, no jump
    target = controller.apply(state, command(clutch=True))
    assert controller.anchors is not None
    assert np.allclose(target.left, state.left, atol=1e-6)
    # move the hand inward; the commanded joints must track the delta
    hand = np.array([0.4, 0.25, 0.3])
    for _ in range(40):
        hand = hand + np.array([-0.002, 0.0, 0.0])
        state = controller.apply(state, command(pos_l=tuple(hand), clutch=True))
    ee_after, _ = model.ee_poses(state)
    moved = ee_after.position - ee_before.position
    assert moved[0] < -0.05  # tracked most of the 8 cm pull
    # release drops the anchors and freezes the pose again
    released = controller.apply(state, command(clutch=False))
    assert controller.anchors is None
    assert np.allclose(released.as_vector(), state.as_vector())


def test_degenerate_quaternions_are_survivable(cfg):
    controller = TeleopController(cfg)
    for quat in ((0.0, 0.0, 0.0, 0.0), (float("nan"),) * 4):
        target = controller.apply(cfg.ready, command(clutch=True, quat=quat))
        assert np.all(np.isfinite(target.as_vector()))


def test_gripper_buttons_pass_through(cfg):
    controller = TeleopController(cfg)
    target = controller.apply(cfg.ready, command(clutch=True, grip=(True, False)))
    assert target.grippers[0] == 0.0  # closed
    assert target.grippers[1] == 1.0  # open


# -- recorder ----------------------------------------------------------------------


def test_recorder_empty_session_writes_nothing(cfg, tmp_path):
    recorder = EpisodeRecorder(cfg)
    out = tmp_path / "none.wbep"
    assert recorder.finalize(out) is None
    assert not out.exists()


def test_recorder_round_trip(cfg, model, tmp_path):
    from conftest import make_obs

    recorder = EpisodeRecorder(cfg, task="demo", operator_mode="in_person")
    joints = cfg.ready
    ee_l, ee_r = model.ee_poses(joints)
    for t in range(3):
        recorder.append(make_obs((t + 1) * 10**7, joints, ee_l, ee_r, seq=t), joints.as_action())
    path = recorder.finalize(tmp_path / "demo.wbep")
    episode = read_episode(path)
    assert episode.steps == 3
    assert episode.meta.task == "demo"
    assert episode.meta.operator_mode == "in_person"


# -- scripts ------------------------------------------------------------------------


def test_square_script_shape():
    segments = square_script()
    op = ScriptedOperator(segments)
    assert op.total_ticks == 20 + 4 * 30 + 20
    assert not op.command_at(0).clutch_engaged  # settle first
    assert op.command_at(25).clutch_engaged
    assert op.command_at(60).left_gripper_closed  # second leg grips
    assert op.command_at(op.total_ticks + 999) == op.command_at(op.total_ticks - 1)


def test_square_script_returns_home():
    op = ScriptedOperator(square_script())
    last = op.command_at(op.total_ticks - 1)
    assert np.allclose(last.left_position, (0.40, 0.25, 0.30), atol=1e-12)
    assert np.allclose(last.right_position, (0.40, -0.25, 0.30), atol=1e-12)


def test_load_script_builtin_and_json(tmp_path):
    assert load_script("square") == square_script()
    path = write_short_script(tmp_path / "script.json")
    assert load_script(str(path)) == SHORT_SEGMENTS
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema": "other/1", "segments": []}))
    with pytest.raises(ValueError):
        load_script(str(bad))


# -- lockstep sessions -----------------------------------------------------------------


def test_lockstep_session_is_deterministic(cfg, tmp_path):
    a = run_lockstep_session(cfg, SHORT_SEGMENTS, record_path=tmp_path / "a.wbep")
    b = run_lockstep_session(cfg, SHORT_SEGMENTS, record_path=tmp_path / "b.wbep")
    assert a.ticks == b.ticks == 30
    assert a.archive_path.read_bytes() == b.archive_path.read_bytes()


def test_lockstep_archive_replays_exactly(cfg, tmp_path):
    result = run_lockstep_session(cfg, SHORT_SEGMENTS, record_path=tmp_path / "ep.wbep")
    episode = read_episode(result.archive_path)
    final = replay_archive(cfg, episode)
    err = float(np.max(np.abs(final.joints.as_vector() - episode.joints[-1])))
    assert err <= 1e-9


def test_lockstep_uses_sim_clock(cfg, tmp_path):
    result = run_lockstep_session(cfg, SHORT_SEGMENTS, record_path=tmp_path / "ep.wbep")
    episode = read_episode(result.archive_path)
    dt_ns = int(round(cfg.dt_s * 1e9))
    assert np.array_equal(np.diff(episode.timestamps_ns), np.full(episode.steps - 1, dt_ns))


# -- command line ------------------------------------------------------------------------


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def structured(capsys, argv):
    code, out, err = run_cli(capsys, argv + ["--output", "structured"])
    return code, (json.loads(out) if out.strip() else None), err


def test_cli_serve_scripted_records_archive(capsys, tmp_path):
    archive = tmp_path / "ep.wbep"
    script = write_short_script(tmp_path / "script.json")
    code, payload, _ = structured(capsys, ["serve", "--script", str(script), "--record", str(archive)])
    assert code == 0
    assert payload["mode"] == "scripted"
    assert payload["ticks"] == 30
    assert archive.exists()
    import hashlib

    assert payload["archive_sha256"] == hashlib.sha256(archive.read_bytes()).hexdigest()


def test_cli_replay_round_trip(capsys, tmp_path):
    archive = tmp_path / "ep.wbep"
    script = write_short_script(tmp_path / "script.json")
    assert main(["serve", "--script", str(script), "--record", str(archive)]) == 0
    capsys.readouterr()
    code, payload, _ = structured(capsys, ["replay", str(archive)])
    assert code == 0
    assert payload["match"] is True
    assert payload["terminal_error"] <= 1e-9


def test_cli_replay_rejects_foreign_config(capsys, tmp_path, cfg):
    archive = tmp_path / "ep.wbep"
    script = write_short_script(tmp_path / "script.json")
    assert main(["serve", "--script", str(script), "--record", str(archive)]) == 0
    capsys.readouterr()

    import wbcd.data
    from importlib.resources import files

    text = files(wbcd.data).joinpath("default.yaml").read_text()
    assert "dt_s: 0.02" in text
    modified = tmp_path / "slower.yaml"
    modified.write_text(text.replace("dt_s: 0.02", "dt_s: 0.04"))
    code, out, err = run_cli(capsys, ["replay", str(archive), "--config", str(modified)])
    assert code == 1
    assert "recorded with config" in err


def test_cli_replay_missing_archive(capsys, tmp_path):
    code, _, err = run_cli(capsys, ["replay", str(tmp_path / "missing.wbep")])
    assert code == 1
    assert "not found" in err


def test_cli_trim_and_plots(capsys, cfg, model, tmp_path):
    from wbcd.pipeline import write_episode

    from conftest import synthetic_episode

    ep = synthetic_episode(cfg, model, n_steps=10, move_from=4)
    src = tmp_path / "raw.wbep"
    write_episode(ep, src)
    code, payload, _ = structured(capsys, ["trim", str(src), "--plot", str(tmp_path / "plots")])
    assert code == 0
    assert payload["onset"] == 4
    assert payload["dropped_steps"] == 3
    assert payload["steps_after"] == 7
    assert (tmp_path / "raw.trimmed.wbep").exists()
    assert len(payload["plots"]) == 3
    from pathlib import Path

    assert all(Path(p).exists() for p in payload["plots"])


def test_cli_env_overrides_and_flag_precedence(capsys, cfg, model, tmp_path, monkeypatch):
    from wbcd.pipeline import write_episode

    from conftest import synthetic_episode

    ep = synthetic_episode(cfg, model, n_steps=10, move_from=4)
    src = tmp_path / "raw.wbep"
    write_episode(ep, src)

    monkeypatch.setenv("WBCD_TAU", "0.5")  # absurd threshold: nothing moves that far
    code, payload, _ = structured(capsys, ["trim", str(src), "--out", str(tmp_path / "env.wbep")])
    assert code == 0
    assert payload["fully_static"] is True

    # an explicit flag beats the environment
    code, payload, _ = structured(
        capsys, ["trim", str(src), "--tau", "1e-4", "--out", str(tmp_path / "flag.wbep")]
    )
    assert code == 0
    assert payload["onset"] == 4


def test_cli_bad_env_value_is_a_usage_error(capsys, cfg, model, tmp_path, monkeypatch):
    from wbcd.pipeline import write_episode

    from conftest import synthetic_episode

    ep = synthetic_episode(cfg, model, n_steps=10, move_from=4)
    src = tmp_path / "raw.wbep"
    write_episode(ep, src)
    monkeypatch.setenv("WBCD_TAU", "not-a-number")
    with pytest.raises(SystemExit) as exc:
        main(["trim", str(src)])
    assert exc.value.code == 2


def test_cli_prep_manifest(capsys, cfg, model, tmp_path):
    from wbcd.pipeline import write_episode

    from conftest import synthetic_episode

    dataset = tmp_path / "data"
    for i in range(2):
        write_episode(synthetic_episode(cfg, model, n_steps=5 + i, move_from=2), dataset / f"e{i}.wbep")
    code, payload, _ = structured(capsys, ["prep", str(dataset), "--chunk", "50"])
    assert code == 0
    assert payload["episode_count"] == 2
    assert payload["complete"] is False
    assert payload["total_steps"] == 11
    manifest = json.loads((dataset / "manifest.json").read_text())
    assert manifest["training"]["chunk_size"] == 50


def test_cli_prep_empty_dir_fails(capsys, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    code, _, err = run_cli(capsys, ["prep", str(empty)])
    assert code == 1
    assert "wbep" in err


def test_cli_score_table1_check(capsys):
    code, payload, _ = structured(capsys, ["score", "table1", "--check"])
    assert code == 0
    assert payload["check"] == "PASS"
    assert payload["relative_error"] <= 1e-9
    assert payload["rounds"] == 9
    assert payload["mean_round_duration_s"] == 192.0
    assert payload["mean_complete_round_duration_s"] == 204.25


def test_cli_score_replay(capsys, tmp_path):
    from wbcd.scoring import table1

    log_path = table1.official_log().save(tmp_path / "log.json")
    card = tmp_path / "card.txt"
    code, payload, _ = structured(capsys, ["score", "replay", "--log", str(log_path), "--out", str(card)])
    assert code == 0
    assert payload["rounds"] == 9
    assert card.exists()
    assert "total score:" in card.read_text()


def test_cli_score_replay_missing_log(capsys, tmp_path):
    code, _, err = run_cli(capsys, ["score", "replay", "--log", str(tmp_path / "no.json")])
    assert code == 1
    assert "not found" in err


def test_cli_serve_network_tick_limit(capsys):
    code, payload, _ = structured(
        capsys, ["serve", "--ticks", "3", "--port", "0", "--ws-port", "0"]
    )
    assert code == 0
    assert payload["mode"] == "network"
    assert payload["ticks"] == 3
    assert payload["stopped_by"] == "tick_limit"


def test_cli_entry_point_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "wbcd", "score", "table1", "--check", "--output", "structured"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["check"] == "PASS"


def test_cli_unknown_command_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
