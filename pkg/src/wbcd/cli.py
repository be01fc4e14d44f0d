"""Single command-line binary wiring the stack into runnable subcommands.

Exit codes: 0 success, 1 domain/operational error, 2 usage error. Every
subcommand honors ``--output structured`` (one JSON object on stdout) and
``WBCD_*`` environment overrides for its flags; an explicit flag always
wins over the environment.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import signal
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import BadConfig, load_config
from .pipeline import (
    ArchiveError,
    ChecksumMismatch,
    EmptyDataset,
    TooShort,
    TrimConfig,
    emit_trim_plot,
    export_manifest,
    read_episode,
    trim_episode,
    validate_manifest,
    write_episode,
)
from .pipeline.manifest import EXPECTED_EPISODE_COUNT, TRAINING_DEFAULTS
from .protocol import (
    TOPIC_COMMANDS,
    TOPIC_EVENTS,
    TOPIC_JOINTS,
    VIDEO_TOPICS,
    CommandRetarget,
    EventKind,
    FrameMsg,
    Hub,
    JointStateMsg,
    PortInUse,
    ProtocolViolation,
    SessionEvent,
    TeleopServer,
    WebSocketBridge,
)
from .scoring import (
    ScoringSession,
    SessionLog,
    mean_round_durations,
    render_scorecard,
    report,
    total_score,
)
from .scoring import table1 as official
from .simulator import RobotModel, initial_state, set_target, snapshot, tick
from .teleop import EpisodeRecorder, TeleopController, load_script, replay_archive, run_lockstep_session

log = logging.getLogger("wbcd")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2

REPLAY_TOLERANCE = 1e-9


class CliError(RuntimeError):
    """Operational failure: reported on stderr, exit code 1."""


class ConfigHashMismatch(CliError):
    """Archive was recorded against a different robot configuration."""


def _opt(args, attr: str, builtin, cast=str):
    """Resolve a flag: explicit value, then WBCD_<ATTR> env var, then builtin."""
    value = getattr(args, attr)
    if value is not None:
        return value
    env_name = "WBCD_" + attr.upper()
    raw = os.environ.get(env_name)
    if raw is None:
        return builtin
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad {env_name}={raw!r}: {e}")


class UsageError(ValueError):
    """Bad invocation (malformed env override, missing input): exit code 2."""


def _emit(args, payload: dict, text: str) -> None:
    mode = _opt(args, "output", "text")
    if mode == "structured":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _add_output_flag(parser) -> None:
    parser.add_argument(
        "--output",
        choices=("text", "structured"),
        default=None,
        help="text (default) or structured: one JSON object on stdout",
    )


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def _resolve_record_path(record, seed: int):
    if record is None:
        return None
    p = Path(record)
    if p.is_dir() or str(record).endswith(os.sep):
        return p / f"episode-{seed:04d}.wbep"
    return p


def _apply_session_event(session: ScoringSession, msg: SessionEvent, t_ns: int) -> None:
    kind = EventKind(msg.kind)
    if kind == EventKind.ROUND_START:
        session.start_round(t_ns)
    elif kind == EventKind.SUBTASK_START:
        session.start_subtask(msg.subtask_id, msg.alpha, t_ns)
    elif kind == EventKind.COMPONENT_ACHIEVED:
        session.achieve(msg.label, t_ns)
    elif kind == EventKind.SUBTASK_COMPLETE:
        session.complete_subtask(t_ns)
    elif kind == EventKind.ROUND_FINISH:
        session.finish_round(t_ns)


def cmd_serve(args) -> int:
    try:
        cfg = load_config(_opt(args, "config", None))
    except BadConfig as e:
        raise CliError(f"bad config: {e}")
    seed = _opt(args, "seed", 0, int)
    record_path = _resolve_record_path(_opt(args, "record", None), seed)

    script = _opt(args, "script", None)
    if script is not None:
        return _serve_scripted(args, cfg, script, record_path, seed)
    return _serve_network(args, cfg, record_path)


def _serve_scripted(args, cfg, script: str, record_path, seed: int) -> int:
    try:
        segments = load_script(script)
    except (OSError, ValueError, KeyError) as e:
        raise CliError(f"cannot load script {script!r}: {e}")
    # The builtin scripts are deterministic by construction; the seed is
    # accepted so invocations stay uniform across modes.
    del seed
    result = run_lockstep_session(cfg, segments, record_path=record_path, task=_opt(args, "task", "scripted"))
    payload = {
        "command": "serve",
        "mode": "scripted",
        "script": script,
        "ticks": result.ticks,
        "archive": str(result.archive_path) if result.archive_path else None,
        "archive_sha256": _sha256_file(result.archive_path) if result.archive_path else None,
    }
    lines = [f"scripted session: {result.ticks} ticks"]
    if result.archive_path:
        lines.append(f"recorded {result.archive_path} (sha256 {payload['archive_sha256'][:16]}…)")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def _serve_network(args, cfg, record_path) -> int:
    host = _opt(args, "listen", "127.0.0.1")
    port = _opt(args, "port", cfg.tcp_port, int)
    ws_port = _opt(args, "ws_port", cfg.ws_port, int)
    frame_buffer = _opt(args, "frame_buffer", cfg.frame_buffer, int)
    heartbeat_ms = _opt(args, "heartbeat_ms", cfg.heartbeat_ms, int)
    max_ticks = _opt(args, "ticks", None, int)
    session_log_path = _opt(args, "session_log", None)

    hub = Hub(frame_buffer=frame_buffer, heartbeat_ms=heartbeat_ms)
    try:
        tcp = TeleopServer(hub, host, port)
    except PortInUse as e:
        raise CliError(str(e))
    try:
        ws = WebSocketBridge(hub, host, ws_port)
    except PortInUse as e:
        tcp.close()
        raise CliError(str(e))

    model = RobotModel(cfg)
    state = initial_state(cfg)
    controller = TeleopController(cfg)
    recorder = EpisodeRecorder(cfg, task=_opt(args, "task", "teleop")) if record_path is not None else None
    scoring = ScoringSession(window_s=cfg.session_window_s)

    stop = {"signal": None}

    def _on_signal(signum, _frame):
        stop["signal"] = signum

    previous = {s: signal.signal(s, _on_signal) for s in (signal.SIGINT, signal.SIGTERM)}
    log.info("serving on tcp://%s:%d ws://%s:%d (dt=%.3fs)", host, tcp.port, host, ws.port, cfg.dt_s)

    dt = cfg.dt_s
    archive = None
    try:
        deadline = time.monotonic() + dt
        while stop["signal"] is None and (max_ticks is None or state.tick_index < max_ticks):
            # Service sockets until this tick's deadline.
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                try:
                    tcp.step(timeout=min(remaining, 0.005))
                    ws.step(timeout=0.0)
                except ProtocolViolation as e:
                    log.warning("%s", e)
            deadline += dt
            if time.monotonic() - deadline > 5 * dt:  # fell badly behind; don't spiral
                deadline = time.monotonic() + dt

            for msg in hub.take(TOPIC_COMMANDS):
                if isinstance(msg, CommandRetarget):
                    set_target(model, state, controller.apply(state.joints, msg))
            for msg in hub.take(TOPIC_EVENTS):
                if isinstance(msg, SessionEvent):
                    try:
                        # Arrival order is authoritative; stamp with the server clock.
                        _apply_session_event(scoring, msg, time.monotonic_ns())
                    except Exception as e:  # scoring rejections must not kill the loop
                        log.warning("session event rejected: %s", e)

            tick(model, state)
            stream_tick = state.tick_index % cfg.stream_every_n_ticks == 0
            want_video = any(t in peer.subscriptions for peer in hub.peers for t in VIDEO_TOPICS)
            obs = None
            if recorder is not None or (stream_tick and want_video):
                obs = snapshot(model, state)
            if recorder is not None and obs is not None:
                recorder.append(obs, state.target.as_action())

            hub.broadcast(TOPIC_JOINTS, JointStateMsg(values=tuple(state.joints.as_vector())))
            if stream_tick and obs is not None:
                for frame in obs.frames:
                    hub.broadcast(
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
            hub.reap_dead()
            hub.flush()
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)
        if recorder is not None:
            archive = recorder.finalize(record_path)
        if session_log_path is not None and scoring.log.events:
            scoring.log.save(session_log_path)
        tcp.close()
        ws.close()

    payload = {
        "command": "serve",
        "mode": "network",
        "ticks": state.tick_index,
        "stopped_by": signal.Signals(stop["signal"]).name if stop["signal"] is not None else "tick_limit",
        "archive": str(archive) if archive else None,
    }
    lines = [f"served {state.tick_index} ticks, stopped by {payload['stopped_by']}"]
    if archive:
        lines.append(f"recorded {archive}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def cmd_replay(args) -> int:
    try:
        cfg = load_config(_opt(args, "config", None))
    except BadConfig as e:
        raise CliError(f"bad config: {e}")
    try:
        episode = read_episode(args.archive)
    except FileNotFoundError:
        raise CliError(f"archive not found: {args.archive}")
    except ArchiveError as e:
        raise CliError(f"unreadable archive: {e}")
    if episode.meta.config_hash != cfg.config_hash:
        raise ConfigHashMismatch(
            f"archive recorded with config {episode.meta.config_hash[:12]}…, "
            f"loaded config is {cfg.config_hash[:12]}…"
        )
    final = replay_archive(cfg, episode)
    err = float(np.max(np.abs(final.joints.as_vector() - episode.joints[-1])))
    tolerance = _opt(args, "tolerance", REPLAY_TOLERANCE, float)
    ok = err <= tolerance
    payload = {
        "command": "replay",
        "archive": str(args.archive),
        "steps": episode.steps,
        "terminal_error": err,
        "tolerance": tolerance,
        "match": ok,
    }
    _emit(
        args,
        payload,
        f"replayed {episode.steps} steps; terminal joint error {err:.3e} "
        f"({'within' if ok else 'EXCEEDS'} {tolerance:g})",
    )
    return EXIT_OK if ok else EXIT_ERROR


# ---------------------------------------------------------------------------
# trim
# ---------------------------------------------------------------------------


def cmd_trim(args) -> int:
    try:
        episode = read_episode(args.archive)
    except FileNotFoundError:
        raise CliError(f"archive not found: {args.archive}")
    except ArchiveError as e:
        raise CliError(f"unreadable archive: {e}")
    defaults = TrimConfig()
    trim_cfg = TrimConfig(
        threshold_m=_opt(args, "tau", defaults.threshold_m, float),
        window=_opt(args, "window", defaults.window, int),
        keep_prefix_frames=_opt(args, "keep", defaults.keep_prefix_frames, int),
    )
    try:
        trimmed, result = trim_episode(episode, trim_cfg)
    except TooShort as e:
        raise CliError(str(e))
    out = _opt(args, "out", None)
    if out is None:
        src = Path(args.archive)
        out = src.with_name(src.stem + ".trimmed.wbep")
    write_episode(trimmed, out)

    plot_dir = _opt(args, "plot", None)
    plot_paths = []
    if plot_dir is not None:
        base = Path(plot_dir) / Path(args.archive).stem
        plot_paths = [str(p) for p in emit_trim_plot(episode, trimmed, base, result)]

    payload = {
        "command": "trim",
        "archive": str(args.archive),
        "out": str(out),
        "onset": result.onset,
        "dropped_steps": result.dropped_steps,
        "fully_static": result.fully_static,
        "steps_before": episode.steps,
        "steps_after": trimmed.steps,
        "plots": plot_paths,
    }
    lines = [
        f"onset={result.onset} dropped={result.dropped_steps} "
        f"({episode.steps} → {trimmed.steps} steps)"
        + (" [fully static]" if result.fully_static else ""),
        f"wrote {out}",
    ]
    lines.extend(f"wrote {p}" for p in plot_paths)
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# prep
# ---------------------------------------------------------------------------


def cmd_prep(args) -> int:
    chunk = _opt(args, "chunk", TRAINING_DEFAULTS["chunk_size"], int)
    expected = _opt(args, "expected", EXPECTED_EPISODE_COUNT, int)
    training = dict(TRAINING_DEFAULTS, chunk_size=chunk)
    try:
        manifest_path = export_manifest(
            args.data_dir,
            _opt(args, "out", None),
            expected_episode_count=expected,
            training=training,
        )
        summary = validate_manifest(manifest_path, args.data_dir)
    except (EmptyDataset, ArchiveError, FileNotFoundError) as e:
        raise CliError(str(e))
    except ChecksumMismatch as e:  # would mean a write race; surface loudly
        raise CliError(str(e))
    payload = {
        "command": "prep",
        "manifest": str(manifest_path),
        "episode_count": summary["episode_count"],
        "expected_episode_count": expected,
        "complete": summary["complete"],
        "total_steps": summary["total_steps"],
        "chunk_size": chunk,
    }
    _emit(
        args,
        payload,
        f"manifest {manifest_path}: {summary['episode_count']} episodes "
        f"({summary['total_steps']} steps), chunk={chunk}, "
        f"complete={'yes' if summary['complete'] else 'no'}",
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------


def _scorecard_payload(rounds) -> dict:
    mean_all, mean_complete = mean_round_durations(rounds)
    return {
        "total_score": total_score(rounds),
        "rounds": len(rounds),
        "mean_round_duration_s": mean_all,
        "mean_complete_round_duration_s": mean_complete,
    }


def cmd_score_replay(args) -> int:
    try:
        session_log = SessionLog.load(args.log)
    except FileNotFoundError:
        raise CliError(f"log not found: {args.log}")
    except (ValueError, KeyError) as e:
        raise CliError(f"unreadable session log: {e}")
    out = _opt(args, "out", None)
    try:
        text = report(session_log, out_path=out)
        session = ScoringSession.replay(session_log)
    except Exception as e:
        raise CliError(f"log does not replay: {e}")
    payload = {"command": "score replay", "log": str(args.log), "scorecard": out and str(out)}
    payload.update(_scorecard_payload(session.rounds))
    _emit(args, payload, text)
    return EXIT_OK


def _exact_competition_total() -> Fraction:
    """Recompute the official total in exact arithmetic, bypassing the engine."""
    total = Fraction(0)
    for betas, points in zip(official.BETA_S, official.BASE_POINTS):
        for beta, s in zip(betas, points):
            if beta is None or beta == 0:
                continue
            total += Fraction(s, beta) * Fraction(official.ALPHA)
    return total


def cmd_score_table1(args) -> int:
    rounds = official.official_rounds()
    text = render_scorecard(rounds)
    out = _opt(args, "out", None)
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    payload = {"command": "score table1", "scorecard": out and str(out)}
    payload.update(_scorecard_payload(rounds))
    lines = [text]
    status = None
    if args.check:
        engine = total_score(rounds)
        exact = _exact_competition_total()
        rel = abs(engine - float(exact)) / float(exact)
        status = "PASS" if rel <= 1e-9 else "FAIL"
        payload.update({"oracle_total": float(exact), "relative_error": rel, "check": status})
        lines.append(f"oracle total {float(exact):.12f} | engine {engine:.12f} | rel err {rel:.2e} | {status}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if status in (None, "PASS") else EXIT_ERROR


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wbcd", description="Bimanual teleoperation stack: simulator, teleop server, dataset tools, scoring.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the simulator with the teleop server (or a scripted session)")
    p.add_argument("--config", default=None, help="robot config YAML (default: built-in)")
    p.add_argument("--listen", default=None, help="bind host (default 127.0.0.1)")
    p.add_argument("--port", type=int, default=None, help="teleop TCP port")
    p.add_argument("--ws-port", dest="ws_port", type=int, default=None, help="WebSocket bridge port")
    p.add_argument("--frame-buffer", dest="frame_buffer", type=int, default=None, help="per-peer video queue depth")
    p.add_argument("--heartbeat-ms", dest="heartbeat_ms", type=int, default=None, help="liveness interval")
    p.add_argument("--ticks", type=int, default=None, help="stop after N ticks (default: run until signal)")
    p.add_argument("--record", default=None, metavar="PATH", help="write the session as an episode archive")
    p.add_argument("--script", default=None, metavar="NAME|FILE", help="scripted in-process session: 'square' or a JSON script")
    p.add_argument("--session-log", dest="session_log", default=None, metavar="PATH", help="write the scoring event log on exit")
    p.add_argument("--task", default=None, help="task name stored in recorded episodes")
    p.add_argument("--seed", type=int, default=None, help="seed for scripted sessions (default 0)")
    _add_output_flag(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="drive the simulator open-loop from a recorded archive")
    p.add_argument("archive", help="episode archive (.wbep)")
    p.add_argument("--config", default=None)
    p.add_argument("--tolerance", type=float, default=None, help=f"terminal joint tolerance (default {REPLAY_TOLERANCE:g})")
    _add_output_flag(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("trim", help="cut idle lead-in from an episode archive")
    p.add_argument("archive", help="episode archive (.wbep)")
    p.add_argument("--out", default=None, help="output archive (default <name>.trimmed.wbep)")
    p.add_argument("--tau", type=float, default=None, help="motion threshold in meters")
    p.add_argument("--window", type=int, default=None, help="smoothing window in steps")
    p.add_argument("--keep", type=int, default=None, help="pre-onset steps to keep")
    p.add_argument("--plot", default=None, metavar="DIR", help="write displacement CSV and SVG overlays")
    _add_output_flag(p)
    p.set_defaults(func=cmd_trim)

    p = sub.add_parser("prep", help="scan a dataset directory and write its training manifest")
    p.add_argument("data_dir", help="directory of .wbep archives")
    p.add_argument("--chunk", type=int, default=None, help="action chunk size recorded in the manifest")
    p.add_argument("--out", default=None, help="manifest path (default <dir>/manifest.json)")
    p.add_argument("--expected", type=int, default=None, help="episode count needed for 'complete'")
    _add_output_flag(p)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("score", help="scoring tools")
    score_sub = p.add_subparsers(dest="score_command", required=True)

    sp = score_sub.add_parser("replay", help="render a scorecard from a session event log")
    sp.add_argument("--log", required=True, help="session log JSON")
    sp.add_argument("--out", default=None, help="write the scorecard here as well")
    _add_output_flag(sp)
    sp.set_defaults(func=cmd_score_replay)

    sp = score_sub.add_parser("table1", help="render the official competition scorecard")
    sp.add_argument("--check", action="store_true", help="cross-check the engine against exact arithmetic")
    sp.add_argument("--out", default=None, help="write the scorecard here as well")
    _add_output_flag(sp)
    sp.set_defaults(func=cmd_score_table1)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("WBCD_LOG", "INFO"), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))  # exits 2
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
