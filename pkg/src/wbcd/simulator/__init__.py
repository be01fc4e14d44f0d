"""Deterministic fixed-timestep simulator with synthetic camera rendering."""

from .core import SimState, initial_state, set_target, snapshot, tick
from .render import UnknownCamera, decode_jpeg, encode_jpeg, render_frame
from .robot import RobotModel

__all__ = [
    "RobotModel",
    "SimState",
    "tick",
    "set_target",
    "snapshot",
    "initial_state",
    "UnknownCamera",
    "render_frame",
    "encode_jpeg",
    "decode_jpeg",
]
