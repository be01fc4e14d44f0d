"""Desk-scale bimanual teleoperation stack.

Subpackages:
    kinematics  - forward kinematics, Jacobians, damped least-squares IK, retargeting
    simulator   - fixed-timestep kinematic robot with synthetic three-camera imagery
    protocol    - length-prefixed binary wire protocol, pub/sub sessions, latency stats
    pipeline    - episode recording, static-prefix trimming, chunked dataset prep
    scoring     - competition round/subtask state machine and score formulas
    cli         - the ``wbcd`` orchestrator binary
"""

__version__ = "0.1.0"
