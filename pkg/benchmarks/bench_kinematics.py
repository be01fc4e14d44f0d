#!/usr/bin/env python3
"""Benchmark the kinematics kernels: compiled path vs pure-numpy fallback.

Runs both implementations in one process (the pure bindings stay importable
via ``PURE_KERNELS`` even after numba compiles the module-level names) and
reports per-call times and speedups for the three hot kernels plus the
end-to-end IK solve. Invoke with ``WBCD_NUMBA=0`` to confirm the fallback
path is what you measure as "active".

Usage: python benchmarks/bench_kinematics.py [--repeat N] [--configs N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wbcd.config import load_config
from wbcd.kinematics import forward_kinematics, solve_ik
from wbcd.kinematics.kernels import NUMBA_ENABLED, PURE_KERNELS
from wbcd.kinematics import kernels


def _time(fn, repeat: int) -> float:
    """Best-of-3 mean seconds per call over ``repeat`` calls."""
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=2000, help="calls per timing sample")
    parser.add_argument("--configs", type=int, default=64, help="random joint configurations")
    args = parser.parse_args()

    cfg = load_config()
    arm = cfg.left_arm
    rng = np.random.default_rng(0)
    lo, hi = arm.limits[:, 0], arm.limits[:, 1]
    qs = lo + rng.random((args.configs, 7)) * (hi - lo)

    origins, axes, ee_offset = arm.origins, arm.axes, arm.ee_offset

    active = {
        "chain_frames": kernels.chain_frames,
        "fk_ee": kernels.fk_ee,
        "geometric_jacobian": kernels.geometric_jacobian,
        "dls_delta": kernels.dls_delta,
    }
    pure = PURE_KERNELS

    # Warm up (numba compiles on first call).
    q0 = qs[0]
    frames = active["chain_frames"](origins, axes, q0)
    active["fk_ee"](origins, axes, q0, ee_offset)
    J = active["geometric_jacobian"](origins, axes, q0, ee_offset)
    err = np.ones(6) * 1e-3
    active["dls_delta"](J, err, 0.05)
    pure["chain_frames"](origins, axes, q0)
    pure["dls_delta"](J, err, 0.05)

    print(f"numba active: {NUMBA_ENABLED}")
    print(f"{args.configs} configs, {args.repeat} calls per sample, best of 3\n")
    header = f"{'kernel':<22}{'active':>12}{'pure numpy':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))

    rows = [
        ("chain_frames", lambda f: f(origins, axes, qs[7])),
        ("fk_ee", lambda f: f(origins, axes, qs[7], ee_offset)),
        ("geometric_jacobian", lambda f: f(origins, axes, qs[7], ee_offset)),
        ("dls_delta", lambda f: f(J, err, 0.05)),
    ]
    for name, call in rows:
        t_active = _time(lambda: call(active[name]), args.repeat)
        t_pure = _time(lambda: call(pure[name]), args.repeat)
        print(f"{name:<22}{t_active * 1e6:>10.1f}µs{t_pure * 1e6:>12.1f}µs{t_pure / t_active:>9.1f}x")

    # End-to-end: one full IK solve per random config (shared solver code,
    # whichever kernel path the env flag selected).
    targets = [forward_kinematics(arm, q) for q in qs]
    starts = [arm.clamp(q + 0.05) for q in qs]

    def full_ik():
        for q0, target in zip(starts, targets):
            solve_ik(arm, q0, target)

    t_ik = _time(full_ik, max(1, args.repeat // 200))
    print(f"\nsolve_ik over {args.configs} configs: {t_ik * 1e3:.2f} ms "
          f"({t_ik / args.configs * 1e6:.1f} µs per solve, active path)")


if __name__ == "__main__":
    main()
