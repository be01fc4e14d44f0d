#!/usr/bin/env python3
"""Independent check of the championship-record total score.

Computes sum(s / beta * alpha) over every timed subtask of the official
nine-round record, straight from the published times — no project imports,
so it can cross-check the scoring engine. The one untimed cell (round 9,
subtask 3: 1 base point, no time) contributes nothing here, matching the
engine's default policy for untimed entries.

Usage: python3 scripts/table1_oracle.py [--per-round]
"""

import argparse
from fractions import Fraction

ALPHA = 1

# (minutes, seconds) per subtask; None = never timed. Base points below.
TIMES = [
    [(1, 47), (0, 13), (1, 56)],
    [(1, 24), (0, 40), (1, 15)],
    [(1, 3), (0, 56), (1, 32)],
    [(2, 18), (0, 27), (0, 30)],
    [(2, 10), (0, 55), (0, 52)],
    [(0, 58), (0, 22), (0, 59)],
    [(1, 43), (0, 16), (1, 24)],
    [(1, 24), (0, 28), (1, 42)],
    [(1, 24), (0, 10), None],
]

POINTS = [
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 1],
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--per-round", action="store_true", help="also print each round's score")
    args = parser.parse_args()

    total = Fraction(0)
    timed_cells = 0
    beta_total = 0
    complete_round_beta = []
    for i, (times, points) in enumerate(zip(TIMES, POINTS), start=1):
        round_total = Fraction(0)
        round_beta = 0
        complete = True
        for cell, s in zip(times, points):
            if cell is None:
                complete = False
                continue
            minutes, seconds = cell
            beta = minutes * 60 + seconds
            round_total += Fraction(s, beta) * ALPHA
            round_beta += beta
            timed_cells += 1
        total += round_total
        beta_total += round_beta
        if complete:
            complete_round_beta.append(round_beta)
        if args.per_round:
            print(f"round {i}: {float(round_total):.10f}  (timed {round_beta} s)")

    print(f"timed subtasks: {timed_cells}")
    print(f"total beta: {beta_total} s")
    print(f"mean round duration (all {len(TIMES)} rounds): {beta_total / len(TIMES)}")
    print(
        "mean round duration "
        f"({len(complete_round_beta)} fully timed rounds): {sum(complete_round_beta) / len(complete_round_beta)}"
    )
    print(f"total score: {float(total):.12f}")


if __name__ == "__main__":
    main()
