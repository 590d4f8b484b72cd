#!/usr/bin/env python3
"""Generates data/demo.csv: a small 2D gesture corpus for the README walkthrough.

Three shape classes (line, circle, zigzag), twelve samples each, spread
round-robin over six subjects, 16 raw points per sample with mild jitter.
Deterministic: rerunning rewrites the same file.
"""
import csv
import math
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "demo.csv"
POINTS = 16
PER_CLASS = 12
SUBJECTS = 6


def shape(class_id: int, u: float) -> tuple[float, float]:
    if class_id == 0:  # diagonal line
        return u, u
    if class_id == 1:  # circle
        return 0.5 * math.cos(2 * math.pi * u), 0.5 * math.sin(2 * math.pi * u)
    # zigzag: advance in x, bounce in y (4 teeth)
    tooth = u * 4.0 - math.floor(u * 4.0 + 0.5)
    return u, 0.25 * (2.0 * abs(2.0 * tooth) - 1.0)


def main() -> None:
    rng = random.Random(7)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "class", "subject", "t", "x", "y"])
        for class_id in range(3):
            for k in range(PER_CLASS):
                gid = f"demo-c{class_id}-{k}"
                subject = k % SUBJECTS
                for t in range(POINTS):
                    u = t / (POINTS - 1)
                    x, y = shape(class_id, u)
                    x += rng.gauss(0.0, 0.02)
                    y += rng.gauss(0.0, 0.02)
                    w.writerow([gid, class_id, subject, t, f"{x:.6f}", f"{y:.6f}"])
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
