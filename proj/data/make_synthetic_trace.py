"""Generate the bundled six-user load trace.

Stand-in for production traces: each user has a daily cycle with its own
phase, Gamma-distributed noise and occasional bursts. The aggregate mean is
about 0.9 of capacity, so queues build up at peaks and drain in troughs.

    python3 make_synthetic_trace.py [output.csv]
"""

import sys

import numpy as np

USERS = 6
STEPS = 14628
PERIOD = 288  # steps per simulated day
SEED = 20240521


def generate(rng: np.random.Generator) -> np.ndarray:
    t = np.arange(STEPS)
    base = np.array([0.30, 0.20, 0.15, 0.12, 0.08, 0.05])
    phase = rng.uniform(0, 2 * np.pi, USERS)
    loads = np.empty((STEPS, USERS))
    for i in range(USERS):
        cycle = 1.0 + 0.6 * np.sin(2 * np.pi * t / PERIOD + phase[i])
        mean = base[i] * cycle
        shape = 4.0
        loads[:, i] = rng.gamma(shape, mean / shape)
        bursts = rng.random(STEPS) < 0.002
        loads[bursts, i] += rng.exponential(20 * base[i], bursts.sum())
        idle = rng.random(STEPS) < 0.1
        loads[idle, i] = 0.0
    return loads


def main() -> None:
    out = sys.argv[1] if len(sys.argv) > 1 else "synthetic_6user_trace.csv"
    loads = generate(np.random.default_rng(SEED))
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write("t," + ",".join(f"user{i + 1}" for i in range(USERS)) + "\n")
        for k, row in enumerate(loads, start=1):
            f.write(f"{k}," + ",".join(f"{v:.6f}" for v in row) + "\n")


if __name__ == "__main__":
    main()
