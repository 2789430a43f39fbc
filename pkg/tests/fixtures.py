"""Small Intel-Lab-format files for end-to-end tests (not the real trace)."""

from datetime import datetime, timedelta

import numpy as np

FIXTURE_NODES = (1, 13, 33, 34, 35, 36, 37, 49)


def write_intel_like(path, nodes=FIXTURE_NODES, epochs=400, seed=0):
    rng = np.random.default_rng(seed)
    start = datetime(2004, 2, 28, 1, 0, 0)
    lines = []
    base = {n: 18 + rng.uniform(0, 3) for n in nodes}
    walk = {n: 0.0 for n in nodes}
    for e in range(epochs):
        ts = start + timedelta(seconds=31 * e)
        for n in nodes:
            walk[n] += rng.normal(0, 0.03)
            temp = base[n] + 1.5 * np.sin(2 * np.pi * e / 2800) + walk[n] + rng.normal(0, 0.02)
            stamp = ts.strftime("%Y-%m-%d %H:%M:%S.") + f"{rng.integers(0, 99999):05d}"
            lines.append(f"{stamp} {e} {n} {temp:.4f} 38.4 45.08 2.68")
    lines.append("2004-02-28 00:59:16.02785 3 99 19.3 38.4 45.08 2.68")  # bad mote
    lines.append("2004-02-28 00:59:16.02785 3 1")  # truncated
    lines.append(f"2004-02-28 00:59:16.02785 {epochs} 1 122.153 38.4 45.08 2.3")  # dying battery
    path.write_text("\n".join(lines) + "\n")
    return path


def write_locations(path, nodes=FIXTURE_NODES):
    rng = np.random.default_rng(1)
    path.write_text("".join(f"{n} {rng.uniform(0, 40):.2f} {rng.uniform(0, 30):.2f}\n" for n in nodes))
    return path
