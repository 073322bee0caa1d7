#!/usr/bin/env python3
"""Convergence table of the solver against the exact self-similar profile."""

import time

import numpy as np

from pme import geometry, solver
from pme.grid import RadialGrid


def run(cells, radius=6.0, mass_const=0.25):
    M = geometry.euclidean(2)
    g = RadialGrid.uniform(M, radius, cells)
    u0 = solver.barenblatt(g.centers, 1.0, 2, 2.0, mass_const)
    cfg = solver.SolverConfig(
        m=2.0,
        dt=solver.DtPolicy(dt0=0.5 * g.h, growth=1.0),
        t_end=1.0,
        snapshot_stride=10**9,
    )
    t0 = time.monotonic()
    traj = solver.solve_ball(u0, cfg, g)
    elapsed = time.monotonic() - t0
    exact = solver.barenblatt(g.centers, 2.0, 2, 2.0, mass_const)
    l1 = np.dot(g.weights_scaled, np.abs(traj.final - exact)) / np.dot(
        g.weights_scaled, exact
    )
    return float(l1), elapsed


def main():
    print(f"{'J':>6} {'L1 rel err':>12} {'ratio':>7} {'time':>8}")
    prev = None
    for cells in (250, 500, 1000, 2000, 4000):
        err, elapsed = run(cells)
        ratio = f"{prev / err:.2f}" if prev else "-"
        print(f"{cells:>6} {err:>12.3e} {ratio:>7} {elapsed:>7.1f}s")
        prev = err


if __name__ == "__main__":
    main()
