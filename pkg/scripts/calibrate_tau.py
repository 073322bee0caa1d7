#!/usr/bin/env python3
"""Recompute the discretization-error coefficient from the Barenblatt pair.

The solver's tau_h tolerance is TAU_H_SAFETY * TAU_H_COEFF * h * scale with
TAU_H_COEFF frozen in pme.solver.  This script reproduces the calibration:
the max-norm error against the exact self-similar profile, divided by
h * max|u|, across a range of resolutions.
"""

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
    traj = solver.solve_ball(u0, cfg, g)
    exact = solver.barenblatt(g.centers, 2.0, 2, 2.0, mass_const)
    err = float(np.max(np.abs(traj.final - exact)))
    return err, g.h, float(np.max(exact))


def main():
    print(f"{'J':>6} {'h':>10} {'Linf err':>12} {'err/(h*umax)':>14}")
    worst = 0.0
    for cells in (250, 500, 1000, 2000, 4000):
        err, h, umax = run(cells)
        coeff = err / (h * umax)
        worst = max(worst, coeff)
        print(f"{cells:>6} {h:>10.4g} {err:>12.4e} {coeff:>14.3f}")
    print(f"\nworst observed coefficient: {worst:.3f}")
    print(f"frozen TAU_H_COEFF:         {solver.TAU_H_COEFF:.3f}")
    print(f"safety factor:              {solver.TAU_H_SAFETY:.1f}")
    if worst > solver.TAU_H_COEFF:
        print("WARNING: observed coefficient exceeds the frozen value")


if __name__ == "__main__":
    main()
