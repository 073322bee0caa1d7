"""Command-line scenario runner.

Subcommands: ``geometry`` (comparison constants report), ``barrier-check``
(super/sub/eta certificates), ``solve`` (single-ball run), ``exhaust``
(nested-ball monotonicity), ``blowup`` (staged norm blow-up), ``uniq-check``
(uniqueness-side decay product) and ``sweep`` (parameter sweeps).

Outputs are deterministic (identical bytes for identical config and build)
and written atomically.  Exit codes: 0 success, 2 configuration error,
3 certificate failure, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import barriers, blowup, config as cfgmod, geometry, solver, xlog
from .errors import (
    CertificateError,
    ConfigError,
    DomainError,
    NotApplicableError,
    NotCriticalError,
    PMEError,
    SolverError,
    StageError,
)
from .grid import RadialGrid

logger = logging.getLogger("pme")


@dataclass(frozen=True)
class Scenario:
    """One CLI invocation: target module, config path and output paths."""

    name: str
    target: str
    config: str | None
    outputs: tuple


# -- deterministic atomic output ------------------------------------------------


def _atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, obj):
    _atomic_write(path, _json_text(obj))


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


# -- shared builders -------------------------------------------------------------


def _manifold_args(parser):
    parser.add_argument("--manifold", required=True, choices=sorted(geometry.BUILTIN_FAMILIES))
    parser.add_argument("--dim", type=int, required=True)
    parser.add_argument("--c", type=float, default=None)


def _manifold_from_args(args):
    cfg = {"manifold": args.manifold, "dim": str(args.dim)}
    if args.c is not None:
        cfg["c"] = str(args.c)
    return cfgmod.manifold_from(cfg)


def _solver_config(cfg: dict, m: float, t_end: float) -> solver.SolverConfig:
    boundary_name = cfg.get("boundary", "homogeneous-dirichlet")
    if boundary_name == "homogeneous-dirichlet":
        boundary = solver.HomogeneousDirichlet()
    elif boundary_name == "barrier-dirichlet":
        params = barriers.BarrierParams(
            amplitude=cfgmod._get_float(cfg, "barrier_a", positive=True),
            r=cfgmod._get_float(cfg, "barrier_r", default=2.0),
            horizon=cfgmod._get_float(cfg, "barrier_T", positive=True),
            m=m,
        )
        delta = cfgmod._get_float(cfg, "barrier_delta", default=0.0)
        boundary = solver.BarrierDirichlet(params, delta)
    else:
        raise ConfigError(f"unknown boundary mode {boundary_name!r}")
    dt0 = cfgmod._get_float(cfg, "dt0", positive=True)
    policy = solver.DtPolicy(
        dt0=dt0,
        growth=cfgmod._get_float(cfg, "dt_growth", default=1.25),
        dt_max=cfgmod._get_float(cfg, "dt_max", default=math.inf),
    )
    return solver.SolverConfig(
        m=m,
        dt=policy,
        t_end=t_end,
        boundary=boundary,
        newton_tol=cfgmod._get_float(cfg, "newton_tol", default=1e-10, positive=True),
        newton_max_iter=cfgmod._get_int(cfg, "newton_max_iter", default=30, minimum=1),
        norm_r=cfgmod._get_float(cfg, "norm_r", default=2.0),
        snapshot_stride=cfgmod._get_int(cfg, "snapshot_stride", default=1, minimum=1),
    )


# -- subcommands -----------------------------------------------------------------


def cmd_geometry(args) -> int:
    manifold = _manifold_from_args(args)
    consts = geometry.fit_comparison_constants(
        manifold, rho_max=args.rho_max, n_probe=args.n_probe
    )
    report = consts.as_json_dict()
    report["manifold"] = {"kind": manifold.kind, "dim": manifold.dim, "c": manifold.c}
    write_json(args.report, report)
    logger.info("geometry constants written to %s", args.report)
    return 0


def cmd_barrier_check(args) -> int:
    manifold = _manifold_from_args(args)
    m = args.m
    if m <= 1.0:
        raise ConfigError("the PME exponent must satisfy m > 1")
    grid = barriers.default_certificate_grid(args.rho_max, args.nodes)
    if args.which == "super":
        consts = geometry.fit_comparison_constants(manifold, rho_max=max(10.0, args.rho_max))
        a = barriers.supersolution_amplitude(consts.c_prime, m)
        params = barriers.BarrierParams(amplitude=a, r=2.0, horizon=1.0, m=m)
        report = barriers.certify_supersolution(params, manifold, consts, grid)
        out = report.as_json_dict()
        out["params"] = {"a": a, "r": 2.0, "K": None}
    elif args.which == "sub":
        consts = geometry.fit_comparison_constants(manifold, rho_max=max(10.0, args.rho_max))
        params = barriers.subsolution_params(consts, m)
        report = barriers.certify_subsolution(params, manifold, grid)
        out = report.as_json_dict()
        out["params"] = {"a": params.amplitude, "r": params.r, "K": None}
    else:  # eta
        k = barriers.select_K(args.c2, args.r0)
        eta_params = barriers.EtaBarrierParams(
            decay=k, scale=1.0, horizon=1.0, inner_radius=args.r0, coeff_bound=args.c2
        )
        report = barriers.certify_eta(eta_params, dim=manifold.dim, rho_max=args.rho_max)
        out = report.as_json_dict()
        out["params"] = {"a": None, "r": None, "K": k}
    write_json(args.out, out)
    if not report.passed:
        raise CertificateError(
            f"{args.which} certificate failed: residual {report.min_residual:.3e} "
            f"at rho={report.argmin_rho:.6g}"
        )
    logger.info("%s certificate passed (min residual %.3e)", args.which, report.min_residual)
    return 0


def _load_run(args):
    cfg = cfgmod.parse_config(args.config)
    manifold = cfgmod.manifold_from(cfg)
    m = cfgmod.exponent_from(cfg)
    spec = cfgmod.datum_from(cfg)
    return cfg, manifold, m, spec


def cmd_solve(args) -> int:
    cfg, manifold, m, spec = _load_run(args)
    radius = cfgmod._get_float(cfg, "R", positive=True)
    cells = cfgmod._get_int(cfg, "cells", minimum=3)
    t_end = cfgmod._get_float(cfg, "t_end", positive=True)
    scfg = _solver_config(cfg, m, t_end)
    grid = RadialGrid.uniform(manifold, radius, cells)

    consts = geometry.fit_comparison_constants(manifold)
    datum = spec.datum(m, np.geomspace(1e-3, max(1e3, 10 * radius), 4001))
    et = solver.existence_time(datum, consts, m, r=scfg.norm_r)
    horizon = None
    if not et.global_flag and et.time is not math.inf:
        horizon = et.time
        if t_end >= horizon:
            raise ConfigError(
                f"t_end={t_end:g} reaches the certified horizon T={horizon:g}"
            )

    traj = solver.solve_ball(spec.profile(m), scfg, grid, barrier_horizon=horizon)

    rows = []
    for t, u in zip(traj.times, traj.fields):
        for rho, val in zip(grid.centers, u):
            rows.append((t, rho, val))
    write_csv(args.out, ["t", "rho", "u"], rows)

    norm0 = xlog.log_norm(datum, xlog.LogNorm(scfg.norm_r, m))
    excess = None
    if horizon is not None and norm0 > 0:
        excess = solver.barrier_excess(traj, norm0, horizon, scfg.norm_r, m)
    summary = {
        "log_norm_series": traj.lognorms,
        "tail_ratio_series": traj.tail_ratios,
        "mass_series": traj.masses,
        "times": traj.times,
        "max_barrier_violation": excess,
        "existence_time": None if et.time == math.inf else et.time,
        "existence_time_limit": None if et.limit_time == math.inf else et.limit_time,
        "global_existence": et.global_flag,
        "tau_h": solver.tau_h(grid.h, max(1.0, max(traj.lognorms) * 10.0)),
    }
    write_json(args.summary, summary)
    scale = max(float(np.max(np.abs(f))) for f in traj.fields)
    if excess is not None and excess > solver.tau_h(grid.h, scale):
        raise CertificateError(
            f"barrier sandwich violated by {excess:.3e} (tolerance {solver.tau_h(grid.h, scale):.3e})"
        )
    return 0


def cmd_exhaust(args) -> int:
    cfg, manifold, m, spec = _load_run(args)
    radii = [float(x) for x in args.radii.split(",") if x.strip()]
    cells = cfgmod._get_int(cfg, "cells", minimum=3)
    t_end = cfgmod._get_float(cfg, "t_end", positive=True)
    scfg = _solver_config(cfg, m, t_end)
    rep = solver.exhaust(spec.profile(m), scfg, manifold, radii, cells)
    out = {
        "radii": rep.radii,
        "monotonicity_gap": rep.monotonicity_gap,
        "inner_increments": rep.inner_increments,
        "tau_h": rep.tau,
    }
    write_json(args.out, out)
    if rep.monotonicity_gap > rep.tau:
        raise CertificateError(
            f"exhaustion monotonicity violated: gap {rep.monotonicity_gap:.3e} > {rep.tau:.3e}"
        )
    return 0


def cmd_blowup(args) -> int:
    cfg, manifold, m, spec = _load_run(args)
    consts = geometry.fit_comparison_constants(manifold)
    radius = cfgmod._get_float(cfg, "R", positive=True)
    cells = cfgmod._get_int(cfg, "cells", minimum=3)
    bcfg = blowup.BlowupConfig(
        m=m,
        radius=radius,
        cells=cells,
        threshold_factor=cfgmod._get_float(cfg, "blowup_threshold", default=1e3),
        max_stages=cfgmod._get_int(cfg, "blowup_max_stages", default=600, minimum=1),
        steps_per_stage=cfgmod._get_int(cfg, "steps_per_stage", default=40, minimum=5),
        newton_tol=cfgmod._get_float(cfg, "newton_tol", default=1e-10, positive=True),
        norm_r=cfgmod._get_float(cfg, "norm_r", default=2.0),
    )
    datum = spec.datum(m, np.geomspace(1e-3, 1e6, 4001))

    hook = None
    if args.dump_stages:
        dump_dir = Path(args.dump_stages)

        def hook(n, traj):
            rows = []
            for t, u in zip(traj.times, traj.fields):
                for rho, val in zip(traj.grid.centers, u):
                    rows.append((t, rho, val))
            write_csv(dump_dir / f"stage_{n:04d}.csv", ["t", "rho", "u"], rows)

    ledger = blowup.run_blowup(datum, spec.profile(m), manifold, consts, bcfg, stage_hook=hook)
    ledger.validate()
    write_json(args.ledger, ledger.as_json_dict())
    logger.info(
        "blow-up run: %s after %d stages, tau=%.6g",
        ledger.status,
        len(ledger.stages),
        ledger.tau,
    )
    return 0


def cmd_uniq_check(args) -> int:
    if args.k is None:
        k = barriers.select_K(args.c2, args.r0)
    else:
        k = args.k
    eta_params = barriers.EtaBarrierParams(
        decay=k,
        scale=1.0,
        horizon=max(args.T, 1e-6),
        inner_radius=args.r0,
        coeff_bound=args.c2,
    )
    eta_report = barriers.certify_eta(eta_params, dim=args.dim)
    regime = barriers.decay_regime(args.c_m, k, args.T)
    radii = np.geomspace(10.0, 1000.0, args.table_points)
    rows = []
    for r in radii:
        lf = barriers.log_decay_product(args.c_m, k, args.T, args.m, float(r))
        rows.append((float(r), barriers.decay_product(args.c_m, k, args.T, args.m, float(r)), lf))
    out = {
        "K": k,
        "C_M": args.c_m,
        "T": args.T,
        "critical_T": k / (2.0 * args.c_m),
        "regime": regime,
        "eta_certificate": eta_report.as_json_dict(),
        "F_at_100": barriers.decay_product(args.c_m, k, args.T, args.m, 100.0),
        "logF_at_100": barriers.log_decay_product(args.c_m, k, args.T, args.m, 100.0),
    }
    if args.out:
        write_json(args.out, out)
        write_csv(Path(args.out).with_suffix(".csv"), ["R", "F", "logF"], rows)
    else:
        sys.stdout.write(_json_text(out))
    if not eta_report.passed:
        raise CertificateError("eta barrier inequality failed on the verification grid")
    if regime == "growth":
        raise CertificateError(
            f"smallness condition fails: T={args.T:g} >= K/(2 C_M)={k / (2 * args.c_m):g}"
        )
    if regime == "boundary":
        raise CertificateError("T sits exactly at K/(2 C_M): decay test inconclusive")
    return 0


# -- sweep ------------------------------------------------------------------------


def _sweep_row(payload):
    base, param, value = payload
    cfg = dict(base)
    if param == "b":
        cfg["u0"] = f"log-growth({value})"
    else:
        cfg[param] = str(value)
    try:
        manifold = cfgmod.manifold_from(cfg)
        m = cfgmod.exponent_from(cfg)
        spec = cfgmod.datum_from(cfg)
        consts = geometry.fit_comparison_constants(manifold)
        bcfg = blowup.BlowupConfig(
            m=m,
            radius=cfgmod._get_float(cfg, "R", positive=True),
            cells=cfgmod._get_int(cfg, "cells", minimum=3),
            threshold_factor=cfgmod._get_float(cfg, "blowup_threshold", default=1e3),
            max_stages=cfgmod._get_int(cfg, "blowup_max_stages", default=600, minimum=1),
            steps_per_stage=cfgmod._get_int(cfg, "steps_per_stage", default=40, minimum=5),
        )
        datum = spec.datum(m, np.geomspace(1e-3, 1e6, 4001))
        ledger = blowup.run_blowup(datum, spec.profile(m), manifold, consts, bcfg)
        ledger.validate()
        return {
            "param": param,
            "value": value,
            "status": ledger.status,
            "tau": ledger.tau,
            "T1": ledger.T1,
            "stages": len(ledger.stages),
            "initial_lognorm": ledger.initial_lognorm,
            "final_lognorm": ledger.stages[-1].lognorm,
            "error": "",
        }
    except PMEError as exc:
        return {
            "param": param,
            "value": value,
            "status": "failed",
            "tau": float("nan"),
            "T1": float("nan"),
            "stages": 0,
            "initial_lognorm": float("nan"),
            "final_lognorm": float("nan"),
            "error": str(exc),
        }


def cmd_sweep(args) -> int:
    base = cfgmod.parse_config(args.config)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs a nonempty value grid")
    payloads = [(base, args.param, v) for v in sorted(values)]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_row, payloads))
    else:
        rows = [_sweep_row(p) for p in payloads]
    header = [
        "param",
        "value",
        "status",
        "tau",
        "T1",
        "stages",
        "initial_lognorm",
        "final_lognorm",
        "error",
    ]
    write_csv(args.out, header, [[row[k] for k in header] for row in rows])
    if all(row["status"] == "failed" for row in rows):
        raise SolverError("every sweep row failed")
    return 0


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pme",
        description="Radial porous-medium-equation runs and certificates "
        "on negatively curved model manifolds",
    )
    ap.add_argument("--seed", type=int, default=None, help="reserved; all computations are deterministic")
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geometry", help="fit and report comparison constants")
    _manifold_args(g)
    g.add_argument("--rho-max", type=float, default=1e3)
    g.add_argument("--n-probe", type=int, default=4096)
    g.add_argument("--report", required=True)
    g.set_defaults(func=cmd_geometry)

    b = sub.add_parser("barrier-check", help="certify a barrier inequality")
    _manifold_args(b)
    b.add_argument("--m", type=float, required=True)
    b.add_argument("--which", choices=("super", "sub", "eta"), required=True)
    b.add_argument("--rho-max", type=float, default=1e3)
    b.add_argument("--nodes", type=int, default=10**4)
    b.add_argument("--c2", type=float, default=1.0, help="coefficient bound for eta")
    b.add_argument("--r0", type=float, default=2.0, help="inner radius for eta")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_barrier_check)

    s = sub.add_parser("solve", help="single-ball Cauchy-Dirichlet run")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="trajectory CSV (t,rho,u)")
    s.add_argument("--summary", required=True, help="summary JSON")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exhaust", help="nested-ball exhaustion run")
    e.add_argument("--config", required=True)
    e.add_argument("--radii", required=True, help="comma-separated increasing radii")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_exhaust)

    bl = sub.add_parser("blowup", help="staged norm blow-up run")
    bl.add_argument("--config", required=True)
    bl.add_argument("--ledger", required=True)
    bl.add_argument("--dump-stages", default=None, help="directory for per-stage CSVs")
    bl.set_defaults(func=cmd_blowup)

    u = sub.add_parser("uniq-check", help="uniqueness-side decay certificates")
    u.add_argument("--T", type=float, required=True)
    u.add_argument("--c_m", type=float, required=True)
    u.add_argument("--k", type=float, default=None, help="decay constant; derived from --c2 when omitted")
    u.add_argument("--c2", type=float, default=1.0)
    u.add_argument("--r0", type=float, default=2.0)
    u.add_argument("--m", type=float, default=2.0)
    u.add_argument("--dim", type=int, default=2)
    u.add_argument("--table-points", type=int, default=60)
    u.add_argument("--out", default=None)
    u.set_defaults(func=cmd_uniq_check)

    w = sub.add_parser("sweep", help="parameter sweep of blow-up runs")
    w.add_argument("--config", required=True)
    w.add_argument("--param", required=True, help="swept key ('b' sweeps the log-growth amplitude)")
    w.add_argument("--values", required=True, help="comma-separated values")
    w.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)

    return ap


def run_scenario(scenario: Scenario, args) -> int:
    """Dispatch one scenario; exceptions map to the exit-code contract."""
    logger.info("running scenario %s", scenario)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"pme: configuration error: {exc}", file=sys.stderr)
        return 2
    except (CertificateError, NotApplicableError, NotCriticalError) as exc:
        print(f"pme: certificate failure: {exc}", file=sys.stderr)
        return 3
    except (SolverError, StageError) as exc:
        print(f"pme: solver failure: {exc}", file=sys.stderr)
        return 4


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    outputs = tuple(
        str(getattr(args, name))
        for name in ("report", "out", "summary", "ledger")
        if getattr(args, name, None)
    )
    scenario = Scenario(
        name=args.command,
        target=args.command,
        config=getattr(args, "config", None),
        outputs=outputs,
    )
    return run_scenario(scenario, args)


if __name__ == "__main__":
    sys.exit(main())
