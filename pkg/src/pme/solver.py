"""Implicit finite-volume solver for the radial porous medium equation.

The conservative form on a model manifold is
u_t = psi^{1-N} (psi^{N-1} (u^m)_rho)_rho with u^m := |u|^{m-1} u; fluxes are
two-point differences of v = u^m across cell faces, so the discrete mass
balance is exact and the scheme is monotone (ordered data stay ordered).

Each step solves the nonlinear cell balance implicitly with a damped Newton
iteration on the cell values u; the flux nonlinearity enters through v(u)
with dv/du = m(|u|^{m-1} + eps) regularized at the degenerate zero set.  A
rejected step is retried on two half steps, recursively, so ``step`` always
advances by exactly the requested increment or raises.

Boundary conditions at rho = R: homogeneous Dirichlet, or the time-dependent
trace of a shifted separable subsolution (used by the blow-up iteration);
values are imposed at the new time level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from .barriers import BarrierParams, shifted_subsolution, supersolution_amplitude
from .errors import DomainError, SolverError
from .geometry import ComparisonConstants, ModelManifold
from .grid import RadialGrid
from .xlog import LimsupEstimate, LogNorm, RadialDatum, limsup_ratio, log_norm

JACOBIAN_EPS = 1e-12
MAX_HALVINGS = 40

# Discretization-error coefficient, calibrated once on the Euclidean
# Barenblatt pair (scripts/calibrate_tau.py): max-norm error stays below
# coeff * h * max|u| at dt = 0.5 h for J in [250, 4000].  tau_h carries a
# 4x safety factor on top.
TAU_H_COEFF = 0.35
TAU_H_SAFETY = 4.0


def tau_h(h: float, scale: float = 1.0) -> float:
    """Discretization tolerance C*h, scaled by the solution magnitude."""
    return TAU_H_SAFETY * TAU_H_COEFF * h * scale


# -- boundary modes -----------------------------------------------------------


@dataclass(frozen=True)
class HomogeneousDirichlet:
    def value(self, t: float, radius: float) -> float:
        return 0.0

    label = "homogeneous-dirichlet"


@dataclass(frozen=True)
class BarrierDirichlet:
    """Trace of the shifted separable subsolution at the outer radius."""

    params: BarrierParams
    delta: float = 0.0

    def value(self, t: float, radius: float) -> float:
        p = self.params
        base = float(shifted_subsolution(p, self.delta, radius))
        return (1.0 - t / p.horizon) ** (-1.0 / (p.m - 1.0)) * base

    label = "barrier-dirichlet"


@dataclass(frozen=True)
class DtPolicy:
    dt0: float
    growth: float = 1.25
    dt_max: float = math.inf
    # near a barrier horizon T the step is capped at barrier_cap * (T - t)
    barrier_cap: float = 0.01

    def __post_init__(self):
        if self.dt0 <= 0 or self.growth < 1.0:
            raise DomainError("dt0 must be positive and growth >= 1")


@dataclass(frozen=True)
class SolverConfig:
    m: float
    dt: DtPolicy
    t_end: float
    boundary: Union[HomogeneousDirichlet, BarrierDirichlet] = HomogeneousDirichlet()
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    norm_r: float = 2.0
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.m <= 1.0:
            raise DomainError("m must be > 1")
        if self.newton_tol <= 0 or self.t_end <= 0:
            raise DomainError("tolerances and t_end must be positive")


@dataclass
class Trajectory:
    grid: RadialGrid
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    lognorms: list = field(default_factory=list)
    # grid-window estimate of |u|/(log rho)^(1/(m-1)) over the outer half of
    # the ball; a proxy for the asymptotic ratio, not a true limit
    tail_ratios: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    boundary_outflow: list = field(default_factory=list)  # per recorded interval

    def record(self, t, u, norm: LogNorm, outflow: float):
        self.times.append(float(t))
        self.fields.append(u.copy())
        w = norm.weight(self.grid.centers)
        self.lognorms.append(float(np.max(np.abs(u) / w)))
        outer = self.grid.centers >= max(self.grid.radius / 2.0, 2.0)
        if np.any(outer):
            r = self.grid.centers[outer]
            ratio = np.abs(u[outer]) / np.log(r) ** (1.0 / (norm.m - 1.0))
            self.tail_ratios.append(float(np.max(ratio)))
        else:
            self.tail_ratios.append(0.0)
        self.masses.append(self.grid.mass(u))
        self.boundary_outflow.append(float(outflow))

    @property
    def final(self) -> np.ndarray:
        return self.fields[-1]


def odd_power(u: np.ndarray, m: float) -> np.ndarray:
    """Signed power |u|^{m-1} u."""
    return np.sign(u) * np.abs(u) ** m


# -- single implicit step -----------------------------------------------------


def _newton_solve(u_old, v_b, dt, grid, m, tol, max_iter):
    """Solve the implicit cell balance; returns (u, converged, residual)."""
    cm = dt * grid.coeff_minus
    cp = dt * grid.coeff_plus
    n = u_old.size
    u = u_old.copy()
    uscale = max(1.0, float(np.max(np.abs(u_old))), abs(v_b) ** (1.0 / m))

    def residual(u):
        v = odd_power(u, m)
        right = np.empty(n)
        right[:-1] = v[1:]
        right[-1] = v_b
        left = np.empty(n)
        left[0] = 0.0  # never used: coeff_minus[0] = 0
        left[1:] = v[:-1]
        return (u - u_old) - (cp * (right - v) - cm * (v - left))

    g = residual(u)
    g_norm = float(np.max(np.abs(g)))
    for _ in range(max_iter):
        if g_norm <= tol * uscale:
            return u, True, g_norm
        dv = m * (np.abs(u) ** (m - 1.0) + JACOBIAN_EPS)
        ab = np.zeros((3, n))
        ab[1, :] = 1.0 + (cp + cm) * dv
        ab[0, 1:] = -cp[:-1] * dv[1:]  # superdiagonal
        ab[2, :-1] = -cm[1:] * dv[:-1]  # subdiagonal
        try:
            delta = solve_banded((1, 1), ab, -g)
        except Exception:
            return u, False, g_norm
        lam = 1.0
        while lam > 2.0**-30:
            g_new_norm = float(np.max(np.abs(residual(u + lam * delta))))
            if g_new_norm < (1.0 - 0.25 * lam) * g_norm or g_new_norm <= tol * uscale:
                break
            lam *= 0.5
        u = u + lam * delta
        g = residual(u)
        g_norm = float(np.max(np.abs(g)))
    return u, g_norm <= tol * uscale, g_norm


def step(
    u: np.ndarray,
    t: float,
    dt: float,
    grid: RadialGrid,
    cfg: SolverConfig,
) -> tuple[np.ndarray, float]:
    """Advance exactly dt, splitting into half steps when Newton stalls.

    Returns the new field and the accumulated boundary outflow (in the
    grid's scaled mass units) over the increment.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if not np.all(np.isfinite(u)):
        raise SolverError("non-finite field entering step")
    pending = [(t, dt, 0)]
    outflow = 0.0
    while pending:
        t0, d, depth = pending.pop()
        if depth > MAX_HALVINGS:
            raise SolverError(
                f"Newton failed after {MAX_HALVINGS} halvings at t={t0:.6g}"
            )
        ub = cfg.boundary.value(t0 + d, grid.radius)
        v_b = math.copysign(abs(ub) ** cfg.m, ub)
        u_new, ok, res = _newton_solve(
            u, v_b, d, grid, cfg.m, cfg.newton_tol, cfg.newton_max_iter
        )
        if not ok:
            pending.append((t0 + d / 2.0, d / 2.0, depth + 1))
            pending.append((t0, d / 2.0, depth + 1))
            continue
        outflow += -d * grid.boundary_flux_coeff * (
            v_b - float(odd_power(u_new[-1:], cfg.m)[0])
        )
        u = u_new
    return u, outflow


# -- trajectories -------------------------------------------------------------


def _initial_values(u0, grid: RadialGrid) -> np.ndarray:
    if callable(u0):
        return np.asarray(u0(grid.centers), dtype=float)
    arr = np.asarray(u0, dtype=float)
    if arr.shape != grid.centers.shape:
        raise DomainError("initial data shape does not match the grid")
    return arr.copy()


def solve_ball(
    u0,
    cfg: SolverConfig,
    grid: RadialGrid,
    barrier_horizon: Optional[float] = None,
) -> Trajectory:
    """Integrate on the ball up to t_end with the configured step policy.

    ``barrier_horizon`` caps the step near a barrier blow-up time T; when the
    boundary mode is a barrier, its own horizon is enforced as well.
    """
    horizons = [barrier_horizon] if barrier_horizon else []
    if isinstance(cfg.boundary, BarrierDirichlet):
        horizons.append(cfg.boundary.params.horizon)
    if horizons and cfg.t_end >= min(horizons):
        raise DomainError("t_end must stay below the barrier horizon")

    u = _initial_values(u0, grid)
    norm = LogNorm(cfg.norm_r, cfg.m)
    traj = Trajectory(grid=grid)
    traj.record(0.0, u, norm, 0.0)

    t = 0.0
    dt = cfg.dt.dt0
    k = 0
    pending_outflow = 0.0
    while t < cfg.t_end - 1e-14 * cfg.t_end:
        d = min(dt, cfg.t_end - t)
        for T in horizons:
            d = min(d, cfg.dt.barrier_cap * (T - t))
        u, out = step(u, t, d, grid, cfg)
        t += d
        k += 1
        pending_outflow += out
        if k % cfg.snapshot_stride == 0 or t >= cfg.t_end - 1e-14 * cfg.t_end:
            traj.record(t, u, norm, pending_outflow)
            pending_outflow = 0.0
        dt = min(dt * cfg.dt.growth, cfg.dt.dt_max)
    return traj


@dataclass
class ExhaustReport:
    radii: list
    trajectories: list
    monotonicity_gap: float  # max over shared cells/times of u_Rk - u_R(k+1)
    inner_increments: list  # sup on the inner ball of successive differences
    tau: float  # discretization tolerance used


def exhaust(
    u0,
    cfg: SolverConfig,
    manifold: ModelManifold,
    radii: Sequence[float],
    cells_first: int,
) -> ExhaustReport:
    """Solve on nested balls and report the exhaustion monotonicity gap.

    All levels share the cell width of the first radius, so grids are nested
    cell-by-cell and time grids coincide (the growth policy is a function of
    the step index only; internal halvings do not alter recorded times).
    """
    radii = list(radii)
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise DomainError("need at least 3 strictly increasing radii")
    h = radii[0] / cells_first
    grids = []
    for R in radii:
        n = R / h
        if abs(n - round(n)) > 1e-9:
            raise DomainError(f"radius {R} is not an integer multiple of h={h}")
        grids.append(RadialGrid.uniform(manifold, R, int(round(n))))

    trajs = [solve_ball(u0, cfg, g) for g in grids]
    times = trajs[0].times
    for tr in trajs[1:]:
        if len(tr.times) != len(times) or any(
            abs(a - b) > 1e-12 * max(1.0, a) for a, b in zip(times, tr.times)
        ):
            raise SolverError("time grids diverged across exhaustion levels")

    gap = -math.inf
    for k in range(len(radii) - 1):
        sl = grids[k + 1].restriction_slice(radii[k])
        for a, b in zip(trajs[k].fields, trajs[k + 1].fields):
            gap = max(gap, float(np.max(a - b[sl])))

    inner = grids[0].restriction_slice(radii[0] / 2.0)
    increments = []
    for k in range(len(radii) - 1):
        diff = max(
            float(np.max(np.abs(trajs[k + 1].fields[i][inner] - trajs[k].fields[i][inner])))
            for i in range(len(times))
        )
        increments.append(diff)

    scale = max(1.0, max(float(np.max(np.abs(tr.final))) for tr in trajs))
    return ExhaustReport(
        radii=radii,
        trajectories=trajs,
        monotonicity_gap=gap,
        inner_increments=increments,
        tau=tau_h(h, scale),
    )


# -- existence time -----------------------------------------------------------


@dataclass(frozen=True)
class ExistenceTime:
    """Certified existence horizon a^{m-1} ||u0||^{1-m} and its r->inf limit."""

    time: float  # may be inf
    r: float
    limit_time: float  # horizon from the norm limit (inf for bounded data)
    global_flag: bool
    amplitude: float


def existence_time(
    u0: RadialDatum,
    consts: ComparisonConstants,
    m: float,
    r: float = 2.0,
) -> ExistenceTime:
    a = supersolution_amplitude(consts.c_prime, m)
    norm = log_norm(u0, LogNorm(r, m))
    est: LimsupEstimate = limsup_ratio(u0, m=m)
    lim_norm = est.value * 2.0 ** (-1.0 / (m - 1.0))
    if norm == 0.0:
        return ExistenceTime(math.inf, r, math.inf, True, a)
    time = a ** (m - 1.0) * norm ** (1.0 - m)
    if lim_norm == 0.0:
        return ExistenceTime(time, r, math.inf, True, a)
    limit_time = a ** (m - 1.0) * lim_norm ** (1.0 - m)
    return ExistenceTime(time, r, limit_time, False, a)


# -- barrier sandwich audit -----------------------------------------------------


def barrier_excess(
    traj: Trajectory, norm0: float, horizon: float, r: float, m: float
) -> float:
    """Worst signed excess of |u| over the separable bound along the run.

    Negative values mean the trajectory stays strictly inside the envelope
    (1 - t/T)^(-1/(m-1)) * norm0 * weight(rho).
    """
    w = LogNorm(r, m).weight(traj.grid.centers)
    worst = -math.inf
    for t, u in zip(traj.times, traj.fields):
        bound = (1.0 - t / horizon) ** (-1.0 / (m - 1.0)) * norm0 * w
        worst = max(worst, float(np.max(np.abs(u) - bound)))
    return worst


# -- classical self-similar oracle ---------------------------------------------


def barenblatt(rho, t, dim: int, m: float, mass_const: float):
    """Euclidean self-similar source solution (external classical oracle).

    U(rho, t) = t^-alpha (C - k rho^2 t^(-2 beta))_+^(1/(m-1)) with
    alpha = N/(N(m-1)+2), beta = alpha/N, k = alpha(m-1)/(2mN).
    """
    rho = np.asarray(rho, dtype=float)
    alpha = dim / (dim * (m - 1.0) + 2.0)
    beta = alpha / dim
    k = alpha * (m - 1.0) / (2.0 * m * dim)
    core = mass_const - k * rho**2 * t ** (-2.0 * beta)
    return t ** (-alpha) * np.maximum(core, 0.0) ** (1.0 / (m - 1.0))


def barenblatt_support_radius(t, dim: int, m: float, mass_const: float) -> float:
    alpha = dim / (dim * (m - 1.0) + 2.0)
    beta = alpha / dim
    k = alpha * (m - 1.0) / (2.0 * m * dim)
    return math.sqrt(mass_const / k) * t**beta
