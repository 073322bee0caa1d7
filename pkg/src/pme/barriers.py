"""Explicit super/subsolution profiles and their grid certificates.

All barriers share the radial profile W(rho) = a [log(r^2 + rho^2)]^(1/(m-1))
and the separable time factor (1 - t/T)^(-1/(m-1)), which blows up at t = T.
A small amplitude (from the upper drift bound) makes the separable function a
supersolution; a large amplitude (from the lower drift bound, available on
quadratically pinched models) makes it a subsolution.  The backward-in-time
exponential barrier ``eta`` and the decay product F(R) drive the
uniqueness-side certificates.

Certificates evaluate the relevant differential inequality in closed form on
a radius grid and report the worst residual relative to the local magnitude,
since the profiles span many orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NotApplicableError
from .geometry import ComparisonConstants, ModelManifold

RESIDUAL_TOL = 1e-10
ETA_TOL = 1e-12
K_MARGIN = 0.1


@dataclass(frozen=True)
class BarrierParams:
    """Separable barrier data: amplitude, weight offset, blow-up horizon."""

    amplitude: float
    r: float
    horizon: float
    m: float

    def __post_init__(self):
        if self.amplitude <= 0 or self.horizon <= 0:
            raise DomainError("amplitude and horizon must be positive")
        if self.r < 2.0:
            raise DomainError("weight offset r must be >= 2")
        if self.m <= 1.0:
            raise DomainError("m must be > 1")

    def log_weight(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.log(self.r**2 + rho**2)

    def profile_unit(self, rho):
        """Unit-horizon profile W(rho) = a [log(r^2+rho^2)]^(1/(m-1))."""
        return self.amplitude * self.log_weight(rho) ** (1.0 / (self.m - 1.0))

    def profile(self, rho):
        """Horizon-scaled profile W / T^(1/(m-1))."""
        return self.profile_unit(rho) / self.horizon ** (1.0 / (self.m - 1.0))

    def separable(self, rho, t):
        """(1 - t/T)^(-1/(m-1)) times the horizon-scaled profile."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t >= self.horizon):
            raise DomainError("t must lie in [0, horizon)")
        factor = (1.0 - t / self.horizon) ** (-1.0 / (self.m - 1.0))
        return factor * self.profile(rho)


def supersolution_amplitude(c_prime: float, m: float) -> float:
    """Amplitude making the separable profile a supersolution:
    a = [2m (C' + (m+1)/(m-1))]^(-1/(m-1))."""
    if c_prime <= 0:
        raise DomainError("c_prime must be positive")
    if m <= 1:
        raise DomainError("m must be > 1")
    return (2.0 * m * (c_prime + (m + 1.0) / (m - 1.0))) ** (-1.0 / (m - 1.0))


def wm_radial_derivatives(p: BarrierParams, rho):
    """First and second radial derivatives of W^m for the unit profile."""
    rho = np.asarray(rho, dtype=float)
    m = p.m
    L = p.log_weight(rho)
    s = p.r**2 + rho**2
    base = p.amplitude**m * (2.0 * m / (m - 1.0)) * L ** (1.0 / (m - 1.0)) / s
    first = base * rho
    bracket = (
        1.0
        - 2.0 * rho**2 / s
        + 2.0 * rho**2 / ((m - 1.0) * s * L)
    )
    second = base * bracket
    return first, second


def laplacian_wm(p: BarrierParams, manifold: ModelManifold, rho):
    """Radial Laplacian of W^m: (W^m)'' + m(rho) (W^m)'.

    The drift term stays bounded as rho -> 0 because (W^m)' vanishes
    linearly there.
    """
    rho_arr = np.asarray(rho, dtype=float)
    first, second = wm_radial_derivatives(p, rho_arr)
    val = second + manifold.drift(rho_arr) * first
    return float(val) if np.isscalar(rho) else val


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of a grid certificate: worst scaled residual and location."""

    passed: bool
    min_residual: float
    argmin_rho: float
    nodes: int
    params: dict
    details: dict

    def as_json_dict(self) -> dict:
        return {
            "pass": bool(self.passed),
            "min_residual": self.min_residual,
            "argmin_rho": self.argmin_rho,
            "nodes": self.nodes,
            "params": self.params,
            "details": self.details,
        }


def default_certificate_grid(rho_max: float = 1e3, nodes: int = 10**4) -> np.ndarray:
    return np.geomspace(1e-3, rho_max, nodes)


def certify_supersolution(
    p: BarrierParams,
    manifold: ModelManifold,
    consts: Optional[ComparisonConstants] = None,
    rho_grid: Optional[np.ndarray] = None,
) -> CertificateReport:
    """Certify W >= (m-1) Laplacian(W^m) for the unit-horizon profile.

    Residuals are scaled by |W| + |(m-1) Lap(W^m)| per node.  When
    comparison constants are supplied, the sufficient amplitude condition
    2m a^(m-1) [C'(1+rho^2) + (m+1)/(m-1)] <= r^2 + rho^2 is checked too.
    """
    rho = default_certificate_grid() if rho_grid is None else np.asarray(rho_grid)
    w = p.profile_unit(rho)
    lap = (p.m - 1.0) * laplacian_wm(p, manifold, rho)
    scale = np.abs(w) + np.abs(lap)
    res = (w - lap) / scale
    i = int(np.argmin(res))
    details = {}
    ok = bool(res[i] >= -RESIDUAL_TOL)
    if consts is not None:
        lhs = (
            2.0
            * p.m
            * p.amplitude ** (p.m - 1.0)
            * (consts.c_prime * (1.0 + rho**2) + (p.m + 1.0) / (p.m - 1.0))
        )
        margin = (p.r**2 + rho**2) - lhs
        j = int(np.argmin(margin))
        details["amplitude_condition_ok"] = bool(margin[j] >= 0.0)
        details["amplitude_condition_min_margin"] = float(margin[j])
        ok = ok and details["amplitude_condition_ok"]
    return CertificateReport(
        passed=ok,
        min_residual=float(res[i]),
        argmin_rho=float(rho[i]),
        nodes=rho.size,
        params={"a": p.amplitude, "r": p.r, "m": p.m},
        details=details,
    )


def certify_subsolution(
    p: BarrierParams,
    manifold: ModelManifold,
    rho_grid: Optional[np.ndarray] = None,
) -> CertificateReport:
    """Certify W <= (m-1) Laplacian(W^m) for the unit-horizon profile."""
    rho = default_certificate_grid() if rho_grid is None else np.asarray(rho_grid)
    w = p.profile_unit(rho)
    lap = (p.m - 1.0) * laplacian_wm(p, manifold, rho)
    scale = np.abs(w) + np.abs(lap)
    res = (lap - w) / scale
    i = int(np.argmin(res))
    return CertificateReport(
        passed=bool(res[i] >= -RESIDUAL_TOL),
        min_residual=float(res[i]),
        argmin_rho=float(rho[i]),
        nodes=rho.size,
        params={"a": p.amplitude, "r": p.r, "m": p.m},
        details={},
    )


def _lower_envelope_min(c_dd: float, r: float) -> float:
    """Min over rho >= 0 of (C''/2)(1+rho^2) + 1 - 2 rho^2/(r^2+rho^2)."""
    # Critical point of h(x) = (C''/2)(1+x) + 1 - 2x/(r^2+x), x = rho^2.
    x_star = math.sqrt(4.0 * r * r / c_dd) - r * r
    candidates = [0.0]
    if x_star > 0:
        candidates.append(x_star)
    vals = [
        c_dd / 2.0 * (1.0 + x) + 1.0 - 2.0 * x / (r * r + x) for x in candidates
    ]
    # The function grows linearly in x, so the tail cannot undercut.
    return min(vals)


def subsolution_params(
    consts: ComparisonConstants,
    m: float,
    rho_grid: Optional[np.ndarray] = None,
    r_max: int = 1024,
) -> BarrierParams:
    """Smallest integer weight offset and matching large amplitude.

    Scans r = 2, 3, ... for the first offset with
    C''(1+rho^2) + 1 - 2 rho^2/(r^2+rho^2) >= (C''/2)(1+rho^2) for all rho
    (closed-form minimum double-checked on the probe grid), then sets
    a = (r^2 / (C'' m))^(1/(m-1)) exactly.  Horizon is left at 1.
    """
    if consts.c_double_prime is None:
        raise NotApplicableError(
            "model carries no lower quadratic drift certificate"
        )
    c_dd = consts.c_double_prime
    rho = default_certificate_grid(1e3, 4096) if rho_grid is None else np.asarray(rho_grid)
    x = rho**2
    for r in range(2, r_max + 1):
        if _lower_envelope_min(c_dd, float(r)) < 0.0:
            continue
        vals = c_dd / 2.0 * (1.0 + x) + 1.0 - 2.0 * x / (r * r + x)
        if np.min(vals) >= 0.0:
            a = (r * r / (c_dd * m)) ** (1.0 / (m - 1.0))
            return BarrierParams(amplitude=a, r=float(r), horizon=1.0, m=m)
    raise NotApplicableError("no admissible weight offset r found")


def shifted_subsolution(p: BarrierParams, delta: float, rho):
    """(max(W_{T,r}^m - delta, 0))^(1/m): vertical shift in pressure scale.

    Clipped to zero where the shift exceeds W^m; the subsolution inequality
    is preserved on the unclipped region for every delta >= 0.
    """
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    rho_arr = np.asarray(rho, dtype=float)
    wm = p.profile(rho_arr) ** p.m
    val = np.maximum(wm - delta, 0.0) ** (1.0 / p.m)
    return float(val) if np.isscalar(rho) else val


def certify_shifted_subsolution(
    p: BarrierParams,
    delta: float,
    manifold: ModelManifold,
    rho_grid: Optional[np.ndarray] = None,
) -> CertificateReport:
    """Certify V <= (m-1) T Laplacian(V^m) on the region where W^m > delta."""
    rho = default_certificate_grid() if rho_grid is None else np.asarray(rho_grid)
    wm = p.profile(rho) ** p.m
    mask = wm > delta
    if not np.any(mask):
        return CertificateReport(
            True, 0.0, float("nan"), 0, {"delta": delta}, {"active_nodes": 0}
        )
    r = rho[mask]
    v = shifted_subsolution(p, delta, r)
    # Laplacian(V^m) = Laplacian(W_{T,r}^m) on the unclipped region.
    lap = laplacian_wm(p, manifold, r) / p.horizon ** (p.m / (p.m - 1.0))
    rhs = (p.m - 1.0) * p.horizon * lap
    scale = np.abs(v) + np.abs(rhs)
    res = (rhs - v) / scale
    i = int(np.argmin(res))
    return CertificateReport(
        passed=bool(res[i] >= -RESIDUAL_TOL),
        min_residual=float(res[i]),
        argmin_rho=float(r[i]),
        nodes=int(mask.sum()),
        params={"a": p.amplitude, "r": p.r, "T": p.horizon, "m": p.m, "delta": delta},
        details={"active_nodes": int(mask.sum())},
    )


# -- backward uniqueness barrier ----------------------------------------------


@dataclass(frozen=True)
class EtaBarrierParams:
    """Backward barrier eta = scale * exp(-K/(2T-t) * rho^2/log rho)."""

    decay: float  # K
    scale: float  # lambda
    horizon: float  # T
    inner_radius: float  # R0 >= 2
    coeff_bound: float  # C2

    def __post_init__(self):
        if self.decay <= 0 or self.scale <= 0 or self.horizon <= 0:
            raise DomainError("decay, scale and horizon must be positive")
        if self.inner_radius < 2.0:
            raise DomainError("inner radius must be >= 2")
        if self.coeff_bound <= 0:
            raise DomainError("coefficient bound must be positive")


def select_K(
    c2: float,
    inner_radius: float = 2.0,
    margin: float = K_MARGIN,
    rho_max: float = 1e6,
    nodes: int = 20001,
) -> float:
    """Largest safe decay constant: K = 1 / ((1+margin) C2 G*).

    G* = sup_{rho >= R0} log(2+rho) (2 log rho - 1)^2 / (log rho)^3 is taken
    as the max of a grid scan and its analytic limit 4 at infinity (the
    supremum is approached from below along the tail).
    """
    if c2 <= 0:
        raise DomainError("C2 must be positive")
    if inner_radius < 2.0:
        raise DomainError("inner radius must be >= 2")
    rho = np.geomspace(inner_radius, rho_max, nodes)
    g = np.log(2.0 + rho) * (2.0 * np.log(rho) - 1.0) ** 2 / np.log(rho) ** 3
    g_star = max(float(np.max(g)), 4.0)
    return 1.0 / ((1.0 + margin) * c2 * g_star)


def eta(p: EtaBarrierParams, rho, t):
    """Evaluate the backward barrier for rho > R0, 0 <= t <= T."""
    rho_arr = np.asarray(rho, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(rho_arr <= p.inner_radius):
        raise DomainError("eta is defined for rho > inner_radius")
    if np.any(t_arr < 0) or np.any(t_arr > p.horizon):
        raise DomainError("t must lie in [0, T]")
    arg = -p.decay / (2.0 * p.horizon - t_arr) * rho_arr**2 / np.log(rho_arr)
    val = p.scale * np.exp(arg)
    return float(val) if (np.isscalar(rho) and np.isscalar(t)) else val


def eta_derivatives(p: EtaBarrierParams, rho, t):
    """(eta, eta_t, eta_rho, eta_rhorho) in closed form."""
    rho = np.asarray(rho, dtype=float)
    t = np.asarray(t, dtype=float)
    e = eta(p, rho, t)
    tau = 2.0 * p.horizon - t
    L = np.log(rho)
    e_t = -p.decay / tau**2 * rho**2 / L * e
    e_r = -p.decay / tau * rho * (2.0 * L - 1.0) / L**2 * e
    poly = 2.0 * L**3 - 3.0 * L**2 + 2.0 * L
    e_rr = (
        -p.decay
        * e
        / (tau * L**4)
        * (poly - p.decay / tau * rho**2 * (2.0 * L - 1.0) ** 2)
    )
    return e, e_t, e_r, e_rr


def certify_eta(
    p: EtaBarrierParams,
    dim: int = 2,
    rho_max: float = 1e4,
    n_rho: int = 100,
    n_t: int = 100,
) -> CertificateReport:
    """Verify eta_t + C2 log(2+rho) * Laplacian(eta) <= 0 on a (rho, t) grid.

    The Laplacian uses the worst-case drift floor (N-1)/rho; since
    eta_rho < 0, any larger drift only helps.  Only nodes where the
    Laplacian is positive are binding (elsewhere eta_t < 0 settles it).
    """
    rho = np.geomspace(p.inner_radius * (1.0 + 1e-6), rho_max, n_rho)
    ts = np.linspace(0.0, p.horizon * (1.0 - 1e-6), n_t)
    R, T = np.meshgrid(rho, ts, indexing="ij")
    e, e_t, e_r, e_rr = eta_derivatives(p, R, T)
    lap = e_rr + (dim - 1.0) / R * e_r
    coeff = p.coeff_bound * np.log(2.0 + R)
    lhs = e_t + coeff * np.maximum(lap, 0.0)
    scale = np.abs(e_t) + coeff * (np.abs(e_rr) + (dim - 1.0) / R * np.abs(e_r))
    scale = np.maximum(scale, 1e-300)
    res = -lhs / scale
    # Nodes where eta underflowed to zero carry no information; the
    # inequality holds there trivially.
    live = e > 0.0
    res = np.where(live, res, np.inf)
    i, j = np.unravel_index(int(np.argmin(res)), res.shape)
    signs_ok = bool(np.all(e_t[live] < 0) and np.all(e_r[live] < 0))
    return CertificateReport(
        passed=bool(res[i, j] >= -ETA_TOL),
        min_residual=float(res[i, j]),
        argmin_rho=float(R[i, j]),
        nodes=res.size,
        params={
            "K": p.decay,
            "lambda": p.scale,
            "T": p.horizon,
            "R0": p.inner_radius,
            "C2": p.coeff_bound,
        },
        details={"argmin_t": float(T[i, j]), "signs_ok": signs_ok},
    )


# -- uniqueness decay product ---------------------------------------------------


def log_decay_product(c_m: float, decay: float, horizon: float, m: float, radius: float) -> float:
    """log F(R) for the boundary-flux decay product.

    F(R) = (log R)^(m/(m-1)) exp{C_M R^2/log R - K/(2T) (R-1)^2/log(R-1)}.
    """
    if radius < 3.0:
        raise DomainError("decay product is evaluated for R >= 3")
    if min(c_m, decay, horizon) <= 0 or m <= 1:
        raise DomainError("constants must be positive with m > 1")
    r = float(radius)
    return (
        m / (m - 1.0) * math.log(math.log(r))
        + c_m * r * r / math.log(r)
        - decay / (2.0 * horizon) * (r - 1.0) ** 2 / math.log(r - 1.0)
    )


def decay_product(c_m: float, decay: float, horizon: float, m: float, radius: float) -> float:
    """F(R); overflows to inf / underflows to 0 outside float range."""
    lf = log_decay_product(c_m, decay, horizon, m, radius)
    if lf > 745.0:
        return float("inf")
    if lf < -745.0:
        return 0.0
    return math.exp(lf)


def decay_regime(c_m: float, decay: float, horizon: float, rel_tol: float = 1e-12) -> str:
    """'decay' when T < K/(2 C_M), 'growth' when above, 'boundary' at the knife edge."""
    critical = decay / (2.0 * c_m)
    if abs(horizon - critical) <= rel_tol * critical:
        return "boundary"
    return "decay" if horizon < critical else "growth"
