"""Rotationally symmetric model manifolds and their comparison geometry.

A model manifold is described by a dimension N >= 2 and a warping function
psi with psi(0) = 0, psi'(0) = 1 and psi > 0 on (0, inf); convexity of psi
is equivalent to nonpositive sectional curvature.  Everything downstream
(radial Laplacian drift, curvature profiles, sphere volumes, certified
comparison constants) reduces to scalar functions of the radius rho.

Built-in families carry closed-form derivative *ratios* psi'/psi and
psi''/psi and a closed-form log psi.  Ratios and log-values stay finite even
where psi itself overflows double precision (the quadratically warped family
reaches exp(c rho^2)), so all hot paths work in ratio/log space.

Suprema/infima over the noncompact radius range are certified on a geometric
probe grid with a multiplicative safety margin, combined with per-family
analytic limits at rho -> 0 and rho -> infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, InvalidManifoldError, NotCriticalError

# Safety margin applied to grid extrema when certifying constants.
FIT_MARGIN = 1e-3
# Probe radii used for class-A membership checks (deviations must shrink
# along this sequence and land within CLASS_A_TOL at the last probe).
CLASS_A_PROBES = (1e-2, 1e-3, 1e-4)
CLASS_A_TOL = 1e-4
# Relative step for difference-quotient derivatives of user-supplied psi.
FD_STEP = 1e-5


def sphere_area(dim: int) -> float:
    """Surface area of the unit (dim-1)-sphere, 2 pi^(N/2) / Gamma(N/2)."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def log_sphere_area(dim: int) -> float:
    return math.log(2.0) + (dim / 2.0) * math.log(math.pi) - gammaln(dim / 2.0)


@dataclass(frozen=True)
class CurvatureSample:
    """Sectional curvature of radial 2-planes and radial Ricci curvature."""

    sectional: np.ndarray | float
    ricci_radial: np.ndarray | float


def _fd1(f, rho):
    h = FD_STEP * np.maximum(1.0, rho)
    return (f(rho + h) - f(rho - h)) / (2.0 * h)


def _fd2(f, rho):
    h = FD_STEP * np.maximum(1.0, rho)
    return (f(rho + h) - 2.0 * f(rho) + f(rho - h)) / h**2


def _as_longdouble(rho):
    return np.asarray(rho, dtype=np.longdouble)


@dataclass(frozen=True, eq=False)
class ModelManifold:
    """Warped-product model: metric d rho^2 + psi(rho)^2 d theta^2."""

    dim: int
    kind: str
    c: Optional[float]
    psi: Callable[[np.ndarray], np.ndarray]
    dpsi: Callable[[np.ndarray], np.ndarray]
    d2psi: Callable[[np.ndarray], np.ndarray]
    log_psi: Callable[[np.ndarray], np.ndarray]
    # psi'/psi and psi''/psi; overflow-safe closed forms for built-ins.
    ratio1: Callable[[np.ndarray], np.ndarray]
    ratio2: Callable[[np.ndarray], np.ndarray]
    # Analytic limits of rho*m(rho)/((N-1)(1+rho^2)) etc.; None means unknown
    # (user-supplied psi) and triggers grid-divergence heuristics instead.
    tail_limits: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidManifoldError("dimension must be >= 2")

    # -- pointwise geometry ------------------------------------------------

    def _check_rho(self, rho):
        arr = np.asarray(rho, dtype=float)
        if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
            raise DomainError("rho must be positive and finite")
        return arr

    def drift(self, rho):
        """Radial Laplacian drift m(rho) = (N-1) psi'(rho)/psi(rho)."""
        arr = self._check_rho(rho)
        val = (self.dim - 1) * np.asarray(self.ratio1(arr), dtype=float)
        if not np.all(np.isfinite(val)):
            raise InvalidManifoldError("psi'/psi is not finite on the requested radii")
        return float(val) if np.isscalar(rho) else val

    def curvature(self, rho):
        """Sectional curvature -psi''/psi and radial Ricci (N-1) times it."""
        arr = self._check_rho(rho)
        sec = -np.asarray(self.ratio2(arr), dtype=float)
        if not np.all(np.isfinite(sec)):
            raise InvalidManifoldError("psi''/psi is not finite on the requested radii")
        ric = (self.dim - 1) * sec
        if np.isscalar(rho):
            return CurvatureSample(float(sec), float(ric))
        return CurvatureSample(sec, ric)

    def surface_measure(self, radius):
        """Area of the geodesic sphere S_R: |S^{N-1}| psi(R)^{N-1}.

        Overflows to inf on strongly warped families at large R; use
        ``log_surface_measure`` for certified growth comparisons.
        """
        r = self._check_rho(radius)
        val = np.exp(self.log_surface_measure(r))
        return float(val) if np.isscalar(radius) else val

    def log_surface_measure(self, radius):
        r = self._check_rho(radius)
        return log_sphere_area(self.dim) + (self.dim - 1) * np.asarray(
            self.log_psi(r), dtype=float
        )

    # -- class-A validation --------------------------------------------------

    def validate(self):
        """Check class-A membership and convexity on the probe radii.

        psi(rho)/rho and psi'(rho) must approach 1 with nonincreasing
        deviations along the probe sequence, landing within CLASS_A_TOL at
        the finest probe; psi'' must be nonnegative up to roundoff.
        """
        probes = np.array(CLASS_A_PROBES)
        p = np.asarray(self.psi(probes), dtype=float)
        dp = np.asarray(self.dpsi(probes), dtype=float)
        if np.any(p <= 0):
            raise InvalidManifoldError("psi must be positive on (0, inf)")
        dev_ratio = np.abs(p / probes - 1.0)
        dev_slope = np.abs(dp - 1.0)
        for dev, name in ((dev_ratio, "psi/rho"), (dev_slope, "psi'")):
            if np.any(np.diff(dev) > 1e-12 + 0.5 * dev[:-1]):
                raise InvalidManifoldError(
                    f"{name} does not converge to 1 along the probe radii"
                )
            if dev[-1] > CLASS_A_TOL:
                raise InvalidManifoldError(
                    f"{name} deviates by {dev[-1]:.2e} at rho={probes[-1]:g}"
                )
        # Convexity spot check across the working range; user-supplied psi
        # may overflow at large radii, which only shrinks the checkable set.
        grid = np.geomspace(1e-3, 1e3, 200)
        with np.errstate(over="ignore", invalid="ignore"):
            r2 = np.asarray(self.ratio2(grid), dtype=float)
            lp = np.asarray(self.log_psi(grid), dtype=float)
        live = np.isfinite(r2)
        if np.count_nonzero(live) < grid.size // 2:
            raise InvalidManifoldError("psi''/psi is not defined on most of the probe range")
        r2, grid_live = r2[live], grid[live]
        scale = np.maximum(1.0, np.abs(r2))
        if np.any(r2 < -1e-12 * scale):
            bad = grid_live[np.argmin(r2 / scale)]
            raise InvalidManifoldError(f"psi'' < 0 near rho={bad:.3g} (not Cartan-Hadamard)")
        if np.any(np.isnan(lp[live])):
            raise InvalidManifoldError("psi must be positive on (0, inf)")
        return True


# -- built-in families -------------------------------------------------------


def euclidean(dim: int = 3) -> ModelManifold:
    """Flat model, psi(rho) = rho."""
    return ModelManifold(
        dim=dim,
        kind="euclidean",
        c=None,
        psi=lambda r: np.asarray(r),
        dpsi=lambda r: np.ones_like(np.asarray(r)),
        d2psi=lambda r: np.zeros_like(np.asarray(r)),
        log_psi=lambda r: np.log(r),
        ratio1=lambda r: 1.0 / np.asarray(r),
        ratio2=lambda r: np.zeros_like(np.asarray(r)),
        tail_limits={"drift": 0.0, "ricci": 0.0, "sect": 0.0, "volume": 0.0},
    )


def hyperbolic(dim: int = 2) -> ModelManifold:
    """Constant curvature -1, psi(rho) = sinh(rho)."""
    return ModelManifold(
        dim=dim,
        kind="hyperbolic",
        c=None,
        psi=np.sinh,
        dpsi=np.cosh,
        d2psi=np.sinh,
        log_psi=lambda r: np.asarray(r) + np.log1p(-np.exp(-2.0 * np.asarray(r))) - math.log(2.0),
        ratio1=lambda r: 1.0 / np.tanh(r),
        ratio2=lambda r: np.ones_like(np.asarray(r)),
        tail_limits={"drift": 0.0, "ricci": 0.0, "sect": 0.0, "volume": 0.0},
    )


def quad_critical(c: float, dim: int = 3) -> ModelManifold:
    """psi(rho) = rho exp(c rho^2): sectional curvature ~ -4 c^2 rho^2.

    Realizes the quadratic curvature borderline with both the upper and the
    lower drift envelope; rho * m(rho) = (N-1)(1 + 2 c rho^2).
    """
    if c <= 0:
        raise DomainError("quad-critical family requires c > 0")

    def psi(r):
        r = np.asarray(r)
        return r * np.exp(c * r * r)

    def dpsi(r):
        r = np.asarray(r)
        return np.exp(c * r * r) * (1.0 + 2.0 * c * r * r)

    def d2psi(r):
        r = np.asarray(r)
        return np.exp(c * r * r) * (6.0 * c * r + 4.0 * c * c * r**3)

    return ModelManifold(
        dim=dim,
        kind="quad-critical",
        c=c,
        psi=psi,
        dpsi=dpsi,
        d2psi=d2psi,
        log_psi=lambda r: np.log(r) + c * np.asarray(r) ** 2,
        ratio1=lambda r: (1.0 + 2.0 * c * np.asarray(r) ** 2) / np.asarray(r),
        ratio2=lambda r: 6.0 * c + 4.0 * c * c * np.asarray(r) ** 2,
        tail_limits={
            "drift": 2.0 * c * (dim - 1),
            "ricci": 4.0 * c * c * (dim - 1),
            "sect": 4.0 * c * c,
            "volume": None,  # sphere volume grows like exp(c' R^2): diverges
        },
    )


def log_critical(c: float, dim: int = 2) -> ModelManifold:
    """psi(rho) = rho exp(c rho^2 / log(e + rho)).

    Ricci curvature decays like -(1 + rho^2)/log^2 rho, the borderline under
    which the uniqueness-side decay certificates operate.  Certified on the
    probe grid, not proved.
    """
    if c <= 0:
        raise DomainError("log-critical family requires c > 0")

    def _f_parts(r):
        r = np.asarray(r)
        s = math.e + r
        g = np.log(s)
        f = c * r * r / g
        f1 = 2.0 * c * r / g - c * r * r / (s * g * g)
        f2 = (
            2.0 * c / g
            - 4.0 * c * r / (s * g * g)
            + c * r * r * (g + 2.0) / (s * s * g**3)
        )
        return f, f1, f2

    def psi(r):
        r = np.asarray(r)
        f, _, _ = _f_parts(r)
        return r * np.exp(f)

    def dpsi(r):
        r = np.asarray(r)
        f, f1, _ = _f_parts(r)
        return np.exp(f) * (1.0 + r * f1)

    def d2psi(r):
        r = np.asarray(r)
        f, f1, f2 = _f_parts(r)
        return np.exp(f) * (2.0 * f1 + r * f1 * f1 + r * f2)

    def ratio1(r):
        r = np.asarray(r)
        _, f1, _ = _f_parts(r)
        return 1.0 / r + f1

    def ratio2(r):
        r = np.asarray(r)
        _, f1, f2 = _f_parts(r)
        return 2.0 * f1 / r + f1 * f1 + f2

    return ModelManifold(
        dim=dim,
        kind="log-critical",
        c=c,
        psi=psi,
        dpsi=dpsi,
        d2psi=d2psi,
        log_psi=lambda r: np.log(r) + _f_parts(r)[0],
        ratio1=ratio1,
        ratio2=ratio2,
        tail_limits={
            "drift": 0.0,
            "ricci": 0.0,
            "sect": 0.0,
            "volume": (dim - 1) * c,
        },
    )


def custom(psi: Callable, dim: int, name: str = "custom") -> ModelManifold:
    """Wrap a user-supplied warping function with difference quotients.

    Derivatives use central differences at step 1e-5 * max(1, rho), evaluated
    in extended precision so the second derivative is not drowned by
    cancellation.  Comparison-constant fits fall back to grid-divergence
    heuristics because no analytic tails are known.
    """

    def _ld(f):
        def g(r):
            return np.asarray(f(_as_longdouble(r)))

        return g

    pld = _ld(psi)

    def dpsi(r):
        return np.asarray(_fd1(pld, _as_longdouble(r)), dtype=float)

    def d2psi(r):
        return np.asarray(_fd2(pld, _as_longdouble(r)), dtype=float)

    def psif(r):
        return np.asarray(psi(np.asarray(r, dtype=float)), dtype=float)

    def _ratio(deriv):
        def f(r):
            with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                return deriv(r) / psif(r)

        return f

    return ModelManifold(
        dim=dim,
        kind=name,
        c=None,
        psi=psif,
        dpsi=dpsi,
        d2psi=d2psi,
        log_psi=lambda r: np.log(psif(r)),
        ratio1=_ratio(dpsi),
        ratio2=_ratio(d2psi),
        tail_limits=None,
    )


BUILTIN_FAMILIES = {
    "euclidean": euclidean,
    "hyperbolic": hyperbolic,
    "quad-critical": quad_critical,
    "log-critical": log_critical,
}


def make_manifold(kind: str, dim: int, c: float | None = None) -> ModelManifold:
    """Instantiate a built-in family by name (config/CLI entry point)."""
    if kind not in BUILTIN_FAMILIES:
        raise DomainError(f"unknown manifold kind '{kind}'")
    if kind in ("quad-critical", "log-critical"):
        if c is None:
            raise DomainError(f"{kind} requires the curvature parameter c")
        return BUILTIN_FAMILIES[kind](c, dim)
    return BUILTIN_FAMILIES[kind](dim)


# -- certified comparison constants ------------------------------------------


@dataclass(frozen=True)
class ComparisonConstants:
    """Certified constants comparing the drift with quadratic envelopes.

    c_prime:        m(rho) <= c_prime (1+rho^2)/rho everywhere probed.
    c_double_prime: m(rho) >= c_double_prime (1+rho^2)/rho, or None when the
                    lower-quadratic certificate fails (ratio inf -> 0).
    c_o:            Ric_radial >= -c_o (1+rho^2).
    k_o, r_o:       sectional <= -k_o rho^2 for rho >= r_o, or None.
    c_m:            meas(S_R) <= exp(c_m R^2/log R) on probes, or None when
                    sphere volume outgrows that envelope (quad family).
    attained_at:    probe radius at which each grid extremum was attained
                    ("rho->0"/"rho->inf" for analytic limit attainment).
    """

    c_prime: float
    c_double_prime: Optional[float]
    c_o: float
    k_o: Optional[float]
    r_o: Optional[float]
    c_m: Optional[float]
    attained_at: dict

    def as_json_dict(self) -> dict:
        return {
            "c_prime": self.c_prime,
            "c_double_prime": self.c_double_prime,
            "c_o": self.c_o,
            "k_o": self.k_o,
            "r_o": self.r_o,
            "c_m": self.c_m,
            "attained_at": self.attained_at,
        }


def probe_grid(rho_max: float, n_probe: int) -> np.ndarray:
    return np.geomspace(1e-3, rho_max, n_probe)


def _sup_with_limits(vals, rho, head, tail):
    """Certified sup combining grid max with analytic endpoint limits."""
    i = int(np.argmax(vals))
    best, where = float(vals[i]), float(rho[i])
    for lim, tag in ((head, "rho->0"), (tail, "rho->inf")):
        if lim is not None and lim > best:
            best, where = lim, tag
    return best, where


def _inf_with_limits(vals, rho, head, tail):
    i = int(np.argmin(vals))
    best, where = float(vals[i]), float(rho[i])
    for lim, tag in ((head, "rho->0"), (tail, "rho->inf")):
        if lim is not None and lim < best:
            best, where = lim, tag
    return best, where


def _diverging(vals, rho):
    """Heuristic tail-divergence test for user-supplied manifolds."""
    i = int(np.argmax(vals))
    if i < len(vals) - max(3, len(vals) // 50):
        return None
    j = int(np.searchsorted(rho, rho[-1] / 4.0))
    if vals[-1] > 1.1 * vals[j]:
        return float(rho[-1])
    return None


def fit_comparison_constants(
    manifold: ModelManifold, rho_max: float = 1e3, n_probe: int = 4096
) -> ComparisonConstants:
    """Fit all drift/curvature/volume comparison constants on a probe grid.

    Grid extrema are widened by FIT_MARGIN and merged with per-family
    analytic limits so the certified inequalities hold beyond the probes for
    the built-in families.
    """
    if rho_max < 10.0:
        raise DomainError("rho_max must be >= 10")
    if n_probe < 1000:
        raise DomainError("n_probe must be >= 1000")
    rho = probe_grid(rho_max, n_probe)
    nm1 = manifold.dim - 1
    tails = manifold.tail_limits
    attained: dict = {}

    drift = manifold.drift(rho)
    ratio = rho * drift / (1.0 + rho * rho)
    head = float(nm1)  # rho psi'/psi -> 1 for class A
    tail = None if tails is None else tails["drift"]
    if tails is None:
        bad = _diverging(ratio, rho)
        if bad is not None:
            raise NotCriticalError(
                f"drift grows faster than quadratically near rho={bad:.3g}", probe=bad
            )
    sup, where = _sup_with_limits(ratio, rho, head, tail)
    c_prime = (1.0 + FIT_MARGIN) * sup
    attained["c_prime"] = where

    inf, where = _inf_with_limits(ratio, rho, head, tail)
    if inf > 1e-9 * sup:
        c_double_prime: Optional[float] = (1.0 - FIT_MARGIN) * inf
        attained["c_double_prime"] = where
    else:
        c_double_prime = None
        attained["c_double_prime"] = None

    curv = manifold.curvature(rho)
    neg_ric = -curv.ricci_radial / (1.0 + rho * rho)
    ric_head = float(nm1 * np.asarray(manifold.ratio2(1e-6), dtype=float))
    ric_tail = None if tails is None else tails["ricci"]
    if tails is None and _diverging(neg_ric, rho) is not None:
        raise NotCriticalError(
            "Ricci curvature diverges faster than quadratically", probe=float(rho[-1])
        )
    sup, where = _sup_with_limits(neg_ric, rho, ric_head, ric_tail)
    c_o = (1.0 + FIT_MARGIN) * max(sup, 0.0)
    attained["c_o"] = where

    r_o = 1.0
    mask = rho >= r_o
    neg_sect = -curv.sectional[mask] / rho[mask] ** 2
    sect_tail = None if tails is None else tails["sect"]
    inf, where = _inf_with_limits(neg_sect, rho[mask], None, sect_tail)
    if inf > 1e-12:
        k_o: Optional[float] = (1.0 - FIT_MARGIN) * inf
        attained["k_o"] = where
    else:
        k_o, r_o = None, None
        attained["k_o"] = None

    vol_mask = rho >= 3.0
    rv = rho[vol_mask]
    lvol = manifold.log_surface_measure(rv)
    vol_ratio = lvol * np.log(rv) / rv**2
    vol_tail = None if tails is None else tails["volume"]
    if (tails is not None and vol_tail is None) or (
        tails is None and _diverging(vol_ratio, rv) is not None
    ):
        c_m = None
        attained["c_m"] = None
    else:
        sup, where = _sup_with_limits(vol_ratio, rv, None, vol_tail)
        c_m = (1.0 + FIT_MARGIN) * max(sup, 0.0)
        attained["c_m"] = where

    return ComparisonConstants(
        c_prime=c_prime,
        c_double_prime=c_double_prime,
        c_o=c_o,
        k_o=k_o,
        r_o=r_o,
        c_m=c_m,
        attained_at=attained,
    )
