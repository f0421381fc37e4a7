"""Stationary profiles of the 1D zero-temperature drift-diffusion model.

A stationary profile with constant flux c solves

    u'(x) = c / u(x) - V'(x),        u(0) = u0 > 0,

and the boundary value problem prescribes u(1) = u1 on top.  Everything
here rests on the closed-form propagator ``phi`` for frozen drift
slope: chained over a partition it integrates piecewise-linear
potentials exactly, and as an envelope it brackets the exact solution
for smooth V.  The flux is found by monotone shooting; the c -> 0 limit
profile (with vacuum regions where u = 0) supplies the shooting
threshold and the zero-flux solution itself.

Sign conventions: the physical current is J = -c, and profiles with
u(1) below the threshold are obtained from the reflected problem
x -> 1 - x, which flips the sign of c.
"""

import dataclasses
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import EngineError, ValidationError
from .potential import Potential, max_value
from .specfun import lambert_w0, lambert_w0_of_exp, lambert_w_upper_of_exp

__all__ = [
    "DirichletPair",
    "StationaryProfile",
    "CriticalValues",
    "LimitProfile",
    "SolutionCollapseError",
    "SubcriticalDataError",
    "BracketFailureError",
    "ShootingError",
    "phi",
    "propagate_piecewise",
    "integrate_cauchy",
    "envelope",
    "critical_values",
    "limit_profile",
    "solve_bvp",
    "stationary_current",
    "product_form_residual",
]

# u is treated as vacuum below this level; the Cauchy integrator stops there
_COLLAPSE_LEVEL = 1e-12
_BRACKET_MAX = 1e6


class SolutionCollapseError(EngineError):
    """The profile hit u = 0 before reaching x = 1."""


class SubcriticalDataError(ValidationError):
    """Both boundary values sit at or below their critical values."""


class BracketFailureError(EngineError):
    """No flux bracket found below the cutoff c = 1e6."""


class ShootingError(EngineError):
    """Bisection exhausted its budget without meeting the tolerance."""


@dataclasses.dataclass(frozen=True)
class DirichletPair:
    """Boundary data u(0) = u0, u(1) = u1; both must be positive."""

    u0: float
    u1: float

    def __post_init__(self):
        if not (self.u0 > 0.0 and self.u1 > 0.0):
            raise ValidationError(
                f"boundary values must be positive, got ({self.u0}, {self.u1})")


@dataclasses.dataclass
class StationaryProfile:
    """A sampled stationary profile and its constant flux c."""

    grid: np.ndarray
    values: np.ndarray
    c: float

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# c={self.c:.17g}\n")
            fh.write("x,u\n")
            for x, u in zip(self.grid, self.values):
                fh.write(f"{x:.17g},{u:.17g}\n")


@dataclasses.dataclass(frozen=True)
class CriticalValues:
    """Threshold boundary values below which a side pins to vacuum."""

    u0_crit: float
    u1_crit: float
    v_max: float
    x_max: float
    v0: float
    v1: float


# ---------------------------------------------------------------------------
# Closed-form propagator

def _phi_implicit(dx, u0, c, alpha):
    # Newton on the arclength relation x(u) = dx, with x(u) expanded in
    # powers of alpha u / c (tiny here); the raw Lambert/log forms lose
    # all significant digits in this regime.
    u = math.sqrt(u0 * u0 + 2.0 * c * dx)
    for _ in range(4):
        F = (u * u - u0 * u0) / (2.0 * c) - dx
        p, p0, ac = u * u, u0 * u0, alpha
        for k in range(3, 10):
            p *= u
            p0 *= u0
            F += ac * (p - p0) / (k * c ** (k - 1))
            ac *= alpha
        u -= F * (c - alpha * u) / u
    return u


def phi(dx, u0, c, alpha):
    """Propagate u along frozen drift slope alpha: solve u' = c/u - alpha.

    Parameters
    ----------
    dx : float or ndarray
        Distance(s) >= 0 to propagate.
    u0 : float
        Starting value, > 0.
    c : float
        Flux constant, > 0.
    alpha : float
        Frozen slope of the potential.

    Returns
    -------
    float or ndarray
        u(dx).  For alpha > 0 the value approaches the equilibrium
        c/alpha; for alpha <= 0 it grows without bound.
    """
    if np.ndim(dx) > 0:
        return np.array([phi(float(d), u0, c, alpha) for d in np.asarray(dx).ravel()]
                        ).reshape(np.shape(dx))
    dx = float(dx)
    if dx < 0.0:
        raise ValidationError(f"dx must be >= 0, got {dx}")
    if not u0 > 0.0:
        raise ValidationError(f"u0 must be positive, got {u0}")
    if not c > 0.0:
        raise ValidationError(f"c must be positive, got {c}")
    if alpha == 0.0 or dx == 0.0:
        return math.sqrt(u0 * u0 + 2.0 * c * dx)
    ueq = c / alpha
    if alpha > 0.0 and u0 == ueq:
        return ueq
    u_hat = math.sqrt(u0 * u0 + 2.0 * c * dx)
    if abs(alpha) * u_hat / c < 1e-2:
        return _phi_implicit(dx, u0, c, alpha)
    s = alpha * alpha * dx / c
    if alpha > 0.0:
        beta = u0 / ueq
        if beta > 1.0:
            # w e^w with huge exponent: solve from the log argument
            w = lambert_w0_of_exp(math.log(beta - 1.0) + (beta - 1.0) - s)
            return ueq * (1.0 + w)
        y = (beta - 1.0) * math.exp(beta - 1.0 - s)
        return ueq * (1.0 + lambert_w0(y))
    a = 1.0 - u0 / ueq  # > 1 since ueq < 0
    w = lambert_w_upper_of_exp(s + a - math.log(a))
    return ueq * (1.0 - w)


def propagate_piecewise(partition, alphas, u0, c):
    """Exact profile for a piecewise-linear potential.

    ``partition`` is an increasing array of points starting at 0;
    ``alphas[i]`` is the potential slope on [partition[i],
    partition[i+1]].  Returns a ``StationaryProfile`` sampled at the
    partition points.
    """
    partition = np.asarray(partition, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    if partition.ndim != 1 or len(partition) < 2:
        raise ValidationError("partition needs at least two points")
    if np.any(np.diff(partition) <= 0.0):
        raise ValidationError("partition must be strictly increasing")
    if len(alphas) != len(partition) - 1:
        raise ValidationError(
            f"need {len(partition) - 1} slopes for {len(partition)} points, got {len(alphas)}")
    values = np.empty_like(partition)
    values[0] = u0
    u = u0
    for i, a in enumerate(alphas):
        u = phi(partition[i + 1] - partition[i], u, c, float(a))
        values[i + 1] = u
    return StationaryProfile(grid=partition, values=values, c=c)


def _propagate_eval(xs, u0, c, v, n_cells):
    # Frozen-slope march over a uniform partition, evaluated at the
    # (sorted, in-range) points xs.  Fallback for stiff small-c cases.
    nodes = np.linspace(0.0, xs[-1] if xs[-1] > 0 else 1.0, n_cells + 1)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    slopes = np.asarray(v.d1(mids), dtype=float)
    out = np.empty(len(xs))
    u = u0
    j = 0
    for k, x in enumerate(xs):
        while j < n_cells and nodes[j + 1] <= x:
            u = phi(nodes[j + 1] - nodes[j], u, c, float(slopes[j]))
            j += 1
        out[k] = phi(x - nodes[j], u, c, float(slopes[min(j, n_cells - 1)])) \
            if x > nodes[j] else u
    return out


def _is_stiff(u0, c, v):
    # Small c with a vacuum-grazing limit profile rides the slow manifold
    # u ~ c/V': explicit integration cost scales like max(V')^2 / c.
    if c <= 0.0:
        return False
    xs = np.linspace(0.0, 1.0, 2001)
    floor = float(np.min(u0 + v(0.0) - np.asarray(v(xs), dtype=float)))
    slope_sq = float(np.max(np.asarray(v.d1(xs), dtype=float)) ** 2)
    return floor <= 1e-3 and slope_sq / c > 2e4


def integrate_cauchy(u0, c, v, grid):
    """Integrate u' = c/u - V'(x) from u(0) = u0 along ``grid``.

    ``grid`` must be increasing, start at 0 and stay within [0, 1].
    Raises ``SolutionCollapseError`` if the profile reaches the vacuum
    level before the last grid point (possible only for c < 0 or
    subcritical starts).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValidationError("grid needs at least two points")
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0) or grid[-1] > 1.0:
        raise ValidationError("grid must increase from 0 and stay within [0, 1]")
    if not u0 > 0.0:
        raise ValidationError(f"u0 must be positive, got {u0}")
    if c == 0.0:
        raise ValidationError("c = 0 is handled by limit_profile, not integration")
    if _is_stiff(u0, c, v):
        values = _propagate_eval(grid, u0, c, v, 4096)
        return StationaryProfile(grid=grid, values=values, c=c)

    def rhs(x, y):
        return [c / y[0] - float(v.d1(x))]

    def collapse(x, y):
        return y[0] - _COLLAPSE_LEVEL

    collapse.terminal = True
    collapse.direction = -1.0
    sol = solve_ivp(rhs, (0.0, float(grid[-1])), [u0], method="DOP853",
                    t_eval=grid, rtol=1e-12, atol=1e-14, events=collapse)
    if sol.t_events[0].size > 0:
        raise SolutionCollapseError(
            f"profile collapsed to vacuum at x = {sol.t_events[0][0]:.6g} (c = {c:.6g})")
    if not sol.success:
        raise EngineError(f"profile integration failed: {sol.message}")
    return StationaryProfile(grid=grid, values=sol.y[0], c=c)


def envelope(u0, c, v, grid=None):
    """Frozen-slope profiles bracketing the exact solution pointwise.

    Returns ``(lower, upper)`` built from the extreme potential slopes
    on [0, 1]; valid for c > 0.
    """
    if grid is None:
        grid = np.linspace(0.0, 1.0, 1001)
    grid = np.asarray(grid, dtype=float)
    alpha_max, _ = max_value(lambda x: np.asarray(v.d1(x), dtype=float), (0.0, 1.0))
    neg_min, _ = max_value(lambda x: -np.asarray(v.d1(x), dtype=float), (0.0, 1.0))
    lower = StationaryProfile(grid=grid, values=phi(grid, u0, c, alpha_max), c=c)
    upper = StationaryProfile(grid=grid, values=phi(grid, u0, c, -neg_min), c=c)
    return lower, upper


# ---------------------------------------------------------------------------
# Zero-flux limit

def critical_values(v):
    """Boundary thresholds from the potential's maximum over [0, 1]."""
    vmax, xmax = max_value(v, (0.0, 1.0))
    v0 = float(v(0.0))
    v1 = float(v(1.0))
    return CriticalValues(u0_crit=vmax - v0, u1_crit=vmax - v1,
                          v_max=vmax, x_max=xmax, v0=v0, v1=v1)


def _first_zero(fn, a, b, skip_left=False):
    # First sign change of fn on [a, b], refined by brentq; None if fn
    # stays positive.  skip_left ignores a zero at the left endpoint.
    xs = np.linspace(a, b, 4097)
    vals = np.asarray(fn(xs), dtype=float)
    start = 1 if skip_left else 0
    for k in range(start, len(xs)):
        if vals[k] <= 0.0:
            if k == 0:
                return a
            if vals[k] == 0.0:
                return float(xs[k])
            return float(brentq(lambda x: float(fn(x)), xs[k - 1], xs[k], xtol=1e-14))
    return None


def _vacuum_end(v, x_from):
    # First point in [x_from, 1] where V' turns negative; the vacuum
    # region cannot extend past it.
    if x_from >= 1.0:
        return 1.0
    xs = np.linspace(x_from, 1.0, 4097)
    d = np.asarray(v.d1(xs), dtype=float)
    tol = 1e-12
    for k in range(len(xs)):
        if d[k] < -tol:
            if k == 0:
                return x_from
            if d[k - 1] > tol:
                return float(brentq(lambda x: float(v.d1(x)), xs[k - 1], xs[k], xtol=1e-14))
            return float(xs[k - 1])
    return 1.0


@dataclasses.dataclass
class LimitProfile:
    """The c -> 0+ profile: level segments U = level - V and vacuum gaps.

    ``segments`` is a list of (a, b, level) with level = None on vacuum
    stretches (where U = 0); ``breakpoints`` are the segment endpoints
    interior to (0, 1).
    """

    u0: float
    segments: list
    breakpoints: list
    grid: np.ndarray
    values: np.ndarray
    _potential: Potential

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape if x.ndim else (1,))
        xv = np.atleast_1d(x)
        for a, b, level in self.segments:
            mask = (xv >= a) & (xv <= b)
            if level is not None and np.any(mask):
                out[mask] = level - np.asarray(self._potential(xv[mask]), dtype=float)
        out = np.maximum(out, 0.0)
        return float(out[0]) if x.ndim == 0 else out

    @property
    def value_at_one(self):
        return float(self(1.0))


def limit_profile(u0, v, grid=None):
    """Zero-flux profile with left boundary value u0 > 0.

    Builds the alternating sequence of occupied segments (where
    u + V is constant) and vacuum segments (u = 0, entered where the
    occupied branch hits zero, exited where V' turns negative and V
    falls back to the entry level).
    """
    if not u0 > 0.0:
        raise ValidationError(f"u0 must be positive, got {u0}")
    segments = []
    breakpoints = []
    level = u0 + float(v(0.0))
    x = 0.0
    skip = False
    while x < 1.0:
        z = _first_zero(lambda t: level - np.asarray(v(t), dtype=float), x, 1.0,
                        skip_left=skip)
        end = 1.0 if z is None else z
        segments.append((x, end, level))
        if end >= 1.0:
            break
        breakpoints.append(end)
        y = _vacuum_end(v, end)
        if y > end:
            segments.append((end, y, None))
        if y >= 1.0:
            break
        if y > end:
            breakpoints.append(y)
        x = y
        level = float(v(y))
        skip = True
    if grid is None:
        grid = np.linspace(0.0, 1.0, 1001)
    prof = LimitProfile(u0=u0, segments=segments, breakpoints=breakpoints,
                        grid=np.asarray(grid, dtype=float), values=None,
                        _potential=v)
    prof.values = prof(prof.grid)
    return prof


# ---------------------------------------------------------------------------
# Boundary value problem

def _shoot(u0, v, target, tol):
    # Monotone bisection on c > 0 for u(1; c) = target, knowing
    # u(1; 0+) < target and u(1; c) increasing in c.
    def endpoint(c):
        sol = integrate_cauchy(u0, c, v, np.array([0.0, 1.0]))
        return float(sol.values[-1])

    hi = 1.0
    f_hi = endpoint(hi) - target
    while f_hi < 0.0:
        hi *= 2.0
        if hi > _BRACKET_MAX:
            raise BracketFailureError(
                f"no flux bracket below c = {_BRACKET_MAX:.0e} for target u(1) = {target}")
        f_hi = endpoint(hi) - target
    lo = hi / 2.0 if hi > 1.0 else 0.0
    best_c, best_f = hi, f_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f_mid = endpoint(mid) - target
        if abs(f_mid) < abs(best_f):
            best_c, best_f = mid, f_mid
        if abs(f_mid) <= 0.5 * tol:
            return mid
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    if abs(best_f) <= tol:
        return best_c
    raise ShootingError(
        f"bisection stalled at c = {best_c:.12g} with endpoint error {best_f:.3g}")


def _solve_supercritical_left(data, v, tol, grid):
    # u0 side supercritical.  Compare u1 with the zero-flux threshold
    # tau = U(1) to pick the sign of c.
    lp = limit_profile(data.u0, v)
    tau = lp.value_at_one
    if abs(data.u1 - tau) <= 0.5 * tol:
        return StationaryProfile(grid=np.asarray(grid, dtype=float),
                                 values=lp(np.asarray(grid, dtype=float)), c=0.0)
    if data.u1 > tau:
        c = _shoot(data.u0, v, data.u1, tol)
        return integrate_cauchy(data.u0, c, v, grid)
    # u1 below threshold: solve the reflected problem, which has
    # positive flux, and map back (flips the sign of c).
    vr = v.reflected()
    cr = _shoot(data.u1, vr, data.u0, tol)
    grid = np.asarray(grid, dtype=float)
    mirrored = integrate_cauchy(data.u1, cr, vr, np.ascontiguousarray((1.0 - grid)[::-1]))
    return StationaryProfile(grid=grid, values=mirrored.values[::-1].copy(), c=-cr)


def solve_bvp(data, v, tol=1e-8, grid=None):
    """Stationary profile with u(0) = data.u0, u(1) = data.u1.

    Parameters
    ----------
    data : DirichletPair (or (u0, u1) tuple)
        Positive boundary values; at least one side must exceed its
        critical value from ``critical_values``.
    v : Potential
    tol : float
        Bisection acceptance |u(1) - u1| <= tol (endpoint bisection is
        run to tol/2).
    grid : array, optional
        Sample points (default 1001 uniform).

    Returns
    -------
    StationaryProfile
        The flux c has the sign of the left-to-right density drop; the
        physical current is ``stationary_current(profile) == -c``.
    """
    if not isinstance(data, DirichletPair):
        data = DirichletPair(*data)
    if grid is None:
        grid = np.linspace(0.0, 1.0, 1001)
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0.0):
        raise ValidationError("grid must increase from 0 to 1")
    crit = critical_values(v)
    sup0 = data.u0 > crit.u0_crit
    sup1 = data.u1 > crit.u1_crit
    if not sup0 and not sup1:
        raise SubcriticalDataError(
            f"both sides subcritical: u0 = {data.u0} <= {crit.u0_crit:.6g} "
            f"and u1 = {data.u1} <= {crit.u1_crit:.6g}")
    if sup0:
        return _solve_supercritical_left(data, v, tol, grid)
    # Only the u1 side is supercritical: mirror the whole problem.
    vr = v.reflected()
    mirrored = _solve_supercritical_left(DirichletPair(data.u1, data.u0), vr, tol,
                                         np.ascontiguousarray((1.0 - grid)[::-1]))
    return StationaryProfile(grid=grid, values=mirrored.values[::-1].copy(),
                             c=-mirrored.c)


def stationary_current(profile):
    """Physical current J carried by a stationary profile (J = -c)."""
    return -profile.c


def product_form_residual(profile, v):
    """Pointwise residual u (u' + V') - c on interior grid points.

    u' is a 4th-order central difference, so the result is meaningful
    on uniform grids; returns the residual for grid[2:-2].
    """
    x = profile.grid
    u = profile.values
    h = x[1] - x[0]
    if np.max(np.abs(np.diff(x) - h)) > 1e-12 * max(h, 1.0):
        raise ValidationError("product_form_residual needs a uniform grid")
    du = (u[:-4] - 8.0 * u[1:-3] + 8.0 * u[3:-1] - u[4:]) / (12.0 * h)
    xi = x[2:-2]
    return u[2:-2] * (du + np.asarray(v.d1(xi), dtype=float)) - profile.c
