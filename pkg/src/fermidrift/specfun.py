"""Real inverse branches of w*exp(w) and exp(w)/w.

Two scalar inverse maps drive every closed-form expression in this
package:

* ``lambert_w0`` inverts ``w * exp(w)`` on [-1/e, inf) -> [-1, inf)
  (the principal Lambert W branch);
* ``lambert_w_upper`` inverts ``exp(w) / w`` on [e, inf) -> [1, inf).

Both use a regime-dependent initial guess refined by Halley iteration.
The ``*_of_exp`` variants take log(y) instead of y: the propagator
formulas need these inverses at arguments of the form f * exp(s) with s
far outside floating-point range, and working from the log argument is
the stable route (w + log w = L  resp.  w - log w = L).
"""

import math

__all__ = [
    "BranchDomainError",
    "lambert_w0",
    "lambert_w0_of_exp",
    "lambert_w_upper",
    "lambert_w_upper_of_exp",
]

_INV_E = math.exp(-1.0)
_MAX_ITER = 50
_STEP_TOL = 1e-15
# Snap window around the fold points where the inverse has a square-root
# singularity and iteration became pointless.
_FOLD_SNAP = 1e-10
_DOMAIN_SLACK = 1e-15


class BranchDomainError(ValueError):
    """Argument lies outside the domain of the requested real branch.

    Carries ``input`` (the offending argument) and ``branch`` ("W" for
    the principal branch, "W-tilde" for the upper inverse of e^x/x).
    """

    def __init__(self, message, value, branch):
        super().__init__(message)
        self.input = value
        self.branch = branch


def _w0_guess(y):
    if y < 0.25:
        # Series around the fold at y = -1/e: w = -1 + p - p^2/3 + 11 p^3/72
        p = math.sqrt(max(2.0 * (math.e * y + 1.0), 0.0))
        return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    if y < math.e:
        return math.log1p(y)
    lg = math.log(y)
    return lg - math.log(lg)


def lambert_w0(y):
    """Principal Lambert branch: the w >= -1 with w * exp(w) = y.

    Parameters
    ----------
    y : float
        Argument; must satisfy y >= -1/e (within 1e-15 absolute slack).

    Returns
    -------
    float
        W0(y) to ~1e-12 relative accuracy (absolute near zero).

    Raises
    ------
    BranchDomainError
        If y < -1/e - 1e-15.
    """
    y = float(y)
    if y < -_INV_E - _DOMAIN_SLACK:
        raise BranchDomainError(f"lambert_w0 requires y >= -1/e; got {y!r}", y, "W")
    if abs(y + _INV_E) <= _FOLD_SNAP:
        return -1.0
    if y == 0.0:
        return 0.0
    w = _w0_guess(y)
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - y
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) < _STEP_TOL * (1.0 + abs(w)):
            break
    return w


def lambert_w0_of_exp(log_y):
    """W0(exp(L)) for L = log_y, i.e. the w > 0 with w + log w = L.

    Stable for any L representable as a float; exp(L) itself may
    overflow or underflow.
    """
    L = float(log_y)
    if L < -700.0:
        # w ~ exp(L) below double underflow of the residual terms
        return math.exp(L)
    w = (L - math.log(L) + math.log(L) / L) if L > 1.0 else math.exp(L - 1.0)
    for _ in range(_MAX_ITER):
        # Halley for F(w) = w + log(w) - L; F' = 1 + 1/w, F'' = -1/w^2
        F = w + math.log(w) - L
        Fp = 1.0 + 1.0 / w
        denom = Fp + F / (2.0 * Fp * w * w)
        step = F / denom
        wn = w - step
        if wn <= 0.0:
            wn = 0.5 * w
        w = wn
        if abs(step) < _STEP_TOL * (1.0 + abs(w)):
            break
    return w


def lambert_w_upper(y):
    """Upper inverse of exp(w)/w: the w >= 1 with exp(w) / w = y.

    Parameters
    ----------
    y : float
        Argument; must satisfy y >= e (within 1e-15 absolute slack).

    Returns
    -------
    float
        The inverse on [1, inf), to ~1e-12 relative accuracy.

    Raises
    ------
    BranchDomainError
        If y < e - 1e-15.
    """
    y = float(y)
    if y < math.e - _DOMAIN_SLACK:
        raise BranchDomainError(f"lambert_w_upper requires y >= e; got {y!r}", y, "W-tilde")
    if abs(y - math.e) <= _FOLD_SNAP:
        return 1.0
    return lambert_w_upper_of_exp(math.log(y))


def lambert_w_upper_of_exp(log_y):
    """Upper inverse of exp(w)/w at y = exp(L): the w >= 1 with w - log w = L."""
    L = float(log_y)
    if L < 1.0 - 1e-14:
        raise BranchDomainError(
            f"lambert_w_upper_of_exp requires log y >= 1; got {L!r}", L, "W-tilde")
    s = L - 1.0
    if s <= 1e-12:
        # Fold series w = 1 + sqrt(2 s); already at machine accuracy here
        return 1.0 + math.sqrt(max(2.0 * s, 0.0))
    if s < 0.5:
        # Work in t = w - 1 near the fold: t - log1p(t) = s
        r = math.sqrt(2.0 * s)
        t = r * (1.0 + r * (1.0 / 3.0 + r / 36.0))
        for _ in range(_MAX_ITER):
            # Halley for G(t) = t - log1p(t) - s; G' = t/(1+t), G'' = 1/(1+t)^2
            G = t - math.log1p(t) - s
            Gp = t / (1.0 + t)
            denom = Gp - G / (2.0 * Gp * (1.0 + t) * (1.0 + t))
            step = G / denom
            tn = t - step
            if tn <= 0.0:
                tn = 0.5 * t
            t = tn
            if abs(step) < _STEP_TOL * (1.0 + t):
                break
        return 1.0 + t
    w = L + math.log(L)
    for _ in range(_MAX_ITER):
        # Halley for F(w) = w - log(w) - L; F' = 1 - 1/w, F'' = 1/w^2
        F = w - math.log(w) - L
        Fp = 1.0 - 1.0 / w
        denom = Fp - F / (2.0 * Fp * w * w)
        step = F / denom
        wn = w - step
        if wn <= 1.0:
            wn = 0.5 * (w + 1.0)
        w = wn
        if abs(step) < _STEP_TOL * (1.0 + abs(w)):
            break
    return w
