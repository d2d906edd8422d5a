"""Bessel functions of real order, their r*f'/f quotients and the zeros of J_nu.

Plain evaluation of J, I and K is delegated to ``scipy.special``; the quotient
functions are computed from continued fractions for J_{nu+1}/J_nu and
I_{nu+1}/I_nu so they stay accurate right up to the poles of the J-quotient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

__all__ = [
    "PoleError",
    "ZeroTable",
    "bessel_i",
    "bessel_j",
    "bessel_k",
    "bessel_zero",
    "iquot",
    "iquot_series",
    "inorm",
    "inorm_deriv",
    "jnorm",
    "jnorm_deriv",
    "jquot",
    "jquot_series",
    "mcmahon_zero",
    "zero_table",
]

# |J_nu| below POLE_GUARD * hypot(J_nu, J_{nu+1}) is treated as a pole of jquot
POLE_GUARD = 1e-13
_CF_TOL = 1e-16
_TINY = 1e-300
_SERIES_RADIUS = 1.0


class PoleError(ArithmeticError):
    """Raised when a J-quotient is requested (numerically) at a zero of J_nu."""


def _check_order(nu):
    if not (np.all(np.isfinite(nu)) and np.all(np.asarray(nu) >= 0)):
        raise ValueError(f"Bessel order must be finite and nonnegative, got {nu!r}")


def _scalar_or_array(out, *inputs):
    if all(np.ndim(a) == 0 for a in inputs):
        return float(out)
    return out


def bessel_j(nu, x):
    """J_nu(x) for nu >= 0, x >= 0."""
    _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j is defined here for x >= 0 only")
    return _scalar_or_array(special.jv(nu, x), nu, x)


def bessel_i(nu, x):
    """I_nu(x) for nu >= 0, x >= 0.

    Raises OverflowError once I_nu(x) leaves double range (x of about 713).
    """
    _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_i is defined here for x >= 0 only")
    # exponentially scaled evaluation, rescaled in log space
    scaled = special.ive(nu, x)
    with np.errstate(over="ignore", divide="ignore"):
        log_val = np.log(np.where(scaled > 0, scaled, 1.0)) + x
    if np.any(log_val > 709.7):
        raise OverflowError("I_nu(x) exceeds double precision range")
    out = np.where(scaled > 0, np.exp(log_val), scaled)
    return _scalar_or_array(out, nu, x)


def bessel_k(nu, x):
    """K_nu(x) for nu >= 0, x > 0."""
    _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("K_nu is singular at x = 0; need x > 0")
    return _scalar_or_array(special.kv(nu, x), nu, x)


def _lentz_ratio(nu, x, sign):
    """Continued fraction for f_{nu+1}(x)/f_nu(x).

    sign=+1 gives I_{nu+1}/I_nu, sign=-1 gives J_{nu+1}/J_nu:
        1 / (2(nu+1)/x + sign / (2(nu+2)/x + sign / (...)))
    Vectorized modified Lentz; x must be positive.
    """
    nu, x = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    nu = nu.astype(float).copy()
    x = x.astype(float).copy()
    inv_x = 1.0 / x
    f = np.full(x.shape, _TINY)
    c = f.copy()
    d = np.zeros(x.shape)
    done = np.zeros(x.shape, dtype=bool)
    max_iter = int(2000 + 4 * np.max(x, initial=0.0))
    for k in range(1, max_iter):
        a = 1.0 if k == 1 else float(sign)
        b = 2.0 * (nu + k) * inv_x
        d = b + a * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + a / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = c * d
        f = np.where(done, f, f * delta)
        done |= np.abs(delta - 1.0) < _CF_TOL
        if done.all():
            break
    return f


def iquot(nu, r):
    """r I_nu'(r) / I_nu(r); equals nu in the limit r -> 0."""
    _check_order(nu)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("iquot needs r >= 0")
    safe = np.where(r > 0, r, 1.0)
    out = np.where(r > 0, nu + safe * _lentz_ratio(nu, safe, +1), np.asarray(nu, dtype=float))
    return _scalar_or_array(out, nu, r)


def jquot_raw(nu, r):
    """Unguarded r J_nu'(r) / J_nu(r) from the continued fraction (internal)."""
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    out = np.where(r > 0, nu - safe * _lentz_ratio(nu, safe, -1), np.asarray(nu, dtype=float))
    return out


def jquot(nu, r, guard=POLE_GUARD):
    """r J_nu'(r) / J_nu(r), via xJ_nu' = nu J_nu - x J_{nu+1}.

    Raises PoleError where |J_nu(r)| < guard * hypot(J_nu(r), J_{nu+1}(r)).
    """
    _check_order(nu)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("jquot needs r > 0 (the r -> 0 limit is nu)")
    if guard:
        jn = special.jv(nu, r)
        jn1 = special.jv(np.asarray(nu) + 1.0, r)
        if np.any(np.abs(jn) < guard * np.hypot(jn, jn1)):
            raise PoleError(f"r is numerically a zero of J_{nu}")
    return _scalar_or_array(jquot_raw(nu, r), nu, r)


def mcmahon_zero(nu, m):
    """McMahon large-m asymptotic estimate of j_{nu,m}."""
    mu = 4.0 * nu * nu
    b = (m + 0.5 * nu - 0.25) * math.pi
    e = 8.0 * b
    return (b - (mu - 1) / e - 4 * (mu - 1) * (7 * mu - 31) / (3 * e**3)
            - 32 * (mu - 1) * (83 * mu**2 - 982 * mu + 3779) / (15 * e**5))


@dataclass(frozen=True)
class ZeroTable:
    nu: float
    zeros: tuple

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.zeros, self.zeros[1:])):
            raise ValueError("zeros must be strictly increasing")

    def __getitem__(self, m):
        # 1-based, matching j_{nu,m}
        if m < 1:
            raise IndexError("zero index starts at 1")
        return self.zeros[m - 1]

    def __len__(self):
        return len(self.zeros)


def _polish_zero(nu, a, b):
    f = lambda x: special.jv(nu, x)
    x = optimize.brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    # one Newton step with J_nu' = (nu/x) J_nu - J_{nu+1}
    jd = nu / x * special.jv(nu, x) - special.jv(nu + 1, x)
    if jd != 0:
        step = special.jv(nu, x) / jd
        if abs(step) < 1e-10 * x:
            x -= step
    return x


@lru_cache(maxsize=256)
def _zeros(nu, count):
    # consecutive zeros of J_nu are more than 3 apart for every nu >= 0,
    # so a 0.5 step never jumps over a sign change; j_{nu,1} > nu
    zs = []
    step = 0.5
    lo = max(nu, 1e-3)
    flo = special.jv(nu, lo)
    while len(zs) < count:
        hi = lo + step
        fhi = special.jv(nu, hi)
        if flo == 0.0:
            zs.append(lo)
        elif flo * fhi < 0:
            zs.append(_polish_zero(nu, lo, hi))
        lo, flo = hi, fhi
    return tuple(zs)


def zero_table(nu, count):
    """First `count` positive zeros of J_nu as an immutable ZeroTable."""
    _check_order(nu)
    if count < 1:
        raise ValueError("count must be positive")
    return ZeroTable(float(nu), _zeros(float(nu), int(count)))


def bessel_zero(nu, m):
    """j_{nu,m}, the m-th positive zero of J_nu (m >= 1)."""
    if m < 1:
        raise ValueError("zero index m must be >= 1")
    return zero_table(nu, m)[m]


def _tails(nu, j):
    # tails of sum 1/j^2 and sum 1/j^4 beyond the given zeros, from the
    # Rayleigh sums 1/(4(nu+1)) and 1/(16(nu+1)^2(nu+2))
    inv2 = 1.0 / (j * j)
    t2 = 1.0 / (4.0 * (nu + 1.0)) - np.sum(inv2)
    t4 = 1.0 / (16.0 * (nu + 1.0) ** 2 * (nu + 2.0)) - np.sum(inv2 * inv2)
    return t2, t4


def jquot_series(nu, r, terms=200):
    """Truncated zero-product expansion nu + 2 sum r^2/(r^2 - j_{nu,m}^2).

    The tail beyond `terms` is expanded in powers of r^2/j^2 and summed with
    the Rayleigh sums; it is an independent check on jquot, not a fast path.
    """
    j = np.asarray(zero_table(nu, terms).zeros)
    r2 = float(r) ** 2
    t2, t4 = _tails(nu, j)
    return nu + 2.0 * np.sum(r2 / (r2 - j * j)) - 2.0 * (r2 * t2 + r2 * r2 * t4)


def iquot_series(nu, r, terms=200):
    """Truncated expansion nu + 2 sum r^2/(r^2 + j_{nu,m}^2)."""
    j = np.asarray(zero_table(nu, terms).zeros)
    r2 = float(r) ** 2
    t2, t4 = _tails(nu, j)
    return nu + 2.0 * np.sum(r2 / (r2 + j * j)) + 2.0 * (r2 * t2 - r2 * r2 * t4)


def _norm_series(nu, s, sign):
    # sum_k (sign s^2/4)^k / (k! (nu+1)_k)
    q = sign * 0.25 * s * s
    term = np.ones_like(s)
    total = term.copy()
    for k in range(1, 60):
        term = term * q / (k * (nu + k))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1.0)):
            break
    return total


def _jv_fast(nu, x):
    # dedicated routines for the orders the planar profiles use; x >= 1 here,
    # where the upward step to order 2 loses nothing
    if nu == 0:
        return special.j0(x)
    if nu == 1:
        return special.j1(x)
    if nu == 2:
        return 2.0 * special.j1(x) / x - special.j0(x)
    return special.jv(nu, x)


def _ive_fast(nu, x):
    if nu == 0:
        return special.i0e(x)
    if nu == 1:
        return special.i1e(x)
    if nu == 2:
        return special.i0e(x) - 2.0 * special.i1e(x) / x
    return special.ive(nu, x)


def _norm(nu, s, sign):
    _check_order(nu)
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < _SERIES_RADIUS
    out = np.empty_like(s)
    if np.any(small):
        out[small] = _norm_series(nu, s[small], sign)
    big = ~small
    if np.any(big):
        sb = s[big]
        logpref = special.gammaln(nu + 1.0) + nu * np.log(2.0 / sb)
        if sign < 0:
            out[big] = np.exp(logpref) * _jv_fast(nu, sb)
        else:
            out[big] = np.exp(logpref + sb) * _ive_fast(nu, sb)
    return out


def jnorm(nu, s):
    """Gamma(nu+1) (2/s)^nu J_nu(s): the entire function equal to 1 at s = 0."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    return _scalar_or_array(_norm(nu, s_arr, -1).reshape(np.shape(s)), s)


def inorm(nu, s):
    """Gamma(nu+1) (2/s)^nu I_nu(s): the entire function equal to 1 at s = 0."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    return _scalar_or_array(_norm(nu, s_arr, +1).reshape(np.shape(s)), s)


def jnorm_deriv(nu, s):
    """d/ds jnorm(nu, s) = -s jnorm(nu+1, s) / (2(nu+1))."""
    return -np.asarray(s) * jnorm(nu + 1.0, s) / (2.0 * (nu + 1.0))


def inorm_deriv(nu, s):
    """d/ds inorm(nu, s) = s inorm(nu+1, s) / (2(nu+1))."""
    return np.asarray(s) * inorm(nu + 1.0, s) / (2.0 * (nu + 1.0))
