"""Intervals, rectangles and spherical shells, plus the ball-to-shell transition.

Interval eigenfunctions are even or odd about the midpoint, which turns the
Robin problem on [0, a] (half-width b = a/2) into four scalar equations:

    even, lambda > 0:  theta tan theta = alpha b        theta = sqrt(lambda) b
    odd,  lambda > 0: -theta cot theta = alpha b
    even, lambda < 0:  t tanh t = -alpha b              t = sqrt(-lambda) b
    odd,  lambda < 0:  t coth t = -alpha b

For shells the radial solution is r^{1-n/2} (c1 I_nu(y r) + c2 K_nu(y r)) and
the two Robin conditions (outward normal at both spheres) give a 2x2
determinant in y = sqrt(-lambda).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .ball_spectrum import ball_volume, eigenvalue_on_branch, harmonic_multiplicity, BranchIndex

__all__ = [
    "Annulus",
    "BracketError",
    "NoNegativeEigenvalue",
    "OptimizationFailure",
    "Rectangle",
    "Which",
    "annulus_determinant",
    "annulus_lambda_negative",
    "annulus_negative_eigenvalues",
    "annulus_eigenvalue",
    "best_annulus",
    "interval_robin_eigen",
    "rectangle_lambda",
    "shell_advantage",
    "small_hole_coefficient",
    "TransitionResult",
    "transition_alpha",
    "transition_search",
]


class NoNegativeEigenvalue(ValueError):
    pass


class OptimizationFailure(RuntimeError):
    pass


class BracketError(RuntimeError):
    pass


class Which(enum.Enum):
    LAMBDA1 = "lambda1"
    LAMBDA2 = "lambda2"

    @property
    def index(self) -> int:
        return 1 if self is Which.LAMBDA1 else 2


@dataclass(frozen=True)
class Annulus:
    n: int
    r_in: float
    r_out: float

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise ValueError("need 0 < r_in < r_out")

    @property
    def volume(self) -> float:
        return ball_volume(self.n, self.r_out) - ball_volume(self.n, self.r_in)

    @classmethod
    def with_volume(cls, n, r_in, volume):
        unit = ball_volume(n)
        r_out = (r_in**n + volume / unit) ** (1.0 / n)
        return cls(n, r_in, r_out)


@dataclass(frozen=True)
class Rectangle:
    """Unit-area rectangle with sides L and 1/L."""

    L: float

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("side length must be positive")

    @property
    def sides(self):
        return self.L, 1.0 / self.L


# --- intervals -------------------------------------------------------------

_RTOL = 4 * np.finfo(float).eps


def _even_theta(c, i):
    # root of theta sin - c cos on the i-th even window
    f = lambda th: th * math.sin(th) - c * math.cos(th)
    if i == 0:
        return optimize.brentq(f, 0.0, 0.5 * math.pi, xtol=1e-15, rtol=_RTOL)
    return optimize.brentq(f, (i - 0.5) * math.pi, (i + 0.5) * math.pi, xtol=1e-15, rtol=_RTOL)


def _odd_theta(c, i):
    # root of theta cos + c sin on (i pi, (i+1) pi)
    f = lambda th: th * math.cos(th) + c * math.sin(th)
    if i == 0:
        lo = 1e-8
        while f(lo) <= 0 and lo > 1e-300:
            lo *= 1e-4
        return optimize.brentq(f, lo, math.pi, xtol=1e-15, rtol=_RTOL)
    return optimize.brentq(f, i * math.pi, (i + 1) * math.pi, xtol=1e-15, rtol=_RTOL)


def _grow_root(f, lo=0.0):
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=_RTOL)


def interval_robin_eigen(a: float, alpha: float, k: int) -> float:
    """k-th Robin eigenvalue (k >= 1) of -u'' on [0, a] with u_nu + alpha u = 0."""
    if a <= 0 or k < 1:
        raise ValueError("need a > 0 and k >= 1")
    b = 0.5 * a
    c = alpha * b
    family, i = ("even", (k - 1) // 2) if k % 2 == 1 else ("odd", k // 2 - 1)
    if family == "even":
        if i == 0:
            if alpha == 0:
                return 0.0
            if alpha < 0:
                t = _grow_root(lambda t: t * math.tanh(t) + c)
                return -((t / b) ** 2)
        return (_even_theta(c, i) / b) ** 2
    if i == 0:
        if c == -1:
            return 0.0
        if c < -1:
            # t coth t increases from 1; write as t cosh t + c sinh t < 0 branch
            t = _grow_root(lambda t: (t / math.tanh(t) if t > 0 else 1.0) + c, lo=1e-300)
            return -((t / b) ** 2)
    return (_odd_theta(c, i) / b) ** 2


def rectangle_lambda(rect: Rectangle, alpha: float, k: int) -> float:
    """k-th Robin eigenvalue of the rectangle, by sorted sums of interval eigenvalues."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s1, s2 = rect.sides
    e1 = [interval_robin_eigen(s1, alpha, i) for i in range(1, k + 1)]
    e2 = [interval_robin_eigen(s2, alpha, j) for j in range(1, k + 1)]
    sums = sorted(x + y for x in e1 for y in e2)
    return sums[k - 1]


# --- shells ----------------------------------------------------------------

def _radial_pair(n, nu, y, r):
    """Values and r-derivatives of r^{1-n/2} I_nu(y r) and r^{1-n/2} K_nu(y r).

    Returned with I scaled by exp(-y r) and K by exp(+y r).
    """
    s = y * r
    p = 1 - n / 2
    rp = r**p
    ie, ie1 = special.ive(nu, s), special.ive(nu + 1, s)
    ke, ke1 = special.kve(nu, s), special.kve(nu + 1, s)
    # I' = I_{nu+1} + nu/s I_nu,  K' = -K_{nu+1} + nu/s K_nu
    di = y * (ie1 + nu / s * ie)
    dk = y * (-ke1 + nu / s * ke)
    dgi = p * r ** (p - 1) * ie + rp * di
    dgk = p * r ** (p - 1) * ke + rp * dk
    return rp * ie, dgi, rp * ke, dgk


def annulus_determinant(ann: Annulus, alpha: float, kappa: int, y):
    """Robin determinant for the shell as a function of y = sqrt(-lambda) > 0.

    Rows are the outer condition g' + alpha g = 0 at r_out and the inner
    condition -g' + alpha g = 0 at r_in.  The value is multiplied by
    exp(-y (r_out - r_in)) times a positive constant, so it is finite for all
    y > 0 and has the same zeros and sign.
    """
    n = ann.n
    nu = n / 2 + kappa - 1
    y = np.asarray(y, dtype=float)
    gi2, dgi2, gk2, dgk2 = _radial_pair(n, nu, y, ann.r_out)
    gi1, dgi1, gk1, dgk1 = _radial_pair(n, nu, y, ann.r_in)
    out_i = dgi2 + alpha * gi2
    out_k = dgk2 + alpha * gk2
    in_i = -dgi1 + alpha * gi1
    in_k = -dgk1 + alpha * gk1
    # the cross term carries the factor exp(-2 y (r_out - r_in)) after scaling
    decay = np.exp(-2.0 * y * (ann.r_out - ann.r_in))
    return out_i * in_k - decay * out_k * in_i


def zero_eigenvalue_determinant(ann: Annulus, alpha: float, kappa: int) -> float:
    """Same determinant for lambda = 0, with radial solutions r^kappa, r^{-(kappa+n-2)}."""
    n = ann.n
    q = -(kappa + n - 2)

    def row(r, sgn):
        # sgn * g'(r) + alpha g(r) for both solutions
        if n == 2 and kappa == 0:
            return (alpha, sgn / r + alpha * math.log(r))
        return (sgn * kappa * r ** (kappa - 1) + alpha * r**kappa,
                sgn * q * r ** (q - 1) + alpha * r**q)

    o = row(ann.r_out, 1.0)
    i = row(ann.r_in, -1.0)
    return o[0] * i[1] - o[1] * i[0]


def _scan_grid(ann, alpha, y_max):
    w = ann.r_out - ann.r_in
    base = min(1.0 / w, 1.0 / ann.r_in, 1.0)
    small = np.geomspace(1e-6 * base, 0.5, 60)
    large = np.linspace(0.5, y_max, max(400, int(40 * y_max * w)))
    return np.unique(np.concatenate([small, large]))


def annulus_negative_eigenvalues(ann: Annulus, alpha: float, kappa: int):
    """All negative eigenvalues of the shell on the degree-kappa branch, ascending.

    There are at most two, since the Robin term is a rank-two perturbation of
    a nonnegative form.
    """
    if alpha >= 0:
        return []
    n = ann.n
    # inner-boundary states need -s K'/K = |alpha| r_in - (n/2 - 1) and -s K'/K > s,
    # outer ones need s I'/I ~ |alpha| r_out with s I'/I > s - nu - 1/2: so
    # y stays below |alpha| + O(nu / r_out); the margin is generous
    nu = n / 2 + kappa - 1
    y_max = 1.5 * abs(alpha) + (2 * nu + 4) / ann.r_out + 2.0
    ys = _scan_grid(ann, alpha, y_max)
    vals = annulus_determinant(ann, alpha, kappa, ys)
    f = lambda y: float(annulus_determinant(ann, alpha, kappa, y))
    roots = []
    for k in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(optimize.brentq(f, ys[k], ys[k + 1], xtol=1e-14, rtol=_RTOL))
    return sorted(-(y * y) for y in roots)


def annulus_lambda_negative(ann: Annulus, alpha: float, kappa: int) -> float:
    """Lowest (most negative) eigenvalue on the degree-kappa branch of the shell."""
    vals = annulus_negative_eigenvalues(ann, alpha, kappa)
    if not vals:
        raise NoNegativeEigenvalue(f"no negative eigenvalue for kappa={kappa} at alpha={alpha}")
    return vals[0]


def annulus_eigenvalue(ann: Annulus, alpha: float, which: Which, kappas=(0, 1, 2)) -> float:
    """lambda_1 or lambda_2 of the shell from the merged negative branch lists."""
    which = Which(which)
    merged = []
    for kappa in kappas:
        mult = harmonic_multiplicity(ann.n, kappa)
        for lam in annulus_negative_eigenvalues(ann, alpha, kappa):
            merged.extend([lam] * mult)
    merged.sort()
    if len(merged) < which.index:
        raise NoNegativeEigenvalue(f"fewer than {which.index} negative eigenvalues")
    return merged[which.index - 1]


@dataclass(frozen=True)
class AnnulusOptimum:
    annulus: Annulus
    value: float
    bracket: tuple  # (r_in_left, r_in_right) around the optimum
    bracket_values: tuple
    at_endpoint: str | None = None  # "small_hole" or "thin_shell" if not interior


def _ball_value(n, volume, alpha, which):
    R = (volume / ball_volume(n)) ** (1.0 / n)
    lam = eigenvalue_on_branch(BranchIndex(n, which.index - 1, 0), R * alpha)
    return lam / R**2


def _search(n, volume, alpha, which, grid):
    r_vol = (volume / ball_volume(n)) ** (1.0 / n)
    lo, hi = 1e-3 * r_vol, 0.999 * r_vol

    def objective(r_in):
        ann = Annulus.with_volume(n, r_in, volume)
        try:
            return annulus_eigenvalue(ann, alpha, which)
        except NoNegativeEigenvalue:
            return -math.inf

    # geometric pre-scan: near the transition the optimum sits at small holes
    rs = np.geomspace(lo, hi, grid)
    vals = np.array([objective(r) for r in rs])
    if not np.any(np.isfinite(vals)):
        raise OptimizationFailure("no shell in the bracket has enough negative eigenvalues")
    i = int(np.argmax(vals))
    if i == 0 or i == grid - 1:
        where = "small_hole" if i == 0 else "thin_shell"
        j = 1 if i == 0 else grid - 2
        return AnnulusOptimum(Annulus.with_volume(n, rs[i], volume), float(vals[i]),
                              (float(rs[min(i, j)]), float(rs[max(i, j)])),
                              (float(vals[min(i, j)]), float(vals[max(i, j)])), where)
    a, c = rs[i - 1], rs[i + 1]
    res = optimize.minimize_scalar(lambda r: -objective(r), bracket=(a, rs[i], c),
                                   method="golden", tol=1e-10)
    r_best = float(res.x)
    if not a <= r_best <= c or -res.fun < vals[i]:
        r_best = float(rs[i])
    return AnnulusOptimum(Annulus.with_volume(n, r_best, volume), objective(r_best),
                          (float(a), float(c)), (float(vals[i - 1]), float(vals[i + 1])))


def best_annulus(n: int, volume: float, alpha: float, which: Which,
                 grid: int = 40) -> AnnulusOptimum:
    """Shell of the given volume maximizing lambda_1 or lambda_2 at alpha < 0.

    Inner radii are searched on [1e-3, 0.999] times the equal-volume ball
    radius.  Raises OptimizationFailure when the maximum sits on the
    small-hole end (the shells degenerate to the ball, which is then better)
    or on the thin-shell end (bracket too short).
    """
    if alpha >= 0:
        raise ValueError("shell search is restricted to alpha < 0")
    opt = _search(n, volume, alpha, Which(which), grid)
    if opt.at_endpoint == "small_hole":
        raise OptimizationFailure("objective is maximal at the degenerate small-hole end")
    if opt.at_endpoint == "thin_shell":
        raise OptimizationFailure("objective is maximal at the thin-shell end of the bracket")
    return opt


def shell_advantage(n: int, volume: float, alpha: float, which: Which, grid: int = 40) -> float:
    """max over searched shells of lambda(shell) - lambda(ball), endpoints included."""
    which = Which(which)
    best = _search(n, volume, alpha, which, grid).value
    return best - _ball_value(n, volume, alpha, which)


@dataclass(frozen=True)
class TransitionResult:
    alpha: float
    bracket: tuple  # (shell wins, ball wins) after bisection
    degenerate: bool  # optimal hole shrinks to a point at the transition
    method: str


def transition_search(n: int, volume: float, which: Which, lo: float = -20.0,
                      hi: float = -1.0, tol: float = 1e-4) -> TransitionResult:
    """Find where the best shell's eigenvalue stops beating the ball's.

    alpha is stepped down from `hi` in unit steps until some shell wins, the
    resulting unit bracket is bisected to `tol`.  When the winning shells have
    vanishing holes at the end of the bisection the transition is degenerate
    and is located instead as the sign change of the leading small-hole
    coefficient (see small_hole_coefficient).
    """
    which = Which(which)

    def f(a):
        try:
            return shell_advantage(n, volume, a, which)
        except (OptimizationFailure, NoNegativeEigenvalue):
            return -math.inf

    if f(hi) >= 0:
        raise BracketError(f"shell already wins at alpha={hi}")
    a_hi = hi
    for a in np.arange(hi, lo - 0.5, -1.0)[1:]:
        if f(a) > 0:
            lo = a
            break
        a_hi = a
    else:
        raise BracketError(f"no sign change of shell advantage on [{lo}, {hi}]")
    hi = a_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if _search(n, volume, lo, which, 40).at_endpoint != "small_hole":
        return TransitionResult(mid, (lo, hi), False, "bisection")
    g = lambda a: small_hole_coefficient(n, volume, a, which)
    a, b = lo - 0.25, hi + 0.25
    if g(a) * g(b) >= 0:
        return TransitionResult(mid, (lo, hi), True, "bisection")
    root = optimize.brentq(g, a, b, xtol=tol * 1e-2)
    return TransitionResult(root, (lo, hi), True, "small_hole_coefficient")


def transition_alpha(n: int, volume: float, which: Which,
                     lo: float = -20.0, hi: float = -1.0, tol: float = 1e-4) -> float:
    """Transition value alpha* (see transition_search)."""
    return transition_search(n, volume, which, lo, hi, tol).alpha


def small_hole_coefficient(n: int, volume: float, alpha: float, which: Which,
                           rel_radius: float = 2e-3) -> float:
    """Limit of (lambda(shell) - lambda(ball)) / r_in^n as r_in -> 0.

    Richardson-extrapolated from hole radii r and r/2 (r = rel_radius times
    the equal-volume ball radius), removing the r^(n+1) correction.
    """
    which = Which(which)
    r_vol = (volume / ball_volume(n)) ** (1.0 / n)
    ball = _ball_value(n, volume, alpha, which)

    def ratio(r):
        lam = annulus_eigenvalue(Annulus.with_volume(n, r, volume), alpha, which)
        return (lam - ball) / r**n

    r = rel_radius * r_vol
    return 2.0 * ratio(0.5 * r) - ratio(r)
