"""Numerical checks of Weinberger's trial-function argument for the Robin problem.

Everything here is 2D on meshed polygons, except the radial profiles (h, h~)
and their monotonicity checks, which work in any dimension.  Domain integrals
use a collapsed Gauss product rule on every mesh triangle; triangles near the
origin (where r is not smooth) and across the unit circle (where g'' jumps)
are subdivided first.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .ball_spectrum import BranchIndex, RadialProfile, ball_volume, lambda2, radial_eigenfunction
from .fem2d import PlanarDomain, SolverError, robin_spectrum_fem

__all__ = [
    "MonotonicityReport",
    "NormalizationError",
    "ProfileH",
    "Quadrature",
    "QuadratureError",
    "RecenterError",
    "TrialProfile",
    "WeinbergerResult",
    "ball_integral",
    "boundary_integral_gap",
    "h_profile",
    "monotonicity_check",
    "normalize_to_ball",
    "recenter",
    "transplant_gap",
    "trial_profile",
    "weinberger_bound",
]


class QuadratureError(RuntimeError):
    pass


class RecenterError(RuntimeError):
    pass


class NormalizationError(ValueError):
    pass


# -- profiles -------------------------------------------------------------------

@dataclass(frozen=True)
class TrialProfile:
    g: RadialProfile
    alpha: float
    lambda_ball: float
    n: int = 2

    def __post_init__(self):
        g0, dg0 = self.g.value_and_derivative(0.0)
        if g0 != 0.0 or dg0 <= 0:
            raise ValueError("trial profile needs g(0) = 0 and g'(0) > 0")
        if abs(self.g.robin_residual()) > 1e-8 * max(1.0, abs(dg0)):
            raise ValueError("g is not C^1 across r = 1")


def trial_profile(n: int, alpha: float) -> TrialProfile:
    """kappa = 1 ball eigenfunction, normalized g'(0) = 1, extended as g(1) e^{-alpha(r-1)}."""
    g = radial_eigenfunction(BranchIndex(n, 1, 0), alpha)
    return TrialProfile(g=g, alpha=float(alpha), lambda_ball=lambda2(n, alpha), n=n)


def _g_over_r(g: RadialProfile, r):
    # g(r)/r with the r -> 0 limit g'(0)
    val, der = g.value_and_derivative(r)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, val / safe, der), val, der


@dataclass(frozen=True)
class ProfileH:
    """Radial integrands h and h~ of the Rayleigh-quotient bound.

    h  = g'^2 + (n-1) g^2/r^2 + 2 alpha g g' + alpha (n-1) g^2 / r
    h~ = h - lambda_2(ball) g^2
    """

    trial: TrialProfile

    @property
    def alpha(self) -> float:
        return self.trial.alpha

    @property
    def n(self) -> int:
        return self.trial.n

    def h(self, r):
        r = np.asarray(r, dtype=float)
        q, g, dg = _g_over_r(self.trial.g, r)
        a, n = self.alpha, self.n
        out = dg * dg + (n - 1) * q * q + 2 * a * g * dg + a * (n - 1) * g * q
        return float(out) if out.ndim == 0 else out

    def h_tilde(self, r):
        g = self.trial.g(np.asarray(r, dtype=float))
        return self.h(r) - self.trial.lambda_ball * g * g

    def h_exterior(self, r):
        """Closed form of h for r >= 1: g(1)^2 (-alpha^2 + (n-1)(1 + alpha r)/r^2) e^{-2 alpha (r-1)}."""
        r = np.asarray(r, dtype=float)
        g1 = self.trial.g(1.0)
        a, n = self.alpha, self.n
        return g1 * g1 * (-a * a + (n - 1) * (1 + a * r) / r**2) * np.exp(-2 * a * (r - 1))

    def g_squared(self, r):
        g = self.trial.g(np.asarray(r, dtype=float))
        return g * g


def h_profile(n: int, alpha: float) -> ProfileH:
    lo = -(n + 1) / n
    if not lo <= alpha <= 0:
        raise ValueError(f"alpha must lie in [{lo:.6g}, 0]")
    return ProfileH(trial_profile(n, alpha))


class Monotone(enum.Enum):
    G_SQUARED = "g_squared"
    H = "h"
    H_TILDE = "h_tilde"


@dataclass(frozen=True)
class MonotonicityReport:
    which: str
    alpha: float
    n: int
    grid_size: int
    r_max: float
    band: float
    violations: int
    worst: float  # largest step against the expected direction
    slope_inside: float  # mean slope on (0, 1)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def monotonicity_check(profile: ProfileH, which="h", grid_size: int = 4000,
                       r_max: float = 3.0, band: float = 1e-10) -> MonotonicityReport:
    """Count grid steps going the wrong way by more than `band`.

    g^2 should be nondecreasing; h and h~ decreasing.  Strictness can't be
    certified on a grid, so 'no violations at the band' is what is reported.
    """
    which = Monotone(which)
    a = profile.alpha
    if which is Monotone.H and not -1 <= a <= 0:
        raise ValueError("h is only monotone for alpha in [-1, 0]")
    if which is Monotone.H_TILDE and not -(profile.n + 1) / profile.n <= a < -1:
        raise ValueError("h~ check needs alpha in [-(n+1)/n, -1)")
    r = np.linspace(r_max / grid_size, r_max, grid_size)
    f = {Monotone.G_SQUARED: profile.g_squared, Monotone.H: profile.h,
         Monotone.H_TILDE: profile.h_tilde}[which](r)
    d = np.diff(f)
    against = -d if which is Monotone.G_SQUARED else d
    inside = r <= 1
    slope = float(np.polyfit(r[inside], f[inside], 1)[0]) if inside.sum() > 2 else math.nan
    return MonotonicityReport(which.value, a, profile.n, grid_size, r_max, band,
                              int(np.count_nonzero(against > band)),
                              float(against.max(initial=-math.inf)), slope)


# -- quadrature -----------------------------------------------------------------

def _collapsed_rule(q: int):
    # Duffy map of the unit square onto the reference triangle: exact to degree 2q - 2
    x, w = np.polynomial.legendre.leggauss(q)
    x, w = 0.5 * (x + 1), 0.5 * w
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wt = np.outer(w, w) * xi
    return np.column_stack([(xi * (1 - eta)).ravel(), (xi * eta).ravel()]), wt.ravel()


_REF_PTS, _REF_W = _collapsed_rule(5)


def _split4(tris):
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return np.concatenate([np.stack(t, axis=1) for t in
                           ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))])


def _near(tris, center, radius):
    # conservative test: the triangle may meet the circle |x - center| = radius
    cen = tris.mean(axis=1)
    diam = np.max(np.linalg.norm(tris - cen[:, None, :], axis=2), axis=1)
    d = np.linalg.norm(cen - center, axis=1)
    return (d - diam <= radius) & (radius <= d + diam)


@dataclass
class Quadrature:
    """Points, weights and a P1 interpolation matrix on a meshed domain."""

    points: np.ndarray
    weights: np.ndarray
    parent: np.ndarray
    bary: np.ndarray
    domain: PlanarDomain

    @classmethod
    def build(cls, domain: PlanarDomain, center=(0.0, 0.0), radius: float = 1.0,
              origin_levels: int = 8, circle_levels: int = 3) -> "Quadrature":
        center = np.asarray(center, dtype=float)
        tris = domain.nodes[domain.triangles]
        parent = np.arange(len(tris))
        done_t, done_p = [], []
        for level in range(max(origin_levels, circle_levels)):
            flag = np.zeros(len(tris), dtype=bool)
            if level < origin_levels:
                flag |= _near(tris, center, 0.0)
            if level < circle_levels:
                flag |= _near(tris, center, radius)
            done_t.append(tris[~flag])
            done_p.append(parent[~flag])
            if not flag.any():
                tris = tris[:0]
                break
            tris = _split4(tris[flag])
            parent = np.tile(parent[flag], 4)
        done_t.append(tris)
        done_p.append(parent)
        tris = np.concatenate(done_t)
        parent = np.concatenate(done_p)
        e1 = tris[:, 1] - tris[:, 0]
        e2 = tris[:, 2] - tris[:, 0]
        jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        pts = (tris[:, None, 0] + _REF_PTS[None, :, 0:1] * e1[:, None]
               + _REF_PTS[None, :, 1:2] * e2[:, None]).reshape(-1, 2)
        w = (jac[:, None] * _REF_W[None, :]).ravel()
        par = np.repeat(parent, len(_REF_W))
        # barycentric coordinates in the parent mesh triangle
        P = domain.nodes[domain.triangles[par]]
        f1, f2 = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
        rel = pts - P[:, 0]
        det = f1[:, 0] * f2[:, 1] - f1[:, 1] * f2[:, 0]
        l1 = (rel[:, 0] * f2[:, 1] - rel[:, 1] * f2[:, 0]) / det
        l2 = (f1[:, 0] * rel[:, 1] - f1[:, 1] * rel[:, 0]) / det
        bary = np.column_stack([1 - l1 - l2, l1, l2])
        return cls(pts, w, par, bary, domain)

    def interpolate(self, nodal):
        idx = self.domain.triangles[self.parent]
        return np.einsum("qi,qi->q", self.bary, np.asarray(nodal)[idx])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def radii(self, center=(0.0, 0.0)):
        return np.linalg.norm(self.points - np.asarray(center), axis=1)


def ball_integral(f, n: int = 2, radius: float = 1.0) -> float:
    """int over the ball of a radial f: |S^{n-1}| int_0^R f(r) r^{n-1} dr."""
    sphere = n * ball_volume(n)
    val, _ = integrate.quad(lambda r: float(f(r)) * r ** (n - 1), 0.0, radius,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return sphere * val


def _boundary_integral(domain: PlanarDomain, f, center, q: int = 8) -> float:
    x, w = np.polynomial.legendre.leggauss(q)
    e = domain.boundary_edges
    a, b = domain.nodes[e[:, 0]], domain.nodes[e[:, 1]]
    L = np.linalg.norm(b - a, axis=1)
    t = 0.5 * (x + 1)
    pts = a[:, None] + t[None, :, None] * (b - a)[:, None]
    r = np.linalg.norm(pts - center, axis=2)
    return float(np.sum(0.5 * L[:, None] * w[None] * f(r)))


def boundary_integral_gap(domain: PlanarDomain, g, center=(0.0, 0.0), n: int = 2,
                          tol: float = 1e-9) -> float:
    """int_{dOmega} g^2 dS - int_Omega (2 g g' + (n-1) g^2 / r) dx.

    The domain integral is computed at two origin-grading depths; if they
    disagree by more than `tol` (relative) a QuadratureError is raised.
    """
    center = np.asarray(center, dtype=float)
    g = g.g if isinstance(g, TrialProfile) else g

    def integrand(r):
        q, val, der = _g_over_r(g, r)
        return 2 * val * der + (n - 1) * val * q

    bnd = _boundary_integral(domain, lambda r: g(r) ** 2, center)
    vals = []
    for levels in (8, 10):
        quad = Quadrature.build(domain, center, 1.0, origin_levels=levels)
        vals.append(quad.integrate(integrand(quad.radii(center))))
    if abs(vals[1] - vals[0]) > tol * max(1.0, abs(vals[1])):
        raise QuadratureError("domain integral did not settle under origin refinement")
    return bnd - vals[1]


def normalize_to_ball(domain: PlanarDomain) -> tuple[PlanarDomain, float]:
    """Scale the domain to the area of the unit disk; returns (scaled domain, t)."""
    t = math.sqrt(math.pi / domain.area)
    return domain.scaled(t), t


def _check_normalized(domain):
    if abs(domain.area - math.pi) > 1e-10 * math.pi:
        raise NormalizationError(f"domain area {domain.area!r} differs from the unit disk's")


def transplant_gap(domain: PlanarDomain, f, center=(0.0, 0.0)) -> float:
    """int_B f - int_Omega f for a radial f; >= 0 for decreasing f, <= 0 for increasing f."""
    _check_normalized(domain)
    quad = Quadrature.build(domain, center)
    return ball_integral(f) - quad.integrate(f(quad.radii(center)))


# -- centre of mass ---------------------------------------------------------------

class _AntiDerivative:
    """F(r) = int_0^r g, a Chebyshev interpolant on [0, 1] and closed form beyond.

    The interpolant is built once from Gauss-Legendre values of the integral;
    its error is checked at the midpoints and must stay below 1e-12.
    """

    def __init__(self, g: RadialProfile, q: int = 24, degree: int = 40):
        self.g = g
        x, w = np.polynomial.legendre.leggauss(q)
        x, w = 0.5 * (x + 1), 0.5 * w

        def exact(r):
            r = np.asarray(r, dtype=float)
            return r * (g(r[..., None] * x) @ w)

        self.cheb = np.polynomial.Chebyshev.interpolate(exact, degree, domain=[0.0, 1.0])
        probe = np.linspace(0.0, 1.0, 257)[1::2]
        if np.max(np.abs(self.cheb(probe) - exact(probe))) > 1e-12:
            raise QuadratureError("Chebyshev interpolant of F(r) is not accurate enough")
        self.g1 = float(g(1.0))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inner = self.cheb(np.minimum(r, 1.0))
        a = self.g.alpha
        beyond = np.maximum(r - 1.0, 0.0)
        if a == 0:
            outer = self.g1 * beyond
        else:
            outer = self.g1 * np.expm1(-a * beyond) / -a
        return inner + outer


@dataclass(frozen=True)
class RecenterResult:
    translation: np.ndarray  # subtract from the domain: Omega - y
    residual: float
    scale: float
    iterations: int
    method: str


def recenter(domain: PlanarDomain, v, g, tol: float = 1e-8, quad: Quadrature | None = None,
             maxiter: int = 200) -> RecenterResult:
    """Point y minimizing L(y) = int F(|y - x|) v(x) dx.

    After translating the domain by -y, int g(r) x_i / r v dx = 0.  `v` is a
    nonnegative nodal field.  Raises RecenterError if the orthogonality
    residual exceeds tol * ||g|| ||v||.
    """
    g = g.g if isinstance(g, TrialProfile) else g
    v = np.asarray(v, dtype=float)
    if np.any(v < 0) or not np.any(v > 0):
        raise ValueError("v must be nonnegative with positive integral")
    quad = quad or Quadrature.build(domain, domain.centroid, origin_levels=0, circle_levels=0)
    X, W = quad.points, quad.weights * quad.interpolate(v)
    F = _AntiDerivative(g)

    cache = {}

    def parts(y):
        # jac and hess are requested at the same iterates; evaluate g once per y
        key = tuple(y)
        if key not in cache:
            d = y[None, :] - X
            rho = np.linalg.norm(d, axis=1)
            q, val, der = _g_over_r(g, rho)
            e = d / np.where(rho > 0, rho, 1.0)[:, None]
            cache.clear()
            cache[key] = d, rho, q, val, der, e
        return cache[key]

    def fun(y):
        return float(np.dot(W, F(np.linalg.norm(y[None, :] - X, axis=1))))

    def jac(y):
        d, rho, q, val, der, e = parts(y)
        return (W * q) @ d  # g(rho)(y - x)/rho = (g/rho) d

    def hess(y):
        d, rho, q, val, der, e = parts(y)
        outer = np.einsum("q,qi,qj->ij", W * (der - q), e, e)
        return outer + np.eye(2) * np.sum(W * q)

    y0 = (W @ X) / W.sum()
    res = optimize.minimize(fun, y0, jac=jac, hess=hess, method="trust-exact",
                            options={"gtol": 1e-15, "maxiter": maxiter})
    y, method, nit = res.x, "trust-exact", res.nit
    if not np.all(np.isfinite(y)):
        res = optimize.minimize(fun, y0, method="Nelder-Mead",
                                options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 20 * maxiter})
        y, method, nit = res.x, "nelder-mead", res.nit
    for _ in range(5):  # Newton polish; L is convex so this is safe near the minimum
        step = np.linalg.solve(hess(y), jac(y))
        y = y - step
        if np.linalg.norm(step) < 1e-15 * max(1.0, np.linalg.norm(y)):
            break
    resid = float(np.linalg.norm(jac(y)))
    r_new = np.linalg.norm(X - y, axis=1)
    gnorm = math.sqrt(quad.integrate(g(r_new) ** 2))
    vnorm = math.sqrt(quad.integrate(quad.interpolate(v) ** 2))
    scale = gnorm * vnorm
    if resid > tol * scale:
        raise RecenterError(f"orthogonality residual {resid:.3g} above {tol * scale:.3g}")
    return RecenterResult(y, resid, scale, int(nit), method)


# -- end-to-end bound --------------------------------------------------------------

@dataclass
class WeinbergerResult:
    alpha: float
    bound: float
    ball_value: float
    mode: str  # "h" for alpha in [-1, 0], "h_tilde" below -1
    int_g2_domain: float
    int_g2_ball: float
    int_h_domain: float
    int_h_ball: float
    translation: np.ndarray
    lambda2_fem: float | None = None
    notes: list = field(default_factory=list)

    def __iter__(self):
        yield self.bound
        yield self.ball_value

    def chain_check(self, tol: float = 1e-9) -> bool:
        """Transplantation inequalities in the direction the proof needs.

        Each side may be off by tol * max(1, |ball value|): the ball itself is
        the equality case, where only quadrature round-off decides the sign.
        """
        ok = self.int_h_domain <= self.int_h_ball + tol * max(1.0, abs(self.int_h_ball))
        if self.mode == "h":
            ok = ok and self.int_g2_ball <= self.int_g2_domain + tol * max(1.0, self.int_g2_ball)
        return ok

    @property
    def chain_holds(self) -> bool:
        return self.chain_check()


def weinberger_bound(domain: PlanarDomain, alpha: float, use_fem: bool = True,
                     quad_levels: tuple = (8, 3)) -> WeinbergerResult:
    """Trial-function upper bound for lambda_2 on a domain of area pi.

    alpha in [-1, 0]: bound = int h / int g^2 over the recentred domain.
    alpha in [-3/2, -1): bound = lambda_2(B) + int h~ / int g^2 (int_h_* then
    hold the h~ integrals, whose ball value is zero).
    """
    _check_normalized(domain)
    if not -1.5 <= alpha <= 0:
        raise ValueError("alpha must lie in [-3/2, 0]")
    prof = h_profile(2, alpha)
    g = prof.trial.g
    notes = []
    lam2_fem = None
    v = np.ones(domain.n_nodes)
    if use_fem:
        try:
            res, vecs = robin_spectrum_fem(domain, alpha, 2, return_vectors=True)
            lam2_fem = float(res.eigenvalues[1])
            v = np.abs(vecs[:, 0])
        except SolverError as exc:
            notes.append(f"FEM unavailable, recentred with uniform weight: {exc}")
    rc = recenter(domain, v, g)
    dom = domain.translated(-rc.translation)
    quad = Quadrature.build(dom, (0.0, 0.0), 1.0, *quad_levels)
    r = quad.radii()
    adapted = alpha < -1
    hf = prof.h_tilde if adapted else prof.h
    ig_dom = quad.integrate(g(r) ** 2)
    ig_ball = ball_integral(prof.g_squared)
    ih_dom = quad.integrate(hf(r))
    ih_ball = ball_integral(hf)
    lam_ball = prof.trial.lambda_ball
    bound = lam_ball + ih_dom / ig_dom if adapted else ih_dom / ig_dom
    return WeinbergerResult(alpha=float(alpha), bound=bound, ball_value=lam_ball,
                            mode="h_tilde" if adapted else "h", int_g2_domain=ig_dom,
                            int_g2_ball=ig_ball, int_h_domain=ih_dom, int_h_ball=ih_ball,
                            translation=rc.translation, lambda2_fem=lam2_fem, notes=notes)
