"""Robin spectrum of the n-dimensional ball for every real boundary parameter.

Separating variables gives radial parts r^{1-n/2} I_nu(y r) (negative
eigenvalues, y = sqrt(-lambda)), r^kappa (zero eigenvalue, only at
alpha = -kappa) and r^{1-n/2} J_nu(x r) (positive eigenvalues,
x = sqrt(lambda)), with nu = n/2 + kappa - 1.  The Robin condition
g'(1) + alpha g(1) = 0 becomes

    quot_nu(s) = n/2 - 1 - alpha,

where quot is iquot or jquot from :mod:`robinlab.special_fn`.  Each branch is
found on a window where the quotient is strictly monotone, so exactly one root
is bracketed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import special_fn as sf

__all__ = [
    "BranchIndex",
    "Eigenpair",
    "NoSolutionError",
    "Normalization",
    "ProfileKind",
    "RadialProfile",
    "SpectrumResult",
    "alpha_of_lambda",
    "ball_volume",
    "eigenvalue_on_branch",
    "harmonic_multiplicity",
    "lambda2",
    "lambda2_ball",
    "lambda2_bounds",
    "radial_eigenfunction",
    "rescale",
    "spectrum",
    "theorem_interval",
]

ROOT_XTOL = 1e-15


class NoSolutionError(ValueError):
    """The requested branch has no eigenvalue of the requested sign at alpha."""


@dataclass(frozen=True)
class BranchIndex:
    n: int
    kappa: int
    m: int = 0

    def __post_init__(self):
        if self.n < 2 or self.kappa < 0 or self.m < 0:
            raise ValueError(f"invalid branch {self}")

    @property
    def nu(self) -> float:
        return self.n / 2 + self.kappa - 1


class ProfileKind(enum.Enum):
    MODIFIED_BESSEL = "modified_bessel"
    POWER = "power"
    BESSEL = "bessel"


class Normalization(enum.Enum):
    G0_EQ_1 = "g0_eq_1"
    GPRIME0_EQ_1 = "gprime0_eq_1"


@dataclass(frozen=True)
class RadialProfile:
    """Radial part g(r) of a ball eigenfunction, extended past r = 1.

    On [0, 1] the profile is c r^kappa Phi(scale r), where Phi is the
    normalized Bessel or modified Bessel function (Phi(0) = 1) or Phi = 1 for
    the power kind; for r > 1 it is g(1) exp(-alpha (r - 1)), which matches
    g'(1) when the Robin condition holds.  With c = 1 the leading Taylor
    coefficient is one, i.e. g(0) = 1 for kappa = 0 and g'(0) = 1 for
    kappa = 1 (normalization is None for kappa >= 2).
    """

    kind: ProfileKind
    scale: float
    normalization: Normalization | None
    alpha: float
    n: int = 2
    kappa: int = 1
    coeff: float = 1.0
    extend: bool = True

    @property
    def nu(self) -> float:
        return self.n / 2 + self.kappa - 1

    def _inner(self, r):
        s = self.scale * r
        if self.kind is ProfileKind.POWER:
            phi = np.ones_like(r)
            dphi = np.zeros_like(r)
        elif self.kind is ProfileKind.BESSEL:
            phi = sf.jnorm(self.nu, s)
            dphi = self.scale * sf.jnorm_deriv(self.nu, s)
        else:
            phi = sf.inorm(self.nu, s)
            dphi = self.scale * sf.inorm_deriv(self.nu, s)
        k = self.kappa
        rk = r**k
        if k == 0:
            d_rk = np.zeros_like(r)
        else:
            d_rk = k * r ** (k - 1)
        return self.coeff * rk * phi, self.coeff * (d_rk * phi + rk * dphi)

    def value_and_derivative(self, r):
        """(g(r), g'(r)) for r >= 0, vectorized."""
        r = np.asarray(r, dtype=float)
        rr = np.atleast_1d(r)
        g = np.empty_like(rr)
        dg = np.empty_like(rr)
        inside = (rr <= 1.0) | (not self.extend)
        if np.any(inside):
            g[inside], dg[inside] = self._inner(rr[inside])
        out = ~inside
        if np.any(out):
            g1, _ = self._inner(np.array([1.0]))
            e = g1[0] * np.exp(-self.alpha * (rr[out] - 1.0))
            g[out] = e
            dg[out] = -self.alpha * e
        if r.ndim == 0:
            return float(g[0]), float(dg[0])
        return g, dg

    def __call__(self, r):
        return self.value_and_derivative(r)[0]

    def derivative(self, r):
        return self.value_and_derivative(r)[1]

    def robin_residual(self) -> float:
        """g'(1-) + alpha g(1), zero for an eigenfunction."""
        g, dg = self._inner(np.array([1.0]))
        return float(dg[0] + self.alpha * g[0])


@dataclass(frozen=True)
class Eigenpair:
    lam: float
    branch: BranchIndex
    multiplicity: int
    profile: RadialProfile | None = None


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    source: str = "analytic"
    branches: list = field(default_factory=list)
    mesh_h: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be sorted")


def ball_volume(n: int, radius: float = 1.0) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * radius**n


def harmonic_multiplicity(n: int, kappa: int) -> int:
    """Dimension of the degree-kappa spherical harmonics on S^{n-1}."""
    if kappa == 0:
        return 1
    return math.comb(kappa + n - 1, n - 1) - math.comb(kappa + n - 3, n - 1)


def _target(n, alpha):
    return n / 2 - 1 - alpha


def _negative_root(nu, c):
    # iquot(nu, .) increases from nu to infinity; need c > nu
    f = lambda y: sf.iquot(nu, y) - c
    hi = max(1.0, c)
    while f(hi) <= 0:
        hi *= 2.0
    lo = hi / 2.0
    while lo > 1e-300 and f(lo) > 0:
        lo /= 2.0
        if lo < 1e-150:
            # c - nu is below double resolution of the quotient
            return 0.0
    return optimize.brentq(f, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def _positive_root(nu, c, m):
    if m == 0:
        # jquot decreases from nu to -inf on (0, j_{nu,1}); need c < nu
        j1 = sf.bessel_zero(nu, 1)
        f = lambda x: float(sf.jquot_raw(nu, x)) - c
        hi = j1 * (1 - 1e-15)
        lo = 0.5 * j1
        while f(lo) < 0:
            lo *= 0.5
        if f(hi) > 0:  # c below -1e15: Dirichlet limit to double precision
            return j1
        return optimize.brentq(f, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    # pole-free form x J' - c J, which changes sign between consecutive zeros
    zeros = sf.zero_table(nu, m + 1)
    a, b = zeros[m], zeros[m + 1]
    f = lambda x: (nu - c) * special.jv(nu, x) - x * special.jv(nu + 1, x)
    return optimize.brentq(f, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def eigenvalue_on_branch(branch: BranchIndex, alpha: float) -> float:
    """Eigenvalue of the unit ball on branch (n, kappa, m) at parameter alpha."""
    n, k, m = branch.n, branch.kappa, branch.m
    nu = branch.nu
    c = _target(n, alpha)
    if m == 0:
        if alpha == -k:
            return 0.0
        if alpha < -k:
            return -_negative_root(nu, c) ** 2
        return _positive_root(nu, c, 0) ** 2
    return _positive_root(nu, c, m) ** 2


def negative_branch_eigenvalue(branch: BranchIndex, alpha: float) -> float:
    """Strict negative sub-branch; raises NoSolutionError unless alpha < -kappa."""
    if branch.m != 0 or alpha >= -branch.kappa:
        raise NoSolutionError(f"no negative eigenvalue on {branch} at alpha={alpha}")
    return eigenvalue_on_branch(branch, alpha)


def positive_branch_eigenvalue(branch: BranchIndex, alpha: float) -> float:
    """Strict positive sub-branch; raises NoSolutionError for m = 0, alpha <= -kappa."""
    if branch.m == 0 and alpha <= -branch.kappa:
        raise NoSolutionError(f"no positive eigenvalue on {branch} at alpha={alpha}")
    return eigenvalue_on_branch(branch, alpha)


def alpha_of_lambda(branch: BranchIndex, lam: float) -> float:
    """Inverse of the branch curve: alpha = -sqrt|lam| G'(sqrt|lam|)/G(sqrt|lam|)."""
    n, nu = branch.n, branch.nu
    if lam == 0:
        if branch.m != 0:
            raise NoSolutionError("branches with m >= 1 never reach lambda = 0")
        return -float(branch.kappa)
    if lam < 0:
        if branch.m != 0:
            raise NoSolutionError("branches with m >= 1 are positive")
        return n / 2 - 1 - sf.iquot(nu, math.sqrt(-lam))
    x = math.sqrt(lam)
    zeros = sf.zero_table(nu, branch.m + 1)
    lo = 0.0 if branch.m == 0 else zeros[branch.m]
    if not lo < x < zeros[branch.m + 1]:
        raise NoSolutionError(f"lambda={lam} outside the window of {branch}")
    return n / 2 - 1 - sf.jquot(nu, x)


def _branch_value(n, kappa, m, alpha, cache):
    key = (kappa, m)
    if key not in cache:
        cache[key] = eigenvalue_on_branch(BranchIndex(n, kappa, m), alpha)
    return cache[key]


def spectrum(n: int, alpha: float, count: int) -> SpectrumResult:
    """First `count` Robin eigenvalues of the unit ball, with multiplicity.

    Branches are pruned with two facts: the m = 0 values increase with kappa,
    and branch (kappa, m >= 1) lies above j_{nu,m}^2.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cache = {}
    # provisional threshold from lowest branches only
    total = 0
    kappa = 0
    while total < count:
        _branch_value(n, kappa, 0, alpha, cache)
        total += harmonic_multiplicity(n, kappa)
        kappa += 1
    threshold = max(cache.values())
    candidates = []
    kappa = 0
    while True:
        low = _branch_value(n, kappa, 0, alpha, cache)
        if low > threshold and kappa > 0:
            break
        nu = n / 2 + kappa - 1
        mult = harmonic_multiplicity(n, kappa)
        candidates.append((low, kappa, 0, mult))
        m = 1
        while sf.bessel_zero(nu, m) ** 2 < threshold:
            candidates.append((_branch_value(n, kappa, m, alpha, cache), kappa, m, mult))
            m += 1
        kappa += 1
    candidates.sort()
    values, labels = [], []
    for lam, k, m, mult in candidates:
        for _ in range(mult):
            values.append(lam)
            labels.append(BranchIndex(n, k, m))
    return SpectrumResult(
        eigenvalues=np.array(values[:count]),
        source="analytic",
        branches=labels[:count],
        diagnostics={"branches_evaluated": len(cache)},
    )


def lambda2(n: int, alpha: float) -> float:
    """lambda_2 of the unit ball, asserting it comes from kappa = 1, m = 0."""
    res = spectrum(n, alpha, 2)
    lam = res.eigenvalues[1]
    k1 = eigenvalue_on_branch(BranchIndex(n, 1, 0), alpha)
    if abs(lam - k1) > 1e-12 * max(1.0, abs(k1)):
        raise AssertionError(f"second eigenvalue at alpha={alpha} is not on the kappa=1 branch")
    return k1


def lambda2_ball(n: int, alpha: float, radius: float = 1.0) -> float:
    """lambda_2 of the ball of given radius, via the scaling relation."""
    lam_unit = lambda2(n, radius * alpha)
    return rescale(lam_unit, radius, alpha)[0]


def lambda2_bounds(n: int, alpha: float) -> tuple[float, float]:
    """Explicit (lower, upper) bounds on lambda_2 of the unit ball for alpha <= 0."""
    if alpha > 0:
        raise ValueError("bounds are only available for alpha <= 0")
    if alpha >= -1:
        upper = 0.5 * (n + 2) * (n + 4) * (math.sqrt(1 + 4 * (1 + alpha) / (n + 4)) - 1)
        return 0.0, upper
    a1 = alpha + 1
    return -a1 * a1 + (n + 2) * a1, -a1 * a1 + n * a1


def rescale(lambda_unit: float, t: float, alpha: float) -> tuple[float, float]:
    """Scaling relation lambda(Omega; alpha) = t^-2 lambda(Omega / t; t alpha).

    `lambda_unit` is an eigenvalue of Omega / t at parameter t*alpha; returns
    the corresponding eigenvalue of Omega at alpha, and t*alpha.
    """
    if t <= 0:
        raise ValueError("scale factor must be positive")
    return lambda_unit / t**2, t * alpha


def theorem_interval(n: int, R: float) -> tuple[float, float]:
    """Range of alpha, [-(n+1)/(n R), 0], where the ball maximizes lambda_2."""
    if n < 2 or R <= 0:
        raise ValueError("need n >= 2 and R > 0")
    return -(n + 1) / (n * R), 0.0


def radial_eigenfunction(branch: BranchIndex, alpha: float,
                         normalization: Normalization | None = None) -> RadialProfile:
    """Radial profile of the eigenfunction on `branch`, extended exponentially for r > 1."""
    lam = eigenvalue_on_branch(branch, alpha)
    expected = {0: Normalization.G0_EQ_1, 1: Normalization.GPRIME0_EQ_1}.get(branch.kappa)
    if normalization is None:
        normalization = expected
    elif normalization is not expected:
        raise ValueError(f"{normalization} is not a valid normalization for kappa={branch.kappa}")
    if lam == 0:
        kind, scale = ProfileKind.POWER, float(branch.kappa)
    elif lam < 0:
        kind, scale = ProfileKind.MODIFIED_BESSEL, math.sqrt(-lam)
    else:
        kind, scale = ProfileKind.BESSEL, math.sqrt(lam)
    return RadialProfile(kind=kind, scale=scale, normalization=normalization,
                         alpha=float(alpha), n=branch.n, kappa=branch.kappa)
