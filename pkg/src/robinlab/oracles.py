"""Dense 1D discretizations used as independent checks on the analytic solvers.

The radial problem for angular degree kappa is discretized with piecewise
linear elements on [r_in, r_out] in the weighted form

    int r^{n-1} (g'^2 + kappa(kappa+n-2) g^2 / r^2) dr
        + alpha (r_out^{n-1} g(r_out)^2 + r_in^{n-1} g(r_in)^2)

against the lumped mass int r^{n-1} g^2 dr.  No Bessel functions are involved.
With r_in = 0 the inner end is the centre of a ball (no boundary term, and
g(0) = 0 enforced when kappa >= 1).  n = 1 with r_in = 0 is *not* a ball: use
``interval_fd_eigenvalues`` for intervals.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg, sparse

__all__ = ["interval_fd_eigenvalues", "interval_fd_operator", "radial_fd_eigenvalues"]

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def _assemble(nodes, weight_power, potential, alpha, robin_left, robin_right):
    # weight_power p: weight r^p; potential c: term c r^{p-2} g^2
    a, b = nodes[:-1], nodes[1:]
    h = b - a
    mid = 0.5 * (a + b)
    half = 0.5 * h
    xq = mid[:, None] + half[:, None] * _GAUSS_X[None, :]
    wq = half[:, None] * _GAUSS_W[None, :]
    w = xq**weight_power
    # element shape functions on quadrature points
    phi_l = (b[:, None] - xq) / h[:, None]
    phi_r = (xq - a[:, None]) / h[:, None]
    k_el = np.sum(wq * w, axis=1) / h**2
    diag = np.zeros(len(nodes))
    off = np.zeros(len(nodes) - 1)
    diag[:-1] += k_el
    diag[1:] += k_el
    off -= k_el
    if potential:
        pw = potential * wq * xq ** (weight_power - 2)
        diag[:-1] += np.sum(pw * phi_l * phi_l, axis=1)
        diag[1:] += np.sum(pw * phi_r * phi_r, axis=1)
        off += np.sum(pw * phi_l * phi_r, axis=1)
    mass = np.zeros(len(nodes))
    mw = np.sum(wq * w * phi_l, axis=1), np.sum(wq * w * phi_r, axis=1)
    mass[:-1] += mw[0]
    mass[1:] += mw[1]
    if robin_left:
        diag[0] += alpha * nodes[0] ** weight_power
    if robin_right:
        diag[-1] += alpha * nodes[-1] ** weight_power
    return diag, off, mass


def _lowest(diag, off, mass, k):
    s = 1.0 / np.sqrt(mass)
    d = diag * s * s
    e = off * s[:-1] * s[1:]
    return linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1), eigvals_only=True)


def radial_fd_eigenvalues(n, kappa, r_in, r_out, alpha, k=1, points=10_000):
    """Lowest k eigenvalues of the degree-kappa radial Robin problem.

    r_in = 0 gives the ball of radius r_out; r_in > 0 the spherical shell.
    Returns an ndarray of length k.
    """
    if not 0 <= r_in < r_out:
        raise ValueError("need 0 <= r_in < r_out")
    nodes = np.linspace(r_in, r_out, points + 1)
    potential = kappa * (kappa + n - 2)
    diag, off, mass = _assemble(nodes, n - 1, potential, alpha, r_in > 0, True)
    if r_in == 0 and kappa >= 1:
        # regularity at the centre: g(0) = 0
        diag, off, mass = diag[1:], off[1:], mass[1:]
    return _lowest(diag, off, mass, k)


def interval_fd_operator(a, alpha, points=200):
    """(K, m): sparse stiffness-plus-Robin matrix and lumped mass vector on [0, a].

    Tensor products of these give finite-difference oracles on rectangles.
    """
    nodes = np.linspace(0.0, a, points + 1)
    diag, off, mass = _assemble(nodes, 0, 0, alpha, True, True)
    return sparse.diags([off, diag, off], [-1, 0, 1], format="csr"), mass


def interval_fd_eigenvalues(a, alpha, k=1, points=10_000):
    """Lowest k eigenvalues of -u'' = lambda u on [0, a], u' + alpha u = 0 outward at both ends."""
    nodes = np.linspace(0.0, a, points + 1)
    diag, off, mass = _assemble(nodes, 0, 0, alpha, True, True)
    return _lowest(diag, off, mass, k)
