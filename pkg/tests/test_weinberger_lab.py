import math

import numpy as np
import pytest
from scipy import integrate

from robinlab import fem2d
from robinlab import weinberger_lab as wl
from robinlab.ball_spectrum import lambda2

from conftest import corpus_mesh, disk_mesh


class Linear:
    """g(r) = r, the exact kappa = 1 profile at alpha = -1 inside the unit ball."""

    def __call__(self, r):
        return np.asarray(r, dtype=float)

    def value_and_derivative(self, r):
        r = np.asarray(r, dtype=float)
        return r, np.ones_like(r)


class Zero(Linear):
    def __call__(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def value_and_derivative(self, r):
        z = np.zeros_like(np.asarray(r, dtype=float))
        return z, z


@pytest.fixture(scope="module")
def normalized():
    return {k: wl.normalize_to_ball(d)[0] for k, d in corpus_mesh(0.08).items()}


def test_h_closed_form_at_minus_one():
    prof = wl.h_profile(2, -1.0)
    r = np.linspace(1e-3, 1, 50)
    np.testing.assert_allclose(prof.h(r), 2 - 3 * r, atol=1e-12)
    np.testing.assert_allclose(prof.h_tilde(r), prof.h(r), atol=1e-12)
    assert prof.h(0.0) == pytest.approx(2.0)


@pytest.mark.parametrize("n,alpha", [(2, -1.0), (2, -0.4), (3, -1.2), (3, 0.0)])
def test_exterior_closed_form(n, alpha):
    prof = wl.h_profile(n, alpha)
    r = np.linspace(1.0, 3.0, 30)
    np.testing.assert_allclose(prof.h(r), prof.h_exterior(r), rtol=1e-10, atol=1e-12)


def test_h_at_zero_alpha_is_neumann_integrand():
    prof = wl.h_profile(2, 0.0)
    g = prof.trial.g
    r = np.linspace(0.1, 2.0, 20)
    np.testing.assert_allclose(prof.h(r), g.derivative(r) ** 2 + g(r) ** 2 / r**2, rtol=1e-12)


def test_h_profile_range():
    with pytest.raises(ValueError):
        wl.h_profile(2, -1.6)
    with pytest.raises(ValueError):
        wl.h_profile(2, 0.1)


def test_trial_profile_properties():
    t = wl.trial_profile(2, -0.5)
    assert t.g(0.0) == 0.0 and t.g.derivative(0.0) > 0
    r = np.linspace(0, 1, 101)
    assert np.all(np.diff(t.g(r)) > 0)
    assert t.lambda_ball == lambda2(2, -0.5)


def test_monotonicity_examples():
    rep = wl.monotonicity_check(wl.h_profile(2, -1.0), "h")
    assert rep.ok and rep.slope_inside == pytest.approx(-3.0, abs=1e-9)
    rep = wl.monotonicity_check(wl.h_profile(2, 0.0), "g_squared")
    assert rep.ok
    g2 = wl.h_profile(2, 0.0).g_squared(np.linspace(1, 3, 10))
    np.testing.assert_allclose(g2, g2[0], rtol=1e-14)
    rep = wl.monotonicity_check(wl.h_profile(3, -1.2), "h_tilde")
    assert rep.ok and rep.r_max == 3.0


@pytest.mark.parametrize("n", [2, 3])
def test_monotonicity_over_alpha(n):
    for a in np.linspace(-1, 0, 11):
        prof = wl.h_profile(n, a)
        assert wl.monotonicity_check(prof, "h").ok
        assert wl.monotonicity_check(prof, "g_squared").ok
    for a in np.linspace(-(n + 1) / n, -1, 6, endpoint=False):
        assert wl.monotonicity_check(wl.h_profile(n, a), "h_tilde").ok


def test_monotonicity_preconditions():
    with pytest.raises(ValueError):
        wl.monotonicity_check(wl.h_profile(2, -1.2), "h")
    with pytest.raises(ValueError):
        wl.monotonicity_check(wl.h_profile(2, -0.5), "h_tilde")


def test_ball_integral_of_h_tilde_vanishes():
    for a in (-1.1, -1.3, -1.5):
        assert abs(wl.ball_integral(wl.h_profile(2, a).h_tilde)) < 1e-8


def test_boundary_gap_disk_vanishes():
    d = disk_mesh(0.05)
    t = wl.trial_profile(2, -0.6)
    # the polygonal disk is not exactly round, so only a small gap remains
    assert abs(wl.boundary_integral_gap(d, t)) < 5e-3
    assert wl.boundary_integral_gap(d, Zero()) == 0.0


def test_boundary_gap_square_linear_profile():
    d = fem2d.mesh_polygon(np.array([[-.5, -.5], [.5, -.5], [.5, .5], [-.5, .5]]), 0.1)
    # independent oracle: int r^2 over the boundary is 4/3; int 3 r dx by adaptive quadrature
    area_term, _ = integrate.dblquad(lambda y, x: 3 * math.hypot(x, y), -0.5, 0.5, -0.5, 0.5,
                                     epsabs=1e-13)
    expected = 4 / 3 - area_term
    gap = wl.boundary_integral_gap(d, Linear())
    assert gap == pytest.approx(expected, abs=1e-9)
    assert gap > 0


def test_transplant_gap(normalized):
    sq = normalized["square"]
    assert wl.transplant_gap(sq, lambda r: np.ones_like(r)) == pytest.approx(0.0, abs=1e-12)
    assert wl.transplant_gap(sq, wl.h_profile(2, -1.2).h_tilde) > 0
    assert wl.transplant_gap(sq, wl.h_profile(2, -0.5).g_squared) < 0
    disk, _ = wl.normalize_to_ball(disk_mesh(0.05))
    assert abs(wl.transplant_gap(disk, wl.h_profile(2, -0.5).h)) < 1e-3
    with pytest.raises(wl.NormalizationError):
        wl.transplant_gap(corpus_mesh(0.08)["square"], lambda r: r)


def test_recenter_symmetric_and_translated():
    g = wl.trial_profile(2, -0.5)
    sq = corpus_mesh(0.08)["square"]
    res = wl.recenter(sq, np.ones(sq.n_nodes), g)
    assert np.linalg.norm(res.translation) < 1e-9
    c = np.array([0.3, -0.2])
    d = disk_mesh(0.08).translated(c)
    res = wl.recenter(d, np.ones(d.n_nodes), g)
    # the translation that restores orthogonality sends the centre back to the origin
    np.testing.assert_allclose(res.translation, c, atol=1e-8)


def test_recenter_residual_on_triangle_with_eigenfunction():
    tri = corpus_mesh(0.08)["equilateral_triangle"].translated((0.1, 0.05))
    _, vecs = fem2d.robin_spectrum_fem(tri, -0.8, 1, return_vectors=True)
    v = np.abs(vecs[:, 0])
    g = wl.trial_profile(2, -0.8).g
    res = wl.recenter(tri, v, g)
    # independent residual on a refined quadrature centred at the new origin
    quad = wl.Quadrature.build(tri.translated(-res.translation), (0.0, 0.0), 1.0, 0, 0)
    r = quad.radii()
    w = quad.interpolate(v) * g(r) / np.where(r > 0, r, 1.0)
    moments = [quad.integrate(w * quad.points[:, i]) for i in (0, 1)]
    assert np.linalg.norm(moments) <= 1e-8 * res.scale


def test_recenter_rejects_bad_weight():
    sq = corpus_mesh(0.08)["square"]
    with pytest.raises(ValueError):
        wl.recenter(sq, np.zeros(sq.n_nodes), wl.trial_profile(2, -0.5))


def test_weinberger_disk_equality():
    disk, _ = wl.normalize_to_ball(disk_mesh(0.05))
    res = wl.weinberger_bound(disk, -0.5)
    assert res.bound == pytest.approx(lambda2(2, -0.5), abs=1e-3)
    b, ball = wl.weinberger_bound(disk, 0.0)
    assert ball == pytest.approx(3.3899577166718887)
    assert b == pytest.approx(ball, abs=1e-3)


def test_weinberger_square_at_minus_one(normalized):
    res = wl.weinberger_bound(normalized["square"], -1.0)
    assert res.mode == "h"
    assert res.int_h_domain <= 0
    assert res.bound <= 0 and res.lambda2_fem <= res.bound
    assert res.chain_holds


@pytest.mark.parametrize("name", ["square", "equilateral_triangle", "l_shape"])
@pytest.mark.parametrize("alpha", [-1.4, -0.7, 0.0])
def test_weinberger_chain_on_corpus(normalized, name, alpha):
    res = wl.weinberger_bound(normalized[name], alpha)
    assert res.chain_holds
    assert res.bound <= res.ball_value + 1e-8
    if res.lambda2_fem >= 0 or res.mode == "h_tilde":
        assert res.lambda2_fem <= res.bound + 1e-8
    if res.mode == "h_tilde":
        assert abs(res.int_h_ball) <= 1e-8


def test_weinberger_translation_invariance(normalized):
    d = normalized["random_hexagon"]
    a = wl.weinberger_bound(d, -0.6)
    b = wl.weinberger_bound(d.translated((0.37, -0.21)), -0.6)
    assert abs(a.bound - b.bound) < 1e-8


def test_weinberger_preconditions(normalized):
    with pytest.raises(wl.NormalizationError):
        wl.weinberger_bound(corpus_mesh(0.08)["square"], -0.5)
    with pytest.raises(ValueError):
        wl.weinberger_bound(normalized["square"], -1.6)


def test_bound_only_mode(normalized):
    res = wl.weinberger_bound(normalized["square"], -0.3, use_fem=False)
    assert res.lambda2_fem is None and res.chain_holds
