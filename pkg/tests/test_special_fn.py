import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from robinlab import special_fn as sf

# reference values computed with mpmath at 30 digits
ZEROS = [
    (0, 1, 2.4048255576957727686),
    (1, 1, 3.8317059702075123156),
    (0, 5, 14.930917708487785948),
    (2.5, 3, 12.322940970566582052),
    (10, 1, 14.475500686554541238),
    (0.5, 2, 6.2831853071795864769),
]
JQUOT = [
    (1, 1, 0.73888573574470372871),
    (0.5, 2, -1.4153151087205715275),
    (3, 7.5, 3.692414428715558272),
    (0, 2, -5.1518406427364439137),
]
IQUOT = [
    (0, 1, 0.44638996589653450705),
    (1.5, 10, 9.6111110602184292038),
    (0, 500, 499.49974949843096626),
    (2, 0.3, 2.014971959099073643),
]
NORMS = [  # (nu, s, jnorm, inorm)
    (0, 1, 0.765197686557966551, 1.26606587775200834),
    (1, 3, 0.226039305683957639, 2.63558014493507293),
    (1, 8, 0.0586590867134786561, 99.9682841956400246),
    (0.5, 10, -0.0544021110889369813, 1101.32328747033934),
]


@pytest.mark.parametrize("nu,m,ref", ZEROS)
def test_bessel_zero_reference(nu, m, ref):
    assert sf.bessel_zero(nu, m) == pytest.approx(ref, rel=1e-14)


@pytest.mark.parametrize("nu,r,ref", JQUOT)
def test_jquot_reference(nu, r, ref):
    assert sf.jquot(nu, r) == pytest.approx(ref, rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("nu,r,ref", IQUOT)
def test_iquot_reference(nu, r, ref):
    assert sf.iquot(nu, r) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("nu,s,jref,iref", NORMS)
def test_normalized_functions(nu, s, jref, iref):
    assert sf.jnorm(nu, s) == pytest.approx(jref, rel=1e-12)
    assert sf.inorm(nu, s) == pytest.approx(iref, rel=1e-12)


def test_plain_bessel_values():
    assert sf.bessel_k(0, 1.0) == pytest.approx(0.421024438240708333, rel=1e-14)
    assert sf.bessel_k(2.5, 0.1) == pytest.approx(1187.02122364189294, rel=1e-13)
    assert sf.bessel_i(3, 50.0) == pytest.approx(2.67776413888394127e20, rel=1e-13)
    assert sf.bessel_j(2, 7.3) == pytest.approx(-0.265594911883436911, rel=1e-13)
    # half-integer closed form
    assert sf.bessel_k(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-14)


def test_jquot_pole_is_signalled():
    with pytest.raises(sf.PoleError):
        sf.jquot(0, sf.bessel_zero(0, 1))
    # the unguarded value just beside the pole is huge and changes sign
    j = sf.bessel_zero(0, 1)
    assert sf.jquot(0, j - 1e-6) < -1e5
    assert sf.jquot(0, j + 1e-6) > 1e5


def test_bad_arguments():
    with pytest.raises(ValueError):
        sf.jquot(-1, 1.0)
    with pytest.raises(ValueError):
        sf.jquot(0, 0.0)
    with pytest.raises(ValueError):
        sf.bessel_zero(0, 0)
    with pytest.raises(ValueError):
        sf.ZeroTable(0.0, (2.0, 1.0))


def test_zero_table_interlacing():
    for nu in (0, 0.5, 1, 2.5, 7):
        a = sf.zero_table(nu, 12)
        b = sf.zero_table(nu + 1, 12)
        assert len(a) == 12
        for m in range(1, 12):
            assert a[m] < b[m] < a[m + 1]
        with pytest.raises(IndexError):
            a[0]


def test_zero_table_matches_scipy_and_mcmahon():
    for nu in (0, 1, 3):
        ours = sf.zero_table(nu, 20).zeros
        np.testing.assert_allclose(ours, special.jn_zeros(nu, 20), rtol=1e-14)
    # McMahon is an asymptotic: good for large m
    assert sf.mcmahon_zero(0.5, 40) == pytest.approx(sf.bessel_zero(0.5, 40), rel=1e-10)


@pytest.mark.parametrize("nu", [0, 0.5, 1, 2, 3.5])
@pytest.mark.parametrize("r", [0.05, 0.4, 1.0, 1.9])
def test_series_agree_with_continued_fraction(nu, r):
    assert sf.jquot_series(nu, r) == pytest.approx(sf.jquot(nu, r), rel=1e-10, abs=1e-12)
    assert sf.iquot_series(nu, r) == pytest.approx(sf.iquot(nu, r), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("nu", [0, 1, 2.5])
def test_quotients_satisfy_riccati_equation(nu):
    # q = r f'/f with f solving Bessel's equation obeys r q' = -q^2 -/+ r^2 + nu^2
    r = np.linspace(0.3, 2.2, 7)
    d = 1e-5
    qj = lambda x: sf.jquot(nu, x)
    qi = lambda x: sf.iquot(nu, x)
    dqj = (qj(r + d) - qj(r - d)) / (2 * d)
    dqi = (qi(r + d) - qi(r - d)) / (2 * d)
    np.testing.assert_allclose(r * dqj, -qj(r) ** 2 - r**2 + nu**2, atol=1e-6)
    np.testing.assert_allclose(r * dqi, -qi(r) ** 2 + r**2 + nu**2, atol=1e-6)


def test_quotients_from_recurrence():
    nu, r = 1.5, np.array([0.7, 2.0, 5.0])
    np.testing.assert_allclose(sf.jquot(nu, r), nu - r * special.jv(nu + 1, r) / special.jv(nu, r), rtol=1e-12)
    np.testing.assert_allclose(sf.iquot(nu, r), nu + r * special.iv(nu + 1, r) / special.iv(nu, r), rtol=1e-12)


def test_norm_derivatives():
    s, d = 2.3, 1e-6
    for nu in (0, 1, 2.5):
        fd = (sf.jnorm(nu, s + d) - sf.jnorm(nu, s - d)) / (2 * d)
        assert sf.jnorm_deriv(nu, s) == pytest.approx(fd, rel=1e-7, abs=1e-9)
        fd = (sf.inorm(nu, s + d) - sf.inorm(nu, s - d)) / (2 * d)
        assert sf.inorm_deriv(nu, s) == pytest.approx(fd, rel=1e-7)


@settings(max_examples=60, deadline=None)
@given(nu=st.floats(0, 6), a=st.floats(0.01, 40), b=st.floats(0.01, 40))
def test_iquot_increasing_property(nu, a, b):
    if abs(a - b) < 1e-6:
        return
    lo, hi = min(a, b), max(a, b)
    assert sf.iquot(nu, lo) < sf.iquot(nu, hi)


@settings(max_examples=60, deadline=None)
@given(nu=st.floats(0, 5), t1=st.floats(0.02, 0.98), t2=st.floats(0.02, 0.98))
def test_jquot_decreasing_below_first_zero(nu, t1, t2):
    if abs(t1 - t2) < 1e-6:
        return
    j = sf.bessel_zero(nu, 1)
    lo, hi = sorted((t1 * j, t2 * j))
    assert sf.jquot(nu, lo) > sf.jquot(nu, hi)
