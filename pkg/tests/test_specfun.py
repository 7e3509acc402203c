import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herglotz.specfun import (
    ConvergenceError,
    SeriesBudget,
    bessel_bound,
    bessel_j,
    bessel_j_mp,
    bessel_product_integral,
    bessel_product_series,
    gauss_legendre,
    gegenbauer,
)


def test_bessel_trivial_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(0.5, 0.0) == 0.0


def test_bessel_half_order_closed_form():
    # J_{1/2}(r) = sqrt(2/(pi r)) sin(r); the closed form is itself checked
    # against the series at several radii, including the zero at r = pi.
    for r in [0.3, 1.0, math.pi, 4.2, 9.7]:
        closed = math.sqrt(2.0 / (math.pi * r)) * math.sin(r)
        assert bessel_j(0.5, r) == pytest.approx(closed, rel=1e-12, abs=1e-15)
    assert abs(bessel_j(0.5, math.pi)) < 1e-15


def test_bessel_vs_scipy():
    scipy_special = pytest.importorskip("scipy.special")
    rs = np.linspace(0.0, 10.0, 41)
    for nu in [0, 1, 2, 5, 8, 0.5, 1.5, 4.5, 8.5]:
        ours = bessel_j(nu, rs)
        ref = scipy_special.jv(nu, rs)
        assert np.abs(ours - ref).max() < 1e-12


def test_bessel_reflection_exact():
    # negative integer orders reuse the positive-order series bit for bit
    for n in [1, 2, 5]:
        for r in [0.0, 0.7, 3.3]:
            assert bessel_j(-n, r) == (-1) ** n * bessel_j(n, r)


def test_bessel_rejects_bad_orders():
    with pytest.raises(ValueError):
        bessel_j(0.3, 1.0)
    with pytest.raises(ValueError):
        bessel_j(-0.5, 1.0)
    with pytest.raises(ValueError):
        bessel_j(1, -1.0)


def test_budget_validation_and_exhaustion():
    with pytest.raises(ValueError):
        SeriesBudget(rel_tol=0.0)
    with pytest.raises(ValueError):
        SeriesBudget(max_terms=0)
    with pytest.raises(ConvergenceError) as exc:
        bessel_j(0, 40.0, SeriesBudget(max_terms=5))
    assert exc.value.terms == 5
    assert exc.value.partial is not None


def test_bessel_array_input():
    rs = np.array([0.0, 0.5, 2.0])
    vals = bessel_j(2, rs)
    assert vals.shape == (3,)
    assert vals[0] == 0.0
    assert vals[2] == pytest.approx(bessel_j(2, 2.0))


def test_bound_values():
    assert bessel_bound(0, 5.0) == 1.0
    assert bessel_bound(1, 0.0) == 0.0
    # 2/(sqrt(pi) Gamma(5/2)) * 1^2 = 8/(3 pi)
    assert bessel_bound(2, 2.0) == pytest.approx(8.0 / (3.0 * math.pi), rel=1e-15)


def test_bound_dominates_on_lattice():
    rs = np.linspace(0.0, 12.0, 49)
    for nu in [0, 0.5, 1, 1.5, 2, 3, 4.5, 6]:
        bounds = np.array([bessel_bound(nu, r) for r in rs])
        assert np.all(np.abs(bessel_j(nu, rs)) <= bounds + 1e-15)


def test_bound_rejects_small_positive_orders():
    with pytest.raises(ValueError):
        bessel_bound(0.3, 1.0)


def test_gegenbauer_low_degrees():
    assert gegenbauer(0, 0.9, 0.4) == 1.0
    # C_1^lam(z) = 2 lam z
    assert gegenbauer(1, 0.7, -0.3) == pytest.approx(-0.42, rel=1e-14)
    # C_2^1(z) = 4 z^2 - 1 vanishes at z = 1/2
    assert abs(gegenbauer(2, 1.0, 0.5)) < 1e-14


def test_gegenbauer_exact_mode():
    assert gegenbauer(2, Fraction(1, 2), Fraction(0), exact=True) == Fraction(-1, 2)
    assert gegenbauer(3, Fraction(1, 2), Fraction(1, 3), exact=True) == Fraction(
        5, 2
    ) * Fraction(1, 27) - Fraction(3, 2) * Fraction(1, 3)
    assert gegenbauer(0, Fraction(2), Fraction(7, 5), exact=True) == 1


def test_gegenbauer_rejects_bad_parameters():
    with pytest.raises(ValueError):
        gegenbauer(-1, 1.0, 0.0)
    with pytest.raises(ValueError):
        gegenbauer(2, 0.0, 0.0)


def test_product_series_trivial():
    assert bessel_product_series(0, 0, 0, 0.0) == 1.0
    assert bessel_product_series(1, 2, 0, 0.0) == 0.0


def test_product_series_matches_two_factor_product():
    for (n, m, alpha, r) in [(1, 1, 0.5, 1.3), (0, 3, 0.0, 2.2), (2, 4, 1.0, 0.9)]:
        direct = bessel_j(n + alpha, r) * bessel_j(m + alpha, r)
        assert bessel_product_series(n, m, alpha, r) == pytest.approx(
            direct, rel=1e-12, abs=1e-16
        )


def test_product_integral_examples():
    assert bessel_product_integral(0, 0, 0, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert bessel_product_integral(2, 0, 0, 1.0) == pytest.approx(
        bessel_j(2, 1.0) * bessel_j(0, 1.0), abs=1e-12
    )
    assert bessel_product_integral(1, 1, 0.5, 0.7) == pytest.approx(
        bessel_j(1.5, 0.7) ** 2, abs=1e-12
    )


def test_product_consistency_small_grid():
    rs = np.linspace(0.4, 10.0, 9)
    for alpha in (0.0, 0.5, 1.0):
        for n in range(0, 5):
            for m in range(n, 5):
                series = bessel_product_series(n, m, alpha, rs)
                direct = bessel_j(n + alpha, rs) * bessel_j(m + alpha, rs)
                tol = 1e-10 * (1.0 + np.abs(direct))
                assert np.all(np.abs(series - direct) <= tol)


def test_small_r_leading_order():
    # bessel_product_series(n,m,alpha,r) / r^(n+m+2 alpha) tends to a finite
    # nonzero limit; the ratio must be stable across three decades
    for (n, m, alpha) in [(0, 0, 0.0), (1, 2, 0.5), (3, 1, 1.0)]:
        ratios = []
        for r in (1e-3, 1e-4, 1e-5):
            ratios.append(bessel_product_series(n, m, alpha, r) / r ** (n + m + 2 * alpha))
        assert ratios[0] != 0
        assert ratios[1] == pytest.approx(ratios[0], rel=1e-5)
        assert ratios[2] == pytest.approx(ratios[1], rel=1e-6)


def test_product_recurrence_identity():
    # Exact four-term dependency of consecutive products, derived from the
    # recurrence J_{v-1} + J_{v+1} = (2v/r) J_v applied on both factors:
    #   (2+a) J_a J_{a+2} + (2+a) J_{a+2}^2 = (1+a) J_{a+1}^2 + (1+a) J_{a+1} J_{a+3}
    # It holds for every order shift and is a strong cross-check of the series.
    rs = np.linspace(0.1, 6.0, 13)
    for alpha in (0.0, 0.5, 1.0, 2.5):
        lhs = (2 + alpha) * (
            bessel_product_series(0, 2, alpha, rs) + bessel_product_series(2, 2, alpha, rs)
        )
        rhs = (1 + alpha) * (
            bessel_product_series(1, 1, alpha, rs) + bessel_product_series(1, 3, alpha, rs)
        )
        assert np.abs(lhs - rhs).max() < 1e-13


def test_gauss_legendre_exactness():
    x, w = gauss_legendre(0.0, 2.0, 8)
    # degree-15 exactness covers x^7 easily
    assert np.sum(w * x**7) == pytest.approx(2.0**8 / 8.0, rel=1e-13)
    x, w = gauss_legendre(-1.0, 1.0, 16, panels=4)
    assert np.sum(w * x**10) == pytest.approx(2.0 / 11.0, rel=1e-12)


def test_gamma_accuracy_on_half_integers():
    # the series prefactors use math.gamma; half-integer values have the exact
    # closed form Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!), so the platform
    # implementation can be certified to the 1e-13 relative level we rely on
    from fractions import Fraction

    for n in range(0, 20):
        exact = (
            Fraction(math.factorial(2 * n), 4**n * math.factorial(n))
            * Fraction(math.sqrt(math.pi))
        )
        got = math.gamma(n + 0.5)
        assert abs(got / float(exact) - 1.0) < 1e-13
    for n in range(1, 25):
        assert math.gamma(n) == pytest.approx(math.factorial(n - 1), rel=1e-13)


def test_bessel_mp_matches_double():
    from mpmath import mp

    with mp.workdps(30):
        for nu in (0, 1.5, 3):
            for r in (0.2, 1.0, 5.5):
                assert float(bessel_j_mp(nu, r)) == pytest.approx(
                    bessel_j(nu, r), rel=1e-13
                )


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=0, max_value=8),
    st.sampled_from([0.0, 0.5, 1.0]),
    st.floats(min_value=0.0, max_value=10.0),
)
def test_product_symmetry_and_bound(n, alpha, r):
    m = (n * 3 + 1) % 7
    a = bessel_product_series(n, m, alpha, r)
    b = bessel_product_series(m, n, alpha, r)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)
    nu = n + alpha
    if nu == 0 or nu >= 0.5:
        assert abs(bessel_j(nu, r)) <= bessel_bound(nu, r) + 1e-14
