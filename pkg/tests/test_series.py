from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from airydet.series import (
    DifferentialPolynomial,
    DimensionError,
    IntegrationError,
    SeriesDomainError,
    a_coeffs,
    b_coeffs,
    g_eval,
    g_saddle_series,
    hierarchy_equation,
    hierarchy_residual,
    lenard,
    make_model,
    phase_sum,
    q_of_model,
    z_plus_series,
    z_plus_value,
)


def residue_oracle(n, taus, numerator):
    """-[z^-1] of Q^{numerator/2n} via a sympy series at infinity."""
    z, w = sp.symbols("z w", positive=True)
    Q = z ** (2 * n) + sum((-1) ** (n + j) * t * z ** (2 * j) for j, t in enumerate(taus, start=1))
    f = sp.expand(Q.subs(z, 1 / w) * w ** (2 * n))  # 1 + O(w^2)
    p = sp.Rational(numerator, 2 * n)
    ser = sp.series(f**p, w, 0, numerator + 2).removeO()
    # z^numerator * w^m = z^(numerator - m); z^-1 needs m = numerator + 1
    return -sp.expand(ser).coeff(w, numerator + 1)


def test_model_validation():
    with pytest.raises(DimensionError):
        make_model(3, [1])
    with pytest.raises(ValueError):
        make_model(0)
    m = make_model(2, [3])
    assert m.tau == (Fraction(3),)
    assert make_model(1).is_monomial and not m.is_monomial


def test_q_polynomial_signs():
    q = q_of_model(make_model(3, [Fraction(2), Fraction(5)]))
    # (-1)^{n+j} tau_j z^{2j}
    assert q.coeffs == {6: 1, 2: 2, 4: -5}


@pytest.mark.parametrize("n,taus", [(2, [Fraction(1)]), (2, [Fraction(-3, 7)]), (3, [Fraction(2), Fraction(-1)]),
                                    (4, [Fraction(1), Fraction(0), Fraction(5, 2)])])
def test_a_coeffs_against_series_oracle(n, taus):
    a = a_coeffs(make_model(n, taus), n + 1)
    assert a[0] == 1
    for k in range(1, n + 2):
        want = residue_oracle(n, [sp.Rational(t.numerator, t.denominator) for t in taus], 2 * k - 1) / (2 * k - 1)
        assert sp.Rational(a[k].numerator, a[k].denominator) == want


def test_a_coeffs_n2_symbolic():
    t = sp.Symbol("t")
    a = a_coeffs(make_model(2, [t]), 2)
    assert sp.simplify(a[1] - t / 4) == 0
    # from the residue definition; a reference value of 3t^2/32 would not match it
    assert sp.simplify(a[2] - t**2 / 32) == 0


def test_a_coeffs_n3_symbolic():
    t1, t2 = sp.symbols("t1 t2")
    a = a_coeffs(make_model(3, [t1, t2]), 3)
    assert sp.simplify(a[1] - t2 / 6) == 0
    assert sp.simplify(a[2] - (t2**2 / 24 - t1 / 6)) == 0
    # 2n a_3 / 1 = (t2/6)(7 t2^2/36 - t1)
    assert sp.simplify(6 * a[3] - t2 / 6 * (sp.Rational(7, 36) * t2**2 - t1)) == 0


def test_monomial_model_has_trivial_coefficients():
    for n in (1, 2, 3, 4):
        a = a_coeffs(make_model(n, [0] * (n - 1)), n + 1)
        assert a[0] == 1 and all(v == 0 for v in a[1:])


def test_b_even_entries_vanish():
    for m in (make_model(2, [3]), make_model(3, [1, -2]), make_model(4, [Fraction(1, 3), 2, -1])):
        b = b_coeffs(m, 10)
        assert all(b[k] == 0 for k in range(2, 11, 2))
        assert any(b[k] != 0 for k in range(1, 11, 2))


def test_z_plus_value_solves_saddle_equation():
    m = make_model(3, [0.7, -1.0])
    for x in (-5.0, -40.0, -1e3):
        z = z_plus_value(m, x)
        Q = q_of_model(m)
        s = 2 * z * abs(x) ** (1 / 6)
        assert abs(sum(float(c) * s**e for e, c in Q.coeffs.items()) - abs(x)) < 1e-12 * abs(x)


def test_z_plus_series_matches_root():
    m = make_model(2, [1])
    ser = z_plus_series(m, 6)
    for x in (-1e3, -1e4):
        assert abs(ser(abs(x)) - z_plus_value(m, x)) < 5e-9


def test_z_plus_domain():
    m = make_model(2, [1])
    with pytest.raises(SeriesDomainError):
        z_plus_value(m, 1.0)


def test_g_saddle_series_is_phase_sum():
    m = make_model(3, [0.5, 0.25])
    ser = g_saddle_series(m, 3)
    for absx in (10.0, 250.0):
        assert abs(ser(absx) - phase_sum(m, absx, 3)) < 1e-10 * phase_sum(m, absx, 3)


def test_g_saddle_value():
    # 2i g(z_+) |x|^{(2n+1)/2n} tends to the phase sum
    m = make_model(2, [1])
    x = -1e4
    z = z_plus_value(m, x)
    val = (2j * g_eval(m, z, x)).real * abs(x) ** 1.25
    assert abs(val - phase_sum(m, abs(x), 2)) / phase_sum(m, abs(x), 2) < 1e-6


def test_lenard_low_members():
    h = [DifferentialPolynomial.jet(k) for k in range(5)]
    assert lenard(1) == h[0]
    assert lenard(2) == h[2] + 3 * h[0] ** 2
    assert lenard(3) == h[4] + 10 * h[0] * h[2] + 5 * h[1] ** 2 + 10 * h[0] ** 3


def test_hierarchy_n1_and_n2():
    q = [DifferentialPolynomial.jet(k, "q") for k in range(5)]
    X = DifferentialPolynomial.x("q")
    assert hierarchy_equation(make_model(1)) == q[2] - 2 * q[0] ** 3 - X * q[0]
    want = q[4] - 10 * q[0] * q[1] ** 2 - 10 * q[0] ** 2 * q[2] + 6 * q[0] ** 5 - X * q[0]
    assert hierarchy_equation(make_model(2, [0])) == want
    assert hierarchy_equation(make_model(2, [2])) == want + 2 * (q[2] - 2 * q[0] ** 3)


def test_hierarchy_residual_dimension():
    with pytest.raises(DimensionError):
        hierarchy_residual(make_model(2, [0]), [1.0, 2.0], 0.0)
    assert hierarchy_residual(make_model(1), [0.0, 0.0, 0.0], 3.0) == 0


def test_antidiff_rejects_non_derivative():
    h = DifferentialPolynomial.jet(0)
    with pytest.raises(IntegrationError):
        (h * h).antidiff()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=3, max_size=3), st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_diff_product_rule(ca, cb):
    h = [DifferentialPolynomial.jet(k) for k in range(3)]
    A = ca[0] * h[0] + ca[1] * h[1] * h[0] + ca[2] * h[2]
    B = cb[0] * h[1] + cb[1] * h[0] ** 2 + cb[2]
    assert (A * B).diff() == A.diff() * B + A * B.diff()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=2, max_size=2))
def test_antidiff_inverts_diff(c):
    h = [DifferentialPolynomial.jet(k) for k in range(3)]
    P = c[0] * h[0] ** 2 * h[1] + c[1] * h[2] + h[0] ** 3
    assert P.diff().antidiff() == P


def test_evaluate_polynomial():
    q = [DifferentialPolynomial.jet(k, "q") for k in range(3)]
    P = q[2] - 2 * q[0] ** 3 - DifferentialPolynomial.x("q") * q[0]
    assert np.isclose(float(P.evaluate([0.5, 1.0, 2.0], 3.0)), 2.0 - 0.25 - 1.5)
