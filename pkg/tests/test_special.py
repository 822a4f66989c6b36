import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import airy, gamma

from airydet.series import make_model
from airydet.special import (
    EULER_GAMMA,
    PrecisionWarning,
    SpecialDomainError,
    airy_hi,
    arg_gamma,
    barnes_g_pair,
    contour_plan,
    euler_gamma,
    log_barnes_g_pair,
    subcritical_params,
    supercritical_params,
    wave_a,
    wave_derivs,
    wave_table,
)


def ray_oracle(model, x, j=0, dps=30):
    """(1/pi) Re int_0^inf (is)^j exp(i phi(s)) ds on a ray rotated by pi/(2(2n+1))."""
    n = model.n
    qc = [0.0] * (n + 1)
    qc[n] = 1.0
    for k, t in enumerate(model.tau, 1):
        qc[k] = (-1) ** (n + k) * float(t)
    with mp.workdps(dps):
        e = mp.exp(1j * mp.pi / (2 * (2 * n + 1)))

        def f(r):
            s = r * e
            ph = x * s + sum(qc[k] * s ** (2 * k + 1) / (2 * k + 1) for k in range(n + 1))
            return (1j * s) ** j * mp.exp(1j * ph) * e

        return float(mp.re(mp.quad(f, [0, 1, 2, 4, 8, mp.inf])) / mp.pi)


def mellin_at_zero(n):
    m = 2 * n + 1
    return m ** (1 / m - 1) * gamma(1 / m) * math.cos(math.pi / (2 * m)) / math.pi


def test_n1_matches_classical_airy():
    m = make_model(1)
    xs = np.linspace(-12, 6, 37)
    tab = wave_table(m, xs, 2)
    ai, aip, _, _ = airy(xs)
    assert np.max(np.abs(tab[:, 0] - ai)) < 1e-13
    assert np.max(np.abs(tab[:, 1] - aip)) < 1e-12
    # Ai'' = x Ai
    assert np.max(np.abs(tab[:, 2] - xs * ai)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_value_at_zero(n):
    assert abs(airy_hi(n, 0.0) - mellin_at_zero(n)) < 1e-14


@pytest.mark.parametrize("tau", [[0.0], [1.0], [-1.5], [0.7, -1.0]])
def test_general_model_against_ray_oracle(tau):
    m = make_model(len(tau) + 1, tau)
    for x in (-12.0, -2.0, 0.0, 1.0, 5.0):
        d = wave_derivs(m, x, 2 * m.n)
        for j in (0, 1, 2 * m.n):
            o = ray_oracle(m, x, j)
            assert abs(d[j] - o) < 1e-12 * max(1.0, abs(o)), (x, j)


@pytest.mark.parametrize("n", [2, 3])
def test_monomial_ode(n):
    # y^{(2n)} = (-1)^{n+1} x y
    m = make_model(n, [0] * (n - 1))
    xs = np.linspace(-8, 4, 13)
    tab = wave_table(m, xs, 2 * n)
    assert np.max(np.abs(tab[:, 2 * n] - (-1) ** (n + 1) * xs * tab[:, 0])) < 1e-11


def test_table_matches_pointwise():
    m = make_model(3, [0.7, -1.0])
    xs = np.linspace(-15, 8, 41)
    tab = wave_table(m, xs, 3)
    for i in range(0, 41, 8):
        assert np.max(np.abs(tab[i] - wave_derivs(m, xs[i], 3))) < 1e-13


def test_wave_a_scalar():
    assert abs(wave_a(make_model(1), -1.0) - airy(-1.0)[0]) < 1e-14


def test_contour_plan_shape():
    plan = contour_plan(make_model(2, [1]), -3.0)
    assert plan.truncation_threshold > 0 and plan.height > 0
    assert len(plan.segments) >= 8


def test_precision_warning_on_tight_tolerance():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        wave_derivs(make_model(1), -30.0, 0, tol=1e-20)
    assert any(issubclass(w.category, PrecisionWarning) for w in caught)


def test_euler_gamma():
    assert euler_gamma() == EULER_GAMMA
    assert abs(EULER_GAMMA - float(mp.euler)) < 1e-16


def test_arg_gamma_continuous_branch():
    ys = np.linspace(0.01, 30, 600)
    vals = np.array([arg_gamma(0.5 + 1j * y) for y in ys])
    assert np.max(np.abs(np.diff(vals))) < 0.2
    with mp.workdps(30):
        for y in (0.3, 4.0, 25.0):
            assert abs(arg_gamma(1j * y) - float(mp.im(mp.loggamma(1j * y)))) < 1e-12
    with pytest.raises(SpecialDomainError):
        arg_gamma(-2.0)


@pytest.mark.parametrize("y", [0.05, 0.3, 1.0, 2.5, 7.0])
def test_barnes_pair_against_mpmath(y):
    with mp.workdps(30):
        ref = mp.barnesg(1 + 1j * y) * mp.barnesg(1 - 1j * y)
    assert abs(barnes_g_pair(y) - float(mp.re(ref))) < 1e-12 * float(abs(ref))


def test_barnes_pair_small_y():
    assert barnes_g_pair(0.0) == 1.0
    y = 1e-4
    assert abs(log_barnes_g_pair(y) / y**2 - (1 + EULER_GAMMA)) < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 8.0), st.integers(16, 80))
def test_barnes_pair_truncation_independent(y, nterms):
    assert abs(log_barnes_g_pair(y, nterms) - log_barnes_g_pair(y)) < 1e-11 * max(1.0, y * y)


def test_subcritical_params():
    p = subcritical_params(0.6, 1)
    assert abs(p.first - 0.1420576) < 1e-7
    assert abs(p.first + math.log(0.64) / math.pi) < 1e-15
    phi = -p.first / 2 * math.log(8) + float(mp.im(mp.loggamma(0.5j * p.first))) + math.pi / 4
    assert abs(p.second - phi) < 1e-13
    assert subcritical_params(-0.6, 1) == subcritical_params(0.6, 1)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(SpecialDomainError):
            subcritical_params(bad)


def test_supercritical_params():
    p = supercritical_params(math.sqrt(2.0), 3)
    assert abs(p.first) < 1e-15
    assert abs(p.second - (math.pi / 2)) < 1e-12  # arg Gamma(1/2) = 0
    k = supercritical_params(2.0, 1).first
    assert abs(k + math.log(3) / (2 * math.pi)) < 1e-15
    with pytest.raises(SpecialDomainError):
        supercritical_params(0.9)
