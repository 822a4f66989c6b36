import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import airy

from airydet import fredholm as fh
from airydet.asymptotics import mu_sigma
from airydet.series import make_model
from airydet.special import airy_hi


def airy_kernel_det(x, rho2=1.0, nodes=120, length=16.0):
    """Oracle: Nystrom on the closed-form Airy kernel via scipy, independent of the package."""
    g, w = np.polynomial.legendre.leggauss(nodes)
    t = x + 0.5 * length * (g + 1)
    w = 0.5 * length * w
    ai, aip, _, _ = airy(t)
    dx = t[:, None] - t[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (ai[:, None] * aip[None, :] - aip[:, None] * ai[None, :]) / dx
    K[np.diag_indices(nodes)] = aip**2 - t * ai**2
    sw = np.sqrt(w)
    return np.linalg.det(np.eye(nodes) - rho2 * sw[:, None] * K * sw[None, :])


M1 = make_model(1)
M2 = make_model(2, [1])


def test_scheme_invariants():
    s = fh.QuadratureScheme(50, 7.5, -3.0)
    assert np.all(np.diff(s.nodes) > 0)
    assert s.nodes[0] > -3.0 and s.nodes[-1] < 4.5
    assert abs(s.weights.sum() - 7.5) < 1e-13 and np.all(s.weights > 0)
    assert s.refined().node_count == 100 and s.shifted(1.0).x == 1.0
    with pytest.raises(ValueError):
        fh.QuadratureScheme(0, 1.0, 0.0)


def test_default_nodes_scaling():
    assert fh.default_nodes(M1, -5.0) == 200
    assert fh.default_nodes(M1, -40.0) == math.ceil(200 * 2 ** 0.75)


def test_kernel_symmetry_and_classical_form():
    rng = np.random.default_rng(7)
    for x, y in rng.uniform(-5, 5, size=(6, 2)):
        assert abs(fh.kernel_eval(M2, x, y) - fh.kernel_eval(M2, y, x)) < 1e-12
        ax, apx, _, _ = airy(x)
        ay, apy, _, _ = airy(y)
        assert abs(fh.kernel_eval(M1, x, y) - (ax * apy - apx * ay) / (x - y)) < 1e-12


def test_integrable_form_matches_quadrature():
    from airydet.special import wave_table

    for m in (M1, M2, make_model(3, [0.7, -1.0])):
        t = np.array([-3.0, -0.4, 0.9, 2.2])
        j = wave_table(m, t, 2 * m.n)
        K = fh.kernel_from_jets(m, j, j, t, t)
        for a in range(4):
            for b in range(4):
                assert abs(K[a, b] - fh.kernel_eval(m, t[a], t[b])) < 1e-12


def test_double_contour_oracle():
    assert abs(fh.kernel_eval(M2, 0.0, 1.0) - fh.kernel_double_contour(M2, 0.0, 1.0)) < 1e-8


def test_operator_diag_and_spectrum():
    op = fh.discretize(M1, 0.0, fh.default_scheme(M1, 0.0, 100))
    assert np.all(np.diag(op.matrix) >= 0)
    assert np.max(np.abs(op.matrix - op.matrix.T)) < 1e-12
    ev = np.linalg.eigvalsh(op.matrix)
    assert ev.max() < 1 and ev.min() > -1e-12


def test_tracy_widom_value():
    ref = airy_kernel_det(-2.0)
    r = fh.fredholm_det(M1, 1.0, -2.0, check=True)
    assert abs(r.value - ref) < 1e-12
    assert abs(r.value - 0.41322414250512257) < 1e-12
    assert r.self_consistency < 1e-10


def test_thinned_airy_oracle():
    for x in (-4.0, -1.0, 1.5):
        assert abs(fh.fredholm_det(M1, 0.6, x).value - airy_kernel_det(x, 0.36)) < 1e-12


def test_rho_zero_and_far_right():
    assert fh.fredholm_det(M2, 0.0, -5.0).value == 1.0
    for n, tau in ((1, []), (2, [0]), (2, [1]), (3, [0.7, -1])):
        assert abs(fh.fredholm_det(make_model(n, tau), 1.0, 20.0).value - 1.0) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(-6, 4), st.floats(0.01, 3))
def test_even_in_rho(x, rho):
    assert fh.fredholm_det(M2, rho, x).value == fh.fredholm_det(M2, -rho, x).value


def test_distribution_function():
    xs = np.linspace(-5, 3, 17)
    for rho in (0.4, 1.0):
        v = [fh.fredholm_det(M2, rho, x).value for x in xs]
        assert all(0 < a <= 1 for a in v)
        assert all(b >= a for a, b in zip(v, v[1:]))


def test_log_derivs():
    assert fh.log_f_derivs(M1, 0.0, -3.0) == (0.0, 0.0)
    assert fh.log_f_derivs(M1, 0.5, 10.0)[1] <= 1e-8
    q = fh.q_extract(M1, 0.5, 1.0)
    assert abs(q - 0.5 * airy(1.0)[0]) / (0.5 * airy(1.0)[0]) < 1e-3
    q2 = fh.q_extract(make_model(2, [0]), 0.5, 2.0)
    assert abs(q2 - 0.5 * abs(airy_hi(2, 2.0))) / (0.5 * abs(airy_hi(2, 2.0))) < 2e-3
    assert fh.q_extract(M1, 0.0, -2.0) == 0.0


def test_first_derivative_against_log_values():
    # d/dx ln F from log_f_derivs vs a wide symmetric difference
    x, h = -2.0, 0.05
    d1 = fh.log_f_derivs(M1, 1.0, x)[0]
    lp = fh.fredholm_det(M1, 1.0, x + h).log_value
    lm = fh.fredholm_det(M1, 1.0, x - h).log_value
    assert abs(d1 - (lp - lm) / (2 * h)) < 1e-3


def test_pole_proximity_error():
    z = fh.f_zeros(M1, 2.0, (-5.0, -2.5))
    assert z
    with pytest.raises(fh.PoleProximityError):
        fh.log_f_derivs(M1, 2.0, z[0] + 0.005)


def test_q_envelope_at_minus_15():
    from airydet.asymptotics import q_envelope_sub

    xs = np.linspace(-15.6, -14.4, 25)
    qs = [fh.q_extract(M1, 0.5, x) for x in xs]
    env = q_envelope_sub(M1, 0.5, -15.0)
    # within the O(|x|^{-3/4}) band around the envelope
    assert abs(max(qs) - env) < 15.0 ** -0.75


@pytest.mark.slow
def test_zeros_against_dense_scan():
    zs = fh.f_zeros(M1, 1.01, (-1.0, 0.0))
    xs = np.arange(-1.0, 0.0 + 1e-12, 1e-3)
    s, _ = fh.logdet_scan(M1, 1.01, xs)
    changes = int(np.sum(s[1:] * s[:-1] < 0))
    assert len(zs) == changes <= 1


def test_zeros_bracketed_by_sign_changes():
    zs = fh.f_zeros(M1, 2.0, (-8.0, -2.0))
    for z in zs:
        lo = fh.fredholm_logdet(M1, 4.0, z - 1e-4)[0]
        hi = fh.fredholm_logdet(M1, 4.0, z + 1e-4)[0]
        assert lo * hi < 0


def test_counting_moments():
    # pick x where mu(x) is near 1/2
    x = (0.5 * 3 * math.pi / 2) ** (2 / 3)
    assert abs(mu_sigma(M1, x)[0] - 0.5) < 1e-12
    mean, var = fh.counting_moments(M1, x)
    assert 0 < mean < 1 and var > 0


def test_total_integral_lhs_small_rho():
    assert abs(fh.total_integral_lhs(M1, 1e-9, -8.0)) < 1e-12
    with pytest.raises(ValueError):
        fh.total_integral_lhs(M1, 0.5, 1.0)


def test_second_difference_exact_on_quartic():
    xs = np.linspace(0, 1, 41)
    f = xs**4 - 3 * xs**2
    d2 = fh.second_difference(f, xs[1] - xs[0])
    assert np.max(np.abs(d2 - (12 * xs[4:-4] ** 2 - 6))) < 1e-9
