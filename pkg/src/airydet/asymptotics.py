"""Closed-form large-|x| asymptotics of q_n and F_n, the counting-function
moments built from them, and the pole locations for rho > 1.

Every evaluator returns an :class:`AsymEvaluation` whose ``leading_terms``
re-sum to ``value``. The term assembly is shared with a symbolic variant so
coefficient tables can be compared as exact expressions in beta and tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .series import a_coeffs, ModelSpec
from .special import (
    EULER_GAMMA,
    SpecialDomainError,
    log_barnes_g_pair,
    subcritical_params,
    supercritical_params,
)

# distance in phase from a multiple of pi below which rho > 1 evaluators refuse
NEAR_POLE_GUARD = 1e-3


class NearPoleError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Term:
    label: str
    exponent: object  # Fraction power of |x|, or "log" / "const"
    coefficient: float
    value: float


@dataclass(frozen=True)
class AsymEvaluation:
    value: float
    phase: float | None
    leading_terms: tuple
    error_order: Fraction

    def resum(self):
        return math.fsum(t.value for t in self.leading_terms)


def _phase_terms(model, kmax):
    """(exponent, coefficient) pairs of sum_{k<=kmax} 2n a_k |x|^{d/(2n)} / d, d = 1+2(n-k)."""
    n = model.n
    a = a_coeffs(model, kmax)
    out = []
    for k in range(kmax + 1):
        d = 1 + 2 * (n - k)
        out.append((Fraction(d, 2 * n), Fraction(2 * n, d) * a[k]))
    return out


def _phase_value(model, absx, kmax):
    return math.fsum(float(c) * absx ** float(e) for e, c in _phase_terms(model, kmax))


def _neg_x(x):
    x = float(x)
    if not x < 0:
        raise SpecialDomainError(f"expected x < 0, got {x}")
    return -x


# ---------------------------------------------------------------------------
# 0 < rho < 1


def q_asym_sub(model, rho, x):
    """sqrt(beta)/(sqrt(n)|x|^{(2n-1)/(4n)}) cos(theta), q evaluated at (-1)^{n+1} x."""
    absx = _neg_x(x)
    n = model.n
    p = subcritical_params(rho, n)
    beta, phi = p.first, p.second
    theta = _phase_value(model, absx, n) - (2 * n + 1) / (4 * n) * beta * math.log(absx) + phi
    amp = math.sqrt(beta) / (math.sqrt(n) * absx ** ((2 * n - 1) / (4 * n)))
    val = amp * math.cos(theta)
    return AsymEvaluation(val, theta, (Term("amplitude*cos", Fraction(-(2 * n - 1), 4 * n), amp, val),),
                          Fraction(-(2 * n + 1), 4 * n))


def q_envelope_sub(model, rho, x):
    n = model.n
    beta = subcritical_params(rho, n).first
    return math.sqrt(beta) / (math.sqrt(n) * _neg_x(x) ** ((2 * n - 1) / (4 * n)))


def logF_terms(model, beta, log_c0):
    """Terms of ln F_n as (label, exponent, coefficient); works on floats or sympy.

    Exponent is a Fraction power of |x|, "log" for ln|x|, "const" otherwise.
    """
    n = model.n
    terms = []
    for e, c in _phase_terms(model, n):
        terms.append((f"|x|^{e}", e, -beta * c))
    terms.append(("ln|x|", "log", Fraction(2 * n + 1, 8 * n) * beta**2))
    terms.append(("(beta^2/4) ln(8n)", "const", beta**2 / 4 * _log_8n(n, beta)))
    terms.append(("ln C0", "const", log_c0))
    return terms


def _log_8n(n, beta):
    if isinstance(beta, float):
        return math.log(8 * n)
    import sympy

    return sympy.log(8 * n)


def logF_asym(model, rho, x):
    """Large-gap expansion of ln F_n(x; rho) up to and including the constant."""
    absx = _neg_x(x)
    n = model.n
    order = Fraction(-1, 2 * n)
    rho = abs(float(rho))
    if rho == 0:
        return AsymEvaluation(0.0, None, (), order)
    if not rho < 1:
        raise SpecialDomainError(f"logF_asym needs 0 <= rho < 1, got {rho}")
    beta = subcritical_params(rho, n).first
    out = []
    for label, e, c in logF_terms(model, beta, log_barnes_g_pair(beta / 2)):
        c = float(c)
        if e == "log":
            v = c * math.log(absx)
        elif e == "const":
            v = c
        else:
            v = c * absx ** float(e)
        out.append(Term(label, e, c, v))
    return AsymEvaluation(math.fsum(t.value for t in out), None, tuple(out), order)


def logF_asym_symbolic(model, beta=None, absx=None, log_c0=None):
    """sympy expression of the same expansion in symbols beta, X = |x|, lnC0."""
    import sympy

    beta = beta if beta is not None else sympy.Symbol("beta", positive=True)
    absx = absx if absx is not None else sympy.Symbol("X", positive=True)
    log_c0 = log_c0 if log_c0 is not None else sympy.Symbol("lnC0")
    expr = 0
    for _, e, c in logF_terms(model, beta, log_c0):
        c = sympy.nsimplify(c) if isinstance(c, Fraction) else sympy.sympify(c)
        if e == "log":
            expr += c * sympy.log(absx)
        elif e == "const":
            expr += c
        else:
            expr += c * absx ** sympy.Rational(e.numerator, e.denominator)
    return sympy.expand(expr)


# ---------------------------------------------------------------------------
# rho > 1


def super_phase(model, rho, x):
    """Phase for rho > 1; the sum runs one term further, to k = n+1."""
    absx = _neg_x(x)
    n = model.n
    p = supercritical_params(rho, n)
    return (_phase_value(model, absx, n + 1)
            - (2 * n + 1) / (2 * n) * p.first * math.log(absx) + p.second)


def _guard(theta):
    dist = abs(theta - math.pi * round(theta / math.pi))
    if dist < NEAR_POLE_GUARD:
        raise NearPoleError(f"phase {theta} within {dist:.2e} of a pole")


def _super_order(model):
    return Fraction(-1) if model.is_monomial else Fraction(-1, 2 * model.n)


def q_asym_super(model, rho, x):
    """|x|^{1/(2n)} / sin(theta)."""
    theta = super_phase(model, rho, x)
    _guard(theta)
    scale = _neg_x(x) ** (1.0 / (2 * model.n))
    val = scale / math.sin(theta)
    return AsymEvaluation(val, theta, (Term("|x|^(1/2n)/sin", Fraction(1, 2 * model.n), scale, val),),
                          _super_order(model))


def dlogF_asym_super(model, rho, x):
    """[2 kappa - cot(theta)] |x|^{1/(2n)}."""
    n = model.n
    kappa = supercritical_params(rho, n).first
    theta = super_phase(model, rho, x)
    _guard(theta)
    scale = _neg_x(x) ** (1.0 / (2 * n))
    t1 = 2 * kappa * scale
    t2 = -scale / math.tan(theta)
    terms = (Term("2 kappa |x|^(1/2n)", Fraction(1, 2 * n), 2 * kappa, t1),
             Term("-cot |x|^(1/2n)", Fraction(1, 2 * n), -1 / math.tan(theta), t2))
    return AsymEvaluation(t1 + t2, theta, terms, _super_order(model))


def pole_estimate(n, rho, m):
    """Approximate m-th real pole for the monomial model."""
    if isinstance(n, ModelSpec):
        if not n.is_monomial:
            raise ValueError("pole_estimate covers tau = 0 only")
        n = n.n
    if m < 1:
        raise ValueError("m must be a positive integer")
    p = supercritical_params(rho, n)
    kappa, varphi = p.first, p.second
    c = (2 * n + 1) * math.pi / (2 * n)
    r = 2 * n / ((2 * n + 1) * math.pi)
    bracket = 1 + r * kappa * math.log(m) / m + r * (kappa * math.log(c) - varphi) / m
    return -(c ** (2 * n / (2 * n + 1))) * m ** (2 * n / (2 * n + 1)) * bracket


# ---------------------------------------------------------------------------
# counting statistics


def mu_sigma(model, x):
    """(mu(x), sigma^2(x), variance constant) for the counting function N(x)."""
    x = float(x)
    if not x > 0:
        raise SpecialDomainError(f"mu_sigma needs x > 0, got {x}")
    n = model.n
    mu = _phase_value(model, x, n) / math.pi
    sigma2 = (2 * n + 1) / (4 * n * math.pi**2) * math.log(x)
    const = (math.log(8 * n) + 1 + EULER_GAMMA) / (2 * math.pi**2)
    return mu, sigma2, const


def total_integral_rhs(rho, n):
    """(beta^2/4) ln(8n) + ln G(1 + i beta/2) G(1 - i beta/2)."""
    n = n.n if isinstance(n, ModelSpec) else int(n)
    if float(rho) == 0:
        return 0.0
    beta = subcritical_params(rho, n).first
    return beta**2 / 4 * math.log(8 * n) + log_barnes_g_pair(beta / 2)


def clt_check(model, x, s, scheme=None):
    """ln E[exp(s (N - mu)/sigma)] - s^2/2 from the determinant."""
    if s == 0:
        return 0.0
    from .fredholm import log_moment_generating

    mu, sigma2, _ = mu_sigma(model, x)
    if sigma2 <= 0:
        raise SpecialDomainError(f"sigma(x) must be positive, got sigma^2={sigma2}")
    sigma = math.sqrt(sigma2)
    gamma = -s / (2 * math.pi * sigma)
    lmg = log_moment_generating(model, x, gamma, scheme)
    return lmg - s * mu / sigma - s * s / 2


def phase_grid(model, rho, xs):
    """Vectorized subcritical phase, for zero-crossing comparisons."""
    n = model.n
    p = subcritical_params(rho, n)
    absx = -np.asarray(xs, dtype=float)
    out = np.zeros_like(absx)
    for e, c in _phase_terms(model, n):
        out += float(c) * absx ** float(e)
    return out - (2 * n + 1) / (4 * n) * p.first * np.log(absx) + p.second
