"""Exact layer: the phase polynomial, residue coefficients a_k / b_k, saddle
and phase expansions, Lenard operators and the Painleve II hierarchy.

Coefficient arithmetic is generic: Fractions when the tau parameters are
rational (ints or Fractions), floats otherwise, and sympy expressions when
sympy symbols are passed in for tau.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq


class DimensionError(ValueError):
    """Wrong number of parameters or jet entries."""


class SeriesDomainError(ValueError):
    """Input outside the region where the requested expansion exists."""


class IntegrationError(ArithmeticError):
    """A differential polynomial that should be an exact derivative is not."""


def _exact(v):
    # ints become Fractions so later division stays exact
    if isinstance(v, bool):
        return Fraction(int(v))
    if isinstance(v, numbers.Integral):
        return Fraction(int(v))
    return v


def _binom(p, m):
    out = Fraction(1)
    for i in range(m):
        out = out * (p - i) / (i + 1)
    return out


# ---------------------------------------------------------------------------
# model and polynomials


@dataclass(frozen=True)
class ModelSpec:
    """Hierarchy order ``n`` and the deformation parameters tau_1..tau_{n-1}."""

    n: int
    tau: tuple = ()

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        tau = tuple(_exact(t) for t in self.tau)
        if len(tau) != self.n - 1:
            raise DimensionError(f"n={self.n} needs {self.n - 1} tau values, got {len(tau)}")
        object.__setattr__(self, "tau", tau)

    @property
    def is_monomial(self):
        return all(t == 0 for t in self.tau)

    def p_coeffs(self):
        """Coefficients c_k of z^(2k+1)/(2k+1) in P_{2n+1}, k = 0..n."""
        return (Fraction(0),) + self.tau + (Fraction(1),)

    def p_eval(self, z):
        c = self.p_coeffs()
        return sum(c[k] * z ** (2 * k + 1) / (2 * k + 1) for k in range(1, self.n + 1))

    def key(self):
        return (self.n,) + tuple(float(t) for t in self.tau)


def make_model(n, tau=()):
    return ModelSpec(n, tuple(tau))


@dataclass(frozen=True)
class EvenPolynomial:
    """Even polynomial stored as {exponent: coefficient}; only even exponents."""

    coeffs: dict

    def __post_init__(self):
        if any(e % 2 for e in self.coeffs):
            raise ValueError("odd exponent in EvenPolynomial")

    @property
    def degree(self):
        return max(self.coeffs)

    def __call__(self, z):
        return sum(c * z**e for e, c in self.coeffs.items())

    def deriv(self, z):
        return sum(e * c * z ** (e - 1) for e, c in self.coeffs.items() if e)

    def lower(self):
        """Coefficients c_j of Q(z)/z^{2n} - 1 as a series in zeta = z^{-2}."""
        d = self.degree
        return {(d - e) // 2: c for e, c in self.coeffs.items() if e != d}


def q_of_model(model):
    """Q(z) = z^{2n} + sum_j (-1)^{n+j} tau_j z^{2j}."""
    n = model.n
    coeffs = {2 * n: Fraction(1)}
    for j, t in enumerate(model.tau, start=1):
        if t != 0:
            coeffs[2 * j] = (-1) ** (n + j) * t
    return EvenPolynomial(coeffs)


# ---------------------------------------------------------------------------
# residue coefficients


def _power_series_coeff(lower, p, order):
    """Coefficient of zeta^order in (1 + sum_m lower[m] zeta^m)^p."""
    # w^m truncated at zeta^order, accumulated by repeated multiplication
    w = {m: c for m, c in lower.items() if m <= order}
    total = Fraction(1) if order == 0 else 0
    power = {0: Fraction(1)}
    for m in range(1, order + 1):
        new = {}
        for e1, c1 in power.items():
            for e2, c2 in w.items():
                e = e1 + e2
                if e <= order:
                    new[e] = new.get(e, 0) + c1 * c2
        power = new
        if not power:
            break
        if order in power:
            total = total + _binom(p, m) * power[order]
    return total


def residue_at_infinity(model, numerator):
    """Res_{z=inf} Q(z)^{numerator/(2n)} with branch ~ z^numerator.

    Uses Res_{z=inf} f = -[z^{-1}] f, which gives a_1 = tau_1/4 for n = 2.
    """
    n = model.n
    if numerator % 2 == 0:
        return Fraction(0)
    p = Fraction(numerator, 2 * n)
    # z^numerator * zeta^m contributes to z^-1 when 2m = numerator + 1
    m = (numerator + 1) // 2
    lower = q_of_model(model).lower()
    return -_power_series_coeff(lower, p, m)


def a_coeffs(model, kmax):
    """a_0 = 1, a_k = Res Q^{(2k-1)/(2n)} / (2k-1)."""
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    out = [Fraction(1)]
    for k in range(1, kmax + 1):
        out.append(residue_at_infinity(model, 2 * k - 1) / (2 * k - 1))
    return out


def b_coeffs(model, kmax):
    """b_0 = 0, b_k = Res Q^{k/(2n)} / k; even entries vanish."""
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    out = [Fraction(0)]
    for k in range(1, kmax + 1):
        out.append(residue_at_infinity(model, k) / k)
    return out


def _frac_gcd(a, b):
    a, b = Fraction(a), Fraction(b)
    den = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
    return Fraction(math.gcd(int(a * den), int(b * den)), den)


# ---------------------------------------------------------------------------
# Puiseux series in u = |x|^{-1}


@dataclass(frozen=True)
class PuiseuxSeries:
    """Truncated series sum_e c_e u^e in u = |x|^{-1}, e rational.

    Exponents are multiples of ``step``; terms with e > ``truncation_order``
    are discarded by every operation.
    """

    step: Fraction
    terms: dict = field(default_factory=dict)
    truncation_order: Fraction = Fraction(10**9)

    def __post_init__(self):
        terms = {Fraction(e): c for e, c in self.terms.items() if e <= self.truncation_order}
        for e in terms:
            if (e / self.step).denominator != 1:
                raise ValueError(f"exponent {e} is not a multiple of step {self.step}")
        object.__setattr__(self, "terms", dict(sorted(terms.items())))

    def _new(self, terms, other=None):
        step = self.step
        trunc = self.truncation_order
        if other is not None:
            step = _frac_gcd(step, other.step)
            trunc = min(trunc, other.truncation_order)
        terms = {e: c for e, c in terms.items() if c != 0}
        return PuiseuxSeries(step, terms, trunc)

    def __add__(self, other):
        if not isinstance(other, PuiseuxSeries):
            other = PuiseuxSeries(self.step, {Fraction(0): other}, self.truncation_order)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return self._new(terms, other)

    __radd__ = __add__

    def __neg__(self):
        return self._new({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, PuiseuxSeries):
            return self._new({e: c * other for e, c in self.terms.items()})
        trunc = min(self.truncation_order, other.truncation_order)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                if e1 + e2 <= trunc:
                    terms[e1 + e2] = terms.get(e1 + e2, 0) + c1 * c2
        return self._new(terms, other)

    __rmul__ = __mul__

    def leading(self):
        e = min(self.terms)
        return e, self.terms[e]

    def __pow__(self, p):
        """Fractional power, expanding around the leading term."""
        p = Fraction(p)
        e0, c0 = self.leading()
        rest = PuiseuxSeries(self.step,
                             {e - e0: c / c0 for e, c in self.terms.items() if e != e0},
                             self.truncation_order - e0)
        if isinstance(c0, Fraction) and p.denominator != 1:
            c0p = float(c0) ** float(p)
        else:
            c0p = c0**p
        total = PuiseuxSeries(self.step, {Fraction(0): Fraction(1)}, rest.truncation_order)
        term = total
        m = 1
        while rest.terms and m * min(rest.terms) <= rest.truncation_order:
            term = term * rest
            total = total + term * _binom(p, m)
            m += 1
        shift = e0 * p
        return PuiseuxSeries(_frac_gcd(self.step, shift) if shift else self.step,
                             {e + shift: c * c0p for e, c in total.terms.items()},
                             self.truncation_order + shift - e0)

    def __call__(self, absx):
        absx = float(absx)
        return sum(float(c) * absx ** (-float(e)) for e, c in self.terms.items())

    def coefficient(self, e):
        return self.terms.get(Fraction(e), 0)


def z_plus_series(model, kmax):
    """z_+ = 1/2 + (1/2) sum_{k=1}^{kmax} a_k |x|^{-k/n}."""
    n = model.n
    a = a_coeffs(model, kmax)
    terms = {Fraction(0): Fraction(1, 2)}
    for k in range(1, kmax + 1):
        terms[Fraction(k, n)] = a[k] / 2
    return PuiseuxSeries(Fraction(1, 2 * n), terms, Fraction(kmax, n))


def g_saddle_series(model, kmax):
    """2i g(z_+) |x|^{(2n+1)/(2n)} = sum_k 2n a_k/(1+2(n-k)) |x|^{(1+2(n-k))/(2n)}."""
    n = model.n
    a = a_coeffs(model, kmax)
    terms = {}
    for k in range(kmax + 1):
        d = 1 + 2 * (n - k)
        terms[Fraction(-d, 2 * n)] = Fraction(2 * n, d) * a[k]
    return PuiseuxSeries(Fraction(1, 2 * n), terms, Fraction(kmax * 2 - 2 * n - 1, 2 * n))


def phase_sum(model, absx, kmax=None):
    """Float value of sum_{k=0}^{kmax} 2n a_k |x|^{(1+2(n-k))/(2n)}/(1+2(n-k))."""
    n = model.n
    kmax = n if kmax is None else kmax
    a = a_coeffs(model, kmax)
    absx = np.asarray(absx, dtype=float)
    total = np.zeros_like(absx)
    for k in range(kmax + 1):
        d = 1 + 2 * (n - k)
        total = total + 2 * n * float(a[k]) / d * absx ** (d / (2 * n))
    return total


# ---------------------------------------------------------------------------
# saddle point and phase function


def z_plus_value(model, x):
    """Positive real saddle of g: root of Q(2 z |x|^{1/(2n)}) = |x|."""
    if x >= 0:
        raise SeriesDomainError("z_plus_value needs x < 0")
    n = model.n
    absx = -float(x)
    Q = q_of_model(model)
    coeffs = {e: float(c) for e, c in Q.coeffs.items()}

    def f(s):
        return sum(c * s**e for e, c in coeffs.items()) - absx

    # M: beyond the largest positive critical point Q is increasing
    dpoly = np.zeros(2 * n)
    for e, c in coeffs.items():
        dpoly[2 * n - e] = e * c
    crit = [r.real for r in np.roots(dpoly) if abs(r.imag) < 1e-12 and r.real > 0]
    M = max(crit, default=0.0)
    grid = np.linspace(0.0, M, 64)
    if M > 0 and max(f(s) for s in grid) >= 0:
        raise SeriesDomainError(f"|x|={absx} too small: Q reaches |x| below its increasing branch")
    hi = max(M, 1.0) * max(1.0, absx ** (1 / (2 * n))) + sum(abs(c) for c in coeffs.values())
    while f(hi) <= 0:
        hi *= 2
    s = brentq(f, M, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    # one Newton polish step
    d = sum(e * c * s ** (e - 1) for e, c in coeffs.items())
    if d != 0:
        s -= f(s) / d
    return s / (2 * absx ** (1 / (2 * n)))


def g_eval(model, z, x):
    """Rescaled phase g(z) for x < 0."""
    n = model.n
    absx = abs(float(x))
    z = complex(z)
    val = 1j * (2 * z) ** (2 * n + 1) / (4 * n + 2) - 1j * z
    for j, t in enumerate(model.tau, start=1):
        val += 1j * (-1) ** (n + j) * float(t) * (2 * z) ** (2 * j + 1) * absx ** ((j - n) / n) / (4 * j + 2)
    return val


# ---------------------------------------------------------------------------
# differential polynomials


@dataclass(frozen=True)
class DifferentialPolynomial:
    """Polynomial in x and the jet (v, v', v'', ...) of one function v.

    Monomial keys are ``(x_power, (e0, e1, ...))`` meaning
    x^x_power * v^e0 * (v')^e1 * ...; trailing zero exponents are stripped.
    """

    monomials: dict = field(default_factory=dict)
    var: str = "h"

    def __post_init__(self):
        clean = {}
        for (xp, exps), c in self.monomials.items():
            exps = tuple(exps)
            while exps and exps[-1] == 0:
                exps = exps[:-1]
            key = (xp, exps)
            clean[key] = clean.get(key, 0) + c
        clean = {k: c for k, c in clean.items() if c != 0}
        object.__setattr__(self, "monomials", clean)

    # constructors
    @classmethod
    def const(cls, c, var="h"):
        return cls({(0, ()): _exact(c)}, var)

    @classmethod
    def jet(cls, order, var="h"):
        exps = [0] * order + [1]
        return cls({(0, tuple(exps)): Fraction(1)}, var)

    @classmethod
    def x(cls, var="h"):
        return cls({(1, ()): Fraction(1)}, var)

    # ring operations
    def _coerce(self, other):
        if isinstance(other, DifferentialPolynomial):
            return other
        return DifferentialPolynomial.const(other, self.var)

    def __add__(self, other):
        other = self._coerce(other)
        m = dict(self.monomials)
        for k, c in other.monomials.items():
            m[k] = m.get(k, 0) + c
        return DifferentialPolynomial(m, self.var)

    __radd__ = __add__

    def __neg__(self):
        return DifferentialPolynomial({k: -c for k, c in self.monomials.items()}, self.var)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        m = {}
        for (x1, e1), c1 in self.monomials.items():
            for (x2, e2), c2 in other.monomials.items():
                size = max(len(e1), len(e2))
                e = tuple((e1[i] if i < len(e1) else 0) + (e2[i] if i < len(e2) else 0)
                          for i in range(size))
                key = (x1 + x2, e)
                m[key] = m.get(key, 0) + c1 * c2
        return DifferentialPolynomial(m, self.var)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = DifferentialPolynomial.const(1, self.var)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, DifferentialPolynomial):
            other = DifferentialPolynomial.const(other, self.var)
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self.monomials.items()))

    def is_zero(self):
        return not self.monomials

    @property
    def order(self):
        """Highest derivative present (-1 when only constants / x)."""
        return max((len(e) - 1 for _, e in self.monomials), default=-1)

    def diff(self):
        """Total derivative D, with D x = 1."""
        m = {}
        for (xp, exps), c in self.monomials.items():
            if xp:
                key = (xp - 1, exps)
                m[key] = m.get(key, 0) + c * xp
            for i, e in enumerate(exps):
                if not e:
                    continue
                new = list(exps) + [0]
                new[i] -= 1
                new[i + 1] += 1
                key = (xp, tuple(new))
                m[key] = m.get(key, 0) + c * e
        return DifferentialPolynomial(m, self.var)

    def antidiff(self):
        """R with D R = self and no constant term; raises IntegrationError."""
        rest = self
        result = DifferentialPolynomial({}, self.var)
        while not rest.is_zero():
            if any(xp for xp, _ in rest.monomials):
                raise IntegrationError("explicit x terms are not handled by antidiff")
            top = rest.order
            if top < 1:
                raise IntegrationError(f"remainder {rest} is not an exact derivative")
            piece = {}
            for (xp, exps), c in rest.monomials.items():
                if len(exps) - 1 != top:
                    continue
                if exps[top] != 1:
                    raise IntegrationError(f"remainder {rest} is nonlinear in the top derivative")
                # integrate the coefficient of v^(top) with respect to v^(top-1)
                base = list(exps[:top])
                k = base[top - 1]
                base[top - 1] = k + 1
                key = (xp, tuple(base))
                piece[key] = piece.get(key, 0) + c / (k + 1)
            piece = DifferentialPolynomial(piece, self.var)
            result = result + piece
            rest = rest - piece.diff()
        return result

    def substitute(self, images):
        """Replace v^(i) by images[i] (a DifferentialPolynomial in another variable)."""
        var = images[0].var
        out = DifferentialPolynomial({}, var)
        xpoly = DifferentialPolynomial.x(var)
        for (xp, exps), c in self.monomials.items():
            term = DifferentialPolynomial.const(c, var) * xpoly**xp
            for i, e in enumerate(exps):
                if e:
                    term = term * images[i] ** e
            out = out + term
        return out

    def evaluate(self, jet, x=0.0):
        total = 0.0
        for (xp, exps), c in self.monomials.items():
            if len(exps) > len(jet):
                raise DimensionError(f"jet of length {len(jet)} too short for order {len(exps) - 1}")
            term = float(c) * float(x) ** xp
            for i, e in enumerate(exps):
                if e:
                    term *= float(jet[i]) ** e
            total += term
        return total

    def __repr__(self):
        if not self.monomials:
            return "0"
        parts = []
        for (xp, exps), c in sorted(self.monomials.items(), key=lambda kv: (-len(kv[0][1]), kv[0])):
            factors = ["x" + (f"^{xp}" if xp > 1 else "")] if xp else []
            for i, e in enumerate(exps):
                if e:
                    name = self.var + "'" * i if i < 4 else f"{self.var}^({i})"
                    factors.append(name + (f"^{e}" if e > 1 else ""))
            parts.append(f"{c}*" + "*".join(factors) if factors else f"{c}")
        return " + ".join(parts)


_LENARD_CACHE = {0: DifferentialPolynomial.const(Fraction(1, 2))}


def lenard(k):
    """Lenard operator L_k h as a differential polynomial in h."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k in _LENARD_CACHE:
        return _LENARD_CACHE[k]
    prev = lenard(k - 1)
    h = DifferentialPolynomial.jet(0)
    h1 = DifferentialPolynomial.jet(1)
    rhs = prev.diff().diff().diff() + 4 * h * prev.diff() + 2 * h1 * prev
    out = rhs.antidiff()
    _LENARD_CACHE[k] = out
    return out


def _h_images(order):
    """D^i (q' - q^2) for i = 0..order, as polynomials in q."""
    q = DifferentialPolynomial.jet(0, "q")
    h = DifferentialPolynomial.jet(1, "q") - q * q
    images = [h]
    for _ in range(order):
        images.append(images[-1].diff())
    return images


def hierarchy_equation(model):
    """(D+2q) L_n[q'-q^2] + sum_i tau_i (D+2q) L_i[q'-q^2] - x q."""
    n = model.n
    q = DifferentialPolynomial.jet(0, "q")
    images = _h_images(2 * n)

    def member(k):
        lk = lenard(k).substitute(images)
        return lk.diff() + 2 * q * lk

    eq = member(n)
    for i, t in enumerate(model.tau, start=1):
        if t != 0:
            eq = eq + t * member(i)
    return eq - DifferentialPolynomial.x("q") * q


def hierarchy_residual(model, q_jet, x):
    """Numerical value of the hierarchy equation for the jet (q, q', ..., q^(2n))."""
    n = model.n
    if len(q_jet) != 2 * n + 1:
        raise DimensionError(f"jet must have length {2 * n + 1}, got {len(q_jet)}")
    return hierarchy_equation(model).evaluate(q_jet, x)
