"""Special functions: higher order Airy functions and the tau-deformed wave
function by saddle-routed contour quadrature, arg Gamma, the Barnes G pair,
and the connection-formula parameter packs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma, zeta

from .series import ModelSpec, make_model

EULER_GAMMA = 0.5772156649015329

_GL_ORDER = 24
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
# integrand modulus below exp(-_TAIL) is dropped
_TAIL = 46.0


class PrecisionWarning(UserWarning):
    """Quadrature could not certify the requested accuracy."""


class SpecialDomainError(ValueError):
    pass


def euler_gamma():
    return EULER_GAMMA


# ---------------------------------------------------------------------------
# contour quadrature for A_n and its derivatives
#
# With u = -i s the defining contour integral becomes
#     A^{(j)}(z) = (1/2pi) int (i s)^j exp(i phi(s)) ds,
#     phi(s) = sum_k c_k s^{2k+1}/(2k+1) + z s,   phi'(s) = Q(s) + z,
# over a path from -inf to +inf in the closed upper half plane.  We use the
# path s(t) = t + i y(t), y = phi'/sqrt(phi''^2 + (phi'/w)^2 + eps^2): it
# leaves every real saddle at 45 degrees (the steepest-descent direction),
# dips below the axis where phi' < 0 and flattens to height w in the tails.
# y is even in t, so the integral is twice the real part over t > 0.


@dataclass(frozen=True)
class ContourPlan:
    """Concrete quadrature path for one argument z."""

    ray_angle: float
    saddle_points: tuple
    segments: tuple  # (start, direction, length, node_count)
    truncation_threshold: float
    height: float


def _q_signed(model):
    """Coefficients of Q(s) = sum_k qc[k] s^{2k}, k = 0..n."""
    n = model.n
    qc = np.zeros(n + 1)
    qc[n] = 1.0
    for k, t in enumerate(model.tau, start=1):
        qc[k] = (-1) ** (n + k) * float(t)
    return qc


class _Phase:
    def __init__(self, model, z):
        self.n = model.n
        self.qc = _q_signed(model)
        self.z = float(z)

    def derivs(self, t):
        """phi', phi'', phi''' at real t."""
        qc, n = self.qc, self.n
        d1 = np.full_like(t, self.z) + qc[0]
        d2 = np.zeros_like(t)
        d3 = np.zeros_like(t)
        for k in range(1, n + 1):
            c = qc[k]
            if c == 0:
                continue
            d1 = d1 + c * t ** (2 * k)
            d2 = d2 + 2 * k * c * t ** (2 * k - 1)
            d3 = d3 + 2 * k * (2 * k - 1) * c * t ** (2 * k - 2)
        return d1, d2, d3

    def value(self, s):
        out = self.z * s
        for k in range(self.n + 1):
            c = self.qc[k]
            if c:
                out = out + c * s ** (2 * k + 1) / (2 * k + 1)
        return out

    def saddles(self):
        poly = np.zeros(2 * self.n + 1)
        for k in range(self.n + 1):
            poly[2 * self.n - 2 * k] += self.qc[k]
        poly[-1] += self.z
        return np.roots(poly)


def _height(phase, roots):
    scale = max(1.0, abs(phase.z) ** (1.0 / (2 * phase.n)))
    upper = [r.imag for r in roots if r.imag > 1e-9 * scale]
    w = min(upper) if upper else scale
    return max(w, 0.5)


def _path(phase, w, t):
    a, b, c = phase.derivs(t)
    eps2 = 0.25
    d2 = b * b + (a / w) ** 2 + eps2
    dd = np.sqrt(d2)
    y = a / dd
    # y' = (b D - a D'/1) / D^2 with D' = (b c + a b / w^2)/D
    dy = (b * dd - a * (b * c + a * b / w**2) / dd) / d2
    return t + 1j * y, 1.0 + 1j * dy


def contour_plan(model, z):
    """Build the quadrature path for A_n(z)."""
    phase = _Phase(model, z)
    roots = phase.saddles()
    w = _height(phase, roots)
    rmax = max(1.0, float(np.max(np.abs(roots))))
    T = 1.5 * rmax + 1.0
    while True:
        s, _ = _path(phase, w, np.array([T]))
        if phase.value(s)[0].imag > _TAIL + (2 * phase.n) * math.log(1 + T):
            break
        T *= 1.25
    # panel count from the phase variation where the integrand is not negligible
    t = np.linspace(0.0, T, 2001)
    s, _ = _path(phase, w, t)
    ph = phase.value(s)
    live = ph.imag < _TAIL + 5
    dph = np.abs(np.diff(ph.real)) + np.abs(np.diff(ph.imag))
    variation = float(np.sum(dph[live[:-1] | live[1:]]))
    panels = max(8, int(math.ceil(variation / 6.0)), int(math.ceil(T / 0.6)))
    width = T / panels
    segs = tuple((i * width, 1.0, width, _GL_ORDER) for i in range(panels))
    real_saddles = tuple(sorted(float(r.real) for r in roots if abs(r.imag) < 1e-9 * rmax))
    return ContourPlan(
        ray_angle=math.pi / (2 * (2 * model.n + 1)),
        saddle_points=real_saddles,
        segments=segs,
        truncation_threshold=math.exp(-_TAIL),
        height=w,
    )


def _nodes(plan):
    starts = np.array([seg[0] for seg in plan.segments])
    width = plan.segments[0][2]
    t = (starts[:, None] + (0.5 * (_GL_X + 1.0) * width)[None, :]).ravel()
    wt = np.tile(0.5 * width * _GL_W, len(starts))
    return t, wt


def wave_derivs(model, z, max_order=0, tol=1e-12):
    """A_n^{(j)}(z) for j = 0..max_order as a float array."""
    phase = _Phase(model, z)
    plan = contour_plan(model, z)
    t, wt = _nodes(plan)
    s, ds = _path(phase, plan.height, t)
    base = np.exp(1j * phase.value(s)) * ds * wt
    out = np.empty(max_order + 1)
    bound = np.empty(max_order + 1)
    weight = np.ones_like(s)
    for j in range(max_order + 1):
        term = weight * base
        out[j] = float(np.sum(term).real / math.pi)
        bound[j] = float(np.sum(np.abs(term)) / math.pi)
        weight = weight * (1j * s)
    err = 8 * np.finfo(float).eps * bound
    if np.any(err > tol * np.maximum(1.0, np.abs(out))):
        warnings.warn(f"A_n({z}) cancellation error estimate {err.max():.2e}", PrecisionWarning,
                      stacklevel=2)
    return out


def wave_a(model, x):
    """A_n(x) = (1/2 pi i) int_{gamma_R} exp((-1)^{n+1} P(u) - x u) du."""
    return float(wave_derivs(model, x, 0)[0])


def airy_hi(n, x):
    """Ai_{2n+1}(x) = (1/pi) int_0^inf cos(s^{2n+1}/(2n+1) + x s) ds."""
    return wave_a(make_model(n, [0] * (n - 1)), x)


def wave_table(model, xs, max_order=0, tol=1e-12):
    """Rows of (A, A', ..., A^{(max_order)}) for every x in ``xs``.

    Batched version of :func:`wave_derivs`: every argument gets its own path
    height and truncation point, and all paths share one panel count.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size == 0:
        return np.empty((0, max_order + 1))
    n = model.n
    qc = _q_signed(model)
    poly = np.zeros(2 * n + 1)
    for k in range(n + 1):
        poly[2 * n - 2 * k] += qc[k]
    heights = np.empty(len(xs))
    reach = np.empty(len(xs))
    for i, x in enumerate(xs):
        poly[-1] = x + qc[0]
        roots = np.roots(poly)
        scale = max(1.0, abs(x) ** (1.0 / (2 * n)))
        upper = roots.imag[roots.imag > 1e-9 * scale]
        heights[i] = max(upper.min() if upper.size else scale, 0.5)
        reach[i] = max(1.0, np.abs(roots).max())
    phase = _Phase(model, 0.0)
    phase.z = xs[:, None]
    w = heights[:, None]

    T = 1.5 * reach + 1.0
    for _ in range(200):
        sT, _ = _path(phase, w, T[:, None])
        bad = phase.value(sT)[:, 0].imag <= _TAIL + 2 * n * np.log1p(T)
        if not bad.any():
            break
        T[bad] *= 1.25

    u = np.linspace(0.0, 1.0, 401)[None, :]
    ph = phase.value(_path(phase, w, T[:, None] * u)[0])
    live = ph.imag < _TAIL + 5
    dph = np.abs(np.diff(ph.real, axis=1)) + np.abs(np.diff(ph.imag, axis=1))
    variation = np.sum(np.where(live[:, :-1] | live[:, 1:], dph, 0.0), axis=1)
    need = np.maximum(np.maximum(8, np.ceil(variation / 6.0)), np.ceil(T / 0.6))
    # bucket arguments by panel count so cheap ones do not pay for the worst
    bucket = np.ceil(2.0 ** (np.ceil(2 * np.log2(need)) / 2)).astype(int)
    out = np.empty((len(xs), max_order + 1))
    bound = np.empty_like(out)
    for panels in np.unique(bucket):
        idx = np.nonzero(bucket == panels)[0]
        g = (np.arange(panels)[:, None] + 0.5 * (_GL_X[None, :] + 1.0)).ravel() / panels
        t = T[idx, None] * g[None, :]
        wt = (T[idx] / panels)[:, None] * np.tile(0.5 * _GL_W, panels)[None, :]
        sub = _Phase(model, 0.0)
        sub.z = xs[idx, None]
        sp, ds = _path(sub, w[idx], t)
        base = np.exp(1j * sub.value(sp)) * ds * wt
        weight = np.ones_like(sp)
        for j in range(max_order + 1):
            term = weight * base
            out[idx, j] = term.sum(axis=1).real / math.pi
            bound[idx, j] = np.abs(term).sum(axis=1) / math.pi
            weight = weight * (1j * sp)
    err = 8 * np.finfo(float).eps * bound
    if np.any(err > tol * np.maximum(1.0, np.abs(out))):
        warnings.warn(f"A_n cancellation error estimate {err.max():.2e}", PrecisionWarning, stacklevel=2)
    return out


# ---------------------------------------------------------------------------
# Gamma and Barnes G


def arg_gamma(z):
    """Im log Gamma(z) on the principal, continuous branch of log Gamma."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == round(z.real):
        raise SpecialDomainError(f"Gamma has a pole at {z.real}")
    return float(loggamma(z).imag)


def log_barnes_g_pair(y, nterms=None):
    """ln[G(1+iy) G(1-iy)].

    ln G(1+z) = z ln(2pi)/2 - (z + (1+gamma) z^2)/2
                + sum_k [k ln(1+z/k) - z + z^2/(2k)];
    pairing z = +-iy cancels the odd parts.  The tail k > N is summed in
    closed form with Hurwitz zeta values.
    """
    y = abs(float(y))
    if y == 0.0:
        return 0.0
    y2 = y * y
    N = nterms if nterms is not None else max(16, int(8 * y) + 16)
    k = np.arange(1, N + 1, dtype=float)
    head = np.sum(k * np.log1p(y2 / k**2) - y2 / k)
    # k ln(1+y^2/k^2) - y^2/k = sum_{m>=2} (-1)^{m+1} y^{2m} / (m k^{2m-1})
    tail = 0.0
    m = 2
    while True:
        term = (-1) ** (m + 1) * y2**m / m * zeta(2 * m - 1, N + 1)
        tail += term
        if abs(term) < 1e-18 * max(1.0, abs(tail)) or m > 200:
            break
        m += 1
    return (1.0 + EULER_GAMMA) * y2 + head + tail


def barnes_g_pair(y, nterms=None):
    """G(1+iy) G(1-iy), real and positive."""
    return math.exp(log_barnes_g_pair(y, nterms))


# ---------------------------------------------------------------------------
# connection-formula parameters


@dataclass(frozen=True)
class AsymParams:
    """(beta, phi) for 0 < rho < 1 ("sub") or (kappa, varphi) for rho > 1 ("super")."""

    mode: str
    first: float
    second: float
    rho: float
    n: int

    def __post_init__(self):
        if self.mode == "sub" and not 0 < self.rho < 1:
            raise SpecialDomainError(f"sub mode needs 0 < rho < 1, got {self.rho}")
        if self.mode == "super" and not self.rho > 1:
            raise SpecialDomainError(f"super mode needs rho > 1, got {self.rho}")
        if self.mode not in ("sub", "super"):
            raise ValueError(f"unknown mode {self.mode!r}")


def _check_n(n):
    if isinstance(n, ModelSpec):
        return n.n
    return int(n)


def subcritical_params(rho, n=1):
    """beta = -ln(1-rho^2)/pi, phi = -(beta/2) ln(8n) + arg Gamma(i beta/2) + pi/4."""
    n = _check_n(n)
    rho = abs(float(rho))
    if not 0 < rho < 1:
        raise SpecialDomainError(f"subcritical parameters need 0 < |rho| < 1, got {rho}")
    beta = -math.log1p(-rho * rho) / math.pi
    phi = -0.5 * beta * math.log(8 * n) + arg_gamma(0.5j * beta) + math.pi / 4
    return AsymParams("sub", beta, phi, rho, n)


def supercritical_params(rho, n=1):
    """kappa = -ln(rho^2-1)/(2pi), varphi = -kappa ln(8n) + arg Gamma(1/2 + i kappa) + pi/2."""
    n = _check_n(n)
    rho = abs(float(rho))
    if not rho > 1:
        raise SpecialDomainError(f"supercritical parameters need |rho| > 1, got {rho}")
    kappa = -math.log(rho * rho - 1.0) / (2 * math.pi)
    varphi = -kappa * math.log(8 * n) + arg_gamma(0.5 + 1j * kappa) + math.pi / 2
    return AsymParams("super", kappa, varphi, rho, n)
