"""Nystrom evaluation of F_n(x; rho) = det(I - rho^2 K_n) on L^2(x, inf),
plus the quantities read off from it: log-derivatives, |q_n|, real zeros for
rho > 1, counting-function moments and the total-integral left side.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .series import ModelSpec, a_coeffs
from .special import subcritical_params, wave_table

# K(b, b) below this marks the right edge of the truncated interval
_EDGE_TOL = 1e-18
DEFAULT_NODES = 200


class EvaluationError(ArithmeticError):
    pass


class PoleProximityError(ArithmeticError):
    """F changes sign inside a finite-difference stencil."""


# ---------------------------------------------------------------------------
# kernel


def _ode_coeffs(model):
    """c_m with x A = sum_m c_m A^{(2m)}, m = 1..n (index 0 unused)."""
    n = model.n
    c = np.zeros(n + 1)
    c[n] = (-1) ** (n + 1)
    for k, t in enumerate(model.tau, start=1):
        c[k] = (-1) ** (n + 1) * float(t)
    return c


def kernel_from_jets(model, jx, jy, x, y):
    """K_n(x, y) from derivative tables jx[:, j] = A^{(j)}(x), jy likewise.

    Integrating (x - y) A(x+s) A(y+s) over s with the ODE of A gives
        (x - y) K = - sum_m c_m sum_{j<2m} (-1)^j A^{(2m-1-j)}(x) A^{(j)}(y),
    and the diagonal is the x-derivative of the right side at y = x.
    """
    c = _ode_coeffs(model)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    num = np.zeros(np.broadcast(x[:, None], y[None, :]).shape)
    diag = np.zeros(len(x))
    for m in range(1, model.n + 1):
        if c[m] == 0:
            continue
        for j in range(2 * m):
            sgn = -c[m] * (-1) ** j
            num += sgn * np.outer(jx[:, 2 * m - 1 - j], jy[:, j])
            diag += sgn * jx[:, 2 * m - j] * jx[:, j]
    dx = x[:, None] - y[None, :]
    close = np.abs(dx) < 1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.where(close, 0.0, num / np.where(close, 1.0, dx))
    if close.any():
        # only reached on the diagonal of a square grid
        ii, jj = np.nonzero(close)
        K[ii, jj] = diag[ii]
    return K


def kernel_diag(model, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    jets = wave_table(model, x, 2 * model.n)
    return kernel_from_jets(model, jets, jets, x, x).diagonal().copy()


def kernel_eval(model, x, y, panel=0.5):
    """K_n(x, y) = int_0^inf A(x+s) A(y+s) ds by Gauss-Legendre panels."""
    lo = min(x, y)
    edge = right_edge(model)
    S = max(edge - lo, 0.0) + 4.0
    panels = int(math.ceil(S / panel))
    gx, gw = np.polynomial.legendre.leggauss(20)
    h = S / panels
    s = (np.arange(panels)[:, None] * h + 0.5 * h * (gx[None, :] + 1.0)).ravel()
    w = np.tile(0.5 * h * gw, panels)
    ax = wave_table(model, x + s)[:, 0]
    ay = ax if x == y else wave_table(model, y + s)[:, 0]
    return float(np.sum(w * ax * ay))


def kernel_double_contour(model, x, y, vertex=0.1, nodes=400):
    """Raw double contour integral of the kernel definition (oracle only).

    gamma_R: rays from ``vertex`` to inf*exp(+-i a), gamma_L its mirror
    image, a = n pi/(2n+1); both oriented from the lower ray to the upper.
    """
    n = model.n
    theta_sign = (-1) ** (n + 1)
    a = n * math.pi / (2 * n + 1)
    R = (60.0 * (2 * n + 1)) ** (1.0 / (2 * n + 1)) + abs(x) + abs(y)
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * R * (gx + 1.0)
    wr = 0.5 * R * gw

    def ray_nodes(v0, angle):
        d = np.exp(1j * angle)
        return v0 + r * d, wr * d

    u_up, du_up = ray_nodes(vertex, a)
    u_dn, du_dn = ray_nodes(vertex, -a)
    u = np.concatenate([u_dn, u_up])
    du = np.concatenate([-du_dn, du_up])
    v_up, dv_up = ray_nodes(-vertex, math.pi - a)
    v_dn, dv_dn = ray_nodes(-vertex, -(math.pi - a))
    v = np.concatenate([v_dn, v_up])
    dv = np.concatenate([-dv_dn, dv_up])

    coeffs = [float(c) for c in model.p_coeffs()]

    def P(z):
        return sum(coeffs[k] * z ** (2 * k + 1) / (2 * k + 1) for k in range(1, n + 1))

    fu = np.exp(theta_sign * P(u) - x * u) * du
    fv = np.exp(-theta_sign * P(v) + y * v) * dv
    total = fu @ (1.0 / (u[:, None] - v[None, :])) @ fv
    return float((total / (2j * math.pi) ** 2).real)


@functools.lru_cache(maxsize=64)
def _edge_cached(model):
    b = 1.0
    while kernel_diag(model, b)[0] >= _EDGE_TOL:
        b *= 1.5
    lo = b / 1.5
    for _ in range(12):
        mid = 0.5 * (lo + b)
        if kernel_diag(model, mid)[0] >= _EDGE_TOL:
            lo = mid
        else:
            b = mid
    return b


def right_edge(model):
    """Smallest b (to ~1e-3) with K_n(b, b) below 1e-18."""
    return _edge_cached(model)


# ---------------------------------------------------------------------------
# discretization


@dataclass(frozen=True)
class QuadratureScheme:
    """Affine Gauss-Legendre rule on (x, x + L)."""

    node_count: int
    truncation_length: float
    x: float
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 1 or self.truncation_length <= 0:
            raise ValueError("need node_count >= 1 and truncation_length > 0")
        gx, gw = np.polynomial.legendre.leggauss(self.node_count)
        L = self.truncation_length
        object.__setattr__(self, "nodes", self.x + 0.5 * L * (gx + 1.0))
        object.__setattr__(self, "weights", 0.5 * L * gw)

    @property
    def mapping(self):
        return "affine-gauss-legendre"

    def shifted(self, x):
        return replace(self, x=float(x))

    def refined(self, factor=2):
        return replace(self, node_count=self.node_count * factor)


def default_nodes(model, x):
    if x >= -20:
        return DEFAULT_NODES
    return int(math.ceil(DEFAULT_NODES * (abs(x) / 20.0) ** ((2 * model.n + 1) / (4 * model.n))))


def default_scheme(model, x, node_count=None):
    x = float(x)
    edge = right_edge(model)
    L = max(edge - x, 2.0)
    return QuadratureScheme(node_count or default_nodes(model, x), L, x)


@dataclass(frozen=True)
class DiscretizedOperator:
    matrix: np.ndarray
    model: ModelSpec
    x: float
    scheme: QuadratureScheme


def discretize(model, x, scheme=None):
    """Symmetrized Nystrom matrix sqrt(w_i) K(t_i, t_j) sqrt(w_j)."""
    if scheme is None:
        scheme = default_scheme(model, x)
    elif scheme.x != x:
        scheme = scheme.shifted(x)
    t = scheme.nodes
    jets = wave_table(model, t, 2 * model.n)
    K = kernel_from_jets(model, jets, jets, t, t)
    sw = np.sqrt(scheme.weights)
    M = sw[:, None] * K * sw[None, :]
    M = 0.5 * (M + M.T)
    if not np.all(np.isfinite(M)):
        raise EvaluationError(f"non-finite kernel entries at x={x}")
    return DiscretizedOperator(M, model, float(x), scheme)


@dataclass(frozen=True)
class DeterminantResult:
    value: float
    log_value: float
    sign: float
    rho: float
    x: float
    node_count: int
    truncation_residual: float
    self_consistency: float | None = None


def fredholm_logdet(model, rho2, x, scheme=None, operator=None):
    """(sign, log|det(I - rho2 M)|) for a given squared deformation rho2."""
    if rho2 == 0:
        return 1.0, 0.0
    op = operator if operator is not None else discretize(model, x, scheme)
    A = np.eye(len(op.matrix)) - rho2 * op.matrix
    sign, logabs = np.linalg.slogdet(A)
    if not np.isfinite(logabs):
        if sign == 0:
            return 0.0, -math.inf
        raise EvaluationError(f"determinant evaluation failed at x={x}")
    return float(sign), float(logabs)


def fredholm_det(model, rho, x, scheme=None, check=False):
    """F_n(x; rho) by LU on the symmetrized Nystrom matrix."""
    rho2 = float(rho) ** 2
    if scheme is None:
        scheme = default_scheme(model, x)
    if rho2 == 0:
        return DeterminantResult(1.0, 0.0, 1.0, float(rho), float(x), scheme.node_count, 0.0, 0.0)
    sign, logabs = fredholm_logdet(model, rho2, x, scheme)
    edge_val = rho2 * float(kernel_diag(model, x + scheme.truncation_length)[0])
    delta = None
    if check:
        _, log2 = fredholm_logdet(model, rho2, x, scheme.refined(2))
        delta = abs(log2 - logabs)
    value = sign * math.exp(logabs) if sign != 0 else 0.0
    return DeterminantResult(value, logabs, sign, float(rho), float(x), scheme.node_count,
                             edge_val * scheme.truncation_length, delta)


# ---------------------------------------------------------------------------
# derived quantities


def _stencil_logs(model, rho2, x, h, scheme):
    pts = {}
    for k in (-4, -2, -1, 0, 1, 2, 4):
        pts[k] = fredholm_logdet(model, rho2, x + k * h, scheme.shifted(x + k * h))
    signs = {s for s, _ in pts.values()}
    if len(signs) != 1 or 0.0 in signs:
        raise PoleProximityError(f"F changes sign or vanishes near x={x}")
    return {k: v for k, (_, v) in pts.items()}


def log_f_derivs(model, rho, x, h=1e-2, scheme=None):
    """(d/dx ln|F|, d^2/dx^2 ln|F|) by 5-point central differences with one
    Richardson step (steps h and 2h)."""
    rho2 = float(rho) ** 2
    if rho2 == 0:
        return 0.0, 0.0
    scheme = scheme or default_scheme(model, x + 4 * h)
    f = _stencil_logs(model, rho2, x, h, scheme)

    def d1(s):
        return (f[-2 * s] - 8 * f[-s] + 8 * f[s] - f[2 * s]) / (12 * s * h)

    def d2(s):
        return (-f[-2 * s] + 16 * f[-s] - 30 * f[0] + 16 * f[s] - f[2 * s]) / (12 * (s * h) ** 2)

    first = (16 * d1(1) - d1(2)) / 15
    second = (16 * d2(1) - d2(2)) / 15
    return first, second


def q_extract(model, rho, x, h=1e-2, scheme=None):
    """|q_n((-1)^{n+1} x; rho)| = sqrt(-d^2/dx^2 ln F); the sign is not
    recoverable from F."""
    if rho == 0:
        return 0.0
    _, second = log_f_derivs(model, rho, x, h, scheme)
    return math.sqrt(max(0.0, -second))


def f_zeros(model, rho, window, step=None, scheme=None, xtol=1e-8):
    """Sign changes of x -> F_n(x; rho) in ``window``, refined by Brent's method."""
    rho2 = float(rho) ** 2
    lo, hi = sorted(float(v) for v in window)
    if step is None:
        step = min(0.05, 0.25 * math.pi / max(1.0, abs(lo)) ** (1.0 / (2 * model.n)))
    scheme = scheme or default_scheme(model, lo)
    xs = np.linspace(lo, hi, int(math.ceil((hi - lo) / step)) + 1)

    def F(x):
        s, lv = fredholm_logdet(model, rho2, x, scheme.shifted(x))
        return s * math.exp(lv)

    vals = np.array([F(x) for x in xs])
    zeros = []
    for i in range(len(xs) - 1):
        if vals[i] == 0.0:
            zeros.append(float(xs[i]))
        elif vals[i] * vals[i + 1] < 0:
            zeros.append(float(brentq(F, xs[i], xs[i + 1], xtol=xtol, rtol=1e-14)))
    return zeros


def counting_moments(model, x, dgamma=1e-3, scheme=None):
    """Mean and variance of N(x) from ln E[exp(-2 pi gamma N)] = ln F_n(-x; rho(gamma)),
    rho^2 = 1 - exp(-2 pi gamma), by 5-point stencils in gamma."""
    scheme = scheme or default_scheme(model, -x)
    op = discretize(model, -x, scheme)
    vals = {}
    for k in (-2, -1, 0, 1, 2):
        g = k * dgamma
        rho2 = -math.expm1(-2 * math.pi * g)
        vals[k] = fredholm_logdet(model, rho2, -x, operator=op)[1]
    d1 = (vals[-2] - 8 * vals[-1] + 8 * vals[1] - vals[2]) / (12 * dgamma)
    d2 = (-vals[-2] + 16 * vals[-1] - 30 * vals[0] + 16 * vals[1] - vals[2]) / (12 * dgamma**2)
    mean = -d1 / (2 * math.pi)
    var = d2 / (4 * math.pi**2)
    return mean, var


def log_moment_generating(model, x, gamma, scheme=None, operator=None):
    """ln E[exp(-2 pi gamma N(x))] for any real gamma."""
    rho2 = -math.expm1(-2 * math.pi * gamma)
    sign, lv = fredholm_logdet(model, rho2, -x, scheme, operator)
    if sign <= 0:
        raise EvaluationError(f"non-positive moment generating value at x={x}, gamma={gamma}")
    return lv


def total_integral_lhs(model, rho, x, scheme=None):
    """ln F_n(x; rho) + beta * sum_k 2n a_k (-x)^{e_k}/(1+2(n-k)) - (2n+1) beta^2/(8n) ln(-x).

    ln F equals -int_x^inf (s - x) q_n^2 ds, so this is the bracket whose
    x -> -inf limit is the total integral."""
    if x >= 0:
        raise ValueError("total_integral_lhs needs x < 0")
    n = model.n
    beta = subcritical_params(rho, n).first
    a = a_coeffs(model, n)
    absx = -float(x)
    phase = sum(2 * n * float(a[k]) * absx ** ((1 + 2 * (n - k)) / (2 * n)) / (1 + 2 * (n - k))
                for k in range(n + 1))
    logF = fredholm_det(model, rho, x, scheme).log_value
    return logF + beta * phase - (2 * n + 1) * beta**2 / (8 * n) * math.log(absx)


def logdet_scan(model, rho, xs, node_count=None):
    """(signs, ln|F|) at each x, each point on its own default scheme."""
    rho2 = float(rho) ** 2
    signs = np.empty(len(xs))
    logs = np.empty(len(xs))
    for i, x in enumerate(xs):
        sch = default_scheme(model, x, node_count)
        signs[i], logs[i] = fredholm_logdet(model, rho2, float(x), sch)
    return signs, logs


def second_difference(values, h):
    """d^2/dx^2 on a uniform grid: 5-point stencils at h and 2h plus one
    Richardson step.  Returns values for indices 4..len-5."""
    f = np.asarray(values, dtype=float)
    c = slice(4, len(f) - 4)

    def d2(s):
        sh = lambda k: f[4 + k: len(f) - 4 + k]  # noqa: E731
        return (-sh(-2 * s) + 16 * sh(-s) - 30 * f[c] + 16 * sh(s) - sh(2 * s)) / (12 * (s * h) ** 2)

    return (16 * d2(1) - d2(2)) / 15


def q_squared_grid(model, rho, x_lo, x_hi, h=0.02):
    """(xs, q^2) with q^2 = -d^2/dx^2 ln F on a uniform grid covering [x_lo, x_hi]."""
    n = int(math.ceil((x_hi - x_lo) / h))
    xs = x_lo - 4 * h + h * np.arange(n + 9)
    signs, logs = logdet_scan(model, rho, xs)
    if np.any(signs <= 0):
        raise PoleProximityError("F is not positive on the scan grid")
    return xs[4:-4], -second_difference(logs, h)
