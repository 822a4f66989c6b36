"""Acceptance suite: each criterion is a function returning a CriterionResult.

Shared by ``airydet verify`` and tests/test_acceptance.py. Grids and seeds
are pinned so repeated runs give identical numbers.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from . import fredholm as fh
from .series import (
    DifferentialPolynomial,
    b_coeffs,
    g_eval,
    hierarchy_equation,
    make_model,
)
from .special import EULER_GAMMA, airy_hi, barnes_g_pair, log_barnes_g_pair


@dataclass
class Check:
    name: str
    value: float
    limit: float | str
    ok: bool

    def line(self):
        v = self.value if isinstance(self.value, str) else f"{self.value:.3e}"
        lim = self.limit if isinstance(self.limit, str) else f"{self.limit:.3e}"
        return f"{'ok' if self.ok else 'FAIL'}  {self.name}: {v} (limit {lim})"


@dataclass
class CriterionResult:
    cid: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return bool(self.checks) and all(c.ok for c in self.checks)

    def add(self, name, value, limit, ok):
        self.checks.append(Check(name, value, limit, bool(ok)))

    def summary(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.cid}: {self.title} ({self.seconds:.1f} s)"


def _timed(cid, title):
    def wrap(fn):
        def run():
            res = CriterionResult(cid, title)
            t0 = time.perf_counter()
            fn(res)
            res.seconds = time.perf_counter() - t0
            return res

        run.cid = cid
        run.title = title
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


def _mono(n):
    return make_model(n, [0] * (n - 1))


# pinned point sets, reused by the self-convergence criterion
C3_POINTS = [(n, x) for n in (1, 2) for x in (1.0, 2.0, 3.0)]
C4_CASES = [(make_model(1), rho, -15.0, 0.02, np.arange(-15.0, -5.99, 0.5)) for rho in (0.3, 0.7)] + [
    (make_model(2, [t]), rho, -12.0, 0.05, np.arange(-12.0, -5.99, 0.5)) for t in (0, 1) for rho in (0.3, 0.7)
]
C5_RANGE = (-40.0, -20.0)
C5_STEP = 0.02
C6_WINDOW = (-15.0, -2.0)
C6_DLOG_GRID = np.arange(-14.0, -5.99, 0.25)
C6_GUARD = 0.3
C7_POINTS = (6.0, 10.0, 14.0)


# ---------------------------------------------------------------------------


@_timed(1, "hierarchy members n=1, n=2 as exact differential polynomials")
def criterion_1(res):
    import sympy

    q = [DifferentialPolynomial.jet(k, "q") for k in range(5)]
    X = DifferentialPolynomial.x("q")
    t0 = time.perf_counter()
    got1 = hierarchy_equation(make_model(1))
    want1 = q[2] - 2 * q[0] ** 3 - X * q[0]
    res.add("n=1 equals q'' - 2q^3 - xq", 0.0 if got1 == want1 else 1.0, 0.0, got1 == want1)
    tau1 = sympy.Symbol("tau1")
    got2 = hierarchy_equation(make_model(2, [tau1]))
    want2 = (q[4] - 10 * q[0] * q[1] ** 2 - 10 * q[0] ** 2 * q[2] + 6 * q[0] ** 5
             + tau1 * (q[2] - 2 * q[0] ** 3) - X * q[0])
    diff = got2 - want2
    zero = all(sympy.simplify(c) == 0 for c in diff.monomials.values())
    res.add("n=2 (symbolic tau1) equals the reference fourth-order member", 0.0 if zero else 1.0, 0.0, zero)
    dt = time.perf_counter() - t0
    res.add("runtime [s]", dt, 1.0, dt < 1.0)


@_timed(2, "large-gap term assembly vs reference n=2, n=3 expansions")
def criterion_2(res):
    import sympy as sp

    t0 = time.perf_counter()
    b, X, C = sp.Symbol("beta", positive=True), sp.Symbol("X", positive=True), sp.Symbol("lnC0")
    t1, t2 = sp.symbols("tau1 tau2")
    R = sp.Rational
    reference = {
        2: (make_model(2, [t1]),
            -R(4, 5) * b * X ** R(5, 4) - b * t1 / 3 * X ** R(3, 4) - R(3, 8) * b * t1**2 * X ** R(1, 4)
            + R(5, 16) * b**2 * sp.log(X) + b**2 * sp.log(2) + C),
        3: (make_model(3, [t1, t2]),
            -R(6, 7) * b * X ** R(7, 6) - b * t2 / 5 * X ** R(5, 6) - b / 3 * (t2**2 / 4 - t1) * X ** R(1, 2)
            - b * t2 / 6 * (R(7, 36) * t2**2 - t1) * X ** R(1, 6)
            + R(7, 24) * b**2 * sp.log(X) + b**2 / 4 * sp.log(24) + C),
    }
    for n, (model, want) in reference.items():
        got = asy.logF_asym_symbolic(model, b, X, C)
        d = sp.simplify(sp.expand_log(sp.expand(got - want), force=True))
        res.add(f"n={n} difference {d}", 0.0 if d == 0 else 1.0, 0.0, d == 0)
    dt = time.perf_counter() - t0
    res.add("runtime [s]", dt, 1.0, dt < 1.0)


@_timed(3, "q_extract vs rho*Ai_{2n+1} for x in {1,2,3}")
def criterion_3(res):
    rho = 0.5
    for n, x in C3_POINTS:
        q = fh.q_extract(_mono(n), rho, x)
        ref = abs(rho * airy_hi(n, x))
        err = abs(q - ref) / ref
        res.add(f"n={n} x={x:g} relative error", err, 1e-2, err < 1e-2)


def _envelope_slope(xs, errs, windows=3):
    """Slope of log(max |err| per window) against log(mean |x| per window)."""
    absx = np.abs(xs)
    order = np.argsort(absx)
    chunks = np.array_split(order, windows)
    lx = [math.log(absx[c].mean()) for c in chunks]
    ly = [math.log(np.abs(errs[c]).max()) for c in chunks]
    return float(np.polyfit(lx, ly, 1)[0])


@_timed(4, "large-gap asymptotics: value at the deep point and decay slope")
def criterion_4(res):
    for model, rho, x_deep, tol, xs in C4_CASES:
        tag = f"n={model.n} tau={[float(t) for t in model.tau]} rho={rho}"
        errs = np.array([fh.fredholm_det(model, rho, x).log_value - asy.logF_asym(model, rho, x).value
                         for x in xs])
        deep = abs(errs[np.argmin(np.abs(xs - x_deep))])
        res.add(f"{tag} |lnF - asym| at x={x_deep:g}", deep, tol, deep < tol)
        target = -1.0 / (2 * model.n)
        slope = _envelope_slope(xs, errs)
        ok = abs(slope - target) <= 0.3 * abs(target)
        res.add(f"{tag} fitted error slope {slope:+.3f} vs {target:+.3f} +-30%", abs(slope - target),
                0.3 * abs(target), ok)


def _refine_extremum(xs, ys, i):
    c = np.polyfit(xs[i - 2:i + 3] - xs[i], ys[i - 2:i + 3], 2)
    dx = -c[1] / (2 * c[0])
    return xs[i] + dx, float(np.polyval(c, dx))


def c5_scan(model=None, rho=0.5):
    model = model or make_model(1)
    return fh.q_squared_grid(model, rho, *C5_RANGE, h=C5_STEP)


@_timed(5, "connection formula: phase of zeros and envelope, n=1 rho=0.5 on [-40,-20]")
def criterion_5(res):
    model, rho = make_model(1), 0.5
    xs, q2 = c5_scan(model, rho)
    inside = (xs >= C5_RANGE[0]) & (xs <= C5_RANGE[1])
    idx = np.nonzero(inside)[0]
    mins, maxs = [], []
    for i in idx:
        if 2 <= i < len(xs) - 2:
            if q2[i] < q2[i - 1] and q2[i] <= q2[i + 1]:
                mins.append(_refine_extremum(xs, q2, i))
            elif q2[i] > q2[i - 1] and q2[i] >= q2[i + 1]:
                maxs.append(_refine_extremum(xs, q2, i))
    errs = []
    for x0, _ in mins:
        th = asy.phase_grid(model, rho, [x0])[0] - math.pi / 2
        errs.append(abs(th - math.pi * round(th / math.pi)))
    mean_err = float(np.mean(errs)) if errs else math.inf
    res.add(f"mean |phase error| over {len(errs)} zeros [rad]", mean_err, 0.05, mean_err < 0.05)
    rel = [abs(math.sqrt(max(v, 0.0)) / asy.q_envelope_sub(model, rho, x0) - 1) for x0, v in maxs]
    worst = max(rel) if rel else math.inf
    res.add(f"max envelope relative error over {len(rel)} maxima", worst, 0.05, worst < 0.05)


def c6_zeros():
    return fh.f_zeros(make_model(1), 2.0, C6_WINDOW)


def c6_dlog_points():
    model, rho = make_model(1), 2.0
    pts = []
    for x in C6_DLOG_GRID:
        th = asy.super_phase(model, rho, x)
        if abs(th - math.pi * round(th / math.pi)) >= C6_GUARD:
            pts.append(float(x))
    return pts


@_timed(6, "rho=2: zeros of F vs pole estimates, d/dx ln|F| vs asymptotics")
def criterion_6(res):
    model, rho = make_model(1), 2.0
    zeros = sorted(c6_zeros(), reverse=True)[:5]
    res.add("zeros found in window", float(len(zeros)), ">= 5", len(zeros) >= 5)
    gaps = []
    for z in zeros:
        m = round(asy.super_phase(model, rho, z) / math.pi)
        p = asy.pole_estimate(1, rho, m)
        gaps.append((m, abs(p - z) / abs(z)))
    if gaps:
        m5 = dict(gaps).get(5, math.inf)
        res.add("relative gap at pole index m=5", m5, 0.03, m5 < 0.03)
        seq = [g for _, g in gaps]
        dec = all(b < a for a, b in zip(seq, seq[1:]))
        res.add("relative gap decreasing in m " + ",".join(f"{m}:{g:.2e}" for m, g in gaps),
                0.0 if dec else 1.0, 0.0, dec)
    worst = 0.0
    for x in c6_dlog_points():
        a = asy.dlogF_asym_super(model, rho, x).value
        d = fh.log_f_derivs(model, rho, x)[0]
        worst = max(worst, abs(a - d) / max(abs(a), abs(x) ** 0.5))
    res.add("max relative dlogF error at guarded points", worst, 0.05, worst < 0.05)


@_timed(7, "counting statistics: mean, variance constant, CLT defect")
def criterion_7(res):
    model = make_model(1)
    dmean, clt = [], []
    for x in C7_POINTS:
        mean, var = fh.counting_moments(model, x)
        mu, s2, const = asy.mu_sigma(model, x)
        dmean.append(abs(mean - mu))
        clt.append(abs(asy.clt_check(model, x, 1.0)))
        if x == C7_POINTS[-1]:
            res.add(f"|E N - mu| at x={x:g}", dmean[-1], 0.02, dmean[-1] < 0.02)
            dv = abs(var - s2 - const)
            res.add(f"|Var N - sigma^2 - const| at x={x:g}", dv, 0.02, dv < 0.02)
    dec = all(b < a for a, b in zip(dmean, dmean[1:]))
    res.add("|E N - mu| decreasing " + ",".join(f"{v:.2e}" for v in dmean), 0.0 if dec else 1.0, 0.0, dec)
    dec = all(b < a for a, b in zip(clt, clt[1:]))
    res.add("|clt_check(s=1)| decreasing " + ",".join(f"{v:.3f}" for v in clt), 0.0 if dec else 1.0, 0.0, dec)


@_timed(8, "total integral, n=1 rho=0.5 at x=-15")
def criterion_8(res):
    d = abs(fh.total_integral_lhs(make_model(1), 0.5, -15.0) - asy.total_integral_rhs(0.5, 1))
    res.add("|LHS(-15) - RHS|", d, 0.02, d < 0.02)


def self_convergence_points():
    """(model, rho, x) for every determinant the other criteria rely on."""
    pts = []
    h = 1e-2
    for n, x in C3_POINTS:
        pts += [(_mono(n), 0.5, x + k * h) for k in (-4, 0, 4)]
    for model, rho, _, _, xs in C4_CASES:
        pts += [(model, rho, float(x)) for x in xs]
    grid = C5_RANGE[0] - 4 * C5_STEP + C5_STEP * np.arange(0, int(round((C5_RANGE[1] - C5_RANGE[0]) / C5_STEP)) + 9)
    pts += [(make_model(1), 0.5, float(x)) for x in grid[::20]]
    pts += [(make_model(1), 2.0, x) for x in c6_dlog_points()]
    for x in C7_POINTS:
        pts += [(make_model(1), math.sqrt(-math.expm1(-2 * math.pi * g)) if g >= 0 else None, -x, g)
                for g in (-2e-3, 0.0, 2e-3)]
    pts += [(make_model(1), 0.5, -15.0)]
    return pts


@_timed(9, "oracle equivalences and self-convergence")
def criterion_9(res):
    from scipy.special import airy

    rng = np.random.default_rng(20240611)
    m1 = make_model(1)
    worst = 0.0
    for x, y in rng.uniform(-5, 5, size=(20, 2)):
        ax, apx, _, _ = airy(x)
        ay, apy, _, _ = airy(y)
        ref = (ax * apy - apx * ay) / (x - y)
        worst = max(worst, abs(fh.kernel_eval(m1, x, y) - ref))
    res.add("n=1 kernel_eval vs classical Airy kernel, 20 random pairs", worst, 1e-8, worst < 1e-8)
    m2 = make_model(2, [1])
    worst = 0.0
    for x, y in [(0.0, 1.0), (-1.0, 0.5), (-2.5, -2.5), (1.5, -0.7), (-3.0, 2.0)]:
        worst = max(worst, abs(fh.kernel_eval(m2, x, y) - fh.kernel_double_contour(m2, x, y)))
    res.add("n=2 tau1=1 kernel_eval vs double contour, 5 points", worst, 1e-8, worst < 1e-8)
    worst, count = 0.0, 0
    for entry in self_convergence_points():
        if len(entry) == 4:
            model, _, x, g = entry
            rho2 = -math.expm1(-2 * math.pi * g)
        else:
            model, rho, x = entry
            rho2 = rho * rho
        sch = fh.default_scheme(model, x)
        _, l1 = fh.fredholm_logdet(model, rho2, x, sch)
        _, l2 = fh.fredholm_logdet(model, rho2, x, sch.refined(2))
        worst = max(worst, abs(l1 - l2))
        count += 1
    res.add(f"max |d ln|F|| under node doubling over {count} points", worst, 1e-8, worst < 1e-8)


@_timed(10, "property suites")
def criterion_10(res):
    models = [make_model(1), make_model(2, [1]), make_model(3, [0.7, -1])]
    exact = True
    for m in models:
        for x in (-3.0, 0.0, 1.5):
            for rho in (0.3, 1.0, 2.0):
                exact &= fh.fredholm_det(m, rho, x).value == fh.fredholm_det(m, -rho, x).value
    res.add("F(x;rho) == F(x;-rho) bit-exact", 0.0 if exact else 1.0, 0.0, exact)
    xs = np.linspace(-6.0, 3.0, 19)
    bad_range, bad_mono, worst_d2 = 0, 0, -math.inf
    for m in models[:2]:
        for rho in (0.0, 0.3, 0.7, 1.0):
            vals = [fh.fredholm_det(m, rho, x).value for x in xs]
            bad_range += sum(not (0 < v <= 1) for v in vals)
            bad_mono += sum(b < a for a, b in zip(vals, vals[1:]))
            if rho > 0:
                for x in xs[::3]:
                    worst_d2 = max(worst_d2, fh.log_f_derivs(m, rho, x)[1])
    res.add("F outside (0,1] for rho in [0,1]", float(bad_range), 0.0, bad_range == 0)
    res.add("monotonicity violations", float(bad_mono), 0.0, bad_mono == 0)
    res.add("max d^2/dx^2 ln F", worst_d2, 1e-8, worst_d2 <= 1e-8)
    even_ok = True
    for m in models + [make_model(4, [0.3, -0.2, 1.1])]:
        b = b_coeffs(m, 12)
        even_ok &= all(b[k] == 0 for k in range(2, 13, 2))
    res.add("b_{2m} = 0 exactly", 0.0 if even_ok else 1.0, 0.0, even_ok)
    worst = 0.0
    for m in models:
        for x in (-4.0, -30.0):
            for z in (0.3, 0.2 + 0.4j, -1.1 + 0.05j):
                worst = max(worst, abs(g_eval(m, -z, x) + g_eval(m, z, x)) / max(1.0, abs(g_eval(m, z, x))))
    res.add("g(-z) + g(z) relative", worst, 1e-14, worst <= 1e-14)
    g0 = barnes_g_pair(0.0)
    res.add("barnes_g_pair(0) - 1", abs(g0 - 1.0), 0.0, g0 == 1.0)
    y = 1e-4
    quad = log_barnes_g_pair(y) / y**2
    res.add("small-y quadratic coefficient vs 1 + gamma_E", abs(quad - (1 + EULER_GAMMA)), 1e-6,
            abs(quad - (1 + EULER_GAMMA)) < 1e-6)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]
SUBSETS = {"symbolic": (1, 2), "fast": (1, 2, 3, 7, 8, 10), "all": tuple(range(1, 11))}


def run(ids=None, stream=None):
    ids = ids or SUBSETS["all"]
    results = []
    for fn in CRITERIA:
        if fn.cid not in ids:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r = fn()
        results.append(r)
        if stream is not None:
            print(r.summary(), file=stream)
            for c in r.checks:
                print("    " + c.line(), file=stream)
            stream.flush()
    return results
