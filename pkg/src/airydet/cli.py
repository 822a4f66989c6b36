"""Command-line interface: ``airydet <command> [options]``.

Every command prints one table (CSV or JSON) to stdout, sorted by its first
column, so numeric columns do not depend on ``--jobs``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import asymptotics as asy
from . import fredholm as fh
from .harness import (
    CACHE_ENV,
    ConfigError,
    GridSpec,
    ResultCache,
    RunConfig,
    default_cache_dir,
    parse_grid,
    parse_tau,
    render_table,
)
from .series import make_model
from .special import PrecisionWarning, wave_derivs

DET_COLUMNS = ["x", "F", "log_abs_F", "sign", "node_count", "truncation_residual", "self_consistency",
               "cached", "seconds", "error"]


# ---------------------------------------------------------------------------
# per-point workers (module level so they pickle)


def _det_point(args):
    key, rho, x, nodes, check = args
    model = make_model(key[0], key[1:])
    t0 = time.perf_counter()
    try:
        sch = fh.default_scheme(model, x, nodes)
        r = fh.fredholm_det(model, rho, x, sch, check=check)
        row = {"x": x, "F": r.value, "log_abs_F": r.log_value, "sign": r.sign, "node_count": r.node_count,
               "truncation_residual": r.truncation_residual, "self_consistency": r.self_consistency,
               "error": ""}
    except (ArithmeticError, ValueError) as exc:
        row = {"x": x, "error": f"{type(exc).__name__}: {exc}"}
    row["seconds"] = time.perf_counter() - t0
    return row


def _q_point(args):
    key, rho, x = args
    model = make_model(key[0], key[1:])
    try:
        d1, d2 = fh.log_f_derivs(model, rho, x)
        return {"x": x, "abs_q": math.sqrt(max(0.0, -d2)), "dlogF": d1, "d2logF": d2, "error": ""}
    except (ArithmeticError, ValueError) as exc:
        return {"x": x, "error": f"{type(exc).__name__}: {exc}"}


def _map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# commands


def cmd_airy(cfg, args):
    model = cfg.model()
    rows = []
    for x in cfg.grid.points():
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PrecisionWarning)
            v = wave_derivs(model, float(x), 1)
        rows.append({"x": float(x), "A": float(v[0]), "dA": float(v[1]),
                     "precision_warning": int(any(issubclass(w.category, PrecisionWarning) for w in caught))})
    return rows, ["x", "A", "dA", "precision_warning"]


def cmd_kernel(cfg, args):
    model = cfg.model()
    ys = parse_grid(args.y).points() if args.y else None
    rows = []
    for x in cfg.grid.points():
        for y in (ys if ys is not None else [x]):
            x, y = float(x), float(y)
            if args.method == "contour":
                k = fh.kernel_double_contour(model, x, y)
            else:
                k = fh.kernel_eval(model, x, y)
            rows.append({"x": x, "y": y, "K": k})
    rows.sort(key=lambda r: (r["x"], r["y"]))
    return rows, ["x", "y", "K"]


def _det_rows(cfg, check, use_cache):
    model = cfg.model()
    key = model.key()
    xs = [float(x) for x in cfg.grid.points()]
    cache = None
    cache_dir = cfg.cache_dir or default_cache_dir()
    if use_cache and cache_dir:
        cache = ResultCache(cache_dir)
    rows, todo = {}, []
    for x in xs:
        inputs = {"model": list(key), "rho": cfg.rho, "x": x, "nodes": cfg.nodes, "check": check}
        hit = cache.get("det", inputs) if cache else None
        if hit is not None:
            rows[x] = dict(hit, cached=1, seconds=0.0)
        else:
            todo.append((key, cfg.rho, x, cfg.nodes, check))
    fresh = _map(_det_point, todo, cfg.jobs)
    new_entries = []
    for task, row in zip(todo, fresh):
        row["cached"] = 0
        rows[task[2]] = row
        if cache and not row.get("error"):
            payload = {k: v for k, v in row.items() if k not in ("cached", "seconds")}
            inputs = {"model": list(key), "rho": cfg.rho, "x": task[2], "nodes": cfg.nodes, "check": check}
            new_entries.append(("det", inputs, payload))
    if cache:
        cache.put_many(new_entries)
    return [rows[x] for x in sorted(rows)]


def cmd_det(cfg, args):
    return _det_rows(cfg, args.check, use_cache=bool(cfg.cache_dir or default_cache_dir())), DET_COLUMNS


def cmd_scan(cfg, args):
    return _det_rows(cfg, args.check, use_cache=True), DET_COLUMNS


def cmd_qextract(cfg, args):
    key = cfg.model().key()
    rows = _map(_q_point, [(key, cfg.rho, float(x)) for x in cfg.grid.points()], cfg.jobs)
    return sorted(rows, key=lambda r: r["x"]), ["x", "abs_q", "dlogF", "d2logF", "error"]


_ASYM = {
    "q_sub": asy.q_asym_sub,
    "logF": asy.logF_asym,
    "q_super": asy.q_asym_super,
    "dlogF_super": asy.dlogF_asym_super,
}


def cmd_asymp(cfg, args):
    model = cfg.model()
    fn = _ASYM[args.kind]
    rows = []
    for x in cfg.grid.points():
        try:
            e = fn(model, cfg.rho, float(x))
            rows.append({"x": float(x), "value": e.value, "phase": e.phase,
                         "error_order": str(e.error_order), "error": ""})
        except (ArithmeticError, ValueError) as exc:
            rows.append({"x": float(x), "error": f"{type(exc).__name__}: {exc}"})
    return rows, ["x", "value", "phase", "error_order", "error"]


def _pole_rows(cfg, m_lo, m_hi, numeric):
    model = cfg.model()
    ms = list(range(m_lo, m_hi + 1))
    est = {m: asy.pole_estimate(model, cfg.rho, m) for m in ms}
    rows = [{"m": m, "p_estimate": est[m]} for m in ms]
    if numeric:
        lo = min(est.values()) - 1.0
        hi = min(-0.5, max(est.values()) + 1.0)
        zeros = fh.f_zeros(model, cfg.rho, (lo, hi))
        by_m = {}
        for z in zeros:
            m = round(asy.super_phase(model, cfg.rho, z) / math.pi)
            by_m[m] = z
        for r in rows:
            z = by_m.get(r["m"])
            r["zero"] = z
            r["rel_gap"] = abs(r["p_estimate"] - z) / abs(z) if z is not None else None
    return rows


def cmd_poles(cfg, args):
    a, b = (int(v) for v in args.m.split(":"))
    cols = ["m", "p_estimate"] + (["zero", "rel_gap"] if args.numeric else [])
    return _pole_rows(cfg, a, b, args.numeric), cols


def cmd_counting(cfg, args):
    model = cfg.model()
    rows = []
    for x in cfg.grid.points():
        x = float(x)
        mean, var = fh.counting_moments(model, x)
        mu, s2, const = asy.mu_sigma(model, x)
        rows.append({"x": x, "mean": mean, "variance": var, "mu": mu, "sigma2": s2, "var_const": const,
                     "mean_minus_mu": mean - mu, "variance_defect": var - s2 - const,
                     "clt_defect_s1": asy.clt_check(model, x, 1.0)})
    cols = ["x", "mean", "variance", "mu", "sigma2", "var_const", "mean_minus_mu", "variance_defect",
            "clt_defect_s1"]
    return rows, cols


def _slope(xs, res):
    xs, res = np.abs(np.asarray(xs, float)), np.abs(np.asarray(res, float))
    ok = res > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(xs[ok]), np.log(res[ok]), 1)[0])


def cmd_compare(cfg, args):
    model = cfg.model()
    xs = [float(x) for x in cfg.grid.points()]
    kind = args.kind
    rows = []
    if kind == "logF":
        for x in xs:
            num = fh.fredholm_det(model, cfg.rho, x).log_value
            a = asy.logF_asym(model, cfg.rho, x).value
            rows.append({"x": x, "numeric": num, "asymptotic": a, "residual": num - a})
    elif kind == "q_sub":
        for x in xs:
            num = fh.q_extract(model, cfg.rho, x)
            a = asy.q_asym_sub(model, cfg.rho, x)
            rows.append({"x": x, "numeric": num, "asymptotic": abs(a.value), "residual": num - abs(a.value),
                         "envelope": asy.q_envelope_sub(model, cfg.rho, x)})
    elif kind == "dlogF_super":
        for x in xs:
            try:
                a = asy.dlogF_asym_super(model, cfg.rho, x).value
                num = fh.log_f_derivs(model, cfg.rho, x)[0]
                rows.append({"x": x, "numeric": num, "asymptotic": a, "residual": num - a})
            except ArithmeticError as exc:
                rows.append({"x": x, "error": f"{type(exc).__name__}: {exc}"})
    elif kind == "total":
        rhs = asy.total_integral_rhs(cfg.rho, model.n)
        for x in xs:
            lhs = fh.total_integral_lhs(model, cfg.rho, x)
            rows.append({"x": x, "numeric": lhs, "asymptotic": rhs, "residual": lhs - rhs})
    elif kind == "counting":
        for x in xs:
            mean, var = fh.counting_moments(model, x)
            mu, s2, const = asy.mu_sigma(model, x)
            rows.append({"x": x, "numeric": var - s2, "asymptotic": const, "residual": var - s2 - const,
                         "mean_residual": mean - mu})
    slope = _slope([r["x"] for r in rows if "residual" in r], [r["residual"] for r in rows if "residual" in r])
    for r in rows:
        r["fitted_slope"] = slope
    cols = ["x", "numeric", "asymptotic", "residual"]
    cols += {"q_sub": ["envelope"], "counting": ["mean_residual"]}.get(kind, [])
    cols += ["fitted_slope", "error"]
    return rows, cols


def cmd_verify(cfg, args):
    from . import acceptance

    if args.ids:
        ids = tuple(int(v) for v in args.ids.split(","))
    else:
        ids = acceptance.SUBSETS[args.subset]
    results = acceptance.run(ids, stream=sys.stderr)
    rows = [{"criterion": r.cid, "title": r.title, "passed": int(r.passed), "seconds": r.seconds,
             "checks": len(r.checks), "failed_checks": sum(not c.ok for c in r.checks)} for r in results]
    if args.junit:
        _write_junit(args.junit, results)
    args._exit = 0 if all(r.passed for r in results) else 1
    return rows, ["criterion", "title", "passed", "seconds", "checks", "failed_checks"]


def _write_junit(path, results):
    import xml.etree.ElementTree as ET

    suite = ET.Element("testsuite", name="acceptance", tests=str(len(results)),
                       failures=str(sum(not r.passed for r in results)))
    for r in results:
        case = ET.SubElement(suite, "testcase", classname="acceptance", name=f"criterion_{r.cid}",
                             time=f"{r.seconds:.3f}")
        if not r.passed:
            fail = ET.SubElement(case, "failure", message=r.title)
            fail.text = "\n".join(c.line() for c in r.checks)
    ET.ElementTree(suite).write(path, encoding="utf-8", xml_declaration=True)


COMMANDS = {
    "airy": (cmd_airy, "higher-order Airy function A_n and its derivative on a grid"),
    "kernel": (cmd_kernel, "kernel K_n(x, y)"),
    "det": (cmd_det, "Fredholm determinant F_n(x; rho)"),
    "scan": (cmd_scan, "cached, parallel determinant scan over an x-grid"),
    "qextract": (cmd_qextract, "|q_n| from -(ln F)''"),
    "asymp": (cmd_asymp, "closed-form asymptotic evaluators"),
    "poles": (cmd_poles, "pole estimates for rho > 1, optionally paired with zeros of F"),
    "counting": (cmd_counting, "counting-function moments vs mu, sigma^2"),
    "compare": (cmd_compare, "numeric vs asymptotic residuals with fitted slopes"),
    "verify": (cmd_verify, "run the acceptance suite"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("--n", type=int)
    common.add_argument("--tau", help="comma-separated tau_1..tau_{n-1}")
    common.add_argument("--rho", type=float)
    common.add_argument("--x", help="grid a:b:count[:pow] or a single value")
    common.add_argument("--nodes", type=int)
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--cache-dir", help=f"result cache directory (default ${CACHE_ENV})")
    common.add_argument("--jobs", type=int)
    common.add_argument("-o", "--output", help="write the table here instead of stdout")

    p = argparse.ArgumentParser(prog="airydet", description="Higher-order Airy kernel determinants.")
    sub = p.add_subparsers(dest="command", required=True)
    parsers = {name: sub.add_parser(name, parents=[common], help=h) for name, (_, h) in COMMANDS.items()}
    parsers["kernel"].add_argument("--y", help="second-argument grid; default is the diagonal")
    parsers["kernel"].add_argument("--method", choices=["quad", "contour"], default="quad")
    for name in ("det", "scan"):
        parsers[name].add_argument("--check", action="store_true", help="also run at doubled nodes")
    parsers["asymp"].add_argument("--kind", choices=sorted(_ASYM), default="logF")
    parsers["poles"].add_argument("--m", default="1:10", help="index range a:b")
    parsers["poles"].add_argument("--numeric", action="store_true", help="pair with zeros of F")
    parsers["compare"].add_argument("--kind", choices=["logF", "q_sub", "dlogF_super", "total", "counting"],
                                    default="logF")
    parsers["verify"].add_argument("--subset", choices=["symbolic", "fast", "all"], default="all")
    parsers["verify"].add_argument("--ids", help="comma-separated criterion numbers")
    parsers["verify"].add_argument("--junit", help="write a junit-style XML report")
    return p


def config_from_args(args):
    base = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh_:
            base = json.load(fh_)
    cfg = RunConfig.from_json(base) if base else RunConfig()
    upd = {}
    if args.n is not None:
        upd["n"] = args.n
    if args.tau is not None:
        upd["tau"] = parse_tau(args.tau)
    elif args.n is not None and args.n != cfg.n:
        upd["tau"] = (0.0,) * (args.n - 1)
    if args.rho is not None:
        upd["rho"] = args.rho
    if args.x is not None:
        upd["grid"] = parse_grid(args.x)
    for name in ("nodes", "format", "cache_dir", "jobs"):
        v = getattr(args, name)
        if v is not None:
            upd[name] = v
    d = cfg.to_json()
    d.update(upd)
    d["grid"] = upd.get("grid", cfg.grid)
    if isinstance(d["grid"], dict):
        d["grid"] = GridSpec(**d["grid"])
    return RunConfig.from_json(d)


_VALUE_FLAGS = ("--x", "--y", "--tau", "--rho", "--m")


def _glue_negative_values(argv):
    # argparse reads "-5:5:11" as an option; bind it to the preceding flag
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        cfg = config_from_args(args)
    except (ConfigError, ValueError) as exc:
        parser.error(str(exc))
    fn, _ = COMMANDS[args.command]
    rows, cols = fn(cfg, args)
    text = render_table(rows, cols, cfg.format)
    if args.output:
        tmp = args.output + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="") as fh_:
            fh_.write(text)
        os.replace(tmp, args.output)
    else:
        sys.stdout.write(text)
    return getattr(args, "_exit", 0)


if __name__ == "__main__":
    sys.exit(main())
