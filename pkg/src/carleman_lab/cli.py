"""Batch driver: ``carleman-lab <subcommand> [--config F] [--out DIR] [--seed N] [--jobs N]``.

Each subcommand reads an optional JSON config (keys documented in the
README), runs its suites, and writes ``results.csv``, ``summary.json`` and
``plot.gp`` into ``--out``. Exit status: 0 when every suite passes, 1 on a
suite failure, 2 on a config error (nothing is written then).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .almost_complex import (
    ConjugatedStructure,
    NilpotentDeformation,
    StandardStructure,
    VaryingConjugation,
    jhol_residual,
)
from .coords import convexify, deconvexify
from .experiments import final_contradiction_sweep, uc_demo, vanishing_order
from .fields import PacketRecipe, family, field_from_dict, resolve
from .ledger import (
    GridSample,
    TermLedger,
    absorption_check,
    carleman_ratio_sweep,
    decomposition_check,
    expand_A_norm,
    expand_B_norm,
    expand_commutator,
    max_ratio_by_h,
    trouble_split,
    INDEFINITE_TERM,
)
from .operators import coefficients, conjugation_residual
from .plane import monomial_curve, plane_field_from_dict
from .quadrature import CylinderGrid

SCHEMA_VERSION = "1.0"
LONG_COLUMNS = ("suite", "case", "h", "epsilon", "quantity", "value", "tolerance", "passed")
SWEEP_COLUMNS = ("field_id", "h", "epsilon", "T0", "lhs", "rhs", "ratio")


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "verify-identities": {
        "fields": None,
        "T0": -5.0,
        "conjugation_hs": [0.1, 0.05],
        "conjugation_epsilons": [0.25, 0.5, 0.75],
        "n_points": 100,
        "ledger_h": 0.05,
        "ledger_epsilon": 0.5,
        "lambdas": [2.1, 2.5, 2.9],
        "absorption_h": 0.02,
        "absorption_lambda": 2.5,
        "n_sign_samples": 10000,
    },
    "carleman-sweep": {
        "fields": None,
        "T0": -5.0,
        "hs": [0.1 * 2.0**-k for k in range(7)],
        "epsilons": [0.5],
        "spread_limit": 10.0,
    },
    "vanishing-order": {
        "cases": None,
        "sweep_fields": None,
        "T0": -5.0,
        "epsilon": 0.5,
        "sweep_hs": [0.1 * 2.0**-k for k in range(6)],
        "order_tolerance": 0.1,
    },
    "uc-demo": {
        "cases": None,
        "T0": -5.0,
        "epsilon": 0.5,
        "hs": [0.1 * 2.0**-k for k in range(4)],
        "jhol_tolerance": 1e-12,
    },
}

TOL = {
    "conjugation": 1e-10,
    "decomposition": 1e-7,
    "ledger": 1e-7,
    "trouble": 1e-10,
    "trouble_invariance": 1e-12,
    "absorption": 1e-12,
    "coords": 1e-12,
    "jhol": 1e-12,
}


# --- config -----------------------------------------------------------------


def load_config(subcommand: str, path) -> dict:
    cfg = dict(DEFAULTS[subcommand])
    if path is None:
        return cfg
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    sub = raw.pop("subcommand", subcommand)
    if sub != subcommand:
        raise ConfigError(f"config is for {sub!r}, not {subcommand!r}")
    unknown = sorted(set(raw) - set(cfg))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    cfg.update(raw)
    return cfg


def _positive_list(cfg, key, upper=None):
    vals = cfg[key]
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"{key} must be a non-empty list")
    try:
        vals = [float(v) for v in vals]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if any(not v > 0 or (upper is not None and not v < upper) for v in vals):
        raise ConfigError(f"{key} entries must lie in (0, {upper})")
    return vals


def _float(cfg, key, lo=-math.inf, hi=math.inf):
    try:
        v = float(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if not lo <= v <= hi:
        raise ConfigError(f"{key} out of range")
    return v


def _cylinder_fields(cfg):
    T0 = cfg["T0"]
    if cfg["fields"] is None:
        return [f"f{i}" for i in range(10)], family(T0)
    ids, fields = [], []
    try:
        for i, rec in enumerate(cfg["fields"]):
            rec = dict(rec)
            ids.append(str(rec.pop("id", f"f{i}")))
            fields.append(field_from_dict(rec))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad field recipe: {exc}") from exc
    for fid, f in zip(ids, fields):
        if isinstance(f, PacketRecipe):
            continue
        sup = f.support()
        if sup is None or sup[1] > T0:
            raise ConfigError(f"field {fid} must be supported in (-inf, T0]")
    return ids, fields


def _plane(rec):
    try:
        return plane_field_from_dict(rec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad plane recipe: {exc}") from exc


def structure_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "standard":
        return StandardStructure(int(d.get("n", 1)))
    if kind == "conjugated":
        return ConjugatedStructure(tuple(tuple(float(x) for x in r) for r in d["M"]))
    if kind == "nilpotent":
        return NilpotentDeformation(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items() if k != "kind"})
    if kind == "varying":
        return VaryingConjugation(int(d.get("n", 1)), float(d.get("delta", 0.1)), int(d.get("seed", 0)))
    raise ValueError(f"unknown structure kind {kind!r}")


# --- suites -----------------------------------------------------------------


class Collector:
    """Long-format rows plus per-suite pass/fail bookkeeping."""

    def __init__(self):
        self.rows = []
        self.suites = {}

    def add(self, suite, case, quantity, value, tolerance, passed, h=None, eps=None):
        row = {"suite": suite, "case": case, "h": h, "epsilon": eps, "quantity": quantity,
               "value": value, "tolerance": tolerance, "passed": bool(passed)}
        self.rows.append(row)
        s = self.suites.setdefault(suite, {"passed": True, "n_rows": 0, "worst": None, "failures": []})
        s["n_rows"] += 1
        s["passed"] = s["passed"] and bool(passed)
        if isinstance(value, float) and math.isfinite(value) and tolerance is not None:
            s["worst"] = value if s["worst"] is None else max(s["worst"], value)
        if not passed:
            s["failures"].append(row)


def _support_points(V, n, rng):
    lo, hi = V.support()
    return rng.uniform(lo, hi, n), rng.uniform(0.0, 2 * math.pi, n)


def run_verify(cfg, seed, jobs):
    ids, fields = _cylinder_fields(cfg)
    hs = _positive_list(cfg, "conjugation_hs", 1.0)
    epss = _positive_list(cfg, "conjugation_epsilons", 1.0)
    lams = _positive_list(cfg, "lambdas")
    h_l = _float(cfg, "ledger_h", 0.0, 0.2)
    eps_l = _float(cfg, "ledger_epsilon", 0.0, 1.0)
    h_a = _float(cfg, "absorption_h", 0.0, 0.2)
    lam_a = _float(cfg, "absorption_lambda", 0.0)
    n_pts = int(_float(cfg, "n_points", 1))
    n_sign = int(_float(cfg, "n_sign_samples", 1))
    rng = np.random.default_rng(seed)
    out = Collector()

    n_eps = max(1, int(math.isqrt(n_sign)))
    worst = -math.inf
    for eps in rng.uniform(0.01, 0.99, n_eps):
        cf = coefficients(rng.uniform(-40.0, 5.0, max(1, n_sign // n_eps)), float(eps))
        worst = max(worst, float(cf.c.max()), float(cf.c_prime.max()))
    out.add("coefficients", "signs", "max(c, c')", worst, 0.0, worst < 0)

    Tc = rng.uniform(-40.0, -2.0, 1000)
    for eps in epss:
        t = convexify(Tc, eps)
        back = deconvexify(t, eps)
        err = float(np.max(np.abs(back - Tc)))
        order_ok = bool(np.all((Tc < t) & (t < Tc + 1) & (Tc + 1 < Tc / 2)))
        out.add("coords", "round_trip", "max|T - T(t(T))|", err, TOL["coords"], err < TOL["coords"] and order_ok,
                eps=eps)

    x1, x2 = rng.uniform(-0.5, 0.5, (2, 200))
    for k in range(1, 7):
        r = float(np.max(np.abs(jhol_residual(monomial_curve(k), StandardStructure(1), x1, x2))))
        out.add("jhol", f"x^{k}", "max residual", r, TOL["jhol"], r < TOL["jhol"])

    for fid, item in zip(ids, fields):
        for h in hs:
            for eps in epss:
                V = resolve(item, h, eps)
                Tp, thp = _support_points(V, n_pts, rng)
                res = float(np.max(conjugation_residual(V, Tp, thp, eps, h, relative=True)))
                out.add("conjugation", fid, "max relative residual", res, TOL["conjugation"],
                        res < TOL["conjugation"], h, eps)

    for fid, item in zip(ids, fields):
        V = resolve(item, h_l, eps_l)
        grid = CylinderGrid.for_fields(V)
        s = GridSample(V, eps_l, h_l, grid)
        d = decomposition_check(s, eps_l, h_l, grid)
        out.add("decomposition", fid, "relative residual", d.residual, TOL["decomposition"],
                d.residual < TOL["decomposition"], h_l, eps_l)
        ledgers: dict[str, TermLedger] = {
            "A": expand_A_norm(s, eps_l, h_l, grid),
            "B": expand_B_norm(s, eps_l, h_l, grid),
            "commutator": expand_commutator(s, eps_l, h_l, grid),
        }
        for name, L in ledgers.items():
            out.add("ledger", fid, f"{name} relative residual", L.residual, TOL["ledger"],
                    L.residual < TOL["ledger"], h_l, eps_l)
        trouble = ledgers["A"][INDEFINITE_TERM]
        scale = abs(trouble) or abs(ledgers["A"].target)
        sums = []
        for lam in lams:
            p1, p2 = trouble_split(s, eps_l, h_l, grid, lam)
            sums.append(p1 + p2)
            rel = abs(p1 + p2 - trouble) / scale
            out.add("trouble", fid, f"split residual lam={lam!r}", rel, TOL["trouble"], rel < TOL["trouble"],
                    h_l, eps_l)
        spread = (max(sums) - min(sums)) / scale
        out.add("trouble", fid, "lambda invariance", spread, TOL["trouble_invariance"],
                spread < TOL["trouble_invariance"], h_l, eps_l)

        Va = resolve(item, h_a, eps_l)
        ga = CylinderGrid.for_fields(Va)
        rep = absorption_check(Va, eps_l, h_a, ga, lam_a)
        for k, m in sorted(rep.relative_margins.items()):
            out.add("absorption", fid, f"relative margin {k}", m, -TOL["absorption"],
                    m >= -TOL["absorption"], h_a, eps_l)
    return out.rows, LONG_COLUMNS, out.suites, _plot_long("verify-identities")


def run_sweep(cfg, seed, jobs):
    ids, fields = _cylinder_fields(cfg)
    hs = _positive_list(cfg, "hs", 0.2)
    epss = _positive_list(cfg, "epsilons", 1.0)
    limit = _float(cfg, "spread_limit", 1.0)
    reports = carleman_ratio_sweep(fields, hs, epss, cfg["T0"], field_ids=ids, jobs=jobs)
    rows = [{k: getattr(r, k) for k in SWEEP_COLUMNS} for r in reports]
    suites = {}
    for eps in epss:
        by_h = max_ratio_by_h([r for r in reports if r.epsilon == eps])
        spread = max(by_h.values()) / min(by_h.values())
        ok = spread < limit
        suites[f"h_uniformity eps={eps!r}"] = {
            "passed": bool(ok),
            "max_ratio_by_h": {repr(h): v for h, v in sorted(by_h.items(), reverse=True)},
            "spread": spread,
            "tolerance": limit,
            "failures": [] if ok else [{"epsilon": eps, "spread": spread}],
        }
    return rows, SWEEP_COLUMNS, suites, _plot_sweep(ids)


def _default_order_cases():
    cases = [{"id": f"x^{k}", "field": {"kind": "monomial", "k": k}, "expected": k} for k in range(1, 7)]
    cases.append({"id": "flat", "field": {"kind": "flat"}, "expected": "saturated",
                  "radii": [0.3, 0.2, 0.12, 0.08, 0.05]})
    return cases


def run_vanishing(cfg, seed, jobs):
    cases = cfg["cases"] if cfg["cases"] is not None else _default_order_cases()
    sweeps = cfg["sweep_fields"] if cfg["sweep_fields"] is not None else [
        {"id": "x^1", "field": {"kind": "monomial", "k": 1}},
        {"id": "x^3", "field": {"kind": "monomial", "k": 3}},
    ]
    hs = _positive_list(cfg, "sweep_hs", 0.2)
    tol = _float(cfg, "order_tolerance", 0.0)
    eps = _float(cfg, "epsilon", 0.0, 1.0)
    parsed = []
    try:
        for c in cases:
            kw = {"radii": [float(r) for r in c["radii"]]} if "radii" in c else {}
            parsed.append((str(c["id"]), _plane(c["field"]), c.get("expected"), kw))
        sweep_parsed = [(str(c["id"]), _plane(c["field"])) for c in sweeps]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad case: {exc}") from exc

    out = Collector()
    for cid, u, expected, kw in parsed:
        try:
            rep = vanishing_order(u, **kw)
        except ValueError as exc:
            raise ConfigError(f"case {cid}: {exc}") from exc
        if expected == "saturated":
            ok = rep.saturated
        elif expected is None:
            ok = True
        else:
            ok = (not rep.saturated) and abs(rep.estimated_order - float(expected)) <= tol
        out.add("vanishing_order", cid, "estimated_order", rep.estimated_order,
                tol if expected not in (None, "saturated") else None, ok)
        out.add("vanishing_order", cid, "fit_residual", rep.fit_residual, None, True)
        out.add("vanishing_order", cid, "saturated", float(rep.saturated), None, True)
    for cid, u in sweep_parsed:
        rows = final_contradiction_sweep(u, cfg["T0"], hs, eps)
        lr = [r.log_ratio for r in rows]
        for i, r in enumerate(rows):
            ok = i == 0 or (math.isfinite(r.log_ratio) and r.log_ratio > lr[i - 1])
            out.add("contradiction", cid, "log_ratio", r.log_ratio, None, ok, r.h, eps)
    return out.rows, LONG_COLUMNS, out.suites, _plot_long("vanishing-order")


def _default_demo_cases():
    M = [[1.0, 0.3], [0.2, 1.5]]
    x2 = {"kind": "monomial", "k": 2}
    x3 = {"kind": "monomial", "k": 3}
    x5 = {"kind": "monomial", "k": 5}
    return [
        {"id": "equal", "u": x3, "v": x3, "J": {"kind": "standard", "n": 1}, "expect_equal": True},
        {"id": "x3_vs_x3+x5", "u": x3, "v": {"kind": "sum", "terms": [x3, x5]},
         "J": {"kind": "standard", "n": 1}, "expect_equal": False},
        {"id": "conjugated", "u": {"kind": "linear", "matrix": M, "field": x2},
         "v": {"kind": "linear", "matrix": M, "field": {"kind": "sum", "terms": [x2, x3]}},
         "J": {"kind": "conjugated", "M": M}, "expect_equal": False},
    ]


def run_demo(cfg, seed, jobs):
    cases = cfg["cases"] if cfg["cases"] is not None else _default_demo_cases()
    hs = _positive_list(cfg, "hs", 0.2)
    eps = _float(cfg, "epsilon", 0.0, 1.0)
    tol = _float(cfg, "jhol_tolerance", 0.0)
    parsed = []
    try:
        for c in cases:
            parsed.append((str(c["id"]), _plane(c["u"]), _plane(c["v"]), structure_from_dict(c["J"]),
                           c.get("expect_equal")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad case: {exc}") from exc
    out = Collector()
    for cid, u, v, J, expect in parsed:
        rep = uc_demo(u, v, J, cfg["T0"], hs, eps, seed=seed)
        out.add("uc_demo", cid, "jhol residual u", rep.jhol_u, tol, rep.jhol_u < tol)
        out.add("uc_demo", cid, "jhol residual v", rep.jhol_v, tol, rep.jhol_v < tol)
        out.add("uc_demo", cid, "diff_ineq constant", math.nan if rep.diff_ineq is None else rep.diff_ineq,
                None, True)
        out.add("uc_demo", cid, "vanishing order", rep.vanishing.estimated_order, None, True)
        for r in rep.sweep:
            out.add("uc_demo", cid, "log_ratio", r.log_ratio, None, True, r.h, eps)
        ok = rep.consistent and (expect is None or expect == rep.vanishing.saturated)
        out.add("uc_demo", cid, "consistent", float(rep.consistent), None, ok)
    return out.rows, LONG_COLUMNS, out.suites, _plot_long("uc-demo")


RUNNERS = {
    "verify-identities": run_verify,
    "carleman-sweep": run_sweep,
    "vanishing-order": run_vanishing,
    "uc-demo": run_demo,
}


# --- output -----------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _plot_sweep(ids) -> str:
    lines = [
        "# lhs/rhs against h, one curve per field",
        'set datafile separator ","',
        "set logscale xy",
        'set xlabel "h"',
        'set ylabel "lhs / rhs"',
        "set key outside",
    ]
    plots = [f"'results.csv' every ::1 using (strcol(1) eq \"{i}\" ? $2 : 1/0):7 with linespoints title \"{i}\""
             for i in ids]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def _plot_long(sub) -> str:
    if sub == "verify-identities":
        body = [
            "# residual per row, log scale; tolerance rows share the same x",
            "set logscale y",
            'set ylabel "value"',
            "plot 'results.csv' every ::1 using 0:(abs($6) > 0 ? abs($6) : 1/0) with points title \"|value|\", \\",
            "     'results.csv' every ::1 using 0:(abs($7) > 0 ? abs($7) : 1/0) with lines title \"tolerance\"",
        ]
    else:
        body = [
            "# log(lhs / bound) against h for the contradiction sweeps",
            "set logscale x",
            'set xlabel "h"',
            'set ylabel "log ratio"',
            "plot 'results.csv' every ::1 using (strcol(5) eq \"log_ratio\" ? $3 : 1/0):6 with linespoints title \"log ratio\"",
        ]
    return "\n".join(['set datafile separator ","'] + body) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="carleman-lab", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=sorted(RUNNERS))
    p.add_argument("--config", help="JSON config file (defaults used when omitted)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.subcommand, args.config)
        rows, columns, suites, plot = RUNNERS[args.subcommand](cfg, args.seed, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    passed = all(s["passed"] for s in suites.values())
    summary = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": args.subcommand,
        "seed": args.seed,
        "config": cfg,
        "columns": list(columns),
        "suites": suites,
        "passed": passed,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(render_csv(rows, columns))
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), sort_keys=True, indent=2) + "\n")
    (out / "plot.gp").write_text(plot)
    for name, s in sorted(suites.items()):
        print(f"{'PASS' if s['passed'] else 'FAIL'}  {name}")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
