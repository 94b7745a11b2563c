"""Scenario runner: loads a problem config, runs named analyses, and writes a
versioned JSON report plus one plot-ready CSV per analysis.

    svilab run <config.json> [--out DIR] [--seed N] [--threads N]
    svilab list
    svilab slope|sigma-nabla|sigma-h|errorbound|aubin|lip-lsc|gder|concavity <config.json>

Exit codes: 0 when no assertion-class violations were found, 1 when any
analysis reported violations, 2 on config/schema errors, 3 on numeric
failures.  Reports are byte-identical across runs for a fixed config and
seed; bare config names resolve against the shipped configs directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import concavity as concavity_mod
from . import errorbounds as eb
from .derivatives import MEMBER_THRESHOLD, WINDOW_FACTOR, sandwich_check
from .problems import (AffineScenario, SolvCache, SviProblem, UncertainMap,
                       list_builtins, make_builtin)
from .geometry import GeneratorSet, PolyhedralCone
from .regions import as_vector
from .reporting import dumps_canonical, write_csv, write_json
from .slopes import FanPrederivative, partial_strong_slope, sigma_H, sigma_nabla

REPORT_SCHEMA = "svi-lab/1"
ANALYSIS_NAMES = ("slope", "sigma-nabla", "sigma-h", "errorbound", "aubin",
                  "lip-lsc", "gder", "concavity")
DEFAULT_REGIONS = {"zeta": 0.5, "eta": 0.25, "delta": 0.25, "r": 0.25, "h": 1e-2}

_VEC = {"type": "array", "minItems": 1, "items": {"type": "number"}}
_MATRIX = {"type": "array", "minItems": 1, "items": _VEC}
_POSNUM = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["problem", "analyses"],
    "additionalProperties": False,
    "properties": {
        "schema": {"type": "string"},
        "problem": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["kind", "name"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"const": "builtin"},
                        "name": {"type": "string"},
                        "m": {"type": "integer", "minimum": 1},
                    },
                },
                {
                    "type": "object",
                    "required": ["kind", "m", "n_p", "n_x", "scenarios"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"const": "affine"},
                        "m": {"type": "integer", "minimum": 1},
                        "n_p": {"type": "integer", "minimum": 1},
                        "n_x": {"type": "integer", "minimum": 1},
                        "scenarios": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "required": ["A", "B", "c"],
                                "additionalProperties": False,
                                "properties": {"A": _MATRIX, "B": _MATRIX, "c": _VEC},
                            },
                        },
                        "cone": {
                            "oneOf": [
                                {"const": "orthant"},
                                {
                                    "type": "object",
                                    "required": ["normals"],
                                    "additionalProperties": False,
                                    "properties": {"normals": _MATRIX},
                                },
                            ]
                        },
                        "recession": {"type": "boolean"},
                    },
                },
            ]
        },
        "base_point": {
            "type": "object",
            "required": ["p", "x"],
            "additionalProperties": False,
            "properties": {"p": _VEC, "x": _VEC},
        },
        "regions": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _POSNUM for k in DEFAULT_REGIONS},
        },
        "seed": {"type": "integer", "minimum": 0},
        "analyses": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {"name": {"enum": list(ANALYSIS_NAMES)}},
            },
        },
    },
}


class ConfigError(ValueError):
    """Invalid config file, schema violation, or unknown reference."""


def _shipped_config_dir() -> Path:
    return Path(__file__).parent / "configs"


def resolve_config_path(name: str) -> Path:
    """Take an on-disk path first, then fall back to the shipped configs."""
    path = Path(name)
    if path.exists():
        return path
    shipped = _shipped_config_dir() / name
    if shipped.exists():
        return shipped
    raise ConfigError(f"config file not found: {name!r} (also not a shipped config)")


def load_config(name: str) -> dict:
    path = resolve_config_path(name)
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation at {list(exc.absolute_path)}: "
                          f"{exc.message}") from exc
    return config


def _load_cone(spec, m: int) -> PolyhedralCone:
    if spec is None or spec == "orthant":
        return PolyhedralCone.orthant(m)
    return PolyhedralCone(m, np.asarray(spec["normals"], dtype=float))


def load_problem(spec: dict) -> SviProblem:
    """Instantiate a problem from its JSON description (builtin or affine)."""
    if spec["kind"] == "builtin":
        overrides = {k: spec[k] for k in ("m",) if k in spec}
        try:
            return make_builtin(spec["name"], **overrides)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"cannot build builtin problem {spec['name']!r}: {exc}") from exc
    m, n_p, n_x = spec["m"], spec["n_p"], spec["n_x"]
    try:
        scenarios = [AffineScenario(s["A"], s["B"], s["c"]) for s in spec["scenarios"]]
        umap = UncertainMap.affine(n_p, n_x, m, scenarios)
        cone = _load_cone(spec.get("cone"), m)
        return SviProblem(map=umap, cone=cone,
                          recession_flag=bool(spec.get("recession", False)),
                          name="affine")
    except ValueError as exc:
        raise ConfigError(f"invalid affine problem: {exc}") from exc


def load_generator_set(spec: dict, cone: PolyhedralCone) -> GeneratorSet:
    """Parse a set literal {"points": [[...], ...], "recession": "C"}.

    The only serializable recession cone is the problem cone itself, written
    as the string "C"."""
    if not isinstance(spec, dict) or "points" not in spec:
        raise ConfigError("set literal needs {\"points\": [[...], ...]}")
    recession = spec.get("recession")
    if recession not in (None, False, "C"):
        raise ConfigError("set literal recession must be absent or the string \"C\"")
    try:
        return GeneratorSet(np.asarray(spec["points"], dtype=float),
                            cone if recession == "C" else None)
    except ValueError as exc:
        raise ConfigError(f"invalid set literal: {exc}") from exc


def _load_fan(acfg: dict, what: str) -> FanPrederivative:
    fan = acfg.get("fan")
    if not isinstance(fan, dict) or "bundle" not in fan:
        raise ConfigError(f"analysis {what!r} needs a \"fan\": {{\"bundle\": [matrix, ...]}}")
    try:
        return FanPrederivative(fan["bundle"], fan.get("mode", "union"))
    except ValueError as exc:
        raise ConfigError(f"invalid fan for analysis {what!r}: {exc}") from exc


@dataclass
class AnalysisResult:
    index: int
    name: str
    summary: dict
    header: list
    rows: list
    violations: int


def _vec_list(v) -> list:
    return [float(t) for t in np.atleast_1d(v)]


def _run_slope(prob, config, acfg, seed, cache) -> AnalysisResult:
    base = config["base_point"]
    point = acfg.get("point", base)
    p = as_vector(point["p"], prob.map.n_p, "p")
    x = as_vector(point["x"], prob.map.n_x, "x")
    est = partial_strong_slope(prob, p, x, seed=seed)
    summary = {"value": est.value, "witness": {"p": _vec_list(p), "x": _vec_list(x)},
               "radii": list(est.radii), "K": len(est.sups), "seed": seed,
               "converged": est.converged}
    rows = [(r, s, seed) for r, s in zip(est.radii, est.sups)]
    return AnalysisResult(0, "slope", summary, ["radius", "sup", "seed"], rows, 0)


def _run_sigma_nabla(prob, config, acfg, seed, cache) -> AnalysisResult:
    base = config["base_point"]
    regions = {**DEFAULT_REGIONS, **config.get("regions", {})}
    delta2 = float(acfg.get("delta2", max(regions["delta"], regions["r"])))
    h = float(acfg.get("h", regions["h"]))
    est = sigma_nabla(prob, base["p"], base["x"], delta2, h=h, seed=seed)
    witness = None
    if est.witness_p is not None:
        witness = {"p": _vec_list(est.witness_p), "x": _vec_list(est.witness_x)}
    summary = {"value": est.value, "witness": witness,
               "radii": list(est.witness_slope.radii) if est.witness_slope else [],
               "K": est.n_grid, "seed": seed, "n_infeasible": est.n_infeasible,
               "h": est.h}
    rows = [(est.value, est.witness_p if est.witness_p is not None else "",
             est.witness_x if est.witness_x is not None else "",
             est.n_infeasible, est.n_grid, est.h, seed)]
    header = ["value", "witness_p", "witness_x", "n_infeasible", "n_grid", "h", "seed"]
    return AnalysisResult(0, "sigma-nabla", summary, header, rows, 0)


def _run_sigma_h(prob, config, acfg, seed, cache) -> AnalysisResult:
    fan = _load_fan(acfg, "sigma-h")
    samples = int(acfg.get("samples", 4096))
    est = sigma_H(fan, prob.cone, n_samples=samples, seed=seed)
    summary = {"value": est.value, "witness": _vec_list(est.direction),
               "radii": [], "K": est.n_samples, "seed": est.seed}
    rows = [(est.value, est.direction, est.n_samples, est.seed)]
    return AnalysisResult(0, "sigma-h", summary,
                          ["value", "direction", "samples", "seed"], rows, 0)


def _run_errorbound(prob, config, acfg, seed, cache) -> AnalysisResult:
    base = config["base_point"]
    regions = {**DEFAULT_REGIONS, **config.get("regions", {})}
    zeta = float(acfg.get("zeta", regions["zeta"]))
    eta = float(acfg.get("eta", regions["eta"]))
    h = float(acfg.get("h", regions["h"]))
    sigma = acfg.get("sigma")
    if sigma is None:
        sigma = sigma_nabla(prob, base["p"], base["x"], max(zeta, eta), h=h,
                            seed=seed).value
    report = eb.verify_error_bound(prob, base["p"], base["x"], float(sigma),
                                   zeta=zeta, eta=eta, h=h, cache=cache)
    summary = {"sigma": report.sigma, "worst_ratio": report.worst_ratio,
               "violations": len(report.violations), "n_points": report.n_points,
               "n_infeasible": report.n_infeasible, "h": report.h}
    rows = [r + (report.sigma, report.h) for r in report.rows]
    header = ["p", "x", "merit", "dist", "bound", "ratio", "verdict", "sigma", "h"]
    return AnalysisResult(0, "errorbound", summary, header, rows,
                          len(report.violations))


def _run_aubin(prob, config, acfg, seed, cache) -> AnalysisResult:
    base = config["base_point"]
    regions = {**DEFAULT_REGIONS, **config.get("regions", {})}
    delta0 = float(acfg.get("delta0", regions["delta"]))
    r = float(acfg.get("r", regions["r"]))
    steps = int(acfg.get("steps", 5))
    h0 = acfg.get("h0")
    div = eb.aubin_divergence(prob, base["p"], base["x"], delta0=delta0, r=r,
                              steps=steps, h0=None if h0 is None else float(h0),
                              cache=cache)
    summary = {"kappas": list(div.kappas), "deltas": list(div.deltas),
               "hs": list(div.hs), "growth": div.growth, "diverging": div.diverging}
    rows = [(d, h, k) for d, h, k in zip(div.deltas, div.hs, div.kappas)]
    return AnalysisResult(0, "aubin", summary, ["delta", "h", "kappa"], rows,
                          1 if div.diverging else 0)


def _run_lip_lsc(prob, config, acfg, seed, cache) -> AnalysisResult:
    if "ell" not in acfg:
        raise ConfigError("analysis 'lip-lsc' needs a numeric \"ell\"")
    base = config["base_point"]
    regions = {**DEFAULT_REGIONS, **config.get("regions", {})}
    delta = float(acfg.get("delta", regions["delta"]))
    h = float(acfg.get("h", regions["h"]))
    report = eb.check_lipschitz_lsc(prob, base["p"], base["x"], float(acfg["ell"]),
                                    delta=delta, h=h, cache=cache)
    summary = {"ell": report.ell, "passed": report.passed,
               "failures": len(report.failures), "n_checked": report.n_checked,
               "h": report.h}
    rows = [r + (report.ell, report.h) for r in report.rows]
    header = ["p", "dist", "allowed", "verdict", "ell", "h"]
    return AnalysisResult(0, "lip-lsc", summary, header, rows, len(report.failures))


def _run_gder(prob, config, acfg, seed, cache) -> AnalysisResult:
    fan = _load_fan(acfg, "gder")
    base = config["base_point"]
    count = int(acfg.get("directions", 72))
    opts = {}
    for key in ("threshold", "window", "h_factor"):
        if key in acfg:
            opts[key] = float(acfg[key])
    report = sandwich_check(prob, base["p"], base["x"], fan, count=count,
                            seed=seed, cache=cache, **opts)
    summary = {"directions": count, "agreement": report.agreement,
               "violations": len(report.violations),
               "threshold": opts.get("threshold", MEMBER_THRESHOLD),
               "window": opts.get("window", WINDOW_FACTOR)}
    rows = [(r.p_dir, r.v_dir, r.inner, r.sampled, r.outer, r.min_ratio)
            for r in report.rows]
    header = ["p_dir", "v_dir", "inner", "sampled", "outer", "min_ratio"]
    return AnalysisResult(0, "gder", summary, header, rows, len(report.violations))


def _run_concavity(prob, config, acfg, seed, cache) -> AnalysisResult:
    count = int(acfg.get("count", 200))
    tol = float(acfg.get("tol", 1e-9))
    triples = concavity_mod.sample_triples(
        prob, count, seed=seed,
        p_radius=float(acfg.get("p_radius", 1.0)),
        x_radius=float(acfg.get("x_radius", 2.0)))
    concave = concavity_mod.check_C_concavity(prob, triples, tol=tol)
    convex = concavity_mod.check_merit_convexity(prob, triples, tol=tol)
    summary = {
        "c_concave": {"passed": concave.passed, "violations": len(concave.violations),
                      "n_triples": concave.n_triples,
                      "raw_violations": concave.raw_violations},
        "merit_convex": {"passed": convex.passed,
                         "violations": len(convex.violations)},
        "tol": tol, "seed": seed,
    }
    rows = []
    for w in concave.violations:
        rows.append(("c-concavity", w.p1, w.x1, w.p2, w.x2, w.t,
                     w.scenario_index, w.margin, tol))
    for w in convex.violations:
        rows.append(("merit-convexity", w.p1, w.x1, w.p2, w.x2, w.t,
                     -1, w.lhs - w.rhs, tol))
    header = ["check", "p1", "x1", "p2", "x2", "t", "scenario", "margin", "tol"]
    n_viol = len(concave.violations) + len(convex.violations)
    return AnalysisResult(0, "concavity", summary, header, rows, n_viol)


_RUNNERS = {
    "slope": _run_slope,
    "sigma-nabla": _run_sigma_nabla,
    "sigma-h": _run_sigma_h,
    "errorbound": _run_errorbound,
    "aubin": _run_aubin,
    "lip-lsc": _run_lip_lsc,
    "gder": _run_gder,
    "concavity": _run_concavity,
}


def run_scenario(config_name: str, out_dir=None, seed: int | None = None,
                 threads: int = 1, only: str | None = None,
                 echo: bool = False) -> int:
    """Execute the analyses of a config and write report.json plus CSVs.

    Returns the process exit code (0 clean, 1 violations, 2 config error,
    3 numeric failure); config errors and numeric failures are printed to
    stderr before returning.
    """
    try:
        config = load_config(config_name)
        analyses = config["analyses"]
        if only is not None:
            analyses = [a for a in analyses if a["name"] == only]
            if not analyses:
                raise ConfigError(
                    f"config has no {only!r} analysis; add one to \"analyses\"")
        prob = load_problem(config["problem"])
        if "base_point" not in config:
            config = {**config, "base_point": {"p": [0.0] * prob.map.n_p,
                                               "x": [0.0] * prob.map.n_x}}
        effective_seed = int(config.get("seed", 0)) if seed is None else int(seed)
    except ConfigError as exc:
        print(f"svilab: config error: {exc}", file=sys.stderr)
        return 2

    cache = SolvCache()

    def execute(item) -> AnalysisResult:
        index, acfg = item
        result = _RUNNERS[acfg["name"]](prob, config, acfg, effective_seed, cache)
        result.index = index
        return result

    try:
        items = list(enumerate(analyses))
        if threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(execute, items))
        else:
            results = [execute(item) for item in items]
    except ConfigError as exc:
        print(f"svilab: config error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        print("svilab: numeric failure while running analyses", file=sys.stderr)
        traceback.print_exc()
        return 3

    results.sort(key=lambda r: (r.name, r.index))
    report_analyses = []
    total = 0
    csv_payload = []
    for r in results:
        csv_name = f"{r.index:02d}_{r.name}.csv"
        report_analyses.append({"name": r.name, "index": r.index,
                                "summary": r.summary, "violations": r.violations,
                                "csv": csv_name})
        csv_payload.append((csv_name, r.header, r.rows))
        total += r.violations
    report = {"schema": REPORT_SCHEMA, "seed": effective_seed, "config": config,
              "analyses": report_analyses, "violations_total": total}

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", report)
        for csv_name, header, rows in csv_payload:
            write_csv(out / csv_name, header, rows)
    if echo:
        for entry in report_analyses:
            sys.stdout.write(dumps_canonical(entry["summary"]))
    return 0 if total == 0 else 1


def _cmd_list() -> int:
    print("builtin problems:")
    for entry in list_builtins():
        forms = "yes" if entry["closed_forms"] else "no"
        print(f"  {entry['name']:<22} n_p={entry['n_p']} n_x={entry['n_x']} "
              f"m={entry['m']}  closed-forms={forms}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="svilab",
        description="Feasibility diagnostics for robust set-valued inclusions "
                    "F(p, x) within a cone.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every analysis of a config")
    run_p.add_argument("config", help="config path or shipped config name")
    run_p.add_argument("--out", default="svilab-out", help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--threads", type=int, default=1, help="analysis worker threads")

    sub.add_parser("list", help="list the builtin problem registry")

    for name in ANALYSIS_NAMES:
        ap = sub.add_parser(name, help=f"run only the {name!r} analyses of a config")
        ap.add_argument("config")
        ap.add_argument("--out", default=None, help="optional output directory")
        ap.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    if args.command == "list":
        return _cmd_list()
    if args.command == "run":
        return run_scenario(args.config, out_dir=args.out, seed=args.seed,
                            threads=max(1, args.threads))
    return run_scenario(args.config, out_dir=args.out, seed=args.seed,
                        only=args.command, echo=True)


if __name__ == "__main__":
    sys.exit(main())
