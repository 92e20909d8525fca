"""Batch front-end: TOML experiment configs, hypothesis preflight, execution.

Verbs:
    check   parse the config and run every hypothesis check for its kind
    run     preflight, execute, and write CSV/JSON reports plus a manifest
    report  re-render an existing JSON report as CSV

Exit codes: 0 ok, 2 config error, 3 hypothesis preflight refusal,
4 experiment assertion failure, 5 I/O failure.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python 3.10
    import tomli as tomllib

from . import __version__
from . import envelope as envmod
from . import norms
from . import phi as phimod
from . import supremal
from .domain import Grid
from .errors import ConfigError, HypothesisError
from .reports import Assertion, ConvergenceReport

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PREFLIGHT = 3
EXIT_ASSERTION = 4
EXIT_IO = 5

OUTPUT_DIR_ENV = "ORLICZSUP_OUT"

KINDS = ("norm-convergence", "gamma-norm", "gamma-modular", "envelope",
         "inequality-suite")

# allowed keys per table; unknown keys are hard errors so config typos
# cannot silently disable a hypothesis
_SCHEMA = {
    "experiment": {"kind", "seed", "report_only"},
    "grid": {"extent", "cells"},
    "phi": {"ladder", "start", "factor", "count", "weight_inverse_p", "base",
            "scale_start", "scale_factor", "low_ratio"},
    "integrand": {"preset", "w", "b", "alpha", "gamma", "kappa", "upper_C"},
    "boundary": {"preset", "c", "c0", "c1", "c2"},
    "hypotheses": {"L", "c", "beta", "h5_tail_tol"},
    "tolerances": {"norm_tol", "final_gap", "value_gap", "recovery_gap",
                   "l1_gap", "delta", "gtol", "maxiter", "restarts"},
    "field": {"preset", "value", "count"},
    "envelope": {"radius", "points", "n_max_exponent"},
    "output": {"dir"},
}

_COEFF_KEYS = {"preset", "a", "b"}


def load_config(path):
    """Parse and validate a TOML experiment config."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    _validate(doc)
    if "experiment" not in doc or "kind" not in doc["experiment"]:
        raise ConfigError("missing required key experiment.kind")
    kind = doc["experiment"]["kind"]
    if kind not in KINDS:
        raise ConfigError(f"experiment.kind must be one of {KINDS}, "
                          f"got {kind!r}")
    if "seed" not in doc["experiment"]:
        raise ConfigError("experiment.seed is mandatory (reproducibility)")
    return doc


def _validate(doc):
    for table, body in doc.items():
        if table not in _SCHEMA:
            raise ConfigError(f"unknown table [{table}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{table}] must be a table")
        for key, value in body.items():
            if key not in _SCHEMA[table]:
                raise ConfigError(f"unknown key {table}.{key}")
            if isinstance(value, dict):
                extra = set(value) - _COEFF_KEYS
                if extra:
                    raise ConfigError(
                        f"unknown coefficient keys in {table}.{key}: "
                        f"{sorted(extra)}")


def _build_grid(cfg):
    g = cfg.get("grid", {})
    extent = g.get("extent", [[0.0, 1.0]])
    cells = g.get("cells", [100])
    return Grid(extent, cells)


def _build_coeff(spec, default=None):
    if spec is None:
        return default
    if isinstance(spec, (int, float)):
        return phimod.Coefficient("constant", float(spec))
    return phimod.Coefficient(spec["preset"], float(spec.get("a", 0.0)),
                              float(spec.get("b", 0.0)))


def _build_ladder(cfg, grid):
    p = cfg.get("phi", {})
    ladder = p.get("ladder", "constant_power")
    start = float(p.get("start", 2.0))
    factor = float(p.get("factor", 2.0))
    count = int(p.get("count", 8))
    if count < 3:
        raise ConfigError("phi.count must be at least 3")
    centers = grid.cell_centers()
    weight = bool(p.get("weight_inverse_p", False))
    beta = cfg.get("hypotheses", {}).get("beta")
    if ladder == "constant_power":
        if "scale_start" in p or "scale_factor" in p:
            s = float(p.get("scale_start", 1.0))
            sf = float(p.get("scale_factor", 1.0))
            entries = []
            pn = start
            for _ in range(count):
                entries.append(phimod.ConstantPower(pn, scale=s))
                pn *= factor
                s *= sf
            return phimod.ExponentSequence(entries, centers, ratio_bound=beta)
        return phimod.constant_power_ladder(start, factor, count, centers,
                                            scale_inverse_p=weight)
    if ladder == "variable_exponent":
        base = _build_coeff(p.get("base"),
                            phimod.Coefficient("constant", 1.0))
        return phimod.variable_exponent_ladder(
            base, start, factor, count, centers, ratio_bound=beta,
            scale_inverse_p=weight)
    if ladder == "two_power_max":
        low_ratio = float(p.get("low_ratio", 0.5))
        entries = []
        pn = start
        for _ in range(count):
            entries.append(phimod.orlicz_preset(
                "two_power_max", p_low=low_ratio * pn, p_high=pn))
            pn *= factor
        return phimod.ExponentSequence(entries, centers, ratio_bound=beta)
    raise ConfigError(f"unknown phi.ladder {ladder!r}")


def _build_integrand(cfg):
    spec = dict(cfg.get("integrand", {"preset": "abs"}))
    preset = spec.pop("preset", "abs")
    try:
        return supremal.make_integrand(preset, **spec)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad integrand: {exc}") from exc


def _build_boundary(cfg):
    spec = dict(cfg.get("boundary", {"preset": "zero"}))
    preset = spec.pop("preset", "zero")
    try:
        return supremal.make_boundary(preset, **spec)
    except ValueError as exc:
        raise ConfigError(f"bad boundary: {exc}") from exc


def _build_field(cfg, grid, rng):
    spec = cfg.get("field", {"preset": "coordinate"})
    preset = spec.get("preset", "coordinate")
    centers = grid.cell_centers()
    if preset == "coordinate":
        return centers[:, 0] - float(grid.lo[0])
    if preset == "constant":
        return np.full(grid.n_cells, float(spec.get("value", 1.0)))
    if preset == "random":
        return rng.uniform(0.0, float(spec.get("value", 1.0)), grid.n_cells)
    raise ConfigError(f"unknown field preset {preset!r}")


def _problem(cfg, grid):
    return supremal.DirichletProblem(grid, _build_integrand(cfg),
                                     _build_boundary(cfg), _build_ladder(cfg, grid))


# -- preflight -----------------------------------------------------------------

def preflight(cfg):
    """Run every hypothesis check relevant to the configured experiment.

    Returns a ConvergenceReport whose assertions are the hypothesis
    verdicts; an all-pass report clears the run for assertion mode.
    """
    kind = cfg["experiment"]["kind"]
    hyp = cfg.get("hypotheses", {})
    L = float(hyp.get("L", 1.0))
    c = float(hyp.get("c", 1.0))
    grid = _build_grid(cfg)
    centers = grid.cell_centers()
    report = ConvergenceReport("preflight", ["hypothesis", "passed", "detail"])

    def record(name, passed, detail=""):
        report.add_assertion(name, passed, detail)
        report.add_row(name, bool(passed), detail)

    if kind == "inequality-suite":
        record("config", True, "no structural hypotheses for this suite")
        return report

    if kind == "envelope":
        integrand = _build_integrand(cfg)
        gr = supremal.growth_check(integrand, grid, rng=0)
        record("(H2) growth certificate", gr.passed,
               f"worst lower violation {gr.lower_worst:.3g}")
        return report

    seq = _build_ladder(cfg, grid)
    plan = phimod.SamplePlan(centers)

    try:
        seq.validate_for_limit()
        record("(5.3) diverging lower exponents", True,
               f"p_n^- = {seq.p_minus.tolist()}")
        if seq.ratio_bound is not None:
            record("(5.4) exponent ratio bound", True,
                   f"max ratio {float(np.max(seq.ratios())):.4g} <= "
                   f"{seq.ratio_bound}")
    except HypothesisError as exc:
        record(exc.hypothesis, False, str(exc))

    h3_ok = True
    for i, entry in enumerate(seq):
        rep = phimod.check_aInc(entry, seq.p_minus[i], L, plan)
        if not rep.passed:
            h3_ok = False
            record("(H3) uniform (aInc) constant", False,
                   f"entry {i} fails at rate {seq.p_minus[i]:g} with shared "
                   f"L={L:g} (worst violation {rep.worst_violation:.3g})")
            break
    if h3_ok:
        record("(H3) uniform (aInc) constant", True, f"shared L={L:g}")

    if kind in ("norm-convergence", "gamma-norm"):
        h4_ok, h4_detail = True, f"1/c <= phi_n(x,1) <= c with c={c:g}"
        a0_ok = True
        for i, entry in enumerate(seq):
            rep = phimod.check_anchor(entry, c, centers)
            if not rep.passed:
                h4_ok = False
                h4_detail = (f"entry {i}: phi(x,1) in [{rep.phi_minus_1:.3g}, "
                             f"{rep.phi_plus_1:.3g}] outside [1/{c:g}, {c:g}]")
                break
        for i, entry in enumerate(seq):
            if not phimod.check_a0(entry, centers).passed:
                a0_ok = False
                break
        record("(H4) two-sided anchor", h4_ok, h4_detail)
        record("(A0) one-sided anchoring", a0_ok,
               "weaker condition, informational")

    if kind == "gamma-modular":
        try:
            supremal._h5_check(seq, grid,
                               float(hyp.get("h5_tail_tol", 0.05)))
            record("(H5) anchor decay", True, "phi_n^+(1) -> 0 and "
                   "phi_n^-(1)^(1/p_n) -> 1 on the prefix")
        except HypothesisError as exc:
            record(exc.hypothesis, False, str(exc))

    if kind in ("gamma-norm", "gamma-modular"):
        integrand = _build_integrand(cfg)
        gr = supremal.growth_check(integrand, grid, rng=0)
        record("(H2) growth certificate", gr.passed,
               f"worst lower violation {gr.lower_worst:.3g}")
        if integrand.upper_C is not None:
            record("(5.1) upper growth bound", gr.upper_worst <= 1e-9,
                   f"worst upper violation {gr.upper_worst:.3g}")
    return report


# -- execution ------------------------------------------------------------------

def _run_inequality_suite(cfg, grid, rng, threads):
    """Seeded (phi, field) corpus through the unit-ball, Hoelder and
    sandwich checkers; any violation fails the suite."""
    tol = float(cfg.get("tolerances", {}).get("norm_tol", 1e-9))
    count = int(cfg.get("field", {}).get("count", 100))
    centers = grid.cell_centers()
    x1 = centers[:, 0]
    span = float(grid.hi[0] - grid.lo[0])

    report = ConvergenceReport(
        "inequality-suite",
        ["case", "phi", "unit_ball", "holder", "sandwich"],
        meta={"count": count, "tol": tol},
    )
    catalog = [
        ("constant_power", lambda r: phimod.ConstantPower(2.0 + 6.0 * r.random())),
        ("variable_exponent", lambda r: phimod.VariableExponent(
            phimod.Coefficient("affine", 2.0 + 2.0 * r.random(),
                               (1.0 + r.random()) / span))),
        ("double_phase", lambda r: phimod.DoublePhase(
            2.0 + 2.0 * r.random(), 5.0 + 2.0 * r.random(),
            phimod.Coefficient("sinusoidal", 1.5, 0.5))),
    ]
    failures = 0
    for case in range(count):
        name, builder = catalog[case % len(catalog)]
        varphi = builder(rng)
        g = rng.uniform(0.0, 2.0, grid.n_cells)
        ub = norms.unit_ball_check(varphi, grid, g, tol=tol)
        p_h = phimod.Coefficient("affine", 2.0 + rng.random(), 0.5 / span)
        f2 = rng.uniform(-1.0, 1.0, grid.n_cells)
        g2 = rng.uniform(-1.0, 1.0, grid.n_cells)
        hold = norms.holder_check(grid, f2, g2, p_h, tol=tol)
        sand = norms.sandwich_check(grid, g, p_h, tol=tol)
        ok = ub.passed and hold.passed and sand.passed
        failures += 0 if ok else 1
        report.add_row(case, name, ub.passed, hold.passed, sand.passed)
    report.add_assertion("zero violations across the seeded corpus",
                         failures == 0, f"{failures} failing cases of {count}")
    return report


def _run_envelope(cfg, grid, rng):
    integrand = _build_integrand(cfg)
    env_cfg = cfg.get("envelope", {})
    radius = float(env_cfg.get("radius", 2.0))
    points = int(env_cfg.get("points", 1001))
    ladder = envmod.default_n_ladder(int(env_cfg.get("n_max_exponent", 10)))
    dens = envmod.SampledDensity.from_callable(
        lambda s: integrand.scalar_slice(s), radius, points)
    qinf = envmod.q_infinity(dens, ladder)
    lc = envmod.level_convexity_check(
        envmod.SampledDensity(dens.xi, qinf.values))
    mono = envmod.monotone_ladder_check(dens, ladder)
    report = ConvergenceReport(
        "envelope", ["xi", "f", "q_inf_f", "reached_n"],
        meta={"radius": radius, "points": points,
              "last_increment": qinf.last_increment})
    for xi, f_v, q_v in zip(dens.xi, dens.values, qinf.values):
        report.add_row(float(xi), float(f_v), float(q_v), qinf.reached_n)
    report.add_assertion("limit density below the input",
                         bool(np.all(qinf.values <= dens.values + 1e-12)))
    report.add_assertion("limit density is level convex", lc.passed,
                         f"worst excess {lc.worst_excess:.3g}")
    report.add_assertion("rooted envelopes nondecreasing in the exponent",
                         mono.passed, f"worst violation {mono.worst_violation:.3g}")
    return report


def execute(cfg, threads=None):
    """Run the configured experiment and return its report."""
    kind = cfg["experiment"]["kind"]
    seed = int(cfg["experiment"]["seed"])
    rng = np.random.default_rng(seed)
    grid = _build_grid(cfg)
    tols = cfg.get("tolerances", {})
    hyp = cfg.get("hypotheses", {})
    L = float(hyp.get("L", 1.0))
    c = float(hyp.get("c", 1.0))
    norm_tol = float(tols.get("norm_tol", 1e-9))

    if kind == "norm-convergence":
        seq = _build_ladder(cfg, grid)
        g = _build_field(cfg, grid, rng)
        return norms.norm_convergence_experiment(
            grid, g, seq, L, c, tol=norm_tol,
            final_gap_threshold=float(tols.get("final_gap", 1e-2)),
            threads=threads)
    if kind == "gamma-norm":
        problem = _problem(cfg, grid)
        opts = supremal.MinimizeOptions(
            gtol=float(tols.get("gtol", 1e-7)),
            maxiter=int(tols.get("maxiter", 5000)),
            norm_tol=norm_tol, seed=seed)
        thresholds = supremal.GammaThresholds(
            value_gap=float(tols.get("value_gap", 5e-3)),
            recovery_gap=float(tols.get("recovery_gap", 5e-3)),
            l1_gap=float(tols.get("l1_gap", 5e-3)))
        return supremal.gamma_experiment_norm(
            problem, L, c, opts, thresholds, threads=threads,
            restarts=int(tols.get("restarts", 3)))
    if kind == "gamma-modular":
        problem = _problem(cfg, grid)
        return supremal.gamma_experiment_modular(
            problem, L, delta=float(tols.get("delta", 0.5)),
            h5_tail_tol=float(hyp.get("h5_tail_tol", 0.05)),
            threads=threads)
    if kind == "envelope":
        return _run_envelope(cfg, grid, rng)
    if kind == "inequality-suite":
        return _run_inequality_suite(cfg, grid, rng, threads)
    raise ConfigError(f"unknown experiment kind {kind!r}")


def _resolve_out_dir(cfg, cli_out):
    env = os.environ.get(OUTPUT_DIR_ENV)
    return cli_out or env or cfg.get("output", {}).get("dir", "out")


def _write_artifacts(cfg, report, out_dir, wall_time):
    os.makedirs(out_dir, exist_ok=True)
    report.to_csv(os.path.join(out_dir, "report.csv"))
    report.to_json(os.path.join(out_dir, "report.json"))
    manifest = {
        "config": cfg,
        "version": __version__,
        "seed": cfg["experiment"]["seed"],
        "wall_time_s": wall_time,
    }
    with open(os.path.join(out_dir, "run_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        for line in report.summary_lines():
            fh.write(line + "\n")


# -- verbs ----------------------------------------------------------------------

def cmd_check(args):
    cfg = load_config(args.config)
    report = preflight(cfg)
    for line in report.summary_lines():
        print(line)
    if report.all_passed:
        return EXIT_OK
    return EXIT_OK if args.report_only else EXIT_PREFLIGHT


def cmd_run(args):
    cfg = load_config(args.config)
    report_only = bool(args.report_only
                       or cfg["experiment"].get("report_only", False))
    pre = preflight(cfg)
    for line in pre.summary_lines():
        print("preflight:", line)
    if not pre.all_passed and not report_only:
        print("refusing assertion-mode run: hypothesis preflight failed")
        return EXIT_PREFLIGHT

    t0 = time.perf_counter()
    try:
        report = execute(cfg, threads=args.threads)
    except HypothesisError as exc:
        print(f"hypothesis failure during execution: {exc}")
        return EXIT_PREFLIGHT
    wall = time.perf_counter() - t0

    if report_only and not pre.all_passed:
        report.meta["warning"] = ("REPORT-ONLY RUN: hypothesis preflight "
                                  "failed; values are informational")
        report.assertions = [Assertion("report-only mode", True,
                                       "assertions skipped")]
    out_dir = _resolve_out_dir(cfg, args.out)
    try:
        _write_artifacts(cfg, report, out_dir, wall)
    except OSError as exc:
        print(f"cannot write artifacts: {exc}")
        return EXIT_IO
    for line in report.summary_lines():
        print(line)
    print(f"artifacts written to {out_dir} ({wall:.2f} s)")
    return EXIT_OK if report.all_passed else EXIT_ASSERTION


def cmd_report(args):
    try:
        report = ConvergenceReport.from_json(args.json)
    except OSError as exc:
        print(f"cannot read report: {exc}")
        return EXIT_IO
    except (KeyError, ValueError) as exc:
        print(f"malformed report JSON: {exc}")
        return EXIT_CONFIG
    out_dir = args.out or os.path.dirname(os.path.abspath(args.json))
    try:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "report.csv")
        report.to_csv(path)
    except OSError as exc:
        print(f"cannot write CSV: {exc}")
        return EXIT_IO
    print(f"re-rendered {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orliczsup",
        description="Generalized Orlicz norm machinery and large-exponent "
                    "limit experiments")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_check = sub.add_parser("check", help="hypothesis preflight only")
    p_check.add_argument("--config", required=True)
    p_check.add_argument("--report-only", action="store_true")
    p_check.set_defaults(fn=cmd_check)

    p_run = sub.add_parser("run", help="preflight + execute + write reports")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--report-only", action="store_true")
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(fn=cmd_run)

    p_rep = sub.add_parser("report", help="re-render a JSON report as CSV")
    p_rep.add_argument("--json", required=True)
    p_rep.add_argument("--out", default=None)
    p_rep.set_defaults(fn=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code = args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}")
        code = EXIT_CONFIG
    except HypothesisError as exc:
        print(f"hypothesis refusal: {exc}")
        code = EXIT_PREFLIGHT
    except OSError as exc:
        print(f"I/O error: {exc}")
        code = EXIT_IO
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
