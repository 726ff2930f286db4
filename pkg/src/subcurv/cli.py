"""Command-line interface: ``subcurv <subcommand> ...``.

Exit codes: 0 success, 1 invalid input, 2 invariant violation found by a
verification pass.  Errors are also written to stderr as one JSON line.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources

import jsonschema

from . import harness
from . import objectives as obj
from .curvature import (
    cc_curvature_total,
    certificate_report,
    curvature_greedy,
    curvature_report,
    guarantee,
)
from .greedy import (
    OptResult,
    Trajectory,
    best_prefix_greedy,
    classic_greedy,
    distorted_greedy,
    exact_opt,
    greedy_prune,
    random_greedy,
    standard_greedy,
)
from .multilinear import ConstraintFamily, dmcgp, slope_invariant_ok, wdmcgp
from .oracle import DecomposableFunction, InvariantViolation, members

log = logging.getLogger("subcurv")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --------------------------------------------------------------------------
# io


def _schema(name: str) -> dict:
    return json.loads(resources.files("subcurv.schemas").joinpath(f"{name}.schema.json").read_text())


def _load(path: str, schema: str):
    with open(path) as fh:
        d = json.load(fh)
    jsonschema.validate(d, _schema(schema))
    return d


def _dump(d, path: str | None) -> None:
    text = json.dumps(d, indent=1, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _instance(path: str):
    inst = obj.instance_from_json(_load(path, "instance"))
    return inst, obj.build_oracle(inst)


def _alpha(inst, f) -> float:
    """alpha_g used by the certificates: max of the analytic and computed total curvature."""
    return max(obj.analytic_alpha(inst), cc_curvature_total(f.g, check=False, skip_null=True))


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(a) -> int:
    o = a.objective
    if o == "exp_design":
        _, inst = obj.gen_exp_design(a.seed, n=a.n, d=a.d, kappa=a.kappa, cost_scale=a.cost_scale)
    elif o == "coverage":
        _, inst = obj.gen_coverage(a.seed, n=a.n, m=a.m, p_edge=a.p, cost_scale=a.cost_scale)
    elif o == "feature_selection":
        _, inst = obj.gen_feature_selection(a.seed, p=a.n, groups=a.groups, rho_within=a.rho_within,
                                            cost_scale=a.cost_scale)
    elif o == "maxcut":
        if a.k is None:
            raise UsageError("maxcut generation needs --k (it enters the seed formula)")
        _, inst = obj.gen_maxcut(a.seed, a.n, a.k, a.graph)
    else:
        _, inst = obj.gen_gclin(a.seed, a.n, a.lam)
    _dump(obj.instance_to_json(inst), a.out)
    return 0


def _verify_run(f, traj: Trajectory, k: int) -> None:
    """Pruning invariant on every step; curvature guarantee against exact OPT when n <= 20."""
    for s in traj.steps:
        A = s.mask
        for e in s.active:
            if f.value(A) - f.value(A & ~(1 << e)) <= 0:
                raise InvariantViolation(f"step {s.i}: active element {e} has non-positive removal marginal")
    if f.n <= 20:
        opt = exact_opt(f, k)
        if opt.value > 0:
            c = curvature_greedy(f, traj, opt)
            if traj.final_value < guarantee(c) * opt.value - harness.TOL:
                raise InvariantViolation(
                    f"f(A_k)={traj.final_value:.6g} below guarantee {guarantee(c):.4f} x OPT {opt.value:.6g}")


def cmd_run(a) -> int:
    inst, f = _instance(a.instance)
    k = a.k
    if a.alg in ("gp", "greedy", "classic"):
        traj = {"gp": lambda: greedy_prune(f, k, a.tau_prune),
                "greedy": lambda: standard_greedy(f, k),
                "classic": lambda: classic_greedy(f, k)}[a.alg]()
        out = traj.to_json()
        out.update(algorithm=a.alg, final=members(traj.final), value=traj.final_value)
        if a.alg == "gp" and not a.no_verify:
            _verify_run(f, traj, k)
    else:
        if a.alg == "dg":
            if not isinstance(f, DecomposableFunction):
                raise UsageError("distorted greedy needs a decomposable instance")
            S = distorted_greedy(f, k)
        elif a.alg == "rg":
            S = random_greedy(f, k, a.seed)
        else:
            S = best_prefix_greedy(f, k)
        out = {"algorithm": a.alg, "k": k, "final": members(S), "value": f.value(S)}
    _dump(out, a.out)
    return 0


def cmd_opt(a) -> int:
    _, f = _instance(a.instance)
    fam = ConstraintFamily.from_json(_load(a.family, "family")) if a.family else None
    if fam is None and a.k is None:
        raise UsageError("opt needs --k or --family")
    _dump(exact_opt(f, a.k or 1, a.eps_opt, family=fam).to_json(), a.out)
    return 0


def _traj_opt(a):
    traj = Trajectory.from_json(_load(a.trajectory, "trajectory")) if a.trajectory else None
    opt = OptResult.from_json(_load(a.opt, "opt")) if a.opt else None
    return traj, opt


def cmd_curvature(a) -> int:
    _, f = _instance(a.instance)
    traj, opt = _traj_opt(a)
    if (traj is None) != (opt is None):
        raise UsageError("--trajectory and --opt go together")
    rep = curvature_report(f, traj, opt).to_json()
    _dump(rep, a.out)
    return 0


def cmd_certify(a) -> int:
    inst, f = _instance(a.instance)
    if not isinstance(f, DecomposableFunction):
        raise UsageError("certificates need a decomposable instance")
    traj, opt = _traj_opt(a)
    if traj is None:
        raise UsageError("certify needs --trajectory")
    alpha = a.alpha if a.alpha is not None else _alpha(inst, f)
    rep = certificate_report(f, traj, alpha, opt, best_known=traj.final if opt is None else None)
    out = rep.to_json()
    if opt is not None:
        c_g = curvature_greedy(f, traj, opt)
        out["c_g"] = c_g
        if not a.no_verify:
            for name, r in (("r_hat", rep.r_hat), ("r_opt_aware", rep.r_opt_aware)):
                if c_g > alpha / (1 - r) + harness.TOL:
                    raise InvariantViolation(f"c_g={c_g:.6g} exceeds certificate from {name}")
    _dump(out, a.out)
    return 0


def cmd_mlx(a) -> int:
    _, f = _instance(a.instance)
    if a.family:
        fam = ConstraintFamily.from_json(_load(a.family, "family"))
    elif a.k is not None:
        fam = ConstraintFamily.cardinality(a.k)
    else:
        raise UsageError("mlx needs --k or --family")
    samples = a.samples
    if samples is None and not a.exact and f.n > 20:
        samples = 2000
    if a.algo == "dmcgp":
        tr = dmcgp(f, fam, a.T, samples=samples, seed=a.seed)
    else:
        tr = wdmcgp(f, fam, a.T, samples=samples, seed=a.seed)
    if not a.no_verify and samples is None:
        for x in tr.iterates:
            if not fam.in_hull(x):
                raise InvariantViolation("iterate left the family hull")
        if a.algo == "dmcgp" and not slope_invariant_ok(f, tr):
            raise InvariantViolation("post-prune slope invariant failed")
    _dump(tr.to_json(), a.out)
    return 0


def _write_suite(records, a) -> int:
    os.makedirs(a.out_dir, exist_ok=True)
    harness.emit_report(records, "json", os.path.join(a.out_dir, "records.json"))
    harness.emit_report(records, "csv", os.path.join(a.out_dir, "records.csv"))
    harness.emit_report(records, "markdown", os.path.join(a.out_dir, "report.md"))
    print(json.dumps({"records": len(records), "digest": harness.records_digest(records),
                      "out_dir": a.out_dir}))
    if not a.no_verify:
        harness.verify_records(records)
    return 0


def _configs(path: str) -> list[harness.SweepConfig]:
    d = _load(path, "sweep_config")
    return [harness.SweepConfig.from_json(c) for c in (d if isinstance(d, list) else [d])]


def _run_guarded(fn, a):
    try:
        return fn()
    except harness.BudgetExceeded as e:
        os.makedirs(a.out_dir, exist_ok=True)
        harness.emit_report(e.records, "json", os.path.join(a.out_dir, "records.partial.json"))
        raise


def cmd_sweep(a) -> int:
    if a.config:
        cfgs = _configs(a.config)
        fn = lambda: [r for c in cfgs for r in harness.run_config(c)]  # noqa: E731
    else:
        seeds = range(a.seeds) if a.seeds else None
        runner = harness.SUITES[a.suite]
        if seeds is None:
            fn = runner
        else:
            make = {"tier1": harness.tier1_configs, "moderate": harness.moderate_configs,
                    "maxcut": harness.maxcut_configs, "lambda": harness.lambda_configs}[a.suite]
            fn = lambda: runner(make(seeds=seeds))  # noqa: E731
    return _write_suite(_run_guarded(fn, a), a)


def cmd_maxcut(a) -> int:
    if a.config:
        cfgs = _configs(a.config)
    else:
        cfgs = harness.maxcut_configs(seeds=range(a.seeds))
    return _write_suite(_run_guarded(lambda: harness.run_maxcut_suite(cfgs), a), a)


def cmd_report(a) -> int:
    _load(a.records, "records")
    recs = harness.load_records(a.records)
    text = harness.emit_report(recs, a.format, None if a.out in (None, "-") else a.out)
    if a.out in (None, "-"):
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subcurv", description="Curvature-parameterized submodular maximization toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a seeded instance JSON")
    g.add_argument("--objective", required=True, choices=obj.FAMILIES, help="objective family")
    g.add_argument("--n", type=int, default=20, help="ground-set size (features for feature_selection)")
    g.add_argument("--k", type=int, help="budget; required for maxcut, where it enters the seed formula")
    g.add_argument("--seed", type=int, default=0, help="generator seed")
    g.add_argument("--cost-scale", type=float, default=0.0, help="multiplier on the unit cost vector")
    g.add_argument("--d", type=int, default=5, help="exp_design: parameter dimension")
    g.add_argument("--kappa", type=float, default=5.0, help="exp_design: target condition number")
    g.add_argument("--m", type=int, default=40, help="coverage: number of items")
    g.add_argument("--p", type=float, default=0.2, help="coverage: vertex-item edge probability")
    g.add_argument("--groups", type=int, default=4, help="feature_selection: correlated groups")
    g.add_argument("--rho-within", type=float, default=0.7, help="feature_selection: within-group correlation")
    g.add_argument("--graph", choices=["planted", "erdos_renyi"], default="planted", help="maxcut: graph family")
    g.add_argument("--lam", type=float, default=0.5, help="gclin: redundancy weight lambda")
    g.add_argument("--out", help="output path (default stdout)")
    g.set_defaults(fn=cmd_gen)

    r = sub.add_parser("run", help="run one discrete algorithm on an instance")
    r.add_argument("--instance", required=True, help="instance JSON path")
    r.add_argument("--alg", required=True, choices=["gp", "greedy", "classic", "dg", "rg", "best_prefix"],
                   help="gp = greedy with pruning; greedy = same stop rule, no pruning; classic = k steps always")
    r.add_argument("--k", type=int, required=True, help="cardinality budget")
    r.add_argument("--seed", type=int, default=0, help="seed for random greedy")
    r.add_argument("--tau-prune", type=float, default=0.0, help="prune when the removal marginal is <= this")
    r.add_argument("--no-verify", action="store_true", help="skip the pruning-invariant and guarantee checks")
    r.add_argument("--out", help="output path (default stdout)")
    r.set_defaults(fn=cmd_run)

    o = sub.add_parser("opt", help="exact OPT by enumeration (n <= 24)")
    o.add_argument("--instance", required=True, help="instance JSON path")
    o.add_argument("--k", type=int, help="cardinality budget")
    o.add_argument("--family", help="constraint family JSON (overrides --k)")
    o.add_argument("--eps-opt", type=float, default=1e-9, help="tolerance for listing tied optima")
    o.add_argument("--out", help="output path (default stdout)")
    o.set_defaults(fn=cmd_opt)

    c = sub.add_parser("curvature", help="c_f, c_g and total curvature report")
    c.add_argument("--instance", required=True, help="instance JSON path")
    c.add_argument("--trajectory", help="trajectory JSON from `run` (enables c_g)")
    c.add_argument("--opt", help="OptResult JSON from `opt` (enables c_g)")
    c.add_argument("--out", help="output path (default stdout)")
    c.set_defaults(fn=cmd_curvature)

    ce = sub.add_parser("certify", help="removal-marginal, OPT-aware and singleton certificates")
    ce.add_argument("--instance", required=True, help="decomposable instance JSON path")
    ce.add_argument("--trajectory", required=True, help="greedy-with-pruning trajectory JSON")
    ce.add_argument("--opt", help="OptResult JSON; adds the OPT-aware ratio and exact rho")
    ce.add_argument("--alpha", type=float, help="override alpha_g (default: max of analytic and computed total)")
    ce.add_argument("--no-verify", action="store_true", help="skip the c_g <= certificate check")
    ce.add_argument("--out", help="output path (default stdout)")
    ce.set_defaults(fn=cmd_certify)

    m = sub.add_parser("mlx", help="DMCG-P / wDMCG-P on the multilinear extension")
    m.add_argument("--instance", required=True, help="instance JSON path")
    m.add_argument("--algo", choices=["dmcgp", "wdmcgp"], default="dmcgp", help="continuous algorithm")
    m.add_argument("--k", type=int, help="cardinality budget (cardinality family)")
    m.add_argument("--family", help="constraint family JSON (overrides --k)")
    m.add_argument("--T", type=int, default=100, help="step count (wdmcgp: number of damped steps)")
    grp = m.add_mutually_exclusive_group()
    grp.add_argument("--exact", action="store_true", help="force the exact 2^n path (n <= 20)")
    grp.add_argument("--samples", type=int, help="Monte-Carlo samples per F / gradient evaluation")
    m.add_argument("--seed", type=int, default=0, help="sampling seed")
    m.add_argument("--no-verify", action="store_true", help="skip hull and slope-invariant checks")
    m.add_argument("--out", help="output path (default stdout)")
    m.set_defaults(fn=cmd_mlx)

    s = sub.add_parser("sweep", help="run an experiment suite or a sweep config")
    s.add_argument("--suite", choices=sorted(harness.SUITES), default="tier1", help="built-in suite")
    s.add_argument("--config", help="SweepConfig JSON (object or list); overrides --suite")
    s.add_argument("--seeds", type=int, help="use seeds 0..N-1 instead of the suite default")
    s.add_argument("--out-dir", default="results", help="directory for records.json/csv and report.md")
    s.add_argument("--no-verify", action="store_true", help="skip the invariant re-check")
    s.set_defaults(fn=cmd_sweep)

    mc = sub.add_parser("maxcut", help="MaxCut suite (12 configurations x 20 seeds)")
    mc.add_argument("--suite", choices=["standard", "paper"], default="standard", help="built-in configuration set")
    mc.add_argument("--config", help="SweepConfig JSON instead of the built-in set")
    mc.add_argument("--seeds", type=int, default=20, help="seeds per configuration")
    mc.add_argument("--out-dir", default="results/maxcut", help="output directory")
    mc.add_argument("--no-verify", action="store_true", help="skip the invariant re-check")
    mc.set_defaults(fn=cmd_maxcut)

    rp = sub.add_parser("report", help="render records.json as csv, markdown or json")
    rp.add_argument("--records", required=True, help="records JSON written by sweep/maxcut")
    rp.add_argument("--format", choices=["csv", "markdown", "json"], default="markdown", help="output format")
    rp.add_argument("--out", help="output path (default stdout)")
    rp.set_defaults(fn=cmd_report)
    return p


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc).splitlines()[0] if str(exc) else "",
                                 "exit_code": code}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except UsageError as e:
        return _fail(1, e)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.fn(a)
    except InvariantViolation as e:
        return _fail(2, e)
    except harness.BudgetExceeded as e:
        return _fail(1, e)
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError,
            jsonschema.ValidationError) as e:
        return _fail(1, e)


if __name__ == "__main__":
    sys.exit(main())
