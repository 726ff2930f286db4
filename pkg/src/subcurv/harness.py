"""Experiment suites: Tier-1 cost sweeps, MaxCut, moderate scale, GCLin lambda sweep."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable

import numpy as np

from . import objectives as obj
from .curvature import (
    cc_curvature_total,
    certificate_opt_aware,
    certificate_removal,
    cost_ratio,
    curvature_global,
    curvature_greedy,
    guarantee,
    guarantee_unclipped,
    hfwk_bound,
    singleton_diagnostic,
    singleton_is_formal,
)
from .greedy import (
    Step,
    Trajectory,
    best_prefix_greedy,
    classic_greedy,
    distorted_greedy,
    exact_opt,
    greedy_prefixes,
    greedy_prune,
    random_greedy,
    standard_greedy,
)
from .oracle import MAX_EXACT_N, InvariantViolation, check_monotone, members

log = logging.getLogger(__name__)

TOL = 1e-9
CELL_BUDGET_S = 600.0
MAXCUT_BOUND = guarantee(2.0)

TIER1_SCALES = {
    "exp_design": [0.0, 0.03, 0.06, 0.10, 0.15, 0.20, 0.28],
    "coverage": [0.0, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0],
    "feature_selection": [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8],
}
MODERATE_SCALES = {
    "exp_design": [0.0, 0.02, 0.05, 0.10, 0.15, 0.22, 0.30],
    "coverage": [0.0, 0.5, 1.5, 3.0, 5.0, 8.0, 12.0],
    "feature_selection": [0.0, 0.03, 0.08, 0.15, 0.25, 0.4, 0.6],
}
MODERATE_SHAPE = {
    "exp_design": {"n": 200, "k": 20, "params": {"d": 10, "kappa": 5.0}},
    "coverage": {"n": 300, "k": 30, "params": {"m": 600, "p_edge": 0.05}},
    "feature_selection": {"n": 100, "k": 15, "params": {"groups": 10}},
}
# cost levels shown in the summary tables (the rest stay in the per-seed rows)
TIER1_REPORTED = {
    "exp_design": [0.03, 0.10, 0.20, 0.28],
    "coverage": [0.5, 2.0, 3.5, 5.0],
    "feature_selection": [0.05, 0.2, 0.3, 0.5],
}
MODERATE_REPORTED = {
    "exp_design": [0.02, 0.05, 0.10, 0.15],
    "coverage": [1.5, 5.0, 8.0, 12.0],
    "feature_selection": [0.08, 0.25, 0.4, 0.6],
}
LAMBDAS = [0.1, 0.25, 0.5, 0.75, 1.0, 1.5]
ALGORITHMS = ("gp", "greedy", "dg", "rg", "best_prefix", "classic")


class BudgetExceeded(RuntimeError):
    """A single cell ran past the wall-clock budget; ``records`` holds what finished."""

    def __init__(self, msg: str, records: list):
        super().__init__(msg)
        self.records = records


@dataclass
class SweepConfig:
    family: str
    n: int = 20
    k: int = 5
    cost_scales: list[float] = field(default_factory=lambda: [0.0])
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    algorithms: list[str] = field(default_factory=lambda: ["gp", "greedy", "dg", "rg", "best_prefix"])
    compute_opt: bool = True
    compute_curvature: bool = True
    params: dict[str, Any] = field(default_factory=dict)
    suite: str = "tier1"
    cell_budget_s: float = CELL_BUDGET_S

    def __post_init__(self):
        if self.family not in obj.FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.compute_opt and self.n > MAX_EXACT_N:
            raise ValueError(f"compute_opt needs n <= {MAX_EXACT_N}")
        if not 1 <= self.k <= self.n:
            raise ValueError("need 1 <= k <= n")
        bad = set(self.algorithms) - set(ALGORITHMS) - {"dmcgp", "wdmcgp"}
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "SweepConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class ExperimentRecord:
    suite: str
    family: str
    n: int
    k: int
    seed: int
    cost_scale: float = 0.0
    lam: float | None = None
    instance: str = ""
    values: dict[str, float] = field(default_factory=dict)
    ratios: dict[str, float] | None = None
    opt_value: float | None = None
    rho: float | None = None
    rho_heuristic: bool = False
    c_g: float | None = None
    c_g_proxy: bool = False
    c_f: float | None = None
    monotone: bool | None = None
    alpha_g: float | None = None
    alpha_analytic: float | None = None
    alpha_total: float | None = None
    r_hat: float | None = None
    r_opt: float | None = None
    s_hat: float | None = None
    s_formal: bool | None = None
    c_hat: float | None = None
    c_diag: float | None = None
    guarantee_curv: float | None = None
    guarantee_curv_unclipped: float | None = None
    guarantee_cert: float | None = None
    diag: float | None = None
    diag_unclipped: float | None = None
    hfwk: float | None = None
    prune_events: int = 0
    stopped_early: bool = False
    diagnostic_only: bool = False
    violations: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentRecord":
        return cls(**d)


# --------------------------------------------------------------------------
# helpers


def _safe_guarantee(c: float | None, unclipped: bool = False) -> float | None:
    if c is None or not math.isfinite(c) or c < 0:
        return None
    return guarantee_unclipped(c) if unclipped else guarantee(c)


def _prefix_trajectory(f, k: int) -> Trajectory:
    prefixes = greedy_prefixes(f, k)
    steps = [Step(i, None, members(A), [], members(A), f.value(A)) for i, A in enumerate(prefixes[1:], 1)]
    return Trajectory(k, steps, algorithm="best_prefix")


def _instance_tag(family: str, seed: int, **kw) -> str:
    extra = ",".join(f"{k}={v}" for k, v in sorted(kw.items()))
    return f"{family}[seed={seed}{',' + extra if extra else ''}]"


def _check_budget(t0: float, budget: float, what: str, records: list) -> None:
    if time.perf_counter() - t0 > budget:
        raise BudgetExceeded(f"cell {what} exceeded {budget:.0f}s", records)


def _base_instance(family: str, seed: int, n: int, params: dict):
    if family == "exp_design":
        return obj.gen_exp_design(seed, n=n, **params)
    if family == "coverage":
        return obj.gen_coverage(seed, n=n, **params)
    if family == "feature_selection":
        return obj.gen_feature_selection(seed, p=n, **params)
    raise ValueError(f"{family!r} is not a decomposable family")


def _verify_discrete(rec: ExperimentRecord) -> None:
    """Per-instance guarantee and certificate inequalities (only where OPT is exact)."""
    v = rec.violations
    if rec.opt_value is not None and rec.opt_value > 0 and rec.c_g is not None:
        bound = guarantee(rec.c_g) * rec.opt_value
        if "gp" in rec.values and rec.values["gp"] < bound - TOL:
            v.append(f"guarantee: f(A_k)={rec.values['gp']:.6g} < {bound:.6g}")
    if rec.c_g is not None and rec.alpha_g is not None:
        if rec.r_hat is not None and rec.c_g > rec.alpha_g / (1 - rec.r_hat) + TOL:
            v.append(f"certificate r_hat: c_g={rec.c_g:.6g} > {rec.alpha_g / (1 - rec.r_hat):.6g}")
        if rec.r_opt is not None and rec.c_g > rec.alpha_g / (1 - rec.r_opt) + TOL:
            v.append(f"certificate r: c_g={rec.c_g:.6g} > {rec.alpha_g / (1 - rec.r_opt):.6g}")
    if rec.s_hat is not None and rec.r_hat is not None and rec.s_hat > rec.r_hat + TOL:
        v.append(f"singleton: s_hat={rec.s_hat:.6g} > r_hat={rec.r_hat:.6g}")


# --------------------------------------------------------------------------
# decomposable cells


def _decomposable_cell(cfg: SweepConfig, f0, inst, cs: float, alphas: tuple[float, float]) -> ExperimentRecord:
    t0 = time.perf_counter()
    dec = f0.with_costs(cs * inst.unit_costs)
    k = cfg.k
    rec = ExperimentRecord(cfg.suite, cfg.family, dec.n, k, inst.seed, cs,
                           instance=_instance_tag(cfg.family, inst.seed, cost=cs))
    gp = greedy_prune(dec, k)
    rec.values["gp"] = gp.final_value
    rec.prune_events, rec.stopped_early = gp.prune_events, gp.stopped_early
    sets = {"gp": gp.final}
    for alg in cfg.algorithms:
        if alg == "greedy":
            sets[alg] = standard_greedy(dec, k).final
        elif alg == "classic":
            sets[alg] = classic_greedy(dec, k).final
        elif alg == "dg":
            sets[alg] = distorted_greedy(dec, k)
        elif alg == "rg":
            sets[alg] = random_greedy(dec, k, seed=inst.seed)
        elif alg == "best_prefix":
            sets[alg] = best_prefix_greedy(dec, k)
    rec.values.update({a: dec.value(S) for a, S in sets.items()})

    a_an, a_tot = alphas
    rec.alpha_analytic, rec.alpha_total = a_an, a_tot
    rec.alpha_g = max(a_an, a_tot)
    rec.r_hat, rec.c_hat = certificate_removal(dec, gp, rec.alpha_g)
    rec.guarantee_cert = guarantee(rec.c_hat)
    rec.s_hat = singleton_diagnostic(dec, gp)
    rec.s_formal = singleton_is_formal(rec.s_hat, rec.alpha_g)
    if rec.s_hat < 1:
        rec.c_diag = a_an / (1 - rec.s_hat)
        rec.diag, rec.diag_unclipped = guarantee(rec.c_diag), _safe_guarantee(rec.c_diag, True)

    if cfg.compute_opt:
        opt = exact_opt(dec, k)
        rec.opt_value = opt.value
        if opt.value > 0:
            rec.ratios = {a: dec.value(S) / opt.value for a, S in sets.items()}
        if opt.optimal_sets[0]:
            rec.rho = cost_ratio(dec, opt.optimal_sets[0])
        rec.r_opt = certificate_opt_aware(dec, gp, opt)
        if cfg.compute_curvature:
            rec.c_g = curvature_greedy(dec, gp, opt)
            rec.guarantee_curv = guarantee(rec.c_g)
            rec.guarantee_curv_unclipped = guarantee_unclipped(rec.c_g)
    else:
        best = max(sets.values(), key=dec.value)
        if best:
            rec.rho, rec.rho_heuristic = cost_ratio(dec, best), True
    if rec.rho is not None and not math.isnan(rec.rho):
        rec.hfwk = hfwk_bound(rec.rho)
    if cfg.compute_curvature and dec.n <= 14:
        rec.c_f = curvature_global(dec)
    _verify_discrete(rec)
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_decomposable(cfg: SweepConfig, progress: Callable[[str], None] | None = None) -> list[ExperimentRecord]:
    """One base instance per seed; every cost scale reuses its g (and g's cache)."""
    records: list[ExperimentRecord] = []
    for seed in cfg.seeds:
        f0, inst = _base_instance(cfg.family, seed, cfg.n, cfg.params)
        a_an = obj.analytic_alpha(inst)
        a_tot = cc_curvature_total(f0.g, check=False, skip_null=True)
        for cs in cfg.cost_scales:
            t0 = time.perf_counter()
            records.append(_decomposable_cell(cfg, f0, inst, cs, (a_an, a_tot)))
            _check_budget(t0, cfg.cell_budget_s, f"{cfg.family}/{cs}/{seed}", records)
            if progress:
                progress(f"{cfg.family} cost={cs} seed={seed}")
    return records


def tier1_configs(seeds=range(10), n: int = 20, k: int = 5) -> list[SweepConfig]:
    return [SweepConfig(fam, n, k, list(sc), list(seeds), suite="tier1")
            for fam, sc in TIER1_SCALES.items()]


def run_tier1(configs: list[SweepConfig] | None = None, progress=None) -> list[ExperimentRecord]:
    out = []
    for cfg in configs or tier1_configs():
        out += run_decomposable(cfg, progress)
    return out


def moderate_configs(seeds=range(5)) -> list[SweepConfig]:
    return [SweepConfig(fam, s["n"], s["k"], list(MODERATE_SCALES[fam]), list(seeds),
                        algorithms=["gp", "dg"], compute_opt=False, compute_curvature=False,
                        params=dict(s["params"]), suite="moderate")
            for fam, s in MODERATE_SHAPE.items()]


def run_moderate(configs: list[SweepConfig] | None = None, progress=None) -> list[ExperimentRecord]:
    out = []
    for cfg in configs or moderate_configs():
        out += run_decomposable(cfg, progress)
    return out


# --------------------------------------------------------------------------
# MaxCut


def maxcut_configs(seeds=range(20)) -> list[SweepConfig]:
    out = []
    for fam in ("planted", "erdos_renyi"):
        for n in (16, 20):
            for k in (n // 4, n // 3, n // 2):
                out.append(SweepConfig("maxcut", n, k, [0.0], list(seeds),
                                       algorithms=["gp", "classic", "greedy", "rg"],
                                       params={"graph": fam}, suite="maxcut"))
    return out


def _maxcut_cell(cfg: SweepConfig, seed: int) -> ExperimentRecord:
    t0 = time.perf_counter()
    fam = cfg.params.get("graph", "planted")
    f, inst = obj.gen_maxcut(seed, cfg.n, cfg.k, fam)
    rec = ExperimentRecord("maxcut", fam, cfg.n, cfg.k, seed,
                           instance=_instance_tag("maxcut", seed, graph=fam, n=cfg.n, k=cfg.k))
    gp = greedy_prune(f, cfg.k)
    rec.prune_events, rec.stopped_early = gp.prune_events, gp.stopped_early
    sets = {"gp": gp.final}
    if "classic" in cfg.algorithms:
        sets["classic"] = classic_greedy(f, cfg.k).final
    if "greedy" in cfg.algorithms:
        sets["greedy"] = standard_greedy(f, cfg.k).final
    if "rg" in cfg.algorithms:
        # fresh stream, independent of the graph draw
        rg_seed = int(np.random.SeedSequence([inst.rng_seed, 1]).generate_state(1)[0])
        sets["rg"] = random_greedy(f, cfg.k, seed=rg_seed)
    rec.values = {a: f.value(S) for a, S in sets.items()}
    opt = exact_opt(f, cfg.k)
    rec.opt_value = opt.value
    if opt.value > 0:
        rec.ratios = {a: v / opt.value for a, v in rec.values.items()}
        rec.c_g = curvature_greedy(f, gp, opt)
        rec.guarantee_curv = guarantee(rec.c_g)
        rec.guarantee_curv_unclipped = guarantee_unclipped(rec.c_g)
        for a in ("gp", "greedy"):
            if a in rec.ratios and rec.ratios[a] < MAXCUT_BOUND - TOL:
                rec.violations.append(f"{a} ratio {rec.ratios[a]:.4f} < {MAXCUT_BOUND:.4f}")
    _verify_discrete(rec)
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_maxcut_suite(configs: list[SweepConfig] | None = None, progress=None) -> list[ExperimentRecord]:
    records = []
    for cfg in configs or maxcut_configs():
        for seed in cfg.seeds:
            t0 = time.perf_counter()
            records.append(_maxcut_cell(cfg, seed))
            _check_budget(t0, cfg.cell_budget_s, f"maxcut/{cfg.n}/{cfg.k}/{seed}", records)
            if progress:
                progress(f"maxcut {cfg.params.get('graph')} n={cfg.n} k={cfg.k} seed={seed}")
    return records


# --------------------------------------------------------------------------
# GCLin lambda sweep


def lambda_configs(n: int = 12, k: int = 6, seeds=range(20), lams=LAMBDAS) -> list[SweepConfig]:
    return [SweepConfig("gclin", n, k, [0.0], list(seeds), algorithms=["best_prefix"],
                        params={"lam": lam}, suite="lambda") for lam in lams]


def _lambda_cell(cfg: SweepConfig, seed: int) -> ExperimentRecord:
    t0 = time.perf_counter()
    lam = float(cfg.params["lam"])
    f, _ = obj.gen_gclin(seed, cfg.n, lam)
    rec = ExperimentRecord("lambda", "gclin", cfg.n, cfg.k, seed, lam=lam,
                           instance=_instance_tag("gclin", seed, lam=lam, n=cfg.n))
    traj = _prefix_trajectory(f, cfg.k)
    S = best_prefix_greedy(f, cfg.k)
    rec.values = {"best_prefix": f.value(S)}
    opt = exact_opt(f, cfg.k)
    rec.opt_value = opt.value
    if opt.value > 0:
        rec.ratios = {"best_prefix": rec.values["best_prefix"] / opt.value}
    # trajectory-curvature proxy: c_g of the greedy prefixes against exact OPT
    rec.c_g, rec.c_g_proxy = curvature_greedy(f, traj, opt), True
    rec.c_f = curvature_global(f)
    rec.monotone = check_monotone(f)
    rec.alpha_g = 2 * lam
    rec.guarantee_curv = guarantee(2 * lam, monotone=bool(rec.monotone))
    rec.diagnostic_only = lam > 1
    if not rec.diagnostic_only and rec.c_f > 2 * lam + TOL:
        rec.violations.append(f"c_f={rec.c_f:.6g} > 2*lambda={2 * lam:.6g}")
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_lambda_sweep(configs: list[SweepConfig] | None = None, progress=None) -> list[ExperimentRecord]:
    records = []
    for cfg in configs or lambda_configs():
        if cfg.n > 14:
            raise ValueError("lambda sweep needs n <= 14 for exact curvature")
        for seed in cfg.seeds:
            t0 = time.perf_counter()
            records.append(_lambda_cell(cfg, seed))
            _check_budget(t0, cfg.cell_budget_s, f"gclin/{cfg.params['lam']}/{seed}", records)
            if progress:
                progress(f"gclin lam={cfg.params['lam']} seed={seed}")
    return records


SUITES = {
    "tier1": run_tier1,
    "moderate": run_moderate,
    "maxcut": run_maxcut_suite,
    "lambda": run_lambda_sweep,
}


def run_config(cfg: SweepConfig, progress=None) -> list[ExperimentRecord]:
    if cfg.suite == "maxcut" or cfg.family == "maxcut":
        return run_maxcut_suite([cfg], progress)
    if cfg.suite == "lambda" or cfg.family == "gclin":
        return run_lambda_sweep([cfg], progress)
    return run_decomposable(cfg, progress)


# --------------------------------------------------------------------------
# verification and reporting


def verify_records(records: list[ExperimentRecord]) -> None:
    bad = [(r.instance, v) for r in records for v in r.violations]
    if bad:
        lines = "\n".join(f"  {i}: {v}" for i, v in bad[:20])
        raise InvariantViolation(f"{len(bad)} invariant violation(s):\n{lines}")


def sort_records(records: list[ExperimentRecord]) -> list[ExperimentRecord]:
    return sorted(records, key=lambda r: (r.suite, r.family, r.n, r.k, r.lam or 0.0, r.cost_scale, r.seed))


def records_digest(records: list[ExperimentRecord]) -> str:
    """sha256 of the JSON report with wall-time fields removed."""
    rows = [{k: v for k, v in r.to_json().items() if k != "wall_time"} for r in sort_records(records)]
    return hashlib.sha256(json.dumps(rows, sort_keys=True).encode()).hexdigest()


def _mean(xs) -> float | None:
    xs = [x for x in xs if x is not None and not (isinstance(x, float) and math.isnan(x))]
    return float(np.mean(xs)) if xs else None


def _fmt(x, nd: int = 2) -> str:
    if x is None:
        return "-"
    if isinstance(x, float) and math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.{nd}f}"


def summarize(records: list[ExperimentRecord]) -> list[dict]:
    """Means per (suite, family, n, k, lambda, cost scale)."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in sort_records(records):
        groups.setdefault((r.suite, r.family, r.n, r.k, r.lam, r.cost_scale), []).append(r)
    out = []
    for (suite, fam, n, k, lam, cs), rs in groups.items():
        algs = sorted({a for r in rs for a in r.values})
        row = {"suite": suite, "family": fam, "n": n, "k": k, "lam": lam, "cost_scale": cs,
               "seeds": len(rs)}
        for a in algs:
            row[f"value_{a}"] = _mean(r.values.get(a) for r in rs)
            row[f"ratio_{a}"] = _mean(r.ratios.get(a) if r.ratios else None for r in rs)
        for key in ("rho", "c_g", "c_f", "alpha_g", "r_hat", "r_opt", "s_hat", "c_hat", "c_diag",
                    "guarantee_curv", "guarantee_curv_unclipped", "guarantee_cert", "diag",
                    "diag_unclipped", "hfwk"):
            row[key] = _mean(getattr(r, key) for r in rs)
        row["prune_instances"] = sum(r.prune_events > 0 for r in rs)
        if "gp" in algs:
            for base in ("classic", "greedy"):
                if base in algs:
                    row[f"gp_beats_{base}"] = sum(r.values["gp"] > r.values[base] + TOL for r in rs)
        row["monotone_frac"] = _mean(float(r.monotone) for r in rs if r.monotone is not None)
        out.append(row)
    return out


def _md_table(header: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines)


_FAMILY_LABEL = {"exp_design": "Exp. design", "coverage": "Coverage",
                 "feature_selection": "Feature sel.", "planted": "Planted distractor",
                 "erdos_renyi": "Erdos-Renyi", "gclin": "GCLin"}


def _markdown(records: list[ExperimentRecord]) -> str:
    summ = summarize(records)
    parts = []
    t1 = [s for s in summ if s["suite"] == "tier1" and s["cost_scale"] in TIER1_REPORTED.get(s["family"], [])]
    if t1:
        rows = [[_FAMILY_LABEL[s["family"]], _fmt(s["cost_scale"]), _fmt(s["rho"]), _fmt(s.get("ratio_gp")),
                 _fmt(s.get("ratio_dg")), _fmt(s["c_g"]), _fmt(s["guarantee_curv"]),
                 _fmt(s["guarantee_curv_unclipped"]), _fmt(s["guarantee_cert"]), _fmt(s["hfwk"])]
                for s in t1]
        parts.append("## Tier 1 (exact OPT)\n\n" + _md_table(
            ["Application", "cost", "rho", "GP ratio", "DG ratio", "c_g", "Curv. guar.",
             "Curv. guar. (unclipped)", "Cert. guar.", "HFWK"], rows))
    mod = [s for s in summ if s["suite"] == "moderate" and s["cost_scale"] in MODERATE_REPORTED.get(s["family"], [])]
    if mod:
        rows = [[f"{_FAMILY_LABEL[s['family']]} (n={s['n']}, k={s['k']})", _fmt(s["cost_scale"]),
                 _fmt(s.get("value_gp")), _fmt(s.get("value_dg")), _fmt(s["c_diag"]), _fmt(s["diag"]),
                 _fmt(s["diag_unclipped"]), _fmt(s["hfwk"])] for s in mod]
        parts.append("## Moderate scale (no exact OPT)\n\n" + _md_table(
            ["Application", "cost", "f_GP", "f_DG", "c_hat (singleton)", "Diag.", "Diag. (unclipped)",
             "HFWK (heuristic)"], rows))
    mc = [s for s in summ if s["suite"] == "maxcut"]
    if mc:
        rows = [[_FAMILY_LABEL[s["family"]], str(s["n"]), str(s["k"]), _fmt(s.get("ratio_classic"), 3),
                 _fmt(s.get("ratio_greedy"), 3), _fmt(s.get("ratio_gp"), 3), _fmt(s.get("ratio_rg"), 3),
                 f"{s.get('gp_beats_classic', 0)}/{s['seeds']}", f"{s['prune_instances']}/{s['seeds']}"]
                for s in mc]
        parts.append("## MaxCut\n\n" + _md_table(
            ["Instance type", "n", "k", "Greedy", "Greedy (stop rule)", "GP", "Random", "GP > Greedy",
             "pruned"], rows))
    lam = [s for s in summ if s["suite"] == "lambda"]
    if lam:
        rows = [[_fmt(s["lam"]), _fmt(s["c_g"], 3), _fmt(2 * s["lam"]), _fmt(s["c_f"], 3),
                 _fmt(s["guarantee_curv"], 3), _fmt(s["monotone_frac"]),
                 "diagnostic" if s["lam"] > 1 else ""] for s in lam]
        parts.append("## GCLin lambda sweep\n\n" + _md_table(
            ["lambda", "c_traj (proxy)", "2 lambda", "c_f", "guarantee", "monotone frac", "note"], rows))
    if not parts:
        return _md_table(list(_CSV_COLUMNS), []) + "\n"
    return "\n\n".join(parts) + "\n"


_CSV_COLUMNS = ("suite", "family", "n", "k", "lam", "cost_scale", "seed", "instance", "opt_value", "rho",
                "c_g", "c_f", "alpha_g", "r_hat", "r_opt", "s_hat", "c_hat", "guarantee_curv",
                "guarantee_cert", "diag", "hfwk", "prune_events", "values", "ratios", "violations")


def _csv(records: list[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_CSV_COLUMNS)
    for r in sort_records(records):
        d = r.to_json()
        w.writerow([json.dumps(d[c], sort_keys=True) if isinstance(d[c], (dict, list)) else
                    ("" if d[c] is None else d[c]) for c in _CSV_COLUMNS])
    return buf.getvalue()


def emit_report(records: list[ExperimentRecord], fmt: str, path: str | None = None) -> str:
    """Render records as csv, json or markdown (deterministic order); write to ``path`` if given."""
    if fmt == "csv":
        text = _csv(records)
    elif fmt == "json":
        text = json.dumps({"records": [r.to_json() for r in sort_records(records)]}, indent=1) + "\n"
    elif fmt == "markdown":
        text = _markdown(records)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_records(path: str) -> list[ExperimentRecord]:
    with open(path) as fh:
        d = json.load(fh)
    return [ExperimentRecord.from_json(r) for r in d["records"]]
