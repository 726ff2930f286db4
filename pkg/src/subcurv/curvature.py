"""Set-function curvature, greedy (trajectory) curvature, and decomposable certificates."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .greedy import OptResult, Trajectory
from .oracle import (
    DecomposableFunction,
    InfeasibleError,
    InvariantViolation,
    SetFunction,
    check_monotone,
    full_mask,
    members,
)

MAX_GLOBAL_N = 14


def _submasks(mask: int) -> np.ndarray:
    """All submasks of ``mask`` (including 0) as an int64 array."""
    out = np.zeros(1, dtype=np.int64)
    for e in members(mask):
        out = np.concatenate([out, out | (1 << e)])
    return out


@dataclass
class GlobalCurvature:
    c_f: float
    admissible_pairs: int
    # (X, Z) attaining the minimum ratio, Z = Y \ X
    witness: tuple[int, int] | None


def global_curvature_scan(f: SetFunction) -> GlobalCurvature:
    """Exact c_f over all disjoint pairs (X, Z) with f(Z) > 0.

    For a pair (X, Y) only Z = Y minus X matters, since X u Y = X u Z, so
    the scan is 3^n rather than 4^n.
    """
    if f.n > MAX_GLOBAL_N:
        raise InfeasibleError(f"global curvature infeasible for n={f.n} (limit {MAX_GLOBAL_N})")
    t = f.table()
    full = full_mask(f.n)
    best, count, witness = np.inf, 0, None
    for Z in range(1, full + 1):
        fz = t[Z]
        if fz <= 0:
            continue
        X = _submasks(full ^ Z)
        diff = t[X | Z] - t[X]
        j = int(np.argmin(diff))
        count += len(X)
        r = diff[j] / fz
        if r < best:
            best, witness = r, (int(X[j]), Z)
    if count == 0:
        return GlobalCurvature(0.0, 0, None)
    return GlobalCurvature(float(1.0 - best), count, witness)


def curvature_global(f: SetFunction, require_positive_singletons: bool = False) -> float:
    if require_positive_singletons:
        bad = [e for e in range(f.n) if f.value(1 << e) <= 0]
        if bad:
            raise ValueError(f"non-positive singletons {bad}; drop them first")
    return global_curvature_scan(f).c_f


def greedy_ratios(f: SetFunction, traj: Trajectory, opt: OptResult) -> list[float]:
    """Admissible curvature ratios along the trajectory, one per (O*, A_i) pair."""
    out = []
    for O in opt.optimal_sets:
        fO = f.value(O)
        for A in set(traj.active_sets()):
            T = A & ~O
            fT = f.value(T)
            if fT > 0:
                out.append((f.value(O | A) - fO) / fT)
    return out


def curvature_greedy(f: SetFunction, traj: Trajectory, opt: OptResult) -> float:
    """Greedy curvature c_g, clamped at 0; 0 when no pair is admissible."""
    if not opt.optimal_sets:
        raise ValueError("empty optimal-set list")
    r = greedy_ratios(f, traj, opt)
    return max(0.0, 1.0 - min(r)) if r else 0.0


def cc_curvature_total(g: SetFunction, check: bool = True, skip_null: bool = False) -> float:
    """Conforti-Cornuejols total curvature 1 - min_e Delta(e | N - e) / g(e).

    With ``skip_null``, elements with g({e}) = 0 are left out; for monotone
    submodular g every marginal of such an element is 0, so they are dummies.
    """
    if check and g.n <= 12 and not check_monotone(g):
        raise ValueError("total curvature needs a monotone function")
    N = full_mask(g.n)
    gN = g.value(N)
    worst = np.inf
    for e in range(g.n):
        ge = g.value(1 << e)
        if ge <= 0:
            if skip_null and ge == 0:
                continue
            raise ValueError(f"singleton {e} has g({{e}}) = {ge} <= 0")
        worst = min(worst, (gN - g.value(N & ~(1 << e))) / ge)
    return 0.0 if worst == np.inf else float(1.0 - worst)


def guarantee_unclipped(c: float) -> float:
    """(1 - e^-c) / c with value 1 at c = 0."""
    if c < 0:
        raise ValueError("curvature must be >= 0")
    return 1.0 if c == 0 else -math.expm1(-c) / c


def guarantee(c: float, monotone: bool = False) -> float:
    """Approximation factor for curvature c.

    The sharper (1 - e^-c)/c for c < 1 is only used when ``monotone``;
    otherwise c is clipped up to max(1, c).
    """
    if c < 0:
        raise ValueError("curvature must be >= 0")
    if monotone and c < 1:
        return guarantee_unclipped(c)
    return guarantee_unclipped(max(1.0, c))


def hfwk_bound(rho: float) -> float:
    """Multiplicative form 1 - 1/(e(1 - rho)) of the additive distorted-greedy bound."""
    if rho >= 1:
        return -math.inf
    return 1.0 - 1.0 / (math.e * (1.0 - rho))


# --------------------------------------------------------------------------
# decomposable certificates


def _need_dec(dec) -> DecomposableFunction:
    if not isinstance(dec, DecomposableFunction):
        raise TypeError("certificate needs a decomposable oracle")
    return dec


def removal_ratio(dec: DecomposableFunction, traj: Trajectory) -> float:
    """r_hat = max over active sets A and e in A of l(e) / Delta_g(e | A - e)."""
    dec = _need_dec(dec)
    g, c = dec.g, dec.costs
    r = 0.0
    for A in set(traj.active_sets()):
        gA = g.value(A)
        for e in members(A):
            den = gA - g.value(A & ~(1 << e))
            if den <= 0 or den <= c[e]:
                raise InvariantViolation(
                    f"active element {e} has removal marginal {den:.6g} <= cost {c[e]:.6g}; "
                    "pruning invariant violated")
            r = max(r, c[e] / den)
    return r


def certificate_removal(dec: DecomposableFunction, traj: Trajectory, alpha_g: float) -> tuple[float, float]:
    """(r_hat, alpha_g / (1 - r_hat))."""
    r = removal_ratio(dec, traj)
    return r, alpha_g / (1.0 - r)


def certificate_opt_aware(dec: DecomposableFunction, traj: Trajectory, opt: OptResult) -> float:
    """r = max over O* and steps with f(A_i - O*) > 0 of l(A_i - O*) / g(A_i - O*)."""
    dec = _need_dec(dec)
    r = 0.0
    for O in opt.optimal_sets:
        for A in set(traj.active_sets()):
            T = A & ~O
            if dec.value(T) > 0:
                r = max(r, dec.cost(T) / dec.g.value(T))
    return r


def singleton_diagnostic(dec: DecomposableFunction, traj: Trajectory) -> float:
    """s_hat = max over ever-active e of l(e) / g({e})."""
    dec = _need_dec(dec)
    seen = 0
    for A in traj.active_sets():
        seen |= A
    s = 0.0
    for e in members(seen):
        ge = dec.g.value(1 << e)
        if ge <= 0:
            raise ValueError(f"g({{{e}}}) = {ge} <= 0")
        s = max(s, dec.costs[e] / ge)
    return s


def singleton_is_formal(s_hat: float, alpha_g: float) -> bool:
    """The singleton ratio certifies c_g <= alpha/(1 - s) only when s < 1 - alpha."""
    return bool(s_hat < 1.0 - alpha_g)


def cost_ratio(dec: DecomposableFunction, S: int) -> float:
    """rho = l(S) / g(S); nan for g(S) = 0."""
    gS = dec.g.value(S)
    return dec.cost(S) / gS if gS > 0 else math.nan


# --------------------------------------------------------------------------
# reports


@dataclass
class CurvatureReport:
    c_f: float | None
    c_g: float | None
    alpha_cc: float | None
    monotone: bool | None
    admissible_pairs: int
    guarantee_nonmonotone: float | None
    guarantee_monotone: float | None

    def to_json(self) -> dict:
        return asdict(self)


def curvature_report(f: SetFunction, traj: Trajectory | None = None,
                     opt: OptResult | None = None) -> CurvatureReport:
    c_f = alpha = monotone = None
    pairs = 0
    if f.n <= MAX_GLOBAL_N:
        scan = global_curvature_scan(f)
        c_f, pairs = scan.c_f, scan.admissible_pairs
        monotone = check_monotone(f)
        if monotone and all(f.value(1 << e) > 0 for e in range(f.n)):
            alpha = cc_curvature_total(f, check=False)
    c_g = curvature_greedy(f, traj, opt) if traj is not None and opt is not None else None
    c_use = c_g if c_g is not None else c_f
    g_non = guarantee(c_use) if c_use is not None else None
    g_mon = guarantee(c_use, monotone=True) if (c_use is not None and monotone) else None
    return CurvatureReport(c_f, c_g, alpha, monotone, pairs, g_non, g_mon)


@dataclass
class CertificateReport:
    alpha_g: float
    r_hat: float
    c_hat: float
    r_opt_aware: float | None
    s_hat: float
    s_formal: bool
    guarantee_cert: float
    rho: float | None
    rho_heuristic: bool
    hfwk_mult: float | None

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("hfwk_mult",):
            if d[key] is not None and math.isinf(d[key]):
                d[key] = None
        return d


def certificate_report(dec: DecomposableFunction, traj: Trajectory, alpha_g: float,
                       opt: OptResult | None = None, best_known: int | None = None) -> CertificateReport:
    """All OPT-free certificates, plus OPT-aware ones when ``opt`` is given.

    Without exact OPT, rho is taken from ``best_known`` and flagged heuristic.
    """
    r_hat, c_hat = certificate_removal(dec, traj, alpha_g)
    s_hat = singleton_diagnostic(dec, traj)
    r_opt = certificate_opt_aware(dec, traj, opt) if opt is not None else None
    rho, heuristic = None, False
    if opt is not None and opt.optimal_sets and opt.optimal_sets[0]:
        rho = cost_ratio(dec, opt.optimal_sets[0])
    elif best_known:
        rho, heuristic = cost_ratio(dec, best_known), True
    hf = hfwk_bound(rho) if rho is not None and not math.isnan(rho) else None
    return CertificateReport(alpha_g, r_hat, c_hat, r_opt, s_hat, singleton_is_formal(s_hat, alpha_g),
                             guarantee(c_hat), rho, heuristic, hf)
