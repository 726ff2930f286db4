"""Greedy with pruning, the baselines it is compared against, and exact OPT."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .oracle import (
    MAX_EXACT_N,
    DecomposableFunction,
    InfeasibleError,
    SetFunction,
    mask_of,
    masks_upto,
    members,
)

log = logging.getLogger(__name__)

EPS_OPT = 1e-9


@dataclass
class Step:
    i: int
    selected: int | None
    pre_prune: list[int]
    pruned: list[int]
    active: list[int]
    value: float

    @property
    def mask(self) -> int:
        return mask_of(self.active)


@dataclass
class Trajectory:
    """Active sets A_1..A_k of one greedy run (A_0 = empty is implicit)."""

    k: int
    steps: list[Step] = field(default_factory=list)
    queries: int = 0
    algorithm: str = "gp"

    def active_sets(self) -> list[int]:
        """[A_0, A_1, ..., A_k] as masks; early stops repeat the terminal set."""
        return [0] + [s.mask for s in self.steps]

    @property
    def final(self) -> int:
        return self.steps[-1].mask if self.steps else 0

    @property
    def final_value(self) -> float:
        return self.steps[-1].value if self.steps else 0.0

    @property
    def prune_events(self) -> int:
        return sum(len(s.pruned) for s in self.steps)

    @property
    def stopped_early(self) -> bool:
        return any(s.selected is None for s in self.steps)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "steps": [
                {"i": s.i, "selected": s.selected, "pre_prune": s.pre_prune,
                 "pruned": s.pruned, "active": s.active, "value": s.value}
                for s in self.steps
            ],
            "queries": self.queries,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Trajectory":
        steps = [Step(s["i"], s["selected"], list(s["pre_prune"]), list(s["pruned"]),
                      list(s["active"]), float(s["value"])) for s in d["steps"]]
        return cls(int(d["k"]), steps, int(d.get("queries", 0)))


@dataclass
class OptResult:
    value: float
    optimal_sets: list[int]
    k: int

    def to_json(self) -> dict:
        return {"value": self.value, "optimal_sets": [members(S) for S in self.optimal_sets],
                "k": self.k}

    @classmethod
    def from_json(cls, d: dict) -> "OptResult":
        return cls(float(d["value"]), [mask_of(S) for S in d["optimal_sets"]], int(d["k"]))


def _check_k(f: SetFunction, k: int) -> None:
    if not 1 <= k <= f.n:
        raise ValueError(f"k={k} out of range [1, {f.n}]")


def _best_addition(f: SetFunction, A: int, fA: float) -> tuple[int | None, float]:
    """Largest marginal over e not in A; ties go to the lowest index."""
    best, gain = None, -np.inf
    for e in range(f.n):
        if (A >> e) & 1:
            continue
        d = f.value(A | (1 << e)) - fA
        if d > gain:
            best, gain = e, d
    return best, gain


def _prune(f: SetFunction, A: int, fA: float, tau: float) -> tuple[int, float, list[int]]:
    pruned = []
    while True:
        for a in members(A):
            rest = A & ~(1 << a)
            f_rest = f.value(rest)
            if fA - f_rest <= tau:
                pruned.append(a)
                A, fA = rest, f_rest
                break
        else:
            return A, fA, pruned


def _greedy(f: SetFunction, k: int, prune: bool, tau_prune: float, name: str) -> Trajectory:
    _check_k(f, k)
    q0 = f.eval_count
    traj = Trajectory(k, algorithm=name)
    A, fA = 0, 0.0
    for i in range(1, k + 1):
        a, gain = _best_addition(f, A, fA)
        if a is None or gain <= 0:
            # early stop: A_i = ... = A_k = A_{i-1}
            for j in range(i, k + 1):
                traj.steps.append(Step(j, None, members(A), [], members(A), fA))
            break
        pre = A | (1 << a)
        pruned: list[int] = []
        if prune:
            A, fA, pruned = _prune(f, pre, f.value(pre), tau_prune)
        else:
            A, fA = pre, f.value(pre)
        traj.steps.append(Step(i, a, members(pre), pruned, members(A), fA))
        log.debug("step %d: add %d (gain %.4g) pruned %s value %.6g", i, a, gain, pruned, fA)
    traj.queries = f.eval_count - q0
    return traj


def greedy_prune(f: SetFunction, k: int, tau_prune: float = 0.0) -> Trajectory:
    """Greedy with pruning.

    Each step adds the element of largest marginal (fixed-order ties) and
    stops once that marginal is <= 0.  After an addition, the first active
    element (in ground-set order) whose removal marginal is <= ``tau_prune``
    is dropped, repeatedly, until every active element contributes strictly.
    A positive ``tau_prune`` guards against round-off in log-det objectives;
    it only prunes more, never less.
    """
    return _greedy(f, k, True, tau_prune, "gp")


def standard_greedy(f: SetFunction, k: int) -> Trajectory:
    """Same selection and stop rule as greedy_prune, no pruning."""
    return _greedy(f, k, False, 0.0, "greedy")


def classic_greedy(f: SetFunction, k: int) -> Trajectory:
    """Textbook greedy: always k additions, even at negative marginals."""
    _check_k(f, k)
    q0 = f.eval_count
    traj = Trajectory(k, algorithm="classic")
    A, fA = 0, 0.0
    for i in range(1, k + 1):
        a, _ = _best_addition(f, A, fA)
        A |= 1 << a
        fA = f.value(A)
        traj.steps.append(Step(i, a, members(A), [], members(A), fA))
    traj.queries = f.eval_count - q0
    return traj


def distorted_greedy(dec: DecomposableFunction, k: int) -> int:
    """Distorted greedy for g - l; a step whose best distorted score is <= 0 is skipped."""
    if not isinstance(dec, DecomposableFunction):
        raise TypeError("distorted greedy needs a decomposable oracle (g and costs)")
    _check_k(dec, k)
    g, c = dec.g, dec.costs
    S, gS = 0, 0.0
    for i in range(k):
        w = (1.0 - 1.0 / k) ** (k - (i + 1))
        best, score = None, -np.inf
        for e in range(dec.n):
            if (S >> e) & 1:
                continue
            s = w * (g.value(S | (1 << e)) - gS) - c[e]
            if s > score:
                best, score = e, s
        if best is not None and score > 0:
            S |= 1 << best
            gS = g.value(S)
    return S


def random_greedy(f: SetFunction, k: int, seed: int = 0) -> int:
    """Random greedy: uniform pick among the k best marginals, zero-marginal dummies pad."""
    _check_k(f, k)
    rng = np.random.default_rng(seed)
    S, fS = 0, 0.0
    for _ in range(k):
        cands = []
        for e in range(f.n):
            if not (S >> e) & 1:
                cands.append((f.value(S | (1 << e)) - fS, e))
        # stable: larger marginal first, then lower index; dummies (index n+) lose ties
        cands += [(0.0, f.n + j) for j in range(k)]
        cands.sort(key=lambda t: (-t[0], t[1]))
        gain, e = cands[int(rng.integers(k))]
        if e < f.n and gain > 0:
            S |= 1 << e
            fS = f.value(S)
    return S


def greedy_prefixes(f: SetFunction, k: int) -> list[int]:
    """Plain greedy run for all k steps (no stop rule); returns [A_0, ..., A_k]."""
    _check_k(f, k)
    A, fA = 0, 0.0
    out = [0]
    for _ in range(k):
        a, gain = _best_addition(f, A, fA)
        if a is None:
            break
        A |= 1 << a
        fA = f.value(A)
        out.append(A)
    return out


def best_prefix_greedy(f: SetFunction, k: int) -> int:
    """Greedy prefix of largest value (earliest on ties)."""
    prefixes = greedy_prefixes(f, k)
    vals = [f.value(A) for A in prefixes]
    return prefixes[int(np.argmax(vals))]


def exact_opt(f: SetFunction, k: int, eps_opt: float = EPS_OPT, family=None) -> OptResult:
    """Enumerate every |S| <= k (or every member of ``family``) and list all optima."""
    if f.n > MAX_EXACT_N:
        raise InfeasibleError(f"exact OPT infeasible for n={f.n} (limit {MAX_EXACT_N})")
    if family is not None:
        masks = family.members(f.n)
        k = family.max_size(f.n)
    elif f.cheap_table and f.n <= 22:
        f.table()
        idx = np.arange(1 << f.n, dtype=np.int64)
        masks = idx[np.bitwise_count(idx) <= k]
    else:
        masks = masks_upto(f.n, k)
    vals = f.values(masks)
    best = float(vals.max())
    opt = masks[vals >= best - eps_opt]
    return OptResult(best, sorted(int(m) for m in opt), k)
