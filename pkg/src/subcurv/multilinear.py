"""Multilinear extension, DMCG-P / wDMCG-P and their fractional certificates.

The exact path contracts the 2^n value table one coordinate at a time
(highest element first, matching the mask layout), so F, each slope and
each mixed partial cost O(2^n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .greedy import OptResult
from .oracle import (
    MAX_VECTOR_N,
    DecomposableFunction,
    InfeasibleError,
    InvariantViolation,
    SetFunction,
    bits_to_masks,
    members,
)

MAX_EXACT_F = 20
MAX_CF_N = 14
MAX_KF_N = 12
WITNESS_TARGET = 1e6

_DIFF = np.array([-1.0, 1.0])


def _as_point(f: SetFunction, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (f.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({f.n},)")
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("point outside [0,1]^n")
    return x


def _exact_table(f: SetFunction) -> np.ndarray:
    if f.n > MAX_EXACT_F:
        raise InfeasibleError(f"exact multilinear path needs n <= {MAX_EXACT_F}; use sampling")
    return f.table()


def _contract(t: np.ndarray, W: np.ndarray) -> float:
    """sum_R t[R] prod_i W[i, [i in R]]."""
    v = t
    for i in range(W.shape[0] - 1, -1, -1):
        v = W[i] @ v.reshape(2, -1)
    return float(v[0])


def _weights(x: np.ndarray) -> np.ndarray:
    return np.stack([1.0 - x, x], axis=1)


def F_exact(f: SetFunction, x) -> float:
    """Exact multilinear extension sum_R f(R) prod_{i in R} x_i prod_{j not in R} (1 - x_j)."""
    x = _as_point(f, x)
    return _contract(_exact_table(f), _weights(x))


def slope(f: SetFunction, x, j: int) -> float:
    """dF/dx_j = F(x | x_j = 1) - F(x | x_j = 0); independent of x_j."""
    x = _as_point(f, x)
    W = _weights(x)
    W[j] = _DIFF
    return _contract(_exact_table(f), W)


def gradient(f: SetFunction, x) -> np.ndarray:
    x = _as_point(f, x)
    t = _exact_table(f)
    W = _weights(x)
    out = np.empty(f.n)
    for j in range(f.n):
        row = W[j].copy()
        W[j] = _DIFF
        out[j] = _contract(t, W)
        W[j] = row
    return out


def _draw(x: np.ndarray, samples: int, rng: np.random.Generator) -> np.ndarray:
    if len(x) > MAX_VECTOR_N:
        raise InfeasibleError(f"sampled path supports n <= {MAX_VECTOR_N}")
    return bits_to_masks(rng.random((samples, len(x))) < x)


def F_sampled(f: SetFunction, x, samples: int, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo F(x): (mean, standard error) over independent inclusion draws."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = _as_point(f, x)
    vals = f.values(_draw(x, samples, np.random.default_rng(seed)))
    se = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(vals.mean()), se


def gradient_sampled(f: SetFunction, x, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Slopes from one shared batch of draws (common random numbers across j)."""
    x = _as_point(f, x)
    m = _draw(x, samples, rng)
    out = np.empty(f.n)
    for j in range(f.n):
        b = np.int64(1) << j
        out[j] = float(np.mean(f.values(m | b) - f.values(m & ~b)))
    return out


# --------------------------------------------------------------------------
# smoothness constants


def smoothness_CF(f: SetFunction) -> float:
    """C_F = max over j != l and vertices of |d^2 F / dx_j dx_l|.

    The mixed partial is multilinear in the other coordinates, so it is
    enough to scan f(S+j+l) - f(S+j) - f(S+l) + f(S) over S avoiding j, l.
    """
    if f.n > MAX_CF_N:
        raise InfeasibleError(f"C_F needs n <= {MAX_CF_N}")
    t = f.table()
    idx = np.arange(1 << f.n, dtype=np.int64)
    best = 0.0
    for j in range(f.n):
        for l in range(j + 1, f.n):
            bj, bl = 1 << j, 1 << l
            S = idx[(idx & (bj | bl)) == 0]
            d = t[S | bj | bl] - t[S | bj] - t[S | bl] + t[S]
            best = max(best, float(np.max(np.abs(d))))
    return best


def mixed_partial_maxima(f: SetFunction) -> np.ndarray:
    """M[r] = max over |R| = r and vertices of |d_R F| for r = 0..n.

    Built as a 3^n tensor: each axis holds (value without e, value with e,
    finite difference), and an entry with r axes in the difference state is
    the order-r mixed partial at the vertex given by the other axes.
    """
    if f.n > MAX_KF_N:
        raise InfeasibleError(f"K_F needs n <= {MAX_KF_N}")
    n = f.n
    v = f.table().reshape((2,) * n)
    order = np.zeros((1,) * n, dtype=np.int64)
    for ax in range(n):
        a0 = np.take(v, [0], axis=ax)
        a1 = np.take(v, [1], axis=ax)
        v = np.concatenate([a0, a1, a1 - a0], axis=ax)
        shape = [1] * n
        shape[ax] = 3
        order = order + np.array([0, 0, 1]).reshape(shape)
    order = np.broadcast_to(order, v.shape).ravel()
    absv = np.abs(v).ravel()
    M = np.zeros(n + 1)
    np.maximum.at(M, order, absv)
    return M


def remainder_KF(f: SetFunction) -> float:
    """K_F = sum_{r >= 2} C(n, r) M_{F,r}."""
    M = mixed_partial_maxima(f)
    return float(sum(comb(f.n, r) * M[r] for r in range(2, f.n + 1)))


@dataclass
class MultilinearDiagnostics:
    C_F: float
    K_F: float | None
    error_bound: float
    T: int


def multilinear_diagnostics(f: SetFunction, T: int) -> MultilinearDiagnostics:
    cf = smoothness_CF(f)
    kf = remainder_KF(f) if f.n <= MAX_KF_N else None
    return MultilinearDiagnostics(cf, kf, f.n * (f.n - 1) * cf / T, T)


# --------------------------------------------------------------------------
# constraint families


@dataclass
class ConstraintFamily:
    """Cardinality (|B| <= k) or partition matroid (|B cap P_i| <= cap_i)."""

    kind: str
    k: int = 0
    parts: list[list[int]] = field(default_factory=list)
    capacities: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.kind == "cardinality":
            if self.k < 1:
                raise ValueError("cardinality family needs k >= 1")
        elif self.kind == "partition":
            if len(self.parts) != len(self.capacities) or not self.parts:
                raise ValueError("one capacity per part required")
            if any(c < 0 for c in self.capacities) or sum(self.capacities) == 0:
                raise ValueError("partition family admits only the empty set")
            flat = [e for p in self.parts for e in p]
            if len(flat) != len(set(flat)):
                raise ValueError("parts overlap")
        else:
            raise ValueError(f"unknown family kind {self.kind!r}")

    @classmethod
    def cardinality(cls, k: int) -> "ConstraintFamily":
        return cls("cardinality", k=int(k))

    @classmethod
    def partition(cls, parts, capacities) -> "ConstraintFamily":
        return cls("partition", parts=[sorted(int(e) for e in p) for p in parts],
                   capacities=[int(c) for c in capacities])

    def _groups(self, n: int) -> list[tuple[list[int], int]]:
        if self.kind == "cardinality":
            return [(list(range(n)), self.k)]
        flat = {e for p in self.parts for e in p}
        if flat != set(range(n)):
            raise ValueError(f"parts must cover the ground set 0..{n - 1}")
        return list(zip(self.parts, self.capacities))

    def max_size(self, n: int) -> int:
        return sum(min(len(p), c) for p, c in self._groups(n))

    def best_set(self, weights) -> list[int]:
        """Exact linear optimization: positive weights only, largest first, lower index on ties."""
        w = np.asarray(weights, dtype=float)
        out = []
        for part, cap in self._groups(len(w)):
            ranked = sorted((j for j in part if w[j] > 0), key=lambda j: (-w[j], j))
            out += ranked[:cap]
        return sorted(out)

    def members(self, n: int) -> np.ndarray:
        """Every feasible mask (n <= 24)."""
        idx = np.arange(1 << n, dtype=np.int64)
        ok = np.ones(len(idx), dtype=bool)
        for part, cap in self._groups(n):
            pm = np.int64(sum(1 << e for e in part))
            ok &= np.bitwise_count(idx & pm) <= cap
        return idx[ok]

    def in_hull(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        return all(x[p].sum() <= c + tol for p, c in self._groups(len(x)))

    def to_json(self) -> dict:
        if self.kind == "cardinality":
            return {"kind": "cardinality", "k": self.k}
        return {"kind": "partition", "parts": self.parts, "capacities": self.capacities}

    @classmethod
    def from_json(cls, d: dict) -> "ConstraintFamily":
        if d["kind"] == "cardinality":
            return cls.cardinality(d["k"])
        return cls.partition(d["parts"], d["capacities"])


# --------------------------------------------------------------------------
# continuous greedy


@dataclass
class FractionalTrajectory:
    T: int
    iterates: list[np.ndarray]
    chosen_sets: list[list[int]]
    prunes: list[tuple[int, int]]
    final_value: float
    algorithm: str = "dmcgp"
    # iterate i+1 before its prune pass (DMCG-P only)
    pre_prune: list[np.ndarray] = field(default_factory=list)

    @property
    def delta(self) -> float:
        return 1.0 / self.T

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def to_json(self) -> dict:
        return {
            "T": self.T,
            "algorithm": self.algorithm,
            "iterates": [x.tolist() for x in self.iterates],
            "chosen_sets": self.chosen_sets,
            "prunes": [{"step": s, "coord": c} for s, c in self.prunes],
            "final_value": self.final_value,
        }

    @classmethod
    def from_json(cls, d: dict) -> "FractionalTrajectory":
        return cls(int(d["T"]), [np.asarray(x, dtype=float) for x in d["iterates"]],
                   [list(B) for B in d["chosen_sets"]],
                   [(int(p["step"]), int(p["coord"])) for p in d["prunes"]],
                   float(d["final_value"]), d.get("algorithm", "dmcgp"))


class _Oracle:
    """F value and gradient, exact or sampled."""

    def __init__(self, f: SetFunction, samples: int | None, seed: int):
        self.f = f
        self.samples = samples
        self.rng = np.random.default_rng(seed)
        if samples is None:
            _exact_table(f)

    def value(self, x):
        if self.samples is None:
            return F_exact(self.f, x)
        return F_sampled(self.f, x, self.samples, int(self.rng.integers(2**63)))[0]

    def grad(self, x):
        if self.samples is None:
            return gradient(self.f, x)
        return gradient_sampled(self.f, x, self.samples, self.rng)


def _prune_pass(F: _Oracle, x: np.ndarray, grad: np.ndarray, step: int, log: list) -> np.ndarray:
    """Zero the lowest-index coordinate with mass and slope <= 0 until none remain."""
    while True:
        bad = np.flatnonzero((x > 0) & (grad <= 0))
        if not len(bad):
            return grad
        j = int(bad[0])
        x[j] = 0.0
        log.append((step, j))
        grad = F.grad(x)


def dmcgp(f: SetFunction, family: ConstraintFamily, T: int,
          samples: int | None = None, seed: int = 0) -> FractionalTrajectory:
    """Discretized measured continuous greedy with slope pruning.

    Exact on n <= 20; pass ``samples`` for a Monte-Carlo run on larger
    ground sets (no guarantee checks apply there).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    F = _Oracle(f, samples, seed)
    x = np.zeros(f.n)
    grad = F.grad(x)
    iterates, chosen, prunes, pre = [x.copy()], [], [], []
    for i in range(T):
        B = family.best_set(grad)
        chosen.append(B)
        x[B] += 1.0 / T
        np.minimum(x, 1.0, out=x)
        pre.append(x.copy())
        grad = _prune_pass(F, x, F.grad(x), i + 1, prunes)
        iterates.append(x.copy())
    return FractionalTrajectory(T, iterates, chosen, prunes, F.value(x), "dmcgp", pre)


def wdmcgp(f: SetFunction, family: ConstraintFamily, k_steps: int, prune: bool = True,
           samples: int | None = None, seed: int = 0) -> FractionalTrajectory:
    """Weighted, damped continuous greedy for non-negative f.

    Iterate i (i < k) is recorded after its prune pass, i.e. at the point
    where the selection slopes are taken; the last iterate is the output.
    """
    if k_steps < 1:
        raise ValueError("k_steps must be >= 1")
    if f.n <= MAX_KF_N and float(np.min(f.table())) < -1e-12:
        raise ValueError("wDMCG-P needs a non-negative f")
    F = _Oracle(f, samples, seed)
    x = np.zeros(f.n)
    iterates, chosen, prunes = [], [], []
    for i in range(k_steps):
        grad = F.grad(x)
        if prune:
            grad = _prune_pass(F, x, grad, i, prunes)
        iterates.append(x.copy())
        B = family.best_set((1.0 - x) * grad)
        chosen.append(B)
        x[B] += (1.0 - x[B]) / k_steps
    iterates.append(x.copy())
    return FractionalTrajectory(k_steps, iterates, chosen, prunes, F.value(x), "wdmcgp")


def slope_invariant_ok(f: SetFunction, ftraj: FractionalTrajectory) -> bool:
    """Every recorded iterate has, per coordinate, zero mass or positive slope."""
    for x in ftraj.iterates:
        g = gradient(f, x)
        if np.any((x > 0) & (g <= 0)):
            return False
    return True


# --------------------------------------------------------------------------
# fractional curvature and certificates


def fractional_greedy_ratios(f: SetFunction, ftraj: FractionalTrajectory, opt: OptResult) -> list[float]:
    """Admissible ratios over O* and iterates 0..T-1 (the final iterate is excluded)."""
    out = []
    for O in opt.optimal_sets:
        o = np.zeros(f.n)
        o[members(O)] = 1.0
        fO = f.value(O)
        for x in ftraj.iterates[:-1]:
            den = F_exact(f, x * (1.0 - o))
            if den > 0:
                out.append((F_exact(f, np.maximum(x, o)) - fO) / den)
    return out


def fractional_greedy_curvature(f: SetFunction, ftraj: FractionalTrajectory, opt: OptResult) -> float:
    """c_g^F clamped at 0; 0 when no iterate is admissible."""
    r = fractional_greedy_ratios(f, ftraj, opt)
    return max(0.0, 1.0 - min(r)) if r else 0.0


def certificate_removal_fractional(dec: DecomposableFunction, ftraj: FractionalTrajectory) -> float:
    """r_hat_F = max over iterates and coordinates with mass of l_j / dG/dx_j."""
    if not isinstance(dec, DecomposableFunction):
        raise TypeError("certificate needs a decomposable oracle")
    r = 0.0
    for x in ftraj.iterates:
        active = np.flatnonzero(x > 0)
        if not len(active):
            continue
        gG = gradient(dec.g, x)
        for j in active:
            if gG[j] <= dec.costs[j]:
                raise InvariantViolation(
                    f"coordinate {j} has mass but slope {gG[j] - dec.costs[j]:.6g} <= 0")
            r = max(r, dec.costs[j] / gG[j])
    return r


@dataclass
class DivergenceWitness:
    negative_set: list[int]
    e_prime: int
    eps: float
    x: np.ndarray
    y: np.ndarray
    numerator: float
    denominator: float
    ratio: float
    steps: int

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["x"], d["y"] = self.x.tolist(), self.y.tolist()
        return d


def minimal_negative_set(f: SetFunction) -> int | None:
    """Smallest-cardinality (hence inclusion-minimal) S with f(S) < 0, lowest mask on ties."""
    t = f.table()
    idx = np.arange(1 << f.n, dtype=np.int64)
    neg = idx[t < 0]
    if not len(neg):
        return None
    sizes = np.bitwise_count(neg)
    return int(neg[sizes == sizes.min()].min())


def cF_divergence_witness(f: SetFunction, target: float = WITNESS_TARGET,
                          max_steps: int = 200) -> DivergenceWitness:
    """Pair (x, y) whose multilinear curvature ratio is below -target.

    With N' an inclusion-minimal negative set and e' its lowest element,
    y = 1_{N'} and x = (1 - eps) 1_{N' - e'}; the denominator
    F(eps 1_{N'-e'} + 1_{e'}) runs from f(e') > 0 down to f(N') < 0, and
    bisection on eps drives it to 0+ while the numerator stays <= f(N').
    """
    if f.n > 16:
        raise InfeasibleError("witness search needs n <= 16")
    if any(f.value(1 << e) <= 0 for e in range(f.n)):
        raise ValueError("witness needs positive singletons")
    Nm = minimal_negative_set(f)
    if Nm is None:
        raise ValueError("f is non-negative everywhere: no witness exists")
    Ns = members(Nm)
    e0, rest = Ns[0], Ns[1:]
    y = np.zeros(f.n)
    y[Ns] = 1.0
    fN = f.value(Nm)

    def pieces(eps):
        x = np.zeros(f.n)
        x[rest] = 1.0 - eps
        z = np.zeros(f.n)
        z[rest] = eps
        z[e0] = 1.0
        return x, F_exact(f, np.maximum(x, y)) - F_exact(f, x), F_exact(f, z)

    lo, hi = 0.0, 1.0
    for step in range(1, max_steps + 1):
        mid = 0.5 * (lo + hi)
        if pieces(mid)[2] > 0:
            lo = mid
        else:
            hi = mid
        x, num, den = pieces(lo)
        if den > 0 and num / den < -target:
            return DivergenceWitness(Ns, e0, lo, x, y, num, den, num / den, step)
    raise InvariantViolation(f"bisection did not reach ratio < -{target:g} (f(N') = {fN:.3g})")
