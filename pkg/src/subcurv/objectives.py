"""Objective families and their seeded instance generators.

Three decomposable families (Bayesian A-optimal design, weighted-degree
coverage, Gaussian mutual-information feature selection) plus graph cut and
the GCLin relevance/redundancy objective.  Every generator draws all of its
randomness before the cost scale is applied, so one seed yields the same
``g`` at every cost level and only the modular part is rescaled.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import solve_triangular

from .oracle import (
    MAX_VECTOR_N,
    DecomposableFunction,
    ModularFunction,
    SetFunction,
    masks_to_bits,
    members,
)

FAMILIES = ("exp_design", "coverage", "feature_selection", "maxcut", "gclin")
DECOMPOSABLE = ("exp_design", "coverage", "feature_selection")

_CHUNK = 4096


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream used by every generator except MaxCut."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def maxcut_seed(seed: int, n: int, k: int) -> int:
    return int(seed) * 1000 + int(n) * 100 + int(k)


# --------------------------------------------------------------------------
# oracles


class BayesDesignGain(SetFunction):
    """Variance reduction tr(P) - tr((P^-1 + X_S^T X_S / s2)^-1)."""

    name = "exp_design"

    def __init__(self, X, sigma2: float = 1.0, prior=None):
        X = np.asarray(X, dtype=float)
        super().__init__(X.shape[0])
        d = X.shape[1]
        self.X = X
        self.sigma2 = float(sigma2)
        self.prior = np.eye(d) if prior is None else np.asarray(prior, dtype=float)
        self.prior_inv = np.linalg.inv(self.prior)
        self._tr_prior = float(np.trace(self.prior))
        self._outer = np.einsum("ni,nj->nij", X, X).reshape(X.shape[0], d * d) / self.sigma2

    def _value(self, S):
        idx = members(S)
        Xs = self.X[idx]
        M = self.prior_inv + Xs.T @ Xs / self.sigma2
        L = np.linalg.cholesky(M)
        Linv = solve_triangular(L, np.eye(len(M)), lower=True)
        return self._tr_prior - float(np.sum(Linv * Linv))

    def _values(self, masks):
        if self.n > MAX_VECTOR_N:
            return super()._values(masks)
        d = self.X.shape[1]
        out = np.empty(len(masks))
        eye = np.eye(d)
        for lo in range(0, len(masks), _CHUNK):
            bits = masks_to_bits(masks[lo:lo + _CHUNK], self.n).astype(float)
            M = self.prior_inv + (bits @ self._outer).reshape(-1, d, d)
            L = np.linalg.cholesky(M)
            Linv = np.linalg.solve(L, np.broadcast_to(eye, M.shape))
            out[lo:lo + _CHUNK] = self._tr_prior - np.sum(Linv * Linv, axis=(1, 2))
        return out


class CoverageFunction(SetFunction):
    """Number of items covered by at least one chosen vertex."""

    name = "coverage"
    cheap_table = True

    def __init__(self, incidence):
        inc = np.asarray(incidence, dtype=bool)
        super().__init__(inc.shape[0])
        self.incidence = inc
        self.m = inc.shape[1]
        self._sets = [sum(1 << int(j) for j in np.flatnonzero(row)) for row in inc]
        # 62-bit words so everything fits in int64
        W = max(1, -(-self.m // 62))
        words = np.zeros((self.n, W), dtype=np.int64)
        for v, s in enumerate(self._sets):
            for w in range(W):
                words[v, w] = (s >> (62 * w)) & ((1 << 62) - 1)
        self._words = words

    def _value(self, S):
        u = 0
        for e in members(S):
            u |= self._sets[e]
        return float(u.bit_count())

    def _values(self, masks):
        if self.n > MAX_VECTOR_N:
            return super()._values(masks)
        out = np.empty(len(masks))
        for lo in range(0, len(masks), _CHUNK):
            bits = masks_to_bits(masks[lo:lo + _CHUNK], self.n).astype(bool)
            sel = np.where(bits[:, :, None], self._words[None], 0)
            union = np.bitwise_or.reduce(sel, axis=1)
            out[lo:lo + _CHUNK] = np.bitwise_count(union).sum(axis=1)
        return out

    def _table_impl(self):
        t = np.zeros((1, self._words.shape[1]), dtype=np.int64)
        for j in range(self.n):
            t = np.concatenate([t, t | self._words[j]])
        return np.bitwise_count(t).sum(axis=1).astype(float)


class GaussianMIGain(SetFunction):
    """0.5 * logdet(I + Sigma_SS / s2)."""

    name = "feature_selection"

    def __init__(self, Sigma, sigma2: float = 1.0):
        Sigma = np.asarray(Sigma, dtype=float)
        super().__init__(Sigma.shape[0])
        self.Sigma = Sigma
        self.sigma2 = float(sigma2)

    def _value(self, S):
        idx = members(S)
        A = np.eye(len(idx)) + self.Sigma[np.ix_(idx, idx)] / self.sigma2
        sign, ld = np.linalg.slogdet(A)
        return 0.5 * ld

    def _values(self, masks):
        if self.n > MAX_VECTOR_N:
            return super()._values(masks)
        out = np.zeros(len(masks))
        bits = masks_to_bits(masks, self.n)
        sizes = bits.sum(axis=1)
        for s in np.unique(sizes):
            if s == 0:
                continue
            rows = np.flatnonzero(sizes == s)
            for lo in range(0, len(rows), _CHUNK):
                r = rows[lo:lo + _CHUNK]
                idx = np.nonzero(bits[r])[1].reshape(len(r), s)
                sub = self.Sigma[idx[:, :, None], idx[:, None, :]] / self.sigma2
                _, ld = np.linalg.slogdet(np.eye(s) + sub)
                out[r] = 0.5 * ld
        return out


class CutFunction(SetFunction):
    """Weighted cut |delta(S)| of an undirected graph."""

    name = "maxcut"
    cheap_table = True

    def __init__(self, n: int, edges, weights=None):
        super().__init__(n)
        edges = [(int(u), int(v)) for u, v in edges]
        for u, v in edges:
            if u == v:
                raise ValueError("self-loop")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge endpoint out of range")
        if len({(min(e), max(e)) for e in edges}) != len(edges):
            raise ValueError("duplicate edge")
        self.edges = edges
        self.weights = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=float)
        A = np.zeros((n, n))
        for (u, v), w in zip(edges, self.weights):
            A[u, v] = A[v, u] = w
        self.adj = A
        self._eu = np.array([e[0] for e in edges], dtype=np.int64)
        self._ev = np.array([e[1] for e in edges], dtype=np.int64)

    def _value(self, S):
        return float(sum(w for (u, v), w in zip(self.edges, self.weights)
                         if ((S >> u) & 1) != ((S >> v) & 1)))

    def _values(self, masks):
        if self.n > MAX_VECTOR_N or not self.edges:
            return super()._values(masks) if self.edges else np.zeros(len(masks))
        out = np.empty(len(masks))
        for lo in range(0, len(masks), _CHUNK):
            b = masks_to_bits(masks[lo:lo + _CHUNK], self.n)
            out[lo:lo + _CHUNK] = (b[:, self._eu] != b[:, self._ev]) @ self.weights
        return out

    def _table_impl(self):
        deg = self.adj.sum(axis=1)
        t = np.zeros(1)
        for j in range(self.n):
            inner = ModularFunction(self.adj[j, :j])._table_impl() if j else np.zeros(1)
            t = np.concatenate([t, t + deg[j] - 2.0 * inner])
        return t


class GCLinFunction(SetFunction):
    """f(S) = R(S) - lam * D(S) with uniform query weights.

    R(S) = sum_{i in N} sum_{j in S} s_ij, D(S) = sum over ordered pairs i != j in S.
    """

    name = "gclin"
    cheap_table = True

    def __init__(self, S, lam: float):
        S = np.asarray(S, dtype=float)
        super().__init__(S.shape[0])
        self.sim = S
        self.lam = float(lam)
        self.relevance = S.sum(axis=0)
        self._off = S - np.diag(np.diag(S))

    def _value(self, S):
        idx = members(S)
        sub = self._off[np.ix_(idx, idx)]
        return float(self.relevance[idx].sum() - self.lam * sub.sum())

    def _values(self, masks):
        if self.n > MAX_VECTOR_N:
            return super()._values(masks)
        b = masks_to_bits(masks, self.n).astype(float)
        return b @ self.relevance - self.lam * np.einsum("mi,ij,mj->m", b, self._off, b)

    def _table_impl(self):
        t = np.zeros(1)
        for j in range(self.n):
            inner = ModularFunction(self._off[j, :j])._table_impl() if j else np.zeros(1)
            t = np.concatenate([t, t + self.relevance[j] - 2.0 * self.lam * inner])
        return t


# --------------------------------------------------------------------------
# instances


@dataclass
class ExpDesignInstance:
    X: np.ndarray
    sigma2: float
    prior: np.ndarray
    costs: np.ndarray
    unit_costs: np.ndarray
    kappa_target: float
    cost_scale: float = 0.0
    seed: int = 0
    objective: str = field(default="exp_design", init=False)

    @property
    def n(self):
        return self.X.shape[0]

    def gain(self) -> BayesDesignGain:
        return BayesDesignGain(self.X, self.sigma2, self.prior)


@dataclass
class CoverageInstance:
    adjacency: np.ndarray
    costs: np.ndarray
    unit_costs: np.ndarray
    p_edge: float = 0.2
    cost_scale: float = 0.0
    seed: int = 0
    objective: str = field(default="coverage", init=False)

    @property
    def n(self):
        return self.adjacency.shape[0]

    def gain(self) -> CoverageFunction:
        return CoverageFunction(self.adjacency)


@dataclass
class FeatureSelInstance:
    Sigma: np.ndarray
    sigma2: float
    costs: np.ndarray
    unit_costs: np.ndarray
    groups: int = 4
    rho_within: float = 0.7
    pd_shift: float = 0.0
    cost_scale: float = 0.0
    seed: int = 0
    objective: str = field(default="feature_selection", init=False)

    @property
    def n(self):
        return self.Sigma.shape[0]

    def gain(self) -> GaussianMIGain:
        return GaussianMIGain(self.Sigma, self.sigma2)


@dataclass
class GraphInstance:
    n: int
    edges: list
    family: str
    k: int = 0
    seed: int = 0
    rng_seed: int = 0
    objective: str = field(default="maxcut", init=False)


@dataclass
class GCLinInstance:
    S: np.ndarray
    lam: float
    seed: int = 0
    objective: str = field(default="gclin", init=False)

    @property
    def n(self):
        return self.S.shape[0]


def build_oracle(inst) -> SetFunction:
    """Oracle for any instance dataclass (decomposable families get g - costs)."""
    if inst.objective in DECOMPOSABLE:
        return DecomposableFunction(inst.gain(), inst.costs)
    if inst.objective == "maxcut":
        return CutFunction(inst.n, inst.edges)
    if inst.objective == "gclin":
        return GCLinFunction(inst.S, inst.lam)
    raise ValueError(f"unknown objective {inst.objective!r}")


# --------------------------------------------------------------------------
# generators


def _random_orthonormal(rng, rows, cols):
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.sign(np.diag(R))


def gen_exp_design(seed: int, n: int = 20, d: int = 5, kappa: float = 5.0,
                   cost_scale: float = 0.0, sigma2: float = 1.0):
    """X = U diag(s) V^T with s linearly spaced in [1, sqrt(kappa)]; costs follow row norms."""
    if not (n >= d >= 1):
        raise ValueError("need n >= d >= 1")
    if kappa < 1 or cost_scale < 0:
        raise ValueError("need kappa >= 1 and cost_scale >= 0")
    rng = make_rng(seed)
    U = _random_orthonormal(rng, n, d)
    V = _random_orthonormal(rng, d, d)
    s = np.linspace(1.0, np.sqrt(kappa), d)
    X = U @ np.diag(s) @ V.T
    norms = np.linalg.norm(X, axis=1)
    unit = norms / norms.mean()
    inst = ExpDesignInstance(X, sigma2, np.eye(d), cost_scale * unit, unit, kappa, cost_scale, seed)
    return build_oracle(inst), inst


def gen_coverage(seed: int, n: int = 20, m: int = 40, p_edge: float = 0.2,
                 cost_scale: float = 0.0):
    """Bipartite vertex/item incidence; costs proportional to normalized degree."""
    if not 0.0 <= p_edge <= 1.0:
        raise ValueError("p_edge must lie in [0, 1]")
    if cost_scale < 0:
        raise ValueError("cost_scale must be >= 0")
    rng = make_rng(seed)
    adj = rng.random((n, m)) < p_edge
    deg = adj.sum(axis=1).astype(float)
    unit = deg / deg.mean() if deg.mean() > 0 else np.zeros(n)
    inst = CoverageInstance(adj, cost_scale * unit, unit, p_edge, cost_scale, seed)
    return build_oracle(inst), inst


def gen_feature_selection(seed: int, p: int = 20, groups: int = 4, rho_within: float = 0.7,
                          sigma2: float = 1.0, cost_scale: float = 0.0, noise: float = 0.05):
    """Grouped covariance with small symmetric cross noise; noisy unit costs."""
    if groups < 1 or p % groups:
        raise ValueError("p must split evenly into groups")
    if not 0.0 <= rho_within < 1.0:
        raise ValueError("rho_within must lie in [0, 1)")
    rng = make_rng(seed)
    label = np.repeat(np.arange(groups), p // groups)
    Sigma = np.where(label[:, None] == label[None, :], rho_within, 0.0)
    np.fill_diagonal(Sigma, 1.0)
    Z = noise * rng.standard_normal((p, p))
    Sigma = Sigma + (Z + Z.T) / 2
    lam_min = np.linalg.eigvalsh(Sigma)[0]
    shift = 0.0
    if lam_min <= 0:
        shift = abs(lam_min) + 0.05
        Sigma = Sigma + shift * np.eye(p)
    if np.linalg.eigvalsh(Sigma)[0] <= 0:
        raise ValueError("covariance not positive definite after shift; try another seed")
    eps = rng.standard_normal(p)
    unit = np.maximum(1.0 + 0.3 * eps, 0.01)
    inst = FeatureSelInstance(Sigma, sigma2, cost_scale * unit, unit, groups, rho_within,
                              shift, cost_scale, seed)
    return build_oracle(inst), inst


PLANTED_P = {
    (0, 0): 0.8, (1, 1): 0.2, (2, 2): 0.3,
    (0, 1): 0.3, (0, 2): 0.4, (1, 2): 0.4,
}


def gen_maxcut(seed: int, n: int, k: int, family: str = "planted"):
    """Planted-distractor SBM (A, B of size k, C the rest) or G(n, 0.3).

    numpy RandomState seeded with seed*1000 + n*100 + k; one uniform draw
    per vertex pair in upper-triangle row-major order.
    """
    if family not in ("planted", "erdos_renyi"):
        raise ValueError(f"unknown graph family {family!r}")
    if family == "planted" and n < 2 * k:
        raise ValueError("planted family needs n >= 2k")
    rs = maxcut_seed(seed, n, k)
    rng = np.random.RandomState(rs)
    iu, ju = np.triu_indices(n, 1)
    draws = rng.random_sample(len(iu))
    if family == "planted":
        comm = np.array([0] * k + [1] * k + [2] * (n - 2 * k))
        a, b = np.minimum(comm[iu], comm[ju]), np.maximum(comm[iu], comm[ju])
        prob = np.array([PLANTED_P[(x, y)] for x, y in zip(a, b)])
    else:
        prob = np.full(len(iu), 0.3)
    keep = draws < prob
    edges = [(int(u), int(v)) for u, v in zip(iu[keep], ju[keep])]
    inst = GraphInstance(n, edges, family, k, seed, rs)
    return build_oracle(inst), inst


def gen_gclin(seed: int, n: int, lam: float):
    """Uniform [0,1] similarities, symmetrized, unit diagonal."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    rng = make_rng(seed)
    A = rng.random((n, n))
    S = (A + A.T) / 2
    np.fill_diagonal(S, 1.0)
    inst = GCLinInstance(S, lam, seed)
    return build_oracle(inst), inst


def with_cost_scale(inst, cost_scale: float):
    """Copy of a decomposable instance at another cost scale (same g)."""
    import copy
    new = copy.copy(inst)
    new.cost_scale = float(cost_scale)
    new.costs = cost_scale * inst.unit_costs
    return new


# --------------------------------------------------------------------------
# analytic CC curvature


def analytic_alpha(inst) -> float:
    if inst.objective == "exp_design":
        M = inst.X.T @ inst.X / inst.sigma2 + np.linalg.inv(inst.prior)
        ev = np.linalg.eigvalsh(M)
        return float(1.0 - ev[0] / ev[-1])
    if inst.objective == "coverage":
        return 1.0
    if inst.objective == "feature_selection":
        ev = np.linalg.eigvalsh(np.eye(inst.n) + inst.Sigma / inst.sigma2)
        return float(1.0 - ev[0] / ev[-1])
    raise ValueError(f"no analytic alpha for {inst.objective!r}")


# --------------------------------------------------------------------------
# JSON


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def instance_to_json(inst) -> dict[str, Any]:
    o = inst.objective
    if o == "exp_design":
        params = {"sigma2": inst.sigma2, "kappa": inst.kappa_target, "d": inst.X.shape[1],
                  "cost_scale": inst.cost_scale, "unit_costs": _arr(inst.unit_costs)}
        mats = {"X": _arr(inst.X), "prior": _arr(inst.prior)}
        costs = _arr(inst.costs)
    elif o == "coverage":
        params = {"m": int(inst.adjacency.shape[1]), "p_edge": inst.p_edge,
                  "cost_scale": inst.cost_scale, "unit_costs": _arr(inst.unit_costs)}
        mats = {"adjacency": inst.adjacency.astype(int).tolist()}
        costs = _arr(inst.costs)
    elif o == "feature_selection":
        params = {"sigma2": inst.sigma2, "groups": inst.groups, "rho_within": inst.rho_within,
                  "pd_shift": inst.pd_shift, "cost_scale": inst.cost_scale,
                  "unit_costs": _arr(inst.unit_costs)}
        mats = {"Sigma": _arr(inst.Sigma)}
        costs = _arr(inst.costs)
    elif o == "maxcut":
        params = {"family": inst.family, "k": inst.k, "rng_seed": inst.rng_seed}
        mats = {"edges": [list(e) for e in inst.edges]}
        costs = None
    elif o == "gclin":
        params = {"lambda": inst.lam}
        mats = {"S": _arr(inst.S)}
        costs = None
    else:
        raise ValueError(f"unknown objective {o!r}")
    return {"objective": o, "n": int(inst.n), "params": params, "matrices": mats,
            "costs": costs, "seed": int(inst.seed)}


def instance_from_json(d: dict[str, Any]):
    o, p, m = d["objective"], d.get("params", {}), d.get("matrices", {})
    seed = int(d.get("seed", 0))
    if o == "exp_design":
        X = np.array(m["X"], dtype=float)
        prior = np.array(m.get("prior", np.eye(X.shape[1])), dtype=float)
        costs = np.array(d["costs"] if d.get("costs") is not None else np.zeros(len(X)), dtype=float)
        unit = np.array(p.get("unit_costs", costs), dtype=float)
        inst = ExpDesignInstance(X, float(p.get("sigma2", 1.0)), prior, costs, unit,
                                 float(p.get("kappa", 0.0)), float(p.get("cost_scale", 0.0)), seed)
    elif o == "coverage":
        A = np.array(m["adjacency"], dtype=bool)
        costs = np.array(d["costs"] if d.get("costs") is not None else np.zeros(len(A)), dtype=float)
        unit = np.array(p.get("unit_costs", costs), dtype=float)
        inst = CoverageInstance(A, costs, unit, float(p.get("p_edge", 0.0)),
                                float(p.get("cost_scale", 0.0)), seed)
    elif o == "feature_selection":
        Sigma = np.array(m["Sigma"], dtype=float)
        costs = np.array(d["costs"] if d.get("costs") is not None else np.zeros(len(Sigma)), dtype=float)
        unit = np.array(p.get("unit_costs", costs), dtype=float)
        inst = FeatureSelInstance(Sigma, float(p.get("sigma2", 1.0)), costs, unit,
                                  int(p.get("groups", 1)), float(p.get("rho_within", 0.0)),
                                  float(p.get("pd_shift", 0.0)), float(p.get("cost_scale", 0.0)), seed)
    elif o == "maxcut":
        inst = GraphInstance(int(d["n"]), [tuple(e) for e in m.get("edges", [])],
                             p.get("family", "custom"), int(p.get("k", 0)), seed,
                             int(p.get("rng_seed", 0)))
    elif o == "gclin":
        inst = GCLinInstance(np.array(m["S"], dtype=float), float(p["lambda"]), seed)
    else:
        raise ValueError(f"unknown objective {o!r}")
    if int(d["n"]) != inst.n:
        raise ValueError(f"declared n={d['n']} does not match matrices (n={inst.n})")
    return inst
