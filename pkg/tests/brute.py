"""Naive reference enumerators used as test oracles.

Everything here works on explicit subsets (frozensets / tuples) and plain
loops, so it shares no code path with the vectorized package routines.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from subcurv.objectives import CoverageFunction, CutFunction, GCLinFunction
from subcurv.oracle import DecomposableFunction, FunctionOracle, ModularFunction


def subsets(n):
    for r in range(n + 1):
        for c in itertools.combinations(range(n), r):
            yield frozenset(c)


def mask(S):
    return sum(1 << e for e in S)


def fval(f, S):
    return f.value(mask(S))


def naive_curvature(f):
    """4^n double loop over (X, Y); 0 when nothing is admissible."""
    n = f.n
    best = math.inf
    for X in subsets(n):
        for Y in subsets(n):
            d = fval(f, Y - X)
            if d > 0:
                best = min(best, (fval(f, X | Y) - fval(f, X)) / d)
    return 0.0 if best == math.inf else 1.0 - best


def naive_is_submodular(f, tol=1e-9):
    """Lattice form f(X u Y) + f(X n Y) <= f(X) + f(Y)."""
    all_sets = list(subsets(f.n))
    for X in all_sets:
        for Y in all_sets:
            if fval(f, X | Y) + fval(f, X & Y) > fval(f, X) + fval(f, Y) + tol:
                return False
    return True


def naive_is_monotone(f, tol=1e-9):
    for S in subsets(f.n):
        for e in range(f.n):
            if e not in S and fval(f, S | {e}) < fval(f, S) - tol:
                return False
    return True


def naive_opt(f, k):
    best, arg = -math.inf, []
    for S in subsets(f.n):
        if len(S) > k:
            continue
        v = fval(f, S)
        if v > best + 1e-9:
            best, arg = v, [S]
        elif abs(v - best) <= 1e-9:
            arg.append(S)
    return best, arg


def naive_F(f, x):
    total = 0.0
    for R in subsets(f.n):
        p = 1.0
        for i in range(f.n):
            p *= x[i] if i in R else 1.0 - x[i]
        total += p * fval(f, R)
    return total


def naive_CF(f):
    """max over j != l and every 0/1 corner of the other coordinates of |d_jl F|."""
    n = f.n
    best = 0.0
    for j, l in itertools.combinations(range(n), 2):
        others = [i for i in range(n) if i not in (j, l)]
        for bits in itertools.product((0.0, 1.0), repeat=len(others)):
            x = np.zeros(n)
            x[others] = bits
            vals = {}
            for a, b in itertools.product((0.0, 1.0), repeat=2):
                y = x.copy()
                y[j], y[l] = a, b
                vals[a, b] = naive_F(f, y)
            best = max(best, abs(vals[1, 1] - vals[1, 0] - vals[0, 1] + vals[0, 0]))
    return best


def naive_mixed_maxima(f):
    """M[r] = max |sum_{T sub R} (-1)^{|R-T|} f(S u T)| over |R| = r and S disjoint from R."""
    n = f.n
    M = [0.0] * (n + 1)
    for R in subsets(n):
        rest = [i for i in range(n) if i not in R]
        for bits in itertools.product((0, 1), repeat=len(rest)):
            S = frozenset(i for i, b in zip(rest, bits) if b)
            d = sum((-1) ** (len(R) - len(T)) * fval(f, S | T)
                    for r in range(len(R) + 1) for T in map(frozenset, itertools.combinations(R, r)))
            M[len(R)] = max(M[len(R)], abs(d))
    return M


def naive_total_curvature(f):
    N = frozenset(range(f.n))
    return 1.0 - min((fval(f, N) - fval(f, N - {e})) / fval(f, {e}) for e in range(f.n))


# ------------------------------------------------------------------ generators


def random_coverage(rng, n, m=None, p=0.35):
    m = m or 2 * n
    A = rng.random((n, m)) < p
    for i in range(n):
        if not A[i].any():
            A[i, rng.integers(m)] = True
    return CoverageFunction(A)


def random_submodular(rng, n):
    """Random submodular oracle with positive singletons, monotone or not."""
    kind = int(rng.integers(4))
    if kind == 0:
        g = random_coverage(rng, n)
        return DecomposableFunction(g, rng.uniform(0, 1.2, n) * np.array([g.value(1 << e) for e in range(n)]) * 0.8)
    if kind == 1:
        return random_coverage(rng, n)
    if kind == 2:
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < 0.4
        cut = CutFunction(n, list(zip(iu[keep].tolist(), ju[keep].tolist())))
        w = rng.uniform(0.2, 3.0, n)
        t = cut.table() + ModularFunction(w).table()
        return FunctionOracle(n, lambda S, t=t: t[S])
    S = rng.random((n, n))
    S = (S + S.T) / 2
    np.fill_diagonal(S, 1.0)
    return GCLinFunction(S, float(rng.uniform(0.05, 1.2)))
