"""Ground sets, bitmask subsets and value oracles.

Subsets are plain Python ints: bit ``i`` set means element ``i`` is in the
set.  This keeps the exact enumerators cheap and lets the vectorized paths
hand whole arrays of masks to numpy.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

TAU_SUB = 1e-9
MAX_EXACT_N = 24
MAX_CHECK_N = 16
# numpy masks are int64; anything wider stays on the scalar path
MAX_VECTOR_N = 62


class InfeasibleError(ValueError):
    """Raised when an exact enumeration is requested on too large a ground set."""


class InvariantViolation(RuntimeError):
    """A proven structural property failed at runtime (a bug, not bad input)."""


# --------------------------------------------------------------------------
# subset helpers


def mask_of(elems: Iterable[int]) -> int:
    m = 0
    for e in elems:
        m |= 1 << int(e)
    return m


def members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def full_mask(n: int) -> int:
    return (1 << n) - 1


def masks_to_bits(masks: np.ndarray, n: int) -> np.ndarray:
    """(m,) int masks -> (m, n) 0/1 matrix."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.int8)


def bits_to_masks(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    return bits @ (np.int64(1) << np.arange(bits.shape[1], dtype=np.int64))


def masks_upto(n: int, k: int) -> np.ndarray:
    """All masks over n elements with popcount <= k, ordered by size then lexicographically."""
    out = [0]
    for size in range(1, min(k, n) + 1):
        for c in combinations(range(n), size):
            out.append(mask_of(c))
    return np.array(out, dtype=np.int64)


@dataclass(frozen=True)
class GroundSet:
    n: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("ground set must be non-empty")
        if self.labels is not None and len(self.labels) != self.n:
            raise ValueError("labels must have one entry per element")

    def label(self, e: int) -> str:
        return self.labels[e] if self.labels else str(e)


# --------------------------------------------------------------------------
# oracles


class SetFunction:
    """Value oracle f: 2^N -> R with f(empty) = 0.

    Subclasses implement ``_value`` and may override ``_values`` with a
    vectorized version.  Values are memoized; ``eval_count`` counts every
    query, cached or not, so it reflects the algorithm's oracle complexity.
    """

    name = "set_function"
    # True when the whole 2^n table is cheap enough to be the preferred path
    cheap_table = False

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = int(n)
        self._count = 0
        self._lock = threading.Lock()
        self._cache: dict[int, float] = {}
        self._table: np.ndarray | None = None

    # -- counting
    @property
    def eval_count(self) -> int:
        return self._count

    def _bump(self, k: int = 1) -> None:
        with self._lock:
            self._count += k

    def reset_count(self) -> None:
        with self._lock:
            self._count = 0

    # -- evaluation
    def _check(self, S: int) -> None:
        if S < 0 or S >> self.n:
            raise ValueError(f"subset {S:#x} is not over a ground set of size {self.n}")

    def value(self, S: int) -> float:
        S = int(S)
        self._check(S)
        self._bump()
        if S == 0:
            return 0.0
        if self._table is not None:
            return float(self._table[S])
        v = self._cache.get(S)
        if v is None:
            v = float(self._value(S))
            self._cache[S] = v
        return v

    __call__ = value

    def values(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if masks.size and (masks.min() < 0 or (masks.max() >> self.n)):
            raise ValueError("subset outside ground set")
        self._bump(len(masks))
        if self._table is not None:
            return self._table[masks].astype(float)
        out = np.empty(len(masks))
        missing = []
        for idx, m in enumerate(masks.tolist()):
            v = self._cache.get(m)
            if v is None:
                missing.append(idx)
            else:
                out[idx] = v
        if missing:
            miss = masks[missing]
            vals = np.asarray(self._values(miss), dtype=float)
            vals[miss == 0] = 0.0
            out[missing] = vals
            self._cache.update(zip(miss.tolist(), vals.tolist()))
        return out

    def marginal(self, e: int, S: int) -> float:
        if (S >> e) & 1:
            return 0.0
        return self.value(S | (1 << e)) - self.value(S)

    def table(self) -> np.ndarray:
        """All 2^n values indexed by mask (n <= 24)."""
        if self._table is None:
            if self.n > MAX_EXACT_N:
                raise InfeasibleError(f"2^{self.n} table infeasible (n > {MAX_EXACT_N})")
            t = np.asarray(self._table_impl(), dtype=float)
            t[0] = 0.0
            self._table = t
        return self._table

    # -- subclass hooks
    def _value(self, S: int) -> float:
        raise NotImplementedError

    def _values(self, masks: np.ndarray) -> np.ndarray:
        return np.array([self._value(int(m)) for m in masks], dtype=float)

    def _table_impl(self) -> np.ndarray:
        size = 1 << self.n
        out = np.empty(size)
        step = 1 << 16
        for lo in range(0, size, step):
            out[lo:lo + step] = self._values(np.arange(lo, min(size, lo + step), dtype=np.int64))
        return out

    def to_dict(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no JSON form")


class ModularFunction(SetFunction):
    name = "modular"
    cheap_table = True

    def __init__(self, weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        super().__init__(len(w))
        self.weights = w

    def _value(self, S):
        return float(sum(self.weights[e] for e in members(S)))

    def _values(self, masks):
        if self.n > MAX_VECTOR_N:
            return super()._values(masks)
        return masks_to_bits(masks, self.n) @ self.weights

    def _table_impl(self):
        t = np.zeros(1)
        for j in range(self.n):
            t = np.concatenate([t, t + self.weights[j]])
        return t


class TableFunction(SetFunction):
    """Oracle backed by an explicit 2^n value table."""

    name = "table"
    cheap_table = True

    def __init__(self, table: Sequence[float]):
        t = np.asarray(table, dtype=float)
        n = int(np.log2(len(t)))
        if 1 << n != len(t):
            raise ValueError("table length must be a power of two")
        if t[0] != 0.0:
            raise ValueError("f(empty) must be 0")
        super().__init__(n)
        self._raw = t

    def _value(self, S):
        return float(self._raw[S])

    def _values(self, masks):
        return self._raw[masks]

    def _table_impl(self):
        return self._raw.copy()


class FunctionOracle(SetFunction):
    """Wrap a plain callable ``fn(mask) -> float``; f(empty) is forced to 0."""

    name = "callable"

    def __init__(self, n: int, fn: Callable[[int], float]):
        super().__init__(n)
        self._fn = fn

    def _value(self, S):
        return float(self._fn(S))


class RestrictedFunction(SetFunction):
    """f restricted to a subset of the ground set, relabelled 0..len(keep)-1."""

    name = "restricted"

    def __init__(self, base: SetFunction, keep: Sequence[int]):
        keep = [int(e) for e in keep]
        if not keep:
            raise ValueError("restriction to an empty ground set")
        super().__init__(len(keep))
        self.base = base
        self.keep = keep
        self.cheap_table = base.cheap_table

    def lift(self, S: int) -> int:
        return mask_of(self.keep[i] for i in members(S))

    def _value(self, S):
        return self.base.value(self.lift(S))

    def _values(self, masks):
        if self.base.n <= MAX_VECTOR_N and self.n <= MAX_VECTOR_N:
            bits = masks_to_bits(masks, self.n).astype(np.int64)
            lifted = bits @ (np.int64(1) << np.array(self.keep, dtype=np.int64))
            return self.base.values(lifted)
        return super()._values(masks)


class DecomposableFunction(SetFunction):
    """f(S) = g(S) - sum_{j in S} costs[j] with g monotone submodular, costs >= 0."""

    name = "decomposable"

    def __init__(self, g: SetFunction, costs: Sequence[float]):
        c = np.asarray(costs, dtype=float)
        if c.shape != (g.n,):
            raise ValueError("costs must have one entry per element")
        if np.any(c < 0):
            raise ValueError("costs must be non-negative")
        super().__init__(g.n)
        self.g = g
        self.costs = c
        self.cheap_table = g.cheap_table

    def cost(self, S: int) -> float:
        return float(sum(self.costs[e] for e in members(S)))

    def _value(self, S):
        return self.g.value(S) - self.cost(S)

    def _values(self, masks):
        if self.n > MAX_VECTOR_N:
            return super()._values(masks)
        return self.g.values(masks) - masks_to_bits(masks, self.n) @ self.costs

    def _table_impl(self):
        lin = ModularFunction(self.costs)._table_impl()
        return self.g.table() - lin

    def with_costs(self, costs: Sequence[float]) -> "DecomposableFunction":
        """Same g (and its cache), different cost vector."""
        return DecomposableFunction(self.g, costs)


# --------------------------------------------------------------------------
# module-level helpers


def value(f: SetFunction, S: int) -> float:
    return f.value(S)


def marginal(f: SetFunction, e: int, S: int) -> float:
    """f(S + e) - f(S); zero when e is already in S."""
    return f.marginal(e, S)


@dataclass
class SubmodularityCheck:
    ok: bool
    worst_violation: float = 0.0
    # (S, x, e): Delta(e | S) < Delta(e | S + x)
    witness: tuple[int, int, int] | None = None

    def __bool__(self):
        return self.ok


def _require_small(f: SetFunction, limit: int = MAX_CHECK_N) -> None:
    if f.n > limit:
        raise InfeasibleError(f"exact check infeasible for n={f.n} (limit {limit})")


def check_submodular(f: SetFunction, tol: float = TAU_SUB) -> SubmodularityCheck:
    """Exhaustive diminishing-returns test Delta(e|S) >= Delta(e|S+x)."""
    _require_small(f)
    t = f.table()
    n = f.n
    idx = np.arange(1 << n, dtype=np.int64)
    worst, witness = 0.0, None
    for e in range(n):
        be = 1 << e
        for x in range(n):
            if x == e:
                continue
            bx = 1 << x
            S = idx[(idx & (be | bx)) == 0]
            gap = (t[S | bx | be] - t[S | bx]) - (t[S | be] - t[S])
            j = int(np.argmax(gap))
            if gap[j] > worst:
                worst, witness = float(gap[j]), (int(S[j]), x, e)
    return SubmodularityCheck(worst <= tol, worst, witness if worst > tol else None)


def check_monotone(f: SetFunction, tol: float = TAU_SUB) -> bool:
    _require_small(f)
    t = f.table()
    idx = np.arange(1 << f.n, dtype=np.int64)
    for e in range(f.n):
        S = idx[(idx >> e) & 1 == 0]
        if np.min(t[S | (1 << e)] - t[S]) < -tol:
            return False
    return True


def singletons(f: SetFunction) -> np.ndarray:
    return np.array([f.value(1 << e) for e in range(f.n)])


def drop_nonpositive_singletons(f: SetFunction) -> tuple[SetFunction, list[int]]:
    """Remove elements with f({e}) <= 0.  Returns (restricted f, removed ids)."""
    s = singletons(f)
    removed = [e for e in range(f.n) if s[e] <= 0]
    if not removed:
        return f, []
    keep = [e for e in range(f.n) if s[e] > 0]
    return RestrictedFunction(f, keep), removed
