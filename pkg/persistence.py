from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Literal, Sequence, Tuple

import numpy as np

from complex_core import SimplicialComplex
from config import settings
from homology import betti
from random_models import WeightedComplexProcess


logger = logging.getLogger(__name__)


class UnsupportedCaseError(ValueError):
    """The requested lifetime formula does not apply to this process."""
    pass


StepMethod = Literal["incremental", "recompute"]


# -----------------------------
# Incremental rank structures
# -----------------------------


class UnionFind:
    """Union-find with path compression; counts successful merges."""

    def __init__(self, size: int):
        self.parents = list(range(size))
        self.merges = 0

    def find(self, elem: int) -> int:
        p = elem
        while p != self.parents[p]:
            p = self.parents[p]
        while elem != p:
            self.parents[elem], elem = p, self.parents[elem]
        return p

    def union(self, a: int, b: int) -> bool:
        p1, p2 = self.find(a), self.find(b)
        if p1 == p2:
            return False
        self.parents[p2] = p1
        self.merges += 1
        return True


class ColumnReducer:
    """
    Rank of a growing set of columns over F_p. Columns are sparse
    {row: coeff} dicts; each stored column is reduced with pivot = largest row,
    normalised to 1 there.
    """

    def __init__(self, p: int | None = None):
        self.p = p or settings.prime_modulus
        self.pivots: Dict[int, Dict[int, int]] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def add(self, column: Dict[int, int]) -> bool:
        p = self.p
        col = {r: c % p for r, c in column.items() if c % p}
        while col:
            low = max(col)
            other = self.pivots.get(low)
            if other is None:
                inv = pow(col[low], -1, p)
                self.pivots[low] = {r: (c * inv) % p for r, c in col.items()}
                return True
            factor = col[low]
            for r, c in other.items():
                v = (col.get(r, 0) - factor * c) % p
                if v:
                    col[r] = v
                else:
                    col.pop(r, None)
        return False


def _arrival_order(weights: np.ndarray) -> np.ndarray:
    """Position of each simplex when sorted by (weight, colex rank)."""
    m = weights.shape[0]
    order = np.empty(m, dtype=np.int64)
    order[np.lexsort((np.arange(m), weights))] = np.arange(m)
    return order


def _signed_column(facet_rows: Sequence[int]) -> Dict[int, int]:
    return {int(r): (-1 if i % 2 else 1) for i, r in enumerate(facet_rows)}


# -----------------------------
# Betti step functions
# -----------------------------


@dataclass(frozen=True)
class BettiStepFunction:
    """beta_k(X(t)) = values[i] on [times[i], times[i+1]); the last value holds on [times[-1], inf)."""

    k: int
    times: np.ndarray
    values: np.ndarray

    def value_at(self, t: float) -> int:
        if t < 0:
            return 0
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return int(self.values[max(idx, 0)])

    @property
    def terminal(self) -> int:
        return int(self.values[-1])

    def __len__(self) -> int:
        return len(self.times)


def _events(proc: WeightedComplexProcess, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Finite-weight k- and (k+1)-simplices sorted by (weight, dim, colex)."""
    ws, dims, ranks = [], [], []
    for dim in (k, k + 1):
        if dim > proc.max_dim:
            continue
        w = proc.weights[dim]
        finite = np.nonzero(np.isfinite(w))[0]
        ws.append(w[finite])
        dims.append(np.full(finite.shape[0], dim, dtype=np.int64))
        ranks.append(finite)
    w = np.concatenate(ws) if ws else np.zeros(0)
    d = np.concatenate(dims) if dims else np.zeros(0, dtype=np.int64)
    r = np.concatenate(ranks) if ranks else np.zeros(0, dtype=np.int64)
    order = np.lexsort((r, d, w))
    return w[order], d[order], r[order]


def _group_times(w: np.ndarray) -> List[Tuple[float, int, int]]:
    """(time, start, stop) blocks of equal weight."""
    if w.size == 0:
        return []
    cuts = np.nonzero(np.diff(w))[0] + 1
    starts = np.concatenate(([0], cuts))
    stops = np.concatenate((cuts, [w.size]))
    return [(float(w[a]), int(a), int(b)) for a, b in zip(starts, stops)]


def _steps_incremental(proc: WeightedComplexProcess, k: int) -> BettiStepFunction:
    w, dims, ranks = _events(proc, k)
    n = proc.n

    # rank d_k
    if k >= 2:
        reducer_k = ColumnReducer()
        rows_k = _arrival_order(proc.weights[k - 1])
        facets_k = proc.facet_ranks(k)
    uf_k = UnionFind(n) if k == 1 else None

    # rank d_{k+1}
    if k + 1 <= proc.max_dim:
        if k == 0:
            uf_up = UnionFind(n)
        else:
            reducer_up = ColumnReducer()
            rows_up = _arrival_order(proc.weights[k])
            facets_up = proc.facet_ranks(k + 1)

    f_k = 0
    rank_k = 0
    rank_up = 0
    times: List[float] = [0.0]
    values: List[int] = [0]
    for t, a, b in _group_times(w):
        for dim, r in zip(dims[a:b], ranks[a:b]):
            if dim == k:
                f_k += 1
                if k == 0:
                    rank_k = 1
                elif k == 1:
                    u, v = proc.simplices(1)[r]
                    rank_k += uf_k.union(int(u), int(v))
                else:
                    rank_k += reducer_k.add(_signed_column(rows_k[facets_k[r]]))
            else:
                # boundary already spans all present k-cycles: the column reduces to 0
                if rank_up == f_k - rank_k:
                    continue
                if k == 0:
                    u, v = proc.simplices(1)[r]
                    rank_up += uf_up.union(int(u), int(v))
                else:
                    rank_up += reducer_up.add(_signed_column(rows_up[facets_up[r]]))
        beta = f_k - rank_k - rank_up
        if t == 0.0:
            values[0] = beta
        else:
            times.append(t)
            values.append(beta)
    return BettiStepFunction(k, np.array(times), np.array(values, dtype=np.int64))


def _steps_recompute(proc: WeightedComplexProcess, k: int) -> BettiStepFunction:
    w, _, _ = _events(proc, k)
    times = sorted({0.0, *(float(x) for x in np.unique(w))})
    values = [betti(proc.snapshot(t), k) for t in times]
    return BettiStepFunction(k, np.array(times), np.array(values, dtype=np.int64))


def betti_steps(proc: WeightedComplexProcess, k: int, method: StepMethod = "incremental") -> BettiStepFunction:
    """
    beta_k along the filtration, evaluated after every arrival of a k- or
    (k+1)-simplex; arrivals in other dimensions cannot change beta_k.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k > proc.max_dim:
        raise UnsupportedCaseError(f"Process materialized up to dim {proc.max_dim}, cannot track beta_{k}")
    if k + 1 > proc.max_dim and k + 1 <= proc.n - 1:
        raise UnsupportedCaseError(f"beta_{k} needs dimension {k + 1} materialized")
    if method == "incremental":
        return _steps_incremental(proc, k)
    if method == "recompute":
        return _steps_recompute(proc, k)
    raise ValueError(f"Unknown method {method!r}")


# -----------------------------
# Lifetime sums
# -----------------------------


@dataclass
class LifetimeSummary:
    k: int
    L: float
    L_T: Dict[float, float] = field(default_factory=dict)
    L_alpha: Dict[float, float] = field(default_factory=dict)
    event_count: int = 0

    def to_record(self) -> Dict[str, object]:
        return {
            "k": self.k,
            "L_k": self.L,
            **{f"L_k_T={T:g}": v for T, v in self.L_T.items()},
            **{f"L_k_alpha={a:g}": v for a, v in self.L_alpha.items()},
            "event_count": self.event_count,
        }


def integrate_steps(steps: BettiStepFunction, T: float | None = None) -> float:
    """int_0^T beta_k dt (T = None for the full integral, +inf if beta stays positive)."""
    t = steps.times
    b = steps.values.astype(float)
    if T is None:
        if steps.terminal > 0:
            return math.inf
        return float(np.sum(b[:-1] * np.diff(t)))
    clipped = np.minimum(np.append(t, max(T, t[-1])), T)
    return float(np.sum(b * np.diff(clipped)))


def lifetime_sum(
    proc: WeightedComplexProcess,
    k: int,
    T: float | Iterable[float] | None = None,
    steps: BettiStepFunction | None = None,
) -> LifetimeSummary:
    """L_k = int_0^inf beta_k(X(t)) dt and the truncations (L_k)_T."""
    steps = steps or betti_steps(proc, k)
    Ts: List[float] = [] if T is None else ([float(T)] if isinstance(T, (int, float)) else [float(x) for x in T])
    summary = LifetimeSummary(k, integrate_steps(steps), event_count=len(steps) - 1)
    for T_ in Ts:
        summary.L_T[T_] = integrate_steps(steps, T_)
    return summary


def alpha_lifetime_sum(proc: WeightedComplexProcess, d: int, alpha: float, steps: BettiStepFunction | None = None) -> float:
    """
    L_{d-1}^{(alpha)} = sum of alpha-th powers of death times
    = sum_i beta_i (t_{i+1}^alpha - t_i^alpha). Needs every birth at 0.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    k = d - 1
    if k < 0 or k > proc.max_dim or np.any(proc.weights[k] != 0.0):
        raise UnsupportedCaseError(
            f"alpha-power lifetime sums need every {k}-simplex born at t = 0 (an lm({d}) process)"
        )
    steps = steps or betti_steps(proc, k)
    if steps.terminal > 0:
        return math.inf
    t = steps.times
    return float(np.sum(steps.values[:-1] * np.diff(t ** alpha)))


def kruskal_lifetimes(proc: WeightedComplexProcess) -> List[float]:
    """
    Death times of the reduced 0-th persistence intervals by Kruskal's
    algorithm; components still alive at the end die at +inf.
    """
    if np.any(proc.weights[0] != 0.0):
        raise UnsupportedCaseError("kruskal_lifetimes needs every vertex born at t = 0")
    n = proc.n
    uf = UnionFind(n)
    deaths: List[float] = []
    if proc.max_dim >= 1:
        w = proc.weights[1]
        edges = proc.simplices(1)
        for idx in np.argsort(w, kind="stable"):
            if not np.isfinite(w[idx]):
                break
            if uf.union(int(edges[idx, 0]), int(edges[idx, 1])):
                deaths.append(float(w[idx]))
    deaths.extend([math.inf] * (n - 1 - len(deaths)))
    return deaths


def snapshot(proc: WeightedComplexProcess, t: float) -> SimplicialComplex:
    return proc.snapshot(t)
