from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Tuple

import networkx as nx
import numpy as np

from complex_core import SimplicialComplex, Simplex, make_simplex, to_graph
from config import settings


logger = logging.getLogger(__name__)


class WalkBudgetError(RuntimeError):
    """Closed-walk enumeration requested beyond the configured length cap."""
    pass


GraphLike = SimplicialComplex | nx.Graph


def _as_graph(G: GraphLike) -> nx.Graph:
    if isinstance(G, nx.Graph):
        return G
    return to_graph(G)


# -----------------------------
# Spectra
# -----------------------------


def _gamma(eigenvalues: Tuple[float, ...], alpha: float, tol: float | None = None) -> int:
    if not eigenvalues:
        return 0
    tol = settings.eigen_tol if tol is None else tol
    return sum(1 for lam in eigenvalues if lam <= alpha + tol) - 1


@dataclass(frozen=True)
class SpectrumReport:
    """
    Eigenvalues of the random-walk Laplacian I - A[G], ascending.

    Isolated vertices contribute an eigenvalue 0 each (a_vv = 1).
    """

    eigenvalues: Tuple[float, ...]
    n_components: int
    gammas: Mapping[float, int] = field(default_factory=dict, hash=False)

    @property
    def n_vertices(self) -> int:
        return len(self.eigenvalues)

    @property
    def spectral_gap(self) -> float:
        if len(self.eigenvalues) <= 1:
            return 0.0
        return self.eigenvalues[1]

    def gamma(self, alpha: float, tol: float | None = None) -> int:
        return _gamma(self.eigenvalues, alpha, tol)

    def zero_multiplicity(self, tol: float | None = None) -> int:
        tol = settings.eigen_tol if tol is None else tol
        return sum(1 for lam in self.eigenvalues if abs(lam) <= tol)


def laplacian_spectrum(G: GraphLike, alphas: Iterable[float] = ()) -> SpectrumReport:
    """
    Spectrum of L[G] = I - A[G] through the symmetric normalized Laplacian
    I - D^{-1/2} W D^{-1/2}, which is similar to it.
    """
    graph = _as_graph(G)
    if graph.number_of_nodes() == 0:
        return SpectrumReport((), 0, MappingProxyType({a: 0 for a in alphas}))
    if graph.number_of_edges() == 0:
        lams = np.zeros(graph.number_of_nodes())
    else:
        L = nx.normalized_laplacian_matrix(graph, nodelist=sorted(graph.nodes)).toarray()
        lams = np.linalg.eigvalsh(L)
    eigenvalues = tuple(float(x) for x in np.clip(np.sort(lams), 0.0, 2.0))
    gammas = MappingProxyType({a: _gamma(eigenvalues, a) for a in alphas})
    return SpectrumReport(eigenvalues, nx.number_connected_components(graph), gammas)


def gamma_count(G: GraphLike, alpha: float) -> int:
    """gamma(G; alpha) = #{i | lambda_i <= alpha} - 1, and 0 for the empty graph."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return laplacian_spectrum(G).gamma(alpha)


def averaging_eigencount(G: GraphLike, alpha: float) -> int:
    """#{i | mu_i >= alpha} for the eigenvalues mu = 1 - lambda of A[G]."""
    tol = settings.eigen_tol
    return sum(1 for lam in laplacian_spectrum(G).eigenvalues if 1.0 - lam >= alpha - tol)


def link_trace_check(G: GraphLike) -> bool:
    """Trace of L[G] equals the number of non-isolated vertices."""
    graph = _as_graph(G)
    non_isolated = sum(1 for v in graph.nodes if graph.degree(v) > 0)
    total = sum(laplacian_spectrum(graph).eigenvalues)
    return abs(total - non_isolated) <= 1e-8 * max(1, non_isolated)


# -----------------------------
# Links and the Betti upper bound
# -----------------------------


def link_graph(X: SimplicialComplex, tau: Simplex) -> nx.Graph:
    """1-skeleton of lk_X(tau), built from the cofaces of tau."""
    tau = make_simplex(tau)
    if not tau:
        return to_graph(X)
    tau_set = set(tau)
    G = nx.Graph()
    for rho in X.cofaces(tau):
        rest = [v for v in rho if v not in tau_set]
        if len(rest) == 1:
            G.add_node(rest[0])
        elif len(rest) == 2:
            G.add_edge(*rest)
    return G


@dataclass(frozen=True)
class BoundReport:
    D: int
    alpha: float
    bound: int
    breakdown: Dict[Simplex, int]


def gamma_sum(X: SimplicialComplex, D: int, alpha: float) -> BoundReport:
    """sum over tau in X_{D-2} of gamma(lk_X(tau)^{(1)}; alpha)."""
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    breakdown: Dict[Simplex, int] = {}
    if not X.is_empty():
        for tau in X.simplices(D - 2):
            breakdown[tau] = gamma_count(link_graph(X, tau), alpha)
    return BoundReport(D, alpha, sum(breakdown.values()), breakdown)


def betti_upper_bound(X: SimplicialComplex, D: int) -> BoundReport:
    """beta_{D-1}(X) <= sum_{tau in X_{D-2}} gamma(lk_X(tau)^{(1)}; 1 - 1/D)."""
    return gamma_sum(X, D, 1.0 - 1.0 / D)


def vanishing_check(X: SimplicialComplex, D: int) -> bool:
    """lambda_2[lk_X(tau)] > 1 - 1/D for every tau in X_{D-2}."""
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    threshold = 1.0 - 1.0 / D
    if X.is_empty():
        return True
    return all(
        laplacian_spectrum(link_graph(X, tau)).spectral_gap > threshold + settings.eigen_tol
        for tau in X.simplices(D - 2)
    )


# -----------------------------
# Closed walks on complete graphs
# -----------------------------


@lru_cache(maxsize=None)
def _closed_walk_table(l: int) -> Dict[Tuple[int, int], int]:
    """
    Closed walks of length 2l with distinct consecutive vertices, up to
    relabelling: vertices are named in order of first appearance, so each
    orbit of the symmetric group is counted once.
    """
    h = 2 * l
    table: Dict[Tuple[int, int], int] = {}

    def walk(step: int, current: int, n_labels: int, edges: frozenset) -> None:
        if step == h - 1:
            # last step must return to 0
            if current != 0:
                e = edges | {(0, current)}
                key = (n_labels, len(e))
                table[key] = table.get(key, 0) + 1
            return
        for nxt in range(n_labels + 1):
            if nxt == current:
                continue
            edge = (min(current, nxt), max(current, nxt))
            walk(step + 1, nxt, max(n_labels, nxt + 1), edges | {edge})

    walk(0, 0, 1, frozenset())
    return table


def closed_walk_counts(l: int, v: int, e: int) -> int:
    """w_{2l}^{v,e} = #W_{2l}^{v,e}(K_v) / v!."""
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    if l > settings.walk_max_l:
        raise WalkBudgetError(
            f"Closed-walk enumeration capped at l={settings.walk_max_l}, got l={l}"
        )
    return _closed_walk_table(l).get((v, e), 0)


def er_eigencount_bound(n: int, p: float, alpha: float, l: int) -> float:
    """
    Upper bound on E[#{i | mu_i >= alpha}] for the averaging matrix of G(n, p).
    """
    if n < 2 * l:
        raise ValueError(f"Need n >= 2l, got n={n}, l={l}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    h = 2 * l
    walks = math.fsum(
        closed_walk_counts(l, v, e) * float(n) ** v * p ** e
        for v in range(1, h + 1)
        for e in range(max(1, v - 1), h + 1)
    )
    head = math.factorial(h) / (alpha ** h * float(n - h + 1) ** h * p ** h) * walks
    tail = n * (1.0 - p) ** (n - 1) / alpha ** h
    return head + tail


# -----------------------------
# Erdos-Renyi probes
# -----------------------------


def _er_graphs(n: int, p: float, trials: int, seed: int) -> Iterable[nx.Graph]:
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        yield nx.gnp_random_graph(n, p, seed=int(rng.integers(2**32)))


def spectral_gap_probe(n: int, p: float, eps: float, trials: int, seed: int) -> float:
    """Empirical frequency of lambda_2[G] > 1 - eps over G(n, p) samples."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = sum(
        1 for G in _er_graphs(n, p, trials, seed)
        if laplacian_spectrum(G).spectral_gap > 1.0 - eps
    )
    freq = hits / trials
    logger.debug("spectral_gap_probe n=%d p=%.4f eps=%.3f -> %.4f", n, p, eps, freq)
    return freq


def er_eigencount_mean(n: int, p: float, alpha: float, trials: int, seed: int) -> float:
    """Monte Carlo side of er_eigencount_bound."""
    counts = [averaging_eigencount(G, alpha) for G in _er_graphs(n, p, trials, seed)]
    return float(np.mean(counts))
