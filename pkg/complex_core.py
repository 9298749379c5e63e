from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

import networkx as nx


Simplex = Tuple[int, ...]

# The unique (-1)-simplex
EMPTY_SIMPLEX: Simplex = ()


class MalformedSimplexError(ValueError):
    """Raised when a simplex has duplicate, negative or out-of-range vertex ids."""
    pass


class SimplexNotFoundError(KeyError):
    """Raised when an operation needs a simplex that is not in the complex."""
    pass


class DimensionError(ValueError):
    """Raised when a dimension argument is outside the operation's domain."""
    pass


# -----------------------------
# Simplices
# -----------------------------


def make_simplex(vertices: Iterable[int]) -> Simplex:
    """
    Canonical ascending tuple for a vertex set.

    Duplicates are rejected instead of silently merged.
    """
    verts = [int(v) for v in vertices]
    if any(v < 0 for v in verts):
        raise MalformedSimplexError(f"Negative vertex id in {verts}")
    simplex = tuple(sorted(verts))
    if len(set(simplex)) != len(simplex):
        raise MalformedSimplexError(f"Duplicate vertex inside simplex {verts}")
    return simplex


def simplex_dim(simplex: Simplex) -> int:
    return len(simplex) - 1


def facets_of(simplex: Simplex) -> List[Simplex]:
    """
    Codimension-one faces sigma_i (vertex i removed), in the order i = 0..k.
    The sign of sigma_i in the boundary is (-1)^i.
    """
    return [simplex[:i] + simplex[i + 1:] for i in range(len(simplex))]


def faces_of(simplex: Simplex) -> Iterator[Simplex]:
    """All nonempty faces, the simplex itself included."""
    for size in range(1, len(simplex) + 1):
        yield from combinations(simplex, size)


# -----------------------------
# Complexes
# -----------------------------


@dataclass(frozen=True)
class FVector:
    counts: Tuple[int, ...]

    def f(self, k: int) -> int:
        if k == -1:
            return 1
        if k < -1 or k >= len(self.counts):
            return 0
        return self.counts[k]

    def as_list(self) -> List[int]:
        return list(self.counts)


@dataclass(frozen=True)
class SimplicialComplex:
    """
    Finite abstract simplicial complex on vertex ids 0..n_vertices-1.

    by_dim[k] holds the sorted k-simplices. Instances are immutable; build them
    with make_complex (or the helpers below), which take the downward closure.
    `provenance` maps cone vertices added by pure_dimensionalize to the
    (D-1)-simplex they cone off.
    """

    n_vertices: int
    by_dim: Tuple[Tuple[Simplex, ...], ...]
    provenance: Mapping[int, Simplex] = field(default_factory=dict, hash=False)

    @cached_property
    def _index(self) -> frozenset:
        return frozenset(s for layer in self.by_dim for s in layer)

    @cached_property
    def _star(self) -> Dict[int, List[Simplex]]:
        star: Dict[int, List[Simplex]] = {}
        for layer in self.by_dim:
            for s in layer:
                for v in s:
                    star.setdefault(v, []).append(s)
        return star

    @property
    def dim(self) -> int:
        return len(self.by_dim) - 1

    def is_empty(self) -> bool:
        return not self.by_dim

    def simplices(self, k: int) -> Tuple[Simplex, ...]:
        if k == -1:
            return (EMPTY_SIMPLEX,)
        if 0 <= k < len(self.by_dim):
            return self.by_dim[k]
        return ()

    def vertices(self) -> List[int]:
        return [s[0] for s in self.simplices(0)]

    def cofaces(self, tau: Simplex) -> List[Simplex]:
        """Simplices strictly containing tau."""
        if not tau:
            return [s for layer in self.by_dim for s in layer]
        tau_set = set(tau)
        return [
            s for s in self._star.get(tau[0], [])
            if len(s) > len(tau) and tau_set.issubset(s)
        ]

    def maximal_simplices(self, k: int) -> List[Simplex]:
        """k-simplices that are not a face of any (k+1)-simplex."""
        covered = set()
        for s in self.simplices(k + 1):
            covered.update(facets_of(s))
        return [s for s in self.simplices(k) if s not in covered]

    def __contains__(self, simplex: object) -> bool:
        if simplex == EMPTY_SIMPLEX:
            return True
        return simplex in self._index

    def __iter__(self) -> Iterator[Simplex]:
        for layer in self.by_dim:
            yield from layer

    def __len__(self) -> int:
        return len(self._index)


def _from_simplex_set(
    simplices: Iterable[Simplex],
    n_vertices: int,
    provenance: Mapping[int, Simplex] | None = None,
) -> SimplicialComplex:
    layers: Dict[int, set] = {}
    for s in simplices:
        layers.setdefault(len(s) - 1, set()).add(s)
    top = max(layers) if layers else -1
    by_dim = tuple(tuple(sorted(layers.get(k, ()))) for k in range(top + 1))
    return SimplicialComplex(n_vertices, by_dim, dict(provenance or {}))


def make_complex(
    maximal: Iterable[Iterable[int]],
    n_vertices: int,
    provenance: Mapping[int, Simplex] | None = None,
) -> SimplicialComplex:
    """
    Downward closure of the given simplices.

    Vertices are never auto-added: pass singletons explicitly to get isolated
    vertices. Applying it to its own output returns an equal complex.
    """
    closure: set = set()
    for raw in maximal:
        simplex = make_simplex(raw)
        if not simplex:
            continue
        if simplex[-1] >= n_vertices:
            raise MalformedSimplexError(
                f"Vertex id {simplex[-1]} out of range for n_vertices={n_vertices}"
            )
        if simplex in closure:
            continue
        closure.update(faces_of(simplex))
    return _from_simplex_set(closure, n_vertices, provenance)


def complex_from_layers(layers: Sequence[Iterable[Simplex]], n_vertices: int) -> SimplicialComplex:
    """Trusted constructor for samplers whose layers are already downward closed."""
    by_dim = [tuple(sorted(layer)) for layer in layers]
    while by_dim and not by_dim[-1]:
        by_dim.pop()
    return SimplicialComplex(n_vertices, tuple(by_dim))


def empty_complex(n_vertices: int = 0) -> SimplicialComplex:
    return SimplicialComplex(n_vertices, ())


def is_downward_closed(X: SimplicialComplex) -> bool:
    return all(f in X for s in X for f in facets_of(s) if f)


# -----------------------------
# Surgery
# -----------------------------


def link(X: SimplicialComplex, tau: Sequence[int]) -> SimplicialComplex:
    """
    lk_X(tau) = {sigma in X | sigma and tau disjoint, sigma u tau in X}.

    lk_X(()) is X itself; an empty complex is returned when nothing qualifies.
    """
    tau = make_simplex(tau)
    if not tau:
        return X
    if tau not in X:
        raise SimplexNotFoundError(f"Simplex {tau} is not in the complex")
    tau_set = set(tau)
    link_simplices = (
        tuple(v for v in rho if v not in tau_set) for rho in X.cofaces(tau)
    )
    return _from_simplex_set(link_simplices, X.n_vertices)


def skeleton(X: SimplicialComplex, k: int) -> SimplicialComplex:
    if k < 0:
        raise DimensionError(f"Skeleton dimension must be >= 0, got {k}")
    return SimplicialComplex(X.n_vertices, X.by_dim[: k + 1], X.provenance)


def clique_complex(G: SimplicialComplex) -> SimplicialComplex:
    """Flag complex: every clique of the 1-skeleton becomes a simplex."""
    if G.dim > 1:
        raise DimensionError(f"clique_complex expects a graph, got dimension {G.dim}")
    cliques = nx.enumerate_all_cliques(to_graph(G))
    return _from_simplex_set((tuple(sorted(c)) for c in cliques), G.n_vertices)


def pure_dimensionalize(X: SimplicialComplex, D: int) -> SimplicialComplex:
    """
    Complex generated by X_D and one cone s_sigma = sigma u {v_sigma} per
    maximal (D-1)-simplex sigma. Cone vertices get ids n_vertices, n_vertices+1, ...
    and are recorded in `provenance`. beta_{D-1} is unchanged.
    """
    if D < 1:
        raise DimensionError(f"D must be >= 1, got {D}")
    if X.dim < D - 1:
        raise DimensionError(f"dim X = {X.dim} < D - 1 = {D - 1}")

    generators: List[Simplex] = list(X.simplices(D))
    provenance: Dict[int, Simplex] = {}
    next_vertex = X.n_vertices
    for sigma in X.maximal_simplices(D - 1):
        provenance[next_vertex] = sigma
        generators.append(sigma + (next_vertex,))
        next_vertex += 1
    return make_complex(generators, next_vertex, provenance)


def f_vector(X: SimplicialComplex) -> FVector:
    return FVector(tuple(len(layer) for layer in X.by_dim))


# -----------------------------
# Graph bridge
# -----------------------------


def to_graph(X: SimplicialComplex) -> nx.Graph:
    """1-skeleton as a networkx graph (isolated vertices kept)."""
    G = nx.Graph()
    G.add_nodes_from(X.vertices())
    G.add_edges_from(X.simplices(1))
    return G


def from_graph(G: nx.Graph, n_vertices: int | None = None) -> SimplicialComplex:
    nodes = [int(v) for v in G.nodes]
    n = n_vertices if n_vertices is not None else (max(nodes) + 1 if nodes else 0)
    return make_complex([(v,) for v in nodes] + [tuple(e) for e in G.edges], n)


# -----------------------------
# Text format
# -----------------------------


def dumps(X: SimplicialComplex) -> str:
    """Header `n <n_vertices>`, then one simplex per line."""
    lines = [f"n {X.n_vertices}"]
    lines.extend(" ".join(str(v) for v in s) for s in X)
    return "\n".join(lines) + "\n"


def loads(text: str) -> SimplicialComplex:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n "):
        raise MalformedSimplexError("Complex text must start with a header line 'n <n_vertices>'")
    n_vertices = int(lines[0].split()[1])
    return make_complex(([int(tok) for tok in ln.split()] for ln in lines[1:]), n_vertices)


def save(X: SimplicialComplex, path: str | Path) -> None:
    Path(path).write_text(dumps(X))


def load(path: str | Path) -> SimplicialComplex:
    return loads(Path(path).read_text())
