from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, List, Literal, Tuple

import numpy as np

from complex_core import (
    EMPTY_SIMPLEX,
    DimensionError,
    SimplicialComplex,
    Simplex,
    f_vector,
    facets_of,
)
from config import settings


RankMode = Literal["exact_rational", "prime_field"]


class RankMismatchWarning(RuntimeWarning):
    """Prime-field and exact-rational ranks disagreed on a cross-check."""
    pass


# -----------------------------
# Boundary matrices
# -----------------------------


@dataclass(frozen=True)
class BoundaryMatrix:
    """
    Matrix of the boundary map from k-chains to (k-1)-chains.

    For k = 0 the single row is the augmentation to C_{-1} (all ones).
    """

    k: int
    rows: Tuple[Simplex, ...]
    cols: Tuple[Simplex, ...]
    matrix: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape


def boundary_matrix(X: SimplicialComplex, k: int) -> BoundaryMatrix:
    if k < 0:
        raise DimensionError(f"Boundary dimension must be >= 0, got {k}")
    cols = X.simplices(k)
    rows = (EMPTY_SIMPLEX,) if k == 0 else X.simplices(k - 1)
    M = np.zeros((len(rows), len(cols)), dtype=np.int64)
    if k == 0:
        M[0, :] = 1
        return BoundaryMatrix(k, tuple(rows), tuple(cols), M)

    row_index: Dict[Simplex, int] = {s: i for i, s in enumerate(rows)}
    for j, sigma in enumerate(cols):
        for i, face in enumerate(facets_of(sigma)):
            M[row_index[face], j] = -1 if i % 2 else 1
    return BoundaryMatrix(k, tuple(rows), tuple(cols), M)


# -----------------------------
# Ranks
# -----------------------------


def rank_exact(M: np.ndarray) -> int:
    """
    Rank over Q by fraction-free (Bareiss) elimination on Python ints.
    Equals the rank over R.
    """
    rows: List[List[int]] = [[int(x) for x in row] for row in np.asarray(M)]
    if not rows or not rows[0]:
        return 0
    n_rows, n_cols = len(rows), len(rows[0])
    rank = 0
    prev_pivot = 1
    for c in range(n_cols):
        if rank == n_rows:
            break
        pivot_row = None
        best = None
        # sparsest nonzero row first keeps the integers small
        for i in range(rank, n_rows):
            if rows[i][c] != 0:
                weight = sum(1 for x in rows[i] if x)
                if best is None or weight < best:
                    pivot_row, best = i, weight
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        piv = rows[rank][c]
        for i in range(rank + 1, n_rows):
            a = rows[i][c]
            row_i = rows[i]
            row_r = rows[rank]
            for j in range(c + 1, n_cols):
                row_i[j] = (piv * row_i[j] - a * row_r[j]) // prev_pivot
            row_i[c] = 0
        prev_pivot = piv
        rank += 1
    return rank


def rank_modp(M: np.ndarray, p: int | None = None) -> int:
    """Rank over F_p by row reduction on int64 arrays (p < 2^31 keeps products in range)."""
    p = p or settings.prime_modulus
    A = np.asarray(M, dtype=np.int64) % p
    if A.size == 0:
        return 0
    m, n = A.shape
    r = 0
    for c in range(n):
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        pivot = r + int(nz[0])
        if pivot != r:
            A[[r, pivot], :] = A[[pivot, r], :]
        inv = pow(int(A[r, c]), -1, p)
        A[r, :] = (A[r, :] * inv) % p
        below = r + 1 + np.nonzero(A[r + 1:, c])[0]
        if below.size:
            factors = A[below, c][:, None]
            A[below, :] = (A[below, :] - (factors * A[r, :]) % p) % p
        r += 1
        if r == m:
            break
    return r


def matrix_rank(M: np.ndarray, mode: RankMode = "prime_field") -> int:
    if mode == "exact_rational":
        return rank_exact(M)
    if mode == "prime_field":
        return rank_modp(M)
    raise ValueError(f"Unknown rank mode: {mode!r}")


def boundary_rank(X: SimplicialComplex, k: int, mode: RankMode = "prime_field") -> int:
    """rank of d_k with the augmented d_0."""
    if k == 0:
        return 1 if X.simplices(0) else 0
    if not X.simplices(k):
        return 0
    return matrix_rank(boundary_matrix(X, k).matrix, mode)


# -----------------------------
# Betti numbers
# -----------------------------


@dataclass(frozen=True)
class BettiVector:
    """Reduced Betti numbers beta_0..beta_{k_max}."""

    values: Tuple[int, ...]

    def __getitem__(self, k: int) -> int:
        return self.values[k] if 0 <= k < len(self.values) else 0

    def __len__(self) -> int:
        return len(self.values)

    def as_list(self) -> List[int]:
        return list(self.values)


def betti(
    X: SimplicialComplex,
    k: int,
    mode: RankMode = "prime_field",
    cross_check: bool = False,
) -> int:
    """
    Reduced beta_k = (f_k - rank d_k) - rank d_{k+1}.

    beta_k of the empty complex is 0 for every k >= 0. With cross_check the
    prime-field ranks are compared against exact rational ones; a disagreement
    emits RankMismatchWarning and the exact value is returned.
    """
    if k < 0:
        raise DimensionError(f"Betti dimension must be >= 0, got {k}")
    if X.is_empty():
        return 0
    f_k = len(X.simplices(k))
    value = f_k - boundary_rank(X, k, mode) - boundary_rank(X, k + 1, mode)
    if cross_check and mode == "prime_field":
        exact = f_k - boundary_rank(X, k, "exact_rational") - boundary_rank(X, k + 1, "exact_rational")
        if exact != value:
            warnings.warn(
                f"beta_{k}: prime field gave {value}, exact rational gave {exact}",
                RankMismatchWarning,
                stacklevel=2,
            )
            return exact
    return value


def betti_all(X: SimplicialComplex, k_max: int, mode: RankMode = "prime_field") -> BettiVector:
    """beta_0..beta_{k_max}, each boundary rank computed once."""
    if k_max < 0:
        raise DimensionError(f"k_max must be >= 0, got {k_max}")
    if X.is_empty():
        return BettiVector(tuple(0 for _ in range(k_max + 1)))
    ranks = [boundary_rank(X, k, mode) for k in range(k_max + 2)]
    fv = f_vector(X)
    return BettiVector(tuple(fv.f(k) - ranks[k] - ranks[k + 1] for k in range(k_max + 1)))


# -----------------------------
# Consistency identities
# -----------------------------


def reduced_euler_characteristic(X: SimplicialComplex) -> int:
    """sum_k (-1)^k f_k - 1."""
    return sum((-1) ** k * f for k, f in enumerate(f_vector(X).counts)) - 1


def euler_poincare_holds(X: SimplicialComplex, mode: RankMode = "prime_field") -> bool:
    if X.is_empty():
        return True
    b = betti_all(X, X.dim, mode)
    return sum((-1) ** k * v for k, v in enumerate(b.values)) == reduced_euler_characteristic(X)


def morse_sandwich_holds(X: SimplicialComplex, k: int, beta_k: int | None = None) -> bool:
    """f_k - f_{k+1} - f_{k-1} <= beta_k <= f_k, with f_{-1} = 1."""
    fv = f_vector(X)
    if beta_k is None:
        beta_k = betti(X, k)
    if X.is_empty():
        return beta_k == 0
    return fv.f(k) - fv.f(k + 1) - fv.f(k - 1) <= beta_k <= fv.f(k)


def boundary_squares_to_zero(X: SimplicialComplex, k: int) -> bool:
    """d_k . d_{k+1} == 0 as integer matrices."""
    upper = boundary_matrix(X, k + 1)
    if upper.matrix.size == 0:
        return True
    lower = boundary_matrix(X, k)
    return not np.any(lower.matrix @ upper.matrix)

