from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from complex_core import (
    SimplexNotFoundError,
    SimplicialComplex,
    Simplex,
    faces_of,
    link,
    make_simplex,
)
from config import settings
from homology import boundary_matrix


class CochainShapeError(ValueError):
    """Cochains from different spaces or degrees were combined."""
    pass


class NotPureError(ValueError):
    """The complex is not pure of the requested dimension."""
    pass


# -----------------------------
# Weighted cochain spaces
# -----------------------------


class WeightedCochainSpace:
    """
    C^k(X) for a pure D-dimensional X, k = -1..D, with the inner product
    weighted by m(sigma) = #{D-simplices containing sigma}.

    Cochains are stored on ascending representatives. Summing over the
    (k+1)! orderings of each simplex cancels the 1/(k+1)! normalisation, so
    (phi, psi) = sum_asc m(sigma) phi(sigma) psi(sigma); m(()) = #X_D gives
    the k = -1 case.
    """

    def __init__(self, X: SimplicialComplex, D: int):
        if D < 0 or X.is_empty() or X.dim != D:
            raise NotPureError(f"Expected a nonempty complex of dimension {D}, got dim {X.dim}")
        m: Dict[Simplex, int] = {(): len(X.simplices(D))}
        for top in X.simplices(D):
            for face in faces_of(top):
                m[face] = m.get(face, 0) + 1
        for s in X:
            if s not in m:
                raise NotPureError(f"Simplex {s} is not a face of any {D}-simplex")
        self.X = X
        self.D = D
        self.m = m
        self._d_cache: Dict[int, np.ndarray] = {}
        self._index_cache: Dict[int, Mapping[Simplex, int]] = {}
        self._link_spaces: Dict[Simplex, WeightedCochainSpace] = {}

    def basis(self, k: int) -> Tuple[Simplex, ...]:
        self._check_degree(k, upper=self.D + 1)
        return self.X.simplices(k)

    def dim(self, k: int) -> int:
        return len(self.basis(k))

    def weights(self, k: int) -> np.ndarray:
        return np.array([self.m[s] for s in self.basis(k)], dtype=float)

    def index(self, k: int) -> Mapping[Simplex, int]:
        """Position of each k-simplex in basis(k); built once per degree."""
        if k not in self._index_cache:
            self._index_cache[k] = MappingProxyType({s: i for i, s in enumerate(self.basis(k))})
        return self._index_cache[k]

    def d_matrix(self, k: int) -> np.ndarray:
        """Matrix of d_k: C^k -> C^{k+1}, i.e. the transpose of the boundary d_{k+1}."""
        self._check_degree(k)
        if k not in self._d_cache:
            if k + 1 > self.D:
                mat = np.zeros((0, self.dim(k)))
            else:
                mat = boundary_matrix(self.X, k + 1).matrix.T.astype(float)
            self._d_cache[k] = mat
        return self._d_cache[k]

    def scaled_d(self, k: int) -> np.ndarray:
        """d_k in orthonormal bases (rows and columns rescaled by sqrt(m))."""
        d = self.d_matrix(k)
        if d.size == 0:
            return d
        return np.sqrt(self.weights(k + 1))[:, None] * d / np.sqrt(self.weights(k))[None, :]

    def link_space(self, tau: Simplex) -> WeightedCochainSpace:
        """Weighted space of lk_X(tau); its m_tau(eta) equals m(tau u eta)."""
        tau = make_simplex(tau)
        if tau not in self._link_spaces:
            lk = link(self.X, tau)
            self._link_spaces[tau] = WeightedCochainSpace(lk, self.D - len(tau))
        return self._link_spaces[tau]

    def zeros(self, k: int) -> Cochain:
        return Cochain(self, k, np.zeros(self.dim(k)))

    def random_cochain(self, k: int, rng: np.random.Generator) -> Cochain:
        return Cochain(self, k, rng.standard_normal(self.dim(k)))

    def weight_identity_holds(self) -> bool:
        """sum of m(sigma) over (k+1)-simplices sigma containing tau equals (D-k) m(tau)."""
        for k in range(-1, self.D):
            totals: Dict[Simplex, int] = {tau: 0 for tau in self.basis(k)}
            for sigma in self.basis(k + 1):
                for i in range(len(sigma)):
                    totals[sigma[:i] + sigma[i + 1:]] += self.m[sigma]
            if any(totals[tau] != (self.D - k) * self.m[tau] for tau in totals):
                return False
        return True

    def _check_degree(self, k: int, upper: int | None = None) -> None:
        upper = self.D if upper is None else upper
        if not -1 <= k <= upper:
            raise CochainShapeError(f"Degree {k} outside -1..{upper}")


@dataclass
class Cochain:
    space: WeightedCochainSpace
    k: int
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.dim(self.k),):
            raise CochainShapeError(
                f"C^{self.k} has dimension {self.space.dim(self.k)}, got values of shape {self.values.shape}"
            )

    def value_at(self, ordered: Sequence[int]) -> float:
        """phi on an ordered simplex: the ascending value times the sign of the sort."""
        asc = make_simplex(ordered)
        idx = self.space.index(self.k).get(asc)
        if idx is None:
            raise SimplexNotFoundError(f"{tuple(ordered)} is not a {self.k}-simplex of the space")
        return _permutation_sign(ordered) * float(self.values[idx])

    def norm_sq(self) -> float:
        return inner_product(self, self)


def _permutation_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def _same_space(phi: Cochain, psi: Cochain) -> None:
    if phi.space is not psi.space or phi.k != psi.k:
        raise CochainShapeError(
            f"Cannot pair C^{phi.k} and C^{psi.k} (or cochains on different spaces)"
        )


# -----------------------------
# Operators
# -----------------------------


def inner_product(phi: Cochain, psi: Cochain) -> float:
    _same_space(phi, psi)
    w = phi.space.weights(phi.k)
    return float(np.dot(w * phi.values, psi.values))


def coboundary(phi: Cochain) -> Cochain:
    """(d_k phi)(sigma) = sum_i (-1)^i phi(sigma_i); d_{-1} is the constant extension."""
    space = phi.space
    return Cochain(space, phi.k + 1, space.d_matrix(phi.k) @ phi.values)


def adjoint(psi: Cochain) -> Cochain:
    """delta_{k+1} psi(sigma) = sum_v m(v sigma)/m(sigma) psi(v sigma)."""
    space = psi.space
    k = psi.k - 1
    if k < -1:
        raise CochainShapeError("delta is defined on C^{k+1} for k >= -1")
    d = space.d_matrix(k)
    values = (d.T @ (space.weights(k + 1) * psi.values)) / space.weights(k)
    return Cochain(space, k, values)


@dataclass(frozen=True)
class LaplacianResult:
    k: int
    matrix: np.ndarray
    eigenvalues: np.ndarray


def up_laplacian_matrix(space: WeightedCochainSpace, k: int) -> np.ndarray:
    """delta_{k+1} d_k in an orthonormal basis."""
    B = space.scaled_d(k)
    if B.size == 0:
        return np.zeros((space.dim(k), space.dim(k)))
    return B.T @ B


def down_laplacian_matrix(space: WeightedCochainSpace, k: int) -> np.ndarray:
    """d_{k-1} delta_k in an orthonormal basis (d_{-1} included for k = 0)."""
    B = space.scaled_d(k - 1)
    return B @ B.T


def laplacian_matrix(space: WeightedCochainSpace, k: int) -> LaplacianResult:
    """L_k = L_k^down + L_k^up as a symmetric matrix, with its ascending spectrum."""
    if not 0 <= k <= space.D:
        raise CochainShapeError(f"L_k needs 0 <= k <= {space.D}, got {k}")
    L = down_laplacian_matrix(space, k) + up_laplacian_matrix(space, k)
    L = 0.5 * (L + L.T)
    eig = np.linalg.eigvalsh(L) if L.size else np.zeros(0)
    return LaplacianResult(k, L, eig)


def up_operator_matrix(space: WeightedCochainSpace, k: int) -> np.ndarray:
    """L_k^up acting on value vectors, M_k^{-1} d_k^T M_{k+1} d_k."""
    d = space.d_matrix(k)
    return (d.T * space.weights(k + 1)) @ d / space.weights(k)[:, None]


def harmonic_betti(space: WeightedCochainSpace, k: int) -> int:
    """dim ker L_k, counting eigenvalues below the harmonic threshold."""
    eig = laplacian_matrix(space, k).eigenvalues
    return int(np.sum(eig < settings.harmonic_tol))


# -----------------------------
# Localization
# -----------------------------


def localize(phi: Cochain, tau: Sequence[int]) -> Cochain:
    """
    phi_tau(v) = phi(tau v) as a 0-cochain on lk_X(tau), for phi in C^{D-1}
    and an ordered (D-2)-simplex tau (the empty tuple when D = 1).
    """
    space = phi.space
    if phi.k != space.D - 1:
        raise CochainShapeError(f"localize expects a {space.D - 1}-cochain, got degree {phi.k}")
    if len(tau) != space.D - 1:
        raise CochainShapeError(f"tau must have {space.D - 1} vertices, got {tuple(tau)}")
    if make_simplex(tau) not in space.X:
        raise SimplexNotFoundError(f"Simplex {tuple(tau)} is not in the complex")
    lk_space = space.link_space(tuple(tau))
    values = [phi.value_at(tuple(tau) + v) for v in lk_space.basis(0)]
    return Cochain(lk_space, 0, np.array(values))


@dataclass(frozen=True)
class Projections:
    """Orthogonal projectors of C^0(lk tau) onto constants, low and high link eigenspaces."""

    pi1: np.ndarray
    pi2: np.ndarray
    pi3: np.ndarray
    eigenvalues: np.ndarray


def projections(space: WeightedCochainSpace, tau: Sequence[int]) -> Projections:
    """
    Split C^0(lk tau) by the eigenvalues of L[lk tau]: A_1 the constants,
    A_2 the rest of the eigenspaces with lambda <= 1 - 1/D, A_3 those above.
    Projectors act on value vectors and are orthogonal for (.,.)_tau.
    """
    lk_space = space.link_space(tuple(tau))
    n = lk_space.dim(0)
    sqrt_w = np.sqrt(lk_space.weights(0))
    eig, vecs = np.linalg.eigh(up_laplacian_matrix(lk_space, 0))

    const = sqrt_w / np.linalg.norm(sqrt_w)
    Q1 = np.outer(const, const)
    low = vecs[:, eig <= 1.0 - 1.0 / space.D + settings.eigen_tol]
    Q_low = low @ low.T
    Q2 = Q_low - Q1
    Q3 = np.eye(n) - Q_low

    def to_values(Q: np.ndarray) -> np.ndarray:
        return Q * sqrt_w[None, :] / sqrt_w[:, None]

    return Projections(to_values(Q1), to_values(Q2), to_values(Q3), eig)


@dataclass(frozen=True)
class LocalIdentityReport:
    norm_residual: float
    difference_residual: float
    dphi_residual: float
    projection_residual: float

    def max_residual(self) -> float:
        return max(self.norm_residual, self.difference_residual, self.dphi_residual, self.projection_residual)


def local_identities(phi: Cochain) -> LocalIdentityReport:
    """
    Residuals of the localization identities for phi in C^{D-1}; sums over
    ordered tau divided by (D-1)! are taken as sums over ascending tau.
    """
    space = phi.space
    D = space.D
    norm_phi = phi.norm_sq()
    norm_dphi = coboundary(phi).norm_sq()
    delta_phi = adjoint(phi)

    local_norms: List[float] = []
    local_d_norms: List[float] = []
    proj_res = 0.0
    for idx, tau in enumerate(space.basis(D - 2)):
        phi_tau = localize(phi, tau)
        local_norms.append(phi_tau.norm_sq())
        local_d_norms.append(coboundary(phi_tau).norm_sq())
        pi1 = projections(space, tau).pi1
        proj = Cochain(phi_tau.space, 0, pi1 @ phi_tau.values)
        expected = space.m[tau] / 2.0 * float(delta_phi.values[idx]) ** 2
        proj_res = max(proj_res, abs(proj.norm_sq() - expected))

    sum_norm = float(np.sum(local_norms))
    sum_d = float(np.sum(local_d_norms))
    return LocalIdentityReport(
        norm_residual=abs(D * norm_phi - sum_norm),
        difference_residual=abs((norm_dphi - norm_phi) - (sum_d - sum_norm)),
        dphi_residual=abs(norm_dphi - (sum_d - (1.0 - 1.0 / D) * sum_norm)),
        projection_residual=proj_res,
    )


@dataclass(frozen=True)
class ProjectionNormAudit:
    lhs: float
    rhs: float
    spectral_excess: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-9) + 1e-12


def projection_norm_audit(space: WeightedCochainSpace, phi: Cochain) -> ProjectionNormAudit:
    """
    ||phi||^2 against (1/(lambda D)) (2 sum_tau ||pi_2 phi_tau||^2 + ||delta phi||^2 + ||d phi||^2),
    lambda the smallest excess of a link eigenvalue over 1 - 1/D.
    """
    if phi.space is not space or phi.k != space.D - 1:
        raise CochainShapeError("projection_norm_audit expects a (D-1)-cochain of the given space")
    threshold = 1.0 - 1.0 / space.D
    excess = np.inf
    pi2_total = 0.0
    for tau in space.basis(space.D - 2):
        proj = projections(space, tau)
        above = proj.eigenvalues[proj.eigenvalues > threshold + settings.eigen_tol]
        if above.size:
            excess = min(excess, float(above.min()) - threshold)
        phi_tau = localize(phi, tau)
        pi2_total += Cochain(phi_tau.space, 0, proj.pi2 @ phi_tau.values).norm_sq()
    rhs_inner = 2.0 * pi2_total + adjoint(phi).norm_sq() + coboundary(phi).norm_sq()
    rhs = rhs_inner / (excess * space.D) if np.isfinite(excess) else np.inf
    return ProjectionNormAudit(phi.norm_sq(), rhs, excess)
