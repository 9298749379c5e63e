from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from scipy import integrate, special, stats

from complex_core import SimplicialComplex, complex_from_layers


logger = logging.getLogger(__name__)


class ParamFunctionError(ValueError):
    """Invalid multi-parameter vector or parameter-function description."""
    pass


class InconclusiveStatisticError(RuntimeError):
    """Too few conditioning successes for a goodness-of-fit verdict."""
    pass


# -----------------------------
# Static multi-parameters
# -----------------------------


@dataclass(frozen=True)
class MultiParameter:
    """p = (p_0, ..., p_{n-1}); entries beyond the stored ones are 0."""

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        for i, p in enumerate(self.values):
            if not 0.0 <= p <= 1.0:
                raise ParamFunctionError(f"p_{i} = {p} is outside [0, 1]")

    def __getitem__(self, i: int) -> float:
        return self.values[i] if 0 <= i < len(self.values) else 0.0

    def __len__(self) -> int:
        return len(self.values)


def lm_parameter(n: int, d: int, p: float) -> MultiParameter:
    """Linial-Meshulam Y_d(n, p): complete (d-1)-skeleton, d-simplices with probability p."""
    return MultiParameter(tuple(1.0 if i < d else (p if i == d else 0.0) for i in range(n)))


def flag_parameter(n: int, d: int, p: float) -> MultiParameter:
    """d-flag model; d = 1 is the clique complex of G(n, p)."""
    return MultiParameter(tuple(p if i == d else 1.0 for i in range(n)))


def clique_parameter(n: int, p: float) -> MultiParameter:
    return flag_parameter(n, 1, p)


@dataclass(frozen=True)
class DerivedParams:
    """
    q_k = prod_i p_i^C(k+1, i+1) (probability a fixed k-simplex is present)
    and r_k = prod_{i<=k+1} p_i^C(k+1, i) = q_{k+1}/q_k, with 0/0 = 0.
    """

    q: Tuple[float, ...]
    r: Tuple[float, ...]

    def q_k(self, k: int) -> float:
        if k == -1:
            return 1.0
        return self.q[k] if 0 <= k < len(self.q) else 0.0

    def r_k(self, k: int) -> float:
        # r is stored from k = -1
        idx = k + 1
        return self.r[idx] if 0 <= idx < len(self.r) else 0.0


def _q_from(values: Sequence[float], k: int) -> float:
    return math.prod(values[i] ** math.comb(k + 1, i + 1) if i < len(values) else 0.0 for i in range(k + 1))


def _r_from(values: Sequence[float], k: int) -> float:
    return math.prod(values[i] ** math.comb(k + 1, i) if i < len(values) else 0.0 for i in range(k + 2))


def derive_params(p: MultiParameter) -> DerivedParams:
    n = len(p)
    q = tuple(_q_from(p.values, k) for k in range(n))
    r = []
    for k in range(-1, n - 1):
        q_k = 1.0 if k == -1 else q[k]
        r.append(_r_from(p.values, k) if q_k > 0 else 0.0)
    return DerivedParams(q, tuple(r))


def expected_f_vector(n: int, p: MultiParameter) -> List[float]:
    """E[f_k] = C(n, k+1) q_k for k = 0..n-1."""
    derived = derive_params(p)
    return [math.comb(n, k + 1) * derived.q_k(k) for k in range(n)]


# -----------------------------
# Parameter functions
# -----------------------------


@dataclass(frozen=True)
class Const:
    c: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.c <= 1.0:
            raise ParamFunctionError(f"const({self.c}) is outside [0, 1]")

    def __call__(self, t: float) -> float:
        return self.c

    def inverse(self, U: np.ndarray) -> np.ndarray:
        return np.where(U < self.c, 0.0, np.inf)

    @property
    def saturation(self) -> float:
        return 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "const", "c": self.c}


@dataclass(frozen=True)
class Power:
    """t^a on [0, 1], then 1."""

    a: float

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise ParamFunctionError(f"power exponent must be > 0, got {self.a}")

    def __call__(self, t: float) -> float:
        return min(max(t, 0.0), 1.0) ** self.a

    def inverse(self, U: np.ndarray) -> np.ndarray:
        return np.power(U, 1.0 / self.a)

    @property
    def saturation(self) -> float:
        return 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "power", "a": self.a}


@dataclass(frozen=True)
class Step:
    """0 before t0, 1 from t0 on."""

    t0: float

    def __post_init__(self) -> None:
        if self.t0 < 0:
            raise ParamFunctionError(f"step time must be >= 0, got {self.t0}")

    def __call__(self, t: float) -> float:
        return 1.0 if t >= self.t0 else 0.0

    def inverse(self, U: np.ndarray) -> np.ndarray:
        return np.full(np.shape(U), float(self.t0))

    @property
    def saturation(self) -> float:
        return self.t0

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "step", "t0": self.t0}


Primitive = Const | Power | Step


@dataclass(frozen=True)
class ParamFunctions:
    """
    Monotone right-continuous p_i(t), one primitive per listed dimension and
    `default` for every dimension above the list.
    """

    name: str
    components: Tuple[Primitive, ...]
    default: Primitive = field(default_factory=lambda: Const(0.0))

    def component(self, i: int) -> Primitive:
        return self.components[i] if i < len(self.components) else self.default

    def at(self, t: float, n: int) -> MultiParameter:
        return MultiParameter(tuple(self.component(i)(t) for i in range(n)))

    def q(self, k: int, t: float) -> float:
        if k == -1:
            return 1.0
        return math.prod(self.component(i)(t) ** math.comb(k + 1, i + 1) for i in range(k + 1))

    def r(self, k: int, t: float) -> float:
        if self.q(k, t) == 0.0:
            return 0.0
        return math.prod(self.component(i)(t) ** math.comb(k + 1, i) for i in range(k + 2))

    def breakpoints(self, k: int) -> List[float]:
        """Times where p_0..p_{k+1} may be non-smooth."""
        pts = {self.component(i).saturation for i in range(k + 2)}
        return sorted(t for t in pts if t > 0)

    def saturation(self, k: int) -> float:
        pts = self.breakpoints(k)
        return pts[-1] if pts else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "components": [c.to_dict() for c in self.components],
            "default": self.default.to_dict(),
        }


def lm_preset(d: int) -> ParamFunctions:
    """d-Linial-Meshulam process; higher dimensions arrive together at t = 1."""
    if d < 1:
        raise ParamFunctionError(f"lm(d) needs d >= 1, got {d}")
    return ParamFunctions(f"lm({d})", tuple([Const(1.0)] * d + [Power(1.0)]), Step(1.0))


def flag_preset(d: int) -> ParamFunctions:
    if d < 1:
        raise ParamFunctionError(f"flag(d) needs d >= 1, got {d}")
    return ParamFunctions(f"flag({d})", tuple([Const(1.0)] * d + [Power(1.0)]), Const(1.0))


def clique_preset() -> ParamFunctions:
    return flag_preset(1)


def _parse_primitive(raw: Dict[str, Any]) -> Primitive:
    try:
        kind = raw["type"]
        if kind == "const":
            return Const(float(raw["c"]))
        if kind == "power":
            return Power(float(raw["a"]))
        if kind == "step":
            return Step(float(raw["t0"]))
    except (KeyError, TypeError) as e:
        raise ParamFunctionError(f"Malformed parameter function entry {raw!r}") from e
    raise ParamFunctionError(f"Unknown parameter function type {raw.get('type')!r}")


def parse_param_functions(source: str | Dict[str, Any]) -> ParamFunctions:
    """
    Preset names (`lm(2)`, `flag(1)`, `clique`, `er`) or a JSON description
    {"name": ..., "components": [{"type": "const", "c": 1}, ...], "default": {...}}.
    """
    if isinstance(source, str):
        text = source.strip()
        if text == "clique":
            return clique_preset()
        if text == "er":
            return lm_preset(1)
        for prefix, builder in (("lm(", lm_preset), ("flag(", flag_preset)):
            if text.startswith(prefix) and text.endswith(")"):
                try:
                    return builder(int(text[len(prefix):-1]))
                except ValueError as e:
                    raise ParamFunctionError(f"Bad preset {text!r}") from e
        try:
            source = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParamFunctionError(f"Not a preset name or JSON description: {text!r}") from e

    if not isinstance(source, dict) or "components" not in source:
        raise ParamFunctionError("Custom parameter functions need a 'components' list")
    components = tuple(_parse_primitive(c) for c in source["components"])
    default = _parse_primitive(source["default"]) if "default" in source else Const(0.0)
    return ParamFunctions(str(source.get("name", "custom")), components, default)


# -----------------------------
# Phi / Psi
# -----------------------------


def r_inverse(pf: ParamFunctions, k: int, u: float) -> float:
    """r_k-check(u) = inf{t >= 0 | r_k(t) > u}, by bisection."""
    if pf.r(k, 0.0) > u:
        return 0.0
    hi = max(pf.saturation(k), 1.0)
    if pf.r(k, hi) <= u:
        return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pf.r(k, mid) > u:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return hi


def Q(pf: ParamFunctions, k: int, t: float) -> float:
    """Q_k(t) = integral of q_k over [0, t]."""
    if t <= 0:
        return 0.0
    if math.isinf(t):
        sat = pf.saturation(k)
        if pf.q(k, sat) > 0:
            return math.inf
        t = sat
    pts = [x for x in pf.breakpoints(k) if 0 < x < t]
    value, _ = integrate.quad(lambda s: pf.q(k, s), 0.0, t, points=pts or None, limit=200)
    return value


def phi_psi(pf: ParamFunctions, k: int, u: float) -> Tuple[float, float]:
    """(Phi_k(u), Psi_k(u)) = (Q_k(r_k-check(u)), Q_k(r_{k-1}-check(u)))."""
    if not 0.0 <= u < 1.0:
        raise ParamFunctionError(f"u must lie in [0, 1), got {u}")
    return Q(pf, k, r_inverse(pf, k, u)), Q(pf, k, r_inverse(pf, k - 1, u))


@dataclass(frozen=True)
class GrowthExponent:
    k: int
    a_phi: float
    a_psi: float
    predicted: float | None
    regime: str


def growth_exponent(pf: ParamFunctions, k: int, probes: Tuple[float, float] = (1e-3, 1e-4)) -> GrowthExponent:
    """
    Log-slopes of Phi_k and Psi_k near 0. "zero" when Phi == Psi (L_k = 0 a.s.),
    "polynomial" when Psi = o(Phi) (E[L_k] of order n^{k+1-a}), else "delicate".
    """
    u1, u2 = probes
    (f1, g1), (f2, g2) = phi_psi(pf, k, u1), phi_psi(pf, k, u2)

    def slope(a: float, b: float) -> float:
        if a <= 0 or b <= 0:
            return math.inf
        return math.log(a / b) / math.log(u1 / u2)

    a_phi, a_psi = slope(f1, f2), slope(g1, g2)
    if abs(f1 - g1) <= 1e-12 * max(1.0, f1) and abs(f2 - g2) <= 1e-12 * max(1.0, f2):
        return GrowthExponent(k, a_phi, a_psi, None, "zero")
    ratio1 = g1 / f1 if f1 > 0 else 0.0
    ratio2 = g2 / f2 if f2 > 0 else 0.0
    if a_psi > a_phi or ratio2 < 0.5 * ratio1 or ratio2 == 0.0:
        predicted = k + 1 - a_phi if math.isfinite(a_phi) else None
        return GrowthExponent(k, a_phi, a_psi, predicted, "polynomial")
    return GrowthExponent(k, a_phi, a_psi, None, "delicate")


# -----------------------------
# Sampling
# -----------------------------


@lru_cache(maxsize=32)
def _colex_layer(n: int, i: int) -> np.ndarray:
    """All i-simplices on n vertices as an int array, row r holding the simplex of colex rank r."""
    arr = np.array(list(combinations(range(n), i + 1)), dtype=np.int64).reshape(-1, i + 1)
    out = np.empty_like(arr)
    out[colex_rank(arr)] = arr
    out.setflags(write=False)
    return out


def colex_rank(simplices: np.ndarray) -> np.ndarray:
    """sum_j C(c_j, j+1) for ascending rows c_0 < c_1 < ..."""
    simplices = np.asarray(simplices, dtype=np.int64)
    if simplices.size == 0:
        return np.zeros(simplices.shape[0], dtype=np.int64)
    rank = np.zeros(simplices.shape[0], dtype=np.int64)
    for j in range(simplices.shape[1]):
        rank += np.rint(special.comb(simplices[:, j], j + 1)).astype(np.int64)
    return rank


@lru_cache(maxsize=32)
def _facet_ranks(n: int, i: int) -> np.ndarray:
    """(C(n, i+1), i+1) array: colex rank of each facet of each i-simplex."""
    layer = _colex_layer(n, i)
    cols = [colex_rank(np.delete(layer, j, axis=1)) for j in range(i + 1)]
    out = np.stack(cols, axis=1)
    out.setflags(write=False)
    return out


def _uniforms(seed: int, dim: int, size: int) -> np.ndarray:
    """Counter-based stream per (seed, dim); entry r belongs to the simplex of colex rank r."""
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(dim)])))
    return gen.random(size)


def trial_seeds(seed: int, trials: int) -> List[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]


def _layers_to_complex(n: int, masks: List[np.ndarray]) -> SimplicialComplex:
    layers = [[tuple(int(v) for v in row) for row in _colex_layer(n, i)[mask]] for i, mask in enumerate(masks)]
    return complex_from_layers(layers, n)


def sample_static(n: int, p: MultiParameter, seed: int, max_dim: int | None = None) -> SimplicialComplex:
    """
    X(n, p): an i-simplex is kept with probability p_i once all of its facets
    are present. Layers are enumerated in full, so keep n small or cap max_dim.
    """
    top = n - 1 if max_dim is None else min(max_dim, n - 1)
    masks: List[np.ndarray] = []
    for i in range(top + 1):
        p_i = p[i]
        if p_i <= 0.0:
            break
        size = math.comb(n, i + 1)
        keep = _uniforms(seed, i, size) < p_i
        if i > 0:
            keep &= masks[-1][_facet_ranks(n, i)].all(axis=1)
        if not keep.any():
            break
        masks.append(keep)
    return _layers_to_complex(n, masks)


@dataclass(frozen=True)
class WeightedComplexProcess:
    """
    Appearance weights w_sigma = max of u_tau over faces tau, for every
    simplex up to dimension max_dim; X_n(t) = {sigma | w_sigma <= t}.
    """

    n: int
    max_dim: int
    seed: int
    model: str
    u: Tuple[np.ndarray, ...]
    weights: Tuple[np.ndarray, ...]

    def simplices(self, i: int) -> np.ndarray:
        return _colex_layer(self.n, i)

    def facet_ranks(self, i: int) -> np.ndarray:
        return _facet_ranks(self.n, i)

    def snapshot(self, t: float) -> SimplicialComplex:
        return _layers_to_complex(self.n, [w <= t for w in self.weights])


def sample_process(n: int, pf: ParamFunctions, k_max: int, seed: int) -> WeightedComplexProcess:
    """Materialize dimensions 0..k_max+1 (capped at n-1)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    top = min(k_max + 1, n - 1)
    us: List[np.ndarray] = []
    ws: List[np.ndarray] = []
    for i in range(top + 1):
        size = math.comb(n, i + 1)
        u = pf.component(i).inverse(_uniforms(seed, i, size))
        w = u.copy()
        if i > 0:
            w = np.maximum(w, ws[-1][_facet_ranks(n, i)].max(axis=1))
        us.append(u)
        ws.append(w)
    return WeightedComplexProcess(n, top, seed, pf.name, tuple(us), tuple(ws))


# -----------------------------
# Link-law probes
# -----------------------------


@dataclass(frozen=True)
class ProbeReport:
    statistic: float
    dof: int
    p_value: float
    successes: int
    trials: int
    inconclusive: bool
    detail: Dict[str, Any] = field(default_factory=dict)

    def require_conclusive(self) -> "ProbeReport":
        if self.inconclusive:
            raise InconclusiveStatisticError(
                f"only {self.successes} of {self.trials} trials met the conditioning event "
                f"(need {MIN_CONDITIONING_SUCCESSES})"
            )
        return self


MIN_CONDITIONING_SUCCESSES = 30


def _chisquare_binomial(counts: Sequence[int], n_trials: int, prob: float) -> Tuple[float, int, float]:
    """Chi-square of observed counts against Bin(n_trials, prob), pooling cells with expectation < 5."""
    counts = np.asarray(counts, dtype=np.int64)
    total = counts.size
    pmf = stats.binom.pmf(np.arange(n_trials + 1), n_trials, prob)
    observed = np.bincount(counts, minlength=n_trials + 1)[: n_trials + 1]
    if np.any((pmf == 0) & (observed > 0)):
        return math.inf, 0, 0.0
    expected = pmf * total

    obs_cells: List[float] = []
    exp_cells: List[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5.0:
            obs_cells.append(acc_o)
            exp_cells.append(acc_e)
            acc_o = acc_e = 0.0
    if exp_cells:
        obs_cells[-1] += acc_o
        exp_cells[-1] += acc_e
    if len(exp_cells) < 2:
        return 0.0, 0, 1.0
    res = stats.chisquare(obs_cells, exp_cells)
    return float(res.statistic), len(exp_cells) - 1, float(res.pvalue)


def link_distribution_probe(n: int, p: MultiParameter, k: int, trials: int, seed: int) -> ProbeReport:
    """
    Link vertex count N of tau = {0..k-1} given tau present, against
    Bin(n - k, r_{k-1}).
    """
    tau = tuple(range(k))
    counts: List[int] = []
    for s in trial_seeds(seed, trials):
        X = sample_static(n, p, s, max_dim=k)
        if tau and tau not in X:
            continue
        counts.append(sum(1 for v in range(k, n) if tuple(sorted(tau + (v,))) in X))
    r = derive_params(p).r_k(k - 1)
    if len(counts) < MIN_CONDITIONING_SUCCESSES:
        return ProbeReport(math.nan, 0, math.nan, len(counts), trials, True)
    stat, dof, pval = _chisquare_binomial(counts, n - k, r)
    logger.debug("link_distribution_probe n=%d k=%d: chi2=%.3f dof=%d p=%.4f", n, k, stat, dof, pval)
    return ProbeReport(stat, dof, pval, len(counts), trials, False, {"mean_N": float(np.mean(counts)), "expected_mean": (n - k) * r})


def link_edge_probe(n: int, p: MultiParameter, k: int, trials: int, seed: int) -> ProbeReport:
    """
    Edge count of lk(tau)^{(1)} given N link vertices, against
    Bin(C(N, 2), r_k / r_{k-1}); groups by N are pooled into one chi-square.
    """
    tau = tuple(range(k))
    derived = derive_params(p)
    r_prev, r_k = derived.r_k(k - 1), derived.r_k(k)
    ratio = r_k / r_prev if r_prev > 0 else 0.0
    groups: Dict[int, List[int]] = {}
    successes = 0
    for s in trial_seeds(seed, trials):
        X = sample_static(n, p, s, max_dim=k + 1)
        if tau and tau not in X:
            continue
        successes += 1
        verts = [v for v in range(n) if v not in tau and tuple(sorted(tau + (v,))) in X]
        edges = sum(1 for a, b in combinations(verts, 2) if tuple(sorted(tau + (a, b))) in X)
        groups.setdefault(len(verts), []).append(edges)

    stat_total, dof_total = 0.0, 0
    for N, edge_counts in groups.items():
        if len(edge_counts) < MIN_CONDITIONING_SUCCESSES or N < 2:
            continue
        stat, dof, _ = _chisquare_binomial(edge_counts, math.comb(N, 2), ratio)
        stat_total += stat
        dof_total += dof
    if successes < MIN_CONDITIONING_SUCCESSES:
        return ProbeReport(math.nan, 0, math.nan, successes, trials, True)
    pval = float(stats.chi2.sf(stat_total, dof_total)) if dof_total > 0 else 1.0
    return ProbeReport(stat_total, dof_total, pval, successes, trials, False, {"groups": len(groups)})
