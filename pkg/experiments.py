from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Sequence, Tuple

import numpy as np
from langsmith import traceable
from scipy import optimize, stats

from config import settings
from homology import betti, morse_sandwich_holds
from limit_constants import I_quadrature, I_series, g, h, zeta
from persistence import alpha_lifetime_sum, kruskal_lifetimes, lifetime_sum
from random_models import (
    MultiParameter,
    ParamFunctionError,
    derive_params,
    flag_parameter,
    lm_parameter,
    lm_preset,
    parse_param_functions,
    sample_process,
    sample_static,
    trial_seeds,
)
from spectral import betti_upper_bound, vanishing_check


logger = logging.getLogger(__name__)

OutputFormat = Literal["csv", "json"]

CSV_COLUMNS = ("model", "n", "k", "alpha", "trials", "mean", "std", "reference", "slope", "r2")

# absolute gap allowed between the largest-n mean L_0 and zeta(3)
FRIEZE_TOLERANCE = 0.05


# -----------------------------
# Configuration and results
# -----------------------------


@dataclass
class ExperimentConfig:
    """One campaign's knobs; a JSON config file mirrors these names."""

    model: str = "er"
    n_grid: Tuple[int, ...] = (10,)
    k: int = 0
    d: int = 1
    alpha: float = 1.0
    p: float = 0.3
    trials: int = 100
    seed: int = field(default_factory=lambda: settings.default_seed)
    T: float | None = None
    out: str | None = None
    format: OutputFormat = "csv"
    workers: int = 1
    rho: float = 1.0
    l: int = 1

    def __post_init__(self) -> None:
        self.n_grid = tuple(int(n) for n in self.n_grid)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.n_grid:
            raise ValueError("n_grid must not be empty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError(f"n_grid must be strictly ascending, got {self.n_grid}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"Unknown output format {self.format!r}")

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"Unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json_file(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class CampaignRow:
    model: str
    n: int
    k: int
    alpha: float
    trials: int
    mean: float
    std: float
    reference: float | None = None
    slope: float | None = None
    r2: float | None = None


@dataclass
class CampaignResult:
    name: str
    rows: List[CampaignRow]
    reference: float | None = None
    slope: float | None = None
    r2: float | None = None
    passed: bool | None = None
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: ("" if v is None else v) for k, v in asdict(row).items()})
        return buf.getvalue()

    def to_jsonl(self) -> str:
        lines = [json.dumps({"campaign": self.name, **asdict(row)}) for row in self.rows]
        summary = {
            "campaign": self.name,
            "summary": True,
            "reference": self.reference,
            "slope": self.slope,
            "r2": self.r2,
            "passed": self.passed,
            "detail": self.detail,
        }
        lines.append(json.dumps(summary, default=_json_default))
        return "\n".join(lines) + "\n"

    def render(self, fmt: OutputFormat = "csv") -> str:
        return self.to_csv() if fmt == "csv" else self.to_jsonl()

    def write(self, path: str | Path, fmt: OutputFormat = "csv") -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(fmt))
        logger.info("[Campaign] %s written to %s", self.name, path)
        return path


def _json_default(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def _loglog_fit(ns: Sequence[int], means: Sequence[float]) -> Tuple[float | None, float | None]:
    """Slope and R^2 of log(mean) against log(n); nonpositive means are dropped."""
    pts = [(math.log(n), math.log(m)) for n, m in zip(ns, means) if m > 0]
    if len(pts) < 2:
        return None, None
    x, y = zip(*pts)
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.rvalue ** 2)


def _corrected_exponent(ns: Sequence[int], means: Sequence[float], errors: Sequence[float]) -> float | None:
    """
    Exponent s of mean ~ A n^s + B n^(s - c), c = settings.finite_size_order.

    For each s, A and B come from weighted linear least squares; s minimises the
    residual. Needs three grid points and positive means.
    """
    if len(ns) < 3 or any(m <= 0 for m in means):
        return None
    x = np.asarray(ns, dtype=float) / max(ns)
    y = np.asarray(means, dtype=float)
    err = np.asarray(errors, dtype=float)
    w = 1.0 / err if np.all(err > 0) else np.ones_like(y)
    c = settings.finite_size_order

    def residual(s: float) -> float:
        design = np.column_stack([x ** s, x ** (s - c)]) * w[:, None]
        coef, *_ = np.linalg.lstsq(design, y * w, rcond=None)
        r = design @ coef - y * w
        return float(r @ r)

    grid = np.linspace(0.0, 4.0, 81)
    best = float(grid[int(np.argmin([residual(s) for s in grid]))])
    step = float(grid[1] - grid[0])
    res = optimize.minimize_scalar(
        residual,
        bounds=(max(0.0, best - step), min(4.0, best + step)),
        method="bounded",
        options={"xatol": 1e-7},
    )
    return float(res.x) if res.fun <= residual(best) else best


def _map_trials(fn: Callable[[int], Any], seeds: Sequence[int], workers: int = 1) -> List[Any]:
    """Per-trial statistics in seed order; deterministic for any worker count."""
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


# -----------------------------
# Per-trial statistics (module level so worker processes can pickle them)
# -----------------------------


@dataclass(frozen=True)
class _FriezeTrial:
    n: int
    cross_check: bool = False

    def __call__(self, seed: int) -> float:
        proc = sample_process(self.n, lm_preset(1), k_max=0, seed=seed)
        L = lifetime_sum(proc, 0).L
        if self.cross_check:
            oracle = math.fsum(kruskal_lifetimes(proc))
            if not math.isclose(L, oracle, rel_tol=1e-12, abs_tol=1e-12):
                raise AssertionError(f"L_0 = {L} but Kruskal gives {oracle} (n={self.n}, seed={seed})")
        return L


@dataclass(frozen=True)
class _LMTrial:
    n: int
    d: int
    alpha: float

    def __call__(self, seed: int) -> float:
        proc = sample_process(self.n, lm_preset(self.d), k_max=self.d - 1, seed=seed)
        return alpha_lifetime_sum(proc, self.d, self.alpha)


@dataclass(frozen=True)
class _LifetimeTrial:
    """(L_k, (L_k)_T); the second entry repeats L_k when T is None."""

    n: int
    model: str
    k: int
    T: float | None = None

    def __call__(self, seed: int) -> Tuple[float, float]:
        proc = sample_process(self.n, parse_param_functions(self.model), k_max=self.k, seed=seed)
        summary = lifetime_sum(proc, self.k, T=self.T)
        if self.T is None:
            return summary.L, summary.L
        return summary.L, summary.L_T[float(self.T)]


# -----------------------------
# Campaigns
# -----------------------------


@traceable(run_type="chain", name="run_frieze")
def run_frieze(
    n_grid: Sequence[int],
    trials: int,
    seed: int | None = None,
    workers: int = 1,
    cross_check: bool = False,
) -> CampaignResult:
    """Mean L_0 of the Erdos-Renyi process (the MST weight) against zeta(3)."""
    seed = settings.default_seed if seed is None else seed
    ref = zeta(3)
    rows: List[CampaignRow] = []
    for n in n_grid:
        logger.info("[Campaign] frieze n=%d trials=%d", n, trials)
        values = _map_trials(_FriezeTrial(n, cross_check), trial_seeds(seed + n, trials), workers)
        mean, std = _mean_std(values)
        rows.append(CampaignRow("er", n, 0, 1.0, trials, mean, std, ref))
    last = rows[-1]
    gap = abs(last.mean - ref)
    detail = {"abs_gap": gap, "four_sigma": 4 * last.std / math.sqrt(trials)}
    return CampaignResult("frieze", rows, ref, passed=gap <= FRIEZE_TOLERANCE, detail=detail)


@traceable(run_type="chain", name="run_lm_limit")
def run_lm_limit(
    d: int,
    n_grid: Sequence[int],
    trials: int,
    alpha: float = 1.0,
    seed: int | None = None,
    workers: int = 1,
) -> CampaignResult:
    """
    L_{d-1}^{(alpha)} / n^{d-alpha} of the d-Linial-Meshulam process against
    I_{d-1}^{(alpha)}. Checks a shrinking gap, ending below settings.limit_gap.
    """
    seed = settings.default_seed if seed is None else seed
    ref = I_series(d, alpha) if float(alpha).is_integer() else I_quadrature(d, alpha)
    rows: List[CampaignRow] = []
    raw_means: List[float] = []
    for n in n_grid:
        logger.info("[Campaign] lm(%d) n=%d alpha=%g trials=%d", d, n, alpha, trials)
        scale = float(n) ** (d - alpha)
        values = _map_trials(_LMTrial(n, d, alpha), trial_seeds(seed + n, trials), workers)
        mean, std = _mean_std([v / scale for v in values])
        raw_means.append(mean * scale)
        rows.append(CampaignRow(f"lm({d})", n, d - 1, alpha, trials, mean, std, ref))

    slope, r2 = _loglog_fit(n_grid, raw_means)
    gaps = [abs(r.mean - ref) / ref for r in rows]
    shrinking = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    passed = shrinking and gaps[-1] < settings.limit_gap
    rows = [CampaignRow(**{**asdict(r), "slope": slope, "r2": r2}) for r in rows]
    return CampaignResult(
        f"lm({d})",
        rows,
        ref,
        slope,
        r2,
        passed,
        {"relative_gaps": gaps, "predicted_slope": d - alpha},
    )


def predicted_exponent(k: int, d: int = 1) -> float:
    """Growth order of E[L_k] for the d-flag process: (k+2)d/(d+1) - 1/C(k+1, d)."""
    if k + 1 < d:
        raise ValueError(f"flag({d}) exponent needs k >= d - 1, got k={k}")
    return (k + 2) * d / (d + 1) - 1.0 / math.comb(k + 1, d)


@traceable(run_type="chain", name="run_clique_exponent")
def run_clique_exponent(
    k: int,
    n_grid: Sequence[int],
    trials: int,
    seed: int | None = None,
    d: int = 1,
    workers: int = 1,
    T: float | None = None,
) -> CampaignResult:
    """
    Growth exponent of mean L_k for the d-flag process (d = 1: clique process).

    With three or more grid points the exponent is fitted with a sub-leading
    n^(s - c) term; the plain log-log slope is kept in detail["loglog_slope"].
    With T set, the mean truncated sums (L_k)_T are reported per n as well.
    """
    seed = settings.default_seed if seed is None else seed
    model = f"flag({d})"
    predicted = predicted_exponent(k, d)
    rows: List[CampaignRow] = []
    errors: List[float] = []
    truncated: Dict[int, float] = {}
    for n in n_grid:
        logger.info("[Campaign] %s k=%d n=%d trials=%d", model, k, n, trials)
        values = _map_trials(_LifetimeTrial(n, model, k, T), trial_seeds(seed + n, trials), workers)
        mean, std = _mean_std([L for L, _ in values])
        rows.append(CampaignRow(model, n, k, 1.0, trials, mean, std, predicted))
        errors.append(std / math.sqrt(trials))
        if T is not None:
            truncated[n] = _mean_std([L_T for _, L_T in values])[0]

    means = [r.mean for r in rows]
    loglog_slope, r2 = _loglog_fit(n_grid, means)
    slope = _corrected_exponent(n_grid, means, errors)
    if slope is None:
        slope = loglog_slope
    passed = slope is not None and abs(slope - predicted) <= settings.slope_tol
    if passed and predicted > 0:
        passed = r2 is not None and r2 > 0.95
    rows = [CampaignRow(**{**asdict(r), "slope": slope, "r2": r2}) for r in rows]
    detail: Dict[str, Any] = {"loglog_slope": loglog_slope, "finite_size_order": settings.finite_size_order}
    if T is not None:
        detail["T"] = T
        detail["truncated_means"] = truncated
    logger.info("[Campaign] %s k=%d slope=%s (log-log %s) predicted=%.4f", model, k, slope, loglog_slope, predicted)
    return CampaignResult(model, rows, predicted, slope, r2, passed, detail)


@traceable(run_type="chain", name="run_betti_density")
def run_betti_density(
    d: int,
    n: int,
    c_grid: Sequence[float],
    trials: int,
    seed: int | None = None,
) -> CampaignResult:
    """
    beta_{d-1} and beta_d of Y_d(n, c/n), normalised by C(n, d), against
    h_d(c) and g_d(c).
    """
    seed = settings.default_seed if seed is None else seed
    norm = math.comb(n, d)
    rows: List[CampaignRow] = []
    for c in c_grid:
        p = min(1.0, c / n)
        lower: List[float] = []
        upper: List[float] = []
        for s in trial_seeds(seed + int(1000 * c), trials):
            X = sample_static(n, lm_parameter(n, d, p), s, max_dim=d)
            lower.append(betti(X, d - 1) / norm)
            upper.append(betti(X, d) / norm)
        m, sd = _mean_std(lower)
        rows.append(CampaignRow(f"lm({d})|c={c:g}", n, d - 1, 1.0, trials, m, sd, h(d, c)))
        m, sd = _mean_std(upper)
        rows.append(CampaignRow(f"lm({d})|c={c:g}", n, d, 1.0, trials, m, sd, g(d, c)))
        logger.info("[Campaign] betti density d=%d n=%d c=%g", d, n, c)
    worst = max(abs(r.mean - r.reference) for r in rows)
    return CampaignResult(f"density(lm({d}))", rows, passed=worst < settings.limit_gap, detail={"max_abs_gap": worst})


@traceable(run_type="chain", name="run_delicate_case")
def run_delicate_case(d: int, n: int, trials: int, seed: int | None = None) -> CampaignResult:
    """L_k = 0 on every trial of the d-Linial-Meshulam process for k <= d-2."""
    seed = settings.default_seed if seed is None else seed
    rows: List[CampaignRow] = []
    nonzero = 0
    for k in range(d - 1):
        values = [_LifetimeTrial(n, f"lm({d})", k)(s)[0] for s in trial_seeds(seed + k, trials)]
        nonzero += sum(1 for v in values if v != 0.0)
        mean, std = _mean_std(values)
        rows.append(CampaignRow(f"lm({d})", n, k, 1.0, trials, mean, std, 0.0))
    if nonzero:
        logger.warning("[Campaign] lm(%d): %d trials with nonzero L_k for k <= d-2", d, nonzero)
    return CampaignResult(f"delicate(lm({d}))", rows, 0.0, passed=nonzero == 0, detail={"nonzero_trials": nonzero})


# -----------------------------
# Bound audits
# -----------------------------


def static_parameter(model: str, n: int, p: float) -> Tuple[MultiParameter, int | None]:
    """
    Static multi-parameter for a model name: `er`, `clique`, `lm(d)`, `flag(d)`
    or a JSON {"values": [...]} vector. Also returns d (None for custom vectors).
    """
    text = model.strip()
    if text == "er":
        return lm_parameter(n, 1, p), 1
    if text == "clique":
        return flag_parameter(n, 1, p), 1
    for prefix, builder in (("lm(", lm_parameter), ("flag(", flag_parameter)):
        if text.startswith(prefix) and text.endswith(")"):
            d = int(text[len(prefix):-1])
            return builder(n, d, p), d
    try:
        raw = json.loads(text)
        values = tuple(float(v) for v in raw["values"])
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ParamFunctionError(f"Unknown static model {model!r}") from e
    padded = values + (0.0,) * max(0, n - len(values))
    return MultiParameter(padded[:n]), None


@dataclass
class AuditReport:
    model: str
    n: int
    k: int
    trials: int
    mean_beta: float = 0.0
    nonzero_freq: float = 0.0
    bounds: Dict[str, float] = field(default_factory=dict)
    ratios: Dict[str, float] = field(default_factory=dict)
    cvt_violations: int = 0
    vanishing_violations: int = 0
    morse_violations: int = 0
    bound_slack: List[int] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return self.cvt_violations + self.vanishing_violations + self.morse_violations

    def to_record(self) -> Dict[str, Any]:
        rec = asdict(self)
        rec["violations"] = self.violations
        rec["mean_slack"] = float(np.mean(self.bound_slack)) if self.bound_slack else 0.0
        rec.pop("bound_slack")
        return rec


def bound_expressions(n: int, k: int, p: MultiParameter, rho: float = 1.0, l: int = 1, d: int | None = None, model: str = "") -> Dict[str, float]:
    """
    Right-hand sides of the Morse lower bound, the vanishing bounds and the
    decay bound, with every unknown asymptotic constant set to 1.
    """
    derived = derive_params(p)
    q_k, r_prev, r_k = derived.q_k(k), derived.r_k(k - 1), derived.r_k(k)
    base = float(n) ** (k + 1) * q_k
    out: Dict[str, float] = {"morse_lower": base}
    nr_prev = n * r_prev
    out["vanishing_prob"] = base * nr_prev ** (-rho) if nr_prev > 0 else base
    out["vanishing_mean"] = base * nr_prev ** (1 - rho) if nr_prev > 0 else base
    out["decay"] = base * min(1.0, (n * r_k) ** (-l)) if r_k > 0 else base
    # theta = 1 for lm(d), 1/(k+1) for the clique model
    theta = 1.0 / (k + 1) if model in ("clique", "flag(1)") else 1.0
    out["corollary_vanishing_prob"] = base * nr_prev ** (-rho / theta) if nr_prev > 0 else base
    if model.startswith("lm(") and d is not None and k == d - 1:
        pd = p[d]
        out["lm_decay"] = float(n) ** d * min(1.0, (n * pd) ** (-l)) if pd > 0 else float(n) ** d
    if model in ("clique", "flag(1)"):
        pp = p[1]
        q = pp ** math.comb(k + 1, 2)
        out["clique_decay"] = float(n) ** (k + 1) * q * (min(1.0, (n * pp ** (k + 1)) ** (-l)) if pp > 0 else 1.0)
    return out


def audit_instance(X, k: int, report: AuditReport) -> int:
    """Checks one complex; returns beta_k."""
    D = k + 1
    beta = betti(X, k)
    bound = betti_upper_bound(X, D).bound
    if beta > bound:
        report.cvt_violations += 1
        logger.error("[Audit] beta_%d = %d exceeds gamma-sum bound %d", k, beta, bound)
    report.bound_slack.append(bound - beta)
    if vanishing_check(X, D) and beta != 0:
        report.vanishing_violations += 1
        logger.error("[Audit] spectral-gap condition holds but beta_%d = %d", k, beta)
    if not morse_sandwich_holds(X, k, beta):
        report.morse_violations += 1
        logger.error("[Audit] Morse sandwich fails for beta_%d = %d", k, beta)
    return beta


@traceable(run_type="chain", name="run_bound_audit")
def run_bound_audit(
    model: str,
    n: int,
    k: int,
    trials: int,
    seed: int | None = None,
    p: float = 0.3,
    rho: float = 1.0,
    l: int = 1,
) -> AuditReport:
    """
    Empirical E[beta_k] and P(beta_k != 0) next to the bound expressions, plus
    the per-instance gamma-sum, spectral-gap vanishing and Morse checks.
    """
    seed = settings.default_seed if seed is None else seed
    params, d = static_parameter(model, n, p)
    report = AuditReport(model, n, k, trials)
    betas: List[int] = []
    for s in trial_seeds(seed, trials):
        X = sample_static(n, params, s, max_dim=k + 1)
        betas.append(audit_instance(X, k, report))
    report.mean_beta = float(np.mean(betas))
    report.nonzero_freq = float(np.mean([b != 0 for b in betas]))
    report.bounds = bound_expressions(n, k, params, rho, l, d, model)
    for name, value in report.bounds.items():
        observed = report.nonzero_freq if name.endswith("_prob") else report.mean_beta
        report.ratios[name] = observed / value if value > 0 else (0.0 if observed == 0 else math.inf)
    logger.info("[Audit] %s n=%d k=%d: mean beta=%.4f, violations=%d", model, n, k, report.mean_beta, report.violations)
    return report


@traceable(run_type="chain", name="corpus_audit")
def corpus_audit(instances: int, seed: int | None = None, n_max: int = 10) -> AuditReport:
    """
    Gamma-sum and spectral-gap audits over a mixed corpus of lm(D), flag(D) and
    custom multi-parameter complexes with n <= n_max and D in {1, 2, 3}.
    """
    seed = settings.default_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    report = AuditReport("corpus", n_max, -1, instances)
    betas: List[int] = []
    for s in trial_seeds(seed, instances):
        n = int(rng.integers(3, n_max + 1))
        D = int(rng.integers(1, 4))
        kind = int(rng.integers(0, 3))
        p = float(rng.uniform(0.1, 0.9))
        if kind == 0:
            params = lm_parameter(n, D, p)
        elif kind == 1:
            params = flag_parameter(n, D, p)
        else:
            params = MultiParameter(tuple(float(x) for x in rng.uniform(0.3, 1.0, size=n)))
        X = sample_static(n, params, s, max_dim=D)
        betas.append(audit_instance(X, D - 1, report))
    report.mean_beta = float(np.mean(betas)) if betas else 0.0
    logger.info("[Audit] corpus of %d complexes: violations=%d", instances, report.violations)
    return report


def write_audit(report: AuditReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_record(), default=_json_default, indent=2) + "\n")
    return path
