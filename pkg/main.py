from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Sequence

from complex_core import MalformedSimplexError, SimplicialComplex, SimplexNotFoundError, DimensionError, dumps, load, save
from config import configure_logging, settings
from experiments import (
    CampaignResult,
    ExperimentConfig,
    corpus_audit,
    run_betti_density,
    run_bound_audit,
    run_clique_exponent,
    run_delicate_case,
    run_frieze,
    run_lm_limit,
    static_parameter,
    write_audit,
)
from homology import betti_all
from limit_constants import ConstantDomainError, constant_report, critical_point
from persistence import UnsupportedCaseError, alpha_lifetime_sum, betti_steps, lifetime_sum
from random_models import (
    InconclusiveStatisticError,
    ParamFunctionError,
    growth_exponent,
    link_distribution_probe,
    parse_param_functions,
    phi_psi,
    sample_process,
    sample_static,
)
from spectral import betti_upper_bound, laplacian_spectrum, link_graph, vanishing_check


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2
EXIT_INCONCLUSIVE = 3

USAGE_ERRORS = (
    ValueError,
    KeyError,
    MalformedSimplexError,
    SimplexNotFoundError,
    DimensionError,
    ParamFunctionError,
    UnsupportedCaseError,
    ConstantDomainError,
    FileNotFoundError,
)


# -----------------------------
# Output helpers
# -----------------------------


def _emit(text: str, out: str | None) -> None:
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        logger.info("Wrote %s", path)
    else:
        sys.stdout.write(text)


def _emit_json(payload: Dict[str, Any], out: str | None) -> None:
    _emit(json.dumps(payload, indent=2, default=str) + "\n", out)


def _complex_from_args(args: argparse.Namespace) -> SimplicialComplex:
    if getattr(args, "input", None):
        return load(args.input)
    params, _ = static_parameter(args.model, args.n, args.p)
    return sample_static(args.n, params, args.seed, max_dim=getattr(args, "max_dim", None))


# -----------------------------
# Subcommands
# -----------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    X = _complex_from_args(args)
    if args.out:
        save(X, args.out)
    else:
        sys.stdout.write(dumps(X))
    return EXIT_OK


def cmd_betti(args: argparse.Namespace) -> int:
    X = _complex_from_args(args)
    k_max = args.k if args.k is not None else max(X.dim, 0)
    b = betti_all(X, k_max, mode=args.mode)
    _emit_json({"betti": b.as_list(), "mode": args.mode}, args.out)
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    X = _complex_from_args(args)
    tau = tuple(args.tau or ())
    report = laplacian_spectrum(link_graph(X, tau), alphas=args.alpha or ())
    _emit_json(
        {
            "tau": list(tau),
            "eigenvalues": list(report.eigenvalues),
            "spectral_gap": report.spectral_gap,
            "components": report.n_components,
            "gamma": {str(a): v for a, v in report.gammas.items()},
        },
        args.out,
    )
    return EXIT_OK


def cmd_bound(args: argparse.Namespace) -> int:
    X = _complex_from_args(args)
    D = args.d
    bound = betti_upper_bound(X, D)
    beta = betti_all(X, D - 1)[D - 1] if D >= 1 else 0
    vanishes = vanishing_check(X, D)
    violated = beta > bound.bound or (vanishes and beta != 0)
    _emit_json(
        {
            "D": D,
            "alpha": bound.alpha,
            "beta": beta,
            "bound": bound.bound,
            "breakdown": {" ".join(map(str, t)) or "()": v for t, v in bound.breakdown.items()},
            "vanishing_check": vanishes,
            "violated": violated,
        },
        args.out,
    )
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_lifetime(args: argparse.Namespace) -> int:
    pf = parse_param_functions(args.model)
    proc = sample_process(args.n, pf, k_max=args.k, seed=args.seed)
    steps = betti_steps(proc, args.k)
    summary = lifetime_sum(proc, args.k, T=args.T or None, steps=steps)
    for a in args.alpha or ():
        summary.L_alpha[a] = alpha_lifetime_sum(proc, args.k + 1, a, steps=steps)
    record = summary.to_record()
    record["times"] = steps.times.tolist()
    record["betti"] = steps.values.tolist()
    _emit_json(record, args.out)
    return EXIT_OK


def cmd_constants(args: argparse.Namespace) -> int:
    cp = critical_point(args.d)
    rows = [constant_report(args.d, a).to_dict() for a in (args.alpha or [1.0])]
    _emit_json({"t_star": cp.t_star, "c_star": cp.c_star, "constants": rows}, args.out)
    return EXIT_OK


def cmd_phi(args: argparse.Namespace) -> int:
    pf = parse_param_functions(args.model)
    us = args.u or [0.1, 0.01, 0.001]
    table = [{"u": u, "phi": f, "psi": s} for u in us for f, s in [phi_psi(pf, args.k, u)]]
    ge = growth_exponent(pf, args.k)
    _emit_json(
        {
            "model": pf.name,
            "k": args.k,
            "table": table,
            "a_phi": ge.a_phi,
            "a_psi": ge.a_psi,
            "predicted_exponent": ge.predicted,
            "regime": ge.regime,
        },
        args.out,
    )
    return EXIT_OK


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    raw: Dict[str, Any] = {}
    if args.config:
        raw.update(json.loads(Path(args.config).read_text()))
    overrides = {
        "model": args.model,
        "n_grid": args.n,
        "k": args.k,
        "d": args.d,
        "alpha": args.alpha,
        "p": args.p,
        "trials": args.trials,
        "seed": args.seed,
        "T": args.T,
        "out": args.out,
        "format": args.format,
        "workers": args.workers,
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(raw)


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = _experiment_config(args)
    which = args.campaign
    logger.info("[Campaign] %s with %s", which, cfg)
    if cfg.T is not None and which != "clique":
        raise ValueError(f"--T (truncated lifetime sums) applies to the clique campaign, not {which!r}")

    if which in ("audit", "corpus"):
        if which == "audit":
            report = run_bound_audit(cfg.model, cfg.n_grid[-1], cfg.k, cfg.trials, cfg.seed, cfg.p, cfg.rho, cfg.l)
        else:
            report = corpus_audit(cfg.trials, cfg.seed, n_max=cfg.n_grid[-1])
        if cfg.out:
            write_audit(report, cfg.out)
        else:
            _emit_json(report.to_record(), None)
        return EXIT_VIOLATION if report.violations else EXIT_OK

    if which == "probe":
        params, _ = static_parameter(cfg.model, cfg.n_grid[-1], cfg.p)
        probe = link_distribution_probe(cfg.n_grid[-1], params, cfg.k, cfg.trials, cfg.seed)
        _emit_json(
            {
                "statistic": probe.statistic,
                "dof": probe.dof,
                "p_value": probe.p_value,
                "successes": probe.successes,
                "trials": probe.trials,
                "inconclusive": probe.inconclusive,
                **probe.detail,
            },
            cfg.out,
        )
        return EXIT_VIOLATION if probe.require_conclusive().p_value <= 0.001 else EXIT_OK

    result: CampaignResult
    if which == "frieze":
        result = run_frieze(cfg.n_grid, cfg.trials, cfg.seed, cfg.workers)
    elif which == "lm":
        result = run_lm_limit(cfg.d, cfg.n_grid, cfg.trials, cfg.alpha, cfg.seed, cfg.workers)
    elif which == "clique":
        result = run_clique_exponent(cfg.k, cfg.n_grid, cfg.trials, cfg.seed, cfg.d, cfg.workers, cfg.T)
    elif which == "density":
        result = run_betti_density(cfg.d, cfg.n_grid[-1], args.c or [0.5, 1.0, 2.0, 3.0, 4.0], cfg.trials, cfg.seed)
    elif which == "delicate":
        result = run_delicate_case(cfg.d, cfg.n_grid[-1], cfg.trials, cfg.seed)
    else:
        raise ValueError(f"Unknown campaign {which!r}")

    if cfg.out:
        result.write(cfg.out, cfg.format)
    else:
        sys.stdout.write(result.render(cfg.format))
    if result.passed is False:
        logger.warning("[Campaign] %s outside tolerance: %s", result.name, result.detail or result.slope)
        return EXIT_VIOLATION
    return EXIT_OK


# -----------------------------
# Parser
# -----------------------------


def _instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="complex file (header `n N`, one simplex per line)")
    p.add_argument("--model", default="clique", help="er, clique, lm(d), flag(d) or JSON {\"values\": [...]}")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--max-dim", dest="max_dim", type=int, default=None)
    p.add_argument("--out")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; 2 is reserved for audit violations here."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="betti-lab", description="Betti numbers and lifetime sums of random simplicial complexes")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a static multi-parameter complex")
    _instance_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("betti", help="reduced Betti numbers of a complex")
    _instance_flags(p)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--mode", choices=["prime_field", "exact_rational"], default="prime_field")
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("spectrum", help="link Laplacian spectrum")
    _instance_flags(p)
    p.add_argument("--tau", type=int, nargs="*", default=[])
    p.add_argument("--alpha", type=float, nargs="*", default=[])
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bound", help="gamma-sum upper bound on beta_{D-1}")
    _instance_flags(p)
    p.add_argument("--d", type=int, default=2)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("lifetime", help="Betti step function and lifetime sums of one process")
    p.add_argument("--model", default="er", help="preset (er, clique, lm(d), flag(d)) or JSON parameter functions")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--T", type=float, nargs="*", default=None)
    p.add_argument("--alpha", type=float, nargs="*", default=[])
    p.add_argument("--out")
    p.set_defaults(func=cmd_lifetime)

    p = sub.add_parser("constants", help="limit constants I_{d-1}^{(alpha)}")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--alpha", type=float, nargs="*", default=[1.0])
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("phi", help="Phi_k / Psi_k table and growth exponent")
    p.add_argument("--model", default="flag(1)")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--u", type=float, nargs="*", default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("experiment", help="Monte Carlo campaigns and audits")
    p.add_argument("campaign", choices=["frieze", "lm", "clique", "audit", "corpus", "density", "delicate", "probe"])
    p.add_argument("--config", help="JSON file mirroring these flags")
    p.add_argument("--model")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--c", type=float, nargs="*", default=None)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except InconclusiveStatisticError as e:
        logger.error("Inconclusive: %s", e)
        return EXIT_INCONCLUSIVE
    except USAGE_ERRORS as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
