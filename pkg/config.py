from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from dotenv import load_dotenv

# Local overrides (tolerances, seeds, log level) live in .env.local
load_dotenv(".env.local", override=True)


@dataclass
class Settings:
    # Exact linear algebra
    prime_modulus: int = int(os.getenv("BETTI_PRIME_MODULUS", "2147483647"))

    # Spectral / harmonic thresholds
    eigen_tol: float = float(os.getenv("BETTI_EIGEN_TOL", "1e-9"))
    harmonic_tol: float = float(os.getenv("BETTI_HARMONIC_TOL", "1e-8"))

    # Closed-walk enumeration budget (2l steps)
    walk_max_l: int = int(os.getenv("BETTI_WALK_MAX_L", "4"))

    # Limit constants
    quad_abs_tol: float = float(os.getenv("BETTI_QUAD_ABS_TOL", "1e-10"))

    # Campaign tolerances (trend checks, never exact equalities)
    slope_tol: float = float(os.getenv("BETTI_SLOPE_TOL", "0.3"))
    limit_gap: float = float(os.getenv("BETTI_LIMIT_GAP", "0.2"))
    # relative order n^-c of the sub-leading term in growth-exponent fits
    finite_size_order: float = float(os.getenv("BETTI_FINITE_SIZE_ORDER", "0.5"))

    # Runs
    default_seed: int = int(os.getenv("BETTI_DEFAULT_SEED", "20240601"))

    # Logging
    log_level: str = os.getenv("BETTI_LOG_LEVEL", "INFO")


settings = Settings()


def configure_logging(level: str | None = None) -> None:
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
