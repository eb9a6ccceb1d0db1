"""Configuration management for iasim."""

import os
from typing import Literal

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]


class SimulatorConfig:
    """Configuration manager for iasim."""

    def __init__(self):
        # Allocator limits
        self.exhaustive_cap: int = int(os.getenv("IASIM_EXHAUSTIVE_CAP", "10000000"))
        self.joint_max_iter: int = int(os.getenv("IASIM_JOINT_MAX_ITER", "20"))

        # Monte Carlo
        self.rvq_max_bits: int = int(os.getenv("IASIM_RVQ_MAX_BITS", "16"))
        self.ia_max_iter: int = int(os.getenv("IASIM_IA_MAX_ITER", "500"))
        self.ia_tol: float = float(os.getenv("IASIM_IA_TOL", "1e-10"))
        self.ia_restarts: int = int(os.getenv("IASIM_IA_RESTARTS", "3"))

        # Erlang mixture tolerances
        self.merge_rtol: float = float(os.getenv("IASIM_MERGE_RTOL", "1e-9"))
        self.perturb_rtol: float = float(os.getenv("IASIM_PERTURB_RTOL", "1e-6"))

        # Sweep / reporting
        self.compare_threshold_pct: float = float(
            os.getenv("IASIM_COMPARE_THRESHOLD_PCT", "5.0")
        )
        self.max_workers: int = int(os.getenv("IASIM_MAX_WORKERS", "4"))

        self.log_level: LogLevel = self._get_log_level()

    def _get_log_level(self) -> LogLevel:
        """Get the configured log level."""
        level = os.getenv("IASIM_LOG_LEVEL", "WARNING").upper()

        if level not in ["DEBUG", "INFO", "WARNING", "ERROR"]:
            print(f"⚠️  Warning: Invalid log level '{level}', defaulting to 'WARNING'")
            return "WARNING"

        return level  # type: ignore[return-value]

    def validate(self) -> bool:
        """Validate the configuration."""
        errors = []

        if self.exhaustive_cap < 1:
            errors.append("IASIM_EXHAUSTIVE_CAP must be a positive integer")
        if self.joint_max_iter < 1:
            errors.append("IASIM_JOINT_MAX_ITER must be a positive integer")
        if not 0 <= self.rvq_max_bits <= 24:
            errors.append("IASIM_RVQ_MAX_BITS must lie in [0, 24]")
        if self.ia_max_iter < 1:
            errors.append("IASIM_IA_MAX_ITER must be a positive integer")
        if self.ia_tol <= 0:
            errors.append("IASIM_IA_TOL must be positive")
        if self.ia_restarts < 1:
            errors.append("IASIM_IA_RESTARTS must be at least 1")
        if not 0 < self.merge_rtol < self.perturb_rtol:
            errors.append("IASIM_MERGE_RTOL must be positive and below IASIM_PERTURB_RTOL")
        if self.compare_threshold_pct < 0:
            errors.append("IASIM_COMPARE_THRESHOLD_PCT must be nonnegative")
        if self.max_workers < 1:
            errors.append("IASIM_MAX_WORKERS must be a positive integer")

        if errors:
            print("❌ Configuration errors:")
            for error in errors:
                print(f"   - {error}")
            return False

        return True

    def as_dict(self) -> dict:
        """Return the settings as a plain dictionary."""
        return {
            "exhaustive_cap": self.exhaustive_cap,
            "joint_max_iter": self.joint_max_iter,
            "rvq_max_bits": self.rvq_max_bits,
            "ia_max_iter": self.ia_max_iter,
            "ia_tol": self.ia_tol,
            "ia_restarts": self.ia_restarts,
            "merge_rtol": self.merge_rtol,
            "perturb_rtol": self.perturb_rtol,
            "compare_threshold_pct": self.compare_threshold_pct,
            "max_workers": self.max_workers,
            "log_level": self.log_level,
        }


# Global configuration instance
config = SimulatorConfig()
