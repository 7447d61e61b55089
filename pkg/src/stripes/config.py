#!/usr/bin/env python3
"""
Compute configuration for the stripe-energy toolkit.

Tolerances, image radii, enumeration budgets and worker counts, loaded from
environment variables.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

from src.core.error_handling import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass
class ComputeConfig:
    """Numerical settings shared by the lattice and 1D modules."""

    workers: int = 1
    max_image_radius: int = 1_000_000
    lattice_tol: float = 1e-10
    # Per-entry periodization tolerance in d >= 2, where the image box grows as R^d
    lattice_tol_multi: float = 1e-6
    quad_tol: float = 1e-10

    # Exhaustive enumeration budgets, in cells (2**cells configurations)
    enum_budget_d1: int = 20
    enum_budget_d2: int = 25

    # Below this many cells the nonlocal convolution is done directly
    fft_threshold: int = 64

    def __post_init__(self):
        """Validate settings."""
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.max_image_radius < 1:
            raise ConfigurationError(
                f"max_image_radius must be >= 1, got {self.max_image_radius}"
            )
        if min(self.lattice_tol, self.lattice_tol_multi, self.quad_tol) <= 0:
            raise ConfigurationError("tolerances must be positive")

    def periodization_tol(self, d: int) -> float:
        """Return the image-sum tolerance for dimension d."""
        return self.lattice_tol if d == 1 else self.lattice_tol_multi

    def enum_budget(self, d: int) -> int:
        """Return the enumeration budget in cells for dimension d."""
        return self.enum_budget_d1 if d == 1 else self.enum_budget_d2

    @classmethod
    def from_environment(cls) -> "ComputeConfig":
        """Create configuration from environment variables."""
        defaults = cls()
        try:
            config = cls(
                workers=int(os.getenv("STRIPES_WORKERS", str(defaults.workers))),
                max_image_radius=int(
                    os.getenv("STRIPES_MAX_IMAGE_RADIUS", str(defaults.max_image_radius))
                ),
                lattice_tol=float(os.getenv("STRIPES_LATTICE_TOL", str(defaults.lattice_tol))),
                lattice_tol_multi=float(
                    os.getenv("STRIPES_LATTICE_TOL_MULTI", str(defaults.lattice_tol_multi))
                ),
                quad_tol=float(os.getenv("STRIPES_QUAD_TOL", str(defaults.quad_tol))),
                enum_budget_d1=int(
                    os.getenv("STRIPES_ENUM_BUDGET_D1", str(defaults.enum_budget_d1))
                ),
                enum_budget_d2=int(
                    os.getenv("STRIPES_ENUM_BUDGET_D2", str(defaults.enum_budget_d2))
                ),
                fft_threshold=int(os.getenv("STRIPES_FFT_THRESHOLD", str(defaults.fft_threshold))),
            )
        except ValueError as e:
            raise ConfigurationError(f"Invalid numeric environment setting: {e}") from e

        logger.info(
            f"Compute config: workers={config.workers}, "
            f"max_image_radius={config.max_image_radius}, "
            f"lattice_tol={config.lattice_tol:g}, quad_tol={config.quad_tol:g}"
        )
        return config


# Global configuration instance
_config: Optional[ComputeConfig] = None


def get_compute_config() -> ComputeConfig:
    """Get the compute configuration instance."""
    global _config
    if _config is None:
        _config = ComputeConfig.from_environment()
    return _config


def reload_compute_config() -> None:
    """Reload compute configuration from environment."""
    global _config
    _config = None
