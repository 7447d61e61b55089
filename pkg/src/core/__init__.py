"""
Core infrastructure for the stripe-energy toolkit.

This package contains the structured logging and error handling shared by
the numerical modules and the command-line interface.
"""

from .error_handling import (
    BudgetExceededError,
    ConfigurationError,
    KernelDomainError,
    PreconditionError,
    StripeEnergyError,
    ToleranceError,
    handle_computation_errors,
)
from .logging_config import configure_logging, get_logger, log_error_context

__all__ = [
    # Logging
    "configure_logging",
    "get_logger",
    "log_error_context",
    # Error handling
    "StripeEnergyError",
    "PreconditionError",
    "KernelDomainError",
    "BudgetExceededError",
    "ToleranceError",
    "ConfigurationError",
    "handle_computation_errors",
]
