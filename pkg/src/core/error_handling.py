"""
Error types and error-handling helpers for the stripe-energy toolkit.

Failures fall in two families the CLI maps to distinct exit codes: violated
preconditions (bad parameters, singular kernel points, enumeration budgets)
and tolerance failures (lattice sums, quadratures, brackets that cannot meet
the requested accuracy).
"""

import functools
import logging
import time
from typing import Callable

from .logging_config import log_error_context


class StripeEnergyError(Exception):
    """Base exception for all toolkit errors."""

    pass


class PreconditionError(StripeEnergyError):
    """Raised when an operation is called outside its domain."""

    pass


class KernelDomainError(PreconditionError):
    """Raised when a kernel is evaluated at a singular point."""

    pass


class BudgetExceededError(PreconditionError):
    """Raised when an exhaustive search exceeds its configured budget."""

    pass


class ToleranceError(StripeEnergyError):
    """Raised when a numerical routine cannot reach the requested accuracy."""

    pass


class ConfigurationError(StripeEnergyError):
    """Raised when configuration is invalid."""

    pass


def _error_category(error: Exception) -> str:
    if isinstance(error, PreconditionError):
        return "precondition"
    if isinstance(error, ToleranceError):
        return "tolerance"
    if isinstance(error, ConfigurationError):
        return "configuration"
    return "unexpected"


def handle_computation_errors(operation_name: str, component: str = "stripes"):
    """
    Decorator logging start, duration and categorized failures of a computation.

    Args:
        operation_name: Name of the operation being performed
        component: Component name for logging context
    """

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            logger = logging.getLogger(func.__module__)
            logger.info(f"Starting {operation_name}")

            start_time = time.time()
            try:
                result = func(*args, **kwargs)
                duration = time.time() - start_time
                logger.info(f"Successfully completed {operation_name} in {duration:.2f}s")
                return result

            except Exception as e:
                context = {
                    "operation": operation_name,
                    "component": component,
                    "function": func.__name__,
                    "error_category": _error_category(e),
                    "duration": time.time() - start_time,
                }
                if context["error_category"] == "unexpected":
                    context["args_summary"] = str(args)[:200] if args else None
                    context["kwargs_summary"] = (
                        {k: str(v)[:100] for k, v in kwargs.items()} if kwargs else None
                    )
                log_error_context(logger, e, context)
                raise

        return wrapper

    return decorator
