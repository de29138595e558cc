"""Thin prime sets along regularly varying functions: arithmetic tables,
exponential sums, r-variation and ergodic averages."""

from .errors import ConfigError, InvariantViolation, NumericDomainError, ThinPrimesError

__version__ = "0.1.0"

__all__ = ["ConfigError", "InvariantViolation", "NumericDomainError", "ThinPrimesError", "__version__"]
