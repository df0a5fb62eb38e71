"""Claim detection over noisy, semi-noisy and non-noisy text.

Linguistic viewpoint encoders (POS k-grams through a BiLSTM, dependency
tri-grams with parent-position signals through a transformer block) are
fused by attention with a projected semantic embedding branch, trained
jointly with auxiliary branch objectives.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, LesaError, NumericError

__all__ = ["ConfigError", "DataError", "LesaError", "NumericError", "__version__"]
