"""Margin-based bitext mining, retrieval evaluation, and student distillation."""

__version__ = "0.1.0"

from ._kernels import USING_COMPILED

__all__ = ["USING_COMPILED", "__version__"]
