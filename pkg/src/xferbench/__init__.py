"""Transferability estimation engine and benchmark harness."""

from .metrics import MetricId, ScoreValue

__all__ = ["MetricId", "ScoreValue"]
__version__ = "0.1.0"
