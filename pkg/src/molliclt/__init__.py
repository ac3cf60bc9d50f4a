"""Desk-scale laboratory for mollified Dirichlet L-values.

Subpackages cover exact integer arithmetic, character tables, L-value
evaluation, mollifier construction, a random multiplicative model with
exact expectation oracles, Hecke/Rankin-Selberg coefficient machinery,
and the statistics used in the central-limit experiments.
"""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
