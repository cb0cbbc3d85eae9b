"""Task corpora, ground-truth scoring and experiment harnesses.

``matching`` and ``corpus`` are dependency-free; ``harness`` and
``precision`` pull in the closed loop and are imported explicitly.
"""

from uavloop.evalharness.matching import (
    DEFAULT_TOLERANCES,
    Tolerances,
    completeness,
    lcs_length,
    success,
    transitions_match,
)

__all__ = [
    "DEFAULT_TOLERANCES",
    "Tolerances",
    "completeness",
    "lcs_length",
    "success",
    "transitions_match",
]
