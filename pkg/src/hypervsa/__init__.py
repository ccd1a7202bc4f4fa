"""Binary hyperdimensional computing and cyclic-group vector symbolic architectures.

Submodules: ``core`` (hypervectors and their operations), ``rff`` (bases with a
prescribed similarity matrix), ``expressivity`` (what binary vectors can
represent), ``encoding`` and ``learn`` (classifiers), ``analysis`` (circuit
depth) and ``harness`` (datasets, experiments).
"""

from .core import (
    BINARY,
    BinaryHypervector,
    CyclicHypervector,
    CyclicSimilaritySpec,
    Family,
    bind,
    bundle_binary,
    bundle_cyclic,
    permute,
    similarity,
)
from .errors import ConfigError, DataError, DegenerateTargetError, HyperVsaError, NumericError
from .rng import SeededRng

__all__ = [
    "BINARY",
    "BinaryHypervector",
    "ConfigError",
    "CyclicHypervector",
    "CyclicSimilaritySpec",
    "DataError",
    "DegenerateTargetError",
    "Family",
    "HyperVsaError",
    "NumericError",
    "SeededRng",
    "bind",
    "bundle_binary",
    "bundle_cyclic",
    "permute",
    "similarity",
]
