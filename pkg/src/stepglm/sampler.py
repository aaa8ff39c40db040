"""Subsample-size policy: n = N^exponent with exponent in (1/2, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

DEFAULT_EXPONENT = 5.0 / 9.0


@dataclass(frozen=True)
class SampleSpec:
    """Subsampling policy.

    exponent is 1/2 + δ; any value in (1/2, 1] keeps the subsample MLE
    accurate enough for a single efficient update.
    """

    exponent: float = DEFAULT_EXPONENT
    floor: int = 50
    method: str = "bernoulli"  # or "exact"

    def __post_init__(self):
        if not (0.5 < self.exponent <= 1.0):
            raise ConfigError("sampling exponent must lie in (1/2, 1]")
        if self.floor < 1:
            raise ConfigError("sample floor must be at least 1")
        if self.method not in ("bernoulli", "exact"):
            raise ConfigError("sampling method must be 'bernoulli' or 'exact'")


def choose_subsample_size(N: int, spec: SampleSpec, p: int = 1) -> int:
    """Target subsample size: max(ceil(N^exponent), floor, 10·p), capped at N."""
    if N < 1:
        raise ConfigError("N must be at least 1")
    # the 1e-9 slack keeps exact powers (e.g. 1e9^(5/9) = 1e5) from
    # rounding up on floating-point noise
    n = math.ceil(N ** spec.exponent - 1e-9)
    # round the target up to a multiple of ten; the Bernoulli draw is
    # random around it anyway and a round target reads better in reports
    n = 10 * math.ceil(n / 10)
    n = max(n, spec.floor, 10 * p)
    return min(n, N)
