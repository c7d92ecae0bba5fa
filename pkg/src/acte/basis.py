"""Truncated-polynomial age basis shared by the OLS learner and the simulator.

The basis has exactly three terms anchored at a peak age ``a_peak``:
a quadratic in (a - a_peak), plus a truncated quadratic and truncated cubic
that switch on above the peak.  Past-peak curvature therefore gets its own
coefficients while the curve stays continuous at the knot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_PEAK_AGE = 25.0

BASIS_COLUMNS = ("age_quad", "age_quad_post", "age_cubic_post")


@dataclass(frozen=True)
class SplineSpec:
    """Placement of the truncated basis: knot location and optional intercept."""

    a_peak: float = DEFAULT_PEAK_AGE
    include_intercept: bool = False

    def __post_init__(self):
        if not math.isfinite(self.a_peak):
            raise DomainError(f"a_peak must be finite, got {self.a_peak!r}")

    @property
    def columns(self) -> tuple[str, ...]:
        if self.include_intercept:
            return ("intercept",) + BASIS_COLUMNS
        return BASIS_COLUMNS


def truncated_basis(a, spec: SplineSpec = SplineSpec()) -> np.ndarray:
    """Evaluate the truncated-polynomial basis at age(s) ``a``.

    Accepts a scalar or 1-d array; returns shape (3,) or (n, 3), with an
    extra leading intercept column when the spec requests one.
    """
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("age values must be finite")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    d = arr - spec.a_peak
    post = d > 0.0
    cols = [d * d, np.where(post, d * d, 0.0), np.where(post, d * d * d, 0.0)]
    if spec.include_intercept:
        cols.insert(0, np.ones_like(d))
    out = np.column_stack(cols)
    return out[0] if scalar else out
