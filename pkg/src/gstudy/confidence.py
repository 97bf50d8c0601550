"""Normal-theory confidence intervals for object-level mean scores."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .anova import AnovaTable
from .dataset import Dataset, label_sort_key
from .design import VarianceComponent
from .errors import AnalysisError, OutOfDomain

__all__ = ["ConfidenceInterval", "normal_quantile", "mean_score_variance", "confidence_intervals"]

# Acklam's rational approximation, refined below with one Halley step.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _acklam_lower(p: float) -> float:
    # valid for 0 < p <= 0.5
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"normal quantile needs 0 < p < 1, got {p!r}")
    if p > 0.5:
        # 1 - p is exact for p in (0.5, 1)
        return -normal_quantile(1.0 - p)
    x = _acklam_lower(p)
    err = 0.5 * math.erfc(-x / _SQRT2) - p
    u = err * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@dataclass(frozen=True)
class ConfidenceInterval:
    object_level: object
    mean: float
    half_width: float
    lower: float
    upper: float
    alpha: float
    facet: str = ""


def _own_indices(sigma2: Mapping[VarianceComponent, float], object: str) -> frozenset[str]:
    for c in sigma2:
        if c.primary_indices == (object,):
            return c.indices
    raise AnalysisError(f"no main-effect component for {object!r}")


def mean_score_variance(
    sigma2: Mapping[VarianceComponent, float],
    object: str,
    levels: Mapping[str, int],
) -> float:
    """Error variance of one object level's observed mean.

    Every component except those describing the object itself contributes
    sigma2 divided by the product of its remaining facets' level counts.
    Negative estimates count as zero.
    """
    counts = getattr(levels, "counts", levels)
    own = _own_indices(sigma2, object)
    terms = []
    for c, value in sigma2.items():
        others = [f for f in c.primary_indices + c.nesting_indices if f not in own]
        if not others:
            continue
        divisor = 1
        for f in others:
            divisor *= counts[f]
        terms.append(max(value, 0.0) / divisor)
    return math.fsum(terms)


def confidence_intervals(
    data: Dataset,
    anova: AnovaTable,
    object: str,
    alpha: float = 0.05,
) -> list[ConfidenceInterval]:
    """Intervals ``mean +/- z(1 - alpha/2) * sqrt(error variance)`` per object level.

    Levels of a nested object are labelled ``parent/.../level``.  Rows are
    sorted by label.
    """
    if not 0.0 < alpha < 1.0:
        raise OutOfDomain(f"alpha must lie in (0, 1), got {alpha!r}")
    design = data.design
    object = design.resolve(object)
    # parents before children so labels read parent/.../level
    own = sorted(design.ancestors(object) | {object},
                 key=lambda f: (len(design.ancestors(f)), design.position(f)))
    axes = [design.position(f) for f in own]
    other = tuple(ax for ax in range(data.cells.ndim) if ax not in axes)
    means = data.cells.mean(axis=other) if other else np.asarray(data.cells)
    means = np.moveaxis(means, np.argsort(np.argsort(axes)), range(len(axes)))

    variance = mean_score_variance(anova.sigma2, object, data.levels.counts)
    half = normal_quantile(1.0 - alpha / 2.0) * math.sqrt(variance)

    entries = []
    for idx in np.ndindex(*means.shape):
        parts = []
        for pos, name in enumerate(own):
            anc = design.sort(design.ancestors(name))
            key = tuple(idx[own.index(a)] for a in anc)
            parts.append(data.label(name, key, idx[pos]))
        label = parts[0] if len(parts) == 1 else "/".join(str(p) for p in parts)
        m = float(means[idx])
        entries.append(
            (tuple(label_sort_key(p) for p in parts),
             ConfidenceInterval(label, m, half, m - half, m + half, alpha, object))
        )
    entries.sort(key=lambda e: e[0])
    return [ci for _, ci in entries]
