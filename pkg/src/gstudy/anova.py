"""G-study ANOVA for balanced crossed and nested designs.

T-values, sums of squares, degrees of freedom and mean squares are computed
per component, then variance components are recovered from the expected
mean squares.  Under the random-effects model

    E[MS(a)] = sum over components b whose indices include a's of pi(b*) * sigma2(b)

where pi(b*) is the product of level counts of the facets outside b.  The
system is triangular in enumeration order, so it is solved by
back-substitution from the highest-order component down.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dataset import Dataset, FacetLevels
from .design import DesignSpec, VarianceComponent
from .errors import MissingTValue, SingularSystem, UnknownComponent, ZeroDf

__all__ = [
    "AnovaRow",
    "AnovaTable",
    "t_value",
    "sum_of_squares",
    "degrees_of_freedom",
    "ems_matrix",
    "solve_variance_components",
    "run_anova",
]


@dataclass(frozen=True)
class AnovaRow:
    component: VarianceComponent
    df: int
    t_value: float
    ss: float
    ms: float
    sigma2: float

    @property
    def name(self) -> str:
        return self.component.name

    @property
    def negative(self) -> bool:
        """True when the raw variance estimate came out below zero."""
        return self.sigma2 < 0


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple[AnovaRow, ...]
    grand_mean: float
    t_u: float
    levels: FacetLevels
    design: DesignSpec

    @property
    def components(self) -> tuple[VarianceComponent, ...]:
        return tuple(r.component for r in self.rows)

    @property
    def sigma2(self) -> dict[VarianceComponent, float]:
        return {r.component: r.sigma2 for r in self.rows}

    @property
    def ms(self) -> dict[VarianceComponent, float]:
        return {r.component: r.ms for r in self.rows}

    @property
    def total_ss(self) -> float:
        return math.fsum(r.ss for r in self.rows)

    def row(self, key) -> AnovaRow:
        """Row by component, by display name, or by a collection of index names."""
        if isinstance(key, str):
            for r in self.rows:
                if r.name == key:
                    return r
            raise UnknownComponent(f"no row named {key!r}")
        if not isinstance(key, VarianceComponent):
            key = self.design.component(*key)
        for r in self.rows:
            if r.component == key:
                return r
        raise UnknownComponent(f"no row for {key}")


def _index_set(component) -> frozenset[str]:
    if component is None:
        return frozenset()
    if isinstance(component, VarianceComponent):
        return component.indices
    return frozenset(component)


def t_value(data: Dataset, component=None) -> float:
    """T(a) = pi(a*) * sum of squared marginal means over a's index combinations.

    ``component=None`` (or an empty set) gives T(U) = N * grand_mean**2.
    """
    indices = _index_set(component)
    design = data.design
    if indices and indices not in {c.indices for c in design.components}:
        raise UnknownComponent(f"{sorted(indices)} is not a component of {design.render()}")
    return _t_from_cells(data.cells, [design.position(f) for f in indices])


def _t_from_cells(cells: np.ndarray, keep_axes) -> float:
    other = tuple(ax for ax in range(cells.ndim) if ax not in set(keep_axes))
    means = cells.mean(axis=other) if other else cells
    means = np.asarray(means, dtype=float)
    multiplier = cells.size // max(means.size, 1)
    return multiplier * math.fsum((means * means).ravel().tolist())


def sum_of_squares(t: Mapping[frozenset, float], component: VarianceComponent) -> float:
    """Alternating sum of T-values over the component's primary-index subsets.

    Nesting indices are kept in every term, so for ``r:i`` this is
    T(ri) - T(i); for crossed designs it is the plain subset expansion ending
    in T(U).  ``t`` is keyed by index sets, with ``frozenset()`` for T(U).
    """
    primary = component.primary_indices
    nesting = frozenset(component.nesting_indices)
    terms = []
    for k in range(len(primary) + 1):
        sign = -1.0 if (len(primary) - k) % 2 else 1.0
        for subset in itertools.combinations(primary, k):
            key = nesting | frozenset(subset)
            try:
                terms.append(sign * t[key])
            except KeyError:
                raise MissingTValue(f"no T value for {sorted(key) or 'U'}") from None
    return math.fsum(terms)


def degrees_of_freedom(component: VarianceComponent, levels) -> int:
    counts = levels.counts if isinstance(levels, FacetLevels) else levels
    df = 1
    for f in component.primary_indices:
        df *= counts[f] - 1
    for f in component.nesting_indices:
        df *= counts[f]
    return df


def _outside_product(indices: frozenset, counts: Mapping[str, int]) -> int:
    prod = 1
    for f, n in counts.items():
        if f not in indices:
            prod *= n
    return prod


def ems_matrix(design: DesignSpec, levels) -> np.ndarray:
    """Coefficients of sigma2 in each expected mean square.

    Rows and columns follow ``design.components``; entry (a, b) is pi(b*)
    when b's index set contains a's, else 0.
    """
    counts = levels.counts if isinstance(levels, FacetLevels) else dict(levels)
    comps = design.components
    m = np.zeros((len(comps), len(comps)))
    for i, a in enumerate(comps):
        for j, b in enumerate(comps):
            if b.indices >= a.indices:
                m[i, j] = _outside_product(b.indices, counts)
    return m


def solve_variance_components(ms: Mapping, ems: np.ndarray, components=None) -> dict:
    """Back-substitute the upper-triangular EMS system; estimates may be negative."""
    components = list(ms) if components is None else list(components)
    ems = np.asarray(ems, dtype=float)
    size = len(components)
    if ems.shape != (size, size):
        raise SingularSystem(f"EMS matrix shape {ems.shape} does not match {size} components")
    ems = ems.tolist()
    sigma2 = [0.0] * size
    for i in reversed(range(size)):
        pivot = ems[i][i]
        if pivot == 0 or not math.isfinite(pivot):
            raise SingularSystem(f"zero pivot for component {components[i]}")
        rest = math.fsum(ems[i][j] * sigma2[j] for j in range(i + 1, size) if ems[i][j])
        sigma2[i] = (float(ms[components[i]]) - rest) / pivot
    return dict(zip(components, sigma2))


def run_anova(data: Dataset) -> AnovaTable:
    """Full G-study table for a validated dataset.

    Sums of squares come from T-values of the mean-centred responses, which
    keeps them accurate when the mean is large relative to the spread; the
    reported T column uses the raw responses.
    """
    design = data.design
    counts = data.levels.counts
    comps = design.components

    dfs = {}
    for c in comps:
        df = degrees_of_freedom(c, counts)
        if df == 0:
            facet = next(f for f in c.primary_indices if counts[f] == 1)
            raise ZeroDf(facet, c.name)
        dfs[c] = df

    cells = data.cells
    grand_mean = math.fsum(cells.ravel().tolist()) / cells.size
    centred = cells - grand_mean
    axes = {c: [design.position(f) for f in c.indices] for c in comps}

    t_raw = {c: _t_from_cells(cells, axes[c]) for c in comps}
    t_u = cells.size * grand_mean * grand_mean
    t_centred = {c.indices: _t_from_cells(centred, axes[c]) for c in comps}
    t_centred[frozenset()] = _t_from_cells(centred, [])

    ss = {c: sum_of_squares(t_centred, c) for c in comps}
    ms = {c: ss[c] / dfs[c] for c in comps}
    sigma2 = solve_variance_components(ms, ems_matrix(design, counts), comps)

    rows = tuple(AnovaRow(c, dfs[c], t_raw[c], ss[c], ms[c], sigma2[c]) for c in comps)
    return AnovaTable(rows, grand_mean, t_u, data.levels, design)
