"""Reference implementations and a data simulator for checking the engine.

Nothing here shares code with :mod:`gstudy.anova`.  T-values are
accumulated cell by cell in plain Python, sums of squares by literal
alternating sums, the crossed-design sigma2 coefficients by the textbook
step expansion, and degrees of freedom by matrix rank.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dataset import Dataset
from .design import DesignSpec, VarianceComponent
from .errors import AnalysisError, NotCrossed

__all__ = [
    "TrueComponents",
    "naive_t_ss",
    "naive_t_u",
    "rank_df",
    "ems_symbolic",
    "true_components",
    "simulate",
    "simulate_with_effects",
    "universe_scores",
    "replicate_seeds",
]


def _axis_of(design: DesignSpec) -> dict[str, int]:
    return {name: i for i, name in enumerate(design.names)}


def _accumulate(data: Dataset, axes: tuple[int, ...]):
    sums, counts = {}, {}
    cells = data.cells
    for idx in itertools.product(*(range(n) for n in cells.shape)):
        key = tuple(idx[a] for a in axes)
        sums[key] = sums.get(key, 0.0) + float(cells[idx])
        counts[key] = counts.get(key, 0) + 1
    return sums, counts


def _naive_t(data: Dataset, axes: tuple[int, ...]) -> float:
    sums, counts = _accumulate(data, axes)
    total = 0.0
    for key, s in sums.items():
        mean = s / counts[key]
        # every marginal mean stands for counts[key] observations
        total += counts[key] * mean * mean
    return total


def naive_t_u(data: Dataset) -> float:
    return _naive_t(data, ())


def naive_t_ss(data: Dataset) -> dict[VarianceComponent, tuple[float, float]]:
    """T and SS for every component by explicit loops."""
    design = data.design
    axis = _axis_of(design)
    t_by_set = {frozenset(): naive_t_u(data)}
    for c in design.components:
        t_by_set[c.indices] = _naive_t(data, tuple(sorted(axis[f] for f in c.indices)))

    out = {}
    for c in design.components:
        primary = list(c.primary_indices)
        ss = 0.0
        for mask in range(1 << len(primary)):
            chosen = {primary[b] for b in range(len(primary)) if mask >> b & 1}
            dropped = len(primary) - len(chosen)
            term = t_by_set[frozenset(chosen) | frozenset(c.nesting_indices)]
            ss += -term if dropped % 2 else term
        out[c] = (t_by_set[c.indices], ss)
    return out


def _indicator(shape, axes) -> np.ndarray:
    """Rows: cells; columns: distinct index combinations over ``axes``."""
    cells = list(itertools.product(*(range(n) for n in shape)))
    keys = sorted({tuple(idx[a] for a in axes) for idx in cells})
    col = {k: j for j, k in enumerate(keys)}
    m = np.zeros((len(cells), len(keys)))
    for i, idx in enumerate(cells):
        m[i, col[tuple(idx[a] for a in axes)]] = 1.0
    return m


def rank_df(design: DesignSpec, counts: Mapping[str, int], component: VarianceComponent) -> int:
    """Dimension of the component's own effect space.

    Rank of the component's cell-indicator matrix minus the rank of all
    indicator matrices of admissible components strictly inside it (and the
    grand mean).  Only practical for small designs.
    """
    shape = tuple(counts[n] for n in design.names)
    axis = _axis_of(design)
    own = _indicator(shape, sorted(axis[f] for f in component.indices))
    lower = [np.ones((own.shape[0], 1))]
    for c in design.components:
        if c.indices < component.indices:
            lower.append(_indicator(shape, sorted(axis[f] for f in c.indices)))
    return int(np.linalg.matrix_rank(own) - np.linalg.matrix_rank(np.hstack(lower)))


def ems_symbolic(design: DesignSpec, levels: Mapping[str, int]) -> np.ndarray:
    """sigma2 = M @ MS for a fully crossed design, by the step expansion.

    For component a with the remaining facets A: start from +MS(a), subtract
    the mean squares of a joined with one facet of A, add those joined with
    two, and so on; divide by the product of the counts of A.
    """
    if not design.is_crossed:
        raise NotCrossed(f"{design.render()} contains nesting")
    counts = getattr(levels, "counts", levels)
    comps = list(design.components)
    where = {c.indices: j for j, c in enumerate(comps)}
    m = np.zeros((len(comps), len(comps)))
    for i, c in enumerate(comps):
        extra = [f for f in design.names if f not in c.indices]
        scale = 1
        for f in extra:
            scale *= counts[f]
        for step in range(len(extra) + 1):
            for added in itertools.combinations(extra, step):
                m[i, where[c.indices | frozenset(added)]] += (-1) ** step / scale
    return m


@dataclass(frozen=True)
class TrueComponents:
    variances: dict[VarianceComponent, float]
    grand_mean: float = 0.0

    def __post_init__(self):
        for c, v in self.variances.items():
            if v < 0:
                raise AnalysisError(f"true variance for {c} is negative")


def _component_from_key(design: DesignSpec, key) -> VarianceComponent:
    if isinstance(key, VarianceComponent):
        return key
    if isinstance(key, str):
        key = [k for k in re.split(r"[^\w]+", key) if k and k not in ("x", "X")]
    return design.component(*key)


def true_components(design: DesignSpec, variances: Mapping, grand_mean: float = 0.0) -> TrueComponents:
    """Build a truth from keys like ``"p x i"``, ``("p", "i")`` or components.

    Components not mentioned get variance zero.
    """
    table = {c: 0.0 for c in design.components}
    for key, value in variances.items():
        table[_component_from_key(design, key)] = float(value)
    return TrueComponents(table, float(grand_mean))


def replicate_seeds(base_seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(base_seed).spawn(n)


def simulate_with_effects(
    design: DesignSpec,
    levels: Mapping[str, int],
    truth: TrueComponents,
    replicate_seed,
) -> tuple[Dataset, dict[VarianceComponent, np.ndarray]]:
    """Random-effects data plus the effects that generated it.

    Each component gets independent N(0, sigma2) effects, one per combination
    of its indices, broadcast over the remaining facets.
    """
    rng = np.random.default_rng(replicate_seed)
    counts = {design.resolve(k): int(v) for k, v in getattr(levels, "counts", levels).items()}
    shape = tuple(counts[n] for n in design.names)
    y = np.full(shape, float(truth.grand_mean))
    effects = {}
    for c in design.components:
        var = truth.variances.get(c, 0.0)
        eff_shape = tuple(n if name in c.indices else 1 for name, n in zip(design.names, shape))
        e = rng.standard_normal(eff_shape) * np.sqrt(var)
        effects[c] = e
        y = y + e
    return Dataset.from_array(design, y), effects


def simulate(design: DesignSpec, levels: Mapping[str, int], truth: TrueComponents, replicate_seed) -> Dataset:
    return simulate_with_effects(design, levels, truth, replicate_seed)[0]


def universe_scores(
    design: DesignSpec,
    truth: TrueComponents,
    effects: Mapping[VarianceComponent, np.ndarray],
    object: str,
) -> np.ndarray:
    """True mean of each object level: grand mean plus the object's own effects.

    Axes are the object and its nesting parents in design order.
    """
    object = design.resolve(object)
    own = design.ancestors(object) | {object}
    keep = [i for i, n in enumerate(design.names) if n in own]
    drop = tuple(i for i in range(len(design.names)) if i not in keep)
    total = None
    for c, e in effects.items():
        if c.indices <= own:
            part = e.squeeze(axis=drop) if drop else e
            total = part if total is None else total + part
    return truth.grand_mean + total
