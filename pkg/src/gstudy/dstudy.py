"""D-studies: coefficients re-evaluated over a grid of hypothetical level counts."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .anova import AnovaTable
from .errors import AnalysisError, EmptyCandidateList
from .reliability import GCoeffResult, Role, as_role, evaluate, resolve_roles

__all__ = ["Scenario", "DStudyResult", "expand_grid", "run_d_study"]


@dataclass(frozen=True)
class Scenario:
    levels: dict[str, int]
    result: GCoeffResult


@dataclass(frozen=True)
class DStudyResult:
    object: str
    scenarios: tuple[Scenario, ...]
    notes: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)


def _check_counts(facet: str, values) -> list[int]:
    if isinstance(values, (int, float)) and not isinstance(values, bool):
        values = [values]
    values = list(values)
    if not values:
        raise EmptyCandidateList(f"no candidate level counts for {facet!r}")
    out = []
    for v in values:
        if isinstance(v, bool) or not float(v).is_integer() or v < 1:
            raise AnalysisError(f"level counts must be positive integers; {facet!r} has {v!r}")
        out.append(int(v))
    return out


def expand_grid(grid: Mapping[str, Sequence[int]], order: Sequence[str] | None = None) -> list[dict[str, int]]:
    """Cartesian product of candidate counts.

    Facets follow ``order`` when given (design order), else the mapping's
    own order; the last facet varies fastest.
    """
    keys = list(grid)
    if order is not None:
        keys = [k for k in order if k in grid] + [k for k in grid if k not in order]
    lists = [_check_counts(k, grid[k]) for k in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*lists)]


def run_d_study(
    anova: AnovaTable,
    grid: Mapping[str, Sequence[int]],
    roles: Mapping | None = None,
    object: str | None = None,
) -> DStudyResult:
    """Coefficients for every grid scenario, holding G-study sigma2 fixed.

    The object defaults to the facet marked ``object`` in ``roles``, then to
    the first facet of the design.  Facets missing from the grid keep their
    G-study counts.
    """
    design = anova.design
    counts = anova.levels.counts
    roles = {design.resolve(k): v for k, v in (roles or {}).items()}
    if object is None:
        object = next((k for k, v in roles.items() if as_role(v) is Role.OBJECT), None)
    notes = []
    if object is None:
        object = design.names[0]
        notes.append(f"object of measurement defaulted to {object!r}")
    object = design.resolve(object)
    own = design.ancestors(object) | {object}

    resolved: dict[str, list[int]] = {}
    for key, values in grid.items():
        name = design.resolve(key)
        if name in resolved:
            raise AnalysisError(f"facet {name!r} appears twice in the D-study grid")
        resolved[name] = _check_counts(name, values)
    for name in design.names:
        if name not in resolved:
            resolved[name] = [counts[name]]
            if name not in own:
                notes.append(f"{name!r} not in grid; using G-study count {counts[name]}")
    for name in design.sort(own):
        if name in grid or any(design.resolve(k) == name for k in grid):
            notes.append(f"counts for {name!r} do not affect coefficients when {object!r} is the object")

    scenarios = []
    for assignment in expand_grid(resolved, design.names):
        full = resolve_roles(design, roles, object, assignment)
        scenarios.append(Scenario(assignment, evaluate(anova, full)))
    return DStudyResult(object, tuple(scenarios), tuple(notes))
