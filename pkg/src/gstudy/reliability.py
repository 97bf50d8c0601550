"""Generalizability and dependability coefficients.

For an object of measurement ``o`` every variance component lands in one of
three pools:

* universe score (tau): the object's own effect, plus object interactions
  whose other facets are all fixed (each divided by the fixed facets' counts);
* relative error (delta): object interactions involving at least one random
  facet, divided by the product of the other facets' counts;
* absolute error (Delta): every component outside tau, delta included.

When the object is itself nested (raters within items, say) the facets it is
nested in travel with it: components built only from the object and its
nesting parents belong to tau, and those parents never enter a divisor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .anova import AnovaTable
from .design import DesignSpec, VarianceComponent
from .errors import AnalysisError, NoObject, UnknownRole

__all__ = [
    "Role",
    "FacetRole",
    "Term",
    "GCoeffResult",
    "as_role",
    "resolve_roles",
    "partition_components",
    "g_coefficient",
    "phi_coefficient",
    "evaluate",
    "g_coeffs_table",
    "default_analyses",
]


class Role(str, Enum):
    OBJECT = "object"
    RANDOM = "random"
    FIXED = "fixed"


@dataclass(frozen=True)
class FacetRole:
    facet: str
    role: Role
    level_count_used: int

    def __post_init__(self):
        if self.level_count_used < 1:
            raise AnalysisError(f"level count for {self.facet!r} must be >= 1")


@dataclass(frozen=True)
class Term:
    """A component's membership in one of the error pools, with its divisor."""

    component: VarianceComponent
    divisor: int


@dataclass(frozen=True)
class GCoeffResult:
    object: str
    tau: float
    delta: float
    Delta: float
    e_rho2: float | None
    phi: float | None
    clamped_components: tuple[str, ...] = ()
    levels: dict[str, int] = field(default_factory=dict, compare=False)
    roles: dict[str, str] = field(default_factory=dict, compare=False)


def as_role(value) -> Role:
    if isinstance(value, FacetRole):
        return value.role
    if isinstance(value, Role):
        return value
    try:
        return Role(str(value).strip().lower())
    except ValueError:
        raise UnknownRole(f"unknown role {value!r}; use object, random or fixed") from None


def resolve_roles(
    design: DesignSpec,
    roles: Mapping | None = None,
    object: str | None = None,
    counts: Mapping[str, int] | None = None,
) -> dict[str, FacetRole]:
    """Complete a partial role assignment.

    Facets not mentioned are random.  ``object`` overrides whatever role the
    named facet had.  ``counts`` supplies the level counts used in divisors.
    """
    assigned = {}
    for name, value in (roles or {}).items():
        assigned[design.resolve(name)] = as_role(value)
    if object is not None:
        object = design.resolve(object)
        for name, role in list(assigned.items()):
            if role is Role.OBJECT and name != object:
                assigned[name] = Role.RANDOM
        assigned[object] = Role.OBJECT
    objects = [n for n, r in assigned.items() if r is Role.OBJECT]
    if not objects:
        raise NoObject("no facet is marked as the object of measurement")
    if len(objects) > 1:
        raise NoObject(f"more than one object of measurement: {', '.join(objects)}")
    counts = counts or {}
    out = {}
    for name in design.names:
        n = counts.get(name, 1)
        out[name] = FacetRole(name, assigned.get(name, Role.RANDOM), int(n))
    return out


def _object_of(roles: Mapping[str, FacetRole]) -> str:
    objects = [r.facet for r in roles.values() if r.role is Role.OBJECT]
    if len(objects) != 1:
        raise NoObject("exactly one facet must be the object of measurement")
    return objects[0]


def partition_components(
    design: DesignSpec,
    object: str,
    roles: Mapping[str, FacetRole],
    components=None,
) -> tuple[list[Term], list[Term], list[Term]]:
    """Split components into (tau, delta, Delta) terms.

    Divisors multiply ``level_count_used`` over each component's facets other
    than the object and the facets the object is nested in.
    """
    object = design.resolve(object)
    for name, r in roles.items():
        if not isinstance(r.role, Role):
            raise UnknownRole(f"unknown role for {name!r}: {r.role!r}")
    if roles.get(object) is None or roles[object].role is not Role.OBJECT:
        raise NoObject(f"{object!r} is not marked as the object of measurement")
    own = design.ancestors(object) | {object}
    comps = design.components if components is None else components

    tau, delta, Delta = [], [], []
    for c in comps:
        others = [f for f in design.sort(c.indices) if f not in own]
        divisor = 1
        for f in others:
            divisor *= roles[f].level_count_used
        term = Term(c, divisor)
        if not others:
            tau.append(term)
        elif c.indices & own:
            if all(roles[f].role is Role.FIXED for f in others):
                tau.append(term)
            else:
                delta.append(term)
                Delta.append(term)
        else:
            Delta.append(term)
    return tau, delta, Delta


def _ratio(num: float, err: float) -> float | None:
    total = num + err
    if total == 0:
        return None
    return num / total


def g_coefficient(tau: float, delta: float) -> float | None:
    """tau / (tau + delta); ``None`` when both are zero."""
    return _ratio(tau, delta)


def phi_coefficient(tau: float, Delta: float) -> float | None:
    return _ratio(tau, Delta)


def evaluate(
    anova: AnovaTable,
    roles: Mapping[str, FacetRole],
) -> GCoeffResult:
    """Coefficients for one role assignment, clamping negative sigma2 to zero."""
    design = anova.design
    object = _object_of(roles)
    tau_t, delta_t, Delta_t = partition_components(design, object, roles, anova.components)
    sigma2 = anova.sigma2

    clamped = tuple(r.name for r in anova.rows if r.sigma2 < 0)

    def pool(terms):
        return math.fsum(max(sigma2[t.component], 0.0) / t.divisor for t in terms)

    tau, delta, Delta = pool(tau_t), pool(delta_t), pool(Delta_t)
    return GCoeffResult(
        object=object,
        tau=tau,
        delta=delta,
        Delta=Delta,
        e_rho2=g_coefficient(tau, delta),
        phi=phi_coefficient(tau, Delta),
        clamped_components=clamped,
        levels={n: roles[n].level_count_used for n in design.names},
        roles={n: roles[n].role.value for n in design.names},
    )


def default_analyses(design: DesignSpec, roles: Mapping | None = None, object: str | None = None):
    """Role maps to analyse: the named object, or every facet in turn.

    Fixed/random roles in ``roles`` carry over to every analysis.  A role map
    that already names an object yields just that analysis.
    """
    base = {design.resolve(k): as_role(v) for k, v in (roles or {}).items()}
    if object is None:
        object = next((n for n, r in base.items() if r is Role.OBJECT), None)
    targets = [design.resolve(object)] if object is not None else list(design.names)
    analyses = []
    for target in targets:
        spec = {n: (Role.RANDOM if r is Role.OBJECT else r) for n, r in base.items()}
        spec[target] = Role.OBJECT
        analyses.append(spec)
    return analyses


def g_coeffs_table(
    anova: AnovaTable,
    roles_per_analysis=None,
) -> list[GCoeffResult]:
    """One result per analysis; by default every facet as object, the rest random.

    Each analysis maps facet names to roles (strings, :class:`Role` or
    :class:`FacetRole`); a ``FacetRole`` may override the level count used.
    """
    design = anova.design
    if roles_per_analysis is None:
        roles_per_analysis = default_analyses(design)
    results = []
    for roles in roles_per_analysis:
        counts = dict(anova.levels.counts)
        for name, value in roles.items():
            if isinstance(value, FacetRole):
                counts[design.resolve(name)] = value.level_count_used
        spec = {name: as_role(v) for name, v in roles.items()}
        object = next((n for n, r in spec.items() if r is Role.OBJECT), None)
        if object is None:
            raise NoObject("an analysis has no object of measurement")
        results.append(evaluate(anova, resolve_roles(design, spec, object, counts)))
    return results
