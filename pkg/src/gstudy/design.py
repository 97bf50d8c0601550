"""Design strings: parsing, canonical rendering and component enumeration.

A design string names the facets of a measurement design and how they are
arranged.  ``x`` crosses facets, ``:`` nests the left side within the right
side, and parentheses group::

    person x rater x item       three crossed facets
    person x (rater:item)      raters nested within items, crossed with persons
    rater:(item:person)        a nesting chain

Crossing and nesting may not be mixed at one grouping level without
parentheses; ``person x item:rater`` is rejected because the two possible
readings describe different designs.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property

from .errors import (
    DesignSyntaxError,
    DuplicateFacet,
    EmptyToken,
    MixedOperatorAmbiguity,
    TooFewFacets,
    UnbalancedParens,
    UnknownFacet,
)

__all__ = [
    "Facet",
    "DesignSpec",
    "VarianceComponent",
    "parse_design",
    "render_design",
    "enumerate_components",
]


@dataclass(frozen=True)
class Facet:
    """A facet name plus every facet it is nested within (transitively).

    ``nested_in`` is listed in design order; an empty tuple means the facet
    is not nested in anything.
    """

    name: str
    nested_in: tuple[str, ...] = ()

    @property
    def key(self) -> str:
        return self.name.casefold()


@dataclass(frozen=True)
class VarianceComponent:
    """One effect of the design.

    ``primary_indices`` are the effect's own facets, ``nesting_indices`` the
    facets they are nested within.  Both are tuples in design order.
    """

    primary_indices: tuple[str, ...]
    nesting_indices: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.primary_indices:
            raise ValueError("a variance component needs at least one primary index")
        if set(self.primary_indices) & set(self.nesting_indices):
            raise ValueError("primary and nesting indices overlap")

    @property
    def indices(self) -> frozenset[str]:
        return frozenset(self.primary_indices) | frozenset(self.nesting_indices)

    @property
    def name(self) -> str:
        label = " x ".join(self.primary_indices)
        if len(self.nesting_indices) == 1:
            label += ":" + self.nesting_indices[0]
        elif self.nesting_indices:
            label += ":(" + " x ".join(self.nesting_indices) + ")"
        return label

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class DesignSpec:
    facets: tuple[Facet, ...]
    source_string: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.facets) < 2:
            raise TooFewFacets(
                f"a design needs at least 2 facets, got {len(self.facets)}"
            )
        seen = {}
        for f in self.facets:
            if not f.name:
                raise EmptyToken("empty facet name")
            if f.key in seen:
                raise DuplicateFacet(f"facet {f.name!r} appears more than once")
            seen[f.key] = f
        for f in self.facets:
            for parent in f.nested_in:
                if parent.casefold() not in seen:
                    raise UnknownFacet(f"{f.name!r} is nested in unknown facet {parent!r}")
                if parent.casefold() == f.key:
                    raise DesignSyntaxError(f"facet {f.name!r} is nested in itself")
        # closure check doubles as a cycle check
        for f in self.facets:
            for parent in f.nested_in:
                grand = set(self.facet(parent).nested_in)
                if f.name in grand:
                    raise DesignSyntaxError(f"cyclic nesting between {f.name!r} and {parent!r}")
                if not grand <= set(f.nested_in):
                    raise DesignSyntaxError(
                        f"nesting of {f.name!r} is not transitively closed"
                    )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.facets)

    @property
    def is_crossed(self) -> bool:
        return not any(f.nested_in for f in self.facets)

    def facet(self, name: str) -> Facet:
        """Look a facet up by name, exact spelling first, then case-insensitively."""
        for f in self.facets:
            if f.name == name:
                return f
        key = name.strip().casefold()
        for f in self.facets:
            if f.key == key:
                return f
        raise UnknownFacet(f"unknown facet {name!r}; design facets are {', '.join(self.names)}")

    def resolve(self, name: str) -> str:
        return self.facet(name).name

    def position(self, name: str) -> int:
        return self.names.index(self.resolve(name))

    def ancestors(self, name: str) -> frozenset[str]:
        return frozenset(self.facet(name).nested_in)

    def sort(self, names) -> tuple[str, ...]:
        """Order facet names as they appear in the design."""
        return tuple(sorted(names, key=self.position))

    def render(self) -> str:
        return render_design(self)

    @cached_property
    def components(self) -> tuple[VarianceComponent, ...]:
        return tuple(enumerate_components(self))

    def component(self, *names: str) -> VarianceComponent:
        """Find the component whose full index set is exactly ``names``."""
        wanted = frozenset(self.resolve(n) for n in names)
        for c in self.components:
            if c.indices == wanted:
                return c
        raise UnknownFacet(f"no component with indices {sorted(wanted)}")

    def component_for(self, indices) -> VarianceComponent:
        """Build the component for an ancestor-closed index set."""
        indices = frozenset(indices)
        nesting = set()
        for name in indices:
            nesting |= self.ancestors(name)
        primary = indices - nesting
        return VarianceComponent(self.sort(primary), self.sort(nesting))


# -- tokenizer --------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<lpar>\()|(?P<rpar>\))|(?P<nest>:)|(?P<times>×)|(?P<word>\w+)|(?P<bad>\S))")

_CROSS, _NEST, _LPAR, _RPAR, _IDENT, _END = "x", ":", "(", ")", "ident", "end"


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        pos = m.end()
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "bad":
            raise DesignSyntaxError(f"unexpected character {value!r} at position {start}")
        if kind == "word":
            kind = _CROSS if value in ("x", "X") else _IDENT
        elif kind == "times":
            kind = _CROSS
        else:
            kind = {"lpar": _LPAR, "rpar": _RPAR, "nest": _NEST}[kind]
        tokens.append((kind, value, start))
    tokens.append((_END, "", len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser producing a tiny tree of tuples.

    Nodes are ``("facet", name)``, ``("cross", [nodes])`` and
    ``("nest", inner, outer)``.
    """

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self):
        if self.peek()[0] == _END:
            raise EmptyToken("empty design string")
        node = self.expr()
        kind, value, pos = self.peek()
        if kind == _RPAR:
            raise UnbalancedParens(f"unmatched ')' at position {pos}")
        if kind != _END:
            raise DesignSyntaxError(f"expected 'x' or ':' before {value!r} at position {pos}")
        return node

    def expr(self):
        items = [self.term()]
        ops = []
        while self.peek()[0] in (_CROSS, _NEST):
            kind, value, pos = self.advance()
            if ops and kind != ops[0][0]:
                raise MixedOperatorAmbiguity(
                    f"'x' and ':' mixed without parentheses at position {pos}; "
                    "add parentheses, e.g. 'a x (b:c)' or '(a x b):c'"
                )
            ops.append((kind, pos))
            items.append(self.term())
        if not ops:
            return items[0]
        if ops[0][0] == _CROSS:
            return ("cross", items)
        node = items[-1]
        for inner in reversed(items[:-1]):
            node = ("nest", inner, node)
        return node

    def term(self):
        kind, value, pos = self.advance()
        if kind == _IDENT:
            return ("facet", value)
        if kind == _LPAR:
            if self.peek()[0] == _RPAR:
                raise EmptyToken(f"empty parentheses at position {pos}")
            node = self.expr()
            if self.peek()[0] != _RPAR:
                k, v, p = self.peek()
                if k == _END:
                    raise UnbalancedParens(f"'(' at position {pos} is never closed")
                raise DesignSyntaxError(f"expected ')' before {v!r} at position {p}")
            self.advance()
            return node
        if kind == _RPAR:
            raise EmptyToken(f"missing facet before ')' at position {pos}")
        if kind in (_CROSS, _NEST):
            raise EmptyToken(f"missing facet before {value!r} at position {pos}")
        raise EmptyToken("design string ends where a facet was expected")


def _collect(node, order: list, parents: dict):
    """Walk the tree, recording facet order and nesting parents."""
    kind = node[0]
    if kind == "facet":
        name = node[1]
        key = name.casefold()
        if key in parents:
            raise DuplicateFacet(f"facet {name!r} appears more than once")
        parents[key] = set()
        order.append(name)
        return [name]
    if kind == "cross":
        names = []
        for child in node[1]:
            names += _collect(child, order, parents)
        return names
    inner = _collect(node[1], order, parents)
    outer = _collect(node[2], order, parents)
    for name in inner:
        parents[name.casefold()].update(outer)
    return inner + outer


def parse_design(design_str: str) -> DesignSpec:
    """Parse a design string into a :class:`DesignSpec`.

    ``a:b`` nests ``a`` within ``b``.  Facet names are compared
    case-insensitively but keep the spelling they were given.
    """
    if not isinstance(design_str, str):
        raise DesignSyntaxError("design must be a string")
    tree = _Parser(design_str).parse()
    order: list[str] = []
    parents: dict[str, set] = {}
    _collect(tree, order, parents)
    position = {name: i for i, name in enumerate(order)}
    facets = tuple(
        Facet(name, tuple(sorted(parents[name.casefold()], key=position.__getitem__)))
        for name in order
    )
    return DesignSpec(facets, source_string=design_str)


# -- rendering --------------------------------------------------------------


def _render(names: list[str], parents: dict[str, set]) -> str:
    members = set(names)
    local = {n: parents[n] & members for n in names}

    # connected pieces under the nesting relation, in order of first appearance
    pieces: list[list[str]] = []
    seen: set[str] = set()
    for start in names:
        if start in seen:
            continue
        group, stack = {start}, [start]
        while stack:
            cur = stack.pop()
            linked = local[cur] | {n for n in names if cur in local[n]}
            for n in linked - group:
                group.add(n)
                stack.append(n)
        seen |= group
        pieces.append([n for n in names if n in group])

    parts = []
    for piece in pieces:
        if len(piece) == 1:
            parts.append(piece[0])
            continue
        leaves = [n for n in piece if not any(n in local[m] for m in piece)]
        outer = set.intersection(*(local[leaf] for leaf in leaves))
        inner = [n for n in piece if n not in outer]
        outer_names = [n for n in piece if n in outer]
        if not outer or not all(outer <= local[n] for n in inner) or not all(
            local[n] <= outer for n in outer_names
        ):
            raise DesignSyntaxError(f"nesting structure of {piece} cannot be rendered")
        parts.append(_wrap(_render(inner, local)) + ":" + _wrap(_render(outer_names, local)))
    if len(parts) == 1:
        return parts[0]
    return " x ".join(_wrap(p) for p in parts)


def _wrap(text: str) -> str:
    return text if re.fullmatch(r"\w+", text) else f"({text})"


def render_design(design: DesignSpec) -> str:
    """Render a design back to a canonical, fully parenthesized string."""
    parents = {f.name: set(f.nested_in) for f in design.facets}
    return _render(list(design.names), parents)


# -- components -------------------------------------------------------------


def enumerate_components(design: DesignSpec) -> list[VarianceComponent]:
    """Every effect the design admits.

    An index set is admissible when it carries the full nesting chain of each
    of its facets.  Its primary indices are the facets not nesting any other
    member.  Ordered by index count, then by design position; the last entry
    is the highest-order (residual) component.
    """
    names = design.names
    anc = {n: design.ancestors(n) for n in names}
    found = []
    for k in range(1, len(names) + 1):
        for combo in itertools.combinations(range(len(names)), k):
            members = {names[i] for i in combo}
            if all(anc[m] <= members for m in members):
                found.append(design.component_for(members))
    return found
