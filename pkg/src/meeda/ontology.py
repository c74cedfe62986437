"""Concept taxonomy, matchmaking types and edge-counting similarity."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping


class OntologyError(ValueError):
    pass


class UnknownConceptError(OntologyError, KeyError):
    def __init__(self, concept: str):
        super().__init__(f"unknown concept: {concept!r}")
        self.concept = concept

    def __str__(self) -> str:
        return self.args[0]


class Match(enum.Enum):
    EXACT = "exact"
    PLUGIN = "plugin"
    FAIL = "fail"


@dataclass(frozen=True)
class MatchKind:
    kind: Match
    score: float

    @property
    def ok(self) -> bool:
        return self.kind is not Match.FAIL


DEFAULT_PLUGIN_SCORE = 0.75


class Taxonomy:
    """Single-inheritance concept tree.

    Built from a root and ``(parent, child)`` edges. A child listed under
    several parents keeps the first one; later edges for it are dropped so
    the closest common ancestor stays unique.
    """

    def __init__(self, root: str, edges: Iterable[tuple[str, str]] = ()):
        self.root = root
        parent: dict[str, str | None] = {root: None}
        children: dict[str, list[str]] = {root: []}
        self.dropped_edges: list[tuple[str, str]] = []
        for par, child in edges:
            if child == root:
                raise OntologyError(f"root concept {root!r} cannot have a parent")
            if child in parent:
                self.dropped_edges.append((par, child))
                continue
            parent[child] = par
            children.setdefault(par, []).append(child)
            children.setdefault(child, [])
        missing = [c for c, par in parent.items() if par is not None and par not in parent]
        if missing:
            raise OntologyError(f"parent of {missing[0]!r} is not reachable from root {root!r}")

        # walk down from the root; anything not reached sits on a cycle
        depth: dict[str, int] = {root: 0}
        ancestors: dict[str, tuple[str, ...]] = {root: (root,)}
        stack = [root]
        while stack:
            c = stack.pop()
            for ch in children.get(c, ()):
                depth[ch] = depth[c] + 1
                ancestors[ch] = (ch,) + ancestors[c]
                stack.append(ch)
        if len(depth) != len(parent):
            bad = sorted(set(parent) - set(depth))
            raise OntologyError(f"cycle or disconnected concepts in taxonomy: {bad[:5]}")

        self.parent: Mapping[str, str | None] = parent
        self.children: Mapping[str, list[str]] = children
        self.depth: Mapping[str, int] = depth
        # self-inclusive chain up to the root
        self.ancestors: Mapping[str, tuple[str, ...]] = ancestors
        self._ancestor_sets = {c: frozenset(a) for c, a in ancestors.items()}

    @property
    def concepts(self) -> frozenset[str]:
        return frozenset(self.parent)

    def __contains__(self, concept: object) -> bool:
        return concept in self.parent

    def __len__(self) -> int:
        return len(self.parent)

    def check(self, concept: str) -> None:
        if concept not in self.parent:
            raise UnknownConceptError(concept)

    def edges(self) -> list[tuple[str, str]]:
        return [(par, c) for c, par in self.parent.items() if par is not None]

    def ancestor_set(self, concept: str) -> frozenset[str]:
        """Concepts that ``concept`` plugs into, itself included."""
        try:
            return self._ancestor_sets[concept]
        except KeyError:
            raise UnknownConceptError(concept) from None

    def is_subconcept(self, a: str, b: str) -> bool:
        """True when ``a`` equals ``b`` or lies below it."""
        self.check(b)
        return b in self.ancestor_set(a)

    def common_ancestor(self, a: str, b: str) -> str:
        up_b = self.ancestor_set(b)
        for c in self.ancestors[a]:
            if c in up_b:
                return c
        raise AssertionError("single-rooted tree always has a common ancestor")


def match_type(taxonomy: Taxonomy, a: str, b: str, p: float = DEFAULT_PLUGIN_SCORE) -> MatchKind:
    """Classify output concept ``a`` against input concept ``b``.

    Subsume matches (``a`` above ``b``) are reported as ``FAIL``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"plugin score must lie in (0, 1), got {p}")
    taxonomy.check(a)
    taxonomy.check(b)
    if a == b:
        return MatchKind(Match.EXACT, 1.0)
    if taxonomy.is_subconcept(a, b):
        return MatchKind(Match.PLUGIN, p)
    return MatchKind(Match.FAIL, 0.0)


def similarity(taxonomy: Taxonomy, a: str, b: str) -> float:
    """Edge-counting similarity ``2 N_c / (N_a + N_b)``.

    ``N_x`` counts the concepts on the path from ``x`` up to the root,
    so the root itself has ``N = 1``.
    """
    taxonomy.check(a)
    taxonomy.check(b)
    c = taxonomy.common_ancestor(a, b)
    d = taxonomy.depth
    return 2.0 * (d[c] + 1) / (d[a] + d[b] + 2)


def link_quality(
    pairs: Iterable[tuple[str, str]], taxonomy: Taxonomy, p: float = DEFAULT_PLUGIN_SCORE
) -> tuple[float, float]:
    """Mean match score and mean similarity over the (output, input) pairs of one link."""
    types = []
    sims = []
    for out, inp in pairs:
        m = match_type(taxonomy, out, inp, p)
        if not m.ok:
            raise OntologyError(f"{out!r} does not satisfy {inp!r}: not a robust causal link")
        types.append(m.score)
        sims.append(similarity(taxonomy, out, inp))
    if not types:
        raise OntologyError("a causal link needs at least one matched pair")
    return sum(types) / len(types), sum(sims) / len(sims)


def service_link_quality(producer, consumer, taxonomy: Taxonomy, p: float = DEFAULT_PLUGIN_SCORE) -> tuple[float, float]:
    """Link quality between two services.

    Each consumer input that some producer output satisfies is paired
    with its best such output (exact first, then highest similarity).
    Raises when no input is satisfied.
    """
    pairs = []
    for inp in sorted(consumer.inputs):
        options = [o for o in sorted(producer.outputs) if match_type(taxonomy, o, inp, p).ok]
        if options:
            best = max(options, key=lambda o: (o == inp, similarity(taxonomy, o, inp)))
            pairs.append((best, inp))
    if not pairs:
        raise OntologyError("producer satisfies none of the consumer's inputs: not a robust causal link")
    return link_quality(pairs, taxonomy, p)
