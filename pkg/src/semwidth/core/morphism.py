"""Homomorphisms between queries, quotients, isomorphism and CQ cores."""

from __future__ import annotations

from collections import Counter, defaultdict
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass
import logging

import networkx as nx

from ..errors import ArityMismatchError, NotACQError
from .automata import Nfa
from .query_model import Atom, C2rpq

logger = logging.getLogger(__name__)


def same_language(left: Nfa, right: Nfa) -> bool:
    """Identity first, then equality of the canonical minimal DFAs."""
    return left is right or left.language_token == right.language_token


@dataclass(frozen=True)
class Homomorphism:
    mapping: Mapping[str, str]
    source: C2rpq
    target: C2rpq

    def __call__(self, var: str) -> str:
        return self.mapping[var]

    def image_atoms(self) -> list[Atom]:
        return [Atom(self.mapping[a.src], a.lang, self.mapping[a.dst]) for a in self.source.atoms]

    def preserves_languages(self) -> bool:
        """Recheck every atom image against the target by mutual inclusion, without language tokens."""
        for atom in self.source.atoms:
            src, dst = self.mapping[atom.src], self.mapping[atom.dst]
            if not any(
                (t.src, t.dst) == (src, dst) and equal_languages(atom.lang, t.lang)
                or (t.dst, t.src) == (src, dst) and equal_languages(atom.lang, t.lang.inverse)
                for t in self.target.atoms
            ):
                return False
        return True


def equal_languages(left: Nfa, right: Nfa) -> bool:
    return left is right or (left.includes(right) and right.includes(left))


def _variable_order(q: C2rpq, pinned: Mapping[str, str]) -> list[str]:
    """Pinned variables first, then a breadth-first sweep along atoms."""
    neighbours: dict[str, set[str]] = defaultdict(set)
    for atom in q.atoms:
        neighbours[atom.src].add(atom.dst)
        neighbours[atom.dst].add(atom.src)
    order = [v for v in sorted(q.vars) if v in pinned]
    placed = set(order)
    frontier = list(order)
    remaining = sorted(q.vars - placed, key=lambda v: (-len(neighbours[v]), v))
    while len(order) < len(q.vars):
        grown = False
        for var in frontier:
            for other in sorted(neighbours[var]):
                if other not in placed:
                    placed.add(other)
                    order.append(other)
                    frontier.append(other)
                    grown = True
        if not grown:
            for var in remaining:
                if var not in placed:
                    placed.add(var)
                    order.append(var)
                    frontier.append(var)
                    break
    return order


def _matches(atom: Atom, target: C2rpq) -> set[tuple[str, str]]:
    """Endpoint pairs an atom may be sent to, forwards or through an inverse atom."""
    pairs: set[tuple[str, str]] = set()
    for candidate in target.atoms:
        if same_language(atom.lang, candidate.lang):
            pairs.add((candidate.src, candidate.dst))
        if candidate.lang.inverse.language_token == atom.lang.language_token:
            pairs.add((candidate.dst, candidate.src))
    return pairs


def is_strong_onto(mapping: Mapping[str, str], src: C2rpq, dst: C2rpq) -> bool:
    hit: Counter[tuple[str, str, str]] = Counter()
    for atom in src.atoms:
        hit[(mapping[atom.src], atom.lang.language_token, mapping[atom.dst])] += 1
        hit[(mapping[atom.dst], atom.lang.inverse.language_token, mapping[atom.src])] += 1
    return all(hit[(t.src, t.lang.language_token, t.dst)] > 0 for t in dst.atoms)


def find_homomorphisms(src: C2rpq, dst: C2rpq, want_strong_onto: bool = False) -> Iterator[Homomorphism]:
    """All homomorphisms from ``src`` to ``dst`` respecting the output tuples position by position.

    An atom may land on a reversed atom whose language is its inverse.
    """
    if src.arity != dst.arity:
        raise ArityMismatchError(f"Cannot map arity {src.arity} onto arity {dst.arity}")
    pinned: dict[str, str] = {}
    for x, y in zip(src.output, dst.output, strict=True):
        if pinned.setdefault(x, y) != y:
            return

    by_source: dict[str, list[tuple[int, str]]] = defaultdict(list)
    options: list[set[tuple[str, str]]] = []
    for index, atom in enumerate(src.atoms):
        pairs = _matches(atom, dst)
        if not pairs:
            return
        options.append(pairs)
        by_source[atom.src].append((index, "src"))
        by_source[atom.dst].append((index, "dst"))

    order = _variable_order(src, pinned)
    targets = sorted(dst.vars)
    mapping: dict[str, str] = {}

    def consistent(var: str) -> bool:
        for index, _ in by_source[var]:
            atom = src.atoms[index]
            if atom.src in mapping and atom.dst in mapping:
                if (mapping[atom.src], mapping[atom.dst]) not in options[index]:
                    return False
        return True

    def candidates(var: str) -> list[str]:
        if var in pinned:
            return [pinned[var]]
        allowed: set[str] | None = None
        for index, role in by_source[var]:
            atom = src.atoms[index]
            other = atom.dst if role == "src" else atom.src
            if other == var or other not in mapping:
                continue
            if role == "src":
                found = {u for u, w in options[index] if w == mapping[other]}
            else:
                found = {w for u, w in options[index] if u == mapping[other]}
            allowed = found if allowed is None else allowed & found
        return targets if allowed is None else sorted(allowed)

    def search(position: int) -> Iterator[dict[str, str]]:
        if position == len(order):
            yield dict(mapping)
            return
        var = order[position]
        for value in candidates(var):
            mapping[var] = value
            if consistent(var):
                yield from search(position + 1)
            del mapping[var]

    for found in search(0):
        if want_strong_onto and not is_strong_onto(found, src, dst):
            continue
        yield Homomorphism(found, src, dst)


def has_homomorphism(src: C2rpq, dst: C2rpq) -> bool:
    return next(find_homomorphisms(src, dst), None) is not None


# -- quotients -----------------------------------------------------------------


def set_partitions(items: Sequence[str]) -> Iterator[tuple[tuple[str, ...], ...]]:
    """Set partitions as restricted growth strings, in lexicographic order of the strings."""
    n = len(items)
    if n == 0:
        yield ()
        return
    labels = [0] * n

    def grow(position: int, largest: int) -> Iterator[tuple[tuple[str, ...], ...]]:
        if position == n:
            blocks: list[list[str]] = [[] for _ in range(largest + 1)]
            for item, label in zip(items, labels, strict=True):
                blocks[label].append(item)
            yield tuple(tuple(block) for block in blocks)
            return
        for label in range(largest + 2):
            labels[position] = label
            yield from grow(position + 1, max(largest, label))

    yield from grow(1, 0)


def representative(block: Sequence[str]) -> str:
    """User variables are preferred over generated middle variables, then the least name."""
    return min(block, key=lambda var: ("#" in var, var))


def quotient(q: C2rpq, blocks: Sequence[Sequence[str]]) -> tuple[C2rpq, dict[str, str]]:
    """Merge each block of variables; parallel atoms with equal languages are merged as well."""
    mapping: dict[str, str] = {}
    for block in blocks:
        rep = representative(block)
        for var in block:
            mapping[var] = rep
    atoms: list[Atom] = []
    seen: set[tuple[str, str, str]] = set()
    for atom in q.atoms:
        image = Atom(mapping[atom.src], atom.lang, mapping[atom.dst])
        key = (image.src, image.lang.language_token, image.dst)
        if key in seen:
            continue
        seen.add(key)
        atoms.append(image)
    merged = C2rpq(
        vars=frozenset(mapping.values()),
        output=tuple(mapping[v] for v in q.output),
        atoms=tuple(atoms),
        name=q.name,
    )
    return merged, mapping


def enumerate_quotients(q: C2rpq) -> Iterator[tuple[C2rpq, tuple[tuple[str, ...], ...]]]:
    """Every quotient of ``q`` with its partition, before deduplication."""
    if q.equalities:
        raise ValueError("Collapse equalities before taking quotients")
    for blocks in set_partitions(sorted(q.vars)):
        image, _ = quotient(q, blocks)
        yield image, blocks


# -- isomorphism -------------------------------------------------------------------


def shape_key(q: C2rpq) -> tuple[object, ...]:
    """An isomorphism invariant: equal for isomorphic queries."""
    positions: dict[str, list[int]] = defaultdict(list)
    for index, var in enumerate(q.output):
        positions[var].append(index)
    out_degree: Counter[str] = Counter(atom.src for atom in q.atoms)
    in_degree: Counter[str] = Counter(atom.dst for atom in q.atoms)
    loops: Counter[str] = Counter(atom.src for atom in q.atoms if atom.is_loop)

    def label(var: str) -> tuple[object, ...]:
        return (tuple(positions[var]), in_degree[var], out_degree[var], loops[var])

    atoms = tuple(sorted((atom.lang.language_token, label(atom.src), label(atom.dst)) for atom in q.atoms))
    return (len(q.vars), q.arity, atoms, tuple(sorted(label(var) for var in q.vars)))


def _as_digraph(q: C2rpq) -> nx.MultiDiGraph:
    positions: dict[str, list[int]] = defaultdict(list)
    for index, var in enumerate(q.output):
        positions[var].append(index)
    graph = nx.MultiDiGraph()
    for var in sorted(q.vars):
        graph.add_node(var, out=tuple(positions[var]))
    for atom in q.atoms:
        graph.add_edge(atom.src, atom.dst, lang=atom.lang.language_token)
    return graph


def _same_output(left: dict[str, object], right: dict[str, object]) -> bool:
    return left["out"] == right["out"]


def _same_edges(left: dict[int, dict[str, str]], right: dict[int, dict[str, str]]) -> bool:
    return sorted(d["lang"] for d in left.values()) == sorted(d["lang"] for d in right.values())


def is_isomorphic(a: C2rpq, b: C2rpq) -> bool:
    """A bijection of variables preserving outputs, atoms and their languages."""
    if a.arity != b.arity or shape_key(a) != shape_key(b):
        return False
    return bool(nx.is_isomorphic(_as_digraph(a), _as_digraph(b), node_match=_same_output, edge_match=_same_edges))


class IsoIndex:
    """Stores queries up to isomorphism, bucketed by :func:`shape_key`."""

    def __init__(self) -> None:
        self._buckets: dict[tuple[object, ...], list[C2rpq]] = defaultdict(list)
        self.size = 0

    def find(self, q: C2rpq) -> C2rpq | None:
        for known in self._buckets.get(shape_key(q), ()):
            if known == q or is_isomorphic(known, q):
                return known
        return None

    def add(self, q: C2rpq) -> bool:
        """Insert ``q``; False when an isomorphic query is already present."""
        key = shape_key(q)
        bucket = self._buckets[key]
        for known in bucket:
            if known == q or is_isomorphic(known, q):
                return False
        bucket.append(q)
        self.size += 1
        return True

    def __len__(self) -> int:
        return self.size


def homomorphic_images(q: C2rpq) -> Iterator[C2rpq]:
    """Strong-onto images of ``q``, one per isomorphism class, in partition order."""
    index = IsoIndex()
    for image, _ in enumerate_quotients(q):
        if index.add(image):
            yield image


# -- cores ------------------------------------------------------------------------


def _drop_atom(q: C2rpq, position: int) -> C2rpq:
    atoms = q.atoms[:position] + q.atoms[position + 1 :]
    used = set(q.output)
    for atom in atoms:
        used.update((atom.src, atom.dst))
    return C2rpq(frozenset(used), q.output, atoms, frozenset(), q.name)


def cq_core(cq: C2rpq) -> C2rpq:
    """Drop atoms while the query still maps into what is left."""
    if not cq.is_cq:
        raise NotACQError(f"{cq.name} is not a conjunctive query")
    current = cq
    shrinking = True
    while shrinking:
        shrinking = False
        for position in range(len(current.atoms)):
            candidate = _drop_atom(current, position)
            if has_homomorphism(current, candidate):
                logger.debug(f"Core of {cq.name}: dropped {current.atoms[position]}")
                current = candidate
                shrinking = True
                break
    return current
