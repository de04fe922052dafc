"""Query evaluation: naive backtracking, semi-joins over a tree decomposition, and a
left-to-right frontier over a path decomposition.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
import itertools
import json
import logging

from ..errors import CapExceededError, InvalidDecompositionError
from ..models.schemas import Limits
from .automata import Nfa, regular_path_pairs
from .decomposition import (
    DecompositionKind,
    TaggedTreeDecomposition,
    exact_pathwidth,
    exact_treewidth,
    tag_atoms,
)
from .graphdb import GraphDb, expand_inverses
from .query_model import C2rpq, Uc2rpq, as_union, collapse_equalities, underlying_multigraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResultSet:
    arity: int
    tuples: frozenset[tuple[str, ...]] = frozenset()

    def __contains__(self, row: object) -> bool:
        return row in self.tuples

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(sorted(self.tuples))

    @property
    def satisfied(self) -> bool:
        return bool(self.tuples)

    def to_tsv(self) -> str:
        return "".join("\t".join(row) + "\n" for row in self)

    def to_json(self) -> str:
        return json.dumps([list(row) for row in self])


@dataclass
class EvaluationStats:
    """Largest materialized relation (or frontier) and the bound it must respect."""

    max_relation_size: int = 0
    bound: int = 0
    relation_sizes: dict[int, int] = field(default_factory=dict)

    def record(self, bag: int, size: int) -> None:
        self.relation_sizes[bag] = size
        self.max_relation_size = max(self.max_relation_size, size)


class RelationCache:
    """Regular-path relations of one database, keyed by automaton.

    Automata compare by identity, so two languages that only agree on short
    words never share a relation.
    """

    def __init__(self, db: GraphDb):
        self.db = db if db.expanded else expand_inverses(db)
        self._pairs: dict[Nfa, set[tuple[str, str]]] = {}
        self._forward: dict[Nfa, dict[str, set[str]]] = {}
        self._backward: dict[Nfa, dict[str, set[str]]] = {}

    def pairs(self, nfa: Nfa) -> set[tuple[str, str]]:
        if nfa not in self._pairs:
            pairs = regular_path_pairs(nfa, self.db)
            forward: dict[str, set[str]] = defaultdict(set)
            backward: dict[str, set[str]] = defaultdict(set)
            for u, v in pairs:
                forward[u].add(v)
                backward[v].add(u)
            self._pairs[nfa], self._forward[nfa], self._backward[nfa] = pairs, forward, backward
        return self._pairs[nfa]

    def targets(self, nfa: Nfa, node: str) -> set[str]:
        self.pairs(nfa)
        return self._forward[nfa].get(node, set())

    def sources(self, nfa: Nfa, node: str) -> set[str]:
        self.pairs(nfa)
        return self._backward[nfa].get(node, set())


def _prepared(q: C2rpq) -> C2rpq:
    return collapse_equalities(q)[0] if q.equalities else q


def iter_matches(q: C2rpq, db: GraphDb, pinned: Mapping[str, str] | None = None, cache: RelationCache | None = None) -> Iterator[dict[str, str]]:
    """Every assignment of the variables of ``q`` to nodes satisfying all atoms."""
    q = _prepared(q)
    cache = cache or RelationCache(db)
    pinned = dict(pinned or {})
    nodes = sorted(cache.db.nodes)
    for atom in q.atoms:
        if not cache.pairs(atom.lang):
            return
    incident: dict[str, list[int]] = defaultdict(list)
    neighbours: dict[str, set[str]] = defaultdict(set)
    for index, atom in enumerate(q.atoms):
        incident[atom.src].append(index)
        incident[atom.dst].append(index)
        neighbours[atom.src].add(atom.dst)
        neighbours[atom.dst].add(atom.src)
    # pinned variables first, then grow along atoms so candidates are filtered early
    placed: list[str] = []
    pending = set(q.vars)
    while pending:
        pinned_left = sorted(v for v in pending if v in pinned)
        if pinned_left:
            pick = pinned_left[0]
        else:
            linked = [v for v in pending if neighbours[v] & set(placed)]
            pick = min(linked or pending, key=lambda v: (-len(incident[v]), v))
        placed.append(pick)
        pending.discard(pick)
    assignment: dict[str, str] = {}

    def candidates(var: str) -> Iterable[str]:
        if var in pinned:
            return [pinned[var]] if pinned[var] in cache.db.nodes else []
        allowed: set[str] | None = None
        for index in incident[var]:
            atom = q.atoms[index]
            if atom.src == var and atom.dst in assignment:
                found = cache.sources(atom.lang, assignment[atom.dst])
            elif atom.dst == var and atom.src in assignment:
                found = cache.targets(atom.lang, assignment[atom.src])
            else:
                continue
            allowed = set(found) if allowed is None else allowed & found
        return nodes if allowed is None else sorted(allowed)

    def consistent(var: str) -> bool:
        for index in incident[var]:
            atom = q.atoms[index]
            if atom.src in assignment and atom.dst in assignment:
                if (assignment[atom.src], assignment[atom.dst]) not in cache.pairs(atom.lang):
                    return False
        return True

    def search(position: int) -> Iterator[dict[str, str]]:
        if position == len(placed):
            yield dict(assignment)
            return
        var = placed[position]
        for value in candidates(var):
            assignment[var] = value
            if consistent(var):
                yield from search(position + 1)
            del assignment[var]

    yield from search(0)


def evaluate_naive(query: C2rpq | Uc2rpq, db: GraphDb) -> ResultSet:
    union = as_union(query)
    cache = RelationCache(db)
    rows: set[tuple[str, ...]] = set()
    for q in union:
        q = _prepared(q)
        for match in iter_matches(q, db, cache=cache):
            rows.add(tuple(match[v] for v in q.output))
            if not q.output:
                break
    return ResultSet(union.arity, frozenset(rows))


# -- tree decompositions ---------------------------------------------------------------


def _semijoin(left_vars: tuple[str, ...], left: set[tuple[str, ...]], right_vars: tuple[str, ...], right: set[tuple[str, ...]]) -> set[tuple[str, ...]]:
    shared = [v for v in left_vars if v in right_vars]
    if not shared:
        return left if right else set()
    left_at = [left_vars.index(v) for v in shared]
    right_at = [right_vars.index(v) for v in shared]
    keys = {tuple(row[i] for i in right_at) for row in right}
    return {row for row in left if tuple(row[i] for i in left_at) in keys}


def evaluate_treewidth(
    q: C2rpq, db: GraphDb, ttd: TaggedTreeDecomposition, limits: Limits | None = None, stats: EvaluationStats | None = None
) -> ResultSet:
    """Materialize one relation per bag, fully reduce them by semi-joins, then join and project."""
    limits = limits or Limits()
    q = _prepared(q)
    ttd.dec.validate_query(q)
    ttd.validate()
    cache = RelationCache(db)
    nodes = sorted(cache.db.nodes)
    n = len(nodes)
    dec = ttd.dec
    stats = stats if stats is not None else EvaluationStats()
    stats.bound = n ** (dec.width + 1)
    tagged = ttd.tags_by_bag()

    schema: dict[int, tuple[str, ...]] = {}
    relations: dict[int, set[tuple[str, ...]]] = {}
    for bag in dec.bfs_order():
        variables = tuple(sorted(dec.bags[bag]))
        if n ** len(variables) > limits.relation_size_cap:
            raise CapExceededError("relation_size_cap", limits.relation_size_cap, f"bag b{bag} would seed {n ** len(variables)} tuples")
        checks = []
        for index in tagged.get(bag, []):
            atom = q.atoms[index]
            checks.append((variables.index(atom.src), variables.index(atom.dst), cache.pairs(atom.lang)))
        rows = {
            row
            for row in itertools.product(nodes, repeat=len(variables))
            if all((row[s], row[d]) in pairs for s, d, pairs in checks)
        }
        schema[bag], relations[bag] = variables, rows
        stats.record(bag, len(rows))
        if len(rows) > stats.bound:  # pragma: no cover
            raise AssertionError(f"Relation of b{bag} exceeds |V|^(k+1)")

    order = dec.bfs_order()
    parent = dec.parents()
    for bag in reversed(order):
        if bag in parent:
            up = parent[bag]
            relations[up] = _semijoin(schema[up], relations[up], schema[bag], relations[bag])
    for bag in order:
        if bag in parent:
            up = parent[bag]
            relations[bag] = _semijoin(schema[bag], relations[bag], schema[up], relations[up])

    outputs = set(q.output)
    partial_vars: tuple[str, ...] = schema[order[0]]
    partial = set(relations[order[0]])
    for position, bag in enumerate(order):
        if position > 0:
            joined_vars = partial_vars + tuple(v for v in schema[bag] if v not in partial_vars)
            shared = [v for v in schema[bag] if v in partial_vars]
            index: dict[tuple[str, ...], list[tuple[str, ...]]] = defaultdict(list)
            for row in relations[bag]:
                index[tuple(row[schema[bag].index(v)] for v in shared)].append(row)
            extra = [schema[bag].index(v) for v in schema[bag] if v not in partial_vars]
            grown = set()
            for row in partial:
                key = tuple(row[partial_vars.index(v)] for v in shared)
                for match in index.get(key, []):
                    grown.add(row + tuple(match[i] for i in extra))
            partial_vars, partial = joined_vars, grown
        later = set().union(*(dec.bags[b] for b in order[position + 1 :]))
        keep = tuple(v for v in partial_vars if v in outputs or v in later)
        positions = [partial_vars.index(v) for v in keep]
        partial = {tuple(row[i] for i in positions) for row in partial}
        partial_vars = keep

    result = {tuple(row[partial_vars.index(v)] for v in q.output) for row in partial}
    logger.debug(f"Tree-width evaluation of {q.name}: largest relation {stats.max_relation_size}, bound {stats.bound}")
    return ResultSet(q.arity, frozenset(result))


# -- path decompositions ---------------------------------------------------------------


def _path_order(ttd: TaggedTreeDecomposition) -> list[int]:
    tree = ttd.dec.tree
    if tree.number_of_nodes() == 1:
        return [ttd.dec.root]
    start = ttd.dec.root if tree.degree(ttd.dec.root) <= 1 else min(n for n in tree.nodes if tree.degree(n) == 1)
    order = [start]
    while len(order) < tree.number_of_nodes():
        order.append(next(n for n in sorted(tree.neighbors(order[-1])) if n not in order))
    return order


def evaluate_pathwidth(q: C2rpq, db: GraphDb, ttd: TaggedTreeDecomposition, stats: EvaluationStats | None = None) -> ResultSet:
    """Scan the bags left to right keeping every partial assignment of the current bag.

    Output variables keep their value after leaving the bag, so each frontier
    entry is a bag assignment plus the output bindings seen so far.
    """
    q = _prepared(q)
    if ttd.dec.kind is not DecompositionKind.PATH:
        raise InvalidDecompositionError("Path evaluation needs a path decomposition")
    ttd.dec.validate_query(q)
    ttd.validate()
    cache = RelationCache(db)
    nodes = sorted(cache.db.nodes)
    stats = stats if stats is not None else EvaluationStats()
    stats.bound = len(nodes) ** (ttd.dec.width + 1)
    tagged = ttd.tags_by_bag()
    out_vars = tuple(sorted(set(q.output)))

    bag_vars: tuple[str, ...] = ()
    frontier: set[tuple[tuple[str, ...], tuple[str | None, ...]]] = {((), tuple(None for _ in out_vars))}
    for bag in _path_order(ttd):
        variables = tuple(sorted(ttd.dec.bags[bag]))
        fresh = [v for v in variables if v not in bag_vars]
        checks = [q.atoms[index] for index in tagged.get(bag, [])]
        following: set[tuple[tuple[str, ...], tuple[str | None, ...]]] = set()
        for values, bound in frontier:
            known = dict(zip(bag_vars, values, strict=True))
            for choice in itertools.product(nodes, repeat=len(fresh)):
                current = {v: known[v] for v in variables if v in known}
                current.update(zip(fresh, choice, strict=True))
                if not all((current[a.src], current[a.dst]) in cache.pairs(a.lang) for a in checks):
                    continue
                outputs = tuple(current.get(v, b) if b is None else b for v, b in zip(out_vars, bound, strict=True))
                following.add((tuple(current[v] for v in variables), outputs))
        frontier = following
        bag_vars = variables
        stats.record(bag, len(frontier))
        if not frontier:
            break

    rows = set()
    for _, bound in frontier:
        binding = dict(zip(out_vars, bound, strict=True))
        rows.add(tuple(binding[v] for v in q.output))  # type: ignore[misc]
    return ResultSet(q.arity, frozenset(rows))


def decompose_for_evaluation(q: C2rpq, kind: DecompositionKind, limits: Limits | None = None) -> TaggedTreeDecomposition:
    """An optimal tree or path decomposition of ``q``, tagged."""
    limits = limits or Limits()
    q = _prepared(q)
    graph = underlying_multigraph(q)
    if kind is DecompositionKind.PATH:
        _, dec = exact_pathwidth(graph, limits.pathwidth_vertex_cap)
    else:
        _, dec = exact_treewidth(graph, limits.treewidth_vertex_cap)
    return tag_atoms(q, dec)
