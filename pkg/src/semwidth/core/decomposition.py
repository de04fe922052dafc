"""Tree and path decompositions: exact widths, fine and tagged decompositions,
induced paths, bag profiles and the two passes that bound refinement length.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
import logging

import networkx as nx
from networkx.algorithms.approximation import treewidth_min_fill_in

from ..errors import CapExceededError, InvalidDecompositionError, PreconditionError
from .morphism import Homomorphism, is_strong_onto
from .query_model import Atom, C2rpq, Refinement, condense

logger = logging.getLogger(__name__)

TREEWIDTH_VERTEX_CAP = 20
PATHWIDTH_VERTEX_CAP = 18


class DecompositionKind(StrEnum):
    TREE = "tree"
    PATH = "path"


@dataclass
class TreeDecomposition:
    bags: dict[int, frozenset[str]]
    tree: nx.Graph
    root: int
    kind: DecompositionKind = DecompositionKind.TREE

    @property
    def width(self) -> int:
        return max(max((len(bag) for bag in self.bags.values()), default=0) - 1, 0)

    def bfs_order(self) -> list[int]:
        order = [self.root]
        seen = {self.root}
        for node in order:
            for other in sorted(self.tree.neighbors(node)):
                if other not in seen:
                    seen.add(other)
                    order.append(other)
        return order

    def parents(self) -> dict[int, int]:
        """Parent of every non-root bag."""
        parent: dict[int, int] = {}
        seen = {self.root}
        for node in self.bfs_order():
            for other in sorted(self.tree.neighbors(node)):
                if other not in seen:
                    seen.add(other)
                    parent[other] = node
        return parent

    def children(self, bag: int) -> list[int]:
        parent = self.parents()
        return sorted(other for other in self.tree.neighbors(bag) if parent.get(other) == bag)

    def tree_path(self, start: int, end: int) -> list[int]:
        return list(nx.shortest_path(self.tree, start, end))

    def copy(self) -> TreeDecomposition:
        return TreeDecomposition(dict(self.bags), self.tree.copy(), self.root, self.kind)

    def validate(self, vertices: Iterable[str], edges: Iterable[tuple[str, str]]) -> None:
        """Raise InvalidDecompositionError unless this decomposes the graph given by vertices and edges."""
        if set(self.tree.nodes) != set(self.bags):
            raise InvalidDecompositionError("Tree nodes and bag ids differ")
        if self.root not in self.bags:
            raise InvalidDecompositionError(f"Root {self.root} is not a bag")
        if not nx.is_tree(self.tree):
            raise InvalidDecompositionError("The decomposition graph is not a tree")
        if self.kind is DecompositionKind.PATH and any(degree > 2 for _, degree in self.tree.degree()):
            raise InvalidDecompositionError("A path decomposition has a bag with three neighbours")
        holders: dict[str, list[int]] = defaultdict(list)
        for bag_id, bag in self.bags.items():
            for var in bag:
                holders[var].append(bag_id)
        for var in vertices:
            if not holders[var]:
                raise InvalidDecompositionError(f"Variable {var} is in no bag")
        for u, v in edges:
            if not any(u in self.bags[b] and v in self.bags[b] for b in holders[u]):
                raise InvalidDecompositionError(f"No bag holds both {u} and {v}")
        for var, bag_ids in holders.items():
            if not nx.is_connected(self.tree.subgraph(bag_ids)):
                raise InvalidDecompositionError(f"Bags holding {var} are not connected")

    def validate_query(self, q: C2rpq) -> None:
        self.validate(q.vars, [(atom.src, atom.dst) for atom in q.atoms])

    def dump(self, tags: dict[int, list[int]] | None = None) -> str:
        """Indented text: bag id, parent, variables and tagged atoms."""
        parent = self.parents()
        depth = {self.root: 0}
        lines = [f"# {self.kind} decomposition, width {self.width}"]
        for node in self.bfs_order():
            if node != self.root:
                depth[node] = depth[parent[node]] + 1
            line = f"{'  ' * depth[node]}b{node} (parent {parent.get(node, '-')}): {{{', '.join(sorted(self.bags[node]))}}}"
            if tags and tags.get(node):
                line += f" tags {sorted(tags[node])}"
            lines.append(line)
        return "\n".join(lines) + "\n"


def _simple(graph: nx.Graph) -> nx.Graph:
    """Loops and parallel edges do not matter for width."""
    simple = nx.Graph()
    simple.add_nodes_from(graph.nodes)
    simple.add_edges_from((u, v) for u, v in graph.edges() if u != v)
    return simple


def _relabelled(bags: dict[int, frozenset[str]], tree: nx.Graph, root: int, kind: DecompositionKind) -> TreeDecomposition:
    """Merge bags contained in a neighbour, then number bags in breadth-first order."""
    bags = dict(bags)
    tree = tree.copy()
    shrinking = True
    while shrinking:
        shrinking = False
        for u, v in sorted(tuple(sorted(edge)) for edge in tree.edges()):
            for small, large in ((u, v), (v, u)):
                if bags[small] <= bags[large]:
                    for other in list(tree.neighbors(small)):
                        if other != large:
                            tree.add_edge(large, other)
                    tree.remove_node(small)
                    del bags[small]
                    if root == small:
                        root = large
                    shrinking = True
                    break
            if shrinking:
                break
    draft = TreeDecomposition(bags, tree, root, kind)
    numbering = {node: index for index, node in enumerate(draft.bfs_order())}
    relabelled = nx.relabel_nodes(tree, numbering)
    return TreeDecomposition({numbering[b]: bag for b, bag in bags.items()}, relabelled, 0, kind)


def _empty_decomposition(graph: nx.Graph, kind: DecompositionKind) -> TreeDecomposition:
    tree = nx.Graph()
    tree.add_node(0)
    return TreeDecomposition({0: frozenset(graph.nodes)}, tree, 0, kind)


def _bitmasks(simple: nx.Graph) -> tuple[list[str], list[int]]:
    vertices = sorted(simple.nodes)
    index = {v: i for i, v in enumerate(vertices)}
    adjacency = [0] * len(vertices)
    for u, v in simple.edges():
        adjacency[index[u]] |= 1 << index[v]
        adjacency[index[v]] |= 1 << index[u]
    return vertices, adjacency


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _eliminated_neighbourhood(adjacency: list[int], eliminated: int, v: int) -> int:
    """Vertices outside ``eliminated`` and ``v`` reachable from ``v`` through ``eliminated``."""
    seen = 1 << v
    stack = [v]
    boundary = 0
    while stack:
        u = stack.pop()
        fresh = adjacency[u] & ~seen
        inside = fresh & eliminated
        boundary |= fresh & ~eliminated
        seen |= inside
        stack.extend(_bits(inside))
    return boundary


def _from_elimination_order(simple: nx.Graph, order: Sequence[str]) -> TreeDecomposition:
    filled = simple.copy()
    position = {v: i for i, v in enumerate(order)}
    bags: dict[int, frozenset[str]] = {}
    later: dict[int, set[str]] = {}
    for i, v in enumerate(order):
        higher = {w for w in filled.neighbors(v) if position[w] > i}
        for a in higher:
            for b in higher:
                if a < b:
                    filled.add_edge(a, b)
        bags[i] = frozenset(higher | {v})
        later[i] = higher
    tree = nx.Graph()
    tree.add_nodes_from(bags)
    root = len(order) - 1
    for i in range(len(order)):
        if later[i]:
            tree.add_edge(i, min(position[w] for w in later[i]))
        elif i != root:
            tree.add_edge(i, root)
    return _relabelled(bags, tree, root, DecompositionKind.TREE)


def _from_networkx(decomposition: nx.Graph) -> TreeDecomposition:
    nodes = sorted(decomposition.nodes, key=lambda bag: (-len(bag), sorted(bag)))
    ids = {bag: i for i, bag in enumerate(nodes)}
    tree = nx.Graph()
    tree.add_nodes_from(ids.values())
    tree.add_edges_from((ids[a], ids[b]) for a, b in decomposition.edges())
    for component in sorted(nx.connected_components(tree), key=min):
        if 0 not in component:
            tree.add_edge(0, min(component))
    return _relabelled({i: frozenset(bag) for bag, i in ids.items()}, tree, 0, DecompositionKind.TREE)


def exact_treewidth(graph: nx.Graph, cap: int = TREEWIDTH_VERTEX_CAP) -> tuple[int, TreeDecomposition]:
    """Optimal tree-width with a witnessing decomposition.

    Dynamic programming over the sets of vertices eliminated first, pruned by
    the min-fill-in upper bound from networkx.
    """
    simple = _simple(graph)
    n = simple.number_of_nodes()
    if n > cap:
        raise CapExceededError("treewidth_vertex_cap", cap, f"graph has {n} vertices")
    if n == 0 or simple.number_of_edges() == 0:
        if n <= 1:
            return 0, _empty_decomposition(simple, DecompositionKind.TREE)
        return 0, _from_elimination_order(simple, sorted(simple.nodes))
    upper, heuristic = treewidth_min_fill_in(simple)
    if upper <= 1:
        return upper, _from_networkx(heuristic)

    vertices, adjacency = _bitmasks(simple)
    full = (1 << n) - 1
    level: dict[int, int] = {0: -1}
    choice: dict[int, tuple[int, int]] = {}
    for _ in range(n):
        following: dict[int, int] = {}
        for eliminated, value in level.items():
            for v in _bits(full & ~eliminated):
                cost = max(value, _eliminated_neighbourhood(adjacency, eliminated, v).bit_count())
                if cost >= upper:
                    continue
                grown = eliminated | (1 << v)
                if grown not in following or cost < following[grown]:
                    following[grown] = cost
                    choice[grown] = (eliminated, v)
        level = following
        if not level:
            break
    if full not in level:
        logger.debug(f"Min-fill-in bound {upper} is optimal on {n} vertices")
        return upper, _from_networkx(heuristic)
    order: list[str] = []
    current = full
    while current:
        current, v = choice[current]
        order.append(vertices[v])
    order.reverse()
    return level[full], _from_elimination_order(simple, order)


def exact_pathwidth(graph: nx.Graph, cap: int = PATHWIDTH_VERTEX_CAP) -> tuple[int, TreeDecomposition]:
    """Optimal path-width through the vertex separation number of the best vertex ordering."""
    simple = _simple(graph)
    n = simple.number_of_nodes()
    if n > cap:
        raise CapExceededError("pathwidth_vertex_cap", cap, f"graph has {n} vertices")
    if n <= 1:
        return 0, _empty_decomposition(simple, DecompositionKind.PATH)
    vertices, adjacency = _bitmasks(simple)
    full = (1 << n) - 1

    def boundary(placed: int) -> int:
        return sum(1 for u in _bits(placed) if adjacency[u] & ~placed)

    best = [0] * (1 << n)
    last = [0] * (1 << n)
    for placed in range(1, full + 1):
        value = None
        for v in _bits(placed):
            candidate = best[placed ^ (1 << v)]
            if value is None or candidate < value:
                value, last[placed] = candidate, v
        best[placed] = max(boundary(placed), value or 0)

    order: list[int] = []
    current = full
    while current:
        order.append(last[current])
        current ^= 1 << last[current]
    order.reverse()

    bags: dict[int, frozenset[str]] = {}
    placed = 0
    for i, v in enumerate(order):
        frontier = [u for u in _bits(placed) if adjacency[u] & ~placed]
        bags[i] = frozenset(vertices[u] for u in (*frontier, v))
        placed |= 1 << v
    tree = nx.path_graph(n)
    dec = _relabelled(bags, tree, 0, DecompositionKind.PATH)
    return dec.width, dec


def treewidth_at_most(graph: nx.Graph, k: int, cap: int = TREEWIDTH_VERTEX_CAP) -> bool:
    simple = _simple(graph)
    if simple.number_of_nodes() <= k + 1 or simple.number_of_edges() == 0:
        return True
    if nx.is_forest(simple):
        return k >= 1
    upper, _ = treewidth_min_fill_in(simple)
    if upper <= k:
        return True
    return exact_treewidth(simple, cap)[0] <= k


def pathwidth_at_most(graph: nx.Graph, k: int, cap: int = PATHWIDTH_VERTEX_CAP) -> bool:
    simple = _simple(graph)
    if simple.number_of_nodes() <= k + 1 or simple.number_of_edges() == 0:
        return True
    return exact_pathwidth(simple, cap)[0] <= k


# -- fine decompositions -------------------------------------------------------------


def _edges(tree: nx.Graph) -> list[tuple[int, int]]:
    return sorted(tuple(sorted(edge)) for edge in tree.edges())


def is_fine(dec: TreeDecomposition) -> bool:
    """Every bag adds to or removes from its parent a nonempty set, never both."""
    for child, parent in dec.parents().items():
        a, b = dec.bags[parent], dec.bags[child]
        if a == b or not (a < b or b < a):
            return False
    return True


def make_fine(dec: TreeDecomposition) -> tuple[TreeDecomposition, dict[int, int]]:
    """Merge equal neighbours, then put the intersection between incomparable neighbours.

    Returns the new decomposition and where every old bag id ended up.
    """
    result = dec.copy()
    bags, tree = result.bags, result.tree
    remap = {bag_id: bag_id for bag_id in bags}
    merging = True
    while merging:
        merging = False
        for u, v in _edges(tree):
            if bags[u] != bags[v]:
                continue
            keep, drop = (u, v) if u == result.root or v != result.root else (v, u)
            for other in list(tree.neighbors(drop)):
                if other != keep:
                    tree.add_edge(keep, other)
            tree.remove_node(drop)
            del bags[drop]
            for old, target in remap.items():
                if target == drop:
                    remap[old] = keep
            merging = True
            break
    next_id = max(bags) + 1
    for child, parent in sorted(result.parents().items()):
        a, b = bags[parent], bags[child]
        if a < b or b < a:
            continue
        tree.remove_edge(parent, child)
        bags[next_id] = a & b
        tree.add_edge(parent, next_id)
        tree.add_edge(next_id, child)
        next_id += 1
    return result, remap


# -- tagged decompositions -----------------------------------------------------------


@dataclass
class TaggedTreeDecomposition:
    """A decomposition of the target of ``mapping`` with a bag for every atom of ``query``."""

    dec: TreeDecomposition
    query: C2rpq
    tag: dict[int, int]
    mapping: dict[str, str] = field(default_factory=dict)

    def image(self, var: str) -> str:
        return self.mapping.get(var, var)

    @property
    def fine(self) -> bool:
        return is_fine(self.dec)

    def tags_by_bag(self) -> dict[int, list[int]]:
        grouped: dict[int, list[int]] = defaultdict(list)
        for atom_index, bag in self.tag.items():
            grouped[bag].append(atom_index)
        return grouped

    def validate(self, target: C2rpq | None = None) -> None:
        if target is not None:
            self.dec.validate_query(target)
        for index, atom in enumerate(self.query.atoms):
            bag = self.tag.get(index)
            if bag is None or bag not in self.dec.bags:
                raise InvalidDecompositionError(f"Atom {atom} is not tagged")
            if not {self.image(atom.src), self.image(atom.dst)} <= self.dec.bags[bag]:
                raise InvalidDecompositionError(f"Bag b{bag} misses an endpoint of {atom}")

    def dump(self) -> str:
        return self.dec.dump(self.tags_by_bag())


def tag_atoms(q: C2rpq, dec: TreeDecomposition, f: Homomorphism | None = None) -> TaggedTreeDecomposition:
    """Tag each atom in the first bag, in breadth-first order, holding both endpoint images."""
    mapping = dict(f.mapping) if f is not None else {var: var for var in q.vars}
    order = dec.bfs_order()
    tags: dict[int, int] = {}
    for index, atom in enumerate(q.atoms):
        ends = {mapping[atom.src], mapping[atom.dst]}
        bag = next((b for b in order if ends <= dec.bags[b]), None)
        if bag is None:
            raise InvalidDecompositionError(f"No bag holds the endpoints of {atom}")
        tags[index] = bag
    return TaggedTreeDecomposition(dec, q, tags, mapping)


# -- induced paths --------------------------------------------------------------------


@dataclass(frozen=True)
class PathStep:
    bag: int
    var: str
    position: int


def _induced_steps(ttd: TaggedTreeDecomposition, atom_indices: Sequence[int], path_vars: Sequence[str]) -> list[PathStep]:
    steps: list[PathStep] = []
    for i, atom_index in enumerate(atom_indices):
        bag = ttd.tag[atom_index]
        steps.append(PathStep(bag, ttd.image(path_vars[i]), i))
        steps.append(PathStep(bag, ttd.image(path_vars[i + 1]), i + 1))
        if i + 1 < len(atom_indices):
            link = ttd.dec.tree_path(bag, ttd.tag[atom_indices[i + 1]])[1:-1]
            steps.extend(PathStep(b, ttd.image(path_vars[i + 1]), i + 1) for b in link)
    return steps


def induced_path(ttd: TaggedTreeDecomposition, atom_indices: Sequence[int]) -> list[PathStep]:
    """The bag/variable sequence induced by a path made of the given atoms of ``ttd.query``."""
    atoms = [ttd.query.atoms[i] for i in atom_indices]
    if not atoms:
        return []
    if len(atoms) == 1:
        return _induced_steps(ttd, atom_indices, [atoms[0].src, atoms[0].dst])
    first, second = atoms[0], atoms[1]
    start = first.src if first.dst in (second.src, second.dst) else first.dst
    path_vars = [start]
    for atom in atoms:
        if atom.src == path_vars[-1]:
            path_vars.append(atom.dst)
        elif atom.dst == path_vars[-1]:
            path_vars.append(atom.src)
        else:
            raise PreconditionError(f"Atoms {[str(a) for a in atoms]} do not form a path")
    return _induced_steps(ttd, atom_indices, path_vars)


def leaving_steps(steps: Sequence[PathStep]) -> list[PathStep]:
    """Steps after which the path moves to another bag, plus the last one."""
    return [step for i, step in enumerate(steps) if i + 1 == len(steps) or steps[i + 1].bag != step.bag]


def is_cyclic(steps: Sequence[PathStep]) -> bool:
    first: dict[int, int] = {}
    for i, step in enumerate(steps):
        if i - first.setdefault(step.bag, i) >= 2:
            return True
    return False


# -- trios ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trio:
    """A refinement of ``gamma`` mapped strongly onto ``alpha``."""

    gamma: C2rpq
    refinement: Refinement
    alpha: C2rpq
    hom: Homomorphism

    @property
    def rho(self) -> C2rpq:
        return self.refinement.result


def image_query(rho: C2rpq, mapping: dict[str, str], name: str, output: Sequence[str] | None = None) -> C2rpq:
    """The image of ``rho``: one atom per distinct image atom."""
    atoms: list[Atom] = []
    seen: set[tuple[str, str, str]] = set()
    for atom in rho.atoms:
        key = (mapping[atom.src], atom.lang.language_token, mapping[atom.dst])
        if key not in seen:
            seen.add(key)
            atoms.append(Atom(mapping[atom.src], atom.lang, mapping[atom.dst]))
    out = tuple(output) if output is not None else tuple(mapping[v] for v in rho.output)
    return C2rpq(frozenset(mapping[v] for v in rho.vars), out, tuple(atoms), frozenset(), name)


def make_trio(refinement: Refinement, mapping: dict[str, str], name: str = "alpha") -> Trio:
    """The trio of ``refinement`` and its image under ``mapping``."""
    rho = refinement.result
    alpha = image_query(rho, mapping, name)
    return Trio(refinement.base, refinement, alpha, Homomorphism(dict(mapping), rho, alpha))


def check_trio(trio: Trio) -> None:
    if trio.hom.source != trio.rho or trio.hom.target != trio.alpha:
        raise PreconditionError("The homomorphism does not go from the refinement to the approximation")
    if set(trio.hom.mapping) != set(trio.rho.vars):
        raise PreconditionError("The homomorphism is not defined on every variable of the refinement")
    if tuple(trio.hom(v) for v in trio.rho.output) != trio.alpha.output:
        raise PreconditionError("The homomorphism does not preserve the output tuple")
    keys = {(a.src, a.lang.language_token, a.dst) for a in trio.alpha.atoms}
    keys |= {(a.dst, a.lang.inverse.language_token, a.src) for a in trio.alpha.atoms}
    for atom in trio.rho.atoms:
        if (trio.hom(atom.src), atom.lang.language_token, trio.hom(atom.dst)) not in keys:
            raise PreconditionError(f"The image of {atom} is not an atom of {trio.alpha.name}")
    if not is_strong_onto(trio.hom.mapping, trio.rho, trio.alpha) or {trio.hom(v) for v in trio.rho.vars} != trio.alpha.vars:
        raise PreconditionError("The homomorphism is not strong onto")


def refinement_path(ttd: TaggedTreeDecomposition, trio: Trio, atom_index: int) -> list[PathStep]:
    """The path induced by the refinement of one atom of ``gamma``; empty for an equality collapse."""
    indices = trio.refinement.result_atoms_of(atom_index)
    if not indices:
        return []
    return _induced_steps(ttd, indices, trio.refinement.paths[atom_index])


def is_locally_acyclic(ttd: TaggedTreeDecomposition, trio: Trio) -> bool:
    return not any(is_cyclic(refinement_path(ttd, trio, i)) for i in range(len(trio.gamma.atoms)))


def _gamma_vars(trio: Trio) -> frozenset[str]:
    return frozenset(var for var in trio.rho.vars if "#" not in var)


def is_atomic(ttd: TaggedTreeDecomposition, trio: Trio, bag: int) -> bool:
    """A bag is atomic when an atom tagged there touches a variable of ``gamma``."""
    own = _gamma_vars(trio)
    for atom_index in ttd.tags_by_bag().get(bag, []):
        atom = trio.rho.atoms[atom_index]
        if atom.src in own or atom.dst in own:
            return True
    return False


def atomic_bags(ttd: TaggedTreeDecomposition, trio: Trio) -> list[int]:
    return [bag for bag in ttd.dec.bfs_order() if is_atomic(ttd, trio, bag)]


@dataclass(frozen=True)
class BagProfile:
    types: dict[str, frozenset[int]]
    atomic: bool

    @property
    def signature(self) -> tuple[tuple[int, ...], ...]:
        """The multiset of types, as a sorted tuple."""
        return tuple(sorted(tuple(sorted(t)) for t in self.types.values()))


LeaveTable = dict[int, dict[int, list[PathStep]]]


def _leave_table(ttd: TaggedTreeDecomposition, trio: Trio) -> LeaveTable:
    """bag -> gamma atom -> steps where that atom's refinement leaves the bag."""
    table: LeaveTable = defaultdict(lambda: defaultdict(list))
    for atom_index in range(len(trio.gamma.atoms)):
        for step in leaving_steps(refinement_path(ttd, trio, atom_index)):
            table[step.bag][atom_index].append(step)
    return table


def _profile(ttd: TaggedTreeDecomposition, trio: Trio, bag: int, table: LeaveTable) -> BagProfile:
    if is_atomic(ttd, trio, bag):
        return BagProfile({}, True)
    types: dict[str, set[int]] = {var: set() for var in ttd.dec.bags[bag]}
    for atom_index, steps in table.get(bag, {}).items():
        for step in steps:
            types[step.var].add(atom_index)
    return BagProfile({var: frozenset(t) for var, t in types.items()}, False)


def profile_of_bag(ttd: TaggedTreeDecomposition, trio: Trio, bag: int) -> BagProfile:
    return _profile(ttd, trio, bag, _leave_table(ttd, trio))


# -- restriction ----------------------------------------------------------------------


def restrict_to_tags(ttd: TaggedTreeDecomposition, alpha: C2rpq) -> TaggedTreeDecomposition:
    """Keep the smallest subtree holding every tag and every variable of ``alpha``, then make it fine."""
    dec = ttd.dec
    order = dec.bfs_order()
    terminals = set(ttd.tag.values())
    covered = {ttd.image(v) for atom in ttd.query.atoms for v in (atom.src, atom.dst)}
    for var in sorted(alpha.vars - covered):
        holder = next((b for b in order if var in dec.bags[b]), None)
        if holder is None:
            raise InvalidDecompositionError(f"Variable {var} is in no bag")
        terminals.add(holder)
    if not terminals:
        terminals.add(dec.root)
    tree = dec.tree.copy()
    pruning = True
    while pruning:
        pruning = False
        for node in sorted(tree.nodes):
            if node not in terminals and tree.degree(node) <= 1 and tree.number_of_nodes() > 1:
                tree.remove_node(node)
                pruning = True
    root = next(b for b in order if b in tree)
    bags = {b: dec.bags[b] & alpha.vars for b in tree.nodes}
    restricted = TreeDecomposition(bags, tree, root, dec.kind)
    fine, remap = make_fine(restricted)
    tags = {atom_index: remap[bag] for atom_index, bag in ttd.tag.items()}
    return TaggedTreeDecomposition(fine, ttd.query, tags, dict(ttd.mapping))


def _retagged(old: Refinement, new: Refinement, old_tags: dict[int, int], atom_index: int, i: int, j: int) -> dict[tuple[int, int], int]:
    """Tags keyed by (gamma atom, segment) after condensing segments ``i+1 .. j`` of one atom."""
    by_origin: dict[tuple[int, int], int] = {}
    for result_index, (base_atom, segment) in enumerate(old.origin):
        if base_atom != atom_index:
            by_origin[(base_atom, segment)] = old_tags[result_index]
        elif segment < i:
            by_origin[(base_atom, segment)] = old_tags[result_index]
        elif segment >= j:
            by_origin[(base_atom, segment - (j - i - 1))] = old_tags[result_index]
    return by_origin


def _rebuilt(trio: Trio, refinement: Refinement, mapping: dict[str, str]) -> Trio:
    rho = refinement.result
    restricted = {var: mapping[var] for var in rho.vars}
    alpha = image_query(rho, restricted, trio.alpha.name, trio.alpha.output)
    return Trio(trio.gamma, refinement, alpha, Homomorphism(restricted, rho, alpha))


def make_locally_acyclic(trio: Trio, ttd: TaggedTreeDecomposition) -> tuple[Trio, TaggedTreeDecomposition]:
    """Condense refinements whose induced path comes back to a bag it already left."""
    fine, remap = make_fine(ttd.dec)
    ttd = TaggedTreeDecomposition(fine, ttd.query, {a: remap[b] for a, b in ttd.tag.items()}, dict(ttd.mapping))
    while True:
        target = None
        for atom_index in range(len(trio.gamma.atoms)):
            steps = refinement_path(ttd, trio, atom_index)
            if is_cyclic(steps):
                target = atom_index, steps
                break
        if target is None:
            return trio, ttd
        atom_index, steps = target
        last: dict[int, int] = {}
        for position, step in enumerate(steps):
            last[step.bag] = position
        j = next(p for p, step in enumerate(steps) if last[step.bag] - p >= 2)
        j2 = last[steps[j].bag]
        lo, hi = steps[j].position, steps[j2].position
        bag = steps[j].bag
        if hi == lo:
            raise RuntimeError(f"Cyclic path of atom {atom_index} revisits bag b{bag} at one position")
        if hi - lo == 1:
            # one atom left the bag and came back: it fits in the bag itself
            moved = trio.refinement.result_atoms_of(atom_index)[lo]
            logger.debug(f"Retagging segment {lo + 1} of atom {atom_index} at bag b{bag}")
            tags = {**ttd.tag, moved: bag}
            ttd = restrict_to_tags(TaggedTreeDecomposition(ttd.dec, trio.rho, tags, dict(ttd.mapping)), trio.alpha)
            continue
        logger.debug(f"Condensing segments {lo + 1}..{hi} of atom {atom_index} at bag b{bag}")
        refinement = condense(trio.refinement, atom_index, lo, hi)
        by_origin = _retagged(trio.refinement, refinement, ttd.tag, atom_index, lo, hi)
        by_origin[(atom_index, lo)] = bag
        tags = {index: by_origin[origin] for index, origin in enumerate(refinement.origin)}
        trio = _rebuilt(trio, refinement, trio.hom.mapping)
        ttd = restrict_to_tags(TaggedTreeDecomposition(ttd.dec, trio.rho, tags, dict(trio.hom.mapping)), trio.alpha)


# -- non-branching paths ---------------------------------------------------------------


class Mark(StrEnum):
    TRAP = "trap"
    AVOID = "avoid"


def pigeonhole_threshold(gamma_size: int, k: int) -> int:
    """Length from which a non-branching path always holds a shortenable pair of bags."""
    return 2 * (2 * gamma_size + 1) * (2 * k + 1) * ((k + 1) ** gamma_size + 1) + 4 * gamma_size


def non_branching_paths(dec: TreeDecomposition) -> list[list[int]]:
    """Maximal paths whose inner bags have exactly two neighbours."""
    tree = dec.tree
    if tree.number_of_nodes() == 1:
        return [[dec.root]]
    anchors = sorted(node for node in tree.nodes if tree.degree(node) != 2)
    found: dict[tuple[int, ...], list[int]] = {}
    for anchor in anchors:
        for first in sorted(tree.neighbors(anchor)):
            chain = [anchor, first]
            while tree.degree(chain[-1]) == 2:
                chain.append(next(n for n in tree.neighbors(chain[-1]) if n != chain[-2]))
            key = min(tuple(chain), tuple(reversed(chain)))
            found.setdefault(key, list(key))
    return [found[key] for key in sorted(found)]


def find_repeat(sequence: Sequence[object], distance: int) -> tuple[int, int] | None:
    """Indices i < j, at least ``distance`` apart, with equal non-avoid entries and no trap in between."""
    first: dict[object, int] = {}
    for index, entry in enumerate(sequence):
        if entry == Mark.TRAP:
            first.clear()
            continue
        if entry == Mark.AVOID:
            continue
        start = first.setdefault(entry, index)
        if index - start >= distance:
            return start, index
    return None


def _classify(ttd: TaggedTreeDecomposition, trio: Trio, chain: Sequence[int], k: int, table: LeaveTable) -> list[object]:
    isolated = {ttd.image(v) for v in trio.rho.vars if not any(v in (a.src, a.dst) for a in trio.rho.atoms)}
    sequence: list[object] = []
    for bag in chain:
        if is_atomic(ttd, trio, bag) or ttd.dec.bags[bag] & isolated:
            sequence.append(Mark.TRAP)
        elif len(ttd.dec.bags[bag]) > k:
            sequence.append(Mark.AVOID)
        else:
            sequence.append(_profile(ttd, trio, bag, table).signature)
    return sequence


def _pairing(start: BagProfile, end: BagProfile) -> list[tuple[str, str]]:
    """Pair the variables of two bags with equal profiles, type by type."""
    pairs: list[tuple[str, str]] = []
    by_type: dict[frozenset[int], list[str]] = defaultdict(list)
    for var, t in sorted(end.types.items()):
        by_type[t].append(var)
    leftover: list[str] = []
    for var, t in sorted(start.types.items()):
        if t:
            pairs.append((var, by_type[t].pop()))
        else:
            leftover.append(var)
    empty = by_type[frozenset()]
    for var in list(leftover):
        if var in empty:
            empty.remove(var)
            leftover.remove(var)
            pairs.append((var, var))
    pairs.extend(zip(leftover, sorted(empty), strict=True))
    return pairs


def _shorten_between(
    trio: Trio, ttd: TaggedTreeDecomposition, chain: Sequence[int], i: int, i2: int, table: LeaveTable
) -> tuple[Trio, TaggedTreeDecomposition]:
    b, b2 = chain[i], chain[i2]
    interior = set(chain[i + 1 : i2])
    start, end = _profile(ttd, trio, b, table), _profile(ttd, trio, b2, table)
    pairs = _pairing(start, end)

    refinement = trio.refinement
    by_origin = {origin: ttd.tag[index] for index, origin in enumerate(refinement.origin)}
    fresh: set[tuple[int, int]] = set()
    for var, t in sorted(start.types.items()):
        for atom_index in sorted(t):
            at_start = [s.position for s in table[b][atom_index]]
            at_end = [s.position for s in table[b2][atom_index]]
            lo, hi = sorted((at_start[0], at_end[0]))
            if hi - lo < 2:
                continue
            condensed = condense(refinement, atom_index, lo, hi)
            old_tags = {index: by_origin.get(origin, -1) for index, origin in enumerate(refinement.origin)}
            by_origin = _retagged(refinement, condensed, old_tags, atom_index, lo, hi)
            fresh.add((atom_index, lo))
            refinement = condensed
    trio = _rebuilt(trio, refinement, trio.hom.mapping)

    z = ttd.dec.bags[b] & ttd.dec.bags[b2]
    aligned = [(x, y) for x, y in pairs if x not in z and y not in z]
    xs = [x for x, _ in aligned] + sorted(ttd.dec.bags[b] - z - {x for x, _ in aligned})
    ys = [y for _, y in aligned] + sorted(ttd.dec.bags[b2] - z - {y for _, y in aligned})

    dec = ttd.dec.copy()
    dec.tree.remove_nodes_from(interior)
    for bag_id in interior:
        del dec.bags[bag_id]
    if dec.root in interior:
        dec.root = b
    bridge = [b]
    current = set(dec.bags[b])
    next_id = max(ttd.dec.bags) + 1
    for x, y in zip(xs, ys, strict=True):
        for step in ("add", "remove"):
            if step == "add":
                current.add(y)
            else:
                current.discard(x)
            if frozenset(current) == dec.bags[b2]:
                break
            dec.bags[next_id] = frozenset(current)
            dec.tree.add_edge(bridge[-1], next_id)
            bridge.append(next_id)
            next_id += 1
    dec.tree.add_edge(bridge[-1], b2)
    bridge.append(b2)

    tags: dict[int, int] = {}
    for index, origin in enumerate(trio.refinement.origin):
        bag = by_origin.get(origin, -1)
        if origin in fresh or bag in interior or bag == -1:
            atom = trio.rho.atoms[index]
            ends = {trio.hom(atom.src), trio.hom(atom.dst)}
            bag = next((c for c in bridge if ends <= dec.bags[c]), -1)
            if bag == -1:
                raise RuntimeError(f"No bridge bag holds the endpoints of {atom}")
        tags[index] = bag
    logger.debug(f"Shortened the path between b{b} and b{b2}: {len(interior)} bags replaced by {len(bridge) - 2}")
    tagged = TaggedTreeDecomposition(dec, trio.rho, tags, dict(trio.hom.mapping))
    return trio, restrict_to_tags(tagged, trio.alpha)


def shorten_nonbranching(
    trio: Trio, ttd: TaggedTreeDecomposition, k: int, threshold: int | None = None
) -> tuple[Trio, TaggedTreeDecomposition]:
    """Shorten non-branching paths until none reaches ``threshold`` bags."""
    if not ttd.fine:
        raise PreconditionError("The tagged decomposition is not fine")
    if not is_locally_acyclic(ttd, trio):
        raise PreconditionError("The tagged decomposition is not locally acyclic")
    limit = threshold if threshold is not None else pigeonhole_threshold(len(trio.gamma.atoms), k)
    distance = 2 * k + 1
    while True:
        table = _leave_table(ttd, trio)
        for chain in non_branching_paths(ttd.dec):
            if len(chain) < limit:
                continue
            found = find_repeat(_classify(ttd, trio, chain, k, table), distance)
            if found is not None:
                trio, ttd = _shorten_between(trio, ttd, chain, found[0], found[1], table)
                break
        else:
            return trio, ttd
