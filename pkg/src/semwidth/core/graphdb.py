"""Edge-labelled graph databases and the canonical databases of CQs."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from functools import cached_property
import logging
import random
import re
from typing import TYPE_CHECKING

from ..errors import DatabaseFormatError, NotACQError
from .automata import Letter

if TYPE_CHECKING:
    from .query_model import C2rpq

logger = logging.getLogger(__name__)

Edge = tuple[str, Letter, str]

_NODE_ID = re.compile(r"\S+\Z")


@dataclass(frozen=True)
class GraphDb:
    nodes: frozenset[str]
    edges: tuple[Edge, ...]
    expanded: bool = False

    def __post_init__(self) -> None:
        for src, letter, dst in self.edges:
            if src not in self.nodes or dst not in self.nodes:
                raise ValueError(f"Edge {src} -{letter}-> {dst} uses an undeclared node")
            if letter.inverted and not self.expanded:
                raise ValueError(f"Inverted letter {letter} in a database that is not inverse-expanded")

    @classmethod
    def of(cls, edges: Iterable[tuple[str, Letter | str, str]], nodes: Iterable[str] = (), expanded: bool = False) -> GraphDb:
        typed = tuple((src, letter if isinstance(letter, Letter) else Letter.parse(letter), dst) for src, letter, dst in edges)
        all_nodes = frozenset(nodes) | {src for src, _, _ in typed} | {dst for _, _, dst in typed}
        return cls(all_nodes, typed, expanded)

    @cached_property
    def _adjacency(self) -> dict[tuple[str, Letter], tuple[str, ...]]:
        index: dict[tuple[str, Letter], set[str]] = {}
        for src, letter, dst in self.edges:
            index.setdefault((src, letter), set()).add(dst)
        return {key: tuple(sorted(targets)) for key, targets in index.items()}

    def successors(self, node: str, letter: Letter) -> tuple[str, ...]:
        return self._adjacency.get((node, letter), ())

    @property
    def letters(self) -> frozenset[Letter]:
        return frozenset(letter for _, letter, _ in self.edges)


def load_db(text: str, expanded: bool = False) -> GraphDb:
    """Parse an edge list: ``src label dst`` per line, ``node id`` for isolated nodes, ``#`` comments.

    ``label^-`` is accepted only when ``expanded`` is set, i.e. for dumps of an
    inverse-expanded database.
    """
    nodes: set[str] = set()
    edges: list[Edge] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 2 and parts[0] == "node":
            nodes.add(parts[1])
            continue
        if len(parts) != 3:
            raise DatabaseFormatError(f"expected 'src label dst' or 'node id', got {raw.strip()!r}", number)
        src, label, dst = parts
        try:
            letter = Letter.parse(label)
        except ValueError as e:
            raise DatabaseFormatError(str(e), number) from e
        if letter.inverted and not expanded:
            raise DatabaseFormatError(f"inverse label {label!r} is only allowed in expanded dumps", number)
        nodes.update((src, dst))
        edges.append((src, letter, dst))
    db = GraphDb(frozenset(nodes), tuple(edges), expanded)
    logger.debug(f"Loaded database with {len(db.nodes)} nodes and {len(db.edges)} edges")
    return db


def serialize_db(db: GraphDb) -> str:
    lines = [f"{src} {letter} {dst}" for src, letter, dst in db.edges]
    touched = {src for src, _, _ in db.edges} | {dst for _, _, dst in db.edges}
    lines.extend(f"node {node}" for node in sorted(db.nodes - touched))
    return "\n".join(lines) + ("\n" if lines else "")


def expand_inverses(db: GraphDb) -> GraphDb:
    """Add ``y -a^-> x`` for every edge ``x -a-> y``."""
    if db.expanded:
        raise ValueError("Database is already inverse-expanded")
    reverse = tuple((dst, letter.inverse(), src) for src, letter, dst in db.edges)
    return GraphDb(db.nodes, db.edges + reverse, expanded=True)


def canonical_db(cq: C2rpq) -> tuple[GraphDb, dict[str, str]]:
    """One node per variable and one positive edge per atom; returns the naming too."""
    if cq.equalities:
        raise ValueError("Collapse equalities before building a canonical database")
    edges: list[Edge] = []
    for atom in cq.atoms:
        letter = atom.lang.single_letter
        if letter is None:
            raise NotACQError(f"Atom {atom} is not labelled by a single letter")
        if letter.inverted:
            edges.append((atom.dst, letter.inverse(), atom.src))
        else:
            edges.append((atom.src, letter, atom.dst))
    naming = {var: var for var in sorted(cq.vars)}
    return GraphDb(frozenset(cq.vars), tuple(edges)), naming


def random_db(rng: random.Random, labels: Iterable[str], max_nodes: int = 6, max_edges: int = 12) -> GraphDb:
    """A random database over ``labels``; used for spot checks and property tests."""
    alphabet = sorted(set(labels))
    count = rng.randint(1, max_nodes)
    nodes = [f"n{i}" for i in range(count)]
    edges: list[Edge] = []
    if alphabet:
        for _ in range(rng.randint(0, max_edges)):
            edges.append((rng.choice(nodes), Letter(rng.choice(alphabet)), rng.choice(nodes)))
    return GraphDb(frozenset(nodes), tuple(edges))
