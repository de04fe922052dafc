"""C2RPQs, unions of them, and their syntactic calculus.

Refinements keep the NFA state trace that witnesses every segment, which is
what makes condensation possible later on.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum
import itertools
import logging

import networkx as nx

from ..errors import ArityMismatchError, RefinementError
from .automata import Letter, Nfa, Word, concatenate, epsilon_nfa, is_simple_language, single_letter_nfa

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Atom:
    src: str
    lang: Nfa
    dst: str

    @property
    def is_loop(self) -> bool:
        return self.src == self.dst

    def __str__(self) -> str:
        label = self.lang.source if self.lang.source is not None else f"<{self.lang.language_digest}>"
        return f"{self.src} -[{label}]-> {self.dst}"


@dataclass(frozen=True)
class C2rpq:
    vars: frozenset[str]
    output: tuple[str, ...]
    atoms: tuple[Atom, ...]
    equalities: frozenset[frozenset[str]] = frozenset()
    name: str = field(default="q", compare=False)

    def __post_init__(self) -> None:
        for var in self.output:
            if var not in self.vars:
                raise ValueError(f"Output variable {var!r} is not a variable of {self.name}")
        for atom in self.atoms:
            if atom.src not in self.vars or atom.dst not in self.vars:
                raise ValueError(f"Atom {atom} uses a variable not declared in {self.name}")
        for pair in self.equalities:
            if not pair <= self.vars:
                raise ValueError(f"Equality {sorted(pair)} uses a variable not declared in {self.name}")

    @classmethod
    def of(
        cls,
        atoms: Iterable[Atom],
        output: Sequence[str] = (),
        equalities: Iterable[tuple[str, str]] = (),
        name: str = "q",
        extra_vars: Iterable[str] = (),
    ) -> C2rpq:
        atom_tuple = tuple(atoms)
        pairs = frozenset(frozenset(pair) for pair in equalities)
        variables = set(output) | set(extra_vars)
        for atom in atom_tuple:
            variables.update((atom.src, atom.dst))
        for pair in pairs:
            variables.update(pair)
        return cls(frozenset(variables), tuple(output), atom_tuple, pairs, name)

    @property
    def arity(self) -> int:
        return len(self.output)

    @property
    def size(self) -> int:
        """Number of atoms."""
        return len(self.atoms)

    @property
    def existential(self) -> frozenset[str]:
        return self.vars - set(self.output)

    @property
    def is_cq(self) -> bool:
        return all(atom.lang.single_letter is not None for atom in self.atoms)

    @property
    def uses_inverse(self) -> bool:
        return any(atom.lang.uses_inverse for atom in self.atoms)

    def renamed(self, name: str) -> C2rpq:
        return replace(self, name=name)

    def __str__(self) -> str:
        body = ", ".join([str(atom) for atom in self.atoms] + [" = ".join(sorted(pair)) for pair in self.equalities])
        return f"{self.name}({', '.join(self.output)}) := {body}"


@dataclass(frozen=True)
class Uc2rpq:
    disjuncts: tuple[C2rpq, ...]
    name: str = field(default="q", compare=False)

    def __post_init__(self) -> None:
        if not self.disjuncts:
            raise ValueError("A union needs at least one disjunct")
        arities = {q.arity for q in self.disjuncts}
        if len(arities) > 1:
            raise ArityMismatchError(f"Disjuncts of {self.name} have different arities: {sorted(arities)}")

    @classmethod
    def of(cls, *queries: C2rpq, name: str | None = None) -> Uc2rpq:
        return cls(tuple(queries), name or queries[0].name)

    @property
    def arity(self) -> int:
        return self.disjuncts[0].arity

    @property
    def size(self) -> int:
        return max(q.size for q in self.disjuncts)

    def __iter__(self) -> Iterator[C2rpq]:
        return iter(self.disjuncts)

    def __len__(self) -> int:
        return len(self.disjuncts)


def as_union(query: C2rpq | Uc2rpq) -> Uc2rpq:
    return query if isinstance(query, Uc2rpq) else Uc2rpq((query,), query.name)


def rename_query(q: C2rpq, renaming: dict[str, str], name: str | None = None) -> C2rpq:
    """Apply a variable renaming; variables missing from ``renaming`` are kept."""

    def image(var: str) -> str:
        return renaming.get(var, var)

    return C2rpq(
        vars=frozenset(image(v) for v in q.vars),
        output=tuple(image(v) for v in q.output),
        atoms=tuple(Atom(image(a.src), a.lang, image(a.dst)) for a in q.atoms),
        equalities=frozenset(frozenset(image(v) for v in pair) for pair in q.equalities if len({image(v) for v in pair}) > 1),
        name=name or q.name,
    )


def collapse_equalities(q: C2rpq) -> tuple[C2rpq, dict[str, str]]:
    """Merge every class of the equality relation into its least variable name."""
    graph = nx.Graph()
    graph.add_nodes_from(q.vars)
    for pair in q.equalities:
        members = sorted(pair)
        graph.add_edge(members[0], members[-1])
    renaming: dict[str, str] = {}
    for component in nx.connected_components(graph):
        representative = min(component)
        for var in component:
            renaming[var] = representative
    collapsed = rename_query(q, renaming)
    return replace(collapsed, equalities=frozenset()), renaming


# -- refinements ------------------------------------------------------------------


class SegmentKind(StrEnum):
    SUBLANGUAGE = "sublanguage"
    SINGLE_LETTER = "single-letter"


@dataclass(frozen=True)
class Segment:
    lang: Nfa
    letter: Letter | None = None

    @property
    def kind(self) -> SegmentKind:
        return SegmentKind.SUBLANGUAGE if self.letter is None else SegmentKind.SINGLE_LETTER


@dataclass(frozen=True)
class AtomRefinementTrace:
    """How one atom is refined: segments plus the state trace, or an equality collapse."""

    original: Atom
    segments: tuple[Segment, ...] = ()
    trace: tuple[int, ...] = ()
    equality_collapse: bool = False

    def __post_init__(self) -> None:
        if self.equality_collapse:
            if self.segments or self.trace:
                raise RefinementError("An equality collapse carries no segments")
            if not self.original.lang.accepts_epsilon():
                raise RefinementError(f"Atom {self.original} cannot collapse: epsilon is not in its language")
            return
        if len(self.segments) != len(self.trace) - 1 or not self.segments:
            raise RefinementError("A trace needs one more state than it has segments")
        nfa = self.original.lang
        if self.trace[0] not in nfa.initial or self.trace[-1] not in nfa.final:
            raise RefinementError("A trace must run from an initial to a final state")

    @property
    def length(self) -> int:
        return len(self.segments)

    def key(self) -> tuple[object, ...]:
        """Languages of the segments; two traces with equal keys refine an atom identically."""
        if self.equality_collapse:
            return ("=",)
        return tuple(segment.lang.language_token for segment in self.segments)


def _state_walks(nfa: Nfa, n: int) -> Iterator[tuple[int, ...]]:
    """State sequences of length ``n + 1`` from an initial to a final state, each step reading a letter."""

    def extend(prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if len(prefix) == n + 1:
            if prefix[-1] in nfa.final:
                yield prefix
            return
        for state in sorted(nfa.reach_plus[prefix[-1]]):
            yield from extend((*prefix, state))

    for start in sorted(nfa.initial):
        yield from extend((start,))


def enumerate_atom_refinements(atom: Atom, m: int) -> Iterator[AtomRefinementTrace]:
    """Every atom refinement of length at most ``m``, in a deterministic order.

    The equality collapse comes first when the language holds epsilon; traces
    follow ordered by length, state sequence and segment kinds (sublanguage
    before single letters, letters sorted).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    nfa = atom.lang
    if nfa.accepts_epsilon():
        yield AtomRefinementTrace(atom, equality_collapse=True)
    for n in range(1, m + 1):
        for trace in _state_walks(nfa, n):
            choices = []
            for p, q in itertools.pairwise(trace):
                options = [Segment(nfa.sublanguage(p, q))]
                options.extend(Segment(single_letter_nfa(letter), letter) for letter in nfa.letters_between(p, q))
                choices.append(options)
            for segments in itertools.product(*choices):
                yield AtomRefinementTrace(atom, tuple(segments), trace)


@dataclass(frozen=True)
class Refinement:
    base: C2rpq
    per_atom: tuple[AtomRefinementTrace, ...]
    result: C2rpq
    paths: tuple[tuple[str, ...], ...]
    origin: tuple[tuple[int, int], ...]

    @property
    def length(self) -> int:
        return max((trace.length for trace in self.per_atom), default=0)

    def result_atoms_of(self, atom_index: int) -> list[int]:
        """Indices of the result atoms refining base atom ``atom_index``, in path order."""
        return [i for i, (original, _) in enumerate(self.origin) if original == atom_index]


def middle_name(atom_index: int, position: int) -> str:
    return f"{atom_index}#{position}"


def assemble_refinement(
    base: C2rpq,
    traces: Sequence[AtomRefinementTrace],
    middles: Sequence[Sequence[str] | None] | None = None,
) -> Refinement:
    """Substitute every atom by its trace's path and collapse the resulting equalities."""
    if base.equalities:
        raise RefinementError("Refinements are defined on equality-free queries")
    if len(traces) != len(base.atoms):
        raise RefinementError("One trace per atom is required")
    atoms: list[Atom] = []
    origin: list[tuple[int, int]] = []
    equalities: list[tuple[str, str]] = []
    raw_paths: list[tuple[str, ...]] = []
    extra: list[str] = []
    for index, (atom, trace) in enumerate(zip(base.atoms, traces, strict=True)):
        if trace.equality_collapse:
            equalities.append((atom.src, atom.dst))
            raw_paths.append((atom.src,))
            continue
        given = middles[index] if middles is not None else None
        names = tuple(given) if given is not None else tuple(middle_name(index, i) for i in range(1, trace.length))
        path = (atom.src, *names, atom.dst)
        extra.extend(names)
        for position, segment in enumerate(trace.segments):
            atoms.append(Atom(path[position], segment.lang, path[position + 1]))
            origin.append((index, position))
        raw_paths.append(path)
    assembled = C2rpq.of(atoms, base.output, equalities, base.name, extra_vars=[*base.vars, *extra])
    result, renaming = collapse_equalities(assembled)
    paths = []
    for index, path in enumerate(raw_paths):
        if traces[index].equality_collapse:
            paths.append((renaming[path[0]],))
        else:
            paths.append(tuple(renaming[var] for var in path))
    return Refinement(base, tuple(traces), result, tuple(paths), tuple(origin))


def enumerate_refinements(q: C2rpq, m: int) -> Iterator[Refinement]:
    """All refinements of length at most ``m``: the product of the per-atom traces."""
    if q.equalities:
        raise RefinementError("Collapse equalities before refining")
    per_atom = [list(enumerate_atom_refinements(atom, m)) for atom in q.atoms]
    for traces in itertools.product(*per_atom):
        yield assemble_refinement(q, traces)


def condense(ref: Refinement, atom_index: int, i: int, j: int) -> Refinement:
    """Replace segments ``i+1 .. j`` of one atom's refinement by the sublanguage between their end states."""
    if not 0 <= atom_index < len(ref.per_atom):
        raise RefinementError(f"Atom index {atom_index} out of range")
    trace = ref.per_atom[atom_index]
    if trace.equality_collapse:
        raise RefinementError("An equality collapse has no segments to condense")
    n = trace.length
    if not (0 <= i <= n and 0 <= j <= n):
        raise RefinementError(f"Indices {i}, {j} out of range for a refinement of length {n}")
    if j <= i + 1:
        raise RefinementError(f"Condensing needs j > i + 1, got i={i}, j={j}")
    nfa = trace.original.lang
    merged = Segment(nfa.sublanguage(trace.trace[i], trace.trace[j]))
    condensed = AtomRefinementTrace(
        trace.original,
        trace.segments[:i] + (merged,) + trace.segments[j:],
        trace.trace[: i + 1] + trace.trace[j:],
    )
    path = ref.paths[atom_index]
    kept = path[: i + 1] + path[j:]
    middles: list[Sequence[str] | None] = [p[1:-1] if len(p) > 1 else None for p in ref.paths]
    middles[atom_index] = kept[1:-1]
    traces = list(ref.per_atom)
    traces[atom_index] = condensed
    return assemble_refinement(ref.base, traces, middles)


# -- expansions ----------------------------------------------------------------


@dataclass(frozen=True)
class Expansion:
    query: C2rpq
    words: tuple[Word | None, ...]


def _word_choices(word_lists: list[list[Word]], total: int) -> Iterator[tuple[int, ...]]:
    lengths = [[len(word) for word in words] for words in word_lists]
    floor = [min(ls) for ls in lengths]
    ceiling = [max(ls) for ls in lengths]

    def pick(index: int, budget: int) -> Iterator[tuple[int, ...]]:
        if index == len(word_lists):
            if budget == 0:
                yield ()
            return
        rest_min = sum(floor[index + 1 :])
        rest_max = sum(ceiling[index + 1 :])
        for choice, length in enumerate(lengths[index]):
            remaining = budget - length
            if rest_min <= remaining <= rest_max:
                for tail in pick(index + 1, remaining):
                    yield (choice, *tail)

    yield from pick(0, total)


def expansion_of(q: C2rpq, words: Sequence[Word]) -> C2rpq:
    atoms: list[Atom] = []
    equalities: list[tuple[str, str]] = []
    extra: list[str] = []
    for index, (atom, word) in enumerate(zip(q.atoms, words, strict=True)):
        if not word:
            equalities.append((atom.src, atom.dst))
            continue
        names = [middle_name(index, i) for i in range(1, len(word))]
        extra.extend(names)
        path = [atom.src, *names, atom.dst]
        for position, letter in enumerate(word):
            atoms.append(Atom(path[position], single_letter_nfa(letter), path[position + 1]))
    assembled = C2rpq.of(atoms, q.output, equalities, q.name, extra_vars=[*q.vars, *extra])
    return collapse_equalities(assembled)[0]


def enumerate_expansion_words(q: C2rpq, max_len: int) -> Iterator[tuple[Word, ...]]:
    """Word choices per atom, shortest total length first."""
    if q.equalities:
        raise RefinementError("Collapse equalities before expanding")
    word_lists = [list(atom.lang.words(max_len)) for atom in q.atoms]
    if any(not words for words in word_lists):
        return
    low = sum(min(len(w) for w in words) for words in word_lists)
    high = sum(max(len(w) for w in words) for words in word_lists)
    for total in range(low, high + 1):
        for choice in _word_choices(word_lists, total):
            yield tuple(word_lists[i][c] for i, c in enumerate(choice))


def enumerate_expansions(q: C2rpq, max_len: int) -> Iterator[C2rpq]:
    """Every expansion with words of length at most ``max_len``, shortest total size first."""
    for words in enumerate_expansion_words(q, max_len):
        yield expansion_of(q, words)


# -- contraction ----------------------------------------------------------------


class ContractionMode(StrEnum):
    TWO_WAY = "two-way"
    ONE_WAY = "one-way"


def _contractible(atoms: list[Atom], var: str, mode: ContractionMode) -> tuple[int, int] | None:
    incident = [i for i, atom in enumerate(atoms) if var in (atom.src, atom.dst)]
    if len(incident) != 2 or any(atoms[i].is_loop for i in incident):
        return None
    if mode is ContractionMode.ONE_WAY:
        incoming = [i for i in incident if atoms[i].dst == var]
        outgoing = [i for i in incident if atoms[i].src == var]
        if len(incoming) != 1 or len(outgoing) != 1:
            return None
        return incoming[0], outgoing[0]
    return incident[0], incident[1]


def contract(q: C2rpq, mode: ContractionMode = ContractionMode.TWO_WAY) -> C2rpq:
    """Suppress existential variables of degree two until none is left.

    Two-way contraction reads a wrongly oriented atom through its inverse
    language; one-way contraction only joins an incoming and an outgoing atom.
    """
    if q.equalities:
        raise RefinementError("Collapse equalities before contracting")
    atoms = list(q.atoms)
    variables = set(q.vars)
    outputs = set(q.output)
    while True:
        for var in sorted(variables - outputs):
            pair = _contractible(atoms, var, mode)
            if pair is not None:
                break
        else:
            break
        first, second = sorted(pair)
        left, right = atoms[first], atoms[second]
        if mode is ContractionMode.ONE_WAY:
            into, out = (left, right) if left.dst == var else (right, left)
            merged = Atom(into.src, concatenate(into.lang, out.lang), out.dst)
        else:
            start = left.src if left.dst == var else left.dst
            head = left.lang if left.dst == var else left.lang.inverse
            end = right.dst if right.src == var else right.src
            tail = right.lang if right.src == var else right.lang.inverse
            merged = Atom(start, concatenate(head, tail), end)
        atoms[first] = merged
        del atoms[second]
        variables.discard(var)
        logger.debug(f"Contracted {var} into {merged}")
    return C2rpq(frozenset(variables), q.output, tuple(atoms), frozenset(), q.name)


# -- structure -------------------------------------------------------------------


def is_sre(query: C2rpq | Uc2rpq) -> bool:
    """True when every atom language is ``a*`` or a union of positive letters."""
    return all(is_simple_language(atom.lang) for q in as_union(query) for atom in q.atoms)


def underlying_multigraph(q: C2rpq) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(sorted(q.vars))
    for index, atom in enumerate(q.atoms):
        graph.add_edge(atom.src, atom.dst, key=index)
    return graph


def split_final_states(q: C2rpq) -> list[C2rpq]:
    """One query per choice of (initial, final) pair on every atom.

    An atom whose automaton has a single initial and a single final state is
    kept as it is, so a query without such atoms is returned unchanged.
    """
    options: list[list[Nfa]] = []
    for atom in q.atoms:
        nfa = atom.lang
        if len(nfa.initial) * len(nfa.final) <= 1:
            options.append([nfa])
            continue
        parts = []
        if nfa.accepts_epsilon():
            parts.append(epsilon_nfa())
        for start in sorted(nfa.initial):
            for end in sorted(nfa.final):
                part = nfa.sublanguage(start, end)
                if not part.is_empty() and part.max_word_length() != 0:
                    parts.append(part)
        options.append(parts)
    queries = []
    for index, choice in enumerate(itertools.product(*options)):
        atoms = tuple(Atom(atom.src, lang, atom.dst) for atom, lang in zip(q.atoms, choice, strict=True))
        name = q.name if index == 0 else f"{q.name}_{index}"
        queries.append(C2rpq(q.vars, q.output, atoms, q.equalities, name))
    return queries
