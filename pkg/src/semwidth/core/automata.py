"""Regular languages over the two-way alphabet, kept as epsilon-free NFAs.

Every public :class:`Nfa` is epsilon-free. Regexes are compiled with a Thompson
construction whose epsilon moves are eliminated before the automaton is
trimmed and renumbered, so the initial state of a parsed NFA is always ``0``.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from functools import cache, cached_property
import hashlib
import logging
import re
from typing import TYPE_CHECKING, Any

from ..errors import RegexSyntaxError, UnknownStateError

if TYPE_CHECKING:
    from .graphdb import GraphDb

logger = logging.getLogger(__name__)

SAMPLE_LENGTH = 4
EPSILON_TOKEN = "<eps>"
EMPTY_TOKEN = "<empty>"

_LETTER_NAME = re.compile(r"[A-Za-z0-9_]+\Z")


@dataclass(frozen=True, order=True)
class Letter:
    base: str
    inverted: bool = False

    def __post_init__(self) -> None:
        if not _LETTER_NAME.match(self.base):
            raise ValueError(f"Invalid letter name: {self.base!r}")

    def inverse(self) -> Letter:
        return Letter(self.base, not self.inverted)

    @classmethod
    def parse(cls, text: str) -> Letter:
        if text.endswith("^-"):
            return cls(text[:-2], True)
        return cls(text)

    def __str__(self) -> str:
        return f"{self.base}^-" if self.inverted else self.base


Word = tuple[Letter, ...]
Transition = tuple[int, Letter, int]


def word_to_text(word: Iterable[Letter]) -> str:
    letters = [str(letter) for letter in word]
    return ".".join(letters) if letters else EPSILON_TOKEN


def invert_word(word: Word) -> Word:
    return tuple(letter.inverse() for letter in reversed(word))


@dataclass(frozen=True, eq=False)
class Nfa:
    """A nondeterministic automaton over letters and inverted letters.

    Instances compare by identity. Language comparisons go through
    :attr:`language_token`, the canonical minimal DFA of the language.
    """

    states: frozenset[int]
    alphabet: frozenset[Letter]
    transitions: frozenset[Transition]
    initial: frozenset[int]
    final: frozenset[int]
    source: str | None = field(default=None)

    def __post_init__(self) -> None:
        for p, letter, q in self.transitions:
            if p not in self.states or q not in self.states:
                raise ValueError(f"Transition {p} -{letter}-> {q} uses an undeclared state")
            if letter not in self.alphabet:
                raise ValueError(f"Transition {p} -{letter}-> {q} uses a letter outside the alphabet")
        if not self.initial <= self.states or not self.final <= self.states:
            raise ValueError("Initial and final states must be declared states")

    @classmethod
    def build(
        cls,
        transitions: Iterable[tuple[int, Letter | str, int]],
        initial: Iterable[int],
        final: Iterable[int],
        states: Iterable[int] = (),
        source: str | None = None,
    ) -> Nfa:
        """Build an NFA from loosely typed transitions, keeping the given state ids."""
        edges = frozenset((p, letter if isinstance(letter, Letter) else Letter.parse(letter), q) for p, letter, q in transitions)
        initial_set = frozenset(initial)
        final_set = frozenset(final)
        all_states = frozenset(states) | initial_set | final_set | {p for p, _, _ in edges} | {q for _, _, q in edges}
        return cls(
            states=all_states,
            alphabet=frozenset(letter for _, letter, _ in edges),
            transitions=edges,
            initial=initial_set,
            final=final_set,
            source=source,
        )

    def __repr__(self) -> str:
        label = self.source if self.source is not None else f"{len(self.states)} states"
        return f"Nfa({label!r})"

    def __getstate__(self) -> dict[str, Any]:
        # cached indexes are rebuilt lazily after unpickling
        return {name: getattr(self, name) for name in ("states", "alphabet", "transitions", "initial", "final", "source")}

    def __setstate__(self, state: dict[str, Any]) -> None:
        for name, value in state.items():
            object.__setattr__(self, name, value)

    # -- indexes -----------------------------------------------------------

    @cached_property
    def _delta(self) -> dict[int, tuple[tuple[Letter, int], ...]]:
        out: dict[int, list[tuple[Letter, int]]] = {state: [] for state in self.states}
        for p, letter, q in self.transitions:
            out[p].append((letter, q))
        return {state: tuple(sorted(moves)) for state, moves in out.items()}

    @cached_property
    def _delta_by_letter(self) -> dict[tuple[int, Letter], frozenset[int]]:
        index: dict[tuple[int, Letter], set[int]] = {}
        for p, letter, q in self.transitions:
            index.setdefault((p, letter), set()).add(q)
        return {key: frozenset(targets) for key, targets in index.items()}

    @cached_property
    def productive(self) -> frozenset[int]:
        """States from which some final state is reachable."""
        backward: dict[int, set[int]] = {state: set() for state in self.states}
        for p, _, q in self.transitions:
            backward[q].add(p)
        seen = set(self.final)
        queue = deque(self.final)
        while queue:
            state = queue.popleft()
            for previous in backward[state]:
                if previous not in seen:
                    seen.add(previous)
                    queue.append(previous)
        return frozenset(seen)

    @cached_property
    def reach_plus(self) -> dict[int, frozenset[int]]:
        """States reachable from each state by a run reading at least one letter."""
        result: dict[int, frozenset[int]] = {}
        for start in self.states:
            seen: set[int] = set()
            queue = deque(q for _, q in self._delta[start])
            while queue:
                state = queue.popleft()
                if state in seen:
                    continue
                seen.add(state)
                queue.extend(q for _, q in self._delta[state])
            result[start] = frozenset(seen)
        return result

    @cached_property
    def useful(self) -> frozenset[int]:
        reachable = set(self.initial)
        for state in self.initial:
            reachable |= self.reach_plus[state]
        return frozenset(reachable) & self.productive

    def _check_state(self, state: int) -> None:
        if state not in self.states:
            raise UnknownStateError(f"Unknown state {state} (states: {sorted(self.states)})")

    def successors(self, state: int) -> tuple[tuple[Letter, int], ...]:
        return self._delta[state]

    def step(self, current: Iterable[int], letter: Letter) -> frozenset[int]:
        targets: set[int] = set()
        for state in current:
            targets |= self._delta_by_letter.get((state, letter), frozenset())
        return frozenset(targets)

    # -- membership --------------------------------------------------------

    def accepts(self, word: Iterable[Letter]) -> bool:
        current: frozenset[int] = self.initial
        for letter in word:
            current = self.step(current, letter)
            if not current:
                return False
        return bool(current & self.final)

    def accepts_epsilon(self) -> bool:
        return bool(self.initial & self.final)

    def is_empty(self) -> bool:
        return not (self.initial & self.productive)

    def words(self, max_len: int) -> Iterator[Word]:
        """Accepted words of length at most ``max_len``, shortest first, then lexicographic."""
        letters = sorted(self.alphabet)
        level: list[tuple[Word, frozenset[int]]] = [((), self.initial & self.productive)]
        if self.accepts_epsilon():
            yield ()
        for _ in range(max_len):
            next_level: list[tuple[Word, frozenset[int]]] = []
            for word, current in level:
                for letter in letters:
                    target = self.step(current, letter) & self.productive
                    if not target:
                        continue
                    extended = (*word, letter)
                    next_level.append((extended, target))
                    if target & self.final:
                        yield extended
            if not next_level:
                return
            level = next_level

    def sample(self, max_len: int = SAMPLE_LENGTH) -> frozenset[Word]:
        return frozenset(self.words(max_len))

    @cached_property
    def language_token(self) -> str:
        """Canonical form of the minimal DFA: two automata share a token exactly when their languages are equal."""
        count, finals, edges = _minimal_dfa(self)
        if not count:
            return EMPTY_TOKEN
        moves = ";".join(f"{p} {letter} {q}" for p, letter, q in edges)
        return f"{count}|{','.join(map(str, finals))}|{moves}"

    @cached_property
    def language_digest(self) -> str:
        """Short digest of :attr:`language_token`, for labels."""
        return hashlib.blake2b(self.language_token.encode("utf-8"), digest_size=6).hexdigest()

    def includes(self, other: Nfa) -> bool:
        """Language inclusion ``L(other) ⊆ L(self)``, by searching the product with the subset automaton of ``self``."""
        start = (frozenset(other.initial & other.productive), self.initial)
        seen = {start}
        queue = deque([start])
        while queue:
            mine, theirs = queue.popleft()
            if mine & other.final and not theirs & self.final:
                return False
            for letter in sorted({letter for state in mine for letter, _ in other.successors(state)}):
                pair = (other.step(mine, letter) & other.productive, self.step(theirs, letter))
                if pair[0] and pair not in seen:
                    seen.add(pair)
                    queue.append(pair)
        return True

    def max_word_length(self) -> int | None:
        """Length of the longest accepted word, or None when the language is infinite."""
        useful = self.useful
        graph = {state: [q for _, q in self._delta[state] if q in useful] for state in useful}
        # a cycle among useful states means an infinite language
        longest: dict[int, int] = {}
        visiting: set[int] = set()

        def depth(state: int) -> int | None:
            if state in longest:
                return longest[state]
            if state in visiting:
                return None
            visiting.add(state)
            best = 0 if state in self.final else -1
            for target in graph[state]:
                below = depth(target)
                if below is None:
                    return None
                if below >= 0:
                    best = max(best, below + 1)
            visiting.discard(state)
            longest[state] = best
            return best

        result = -1
        for state in self.initial & useful:
            value = depth(state)
            if value is None:
                return None
            result = max(result, value)
        return result if result >= 0 else 0

    # -- derived languages ---------------------------------------------------

    @cached_property
    def _sublanguages(self) -> dict[tuple[int, int], Nfa]:
        return {}

    def sublanguage(self, q: int, q2: int) -> Nfa:
        """The language read from ``q`` to ``q2``; cached so repeated calls share one object."""
        self._check_state(q)
        self._check_state(q2)
        if self.initial == {q} and self.final == {q2}:
            return self
        key = (q, q2)
        cached = self._sublanguages.get(key)
        if cached is None:
            cached = _trimmed(self.transitions, q, {q2})
            self._sublanguages[key] = cached
        return cached

    def letters_between(self, q: int, q2: int) -> tuple[Letter, ...]:
        """Letters labelling a direct transition from ``q`` to ``q2``, sorted."""
        self._check_state(q)
        self._check_state(q2)
        return tuple(sorted({letter for letter, target in self._delta[q] if target == q2}))

    @cached_property
    def inverse(self) -> Nfa:
        return inverse_language(self)

    @cached_property
    def uses_inverse(self) -> bool:
        useful = self.useful
        return any(letter.inverted for p, letter, q in self.transitions if p in useful and q in useful)

    @cached_property
    def single_letter(self) -> Letter | None:
        """The letter ``a`` when the language is exactly ``{a}``."""
        sample = self.sample(2)
        if len(sample) != 1:
            return None
        (word,) = sample
        if len(word) != 1 or self.max_word_length() != 1:
            return None
        return word[0]


class _Builder:
    """Epsilon-NFA under construction."""

    def __init__(self) -> None:
        self.count = 0
        self.edges: list[tuple[int, Letter | None, int]] = []

    def state(self) -> int:
        self.count += 1
        return self.count - 1

    def edge(self, p: int, letter: Letter | None, q: int) -> None:
        self.edges.append((p, letter, q))

    def finish(self, initial: int, finals: set[int], source: str | None = None) -> Nfa:
        epsilon: dict[int, set[int]] = {state: set() for state in range(self.count)}
        letters: dict[int, set[tuple[Letter, int]]] = {state: set() for state in range(self.count)}
        for p, letter, q in self.edges:
            if letter is None:
                epsilon[p].add(q)
            else:
                letters[p].add((letter, q))

        def closure(state: int) -> set[int]:
            seen = {state}
            stack = [state]
            while stack:
                for q in epsilon[stack.pop()]:
                    if q not in seen:
                        seen.add(q)
                        stack.append(q)
            return seen

        transitions: set[Transition] = set()
        accepting: set[int] = set()
        for state in range(self.count):
            reach = closure(state)
            if reach & finals:
                accepting.add(state)
            for middle in reach:
                transitions.update((state, letter, q) for letter, q in letters[middle])
        others = accepting - {initial}
        if len(others) > 1:
            # one final state besides the initial one, so a path of one segment reads the whole language
            merged = self.state()
            transitions |= {(p, letter, merged) for p, letter, q in transitions if q in others}
            accepting = (accepting & {initial}) | {merged}
        return _trimmed(frozenset(transitions), initial, accepting, source)


def _trimmed(transitions: Iterable[Transition], initial: int, final: set[int] | frozenset[int], source: str | None = None) -> Nfa:
    """Keep the useful part of an automaton and renumber it breadth-first from ``initial``."""
    forward: dict[int, list[tuple[Letter, int]]] = {}
    backward: dict[int, set[int]] = {}
    for p, letter, q in transitions:
        forward.setdefault(p, []).append((letter, q))
        backward.setdefault(q, set()).add(p)

    productive = set(final)
    stack = list(final)
    while stack:
        for p in backward.get(stack.pop(), ()):
            if p not in productive:
                productive.add(p)
                stack.append(p)

    if initial not in productive:
        return Nfa(frozenset({0}), frozenset(), frozenset(), frozenset({0}), frozenset(), source)

    numbering = {initial: 0}
    order = deque([initial])
    kept: list[tuple[int, Letter, int]] = []
    while order:
        state = order.popleft()
        for letter, q in sorted(forward.get(state, ())):
            if q not in productive:
                continue
            if q not in numbering:
                numbering[q] = len(numbering)
                order.append(q)
            kept.append((state, letter, q))

    edges = frozenset((numbering[p], letter, numbering[q]) for p, letter, q in kept)
    return Nfa(
        states=frozenset(numbering.values()),
        alphabet=frozenset(letter for _, letter, _ in edges),
        transitions=edges,
        initial=frozenset({0}),
        final=frozenset(numbering[q] for q in final if q in numbering),
        source=source,
    )


def _minimal_dfa(nfa: Nfa) -> tuple[int, tuple[int, ...], tuple[tuple[int, str, int], ...]]:
    """The trim minimal DFA of ``nfa`` as (state count, final states, moves), numbered breadth-first in letter order."""
    productive = nfa.productive
    start = nfa.initial & productive
    if not start:
        return 0, (), ()
    letters = sorted({letter for p, letter, q in nfa.transitions if p in productive and q in productive})

    index = {start: 0}
    subsets = [start]
    moves: list[dict[Letter, int]] = []
    position = 0
    while position < len(subsets):
        row: dict[Letter, int] = {}
        for letter in letters:
            target = nfa.step(subsets[position], letter) & productive
            if not target:
                continue
            if target not in index:
                index[target] = len(subsets)
                subsets.append(target)
            row[letter] = index[target]
        moves.append(row)
        position += 1

    # Moore refinement; a missing move goes to the dead state, which is never built
    block = [1 if subset & nfa.final else 0 for subset in subsets]
    while True:
        signatures = [
            (block[s], tuple(block[moves[s][letter]] if letter in moves[s] else -1 for letter in letters))
            for s in range(len(subsets))
        ]
        numbering: dict[tuple[int, tuple[int, ...]], int] = {}
        refined = [numbering.setdefault(signature, len(numbering)) for signature in signatures]
        stable = len(numbering) == len(set(block))
        block = refined
        if stable:
            break

    representative: dict[int, int] = {}
    for state, b in enumerate(block):
        representative.setdefault(b, state)
    canonical = {block[0]: 0}
    pending = deque([block[0]])
    edges: list[tuple[int, str, int]] = []
    while pending:
        current = pending.popleft()
        row = moves[representative[current]]
        for letter in letters:
            if letter not in row:
                continue
            target = block[row[letter]]
            if target not in canonical:
                canonical[target] = len(canonical)
                pending.append(target)
            edges.append((canonical[current], str(letter), canonical[target]))
    finals = tuple(sorted(canonical[b] for b in canonical if subsets[representative[b]] & nfa.final))
    return len(canonical), finals, tuple(edges)


# -- regex surface ----------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<eps><eps>)|(?P<name>[A-Za-z0-9_]+)|(?P<inv>\^-)|(?P<op>[*+|.()]))"
)

Ast = tuple[Any, ...]


class _RegexParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        position = 0
        while position < len(text):
            if text[position].isspace():
                position += 1
                continue
            match = _TOKEN.match(text, position)
            if match is None or match.end() == position:
                raise RegexSyntaxError(f"unknown operator {text[position]!r}", position)
            kind = match.lastgroup or ""
            start = match.start(kind)
            self.tokens.append((kind, match.group(kind), start))
            position = match.end()
        self.index = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def advance(self) -> tuple[str, str, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def error(self, message: str) -> RegexSyntaxError:
        token = self.peek()
        return RegexSyntaxError(message, token[2] if token else len(self.text))

    def parse(self) -> Ast:
        if not self.tokens:
            raise RegexSyntaxError("empty regular expression", 0)
        node = self.alternation()
        if self.peek() is not None:
            raise self.error(f"unexpected {self.peek()[1]!r}")  # type: ignore[index]
        return node

    def alternation(self) -> Ast:
        node = self.concatenation()
        while (token := self.peek()) is not None and token[1] == "|":
            self.advance()
            node = ("alt", node, self.concatenation())
        return node

    def concatenation(self) -> Ast:
        node = self.postfix()
        while (token := self.peek()) is not None:
            if token[1] == ".":
                self.advance()
                node = ("cat", node, self.postfix())
            elif token[0] in ("name", "eps") or token[1] == "(":
                node = ("cat", node, self.postfix())
            else:
                break
        return node

    def postfix(self) -> Ast:
        node = self.atom()
        while (token := self.peek()) is not None:
            if token[0] == "inv":
                node = ("inv", node)
            elif token[1] == "*":
                node = ("star", node)
            elif token[1] == "+":
                node = ("plus", node)
            else:
                break
            self.advance()
        return node

    def atom(self) -> Ast:
        token = self.peek()
        if token is None:
            raise self.error("expected a letter, <eps> or '('")
        kind, value, _ = token
        if kind == "name":
            self.advance()
            return ("sym", Letter(value))
        if kind == "eps":
            self.advance()
            return ("eps",)
        if value == "(":
            self.advance()
            node = self.alternation()
            closing = self.peek()
            if closing is None or closing[1] != ")":
                raise self.error("expected ')'")
            self.advance()
            return node
        raise self.error(f"expected a letter, <eps> or '(' but found {value!r}")


def _invert(node: Ast) -> Ast:
    kind = node[0]
    if kind == "sym":
        return ("sym", node[1].inverse())
    if kind == "eps":
        return node
    if kind == "cat":
        return ("cat", _invert(node[2]), _invert(node[1]))
    if kind == "alt":
        return ("alt", _invert(node[1]), _invert(node[2]))
    if kind in ("star", "plus"):
        return (kind, _invert(node[1]))
    # inverse of an inverse
    return node[1]


def _emit(node: Ast, builder: _Builder, start: int, end: int) -> None:
    kind = node[0]
    if kind == "sym":
        builder.edge(start, node[1], end)
    elif kind == "eps":
        builder.edge(start, None, end)
    elif kind == "cat":
        middle = builder.state()
        _emit(node[1], builder, start, middle)
        _emit(node[2], builder, middle, end)
    elif kind == "alt":
        _emit(node[1], builder, start, end)
        _emit(node[2], builder, start, end)
    elif kind in ("star", "plus"):
        door_in, door_out = builder.state(), builder.state()
        builder.edge(start, None, door_in)
        _emit(node[1], builder, door_in, door_out)
        builder.edge(door_out, None, door_in)
        builder.edge(door_out, None, end)
        if kind == "star":
            builder.edge(start, None, end)
    elif kind == "inv":
        _emit(_invert(node[1]), builder, start, end)
    else:  # pragma: no cover
        raise ValueError(f"Unknown regex node {kind}")


def parse_regex(text: str) -> Nfa:
    """Compile a regex into an epsilon-free NFA with the single initial state 0 and at most one other final state.

    Letters are maximal identifiers, so ``ab`` is one letter; write ``a.b`` or
    ``a b`` for a concatenation.
    """
    tree = _RegexParser(text).parse()
    builder = _Builder()
    start, end = builder.state(), builder.state()
    _emit(tree, builder, start, end)
    nfa = builder.finish(start, {end}, source=text.strip())
    logger.debug(f"Parsed regex {text!r} into {len(nfa.states)} states")
    return nfa


@cache
def single_letter_nfa(letter: Letter) -> Nfa:
    """The canonical two-state automaton for ``{letter}``."""
    return Nfa(
        states=frozenset({0, 1}),
        alphabet=frozenset({letter}),
        transitions=frozenset({(0, letter, 1)}),
        initial=frozenset({0}),
        final=frozenset({1}),
        source=str(letter),
    )


@cache
def epsilon_nfa() -> Nfa:
    return Nfa(frozenset({0}), frozenset(), frozenset(), frozenset({0}), frozenset({0}), EPSILON_TOKEN)


def inverse_language(nfa: Nfa) -> Nfa:
    """Reverse every transition, swap initial and final states and invert every letter."""
    source = None if nfa.source is None else f"({nfa.source})^-"
    return Nfa(
        states=nfa.states,
        alphabet=frozenset(letter.inverse() for letter in nfa.alphabet),
        transitions=frozenset((q, letter.inverse(), p) for p, letter, q in nfa.transitions),
        initial=nfa.final,
        final=nfa.initial,
        source=source,
    )


def concatenate(*nfas: Nfa) -> Nfa:
    """The concatenation of the given languages, as one trimmed automaton."""
    builder = _Builder()
    start = builder.state()
    current = start
    for nfa in nfas:
        offset = builder.count
        builder.count += len(nfa.states)
        renumber = {state: offset + i for i, state in enumerate(sorted(nfa.states))}
        for p, letter, q in nfa.transitions:
            builder.edge(renumber[p], letter, renumber[q])
        for state in nfa.initial:
            builder.edge(current, None, renumber[state])
        after = builder.state()
        for state in nfa.final:
            builder.edge(renumber[state], None, after)
        current = after
    sources = [nfa.source for nfa in nfas]
    source = ".".join(f"({s})" for s in sources) if all(s is not None for s in sources) else None
    return builder.finish(start, {current}, source)


# -- regex emission ----------------------------------------------------------


def _alt(left: Ast | None, right: Ast | None) -> Ast | None:
    if left is None:
        return right
    if right is None or left == right:
        return left
    return ("alt", left, right)


def _cat(left: Ast | None, right: Ast | None) -> Ast | None:
    if left is None or right is None:
        return None
    if left == ("eps",):
        return right
    if right == ("eps",):
        return left
    return ("cat", left, right)


def _star(node: Ast | None) -> Ast:
    if node is None or node == ("eps",):
        return ("eps",)
    if node[0] == "star":
        return node
    return ("star", node)


def _render(node: Ast, precedence: int = 0) -> str:
    kind = node[0]
    if kind == "sym":
        return str(node[1])
    if kind == "eps":
        return EPSILON_TOKEN
    if kind == "alt":
        text = f"{_render(node[1], 0)}|{_render(node[2], 0)}"
        return f"({text})" if precedence > 0 else text
    if kind == "cat":
        text = f"{_render(node[1], 1)}.{_render(node[2], 1)}"
        return f"({text})" if precedence > 1 else text
    return f"{_render(node[1], 2)}*"


def to_regex(nfa: Nfa) -> str:
    """A regex for the language of ``nfa``; the stored source when there is one."""
    if nfa.source is not None:
        return nfa.source
    if nfa.is_empty():
        raise ValueError("The empty language has no regex in this grammar")
    start, end = "start", "end"
    edges: dict[tuple[Any, Any], Ast | None] = {}
    for p, letter, q in nfa.transitions:
        edges[(p, q)] = _alt(edges.get((p, q)), ("sym", letter))
    for state in nfa.initial:
        edges[(start, state)] = _alt(edges.get((start, state)), ("eps",))
    for state in nfa.final:
        edges[(state, end)] = _alt(edges.get((state, end)), ("eps",))

    for state in sorted(nfa.states):
        loop = edges.pop((state, state), None)
        incoming = [(p, node) for (p, q), node in edges.items() if q == state]
        outgoing = [(q, node) for (p, q), node in edges.items() if p == state]
        for p, _ in incoming:
            del edges[(p, state)]
        for q, _ in outgoing:
            del edges[(state, q)]
        middle = _star(loop) if loop is not None else ("eps",)
        for p, into in incoming:
            for q, out in outgoing:
                edges[(p, q)] = _alt(edges.get((p, q)), _cat(_cat(into, middle), out))

    result = edges.get((start, end))
    if result is None:  # pragma: no cover
        raise ValueError("The empty language has no regex in this grammar")
    return _render(result)


# -- structural tests ------------------------------------------------------------


def is_simple_language(nfa: Nfa) -> bool:
    """True when the language is ``a*`` or ``a1|...|am`` over positive letters."""
    if nfa.is_empty() or nfa.uses_inverse:
        return False
    useful = nfa.useful
    moves = [(p, letter, q) for p, letter, q in nfa.transitions if p in useful and q in useful]
    letters = {letter for _, letter, _ in moves}

    if not nfa.accepts_epsilon():
        # a finite union of letters: every useful move leaves an initial state into a dead-end final state
        return bool(moves) and all(
            p in nfa.initial and q in nfa.final and q not in nfa.initial and not any(r == q for r, _, _ in moves)
            for p, _, q in moves
        )

    if len(letters) != 1:
        return False
    (letter,) = letters
    current = nfa.initial & useful
    seen: set[frozenset[int]] = set()
    while current not in seen:
        if not current & nfa.final:
            return False
        seen.add(current)
        current = nfa.step(current, letter) & useful
        if not current:
            return False
    return True


# -- product reachability ----------------------------------------------------


def regular_path_pairs(nfa: Nfa, db: GraphDb) -> set[tuple[str, str]]:
    """Pairs of nodes joined by a walk whose label is accepted by ``nfa``."""
    pairs: set[tuple[str, str]] = set()
    useful = nfa.useful
    starts = [state for state in nfa.initial if state in useful]
    if not starts:
        return pairs
    for node in sorted(db.nodes):
        seen = {(state, node) for state in starts}
        queue = deque(seen)
        while queue:
            state, current = queue.popleft()
            if state in nfa.final:
                pairs.add((node, current))
            for letter, target in nfa.successors(state):
                if target not in useful:
                    continue
                for neighbour in db.successors(current, letter):
                    pair = (target, neighbour)
                    if pair not in seen:
                        seen.add(pair)
                        queue.append(pair)
    return pairs
