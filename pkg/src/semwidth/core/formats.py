"""Query files.

    query Name(x, y) := x -[a.b*]-> z, y <-[c]- z, x = w ;
    union Name(x) {
        disjunct { x -[a]-> x }
        disjunct { x -[b]-> y }
    }

``#`` starts a comment. Equalities are collapsed on load.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
import logging
import re

from ..errors import QueryFormatError, RegexSyntaxError
from .automata import parse_regex, to_regex
from .query_model import Atom, C2rpq, Uc2rpq, as_union, collapse_equalities

logger = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"(?P<forward>-\[(?P<fre>[^\]]*)\]->)"
    r"|(?P<backward><-\[(?P<bre>[^\]]*)\]-)"
    r"|(?P<define>:=)"
    r"|(?P<name>[A-Za-z0-9_]+)"
    r"|(?P<punct>[(){},;=])"
)
_NAME = re.compile(r"[A-Za-z0-9_]+\Z")

Token = tuple[str, str, int]


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        position = 0
        while position < len(line):
            if line[position].isspace():
                position += 1
                continue
            match = _TOKEN.match(line, position)
            if match is None:
                raise QueryFormatError(f"unexpected {line[position:position + 10]!r}", number)
            kind = match.lastgroup or ""
            if kind == "forward":
                tokens.append(("forward", match.group("fre"), number))
            elif kind == "backward":
                tokens.append(("backward", match.group("bre"), number))
            else:
                tokens.append((kind, match.group(kind), number))
            position = match.end()
    return tokens


class _QueryParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> Token | None:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def line(self) -> int:
        token = self.peek()
        if token is not None:
            return token[2]
        return self.tokens[-1][2] if self.tokens else 1

    def expect(self, kind: str, value: str | None = None) -> Token:
        token = self.peek()
        if token is None or token[0] != kind or (value is not None and token[1] != value):
            wanted = value or kind
            found = "end of file" if token is None else repr(token[1])
            raise QueryFormatError(f"expected {wanted!r}, found {found}", self.line())
        self.index += 1
        return token

    def accept(self, value: str) -> bool:
        token = self.peek()
        if token is not None and token[1] == value and token[0] in ("punct", "name"):
            self.index += 1
            return True
        return False

    def parse(self) -> dict[str, Uc2rpq]:
        queries: dict[str, Uc2rpq] = {}
        while self.peek() is not None:
            line = self.line()
            keyword = self.expect("name")[1]
            if keyword == "query":
                union = self.query()
            elif keyword == "union":
                union = self.union()
            else:
                raise QueryFormatError(f"expected 'query' or 'union', found {keyword!r}", line)
            if union.name in queries:
                raise QueryFormatError(f"query {union.name!r} is defined twice", line)
            queries[union.name] = union
        return queries

    def header(self) -> tuple[str, list[str]]:
        name = self.expect("name")[1]
        self.expect("punct", "(")
        output: list[str] = []
        if not self.accept(")"):
            output.append(self.expect("name")[1])
            while self.accept(","):
                output.append(self.expect("name")[1])
            self.expect("punct", ")")
        return name, output

    def items(self, closing: str) -> tuple[list[Atom], list[tuple[str, str]]]:
        atoms: list[Atom] = []
        equalities: list[tuple[str, str]] = []
        token = self.peek()
        if token is not None and token[1] == closing:
            return atoms, equalities
        while True:
            left = self.expect("name")[1]
            token = self.peek()
            if token is None:
                raise QueryFormatError("unfinished item", self.line())
            kind, value, line = token
            self.index += 1
            if kind in ("forward", "backward"):
                right = self.expect("name")[1]
                try:
                    nfa = parse_regex(value)
                except RegexSyntaxError as e:
                    raise QueryFormatError(str(e), line) from e
                atoms.append(Atom(left, nfa, right) if kind == "forward" else Atom(right, nfa, left))
            elif value == "=":
                equalities.append((left, self.expect("name")[1]))
            else:
                raise QueryFormatError(f"expected an atom or '=' after {left!r}, found {value!r}", line)
            if not self.accept(","):
                return atoms, equalities

    def body(self, name: str, output: list[str], closing: str) -> C2rpq:
        atoms, equalities = self.items(closing)
        q = C2rpq.of(atoms, output, equalities, name)
        return collapse_equalities(q)[0] if q.equalities else q

    def query(self) -> Uc2rpq:
        name, output = self.header()
        self.expect("define")
        q = self.body(name, output, ";")
        self.expect("punct", ";")
        return as_union(q)

    def union(self) -> Uc2rpq:
        name, output = self.header()
        self.expect("punct", "{")
        disjuncts: list[C2rpq] = []
        while not self.accept("}"):
            self.expect("name", "disjunct")
            self.expect("punct", "{")
            disjuncts.append(self.body(f"{name}_{len(disjuncts) + 1}", output, "}"))
            self.expect("punct", "}")
        if not disjuncts:
            raise QueryFormatError(f"union {name!r} has no disjunct", self.line())
        return Uc2rpq(tuple(disjuncts), name)


def parse_queries(text: str) -> dict[str, Uc2rpq]:
    queries = _QueryParser(text).parse()
    logger.debug(f"Parsed {len(queries)} queries: {', '.join(queries)}")
    return queries


def _fresh_names(q: C2rpq) -> dict[str, str]:
    """Rename variables that are not plain identifiers, such as generated middle variables."""
    taken = {v for v in q.vars if _NAME.match(v)}
    renaming: dict[str, str] = {}
    counter = 0
    for var in sorted(q.vars - taken):
        while f"v{counter}" in taken:
            counter += 1
        renaming[var] = f"v{counter}"
        taken.add(renaming[var])
    return renaming


def _emit_body(q: C2rpq, header: list[str]) -> str:
    renaming = _fresh_names(q)

    def name(var: str) -> str:
        return renaming.get(var, var)

    items = [f"{name(a.src)} -[{to_regex(a.lang)}]-> {name(a.dst)}" for a in q.atoms]
    seen: dict[str, str] = {}
    for placeholder, var in zip(header, q.output, strict=True):
        if placeholder != name(var):
            items.append(f"{placeholder} = {name(var)}")
        seen[placeholder] = var
    mentioned = {name(a.src) for a in q.atoms} | {name(a.dst) for a in q.atoms} | set(header)
    for var in sorted(q.vars):
        if name(var) not in mentioned:
            items.append(f"{name(var)} = {name(var)}")
    return ", ".join(items)


def _header(q: C2rpq) -> list[str]:
    """Output placeholders: the variable itself the first time, a fresh name when it repeats."""
    renaming = _fresh_names(q)
    used = {renaming.get(v, v) for v in q.vars}
    header: list[str] = []
    for index, var in enumerate(q.output):
        shown = renaming.get(var, var)
        if shown in header:
            shown = f"out{index}"
            while shown in used:
                shown = f"_{shown}"
        header.append(shown)
    return header


def emit_query(query: C2rpq | Uc2rpq, name: str | None = None) -> str:
    union = as_union(query)
    title = name or union.name
    if len(union) == 1:
        q = union.disjuncts[0]
        header = _header(q)
        return f"query {title}({', '.join(header)}) := {_emit_body(q, header)} ;\n"
    placeholders = [f"o{i}" for i in range(union.arity)]
    lines = [f"union {title}({', '.join(placeholders)}) {{"]
    for q in union:
        lines.append(f"    disjunct {{ {_emit_body(q, placeholders)} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_queries(queries: Mapping[str, C2rpq | Uc2rpq] | Iterable[C2rpq | Uc2rpq]) -> str:
    if isinstance(queries, Mapping):
        return "".join(emit_query(q, name) for name, q in queries.items())
    return "".join(emit_query(q) for q in queries)
