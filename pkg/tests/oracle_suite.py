"""Cross-checks of the library against the brute-force oracles.

``oracle_suite()`` never raises on a mismatch; it returns counts and the failing cases.
"""

from collections.abc import Callable
from dataclasses import dataclass, field
import random

import generators
import oracles

from semwidth.core.automata import Letter, parse_regex
from semwidth.core.decomposition import exact_pathwidth, exact_treewidth
from semwidth.core.evaluation import evaluate_naive
from semwidth.core.graphdb import GraphDb
from semwidth.core.morphism import enumerate_quotients, find_homomorphisms
from semwidth.core.query_model import Atom, C2rpq, Uc2rpq


@dataclass
class Comparison:
    cases: int = 0
    failures: list[str] = field(default_factory=list)

    def check(self, ok: bool, detail: Callable[[], str]) -> None:
        self.cases += 1
        if not ok:
            self.failures.append(detail())


@dataclass
class Summary:
    comparisons: dict[str, Comparison] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(not c.failures for c in self.comparisons.values())

    def __str__(self) -> str:
        lines = []
        for name, comparison in self.comparisons.items():
            lines.append(f"{name}: {comparison.cases} cases, {len(comparison.failures)} failures")
            lines.extend(f"  {failure}" for failure in comparison.failures[:5])
        return "\n".join(lines)


def _as_oracle_atoms(q: C2rpq) -> list[oracles.OracleAtom]:
    atoms = []
    for atom in q.atoms:
        letter = atom.lang.single_letter
        assert letter is not None
        atoms.append((atom.src, str(letter), atom.dst))
    return atoms


def regex_membership(rng: random.Random, regexes: int = 50, max_len: int = 4) -> Comparison:
    comparison = Comparison()
    for _ in range(regexes):
        regex = generators.random_regex(rng)
        nfa = parse_regex(regex)
        for word in oracles.all_words(generators.LETTERS, max_len):
            letters = tuple(Letter.parse(w) for w in word)
            comparison.check(nfa.accepts(letters) == oracles.regex_matches(regex, word), lambda: f"{regex} on {'.'.join(word)}")
    return comparison


def widths(rng: random.Random, graphs: int = 60) -> Comparison:
    comparison = Comparison()
    for _ in range(graphs):
        graph = generators.random_graph(rng, max_vertices=6)
        vertices, edges = sorted(graph.nodes), list(graph.edges())
        tw, _ = exact_treewidth(graph)
        pw, _ = exact_pathwidth(graph)
        expected_tw = oracles.elimination_width(vertices, edges)
        expected_pw = oracles.separation_width(vertices, edges)
        comparison.check(tw == expected_tw, lambda: f"tw {tw} != {expected_tw} on {edges}")
        comparison.check(pw == expected_pw, lambda: f"pw {pw} != {expected_pw} on {edges}")
    return comparison


def partitions(rng: random.Random, queries: int = 20) -> Comparison:
    comparison = Comparison()
    for _ in range(queries):
        q = generators.random_cq(rng, max_vars=5)
        count = sum(1 for _ in enumerate_quotients(q))
        expected = len(oracles.brute_partitions(sorted(q.vars)))
        comparison.check(count == expected, lambda: f"{count} quotients, {expected} partitions for {q}")
    return comparison


def homomorphisms(rng: random.Random, pairs: int = 60) -> Comparison:
    comparison = Comparison()
    letters = ("a", "b", "a^-")
    for _ in range(pairs):
        src = generators.random_cq(rng, max_vars=3, max_atoms=3, letters=letters)
        dst = generators.random_cq(rng, max_vars=3, max_atoms=4, letters=letters)
        if src.arity != dst.arity:
            continue
        found = {tuple(sorted(h.mapping.items())) for h in find_homomorphisms(src, dst)}
        expected = {
            tuple(sorted(m.items()))
            for m in oracles.brute_homomorphisms(_as_oracle_atoms(src), src.output, _as_oracle_atoms(dst), dst.output)
        }
        comparison.check(found == expected, lambda: f"{len(found)} vs {len(expected)} maps from {src} to {dst}")
    return comparison


def bibliography() -> Comparison:
    comparison = Comparison()
    db = GraphDb.of(oracles.BIBLIOGRAPHY_EDGES)

    def cq(*atoms: tuple[str, str, str], output: tuple[str, ...]) -> C2rpq:
        return C2rpq.of([Atom(s, parse_regex(r), d) for s, r, d in atoms], output)

    coauthors = evaluate_naive(cq(("x", "wrote", "z"), ("y", "wrote", "z"), output=("x", "y")), db)
    comparison.check(set(coauthors) == oracles.bibliography_coauthors(), lambda: f"co-authors {sorted(coauthors)}")
    chains = evaluate_naive(cq(("x", "(wrote.wrote^-)*", "y"), output=("x", "y")), db)
    comparison.check(set(chains) == oracles.bibliography_chains(), lambda: f"chains {sorted(chains)}")
    union = Uc2rpq.of(
        cq(("x", "wrote", "y"), output=("x", "y")),
        cq(("z", "advised", "x"), ("z", "wrote", "y"), output=("x", "y")),
    )
    table = evaluate_naive(union, db)
    comparison.check(set(table) == oracles.BIBLIOGRAPHY_GAMMA5, lambda: f"union {sorted(table)}")
    return comparison


def oracle_suite(seed: int = generators.SEED) -> Summary:
    rng = random.Random(seed)
    summary = Summary()
    summary.comparisons["regex membership"] = regex_membership(rng)
    summary.comparisons["widths"] = widths(rng)
    summary.comparisons["partitions"] = partitions(rng)
    summary.comparisons["homomorphisms"] = homomorphisms(rng)
    summary.comparisons["bibliography"] = bibliography()
    return summary
