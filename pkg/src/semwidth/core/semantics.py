"""Containment, equivalence and the semantic-width decision.

Containment of unions of C2RPQs is only refuted here, never proved in
general: expansions of the left side are enumerated up to a word bound and
each one is tested against the right side. A verdict says which of the two
happened and whether the answer is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
import logging
import random
from typing import Any

from ..errors import ArityMismatchError, NotACQError
from ..models.schemas import Limits
from .approximation import Approximation, WidthClass, mua_hom_bounded, redirect_class, width_bound
from .automata import Word, word_to_text
from .evaluation import RelationCache, evaluate_naive, iter_matches
from .formats import emit_query
from .graphdb import canonical_db, expand_inverses, random_db
from .morphism import find_homomorphisms
from .query_model import C2rpq, Uc2rpq, as_union, collapse_equalities, enumerate_expansion_words, expansion_of, is_sre

logger = logging.getLogger(__name__)

SPOT_CHECK_DISJUNCTS = 25


class VerdictKind(StrEnum):
    YES = "Yes"
    NO = "No"
    NO_COUNTEREXAMPLE_UP_TO = "NoCounterexampleUpTo"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    exact: bool
    witness: C2rpq | None = None
    witness_words: tuple[Word, ...] | None = None
    bound: int | None = None
    notes: tuple[str, ...] = ()
    caps_hit: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"kind": self.kind.value, "exact": self.exact, "notes": list(self.notes)}
        if self.witness is not None:
            data["witness"] = emit_query(self.witness, "witness").strip()
        if self.witness_words is not None:
            data["witness_words"] = [word_to_text(word) for word in self.witness_words]
        if self.bound is not None:
            data["bound"] = self.bound
        if self.caps_hit:
            data["caps_hit"] = list(self.caps_hit)
        return data


def _prepared(q: C2rpq) -> C2rpq:
    return collapse_equalities(q)[0] if q.equalities else q


def cq_contained(xi: C2rpq, delta: C2rpq | Uc2rpq | None) -> bool:
    """True when the CQ ``xi`` is contained in ``delta``.

    ``delta`` is evaluated on the canonical database of ``xi`` with its output
    pinned to the output of ``xi``. ``None`` stands for the empty union.
    """
    xi = _prepared(xi)
    if not xi.is_cq:
        raise NotACQError(f"{xi.name} is not a conjunctive query")
    if delta is None:
        return False
    union = as_union(delta)
    if union.arity != xi.arity:
        raise ArityMismatchError(f"{xi.name} has arity {xi.arity}, {union.name} has arity {union.arity}")
    db, naming = canonical_db(xi)
    cache = RelationCache(expand_inverses(db))
    target = tuple(naming[v] for v in xi.output)
    for disjunct in union:
        disjunct = _prepared(disjunct)
        pinned: dict[str, str] = {}
        clash = False
        for var, node in zip(disjunct.output, target, strict=True):
            if pinned.setdefault(var, node) != node:
                clash = True
                break
        if clash:
            continue
        for _ in iter_matches(disjunct, cache.db, pinned, cache):
            return True
    return False


def _sre_bound(q: C2rpq) -> int:
    """Word bound from which every counterexample of an SRE query has a witness."""
    finite = sum(1 for atom in q.atoms if atom.lang.max_word_length() is not None)
    return q.size * (finite + 2)


def _exact_at(q: C2rpq, word_bound: int) -> str | None:
    lengths = [atom.lang.max_word_length() for atom in q.atoms]
    if all(length is not None and length <= word_bound for length in lengths):
        return f"{q.name}: every word has length at most {word_bound}"
    if is_sre(q) and word_bound >= _sre_bound(q):
        return f"{q.name}: simple regular expressions, bound {word_bound} >= {_sre_bound(q)}"
    return None


def _covering_disjunct(source: C2rpq, right: Uc2rpq | None) -> str | None:
    """Name of a disjunct with a homomorphism onto ``source`` whose atom languages pass the inclusion recheck."""
    if right is None:
        return None
    for delta in right:
        if any(h.preserves_languages() for h in find_homomorphisms(_prepared(delta), source)):
            return delta.name
    return None


def contained_bounded(
    gamma: C2rpq | Uc2rpq,
    delta: C2rpq | Uc2rpq | None,
    word_bound: int,
    limits: Limits | None = None,
) -> Verdict:
    """Search for an expansion of ``gamma`` that is not contained in ``delta``.

    Expansions are tried shortest first, so a returned witness is minimal
    for the bound.
    """
    limits = limits or Limits()
    left = as_union(gamma)
    right = as_union(delta) if delta is not None else None
    if right is not None and right.arity != left.arity:
        raise ArityMismatchError(f"{left.name} has arity {left.arity}, {right.name} has arity {right.arity}")

    notes: list[str] = []
    exact = True
    tried = 0
    for source in left:
        source = _prepared(source)
        if any(atom.lang.is_empty() for atom in source.atoms):
            notes.append(f"{source.name}: has an empty atom language")
            continue
        cover = _covering_disjunct(source, right)
        if cover is not None:
            notes.append(f"{source.name}: covered by a homomorphism from {cover}")
            continue
        if source.is_cq:
            if not cq_contained(source, right):
                logger.info(f"{source.name} is a counterexample on its own")
                words = tuple((letter,) for atom in source.atoms if (letter := atom.lang.single_letter) is not None)
                return Verdict(VerdictKind.NO, True, source, words, notes=tuple(notes))
            notes.append(f"{source.name}: conjunctive query, contained")
            continue
        for words in enumerate_expansion_words(source, word_bound):
            if tried >= limits.max_expansions:
                logger.warning(f"Stopped after {limits.max_expansions} expansions")
                notes.append(f"stopped after {limits.max_expansions} expansions")
                return Verdict(
                    VerdictKind.NO_COUNTEREXAMPLE_UP_TO,
                    False,
                    bound=word_bound,
                    notes=tuple(notes),
                    caps_hit=("max_expansions",),
                )
            tried += 1
            xi = expansion_of(source, words)
            if not cq_contained(xi, right):
                logger.info(f"Counterexample for {source.name} after {tried} expansions")
                return Verdict(VerdictKind.NO, True, xi, words, bound=word_bound, notes=tuple(notes))
        reason = _exact_at(source, word_bound)
        if reason is None:
            exact = False
        else:
            notes.append(reason)

    logger.debug(f"Checked {tried} expansions of {left.name}")
    if exact:
        return Verdict(VerdictKind.YES, True, notes=tuple(notes))
    return Verdict(VerdictKind.NO_COUNTEREXAMPLE_UP_TO, False, bound=word_bound, notes=tuple(notes))


def equivalent_bounded(a: C2rpq | Uc2rpq, b: C2rpq | Uc2rpq, word_bound: int, limits: Limits | None = None) -> Verdict:
    forward = contained_bounded(a, b, word_bound, limits)
    if forward.kind is VerdictKind.NO:
        return forward
    backward = contained_bounded(b, a, word_bound, limits)
    if backward.kind is VerdictKind.NO:
        return backward
    notes = tuple(f"forward: {n}" for n in forward.notes) + tuple(f"backward: {n}" for n in backward.notes)
    caps = forward.caps_hit + backward.caps_hit
    if forward.kind is VerdictKind.YES and backward.kind is VerdictKind.YES:
        return Verdict(VerdictKind.YES, True, notes=notes)
    return Verdict(VerdictKind.NO_COUNTEREXAMPLE_UP_TO, False, bound=word_bound, notes=notes, caps_hit=caps)


def _labels(queries: list[C2rpq]) -> set[str]:
    return {letter.base for q in queries for atom in q.atoms for letter in atom.lang.alphabet}


def check_under_approximation(gamma: C2rpq | Uc2rpq, approximation: Uc2rpq | None, limits: Limits | None = None, seed: int = 0) -> bool:
    """Evaluate both sides on random databases; False when the approximation returns a tuple ``gamma`` does not."""
    if approximation is None:
        return True
    limits = limits or Limits()
    checked = Uc2rpq(approximation.disjuncts[:SPOT_CHECK_DISJUNCTS], approximation.name)
    labels = _labels(list(as_union(gamma))) | _labels(list(checked))
    rng = random.Random(seed)
    for round_ in range(limits.spot_check_dbs):
        db = random_db(rng, labels, max_nodes=4, max_edges=8)
        extra = set(evaluate_naive(checked, db)) - set(evaluate_naive(gamma, db))
        if extra:
            logger.warning(f"Spot check {round_}: approximation returns {sorted(extra)[0]} outside {as_union(gamma).name}")
            return False
    return True


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    approximation: Approximation
    cls_used: WidthClass
    exact_for_width: bool
    m: int
    ell: int
    spot_check: bool = True
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.to_dict(),
            "class": str(self.cls_used),
            "exact_for_width": self.exact_for_width,
            "m": self.m,
            "ell": self.ell,
            "approximation_disjuncts": len(self.approximation.disjuncts),
            "approximation_exhaustive": self.approximation.exhaustive,
            "spot_check": self.spot_check,
            "notes": list(self.notes),
        }


def decide_semantic_width(
    gamma: C2rpq | Uc2rpq,
    cls: WidthClass,
    m: int,
    word_bound: int,
    limits: Limits | None = None,
    one_way: bool = False,
) -> Decision:
    """Test ``gamma`` against its bounded approximation in ``cls``.

    Tree-width 1 and path-width questions are answered through the
    contracted classes, one-way questions through their one-way variants.
    """
    limits = limits or Limits()
    used = redirect_class(cls, one_way)
    notes: list[str] = []
    if used != cls:
        notes.append(f"{cls} answered through {used}")
    approximation = mua_hom_bounded(gamma, used, m, limits)
    if approximation.union is None:
        notes.append("approximation is empty")
    verdict = contained_bounded(gamma, approximation.union, word_bound, limits)
    _, ell = width_bound(gamma, used, limits.cubic_constant)
    if verdict.kind is VerdictKind.YES:
        exact_for_width = verdict.exact
    elif verdict.kind is VerdictKind.NO:
        exact_for_width = m >= ell and approximation.exhaustive
        if not exact_for_width:
            notes.append(f"refutes the approximation of length {m}; width exactness needs m >= {ell}")
    else:
        exact_for_width = False
    spot_check = check_under_approximation(gamma, approximation.union, limits)
    logger.info(f"{as_union(gamma).name} in {used}: {verdict.kind.value} (exact for width: {exact_for_width})")
    return Decision(verdict, approximation, used, exact_for_width, m, ell, spot_check, tuple(notes))
