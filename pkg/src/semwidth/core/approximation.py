"""Maximal under-approximations of bounded width, built from refinements and their images."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
import itertools
import logging
from typing import Any

from ..errors import InvalidWidthClassError
from ..models.schemas import Limits
from .decomposition import pathwidth_at_most, pigeonhole_threshold, treewidth_at_most
from .morphism import IsoIndex, has_homomorphism, quotient, set_partitions, shape_key
from .query_model import (
    AtomRefinementTrace,
    C2rpq,
    ContractionMode,
    Refinement,
    Uc2rpq,
    as_union,
    assemble_refinement,
    collapse_equalities,
    contract,
    enumerate_atom_refinements,
    split_final_states,
    underlying_multigraph,
)

logger = logging.getLogger(__name__)


class WidthKind(StrEnum):
    TREE = "tw"
    PATH = "pw"
    CONTRACTED_TREE = "ctw"
    CONTRACTED_PATH = "cpw"
    ONE_WAY_CONTRACTED_TREE = "owctw"
    ONE_WAY_CONTRACTED_PATH = "owcpw"


@dataclass(frozen=True)
class WidthClass:
    kind: WidthKind
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidWidthClassError(f"Width bound must be at least 1, got {self.k}")

    @classmethod
    def parse(cls, name: str, k: int) -> WidthClass:
        try:
            return cls(WidthKind(name), k)
        except ValueError as e:
            raise InvalidWidthClassError(f"Unknown width class {name!r}") from e

    @property
    def one_way(self) -> bool:
        return self.kind in (WidthKind.ONE_WAY_CONTRACTED_TREE, WidthKind.ONE_WAY_CONTRACTED_PATH)

    @property
    def contracted(self) -> bool:
        return self.kind not in (WidthKind.TREE, WidthKind.PATH)

    @property
    def path(self) -> bool:
        return self.kind in (WidthKind.PATH, WidthKind.CONTRACTED_PATH, WidthKind.ONE_WAY_CONTRACTED_PATH)

    def shape(self, q: C2rpq) -> C2rpq:
        """The query whose graph is measured: ``q`` itself or its contraction."""
        if not self.contracted:
            return q
        return contract(q, ContractionMode.ONE_WAY if self.one_way else ContractionMode.TWO_WAY)

    def admits(self, q: C2rpq, limits: Limits | None = None) -> bool:
        limits = limits or Limits()
        if self.one_way and q.uses_inverse:
            return False
        graph = underlying_multigraph(self.shape(q))
        if self.path:
            return pathwidth_at_most(graph, self.k, limits.pathwidth_vertex_cap)
        return treewidth_at_most(graph, self.k, limits.treewidth_vertex_cap)

    def __str__(self) -> str:
        return f"{self.kind.value}{self.k}"


def redirect_class(cls: WidthClass, one_way: bool = False) -> WidthClass:
    """The class whose approximation decides membership in ``cls``.

    Tree-width 1 and every path-width question go through contracted widths;
    one-way questions through their one-way variants.
    """
    kind, k = cls.kind, cls.k
    if kind is WidthKind.TREE:
        if one_way:
            if k != 1:
                raise InvalidWidthClassError("One-way semantic tree-width is only decided for k = 1")
            return WidthClass(WidthKind.ONE_WAY_CONTRACTED_TREE, 1)
        return WidthClass(WidthKind.CONTRACTED_TREE, 1) if k == 1 else cls
    if kind is WidthKind.PATH:
        return WidthClass(WidthKind.ONE_WAY_CONTRACTED_PATH if one_way else WidthKind.CONTRACTED_PATH, k)
    if one_way and not cls.one_way:
        one_way_kind = WidthKind.ONE_WAY_CONTRACTED_PATH if cls.path else WidthKind.ONE_WAY_CONTRACTED_TREE
        return WidthClass(one_way_kind, k)
    return cls


def width_bound(gamma: C2rpq | Uc2rpq, cls: WidthClass, cubic_constant: int = 8) -> tuple[int, int]:
    """The pigeonhole threshold and the refinement length from which approximations stop growing."""
    size = max(q.size for q in as_union(gamma))
    m0 = pigeonhole_threshold(size, cls.k)
    if cls.contracted and cls.k == 1:
        return m0, max(1, cubic_constant * size**3)
    return m0, max(1, 2 * (2 * size * (m0 - 1) - 1))


@dataclass(frozen=True)
class Provenance:
    source: str
    refinement: tuple[str, ...]
    partition: tuple[tuple[str, ...], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "source": self.source,
            "refinement": list(self.refinement),
            "partition": [list(block) for block in self.partition],
        }


@dataclass(frozen=True)
class Approximation:
    name: str
    disjuncts: tuple[C2rpq, ...]
    provenance: tuple[Provenance, ...]
    cls: WidthClass
    m: int
    exhaustive: bool
    generated: int
    caps_hit: tuple[str, ...] = ()
    merged_atoms: int = 0

    @property
    def union(self) -> Uc2rpq | None:
        """None when no image passed the width test (the empty union)."""
        if not self.disjuncts:
            return None
        return Uc2rpq(self.disjuncts, self.name)


def describe_trace(trace: AtomRefinementTrace) -> str:
    if trace.equality_collapse:
        return "="
    parts = []
    for segment, (p, q) in zip(trace.segments, itertools.pairwise(trace.trace), strict=True):
        parts.append(str(segment.letter) if segment.letter is not None else f"L[{p},{q}]")
    return " ".join(parts)


def _distinct_traces(q: C2rpq, m: int) -> list[list[AtomRefinementTrace]]:
    per_atom = []
    for atom in q.atoms:
        seen: set[tuple[object, ...]] = set()
        traces = []
        for trace in enumerate_atom_refinements(atom, m):
            if trace.key() not in seen:
                seen.add(trace.key())
                traces.append(trace)
        per_atom.append(traces)
    return per_atom


def distinct_refinements(q: C2rpq, m: int) -> Iterator[Refinement]:
    """Refinements of length at most ``m``, one per isomorphism class of the refined query."""
    index = IsoIndex()
    for traces in itertools.product(*_distinct_traces(q, m)):
        refinement = assemble_refinement(q, traces)
        if index.add(refinement.result):
            yield refinement


def _images_of(rho: C2rpq, cls: WidthClass, limits: Limits, budget: int) -> tuple[list[tuple[C2rpq, tuple[tuple[str, ...], ...]]], int]:
    """Images of ``rho`` in ``cls``, one per isomorphism class, and the number of quotients generated."""
    local = IsoIndex()
    admitted = []
    generated = 0
    for blocks in set_partitions(sorted(rho.vars)):
        if generated >= budget:
            return admitted, generated + 1
        generated += 1
        image, _ = quotient(rho, blocks)
        if not local.add(image):
            continue
        if cls.admits(image, limits):
            admitted.append((image, blocks))
    return admitted, generated


def mua_hom_bounded(gamma: C2rpq | Uc2rpq, cls: WidthClass, m: int, limits: Limits | None = None) -> Approximation:
    """Every image of a refinement of length at most ``m`` that lies in ``cls``, up to isomorphism."""
    if m < 1:
        raise ValueError("m must be at least 1")
    limits = limits or Limits()
    union = as_union(gamma)
    found = IsoIndex()
    disjuncts: list[C2rpq] = []
    provenance: list[Provenance] = []
    generated = 0
    merged_atoms = 0
    caps_hit: list[str] = []

    for source in union:
        if source.equalities:
            source = collapse_equalities(source)[0]
        for part in split_final_states(source):
            refinements = list(distinct_refinements(part, m))
            logger.info(f"{part.name}: {len(refinements)} distinct refinements of length at most {m}")
            if limits.jobs > 1 and len(refinements) > 1:
                with ProcessPoolExecutor(max_workers=limits.jobs) as pool:
                    futures = [pool.submit(_images_of, r.result, cls, limits, limits.max_generated) for r in refinements]
                    results = [future.result() for future in futures]
            else:
                results = None
            for position, refinement in enumerate(refinements):
                budget = limits.max_generated - generated
                if results is not None:
                    admitted, count = results[position]
                    if count > budget:
                        count = budget + 1
                else:
                    admitted, count = _images_of(refinement.result, cls, limits, budget)
                generated += min(count, budget)
                if count > budget:
                    logger.warning(f"Stopped after {limits.max_generated} generated images")
                    caps_hit.append("max_generated")
                    break
                trace = tuple(describe_trace(t) for t in refinement.per_atom)
                for image, blocks in admitted:
                    if found.add(image):
                        if len(image.atoms) < len(refinement.result.atoms):
                            merged_atoms += 1
                        disjuncts.append(image.renamed(f"{union.name}_{len(disjuncts) + 1}"))
                        provenance.append(Provenance(part.name, trace, blocks))
            if caps_hit:
                break
        if caps_hit:
            break

    logger.info(f"Approximation of {union.name} in {cls}: {len(disjuncts)} disjuncts from {generated} images")
    return Approximation(
        name=f"{union.name}_approx",
        disjuncts=tuple(disjuncts),
        provenance=tuple(provenance),
        cls=cls,
        m=m,
        exhaustive=not caps_hit,
        generated=generated,
        caps_hit=tuple(caps_hit),
        merged_atoms=merged_atoms,
    )


def _canonical_key(q: C2rpq) -> tuple[object, ...]:
    return (len(q.vars), len(q.atoms), str(shape_key(q)), str(q))


def minimize_union(queries: Uc2rpq | Sequence[C2rpq]) -> Uc2rpq:
    """Drop every disjunct contained in another one; of two equivalent disjuncts the first in canonical order stays."""
    ordered = sorted(queries, key=_canonical_key)
    kept = []
    for i, delta in enumerate(ordered):
        absorbed = False
        for j, other in enumerate(ordered):
            if i == j or not has_homomorphism(other, delta):
                continue
            if j < i or not has_homomorphism(delta, other):
                absorbed = True
                break
        if not absorbed:
            kept.append(delta)
    name = queries.name if isinstance(queries, Uc2rpq) else kept[0].name
    logger.debug(f"Minimized {len(ordered)} disjuncts to {len(kept)}")
    return Uc2rpq(tuple(kept), name)
