from .approximation import Approximation, WidthClass, WidthKind, minimize_union, mua_hom_bounded, redirect_class, width_bound
from .automata import Letter, Nfa, parse_regex
from .decomposition import DecompositionKind, TreeDecomposition, exact_pathwidth, exact_treewidth
from .evaluation import ResultSet, evaluate_naive, evaluate_pathwidth, evaluate_treewidth
from .formats import emit_queries, emit_query, parse_queries
from .graphdb import GraphDb, load_db, serialize_db
from .query_model import Atom, C2rpq, Uc2rpq
from .semantics import Decision, Verdict, VerdictKind, contained_bounded, cq_contained, decide_semantic_width, equivalent_bounded

__all__ = [
    "Approximation",
    "Atom",
    "C2rpq",
    "Decision",
    "DecompositionKind",
    "GraphDb",
    "Letter",
    "Nfa",
    "ResultSet",
    "TreeDecomposition",
    "Uc2rpq",
    "Verdict",
    "VerdictKind",
    "WidthClass",
    "WidthKind",
    "contained_bounded",
    "cq_contained",
    "decide_semantic_width",
    "emit_queries",
    "emit_query",
    "equivalent_bounded",
    "evaluate_naive",
    "evaluate_pathwidth",
    "evaluate_treewidth",
    "exact_pathwidth",
    "exact_treewidth",
    "load_db",
    "minimize_union",
    "mua_hom_bounded",
    "parse_queries",
    "parse_regex",
    "redirect_class",
    "serialize_db",
    "width_bound",
]
