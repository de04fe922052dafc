import logging

from .. import models
from ..core.decomposition import DecompositionKind
from ..core.evaluation import (
    EvaluationStats,
    ResultSet,
    decompose_for_evaluation,
    evaluate_naive,
    evaluate_pathwidth,
    evaluate_treewidth,
)
from ..core.graphdb import GraphDb
from ..core.query_model import Uc2rpq
from ..decorators import flat_args
from ..errors import CapExceededError
from ..tools import base

logger = logging.getLogger(__name__)


def evaluate_with_decomposition(union: Uc2rpq, db: GraphDb, mode: str, k_cap: int | None, limits: models.Limits) -> tuple[ResultSet, dict[str, int]]:
    """Evaluate each disjunct over an optimal decomposition; returns the result and the width used per disjunct."""
    kind = DecompositionKind.PATH if mode == "pw" else DecompositionKind.TREE
    rows: set[tuple[str, ...]] = set()
    widths: dict[str, int] = {}
    for q in union:
        ttd = decompose_for_evaluation(q, kind, limits)
        widths[q.name] = ttd.dec.width
        if k_cap is not None and ttd.dec.width > k_cap:
            raise CapExceededError("k_cap", k_cap, f"{q.name} has {kind}-width {ttd.dec.width}")
        stats = EvaluationStats()
        if kind is DecompositionKind.PATH:
            result = evaluate_pathwidth(q, db, ttd, stats)
        else:
            result = evaluate_treewidth(q, db, ttd, limits, stats)
        logger.debug(f"{q.name}: largest relation {stats.max_relation_size} (bound {stats.bound})")
        rows.update(result.tuples)
    return ResultSet(union.arity, frozenset(rows)), widths


class EvaluationTool(base.BaseTool):
    """Evaluate a query on a graph database."""

    async def execute(self, args: models.EvalArgs) -> models.Report:
        return await self.evaluate(args)

    @flat_args(models.EvalArgs)
    async def evaluate(self, args: models.EvalArgs) -> models.Report:
        queries, query_text = await self.workspace.load_queries(args.query_path)
        db, db_text = await self.workspace.load_database(args.db_path)
        union = self.select(queries, args.query)
        payload: dict[str, object] = {"query": union.name, "mode": args.mode}
        if args.mode == "naive":
            result = await self.run(evaluate_naive, union, db)
        else:
            result, widths = await self.run(evaluate_with_decomposition, union, db, args.mode, args.k_cap, args.limits)
            payload["widths"] = widths
        payload["arity"] = result.arity
        if result.arity == 0:
            payload["satisfied"] = result.satisfied
        else:
            payload["count"] = len(result)
            payload["tuples"] = [list(row) for row in result]
        logger.info(f"{union.name} on {len(db.nodes)} nodes: {len(result)} tuples")
        return models.Report(
            command="eval",
            inputs_digest=self.digest(query_text, db_text),
            payload=payload,
            exact=True,
            limits=args.limits,
        )

    def register_tools(self) -> None:
        assert self.mcp_instance is not None

        @self.mcp_instance.tool()
        async def evaluate_query_tool(args: models.EvalArgs) -> models.Report:
            """Evaluate a query file on an edge-list database (naive, tree or path decomposition engine)."""
            return await self.evaluate(args)
