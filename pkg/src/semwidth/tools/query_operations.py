import logging

from .. import models
from ..core.approximation import describe_trace, distinct_refinements
from ..core.formats import emit_query
from ..core.query_model import C2rpq, Uc2rpq, collapse_equalities, enumerate_expansions
from ..core.semantics import contained_bounded
from ..decorators import flat_args
from ..tools import base

logger = logging.getLogger(__name__)


def _collapsed(q: C2rpq) -> C2rpq:
    return collapse_equalities(q)[0] if q.equalities else q


def list_expansions(union: Uc2rpq, bound: int, limit: int) -> tuple[list[C2rpq], bool]:
    """Expansions with words of length at most ``bound``; the flag is set when ``limit`` cut the list."""
    found: list[C2rpq] = []
    for q in union:
        for xi in enumerate_expansions(_collapsed(q), bound):
            if len(found) == limit:
                return found, True
            found.append(xi.renamed(f"{q.name}_exp{len(found) + 1}"))
    return found, False


def list_refinements(union: Uc2rpq, m: int, limit: int) -> tuple[list[tuple[C2rpq, list[str]]], bool]:
    found: list[tuple[C2rpq, list[str]]] = []
    for q in union:
        for refinement in distinct_refinements(_collapsed(q), m):
            if len(found) == limit:
                return found, True
            traces = [describe_trace(t) for t in refinement.per_atom]
            found.append((refinement.result.renamed(f"{q.name}_ref{len(found) + 1}"), traces))
    return found, False


class QueryTool(base.BaseTool):
    """Containment checks and expansion/refinement listings."""

    async def execute(self, args: models.ContainArgs | models.ExpandArgs | models.RefineArgs) -> models.Report:
        if isinstance(args, models.ContainArgs):
            return await self.contain(args)
        if isinstance(args, models.ExpandArgs):
            return await self.expand(args)
        return await self.refine(args)

    @flat_args(models.ContainArgs)
    async def contain(self, args: models.ContainArgs) -> models.Report:
        left_queries, left_text = await self.workspace.load_queries(args.left_path)
        right_queries, right_text = await self.workspace.load_queries(args.right_path)
        left = self.select(left_queries, args.left_query)
        right = self.select(right_queries, args.right_query)
        verdict = await self.run(contained_bounded, left, right, args.limits.word_bound, args.limits)
        return models.Report(
            command="contain",
            inputs_digest=self.digest(left_text, right_text),
            payload={"left": left.name, "right": right.name, "verdict": verdict.to_dict()},
            exact=verdict.exact,
            limits=args.limits,
            caps_hit=list(verdict.caps_hit),
        )

    @flat_args(models.ExpandArgs)
    async def expand(self, args: models.ExpandArgs) -> models.Report:
        queries, text = await self.workspace.load_queries(args.path)
        union = self.select(queries, args.query)
        expansions, cut = await self.run(list_expansions, union, args.bound, args.max_results)
        return models.Report(
            command="expand",
            inputs_digest=self.digest(text),
            payload={
                "query": union.name,
                "bound": args.bound,
                "count": len(expansions),
                "expansions": "".join(emit_query(xi) for xi in expansions),
            },
            exact=not cut,
            caps_hit=["max_results"] if cut else [],
        )

    @flat_args(models.RefineArgs)
    async def refine(self, args: models.RefineArgs) -> models.Report:
        queries, text = await self.workspace.load_queries(args.path)
        union = self.select(queries, args.query)
        refinements, cut = await self.run(list_refinements, union, args.m, args.max_results)
        return models.Report(
            command="refine",
            inputs_digest=self.digest(text),
            payload={
                "query": union.name,
                "m": args.m,
                "count": len(refinements),
                "refinements": "".join(emit_query(rho) for rho, _ in refinements),
                "traces": {rho.name: traces for rho, traces in refinements},
            },
            exact=not cut,
            caps_hit=["max_results"] if cut else [],
        )

    def register_tools(self) -> None:
        assert self.mcp_instance is not None

        @self.mcp_instance.tool()
        async def contain_tool(args: models.ContainArgs) -> models.Report:
            """Look for an expansion of the left query that the right query does not contain."""
            return await self.contain(args)

        @self.mcp_instance.tool()
        async def expand_tool(args: models.ExpandArgs) -> models.Report:
            return await self.expand(args)

        @self.mcp_instance.tool()
        async def refine_tool(args: models.RefineArgs) -> models.Report:
            return await self.refine(args)
