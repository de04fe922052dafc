import json
import logging

from .. import models
from ..core.approximation import Approximation, WidthClass, minimize_union, mua_hom_bounded, width_bound
from ..core.formats import emit_query
from ..core.semantics import decide_semantic_width
from ..decorators import flat_args
from ..tools import base

logger = logging.getLogger(__name__)

PROVENANCE_SUFFIX = ".provenance.json"


class ApproximationTool(base.BaseTool):
    """Bounded maximal under-approximations and the semantic-width decision."""

    async def execute(self, args: models.ApproxArgs | models.DecideArgs) -> models.Report:
        if isinstance(args, models.DecideArgs):
            return await self.decide(args)
        return await self.approximate(args)

    @flat_args(models.ApproxArgs)
    async def approximate(self, args: models.ApproxArgs) -> models.Report:
        queries, text = await self.workspace.load_queries(args.path)
        union = self.select(queries, args.query)
        cls = WidthClass.parse(args.width_class, args.k)
        limits = args.limits
        approximation: Approximation = await self.run(mua_hom_bounded, union, cls, limits.m, limits)
        m0, ell = width_bound(union, cls, limits.cubic_constant)

        provenance = dict(zip((q.name for q in approximation.disjuncts), approximation.provenance, strict=True))
        result = approximation.union
        notes = []
        if result is not None and args.minimize:
            before = len(result)
            result = await self.run(minimize_union, result)
            notes.append(f"minimized from {before} to {len(result)} disjuncts")
        if limits.m < ell:
            notes.append(f"refinements of length {limits.m} are below the stabilization bound {ell}")
        if approximation.merged_atoms:
            notes.append(f"{approximation.merged_atoms} disjuncts merge parallel atoms with equal languages")

        emitted = emit_query(result, approximation.name) if result is not None else ""
        kept = [provenance[q.name].to_dict() | {"disjunct": q.name} for q in result] if result is not None else []
        if args.output is not None:
            if result is None:
                notes.append("the approximation is empty; nothing written")
            else:
                await self.workspace.write_text(args.output, emitted)
                await self.workspace.write_text(args.output + PROVENANCE_SUFFIX, json.dumps(kept, indent=2) + "\n")
                notes.append(f"wrote {args.output}")

        logger.info(f"Approximation of {union.name} in {cls}: {len(kept)} disjuncts")
        return models.Report(
            command="approx",
            inputs_digest=self.digest(text),
            payload={
                "class": str(cls),
                "m": limits.m,
                "m0": m0,
                "ell": ell,
                "disjuncts": len(kept),
                "generated": approximation.generated,
                "exhaustive": approximation.exhaustive,
                "query": emitted,
                "provenance": kept,
            },
            exact=approximation.exhaustive,
            limits=limits,
            caps_hit=list(approximation.caps_hit),
            notes=notes,
        )

    @flat_args(models.DecideArgs)
    async def decide(self, args: models.DecideArgs) -> models.Report:
        queries, text = await self.workspace.load_queries(args.path)
        union = self.select(queries, args.query)
        cls = WidthClass.parse(args.width_class, args.k)
        limits = args.limits
        decision = await self.run(decide_semantic_width, union, cls, limits.m, limits.word_bound, limits, args.one_way)
        caps_hit = list(dict.fromkeys(decision.approximation.caps_hit + decision.verdict.caps_hit))
        notes = list(decision.notes)
        if not decision.spot_check:
            notes.append("spot check found a tuple of the approximation outside the query")
        return models.Report(
            command="decide",
            inputs_digest=self.digest(text),
            payload=decision.to_dict(),
            exact=decision.verdict.exact,
            limits=limits,
            caps_hit=caps_hit,
            notes=notes,
        )

    def register_tools(self) -> None:
        assert self.mcp_instance is not None

        @self.mcp_instance.tool()
        async def approximate_tool(args: models.ApproxArgs) -> models.Report:
            """Union of all images of bounded refinements that fall in the width class."""
            return await self.approximate(args)

        @self.mcp_instance.tool()
        async def decide_width_tool(args: models.DecideArgs) -> models.Report:
            """Decide semantic tree-width or path-width at most k, with exactness flags."""
            return await self.decide(args)
