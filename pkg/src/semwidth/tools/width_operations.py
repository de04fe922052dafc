import logging

from .. import models
from ..core.decomposition import exact_pathwidth, exact_treewidth
from ..core.query_model import C2rpq, ContractionMode, collapse_equalities, contract, underlying_multigraph
from ..decorators import flat_args
from ..errors import CapExceededError
from ..tools import base

logger = logging.getLogger(__name__)

WidthValue = int | str


def disjunct_widths(q: C2rpq, limits: models.Limits, caps_hit: list[str]) -> dict[str, WidthValue]:
    """Tree- and path-width of the query graph, its contraction and its one-way contraction."""
    if q.equalities:
        q = collapse_equalities(q)[0]
    shapes = {
        "": q,
        "c": contract(q, ContractionMode.TWO_WAY),
        "owc": contract(q, ContractionMode.ONE_WAY),
    }
    widths: dict[str, WidthValue] = {}
    for prefix, shape in shapes.items():
        graph = underlying_multigraph(shape)
        for name, compute, cap in (
            (f"{prefix}tw", exact_treewidth, limits.treewidth_vertex_cap),
            (f"{prefix}pw", exact_pathwidth, limits.pathwidth_vertex_cap),
        ):
            try:
                widths[name] = compute(graph, cap)[0]
            except CapExceededError as e:
                logger.warning(f"{q.name}: {name} not computed: {e}")
                widths[name] = f"unknown: cap {e.cap}"
                if e.cap not in caps_hit:
                    caps_hit.append(e.cap)
    return widths


class WidthTool(base.BaseTool):
    """Exact widths of every disjunct of a query file."""

    async def execute(self, args: models.WidthArgs) -> models.Report:
        return await self.width(args)

    @flat_args(models.WidthArgs)
    async def width(self, args: models.WidthArgs) -> models.Report:
        queries, text = await self.workspace.load_queries(args.path)
        selected = [self.select(queries, args.query)] if args.query is not None else list(queries.values())
        caps_hit: list[str] = []
        widths: dict[str, dict[str, WidthValue]] = {}
        for union in selected:
            for q in union:
                key = q.name if q.name == union.name else f"{union.name}/{q.name}"
                widths[key] = await self.run(disjunct_widths, q, args.limits, caps_hit)
                logger.debug(f"{key}: {widths[key]}")
        return models.Report(
            command="width",
            inputs_digest=self.digest(text),
            payload={"widths": widths},
            exact=not caps_hit,
            limits=args.limits,
            caps_hit=caps_hit,
        )

    def register_tools(self) -> None:
        assert self.mcp_instance is not None

        @self.mcp_instance.tool()
        async def query_width_tool(args: models.WidthArgs) -> models.Report:
            """Tree-width and path-width of each disjunct, plain, contracted and one-way contracted."""
            return await self.width(args)
