from pathlib import Path

import pytest

from semwidth.context import WorkspaceContext
from semwidth.core.formats import parse_queries
from semwidth.models import ApproxArgs, ContainArgs, EvalArgs, ExpandArgs, Limits, WidthArgs
from semwidth.server.main import build_server
from semwidth.tools import approximation_operations, evaluation_operations, query_operations, width_operations


class TestServer:
    async def test_every_tool_is_registered(self, workspace: WorkspaceContext):
        # Execute
        mcp = build_server(workspace)
        tools = await mcp.list_tools()

        # Verify
        assert {tool.name for tool in tools} == {
            "query_width_tool",
            "approximate_tool",
            "decide_width_tool",
            "evaluate_query_tool",
            "contain_tool",
            "expand_tool",
            "refine_tool",
        }

    async def test_tool_schemas_expose_the_limits(self, workspace: WorkspaceContext):
        tools = {tool.name: tool for tool in await build_server(workspace).list_tools()}
        assert "limits" in str(tools["decide_width_tool"].inputSchema)


class TestPipelines:
    async def test_approximation_feeds_back_into_width_and_containment(
        self, mcp_server, workspace: WorkspaceContext, copy_fixture, temp_dir: Path
    ):
        # Setup
        source = str(copy_fixture("triangle.q"))
        output = str(temp_dir / "triangle_tw1.q")
        approximate = approximation_operations.ApproximationTool(mcp_server, workspace)
        width = width_operations.WidthTool(mcp_server, workspace)
        contain = query_operations.QueryTool(mcp_server, workspace)

        # Execute
        await approximate.approximate(ApproxArgs(path=source, width_class="tw", k=1, limits=Limits(m=1), output=output))
        widths = (await width.width(WidthArgs(path=output))).payload["widths"]
        backwards = await contain.contain(ContainArgs(left_path=output, right_path=source))

        # Verify
        assert len(widths) == 4
        assert all(entry["tw"] <= 1 for entry in widths.values())
        assert backwards.payload["verdict"]["kind"] == "Yes"

    async def test_expansions_evaluate_inside_their_query(
        self, mcp_server, workspace: WorkspaceContext, copy_fixture, temp_dir: Path
    ):
        # Setup
        source = str(copy_fixture("back_and_forth.q"))
        database = str(temp_dir / "db.txt")
        Path(database).write_text("n1 a n2\nn3 a n2\nn3 a n4\n")
        expand = query_operations.QueryTool(mcp_server, workspace)
        evaluate = evaluation_operations.EvaluationTool(mcp_server, workspace)

        # Execute
        report = await expand.expand(ExpandArgs(path=source, bound=2))
        expanded = temp_dir / "expansions.q"
        expanded.write_text(report.payload["expansions"])
        whole = await evaluate.evaluate(EvalArgs(query_path=source, db_path=database))

        # Verify
        assert report.payload["count"] == 2
        assert set(parse_queries(expanded.read_text())) == {"back_and_forth_exp1", "back_and_forth_exp2"}
        for name in ("back_and_forth_exp1", "back_and_forth_exp2"):
            part = await evaluate.evaluate(EvalArgs(query_path=str(expanded), db_path=database, query=name))
            assert {tuple(row) for row in part.payload["tuples"]} <= {tuple(row) for row in whole.payload["tuples"]}
        assert {tuple(row) for row in whole.payload["tuples"]} == {
            ("n1", "n1"),
            ("n1", "n3"),
            ("n3", "n1"),
            ("n3", "n3"),
            ("n2", "n2"),
            ("n4", "n4"),
        }

    @pytest.mark.parametrize("mode", ["tw", "pw"])
    async def test_decomposition_modes_report_their_widths(self, mcp_server, workspace, copy_fixture, mode):
        evaluate = evaluation_operations.EvaluationTool(mcp_server, workspace)
        report = await evaluate.evaluate(
            EvalArgs(query_path=str(copy_fixture("bibliography.q")), db_path=str(copy_fixture("bibliography.db")), query="gamma1", mode=mode)
        )
        assert report.payload["widths"] == {"gamma1": 1}
        assert report.exact
