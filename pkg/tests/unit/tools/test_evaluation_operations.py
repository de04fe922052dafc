import oracles
import pytest

from semwidth.core.graphdb import GraphDb
from semwidth.errors import CapExceededError
from semwidth.models import EvalArgs, Limits
from semwidth.tools import evaluation_operations


@pytest.fixture
def tool(mcp_server, workspace) -> evaluation_operations.EvaluationTool:
    return evaluation_operations.EvaluationTool(mcp_server, workspace)


@pytest.fixture
def bibliography_paths(copy_fixture) -> tuple[str, str]:
    return str(copy_fixture("bibliography.q")), str(copy_fixture("bibliography.db"))


class TestEvaluateWithDecomposition:
    def test_widths_per_disjunct(self, bibliography_queries, bibliography_db):
        # Execute
        result, widths = evaluation_operations.evaluate_with_decomposition(bibliography_queries["gamma5"], bibliography_db, "pw", None, Limits())

        # Verify
        assert set(result) == oracles.BIBLIOGRAPHY_GAMMA5
        assert widths == {"gamma5_1": 1, "gamma5_2": 1}

    def test_width_cap(self, bibliography_queries, bibliography_db):
        with pytest.raises(CapExceededError) as exc_info:
            evaluation_operations.evaluate_with_decomposition(bibliography_queries["gamma1"], bibliography_db, "tw", 0, Limits())
        assert exc_info.value.cap == "k_cap"

    def test_empty_database(self, bibliography_queries):
        result, _ = evaluation_operations.evaluate_with_decomposition(bibliography_queries["gamma1"], GraphDb.of([]), "tw", None, Limits())
        assert len(result) == 0


class TestEvaluationTool:
    async def test_naive(self, tool, bibliography_paths):
        # Setup
        query_path, db_path = bibliography_paths

        # Execute
        report = await tool.evaluate(EvalArgs(query_path=query_path, db_path=db_path, query="gamma1"))

        # Verify
        assert report.payload["count"] == len(oracles.bibliography_coauthors())
        assert {tuple(row) for row in report.payload["tuples"]} == oracles.bibliography_coauthors()
        assert report.payload["tuples"] == sorted(report.payload["tuples"])
        assert "widths" not in report.payload
        assert report.exact

    @pytest.mark.parametrize("mode", ["tw", "pw"])
    async def test_decomposition_modes_match_naive(self, tool, bibliography_paths, mode):
        query_path, db_path = bibliography_paths
        naive = await tool.evaluate(query_path=query_path, db_path=db_path, query="gamma2")
        report = await tool.evaluate(query_path=query_path, db_path=db_path, query="gamma2", mode=mode)
        assert report.payload["tuples"] == naive.payload["tuples"]
        assert report.payload["widths"] == {"gamma2": 1}

    async def test_boolean_query(self, tool, bibliography_paths):
        query_path, db_path = bibliography_paths
        report = await tool.evaluate(query_path=query_path, db_path=db_path, query="gamma4")
        assert report.payload["arity"] == 0
        assert report.payload["satisfied"] is True
        assert "tuples" not in report.payload

    async def test_digest_covers_both_files(self, tool, bibliography_paths, temp_dir):
        # Setup
        query_path, db_path = bibliography_paths
        before = await tool.evaluate(query_path=query_path, db_path=db_path, query="gamma1")
        (temp_dir / "bibliography.db").write_text("author1 wrote paper1\n")

        # Execute
        after = await tool.evaluate(query_path=query_path, db_path=db_path, query="gamma1")

        # Verify
        assert before.inputs_digest != after.inputs_digest
        assert after.payload["tuples"] == [["author1", "author1"]]

    async def test_execute_delegates(self, tool, bibliography_paths):
        query_path, db_path = bibliography_paths
        report = await tool.execute(EvalArgs(query_path=query_path, db_path=db_path))
        assert report.payload["query"] == "gamma1"
