from collections.abc import Callable, Iterator
from pathlib import Path
import shutil
import tempfile

from mcp.server.fastmcp import FastMCP
import pytest

from semwidth.context import WorkspaceContext
from semwidth.core.formats import parse_queries
from semwidth.core.graphdb import GraphDb, load_db
from semwidth.core.query_model import Uc2rpq

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def temp_dir() -> Iterator[Path]:
    """Create a temporary directory that gets cleaned up after the test."""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)
    shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def workspace(temp_dir: Path) -> WorkspaceContext:
    """A workspace rooted at the temporary directory."""
    return WorkspaceContext([str(temp_dir)])


@pytest.fixture
def mcp_server() -> FastMCP:
    """Create a FastMCP instance for testing."""
    return FastMCP(name="test-semwidth-server")


@pytest.fixture
def copy_fixture(temp_dir: Path) -> Callable[[str], Path]:
    """Copy a fixture file into the temporary directory and return the copy."""

    def copy(name: str) -> Path:
        target = temp_dir / name
        shutil.copyfile(FIXTURES / name, target)
        return target

    return copy


def load_fixture_queries(name: str) -> dict[str, Uc2rpq]:
    return parse_queries((FIXTURES / name).read_text())


@pytest.fixture
def bibliography_db() -> GraphDb:
    return load_db((FIXTURES / "bibliography.db").read_text())


@pytest.fixture
def bibliography_queries() -> dict[str, Uc2rpq]:
    return load_fixture_queries("bibliography.q")


@pytest.fixture
def parity() -> dict[str, Uc2rpq]:
    return load_fixture_queries("parity.q")
