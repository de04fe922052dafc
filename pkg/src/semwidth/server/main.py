import argparse
import asyncio
import logging
import sys

from mcp.server.fastmcp import FastMCP

from ..context import WorkspaceContext
from ..tools import approximation_operations, evaluation_operations, query_operations, width_operations

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)


def build_server(workspace: WorkspaceContext) -> FastMCP:
    mcp = FastMCP(name="semwidth-server")
    logger.info(f"FastMCP server '{mcp.name}' created.")
    width_operations.WidthTool(mcp, workspace)
    approximation_operations.ApproximationTool(mcp, workspace)
    evaluation_operations.EvaluationTool(mcp, workspace)
    query_operations.QueryTool(mcp, workspace)
    return mcp


async def run_server_logic(allowed_dirs: list[str], verbose: bool) -> None:
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Verbose logging enabled.")

    try:
        workspace = WorkspaceContext(allowed_dirs)
    except ValueError as e:
        logger.critical(f"Failed to initialize WorkspaceContext: {e}")
        sys.exit(1)

    mcp = build_server(workspace)
    logger.info(f"Starting semwidth server. Name: '{mcp.name}', Allowed Dirs: {allowed_dirs}")
    await mcp.run_stdio_async()
    logger.info("semwidth server stopped.")


def main_cli() -> None:
    parser = argparse.ArgumentParser(description="Semantic width of graph queries, served over MCP (FastMCP)")
    parser.add_argument(
        "allowed_directory",
        nargs="+",
        help="Directory (or directories) holding query and database files",
    )
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")

    args = parser.parse_args()
    asyncio.run(run_server_logic(args.allowed_directory, args.verbose))


if __name__ == "__main__":
    main_cli()
