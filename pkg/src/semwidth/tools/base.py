from abc import ABC, abstractmethod
import asyncio
from collections.abc import Callable
import hashlib
from typing import Any, TypeVar

from mcp import McpError
from mcp.server.fastmcp import FastMCP
from mcp.types import INVALID_PARAMS, ErrorData

from ..context.workspace import WorkspaceContext
from ..core.query_model import Uc2rpq

T = TypeVar("T")


class BaseTool(ABC):
    """Base class for all semwidth tools."""

    def __init__(self, mcp_instance: FastMCP | None, workspace: WorkspaceContext):
        self.mcp_instance = mcp_instance
        self.workspace = workspace
        # the CLI drives tools without a server
        if mcp_instance is not None:
            self.register_tools()

    @abstractmethod
    async def execute(self, *args: Any, **kwargs: Any) -> Any:
        """Execute the tool's functionality."""
        pass

    @abstractmethod
    def register_tools(self) -> None:
        """Register tools with the MCP server.

        Subclasses should override this method to register their tools using the
        @self.mcp_instance.tool() decorator.
        """
        pass

    @staticmethod
    def select(queries: dict[str, Uc2rpq], name: str | None) -> Uc2rpq:
        if not queries:
            raise McpError(ErrorData(code=INVALID_PARAMS, message="The query file defines no query"))
        if name is None:
            return next(iter(queries.values()))
        if name not in queries:
            known = ", ".join(queries)
            raise McpError(ErrorData(code=INVALID_PARAMS, message=f"Unknown query {name!r}; defined: {known}"))
        return queries[name]

    @staticmethod
    def digest(*texts: str) -> str:
        sha = hashlib.sha256()
        for text in texts:
            sha.update(text.encode("utf-8"))
            sha.update(b"\0")
        return sha.hexdigest()

    @staticmethod
    async def run(func: Callable[..., T], *args: Any) -> T:
        """Run CPU-bound library code off the event loop."""
        return await asyncio.to_thread(func, *args)
