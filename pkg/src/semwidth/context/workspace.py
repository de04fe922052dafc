from __future__ import annotations

import asyncio
import logging
from pathlib import Path
import sys

import aiofiles
from mcp import McpError
from mcp.types import INVALID_PARAMS, ErrorData

from ..core.formats import parse_queries
from ..core.graphdb import GraphDb, load_db
from ..core.query_model import Uc2rpq

logger = logging.getLogger(__name__)

STDIN = "-"


def _invalid(message: str) -> McpError:
    return McpError(ErrorData(code=INVALID_PARAMS, message=message))


class WorkspaceContext:
    """Reads query and database files below a set of allowed roots."""

    def __init__(self, allowed_dirs: list[str]):
        if not allowed_dirs:
            raise ValueError("At least one allowed directory must be specified.")
        self.allowed_directories: list[Path] = []
        for dir_str in allowed_dirs:
            resolved = Path(dir_str).expanduser().resolve()
            if not resolved.is_dir():
                raise ValueError(f"Allowed directory does not exist or is not a directory: {resolved}")
            if resolved not in self.allowed_directories:
                self.allowed_directories.append(resolved)
        self._stdin_text: str | None = None
        logger.info(f"Workspace initialized. Allowed dirs: {', '.join(str(p) for p in self.allowed_directories)}")

    def _is_allowed(self, path: Path) -> bool:
        return any(path == root or path.is_relative_to(root) for root in self.allowed_directories)

    async def validate_path(self, requested: str, for_write: bool = False) -> Path:
        candidate = Path(requested).expanduser()
        try:
            if for_write:
                parent = candidate.parent.resolve(strict=True)
                resolved = parent / candidate.name
            else:
                resolved = candidate.resolve(strict=True)
        except FileNotFoundError as e:
            raise _invalid(f"Path does not exist: {requested}") from e
        except OSError as e:
            logger.warning(f"Error resolving path '{requested}': {e}")
            raise _invalid(f"Invalid path '{requested}': {e}") from e
        if not self._is_allowed(resolved):
            raise _invalid(f"Access denied: Path '{requested}' is outside allowed areas.")
        if not for_write and not resolved.is_file():
            raise _invalid(f"Not a file: {requested}")
        return resolved

    async def read_text(self, requested: str) -> str:
        if requested == STDIN:
            # stdin is read once; later reads of '-' see the same text
            if self._stdin_text is None:
                self._stdin_text = await asyncio.to_thread(sys.stdin.read)
            return self._stdin_text
        path = await self.validate_path(requested)
        async with aiofiles.open(path, encoding="utf-8") as f:
            text = await f.read()
        logger.debug(f"Read {len(text)} characters from {path}")
        return text

    async def write_text(self, requested: str, text: str) -> Path:
        path = await self.validate_path(requested, for_write=True)
        async with aiofiles.open(path, "w", encoding="utf-8") as f:
            await f.write(text)
        logger.info(f"Wrote {path}")
        return path

    async def load_queries(self, requested: str) -> tuple[dict[str, Uc2rpq], str]:
        """Parsed queries by name, plus the raw text for report digests."""
        text = await self.read_text(requested)
        return parse_queries(text), text

    async def load_database(self, requested: str) -> tuple[GraphDb, str]:
        text = await self.read_text(requested)
        return load_db(text), text
