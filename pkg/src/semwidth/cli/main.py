"""Command line: ``semwidth <command> ...``.

The report goes to stdout, logging to stderr. Exit status is 0 when a
result was produced, 2 on parse or usage errors and 3 when a cap was hit.
"""

import argparse
import asyncio
from collections.abc import Sequence
import logging
import os
from pathlib import Path
import sys
from typing import Any

from mcp import McpError
from pydantic import ValidationError

from .. import models
from ..context import WorkspaceContext
from ..context.workspace import STDIN
from ..errors import CapExceededError, SemwidthError
from ..tools import approximation_operations, evaluation_operations, query_operations, width_operations

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s", stream=sys.stderr)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAP = 3

LIMITED_COMMANDS = ("width", "approx", "decide", "eval", "contain")


def _add_limit_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("limits")
    for name, info in models.Limits.model_fields.items():
        flag = "--" + name.replace("_", "-")
        group.add_argument(flag, dest=f"limit_{name}", type=int, default=info.default, help=f"{info.description} (default: {info.default})")


def _limits(ns: argparse.Namespace) -> models.Limits:
    values = {name: getattr(ns, f"limit_{name}") for name in models.Limits.model_fields}
    return models.Limits(**values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semwidth", description="Semantic tree-width and path-width of C2RPQs")
    parser.add_argument("--json", action="store_true", help="Print the report as JSON")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    commands = parser.add_subparsers(dest="command", required=True)

    width = commands.add_parser("width", help="Exact widths of every disjunct")
    width.add_argument("query_file")
    width.add_argument("--query")

    approx = commands.add_parser("approx", help="Bounded maximal under-approximation in a width class")
    approx.add_argument("query_file")
    approx.add_argument("--query")
    approx.add_argument("--class", dest="width_class", default="tw", choices=["tw", "pw", "ctw", "cpw", "owctw", "owcpw"])
    approx.add_argument("--k", type=int, default=2)
    approx.add_argument("--minimize", action="store_true")
    approx.add_argument("--output", "-o", help="Write the approximation (and a provenance sidecar) here")

    decide = commands.add_parser("decide", help="Decide semantic width at most k")
    decide.add_argument("query_file")
    decide.add_argument("--query")
    decide.add_argument("--class", dest="width_class", default="tw", choices=["tw", "pw"])
    decide.add_argument("--k", type=int, default=2)
    decide.add_argument("--one-way", action="store_true", help="Ask for an equivalent union without inverses")

    evaluate = commands.add_parser("eval", help="Evaluate a query on a graph database")
    evaluate.add_argument("query_file")
    evaluate.add_argument("db_file")
    evaluate.add_argument("--query")
    evaluate.add_argument("--mode", default="naive", choices=["naive", "tw", "pw"])
    evaluate.add_argument("--k-cap", type=int, default=None)

    contain = commands.add_parser("contain", help="Bounded containment check of two queries")
    contain.add_argument("left_file")
    contain.add_argument("right_file")
    contain.add_argument("--left-query")
    contain.add_argument("--right-query")

    expand = commands.add_parser("expand", help="List expansions")
    expand.add_argument("query_file")
    expand.add_argument("--query")
    expand.add_argument("--bound", type=int, default=1)
    expand.add_argument("--max-results", type=int, default=1000)

    refine = commands.add_parser("refine", help="List refinements up to isomorphism")
    refine.add_argument("query_file")
    refine.add_argument("--query")
    refine.add_argument("--m", type=int, default=2)
    refine.add_argument("--max-results", type=int, default=1000)

    for name in LIMITED_COMMANDS:
        _add_limit_flags(commands.choices[name])
    return parser


def _files(ns: argparse.Namespace) -> list[str]:
    names = ("query_file", "db_file", "left_file", "right_file")
    return [value for name in names if (value := getattr(ns, name, None)) is not None and value != STDIN]


def workspace_for(ns: argparse.Namespace) -> WorkspaceContext:
    roots = [os.getcwd()]
    for path in _files(ns):
        roots.append(str(Path(path).expanduser().resolve().parent))
    output = getattr(ns, "output", None)
    if output is not None:
        roots.append(str(Path(output).expanduser().resolve().parent))
    return WorkspaceContext([root for root in roots if Path(root).is_dir()])


async def run_command(ns: argparse.Namespace) -> models.Report:
    workspace = workspace_for(ns)
    command: str = ns.command
    common: dict[str, Any] = {"limits": _limits(ns)} if command in LIMITED_COMMANDS else {}
    if command == "width":
        return await width_operations.WidthTool(None, workspace).width(path=ns.query_file, query=ns.query, **common)
    if command in ("approx", "decide"):
        tool = approximation_operations.ApproximationTool(None, workspace)
        if command == "approx":
            return await tool.approximate(
                path=ns.query_file,
                query=ns.query,
                width_class=ns.width_class,
                k=ns.k,
                minimize=ns.minimize,
                output=ns.output,
                **common,
            )
        return await tool.decide(path=ns.query_file, query=ns.query, width_class=ns.width_class, k=ns.k, one_way=ns.one_way, **common)
    if command == "eval":
        return await evaluation_operations.EvaluationTool(None, workspace).evaluate(
            query_path=ns.query_file, db_path=ns.db_file, query=ns.query, mode=ns.mode, k_cap=ns.k_cap, **common
        )
    queries = query_operations.QueryTool(None, workspace)
    if command == "contain":
        return await queries.contain(
            left_path=ns.left_file, right_path=ns.right_file, left_query=ns.left_query, right_query=ns.right_query, **common
        )
    if command == "expand":
        return await queries.expand(path=ns.query_file, query=ns.query, bound=ns.bound, max_results=ns.max_results)
    return await queries.refine(path=ns.query_file, query=ns.query, m=ns.m, max_results=ns.max_results)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if ns.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Verbose logging enabled.")

    try:
        report = asyncio.run(run_command(ns))
    except CapExceededError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    except (SemwidthError, McpError, ValidationError, ValueError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    sys.stdout.write(report.model_dump_json(indent=2) + "\n" if ns.json else report.render_text())
    return EXIT_CAP if report.caps_hit else EXIT_OK


def main_cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_cli()
