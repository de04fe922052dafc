from .approximation_operations import ApproximationTool
from .base import BaseTool
from .evaluation_operations import EvaluationTool
from .query_operations import QueryTool
from .width_operations import WidthTool

__all__ = ["ApproximationTool", "BaseTool", "EvaluationTool", "QueryTool", "WidthTool"]
