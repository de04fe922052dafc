from .base import BaseModel
from .schemas import (
    ApproxArgs,
    ContainArgs,
    DecideArgs,
    EvalArgs,
    ExpandArgs,
    Limits,
    RefineArgs,
    Report,
    WidthArgs,
)

__all__ = [
    "BaseModel",
    "Limits",
    "WidthArgs",
    "ApproxArgs",
    "DecideArgs",
    "EvalArgs",
    "ContainArgs",
    "ExpandArgs",
    "RefineArgs",
    "Report",
]
