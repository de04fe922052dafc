from .decorators import flat_args
from .errors import SemwidthError

__all__ = ["SemwidthError", "flat_args"]
