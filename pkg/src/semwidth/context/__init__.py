from .workspace import WorkspaceContext

__all__ = ["WorkspaceContext"]
