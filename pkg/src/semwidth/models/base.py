from pydantic import BaseModel as PydanticBaseModel
from pydantic import ConfigDict


class BaseModel(PydanticBaseModel):
    """Shared settings of the argument, limit and report models. Unknown fields are rejected."""

    model_config = ConfigDict(from_attributes=True, extra="forbid")
