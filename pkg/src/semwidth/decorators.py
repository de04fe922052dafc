from collections.abc import Awaitable, Callable
from functools import wraps
from inspect import Parameter, Signature, signature
from typing import Any, ParamSpec, TypeVar

from pydantic import BaseModel
from pydantic_core import PydanticUndefined

R = TypeVar("R")
P = ParamSpec("P")


def _model_parameters(model_cls: type[BaseModel]) -> list[Parameter]:
    parameters = []
    for name, info in model_cls.model_fields.items():
        default: Any = Parameter.empty
        if not info.is_required():
            default = info.default if info.default is not PydanticUndefined else info.get_default(call_default_factory=True)
        parameters.append(Parameter(name, Parameter.POSITIONAL_OR_KEYWORD, default=default, annotation=info.annotation or Any))
    return parameters


def flat_args(
    model_cls: type[BaseModel],
) -> Callable[[Callable[P, Awaitable[R]]], Callable[..., Awaitable[R]]]:
    """Let an async operation taking one ``model_cls`` argument be called with the model or with its fields.

    The wrapper's signature lists the model fields, so MCP tool schemas and
    ``help()`` show flat parameters.
    """

    def decorator(func: Callable[P, Awaitable[R]]) -> Callable[..., Awaitable[R]]:
        original = list(signature(func).parameters.values())
        is_method = bool(original) and original[0].name == "self"
        field_names = list(model_cls.model_fields)
        fields = _model_parameters(model_cls)

        @wraps(func)
        async def wrapper(*args: Any, **kwargs: Any) -> R:
            head: tuple[Any, ...] = ()
            if is_method:
                if not args:
                    raise TypeError(f"{func.__name__} needs a 'self' argument")
                head, args = args[:1], args[1:]

            if len(args) == 1 and isinstance(args[0], model_cls):
                return await func(*head, args[0], **kwargs)  # type: ignore[arg-type]
            if any(isinstance(arg, BaseModel) for arg in args):
                raise TypeError(f"{func.__name__} expects a {model_cls.__name__}, not another model")

            if len(args) > len(field_names):
                raise TypeError(f"{func.__name__} takes at most {len(field_names)} arguments, got {len(args)}")
            values = dict(zip(field_names, args, strict=False))
            for name in field_names:
                if name in kwargs:
                    if name in values:
                        raise TypeError(f"{func.__name__}() got multiple values for argument '{name}'")
                    values[name] = kwargs.pop(name)
            model = model_cls(**values)
            return await func(*head, model, **kwargs)  # type: ignore[arg-type]

        parameters = original[:1] if is_method else []
        parameters.extend(fields)
        return_annotation = signature(func).return_annotation
        setattr(wrapper, "__signature__", Signature(parameters, return_annotation=return_annotation))  # noqa: B010
        annotations = {p.name: p.annotation for p in parameters if p.annotation is not Parameter.empty}
        annotations["return"] = return_annotation
        setattr(wrapper, "__annotations__", annotations)  # noqa: B010
        return wrapper

    return decorator
