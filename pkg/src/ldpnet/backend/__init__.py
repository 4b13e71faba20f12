"""Backend - Configuration and service layers."""

from typing import Any


def create_app(config: Any) -> Any:
    """Lazily import and wire the services for one validated configuration.

    Returns:
        Any: The tuple returned by `ldpnet.backend.app.create_app`.
    """
    from .app import create_app as _create_app
    return _create_app(config)


__all__ = ["create_app"]
