"""Network-facing surface: HTTP API, server-push event stream, and CLI."""

from ranloop.service.app import ServiceState, create_app
from ranloop.service.config import ServiceConfig, Workspace

__all__ = ["ServiceConfig", "ServiceState", "Workspace", "create_app"]
