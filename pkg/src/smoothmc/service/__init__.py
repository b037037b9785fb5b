"""HTTP service wrapping the core package (handlers shared with the CLI)."""

from .app import app

__all__ = ["app"]
