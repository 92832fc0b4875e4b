"""Authenticated HTTP/JSON facade over the registry and the notifier."""

from .app import create_app

__all__ = ["create_app"]
