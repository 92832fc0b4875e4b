"""Scans, pre-formatted rendering, dedup, the batch approval state
machine, Autorun scheduling, and dispatch fan-out to SMS and the email
spool."""

from . import autorun, build, dispatch, scans, store, templates

__all__ = ["autorun", "build", "dispatch", "scans", "store", "templates"]
