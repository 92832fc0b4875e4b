"""Pre-formatted message templates.

Loaded from ``templates.conf`` (``KEY = text`` lines, ``\\n`` for line
breaks) next to the main config file; built-in defaults apply when the
file is absent.  Placeholders are ``{name}``-style and must come from
the known set.
"""

from __future__ import annotations

import re
from pathlib import Path

KEY_FEE = "FEE_REMINDER"
KEY_BOOK = "BOOK_REMINDER"
KEY_ANNOUNCE = "ANNOUNCE"

KNOWN_PLACEHOLDERS = {"name", "amount", "due_date", "book_title", "fine", "body"}

DEFAULTS = {
    KEY_FEE: (
        "Dear {name}, your tuition fee balance of RM{amount} was due on "
        "{due_date}. Please settle it at the records office."
    ),
    KEY_BOOK: (
        "Dear {name}, the book '{book_title}' was due on {due_date}. "
        "Fine to date: RM{fine}. Please return it to the library."
    ),
    KEY_ANNOUNCE: "{body}",
}

_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")


class TemplateError(ValueError):
    code = "TEMPLATE_ERROR"


class MissingBinding(TemplateError):
    code = "MISSING_BINDING"

    def __init__(self, name: str):
        super().__init__(f"no binding for placeholder {{{name}}}")
        self.name = name


def placeholders(text: str) -> set[str]:
    return set(_PLACEHOLDER_RE.findall(text))


def validate(text: str) -> None:
    unknown = placeholders(text) - KNOWN_PLACEHOLDERS
    if unknown:
        raise TemplateError(f"unknown placeholders: {sorted(unknown)}")


def render(template_text: str, bindings: dict[str, str]) -> str:
    """Substitute every placeholder; raises MissingBinding when the
    bindings do not cover the template."""

    def repl(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise MissingBinding(name)
        return str(bindings[name])

    return _PLACEHOLDER_RE.sub(repl, template_text)


def load_templates(path: str | Path | None) -> dict[str, str]:
    """Defaults overlaid with any ``KEY = text`` lines found at *path*."""
    result = dict(DEFAULTS)
    if path is None:
        return result
    p = Path(path)
    if not p.is_file():
        return result
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise TemplateError(f"{p}:{lineno}: expected KEY = text")
        key, _, text = line.partition("=")
        key = key.strip()
        text = text.strip().replace("\\n", "\n")
        if key not in DEFAULTS:
            raise TemplateError(f"{p}:{lineno}: unknown template key {key!r}")
        validate(text)
        result[key] = text
    return result
