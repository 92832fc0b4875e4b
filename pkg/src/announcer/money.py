"""Fixed-point money: integer cents everywhere, 2-decimal strings at the edges."""

from __future__ import annotations

import re

_MONEY_RE = re.compile(r"^(\d+)(?:\.(\d{1,2}))?$")


def parse_money(text: str) -> int:
    """'250.00' -> 25000 cents.  Rejects negatives and >2 decimals."""
    m = _MONEY_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad money value {text!r}")
    whole, frac = m.group(1), m.group(2) or "0"
    return int(whole) * 100 + int(frac.ljust(2, "0"))


def format_money(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}{cents // 100}.{cents % 100:02d}"
