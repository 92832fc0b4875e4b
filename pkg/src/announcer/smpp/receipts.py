"""Delivery-receipt parsing for inbound deliver_sm bodies.

Receipts follow the conventional text layout
``id:XXX sub:001 dlvrd:001 submit date:... done date:... stat:DELIVRD err:000 ...``;
only ``id:`` and ``stat:`` matter here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

STAT_DELIVRD = "DELIVRD"
STAT_EXPIRED = "EXPIRED"
STAT_UNDELIV = "UNDELIV"
STAT_REJECTD = "REJECTD"
STAT_UNKNOWN = "UNKNOWN"

_KNOWN_STATS = {STAT_DELIVRD, STAT_EXPIRED, STAT_UNDELIV, STAT_REJECTD}

_ID_RE = re.compile(rb"\bid:(\S+)")
_STAT_RE = re.compile(rb"\bstat:(\S+)")


class NotAReceipt(ValueError):
    pass


@dataclass(frozen=True)
class Receipt:
    message_id: str
    stat: str


def parse_delivery_receipt(short_message: bytes) -> Receipt:
    id_match = _ID_RE.search(short_message)
    if not id_match:
        raise NotAReceipt("no id: field")
    stat_match = _STAT_RE.search(short_message)
    stat = stat_match.group(1).decode("ascii", errors="replace") if stat_match else ""
    if stat not in _KNOWN_STATS:
        stat = STAT_UNKNOWN
    return Receipt(
        message_id=id_match.group(1).decode("ascii", errors="replace"),
        stat=stat,
    )


def format_delivery_receipt(message_id: str, stat: str, text: str = "") -> bytes:
    body = (
        f"id:{message_id} sub:001 dlvrd:001 submit date:0000000000 "
        f"done date:0000000000 stat:{stat} err:000 text:{text[:20]}"
    )
    return body.encode("ascii", errors="replace")
