"""Concatenated-SMS segmentation.

GSM-representable text is sized in septets (160 single / 153 per
concatenated part), anything else is UCS2 sized in UTF-16 code units
(70 / 67).  Multi-part segments carry the 6-byte concatenation UDH
``05 00 03 ref total idx`` with idx starting at 1.

Wire payloads: GSM7 text travels unpacked (one septet value per octet,
the form SMSCs accept for data_coding 0x00); UCS2 travels as UTF-16-BE.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import gsm0338

GSM7_SINGLE = 160
GSM7_PART = 153
UCS2_SINGLE = 70
UCS2_PART = 67
MAX_SEGMENTS = 255

ENCODING_GSM7 = "GSM7"
ENCODING_UCS2 = "UCS2"


class TooManySegments(ValueError):
    pass


@dataclass(frozen=True)
class SmsPayload:
    text: str
    encoding: str
    # (udh_bytes, payload_bytes) per part; udh is b"" for a single part
    segments: list[tuple[bytes, bytes]]

    @property
    def data_coding(self) -> int:
        return 0x00 if self.encoding == ENCODING_GSM7 else 0x08


def _ucs2_units(ch: str) -> int:
    return len(ch.encode("utf-16-be")) // 2


def _split(text: str, cost, limit: int) -> list[str]:
    chunks: list[str] = []
    cur: list[str] = []
    used = 0
    for ch in text:
        c = cost(ch)
        if used + c > limit:
            chunks.append("".join(cur))
            cur = [ch]
            used = c
        else:
            cur.append(ch)
            used += c
    if cur:
        chunks.append("".join(cur))
    return chunks


def _udh(ref_num: int, total: int, idx: int) -> bytes:
    return bytes([0x05, 0x00, 0x03, ref_num & 0xFF, total & 0xFF, idx & 0xFF])


def segment(text: str, ref_num: int) -> SmsPayload:
    """Split *text* into SMS parts, choosing GSM7 when representable."""
    if not text:
        raise ValueError("cannot segment empty text")

    if gsm0338.is_encodable(text):
        encoding = ENCODING_GSM7
        cost = lambda ch: gsm0338.septet_length(ch)
        single, part = GSM7_SINGLE, GSM7_PART
        to_bytes = gsm0338.encode_text
    else:
        encoding = ENCODING_UCS2
        cost = _ucs2_units
        single, part = UCS2_SINGLE, UCS2_PART
        to_bytes = lambda s: s.encode("utf-16-be")

    total_units = sum(cost(ch) for ch in text)
    if total_units <= single:
        return SmsPayload(text=text, encoding=encoding, segments=[(b"", to_bytes(text))])

    chunks = _split(text, cost, part)
    if len(chunks) > MAX_SEGMENTS:
        raise TooManySegments(f"{len(chunks)} segments exceed {MAX_SEGMENTS}")
    segments = [
        (_udh(ref_num, len(chunks), idx), to_bytes(chunk))
        for idx, chunk in enumerate(chunks, start=1)
    ]
    return SmsPayload(text=text, encoding=encoding, segments=segments)


def decode_payload(payload: bytes, data_coding: int) -> str:
    """Inverse of a segment's payload bytes (sim side)."""
    if data_coding == 0x08:
        return payload.decode("utf-16-be")
    return gsm0338.decode_text(payload)


def parse_udh(short_message: bytes) -> tuple[int, int, int, bytes] | None:
    """Extract (ref, total, idx, payload) from a concat UDH, if present."""
    if len(short_message) >= 6 and short_message[:3] == b"\x05\x00\x03":
        ref, total, idx = short_message[3], short_message[4], short_message[5]
        return ref, total, idx, short_message[6:]
    return None
