"""GSM 03.38 default alphabet: septet mapping and 7-bit packing.

Two byte forms are used in this package:

* "unpacked" -- one septet value per octet (ESC sequences for the
  extension table).  This is what goes on the SMPP wire in
  ``short_message`` for data_coding 0x00.
* "packed"   -- septets packed LSB-first into octets, 160 chars in
  140 bytes.  ``pack``/``unpack`` implement this bit-exactly.
"""

from __future__ import annotations

ESCAPE = 0x1B

# Index in this string == septet value.  Position 0x1B is the escape
# to the extension table and must never be produced by a lookup.
_DEFAULT_TABLE = (
    "@£$¥èéùìòÇ\nØø\rÅå"
    "Δ_ΦΓΛΩΠΨΣΘΞ\x00ÆæßÉ"
    " !\"#¤%&'()*+,-./"
    "0123456789:;<=>?"
    "¡ABCDEFGHIJKLMNO"
    "PQRSTUVWXYZÄÖÑÜ§"
    "¿abcdefghijklmno"
    "pqrstuvwxyzäöñüà"
)

# Extension table, reached via ESC.
_EXTENSION = {
    0x0A: "\x0c",
    0x14: "^",
    0x28: "{",
    0x29: "}",
    0x2F: "\\",
    0x3C: "[",
    0x3D: "~",
    0x3E: "]",
    0x40: "|",
    0x65: "€",
}

_ENCODE = {ch: i for i, ch in enumerate(_DEFAULT_TABLE) if i != ESCAPE}
_ENCODE_EXT = {ch: code for code, ch in _EXTENSION.items()}


class UnencodableChar(ValueError):
    """A character has no GSM 03.38 representation."""

    def __init__(self, char: str, position: int):
        super().__init__(f"character {char!r} at position {position} is not GSM 03.38")
        self.char = char
        self.position = position


def is_encodable(text: str) -> bool:
    return all(ch in _ENCODE or ch in _ENCODE_EXT for ch in text)


def septet_length(text: str) -> int:
    """Septet count of *text*; extension-table chars cost 2."""
    total = 0
    for pos, ch in enumerate(text):
        if ch in _ENCODE:
            total += 1
        elif ch in _ENCODE_EXT:
            total += 2
        else:
            raise UnencodableChar(ch, pos)
    return total


def to_septets(text: str) -> list[int]:
    out: list[int] = []
    for pos, ch in enumerate(text):
        code = _ENCODE.get(ch)
        if code is not None:
            out.append(code)
        elif ch in _ENCODE_EXT:
            out.append(ESCAPE)
            out.append(_ENCODE_EXT[ch])
        else:
            raise UnencodableChar(ch, pos)
    return out


def from_septets(septets: list[int]) -> str:
    chars: list[str] = []
    i = 0
    while i < len(septets):
        code = septets[i] & 0x7F
        if code == ESCAPE:
            if i + 1 < len(septets):
                ext = septets[i + 1] & 0x7F
                # Unmapped extension codes render as the base-table char,
                # per the standard's fallback rule.
                chars.append(_EXTENSION.get(ext, _DEFAULT_TABLE[ext]))
                i += 2
            else:
                chars.append(" ")  # dangling escape
                i += 1
        else:
            chars.append(_DEFAULT_TABLE[code])
            i += 1
    return "".join(chars)


def encode_text(text: str) -> bytes:
    """Unpacked wire form: one septet value per octet."""
    return bytes(to_septets(text))


def decode_text(data: bytes) -> str:
    return from_septets(list(data))


def pack(text: str) -> bytes:
    """Pack *text* into 7-bit octets, septets LSB-first."""
    acc = 0
    bits = 0
    out = bytearray()
    for septet in to_septets(text):
        acc |= septet << bits
        bits += 7
        while bits >= 8:
            out.append(acc & 0xFF)
            acc >>= 8
            bits -= 8
    if bits:
        out.append(acc & 0xFF)
    return bytes(out)


def unpack(data: bytes, septet_count: int) -> str:
    """Invert :func:`pack` given the original septet count."""
    septets: list[int] = []
    acc = 0
    bits = 0
    for octet in data:
        acc |= octet << bits
        bits += 8
        while bits >= 7 and len(septets) < septet_count:
            septets.append(acc & 0x7F)
            acc >>= 7
            bits -= 7
    if len(septets) < septet_count:
        raise ValueError(f"need {septet_count} septets, data holds {len(septets)}")
    return from_septets(septets)
