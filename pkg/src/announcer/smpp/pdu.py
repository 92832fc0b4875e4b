"""SMPP 3.4 PDU encoder/decoder.

Covers the eleven PDU kinds this system exchanges: transceiver bind
(request/resp), submit_sm (request/resp), deliver_sm (request/resp),
enquire_link (request/resp), unbind (request/resp) and generic_nack.
Anything else decodes to :class:`RawBody` so a session can reply
generic_nack instead of dying.

All integers are big-endian on the wire; the first u32 of every frame
is the total byte length including the 16-byte header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

HEADER_LEN = 16
MAX_PDU_LEN = 64 * 1024
MAX_SHORT_MESSAGE = 254

# command_id values
BIND_TRANSCEIVER = 0x00000009
BIND_TRANSCEIVER_RESP = 0x80000009
SUBMIT_SM = 0x00000004
SUBMIT_SM_RESP = 0x80000004
DELIVER_SM = 0x00000005
DELIVER_SM_RESP = 0x80000005
ENQUIRE_LINK = 0x00000015
ENQUIRE_LINK_RESP = 0x80000015
UNBIND = 0x00000006
UNBIND_RESP = 0x80000006
GENERIC_NACK = 0x80000000

# command_status values used by this system
ESME_ROK = 0x00000000
ESME_RINVCMDID = 0x00000003
ESME_RINVBNDSTS = 0x00000004
ESME_RSYSERR = 0x00000008
ESME_RINVPASWD = 0x0000000E
ESME_RINVSYSID = 0x0000000F
ESME_RMSGQFUL = 0x00000014
ESME_RTHROTTLED = 0x00000058

# esm_class / data_coding bits
ESM_UDHI = 0x40
DATA_CODING_GSM7 = 0x00
DATA_CODING_UCS2 = 0x08


class CodecError(Exception):
    """Base for all encode/decode failures."""


class NeedMore(CodecError):
    """Buffer is shorter than one full PDU; ``missing`` bytes are still needed."""

    def __init__(self, missing: int):
        super().__init__(f"need {missing} more bytes")
        self.missing = missing


class BadLength(CodecError):
    pass


class FieldTooLong(CodecError):
    pass


class InvalidVariant(CodecError):
    pass


@dataclass(frozen=True)
class BindTransceiver:
    system_id: str
    password: str
    system_type: str = ""
    interface_version: int = 0x34
    addr_ton: int = 0
    addr_npi: int = 0
    address_range: str = ""

    command_id = BIND_TRANSCEIVER


@dataclass(frozen=True)
class BindTransceiverResp:
    system_id: str = ""

    command_id = BIND_TRANSCEIVER_RESP


@dataclass(frozen=True)
class SubmitSm:
    source_addr: str
    destination_addr: str
    short_message: bytes
    service_type: str = ""
    source_addr_ton: int = 1
    source_addr_npi: int = 1
    dest_addr_ton: int = 1
    dest_addr_npi: int = 1
    esm_class: int = 0
    protocol_id: int = 0
    priority_flag: int = 0
    schedule_delivery_time: str = ""
    validity_period: str = ""
    registered_delivery: int = 1
    replace_if_present_flag: int = 0
    data_coding: int = 0
    sm_default_msg_id: int = 0

    command_id = SUBMIT_SM


@dataclass(frozen=True)
class SubmitSmResp:
    message_id: str = ""

    command_id = SUBMIT_SM_RESP


@dataclass(frozen=True)
class DeliverSm:
    source_addr: str
    destination_addr: str
    short_message: bytes
    service_type: str = ""
    source_addr_ton: int = 1
    source_addr_npi: int = 1
    dest_addr_ton: int = 1
    dest_addr_npi: int = 1
    esm_class: int = 0
    protocol_id: int = 0
    priority_flag: int = 0
    schedule_delivery_time: str = ""
    validity_period: str = ""
    registered_delivery: int = 0
    replace_if_present_flag: int = 0
    data_coding: int = 0
    sm_default_msg_id: int = 0

    command_id = DELIVER_SM


@dataclass(frozen=True)
class DeliverSmResp:
    message_id: str = ""

    command_id = DELIVER_SM_RESP


@dataclass(frozen=True)
class EnquireLink:
    command_id = ENQUIRE_LINK


@dataclass(frozen=True)
class EnquireLinkResp:
    command_id = ENQUIRE_LINK_RESP


@dataclass(frozen=True)
class Unbind:
    command_id = UNBIND


@dataclass(frozen=True)
class UnbindResp:
    command_id = UNBIND_RESP


@dataclass(frozen=True)
class GenericNack:
    command_id = GENERIC_NACK


@dataclass(frozen=True)
class RawBody:
    """Body of a PDU whose command_id (or body layout) we do not speak."""

    raw_command_id: int
    data: bytes = b""

    @property
    def command_id(self) -> int:
        return self.raw_command_id


Body = (
    BindTransceiver
    | BindTransceiverResp
    | SubmitSm
    | SubmitSmResp
    | DeliverSm
    | DeliverSmResp
    | EnquireLink
    | EnquireLinkResp
    | Unbind
    | UnbindResp
    | GenericNack
    | RawBody
)


@dataclass(frozen=True)
class Pdu:
    command_status: int
    sequence_number: int
    body: Body

    @property
    def command_id(self) -> int:
        return self.body.command_id

    @property
    def is_response(self) -> bool:
        return bool(self.command_id & 0x80000000)


def request(body: Body, sequence_number: int) -> Pdu:
    return Pdu(command_status=ESME_ROK, sequence_number=sequence_number, body=body)


def response(body: Body, sequence_number: int, status: int = ESME_ROK) -> Pdu:
    return Pdu(command_status=status, sequence_number=sequence_number, body=body)


def _cstring(value: str, limit: int, name: str) -> bytes:
    raw = value.encode("ascii")
    if b"\x00" in raw:
        raise InvalidVariant(f"{name} contains NUL")
    # limit counts the terminating NUL, per the SMPP field tables
    if len(raw) + 1 > limit:
        raise FieldTooLong(f"{name} exceeds {limit - 1} chars")
    return raw + b"\x00"


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def u8(self) -> int:
        if self.pos + 1 > len(self.data):
            raise InvalidVariant("body truncated")
        v = self.data[self.pos]
        self.pos += 1
        return v

    def cstring(self) -> str:
        end = self.data.find(b"\x00", self.pos)
        if end < 0:
            raise InvalidVariant("unterminated C-octet string")
        raw = self.data[self.pos:end]
        self.pos = end + 1
        return raw.decode("ascii", errors="replace")

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise InvalidVariant("body truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk


def _encode_bind(b: BindTransceiver) -> bytes:
    return b"".join([
        _cstring(b.system_id, 16, "system_id"),
        _cstring(b.password, 9, "password"),
        _cstring(b.system_type, 13, "system_type"),
        bytes([b.interface_version & 0xFF, b.addr_ton & 0xFF, b.addr_npi & 0xFF]),
        _cstring(b.address_range, 41, "address_range"),
    ])


def _decode_bind(data: bytes) -> BindTransceiver:
    r = _Reader(data)
    return BindTransceiver(
        system_id=r.cstring(),
        password=r.cstring(),
        system_type=r.cstring(),
        interface_version=r.u8(),
        addr_ton=r.u8(),
        addr_npi=r.u8(),
        address_range=r.cstring(),
    )


def _encode_bind_resp(b: BindTransceiverResp) -> bytes:
    return _cstring(b.system_id, 16, "system_id")


def _decode_bind_resp(data: bytes) -> BindTransceiverResp:
    if not data:
        return BindTransceiverResp()  # error resps may omit the body
    return BindTransceiverResp(system_id=_Reader(data).cstring())


def _encode_sm(b: SubmitSm | DeliverSm) -> bytes:
    if len(b.short_message) > MAX_SHORT_MESSAGE:
        raise FieldTooLong(
            f"short_message is {len(b.short_message)} bytes, max {MAX_SHORT_MESSAGE}"
        )
    return b"".join([
        _cstring(b.service_type, 6, "service_type"),
        bytes([b.source_addr_ton & 0xFF, b.source_addr_npi & 0xFF]),
        _cstring(b.source_addr, 21, "source_addr"),
        bytes([b.dest_addr_ton & 0xFF, b.dest_addr_npi & 0xFF]),
        _cstring(b.destination_addr, 21, "destination_addr"),
        bytes([b.esm_class & 0xFF, b.protocol_id & 0xFF, b.priority_flag & 0xFF]),
        _cstring(b.schedule_delivery_time, 17, "schedule_delivery_time"),
        _cstring(b.validity_period, 17, "validity_period"),
        bytes([
            b.registered_delivery & 0xFF,
            b.replace_if_present_flag & 0xFF,
            b.data_coding & 0xFF,
            b.sm_default_msg_id & 0xFF,
            len(b.short_message),
        ]),
        b.short_message,
    ])


def _decode_sm(data: bytes, cls):
    r = _Reader(data)
    service_type = r.cstring()
    source_addr_ton = r.u8()
    source_addr_npi = r.u8()
    source_addr = r.cstring()
    dest_addr_ton = r.u8()
    dest_addr_npi = r.u8()
    destination_addr = r.cstring()
    esm_class = r.u8()
    protocol_id = r.u8()
    priority_flag = r.u8()
    schedule_delivery_time = r.cstring()
    validity_period = r.cstring()
    registered_delivery = r.u8()
    replace_if_present_flag = r.u8()
    data_coding = r.u8()
    sm_default_msg_id = r.u8()
    sm_length = r.u8()
    short_message = r.take(sm_length)
    return cls(
        service_type=service_type,
        source_addr_ton=source_addr_ton,
        source_addr_npi=source_addr_npi,
        source_addr=source_addr,
        dest_addr_ton=dest_addr_ton,
        dest_addr_npi=dest_addr_npi,
        destination_addr=destination_addr,
        esm_class=esm_class,
        protocol_id=protocol_id,
        priority_flag=priority_flag,
        schedule_delivery_time=schedule_delivery_time,
        validity_period=validity_period,
        registered_delivery=registered_delivery,
        replace_if_present_flag=replace_if_present_flag,
        data_coding=data_coding,
        sm_default_msg_id=sm_default_msg_id,
        short_message=short_message,
    )


def _encode_sm_resp(b: SubmitSmResp | DeliverSmResp) -> bytes:
    return _cstring(b.message_id, 65, "message_id")


def _decode_sm_resp(data: bytes, cls):
    if not data:
        return cls()  # error resps may omit the body
    return cls(message_id=_Reader(data).cstring())


_EMPTY_BODIES = {
    ENQUIRE_LINK: EnquireLink,
    ENQUIRE_LINK_RESP: EnquireLinkResp,
    UNBIND: Unbind,
    UNBIND_RESP: UnbindResp,
    GENERIC_NACK: GenericNack,
}


def _encode_body(body: Body) -> bytes:
    if isinstance(body, BindTransceiver):
        return _encode_bind(body)
    if isinstance(body, BindTransceiverResp):
        return _encode_bind_resp(body)
    if isinstance(body, (SubmitSm, DeliverSm)):
        return _encode_sm(body)
    if isinstance(body, (SubmitSmResp, DeliverSmResp)):
        return _encode_sm_resp(body)
    if isinstance(body, RawBody):
        return body.data
    if type(body) in _EMPTY_BODIES.values():
        return b""
    raise InvalidVariant(f"unsupported body type {type(body).__name__}")


def _decode_body(command_id: int, data: bytes) -> Body:
    try:
        if command_id == BIND_TRANSCEIVER:
            return _decode_bind(data)
        if command_id == BIND_TRANSCEIVER_RESP:
            return _decode_bind_resp(data)
        if command_id == SUBMIT_SM:
            return _decode_sm(data, SubmitSm)
        if command_id == SUBMIT_SM_RESP:
            return _decode_sm_resp(data, SubmitSmResp)
        if command_id == DELIVER_SM:
            return _decode_sm(data, DeliverSm)
        if command_id == DELIVER_SM_RESP:
            return _decode_sm_resp(data, DeliverSmResp)
        if command_id in _EMPTY_BODIES:
            return _EMPTY_BODIES[command_id]()
    except InvalidVariant:
        # Known command with a body we cannot parse: hand it back raw so
        # the session can generic_nack it instead of tearing down.
        return RawBody(raw_command_id=command_id, data=data)
    return RawBody(raw_command_id=command_id, data=data)


def encode(pdu: Pdu) -> bytes:
    body = _encode_body(pdu.body)
    header = struct.pack(
        ">IIII",
        HEADER_LEN + len(body),
        pdu.command_id & 0xFFFFFFFF,
        pdu.command_status & 0xFFFFFFFF,
        pdu.sequence_number & 0xFFFFFFFF,
    )
    return header + body


def decode(buf: bytes) -> tuple[Pdu, int]:
    """Decode one PDU from the front of *buf*.

    Returns ``(pdu, consumed)``.  Raises :class:`NeedMore` when the
    buffer holds less than one full frame and :class:`BadLength` when
    the claimed length is impossible; never raises anything else, no
    matter the input.
    """
    if len(buf) < 4:
        raise NeedMore(4 - len(buf))
    (length,) = struct.unpack(">I", buf[:4])
    if length < HEADER_LEN or length > MAX_PDU_LEN:
        raise BadLength(f"command_length {length} outside [16, {MAX_PDU_LEN}]")
    if len(buf) < length:
        raise NeedMore(length - len(buf))
    _, command_id, command_status, sequence_number = struct.unpack(
        ">IIII", buf[:HEADER_LEN]
    )
    body = _decode_body(command_id, bytes(buf[HEADER_LEN:length]))
    return Pdu(command_status=command_status, sequence_number=sequence_number, body=body), length
