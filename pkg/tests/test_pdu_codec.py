import random

import pytest

from announcer.smpp import pdu


# Hand-assembled header oracle: length 16, command 0x15, status 0, seq 1.
def test_enquire_link_known_vector():
    p = pdu.request(pdu.EnquireLink(), sequence_number=1)
    assert pdu.encode(p) == bytes.fromhex("00000010000000150000000000000001")


def test_generic_nack_known_vector():
    p = pdu.Pdu(command_status=0, sequence_number=0, body=pdu.GenericNack())
    wire = pdu.encode(p)
    assert len(wire) == 16
    assert wire[4:8] == bytes.fromhex("80000000")


def test_decode_enquire_link():
    wire = bytes.fromhex("00000010000000150000000000000001")
    decoded, consumed = pdu.decode(wire)
    assert consumed == 16
    assert decoded == pdu.request(pdu.EnquireLink(), sequence_number=1)


def test_decode_short_input_reports_missing():
    wire = bytes.fromhex("00000010000000150000000000000001")
    with pytest.raises(pdu.NeedMore) as exc:
        pdu.decode(wire[:10])
    assert exc.value.missing == 6


def test_decode_tiny_buffer():
    with pytest.raises(pdu.NeedMore):
        pdu.decode(b"\x00\x00")


def test_decode_bad_length_small():
    import struct

    with pytest.raises(pdu.BadLength):
        pdu.decode(struct.pack(">IIII", 8, 0x15, 0, 1))


def test_decode_bad_length_huge():
    import struct

    with pytest.raises(pdu.BadLength):
        pdu.decode(struct.pack(">IIII", 1 << 20, 0x15, 0, 1))


def test_submit_sm_too_long():
    body = pdu.SubmitSm(
        source_addr="100", destination_addr="+60123456789", short_message=b"x" * 300
    )
    with pytest.raises(pdu.FieldTooLong):
        pdu.encode(pdu.request(body, 1))


def test_field_too_long_cstring():
    body = pdu.BindTransceiver(system_id="x" * 20, password="pw")
    with pytest.raises(pdu.FieldTooLong):
        pdu.encode(pdu.request(body, 1))


def test_unknown_command_id_decodes_raw():
    import struct

    wire = struct.pack(">IIII", 20, 0x00000077, 0, 9) + b"\x01\x02\x03\x04"
    decoded, consumed = pdu.decode(wire)
    assert consumed == 20
    assert isinstance(decoded.body, pdu.RawBody)
    assert decoded.body.raw_command_id == 0x77
    assert decoded.body.data == b"\x01\x02\x03\x04"
    # raw bodies re-encode verbatim
    assert pdu.encode(decoded) == wire


def test_known_command_with_garbage_body_decodes_raw():
    import struct

    wire = struct.pack(">IIII", 18, pdu.SUBMIT_SM, 0, 3) + b"\xff\xff"
    decoded, _ = pdu.decode(wire)
    assert isinstance(decoded.body, pdu.RawBody)


def test_stream_framing_leaves_trailing_bytes():
    one = pdu.encode(pdu.request(pdu.EnquireLink(), 5))
    two = pdu.encode(pdu.request(pdu.Unbind(), 6))
    buf = one + two
    first, consumed = pdu.decode(buf)
    assert first.body == pdu.EnquireLink()
    second, consumed2 = pdu.decode(buf[consumed:])
    assert second.body == pdu.Unbind()
    assert consumed + consumed2 == len(buf)


def _rand_cstr(rng, limit):
    n = rng.randint(0, limit - 1)
    return "".join(rng.choice("abcdefghijklmnopqrstuvwxyz0123456789+") for _ in range(n))


def random_pdu(rng: random.Random) -> pdu.Pdu:
    seq = rng.randint(1, 0x7FFFFFFF)
    status = rng.choice([0, 0x0E, 0x14, 0x58, 0xFF])
    kind = rng.randrange(11)
    if kind == 0:
        body = pdu.BindTransceiver(
            system_id=_rand_cstr(rng, 16),
            password=_rand_cstr(rng, 9),
            system_type=_rand_cstr(rng, 13),
            interface_version=0x34,
            addr_ton=rng.randrange(256),
            addr_npi=rng.randrange(256),
            address_range=_rand_cstr(rng, 41),
        )
    elif kind == 1:
        body = pdu.BindTransceiverResp(system_id=_rand_cstr(rng, 16))
    elif kind == 2:
        body = pdu.SubmitSm(
            source_addr=_rand_cstr(rng, 21),
            destination_addr=_rand_cstr(rng, 21),
            short_message=bytes(rng.randrange(256) for _ in range(rng.randint(0, 254))),
            esm_class=rng.randrange(256),
            data_coding=rng.choice([0x00, 0x08]),
            registered_delivery=rng.randrange(2),
        )
    elif kind == 3:
        body = pdu.SubmitSmResp(message_id=_rand_cstr(rng, 65))
    elif kind == 4:
        body = pdu.DeliverSm(
            source_addr=_rand_cstr(rng, 21),
            destination_addr=_rand_cstr(rng, 21),
            short_message=bytes(rng.randrange(256) for _ in range(rng.randint(0, 254))),
            esm_class=rng.choice([0x00, 0x04]),
        )
    elif kind == 5:
        body = pdu.DeliverSmResp(message_id=_rand_cstr(rng, 65))
    elif kind == 6:
        body = pdu.EnquireLink()
    elif kind == 7:
        body = pdu.EnquireLinkResp()
    elif kind == 8:
        body = pdu.Unbind()
    elif kind == 9:
        body = pdu.UnbindResp()
    else:
        body = pdu.GenericNack()
    return pdu.Pdu(command_status=status, sequence_number=seq, body=body)


def test_roundtrip_randomized():
    rng = random.Random(1234)
    for _ in range(2000):
        p = random_pdu(rng)
        wire = pdu.encode(p)
        decoded, consumed = pdu.decode(wire)
        assert consumed == len(wire)
        assert decoded == p
        # first u32 is always the frame length
        assert int.from_bytes(wire[:4], "big") == len(wire)


def test_decode_total_on_random_buffers():
    rng = random.Random(987)
    for _ in range(2000):
        buf = bytes(rng.randrange(256) for _ in range(rng.randint(0, 100)))
        try:
            pdu.decode(buf)
        except pdu.CodecError:
            pass
