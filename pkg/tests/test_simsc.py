import socket
import struct
import time

import pytest

from announcer import simsc
from announcer.smpp import pdu


@pytest.fixture
def sim():
    # receipts disabled so acks are the only traffic; receipt tests
    # build their own instance
    handle = simsc.run(simsc.SimConfig(accounts=[("user", "pw")], receipt_delay_ms=-1))
    yield handle
    handle.stop()


@pytest.fixture
def receipt_sim():
    handle = simsc.run(simsc.SimConfig(accounts=[("user", "pw")], receipt_delay_ms=0))
    yield handle
    handle.stop()


class RawClient:
    """Minimal hand-rolled SMPP peer so the sim is tested independently
    of the gateway client."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.buf = b""
        self.seq = 0

    def send(self, body, status=0, seq=None):
        if seq is None:
            self.seq += 1
            seq = self.seq
        self.sock.sendall(pdu.encode(pdu.Pdu(status, seq, body)))
        return seq

    def recv(self, timeout=5.0):
        self.sock.settimeout(timeout)
        while True:
            try:
                frame, consumed = pdu.decode(self.buf)
                self.buf = self.buf[consumed:]
                return frame
            except pdu.NeedMore:
                chunk = self.sock.recv(4096)
                if not chunk:
                    raise ConnectionError("closed")
                self.buf += chunk

    def bind(self, system_id="user", password="pw"):
        seq = self.send(pdu.BindTransceiver(system_id=system_id, password=password))
        resp = self.recv()
        assert resp.sequence_number == seq
        return resp

    def submit(self, dest="60123456789", text=b"hi", esm_class=0, data_coding=0):
        return self.send(
            pdu.SubmitSm(
                source_addr="TEST",
                destination_addr=dest,
                short_message=text,
                esm_class=esm_class,
                data_coding=data_coding,
            )
        )

    def close(self):
        self.sock.close()


def test_bind_ok_and_submit_acked(sim):
    c = RawClient(sim.port)
    resp = c.bind()
    assert resp.command_status == 0
    seq = c.submit(text=b"hello")
    resp = c.recv()
    assert resp.sequence_number == seq
    assert resp.command_status == 0
    assert resp.body.message_id == "1"
    entries = sim.ledger().received
    assert len(entries) == 1
    assert entries[0].dest == "60123456789"
    assert entries[0].text == "hello"
    c.close()


def test_bind_wrong_password_gets_invpaswd(sim):
    c = RawClient(sim.port)
    resp = c.bind(password="nope")
    assert resp.command_status == 0x0000000E
    c.close()


def test_bind_unknown_system_id(sim):
    c = RawClient(sim.port)
    resp = c.bind(system_id="ghost")
    assert resp.command_status == 0x0000000F
    c.close()


def test_submit_before_bind_rejected(sim):
    c = RawClient(sim.port)
    c.submit()
    resp = c.recv()
    assert resp.command_status == pdu.ESME_RINVBNDSTS
    assert sim.ledger().received == []
    c.close()


def test_two_clients_served_concurrently(sim):
    a, b = RawClient(sim.port), RawClient(sim.port)
    assert a.bind().command_status == 0
    assert b.bind().command_status == 0
    a.submit(dest="601", text=b"from-a")
    b.submit(dest="602", text=b"from-b")
    assert a.recv().command_status == 0
    assert b.recv().command_status == 0
    texts = {e.text for e in sim.ledger().received}
    assert texts == {"from-a", "from-b"}
    a.close()
    b.close()


def test_message_ids_monotonic(sim):
    c = RawClient(sim.port)
    c.bind()
    ids = []
    for i in range(3):
        c.submit(text=f"m{i}".encode())
        ids.append(int(c.recv().body.message_id))
    assert ids == sorted(ids)
    assert len(set(ids)) == 3
    c.close()


def test_segments_reassembled_by_udh(sim):
    c = RawClient(sim.port)
    c.bind()
    udh1 = bytes([5, 0, 3, 9, 2, 1])
    udh2 = bytes([5, 0, 3, 9, 2, 2])
    c.submit(text=udh1 + b"part-one ", esm_class=pdu.ESM_UDHI)
    c.recv()
    c.submit(text=udh2 + b"part-two", esm_class=pdu.ESM_UDHI)
    c.recv()
    entries = sim.ledger().received
    assert len(entries) == 1
    assert entries[0].text == "part-one part-two"
    assert entries[0].segments == 2
    c.close()


def test_enquire_link_echoed(sim):
    c = RawClient(sim.port)
    c.bind()
    seq = c.send(pdu.EnquireLink())
    resp = c.recv()
    assert isinstance(resp.body, pdu.EnquireLinkResp)
    assert resp.sequence_number == seq
    c.close()


def test_unknown_command_nacked(sim):
    c = RawClient(sim.port)
    c.bind()
    wire = struct.pack(">IIII", 16, 0x00000042, 0, 77)
    c.sock.sendall(wire)
    resp = c.recv()
    assert isinstance(resp.body, pdu.GenericNack)
    assert resp.sequence_number == 77
    assert resp.command_status == pdu.ESME_RINVCMDID
    c.close()


def test_inject_set_status_persists_until_cleared(sim):
    c = RawClient(sim.port)
    c.bind()
    sim.inject(simsc.FAULT_SET_STATUS, 0x58)
    for _ in range(2):
        c.submit()
        assert c.recv().command_status == 0x58
    sim.inject(simsc.FAULT_SET_STATUS, None)
    c.submit()
    assert c.recv().command_status == 0
    c.close()


def test_inject_drop_next_resp(sim):
    c = RawClient(sim.port)
    c.bind()
    sim.inject(simsc.FAULT_DROP_NEXT_RESP)
    c.submit(text=b"dropped-ack")
    with pytest.raises(socket.timeout):
        c.recv(timeout=0.5)
    # the message was still accepted
    assert [e.text for e in sim.ledger().received] == ["dropped-ack"]
    # next one is acked normally
    c.submit(text=b"acked")
    assert c.recv(timeout=5).command_status == 0
    c.close()


def test_inject_close_connection(sim):
    c = RawClient(sim.port)
    c.bind()
    sim.inject(simsc.FAULT_CLOSE_CONNECTION)
    c.submit()
    with pytest.raises((ConnectionError, socket.timeout, OSError)):
        c.recv(timeout=2)
    c.close()


def test_delivery_receipt_sent_after_ack(receipt_sim):
    c = RawClient(receipt_sim.port)
    c.bind()
    c.submit(text=b"want receipt")
    resp = c.recv()
    msg_id = resp.body.message_id
    receipt_frame = c.recv()
    assert isinstance(receipt_frame.body, pdu.DeliverSm)
    assert f"id:{msg_id}".encode() in receipt_frame.body.short_message
    assert b"stat:DELIVRD" in receipt_frame.body.short_message
    c.close()


def test_receipt_stat_forced_via_set_status(receipt_sim):
    receipt_sim.inject(simsc.FAULT_SET_STATUS, "UNDELIV")
    c = RawClient(receipt_sim.port)
    c.bind()
    c.submit()
    c.recv()  # ack
    receipt_frame = c.recv()
    assert b"stat:UNDELIV" in receipt_frame.body.short_message
    c.close()


def test_seeded_runs_produce_identical_ledgers():
    def run_script(handle):
        c = RawClient(handle.port)
        c.bind()
        for i in range(10):
            c.submit(dest=f"60{i:03d}", text=f"msg {i}".encode())
            try:
                c.recv(timeout=1)
            except socket.timeout:
                pass
        time.sleep(0.2)
        c.close()

    sigs = []
    for _ in range(2):
        handle = simsc.run(
            simsc.SimConfig(
                accounts=[("user", "pw")], drop_resp_rate=0.3, rng_seed=42,
                receipt_delay_ms=-1,
            )
        )
        run_script(handle)
        sigs.append(handle.ledger().signature())
        handle.stop()
    assert sigs[0] == sigs[1]
    assert len(sigs[0]) == 10  # drops lose resps, never the messages


def test_ledger_empty_before_traffic(sim):
    assert sim.ledger().received == []


def test_port_in_use(sim):
    with pytest.raises(simsc.PortInUse):
        simsc.run(simsc.SimConfig(port=sim.port))
