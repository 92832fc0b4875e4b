"""Deterministic fake SMS center.

Accepts transceiver binds, acks submit_sm with monotonically increasing
decimal message ids, reassembles concatenated segments, emits delivery
receipts, and injects faults on demand.  All randomness (ack latency,
response drops) comes from per-connection RNGs seeded from ``rng_seed``,
so identical seeds and client behavior produce identical ledgers.
"""

from __future__ import annotations

import json
import logging
import socket
import threading
import time
from dataclasses import dataclass, field

from .smpp import pdu, receipts, segmentation

log = logging.getLogger("announcer.simsc")

FAULT_DROP_NEXT_RESP = "DROP_NEXT_RESP"
FAULT_CLOSE_CONNECTION = "CLOSE_CONNECTION"
FAULT_SET_STATUS = "SET_STATUS"

_RECEIPT_STATS = {"DELIVRD", "EXPIRED", "UNDELIV", "REJECTD"}


class PortInUse(OSError):
    pass


@dataclass
class SimConfig:
    port: int = 0  # 0 picks a free port
    accounts: list[tuple[str, str]] = field(
        default_factory=lambda: [("announcer", "secret")]
    )
    ack_latency_ms: int | tuple[int, int] = 0
    drop_resp_rate: float = 0.0
    reject_status: int | None = None
    receipt_delay_ms: int = 0
    rng_seed: int = 0
    receipt_stat: str = "DELIVRD"

    def __post_init__(self):
        if not 0.0 <= self.drop_resp_rate <= 1.0:
            raise ValueError("drop_resp_rate must be within [0, 1]")


@dataclass
class LedgerEntry:
    seq: int
    dest: str
    text: str
    segments: int
    timestamp: float
    message_id: str
    connection: int


@dataclass
class SimLedger:
    received: list[LedgerEntry]
    max_outstanding: dict[int, int]  # per connection
    submit_seqs: dict[int, list[int]]  # per connection, arrival order

    def signature(self) -> list[tuple]:
        """Run-comparable view: everything except wallclock timestamps."""
        return [
            (e.seq, e.dest, e.text, e.segments, e.message_id, e.connection)
            for e in self.received
        ]


class _Conn:
    def __init__(self, sim: "SmscSim", sock: socket.socket, index: int, rng_seed: int):
        import random

        self.sim = sim
        self.sock = sock
        self.index = index
        self.rng = random.Random((rng_seed << 8) ^ index)
        self.bound_as: str | None = None
        self.outstanding = 0
        self.out_seq = 0  # sim-originated PDUs (receipts)
        self.send_lock = threading.Lock()
        self.closed = threading.Event()
        # partial concat messages: ref -> {idx: (dest, text)}
        self.partials: dict[int, dict[int, tuple[str, str]]] = {}
        self.partial_meta: dict[int, tuple[int, int, str]] = {}  # ref -> (total, first_seq, first_msgid)

    def next_out_seq(self) -> int:
        self.out_seq += 1
        return self.out_seq

    def send(self, p: pdu.Pdu) -> None:
        data = pdu.encode(p)
        with self.send_lock:
            try:
                self.sock.sendall(data)
            except OSError:
                self.closed.set()

    def close(self) -> None:
        self.closed.set()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class SmscSim:
    """Run with :func:`run`; stop via :meth:`stop`."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self._ledger: list[LedgerEntry] = []
        self._ledger_lock = threading.Lock()
        self._max_outstanding: dict[int, int] = {}
        self._submit_seqs: dict[int, list[int]] = {}
        self._next_message_id = 0
        self._conns: list[_Conn] = []
        self._conn_index = 0
        self._stop = threading.Event()
        self._fault_lock = threading.Lock()
        self._drop_next = False
        self._close_next = False
        self._forced_status: int | None = cfg.reject_status
        self._receipt_stat = cfg.receipt_stat
        self._timers: list[threading.Timer] = []

        try:
            self._listener = socket.create_server(("127.0.0.1", cfg.port))
        except OSError as exc:
            raise PortInUse(f"port {cfg.port}: {exc}") from exc
        self.port = self._listener.getsockname()[1]
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="simsc-accept", daemon=True
        )
        self._accept_thread.start()

    # -- public surface ------------------------------------------------

    def ledger(self) -> SimLedger:
        with self._ledger_lock:
            return SimLedger(
                received=list(self._ledger),
                max_outstanding=dict(self._max_outstanding),
                submit_seqs={k: list(v) for k, v in self._submit_seqs.items()},
            )

    def inject(self, fault: str, value: int | str | None = None) -> None:
        with self._fault_lock:
            if fault == FAULT_DROP_NEXT_RESP:
                self._drop_next = True
            elif fault == FAULT_CLOSE_CONNECTION:
                self._close_next = True
            elif fault == FAULT_SET_STATUS:
                if isinstance(value, str) and value in _RECEIPT_STATS:
                    # force the receipt outcome; submits still succeed
                    self._receipt_stat = value
                elif value in (None, 0):
                    self._forced_status = None
                    self._receipt_stat = self.cfg.receipt_stat
                else:
                    self._forced_status = int(value)
            else:
                raise ValueError(f"unknown fault {fault!r}")

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        for conn in list(self._conns):
            conn.close()
        for t in self._timers:
            t.cancel()

    # -- internals -----------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            self._conn_index += 1
            conn = _Conn(self, sock, self._conn_index, self.cfg.rng_seed)
            self._conns.append(conn)
            threading.Thread(
                target=self._conn_loop, args=(conn,),
                name=f"simsc-conn-{conn.index}", daemon=True,
            ).start()

    def _conn_loop(self, conn: _Conn) -> None:
        buf = b""
        sock = conn.sock
        while not self._stop.is_set() and not conn.closed.is_set():
            try:
                chunk = sock.recv(4096)
            except OSError:
                break
            if not chunk:
                break
            buf += chunk
            while True:
                try:
                    frame, consumed = pdu.decode(buf)
                except pdu.NeedMore:
                    break
                except pdu.BadLength:
                    conn.send(pdu.response(pdu.GenericNack(), 0, pdu.ESME_RSYSERR))
                    conn.close()
                    return
                buf = buf[consumed:]
                with self._fault_lock:
                    close_now = self._close_next
                    if close_now:
                        self._close_next = False
                if close_now:
                    conn.close()
                    return
                self._handle(conn, frame)
        conn.closed.set()

    def _handle(self, conn: _Conn, frame: pdu.Pdu) -> None:
        body = frame.body
        if isinstance(body, pdu.BindTransceiver):
            self._handle_bind(conn, frame)
        elif isinstance(body, pdu.SubmitSm):
            self._handle_submit(conn, frame)
        elif isinstance(body, pdu.EnquireLink):
            conn.send(pdu.response(pdu.EnquireLinkResp(), frame.sequence_number))
        elif isinstance(body, pdu.Unbind):
            conn.send(pdu.response(pdu.UnbindResp(), frame.sequence_number))
            conn.close()
        elif isinstance(body, pdu.DeliverSmResp):
            pass  # ack for one of our receipts
        elif isinstance(body, pdu.RawBody):
            conn.send(
                pdu.response(pdu.GenericNack(), frame.sequence_number, pdu.ESME_RINVCMDID)
            )
        # responses from the peer (enquire_link_resp etc.) need no action

    def _handle_bind(self, conn: _Conn, frame: pdu.Pdu) -> None:
        body = frame.body
        known = {sid: pw for sid, pw in self.cfg.accounts}
        if body.system_id not in known:
            status = pdu.ESME_RINVSYSID
        elif known[body.system_id] != body.password:
            status = pdu.ESME_RINVPASWD
        else:
            status = pdu.ESME_ROK
            conn.bound_as = body.system_id
        conn.send(
            pdu.response(
                pdu.BindTransceiverResp(system_id="SIMSC" if status == 0 else ""),
                frame.sequence_number,
                status,
            )
        )

    def _handle_submit(self, conn: _Conn, frame: pdu.Pdu) -> None:
        body = frame.body
        with self._ledger_lock:
            conn.outstanding += 1
            prev = self._max_outstanding.get(conn.index, 0)
            self._max_outstanding[conn.index] = max(prev, conn.outstanding)
            self._submit_seqs.setdefault(conn.index, []).append(frame.sequence_number)

        if conn.bound_as is None:
            self._respond_submit(conn, frame, pdu.ESME_RINVBNDSTS, None)
            return

        with self._fault_lock:
            status = self._forced_status if self._forced_status is not None else pdu.ESME_ROK
            drop = self._drop_next
            self._drop_next = False
        if not drop and self.cfg.drop_resp_rate > 0:
            drop = conn.rng.random() < self.cfg.drop_resp_rate

        message_id = None
        if status == pdu.ESME_ROK:
            with self._ledger_lock:
                self._next_message_id += 1
                message_id = str(self._next_message_id)

        latency = self.cfg.ack_latency_ms
        if isinstance(latency, tuple):
            delay = conn.rng.uniform(latency[0], latency[1]) / 1000.0
        else:
            delay = latency / 1000.0

        def respond():
            # resp goes on the wire before any receipt for this message
            if drop:
                with self._ledger_lock:
                    conn.outstanding -= 1
            else:
                self._respond_submit(conn, frame, status, message_id)
            if message_id is not None:
                self._record_submit(conn, frame, message_id)

        if delay > 0:
            timer = threading.Timer(delay, respond)
            timer.daemon = True
            self._timers.append(timer)
            timer.start()
        else:
            respond()

    def _respond_submit(
        self, conn: _Conn, frame: pdu.Pdu, status: int, message_id: str | None
    ) -> None:
        with self._ledger_lock:
            conn.outstanding -= 1
        conn.send(
            pdu.response(
                pdu.SubmitSmResp(message_id=message_id or ""),
                frame.sequence_number,
                status,
            )
        )

    def _record_submit(self, conn: _Conn, frame: pdu.Pdu, message_id: str) -> None:
        body = frame.body
        udh = None
        if body.esm_class & pdu.ESM_UDHI:
            udh = segmentation.parse_udh(body.short_message)
        if udh is None:
            text = _safe_decode(body.short_message, body.data_coding)
            self._append_entry(conn, frame.sequence_number, body.destination_addr,
                               text, 1, message_id)
            return

        ref, total, idx, payload = udh
        text_part = _safe_decode(payload, body.data_coding)
        parts = conn.partials.setdefault(ref, {})
        if ref not in conn.partial_meta:
            conn.partial_meta[ref] = (total, frame.sequence_number, message_id)
        parts[idx] = (body.destination_addr, text_part)
        total_expected = conn.partial_meta[ref][0]
        if len(parts) >= total_expected:
            _, first_seq, first_msgid = conn.partial_meta.pop(ref)
            dest = parts[min(parts)][0]
            text = "".join(parts[i][1] for i in sorted(parts))
            del conn.partials[ref]
            self._append_entry(conn, first_seq, dest, text, total_expected, first_msgid)

    def _append_entry(
        self, conn: _Conn, seq: int, dest: str, text: str, segments: int, message_id: str
    ) -> None:
        with self._ledger_lock:
            self._ledger.append(
                LedgerEntry(
                    seq=seq, dest=dest, text=text, segments=segments,
                    timestamp=time.time(), message_id=message_id,
                    connection=conn.index,
                )
            )
        if self.cfg.receipt_delay_ms >= 0:  # negative disables receipts
            with self._fault_lock:
                stat = self._receipt_stat
            delay = self.cfg.receipt_delay_ms / 1000.0
            if delay > 0:
                timer = threading.Timer(
                    delay, self._send_receipt, args=(conn, dest, text, message_id, stat)
                )
                timer.daemon = True
                self._timers.append(timer)
                timer.start()
            else:
                self._send_receipt(conn, dest, text, message_id, stat)

    def _send_receipt(
        self, conn: _Conn, dest: str, text: str, message_id: str, stat: str
    ) -> None:
        if conn.closed.is_set():
            return
        body = pdu.DeliverSm(
            source_addr=dest,
            destination_addr="SIMSC",
            short_message=receipts.format_delivery_receipt(message_id, stat, text),
            esm_class=0x04,  # delivery-receipt bit
        )
        conn.send(pdu.request(body, conn.next_out_seq()))


def run(cfg: SimConfig) -> SmscSim:
    return SmscSim(cfg)


def ledger_json_lines(ledger: SimLedger) -> str:
    lines = []
    for e in ledger.received:
        lines.append(json.dumps({
            "seq": e.seq,
            "dest": e.dest,
            "text": e.text,
            "segments": e.segments,
            "timestamp": e.timestamp,
            "message_id": e.message_id,
            "connection": e.connection,
        }))
    return "\n".join(lines)


def _safe_decode(payload: bytes, data_coding: int) -> str:
    try:
        return segmentation.decode_payload(payload, data_coding)
    except Exception:
        return payload.decode("latin-1")
