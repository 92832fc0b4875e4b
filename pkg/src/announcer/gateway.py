"""Bound SMPP transceiver session with windowing, throttling, retry and
delivery-receipt correlation.

One reader thread per session; writers (any number of submitting
threads) serialize through a send lock, a window semaphore bounding
unacked requests, and an even-pacing throttle.  Receipt callbacks run
on the reader thread and must not block.
"""

from __future__ import annotations

import itertools
import logging
import socket
import threading
import time
from dataclasses import dataclass

from .smpp import pdu, receipts, segmentation

log = logging.getLogger("announcer.gateway")

TRANSIENT_STATUSES = {pdu.ESME_RTHROTTLED, pdu.ESME_RMSGQFUL}


class GatewayError(Exception):
    code = "GATEWAY_ERROR"


class ConnectFailed(GatewayError):
    code = "CONNECT_FAILED"


class BindRejected(GatewayError):
    code = "BIND_REJECTED"

    def __init__(self, status: int):
        super().__init__(f"bind rejected with status 0x{status:08X}")
        self.status = status


class SubmitFailed(GatewayError):
    code = "SUBMIT_FAILED"

    def __init__(self, status: int | None, detail: str = ""):
        word = f"status 0x{status:08X}" if status is not None else "timeout"
        super().__init__(f"submit failed: {word} {detail}".rstrip())
        self.status = status


class SessionDown(GatewayError):
    code = "SESSION_DOWN"


@dataclass
class SessionConfig:
    host: str
    port: int
    system_id: str
    password: str
    bind_mode: str = "TRANSCEIVER"
    window_size: int = 10
    throttle: int = 10  # max submit_sm per second
    enquire_interval: float = 30.0
    retry_max: int = 3  # total attempts per segment
    retry_backoff: float = 2.0  # base seconds, exponential
    resp_timeout: float = 10.0
    source_addr: str = "ANNOUNCER"
    connect_timeout: float = 5.0

    def __post_init__(self):
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.throttle < 1:
            raise ValueError("throttle must be >= 1")


@dataclass(frozen=True)
class SubmitOutcome:
    message_id: str
    segments_sent: int


class _Waiter:
    __slots__ = ("event", "response")

    def __init__(self):
        self.event = threading.Event()
        self.response: pdu.Pdu | None = None


class Session:
    def __init__(self, cfg: SessionConfig, sock: socket.socket):
        self.cfg = cfg
        self._sock = sock
        self._send_lock = threading.Lock()
        self._seq = itertools.count(1)
        self._seq_lock = threading.Lock()
        self._pending: dict[int, _Waiter] = {}
        self._pending_lock = threading.Lock()
        self._window = threading.BoundedSemaphore(cfg.window_size)
        self._pace_lock = threading.Lock()
        self._next_send_at = 0.0
        self._ref_counter = itertools.count(1)
        self._receipt_handlers: list = []
        self._down = threading.Event()
        self._closed = threading.Event()
        self._unbind_resp = threading.Event()
        self._reader = threading.Thread(
            target=self._read_loop, name="smpp-reader", daemon=True
        )
        self._heartbeat = threading.Thread(
            target=self._heartbeat_loop, name="smpp-heartbeat", daemon=True
        )

    # -- lifecycle -------------------------------------------------------

    @property
    def is_bound(self) -> bool:
        return not self._down.is_set()

    def _next_seq(self) -> int:
        with self._seq_lock:
            return next(self._seq)

    def _send(self, p: pdu.Pdu) -> None:
        data = pdu.encode(p)
        with self._send_lock:
            try:
                self._sock.sendall(data)
            except OSError as exc:
                self._fail(f"socket write: {exc}")
                raise SessionDown(str(exc)) from exc

    def _request(self, body, timeout: float) -> pdu.Pdu | None:
        """Send one request PDU and wait for its matching response."""
        if self._down.is_set():
            raise SessionDown("session is down")
        seq = self._next_seq()
        waiter = _Waiter()
        with self._pending_lock:
            self._pending[seq] = waiter
        try:
            self._send(pdu.request(body, seq))
            if waiter.event.wait(timeout):
                return waiter.response
            return None
        finally:
            with self._pending_lock:
                self._pending.pop(seq, None)

    def _fail(self, reason: str) -> None:
        if self._down.is_set():
            return
        log.warning("session down: %s", reason)
        self._down.set()
        with self._pending_lock:
            waiters = list(self._pending.values())
            self._pending.clear()
        for w in waiters:
            w.event.set()  # response stays None -> treated as SESSION_DOWN/timeout
        try:
            self._sock.close()
        except OSError:
            pass

    # -- the public operations --------------------------------------------

    def submit(self, dest: str, text: str) -> SubmitOutcome:
        """Segment *text* and submit one submit_sm per segment.

        Blocks while the window is full or the throttle says wait;
        returns the SMSC message id of the first segment.
        """
        payload = segmentation.segment(text, next(self._ref_counter) & 0xFF)
        first_message_id: str | None = None
        for udh, body_bytes in payload.segments:
            esm_class = pdu.ESM_UDHI if udh else 0
            sm = pdu.SubmitSm(
                source_addr=self.cfg.source_addr,
                destination_addr=dest.lstrip("+"),
                short_message=udh + body_bytes,
                esm_class=esm_class,
                data_coding=payload.data_coding,
                registered_delivery=1,
            )
            message_id = self._submit_segment(sm)
            if first_message_id is None:
                first_message_id = message_id
        return SubmitOutcome(
            message_id=first_message_id or "",
            segments_sent=len(payload.segments),
        )

    def _submit_segment(self, sm: pdu.SubmitSm) -> str:
        last_status: int | None = None
        for attempt in range(1, self.cfg.retry_max + 1):
            if attempt > 1:
                time.sleep(self.cfg.retry_backoff * 2 ** (attempt - 2))
            if self._down.is_set():
                raise SessionDown("session is down")
            self._throttle_wait()
            self._window.acquire()
            try:
                resp = self._request(sm, self.cfg.resp_timeout)
            finally:
                self._window.release()
            if resp is None:
                if self._down.is_set():
                    raise SessionDown("session died while awaiting submit_sm_resp")
                last_status = None  # timeout: retryable
                continue
            if resp.command_status == pdu.ESME_ROK:
                message_id = getattr(resp.body, "message_id", "")
                return message_id
            last_status = resp.command_status
            if resp.command_status not in TRANSIENT_STATUSES:
                raise SubmitFailed(resp.command_status, "permanent")
        raise SubmitFailed(last_status, f"after {self.cfg.retry_max} attempts")

    def on_receipt(self, handler) -> None:
        """Register *handler(receipt)*; runs on the reader thread."""
        self._receipt_handlers.append(handler)

    def unbind_and_close(self) -> None:
        """Graceful unbind; waits at most 5 s for the resp. Idempotent."""
        if self._closed.is_set():
            return
        self._closed.set()
        if not self._down.is_set():
            try:
                seq = self._next_seq()
                self._send(pdu.request(pdu.Unbind(), seq))
                self._unbind_resp.wait(5.0)
            except (SessionDown, OSError):
                pass
        self._fail("closed by unbind_and_close")

    # -- pacing ------------------------------------------------------------

    def _throttle_wait(self) -> None:
        # even pacing: one submit every 1/throttle seconds
        interval = 1.0 / self.cfg.throttle
        with self._pace_lock:
            now = time.monotonic()
            slot = max(now, self._next_send_at)
            self._next_send_at = slot + interval
        delay = slot - now
        if delay > 0:
            time.sleep(delay)

    # -- reader / heartbeat --------------------------------------------------

    def _read_loop(self) -> None:
        buf = b""
        while not self._down.is_set():
            try:
                chunk = self._sock.recv(4096)
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
                    self._fail("peer sent an impossible frame length")
                    return
                buf = buf[consumed:]
                self._dispatch_frame(frame)
        self._fail("connection closed by peer")

    def _dispatch_frame(self, frame: pdu.Pdu) -> None:
        body = frame.body
        if isinstance(body, pdu.UnbindResp):
            self._unbind_resp.set()
            return
        if frame.is_response:
            # matched purely by sequence_number; out-of-order arrival is fine
            with self._pending_lock:
                waiter = self._pending.get(frame.sequence_number)
            if waiter is not None:
                waiter.response = frame
                waiter.event.set()
            else:
                log.debug("unmatched response seq=%d", frame.sequence_number)
            return
        if isinstance(body, pdu.DeliverSm):
            try:
                self._send(pdu.response(pdu.DeliverSmResp(), frame.sequence_number))
            except SessionDown:
                return
            try:
                receipt = receipts.parse_delivery_receipt(body.short_message)
            except receipts.NotAReceipt:
                log.info("non-receipt deliver_sm dropped (seq=%d)", frame.sequence_number)
                return
            for handler in self._receipt_handlers:
                try:
                    handler(receipt)
                except Exception:
                    log.exception("receipt handler failed")
            return
        if isinstance(body, pdu.EnquireLink):
            try:
                self._send(pdu.response(pdu.EnquireLinkResp(), frame.sequence_number))
            except SessionDown:
                pass
            return
        if isinstance(body, pdu.Unbind):
            try:
                self._send(pdu.response(pdu.UnbindResp(), frame.sequence_number))
            except SessionDown:
                pass
            self._fail("peer requested unbind")
            return
        if isinstance(body, pdu.RawBody):
            try:
                self._send(
                    pdu.response(
                        pdu.GenericNack(), frame.sequence_number, pdu.ESME_RINVCMDID
                    )
                )
            except SessionDown:
                pass
            return
        log.debug("ignored frame command_id=0x%08X", frame.command_id)

    def _heartbeat_loop(self) -> None:
        misses = 0
        while not self._down.is_set():
            if self._down.wait(self.cfg.enquire_interval):
                return
            try:
                resp = self._request(pdu.EnquireLink(), self.cfg.enquire_interval)
            except SessionDown:
                return
            if resp is None:
                misses += 1
                if misses >= 2:  # two consecutive unanswered -> down
                    self._fail("two consecutive enquire_link timeouts")
                    return
            else:
                misses = 0


def connect_and_bind(cfg: SessionConfig) -> Session:
    """TCP connect and bind_transceiver; heartbeat starts on success."""
    try:
        sock = socket.create_connection((cfg.host, cfg.port), timeout=cfg.connect_timeout)
    except OSError as exc:
        raise ConnectFailed(f"{cfg.host}:{cfg.port}: {exc}") from exc
    sock.settimeout(None)
    session = Session(cfg, sock)
    session._reader.start()
    bind = pdu.BindTransceiver(system_id=cfg.system_id, password=cfg.password)
    resp = session._request(bind, cfg.resp_timeout)
    if resp is None:
        session._fail("bind timed out")
        raise ConnectFailed("no bind_transceiver_resp")
    if resp.command_status != pdu.ESME_ROK:
        session._fail("bind rejected")
        raise BindRejected(resp.command_status)
    session._heartbeat.start()
    log.info("bound to %s:%d as %s", cfg.host, cfg.port, cfg.system_id)
    return session
