"""Batch dispatch: SMS through the gateway session, email to the spool.

Per-message statuses are committed as dispatch progresses, so a crash
mid-batch never re-sends a message already marked SENT; a partial
failure never aborts the rest of the batch.
"""

from __future__ import annotations

import logging
import os
import queue
import tempfile
import threading
import time
from email.utils import formatdate
from pathlib import Path

from ..gateway import GatewayError
from ..smpp import receipts as receipt_codec
from . import store as st

log = logging.getLogger("announcer.dispatch")

FROM_ADDR = "announcer@campus.local"

_SUBJECTS = {
    st.FEES_AUTORUN: "Tuition fee reminder",
    st.FEES_MANUAL: "Tuition fee reminder",
    st.LIBRARY_AUTORUN: "Overdue book reminder",
    st.LECTURER_ANNOUNCE: "Announcement",
}


class SpoolError(OSError):
    code = "SPOOL_IO_ERROR"


def spool_email(msg: st.OutboundMessage, spool_dir: str | Path, subject: str) -> Path:
    """Write one RFC-5322-style file ``<msg_id>.eml``; temp-write then
    rename so readers never see a partial file."""
    spool = Path(spool_dir)
    try:
        spool.mkdir(parents=True, exist_ok=True)
        content = (
            f"From: {FROM_ADDR}\r\n"
            f"To: {msg.dest}\r\n"
            f"Subject: {subject}\r\n"
            f"Date: {formatdate(usegmt=True)}\r\n"
            f"\r\n"
            f"{msg.body}\r\n"
        )
        fd, tmp_name = tempfile.mkstemp(dir=spool, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
            final = spool / f"{msg.msg_id}.eml"
            os.replace(tmp_name, final)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
        return final
    except OSError as exc:
        raise SpoolError(f"spool write failed: {exc}") from exc


def dispatch_batch(
    batch_store: st.BatchStore,
    batch_id: int,
    session_provider,
    spool_dir: str | Path,
    cooldown_days: int = 7,
    now_fn=time.time,
) -> st.DispatchReport:
    """Send every PENDING message of an APPROVED batch.

    *session_provider* is a zero-arg callable returning a bound gateway
    session; it is consulted per SMS so a reconnect mid-batch is
    possible.
    """
    with batch_store.batch_lock(batch_id):
        batch = batch_store.transition(batch_id, st.EV_START_DISPATCH)
        subject = _SUBJECTS[batch.kind]
        for msg in batch_store.messages_for_batch(batch_id):
            if msg.status != st.MSG_PENDING:
                continue
            now_ts = now_fn()
            # a different batch may have notified this key since build time
            if msg.reason is not None and batch_store.dedup_live(
                msg.student_id, msg.reason, msg.reference or "",
                now_ts, cooldown_days, exclude_batch_id=batch_id,
            ):
                batch_store.set_message_status(msg.msg_id, st.MSG_SKIPPED_DEDUP)
                continue
            if msg.channel == st.CH_SMS:
                status, smsc_id = _send_sms(session_provider, msg)
            else:
                status, smsc_id = _spool(msg, spool_dir, subject)
            batch_store.set_message_status(
                msg.msg_id, status, smsc_message_id=smsc_id, bump_attempts=True
            )
            if status == st.MSG_SENT and msg.reason is not None:
                batch_store.write_dedup(
                    msg.student_id, msg.reason, msg.reference or "",
                    sent_at=now_ts, source_batch_id=batch_id,
                )
        batch_store.transition(batch_id, st.EV_COMPLETE)
    return batch_store.report(batch_id)


def resume_incomplete_batches(
    batch_store: st.BatchStore, session_provider, spool_dir, cooldown_days: int = 7
) -> list[int]:
    """Pick up batches a crash left DISPATCHING; SENT messages stay sent."""
    resumed = []
    for batch in batch_store.list_batches(st.DISPATCHING):
        log.info("resuming interrupted batch %d", batch.batch_id)
        # rewind the state so dispatch_batch can drive the machine again
        with batch_store.db.lock:
            batch_store.db.conn.execute(
                "UPDATE batches SET state = ? WHERE batch_id = ?",
                (st.APPROVED, batch.batch_id),
            )
            batch_store.db.conn.commit()
        dispatch_batch(
            batch_store, batch.batch_id, session_provider, spool_dir, cooldown_days
        )
        resumed.append(batch.batch_id)
    return resumed


def _send_sms(session_provider, msg: st.OutboundMessage) -> tuple[str, str | None]:
    try:
        session = session_provider()
        outcome = session.submit(msg.dest, msg.body)
        return st.MSG_SENT, outcome.message_id
    except GatewayError as exc:
        log.warning("message %d failed: %s", msg.msg_id, exc)
        return st.MSG_FAILED, None


def _spool(msg: st.OutboundMessage, spool_dir, subject: str) -> tuple[str, str | None]:
    try:
        spool_email(msg, spool_dir, subject)
        return st.MSG_SENT, None
    except SpoolError as exc:
        log.warning("message %d spool failed: %s", msg.msg_id, exc)
        return st.MSG_FAILED, None


def apply_receipt(batch_store: st.BatchStore, receipt: receipt_codec.Receipt) -> bool:
    """Map a delivery receipt onto its message's terminal status."""
    msg = batch_store.message_by_smsc_id(receipt.message_id)
    if msg is None or msg.status != st.MSG_SENT:
        return False
    if receipt.stat == receipt_codec.STAT_DELIVRD:
        batch_store.set_message_status(msg.msg_id, st.MSG_DELIVERED)
        return True
    if receipt.stat in (
        receipt_codec.STAT_EXPIRED,
        receipt_codec.STAT_UNDELIV,
        receipt_codec.STAT_REJECTD,
    ):
        batch_store.set_message_status(msg.msg_id, st.MSG_FAILED)
        return True
    return False  # UNKNOWN stat: leave as SENT


class ReceiptPump:
    """Receives receipts on the gateway reader thread and applies them
    on a worker, since reader callbacks must not block.  A receipt that
    beats its own submit_sm_resp bookkeeping is retried briefly."""

    def __init__(self, batch_store: st.BatchStore, retries: int = 5, retry_delay: float = 0.1):
        self._store = batch_store
        self._queue: queue.Queue = queue.Queue()
        self._retries = retries
        self._retry_delay = retry_delay
        self._stop = threading.Event()
        self._worker = threading.Thread(
            target=self._run, name="receipt-pump", daemon=True
        )
        self._worker.start()

    def handler(self, receipt: receipt_codec.Receipt) -> None:
        self._queue.put(receipt)

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                receipt = self._queue.get(timeout=0.2)
            except queue.Empty:
                continue
            for _ in range(self._retries):
                if apply_receipt(self._store, receipt):
                    break
                if self._stop.wait(self._retry_delay):
                    return

    def stop(self) -> None:
        self._stop.set()
        self._worker.join(timeout=2)
