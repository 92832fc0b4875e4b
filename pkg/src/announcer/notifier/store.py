"""Durable batches, outbound messages and dedup keys.

Lives in the same SQLite file as the registry.  Every state change
commits before returning, so approvals and per-message send marks
survive a crash; a restart can resume DISPATCHING batches without
re-sending anything already marked SENT.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime, timezone

from ..registry import Database

# batch kinds
LECTURER_ANNOUNCE = "LECTURER_ANNOUNCE"
FEES_AUTORUN = "FEES_AUTORUN"
FEES_MANUAL = "FEES_MANUAL"
LIBRARY_AUTORUN = "LIBRARY_AUTORUN"
KINDS = (LECTURER_ANNOUNCE, FEES_AUTORUN, FEES_MANUAL, LIBRARY_AUTORUN)

# batch states
DRAFT = "DRAFT"
PENDING_APPROVAL = "PENDING_APPROVAL"
APPROVED = "APPROVED"
REJECTED = "REJECTED"
DISPATCHING = "DISPATCHING"
COMPLETED = "COMPLETED"
STATES = (DRAFT, PENDING_APPROVAL, APPROVED, REJECTED, DISPATCHING, COMPLETED)

# batch events
EV_SUBMIT = "SUBMIT_FOR_APPROVAL"
EV_APPROVE = "APPROVE"
EV_REJECT = "REJECT"
EV_START_DISPATCH = "START_DISPATCH"
EV_COMPLETE = "COMPLETE"
EVENTS = (EV_SUBMIT, EV_APPROVE, EV_REJECT, EV_START_DISPATCH, EV_COMPLETE)

# the only legal (state, event) -> state edges
TRANSITIONS = {
    (DRAFT, EV_SUBMIT): PENDING_APPROVAL,
    (PENDING_APPROVAL, EV_APPROVE): APPROVED,
    (PENDING_APPROVAL, EV_REJECT): REJECTED,
    (APPROVED, EV_START_DISPATCH): DISPATCHING,
    (DISPATCHING, EV_COMPLETE): COMPLETED,
}

# message channels / statuses
CH_SMS = "SMS"
CH_EMAIL = "EMAIL"

MSG_PENDING = "PENDING"
MSG_SENT = "SENT"
MSG_DELIVERED = "DELIVERED"
MSG_FAILED = "FAILED"
MSG_SKIPPED_DEDUP = "SKIPPED_DEDUP"
MSG_SKIPPED_NO_CONTACT = "SKIPPED_NO_CONTACT"
SKIPPED_STATUSES = (MSG_SKIPPED_DEDUP, MSG_SKIPPED_NO_CONTACT)

_MSG_TRANSITIONS = {
    (MSG_PENDING, MSG_SENT),
    (MSG_PENDING, MSG_FAILED),
    (MSG_PENDING, MSG_SKIPPED_DEDUP),
    (MSG_PENDING, MSG_SKIPPED_NO_CONTACT),
    (MSG_SENT, MSG_DELIVERED),
    (MSG_SENT, MSG_FAILED),
}

# dedup reasons
REASON_FEE = "FEE_OVERDUE"
REASON_BOOK = "BOOK_OVERDUE"


class NotifierError(Exception):
    code = "NOTIFIER_ERROR"


class WrongState(NotifierError):
    code = "WRONG_STATE"


class ForbiddenRole(NotifierError):
    code = "FORBIDDEN_ROLE"


class UnknownBatch(NotifierError):
    code = "UNKNOWN_BATCH"


@dataclass(frozen=True)
class OutboundMessage:
    msg_id: int
    batch_id: int
    student_id: str
    channel: str
    dest: str
    body: str
    status: str
    smsc_message_id: str | None = None
    attempts: int = 0
    reason: str | None = None
    reference: str | None = None


@dataclass(frozen=True)
class Batch:
    batch_id: int
    kind: str
    created_by: str
    state: str
    created_at: str
    decided_at: str | None = None
    decided_by: str | None = None


@dataclass(frozen=True)
class DispatchReport:
    sent: int
    delivered: int
    failed: int
    skipped: int
    pending: int
    total: int


_SCHEMA = """
CREATE TABLE IF NOT EXISTS batches (
    batch_id INTEGER PRIMARY KEY AUTOINCREMENT,
    kind TEXT NOT NULL,
    created_by TEXT NOT NULL,
    state TEXT NOT NULL,
    created_at TEXT NOT NULL,
    decided_at TEXT,
    decided_by TEXT
);
CREATE TABLE IF NOT EXISTS messages (
    msg_id INTEGER PRIMARY KEY AUTOINCREMENT,
    batch_id INTEGER NOT NULL REFERENCES batches(batch_id),
    student_id TEXT NOT NULL,
    channel TEXT NOT NULL,
    dest TEXT NOT NULL DEFAULT '',
    body TEXT NOT NULL,
    status TEXT NOT NULL,
    smsc_message_id TEXT,
    attempts INTEGER NOT NULL DEFAULT 0,
    reason TEXT,
    reference TEXT
);
CREATE INDEX IF NOT EXISTS idx_messages_batch ON messages(batch_id);
CREATE INDEX IF NOT EXISTS idx_messages_smsc_id ON messages(smsc_message_id);
CREATE TABLE IF NOT EXISTS dedup_keys (
    student_id TEXT NOT NULL,
    reason TEXT NOT NULL,
    reference TEXT NOT NULL,
    sent_at REAL NOT NULL,
    source_batch_id INTEGER,
    PRIMARY KEY (student_id, reason, reference)
);
"""


def utcnow_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class BatchStore:
    def __init__(self, db: Database):
        self.db = db
        # batch mutations serialize per batch id
        self._batch_locks: dict[int, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        with db.lock:
            db.conn.executescript(_SCHEMA)
            db.conn.commit()

    def batch_lock(self, batch_id: int) -> threading.Lock:
        with self._locks_guard:
            return self._batch_locks.setdefault(batch_id, threading.Lock())

    # -- creation -------------------------------------------------------

    def create_batch(
        self,
        kind: str,
        created_by: str,
        messages: list[dict],
        state: str,
        created_at: str | None = None,
    ) -> Batch:
        if kind not in KINDS:
            raise NotifierError(f"unknown batch kind {kind!r}")
        if state not in STATES:
            raise NotifierError(f"unknown batch state {state!r}")
        created_at = created_at or utcnow_iso()
        with self.db.lock:
            cur = self.db.conn.execute(
                "INSERT INTO batches (kind, created_by, state, created_at) "
                "VALUES (?, ?, ?, ?)",
                (kind, created_by, state, created_at),
            )
            batch_id = cur.lastrowid
            for m in messages:
                self.db.conn.execute(
                    "INSERT INTO messages (batch_id, student_id, channel, dest, "
                    "body, status, reason, reference) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                    (batch_id, m["student_id"], m["channel"], m["dest"],
                     m["body"], m["status"], m.get("reason"), m.get("reference")),
                )
            self.db.conn.commit()
        return self.get_batch(batch_id)

    # -- reads ----------------------------------------------------------

    def get_batch(self, batch_id: int) -> Batch:
        with self.db.lock:
            row = self.db.conn.execute(
                "SELECT * FROM batches WHERE batch_id = ?", (batch_id,)
            ).fetchone()
        if row is None:
            raise UnknownBatch(str(batch_id))
        return _batch(row)

    def list_batches(self, state: str | None = None) -> list[Batch]:
        query = "SELECT * FROM batches"
        args: tuple = ()
        if state is not None:
            query += " WHERE state = ?"
            args = (state,)
        query += " ORDER BY batch_id"
        with self.db.lock:
            rows = self.db.conn.execute(query, args).fetchall()
        return [_batch(r) for r in rows]

    def messages_for_batch(self, batch_id: int) -> list[OutboundMessage]:
        with self.db.lock:
            rows = self.db.conn.execute(
                "SELECT * FROM messages WHERE batch_id = ? ORDER BY msg_id",
                (batch_id,),
            ).fetchall()
        return [_message(r) for r in rows]

    def message_by_smsc_id(self, smsc_message_id: str) -> OutboundMessage | None:
        with self.db.lock:
            row = self.db.conn.execute(
                "SELECT * FROM messages WHERE smsc_message_id = ? "
                "ORDER BY msg_id DESC LIMIT 1",
                (smsc_message_id,),
            ).fetchone()
        return _message(row) if row else None

    def report(self, batch_id: int) -> DispatchReport:
        messages = self.messages_for_batch(batch_id)
        self.get_batch(batch_id)  # existence check even for empty batches
        counts = {"sent": 0, "delivered": 0, "failed": 0, "skipped": 0, "pending": 0}
        for m in messages:
            if m.status == MSG_SENT:
                counts["sent"] += 1
            elif m.status == MSG_DELIVERED:
                counts["delivered"] += 1
            elif m.status == MSG_FAILED:
                counts["failed"] += 1
            elif m.status in SKIPPED_STATUSES:
                counts["skipped"] += 1
            else:
                counts["pending"] += 1
        return DispatchReport(total=len(messages), **counts)

    # -- the batch state machine -----------------------------------------

    def transition(self, batch_id: int, event: str) -> Batch:
        """Apply *event*; illegal (state, event) pairs raise WrongState
        and leave the batch untouched."""
        if event not in EVENTS:
            raise NotifierError(f"unknown event {event!r}")
        with self.db.lock:
            batch = self.get_batch(batch_id)
            target = TRANSITIONS.get((batch.state, event))
            if target is None:
                raise WrongState(f"{event} not legal in state {batch.state}")
            self.db.conn.execute(
                "UPDATE batches SET state = ? WHERE batch_id = ?",
                (target, batch_id),
            )
            self.db.conn.commit()
        return self.get_batch(batch_id)

    def decide(self, batch_id: int, decider_id: str, decider_role: str, decision: str) -> Batch:
        """Approve or reject a pending batch; the decision is durable
        before this returns."""
        if decision not in ("APPROVE", "REJECT"):
            raise NotifierError(f"unknown decision {decision!r}")
        with self.batch_lock(batch_id):
            batch = self.get_batch(batch_id)
            allowed = _decider_roles(batch.kind)
            if decider_role not in allowed:
                raise ForbiddenRole(
                    f"role {decider_role} may not decide {batch.kind} batches"
                )
            updated = self.transition(
                batch_id, EV_APPROVE if decision == "APPROVE" else EV_REJECT
            )
            with self.db.lock:
                self.db.conn.execute(
                    "UPDATE batches SET decided_at = ?, decided_by = ? WHERE batch_id = ?",
                    (utcnow_iso(), decider_id, batch_id),
                )
                self.db.conn.commit()
        return self.get_batch(batch_id)

    # -- message status --------------------------------------------------

    def set_message_status(
        self,
        msg_id: int,
        status: str,
        smsc_message_id: str | None = None,
        bump_attempts: bool = False,
    ) -> None:
        with self.db.lock:
            row = self.db.conn.execute(
                "SELECT status, attempts FROM messages WHERE msg_id = ?", (msg_id,)
            ).fetchone()
            if row is None:
                raise NotifierError(f"unknown message {msg_id}")
            if (row["status"], status) not in _MSG_TRANSITIONS:
                raise WrongState(f"message {msg_id}: {row['status']} -> {status}")
            attempts = row["attempts"] + (1 if bump_attempts else 0)
            self.db.conn.execute(
                "UPDATE messages SET status = ?, attempts = ?, "
                "smsc_message_id = COALESCE(?, smsc_message_id) WHERE msg_id = ?",
                (status, attempts, smsc_message_id, msg_id),
            )
            self.db.conn.commit()

    # -- dedup -------------------------------------------------------------

    def dedup_live(
        self,
        student_id: str,
        reason: str,
        reference: str,
        now_ts: float,
        cooldown_days: int,
        exclude_batch_id: int | None = None,
    ) -> bool:
        cutoff = now_ts - cooldown_days * 86400
        with self.db.lock:
            row = self.db.conn.execute(
                "SELECT sent_at, source_batch_id FROM dedup_keys "
                "WHERE student_id = ? AND reason = ? AND reference = ?",
                (student_id, reason, reference),
            ).fetchone()
        if row is None or row["sent_at"] <= cutoff:
            return False
        if exclude_batch_id is not None and row["source_batch_id"] == exclude_batch_id:
            return False
        return True

    def write_dedup(
        self,
        student_id: str,
        reason: str,
        reference: str,
        sent_at: float,
        source_batch_id: int,
    ) -> None:
        with self.db.lock:
            self.db.conn.execute(
                "INSERT INTO dedup_keys (student_id, reason, reference, sent_at, "
                "source_batch_id) VALUES (?, ?, ?, ?, ?) "
                "ON CONFLICT(student_id, reason, reference) DO UPDATE SET "
                "sent_at=excluded.sent_at, source_batch_id=excluded.source_batch_id",
                (student_id, reason, reference, sent_at, source_batch_id),
            )
            self.db.conn.commit()


def _decider_roles(kind: str) -> tuple[str, ...]:
    if kind in (FEES_AUTORUN, FEES_MANUAL):
        return ("RECORDS", "ADMIN")
    if kind == LIBRARY_AUTORUN:
        return ("LIBRARY", "ADMIN")
    return ("ADMIN",)  # LECTURER_ANNOUNCE never reaches PENDING_APPROVAL


def _batch(row) -> Batch:
    return Batch(
        batch_id=row["batch_id"], kind=row["kind"], created_by=row["created_by"],
        state=row["state"], created_at=row["created_at"],
        decided_at=row["decided_at"], decided_by=row["decided_by"],
    )


def _message(row) -> OutboundMessage:
    return OutboundMessage(
        msg_id=row["msg_id"], batch_id=row["batch_id"], student_id=row["student_id"],
        channel=row["channel"], dest=row["dest"], body=row["body"],
        status=row["status"], smsc_message_id=row["smsc_message_id"],
        attempts=row["attempts"], reason=row["reason"], reference=row["reference"],
    )
