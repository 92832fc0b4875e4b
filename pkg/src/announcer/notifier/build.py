"""Turning scan results or an announcement into an approvable batch."""

from __future__ import annotations

import time
from dataclasses import dataclass

from ..registry import Student
from . import store as st

POLICY_SMS_FIRST = "SMS_FIRST"
POLICY_EMAIL_FIRST = "EMAIL_FIRST"
POLICY_BOTH = "BOTH"
POLICIES = (POLICY_SMS_FIRST, POLICY_EMAIL_FIRST, POLICY_BOTH)


@dataclass(frozen=True)
class BuildItem:
    student: Student
    body: str
    reason: str | None = None  # FEE_OVERDUE / BOOK_OVERDUE; None for announcements
    reference: str | None = None  # invoice or loan id


def compose_messages(
    batch_store: st.BatchStore,
    items: list[BuildItem],
    channel_policy: str,
    now_ts: float,
    cooldown_days: int,
) -> list[dict]:
    """Pick a channel per item, applying dedup and no-contact skips.

    Returned dicts feed :meth:`BatchStore.create_batch`.
    """
    if channel_policy not in POLICIES:
        raise st.NotifierError(f"unknown channel policy {channel_policy!r}")
    messages: list[dict] = []
    for item in items:
        student = item.student
        base = {
            "student_id": student.student_id,
            "body": item.body,
            "reason": item.reason,
            "reference": item.reference,
        }
        if item.reason is not None and batch_store.dedup_live(
            student.student_id, item.reason, item.reference or "", now_ts, cooldown_days
        ):
            dest = student.phone or student.email
            channel = st.CH_SMS if student.phone else st.CH_EMAIL
            messages.append(
                base | {"channel": channel, "dest": dest, "status": st.MSG_SKIPPED_DEDUP}
            )
            continue

        routes: list[tuple[str, str]] = []
        if channel_policy == POLICY_SMS_FIRST:
            if student.phone:
                routes = [(st.CH_SMS, student.phone)]
            elif student.email:
                routes = [(st.CH_EMAIL, student.email)]
        elif channel_policy == POLICY_EMAIL_FIRST:
            if student.email:
                routes = [(st.CH_EMAIL, student.email)]
            elif student.phone:
                routes = [(st.CH_SMS, student.phone)]
        else:  # BOTH
            if student.phone:
                routes.append((st.CH_SMS, student.phone))
            if student.email:
                routes.append((st.CH_EMAIL, student.email))

        if not routes:
            messages.append(
                base | {"channel": st.CH_SMS, "dest": "", "status": st.MSG_SKIPPED_NO_CONTACT}
            )
            continue
        for channel, dest in routes:
            messages.append(
                base | {"channel": channel, "dest": dest, "status": st.MSG_PENDING}
            )
    return messages


def build_batch(
    batch_store: st.BatchStore,
    kind: str,
    items: list[BuildItem],
    channel_policy: str,
    created_by: str,
    now_ts: float | None = None,
    cooldown_days: int = 7,
) -> st.Batch:
    """Create a durable batch from *items*.

    Lecturer announcements are born APPROVED (the send itself is the
    decision); everything else waits in PENDING_APPROVAL.  A batch with
    nothing sendable is still created so staff can see why.
    """
    now_ts = time.time() if now_ts is None else now_ts
    messages = compose_messages(batch_store, items, channel_policy, now_ts, cooldown_days)
    state = st.APPROVED if kind == st.LECTURER_ANNOUNCE else st.PENDING_APPROVAL
    return batch_store.create_batch(kind, created_by, messages, state=state)


def sendable_count(messages: list[dict]) -> int:
    return sum(1 for m in messages if m["status"] == st.MSG_PENDING)
