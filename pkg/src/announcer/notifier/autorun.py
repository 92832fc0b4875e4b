"""The Autorun: scheduled scans that draft notification batches for
staff approval.

A tick runs the overdue scan for its kind as of the campus-local date,
renders the pre-formatted messages, and leaves a PENDING_APPROVAL batch
behind; nothing is ever sent without a decision.  The scheduler is an
in-process daily cadence loop, deliberately clock-injectable.
"""

from __future__ import annotations

import logging
import threading
from datetime import date, datetime, timedelta, timezone
from zoneinfo import ZoneInfo

from ..money import format_money
from ..registry import Registry
from . import build, scans
from . import store as st
from . import templates as tmpl

log = logging.getLogger("announcer.autorun")

KIND_FEES = "FEES"
KIND_LIBRARY = "LIBRARY"


def autorun_tick(
    kind: str,
    now_ts: float,
    *,
    registry: Registry,
    batch_store: st.BatchStore,
    template_map: dict[str, str],
    tz: ZoneInfo,
    cooldown_days: int,
    fine_rate_per_day: int,
    fine_cap: int,
    channel_policy: str = build.POLICY_SMS_FIRST,
    suppress_empty: bool = True,
    as_of: date | None = None,
    created_by: str = "autorun",
) -> st.Batch | None:
    """One Autorun pass; returns the drafted batch, or None when there
    is nothing to say and empty batches are suppressed."""
    if as_of is None:
        as_of = datetime.fromtimestamp(now_ts, tz).date()

    if kind == KIND_FEES:
        items = _fee_items(registry, template_map, as_of)
        batch_kind = st.FEES_AUTORUN
    elif kind == KIND_LIBRARY:
        items = _loan_items(
            registry, template_map, as_of, fine_rate_per_day, fine_cap
        )
        batch_kind = st.LIBRARY_AUTORUN
    else:
        raise st.NotifierError(f"unknown autorun kind {kind!r}")

    messages = build.compose_messages(
        batch_store, items, channel_policy, now_ts, cooldown_days
    )
    if suppress_empty and build.sendable_count(messages) == 0:
        log.info("autorun %s: nothing sendable as of %s, suppressed", kind, as_of)
        return None
    return batch_store.create_batch(
        batch_kind, created_by, messages, state=st.PENDING_APPROVAL
    )


def _fee_items(
    registry: Registry, template_map: dict[str, str], as_of: date
) -> list[build.BuildItem]:
    items = []
    for hit in scans.scan_overdue_fees(registry, as_of):
        student = registry.get_student(hit.record.student_id)
        if student is None:
            continue
        body = tmpl.render(
            template_map[tmpl.KEY_FEE],
            {
                "name": student.name,
                "amount": format_money(hit.balance),
                "due_date": hit.record.due_date.isoformat(),
            },
        )
        items.append(
            build.BuildItem(
                student=student, body=body,
                reason=st.REASON_FEE, reference=hit.record.invoice_id,
            )
        )
    return items


def _loan_items(
    registry: Registry,
    template_map: dict[str, str],
    as_of: date,
    fine_rate_per_day: int,
    fine_cap: int,
) -> list[build.BuildItem]:
    items = []
    for hit in scans.scan_overdue_loans(registry, as_of, fine_rate_per_day, fine_cap):
        student = registry.get_student(hit.record.student_id)
        if student is None:
            continue
        body = tmpl.render(
            template_map[tmpl.KEY_BOOK],
            {
                "name": student.name,
                "book_title": hit.record.book_title,
                "due_date": hit.record.due_date.isoformat(),
                "fine": format_money(hit.fine),
            },
        )
        items.append(
            build.BuildItem(
                student=student, body=body,
                reason=st.REASON_BOOK, reference=hit.record.loan_id,
            )
        )
    return items


def next_fire_after(now: datetime, hhmm: str, tz: ZoneInfo) -> datetime:
    """Next wall-clock occurrence of HH:MM in *tz* strictly after *now*."""
    hh, mm = (int(part) for part in hhmm.split(":"))
    local = now.astimezone(tz)
    candidate = local.replace(hour=hh, minute=mm, second=0, microsecond=0)
    if candidate <= local:
        candidate += timedelta(days=1)
    return candidate.astimezone(timezone.utc)


class Scheduler:
    """Daily cadence loop: one tick per kind per day at its HH:MM.

    Ticks for the same kind never overlap; a tick landing while the
    previous one still runs is skipped with a log line.
    """

    def __init__(
        self,
        jobs: dict[str, str],  # kind -> "HH:MM"
        tz: ZoneInfo,
        runner,  # callable(kind)
        clock=None,
        poll_interval: float = 1.0,
    ):
        self.jobs = dict(jobs)
        self.tz = tz
        self.runner = runner
        self.clock = clock or (lambda: datetime.now(timezone.utc))
        self.poll_interval = poll_interval
        self._kind_locks = {kind: threading.Lock() for kind in jobs}
        self._next_fire: dict[str, datetime] = {}
        self._stop = threading.Event()
        self._thread = threading.Thread(
            target=self._loop, name="autorun-scheduler", daemon=True
        )

    def start(self) -> None:
        now = self.clock()
        for kind, hhmm in self.jobs.items():
            self._next_fire[kind] = next_fire_after(now, hhmm, self.tz)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread.is_alive():
            self._thread.join(timeout=2)

    def run_due(self, now: datetime) -> list[str]:
        """Fire every kind whose next fire time has passed; returns the
        kinds actually started (skips count as not started)."""
        started = []
        for kind, fire_at in list(self._next_fire.items()):
            if now < fire_at:
                continue
            self._next_fire[kind] = next_fire_after(now, self.jobs[kind], self.tz)
            lock = self._kind_locks[kind]
            if not lock.acquire(blocking=False):
                log.warning("autorun %s: previous tick still running, skipped", kind)
                continue

            def run(kind=kind, lock=lock):
                try:
                    self.runner(kind)
                except Exception:
                    log.exception("autorun %s tick failed", kind)
                finally:
                    lock.release()

            threading.Thread(target=run, name=f"autorun-{kind}", daemon=True).start()
            started.append(kind)
        return started

    def _loop(self) -> None:
        while not self._stop.wait(self.poll_interval):
            self.run_due(self.clock())
