"""The HTTP/JSON facade the staff console and CLI drive.

Every endpoint except /api/login requires a bearer token; errors come
back as ``{"code": ..., "message": ...}`` with 400/401/403/404/409.
Approvals kick off dispatch detached; clients poll the report.
"""

from __future__ import annotations

import os
from datetime import date, datetime
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import registry as reg
from ..money import format_money
from ..notifier import autorun, build, scans
from ..notifier import store as st
from ..notifier import templates as tmpl
from ..runtime import Runtime
from . import auth, schemas

API_PREFIX = "/api"


class ApiError(Exception):
    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


def _bad_token() -> ApiError:
    return ApiError(401, "BAD_TOKEN", "missing, invalid or expired token")


def _forbidden(message: str = "role not permitted for this operation") -> ApiError:
    return ApiError(403, "FORBIDDEN_ROLE", message)


def create_app(runtime: Runtime) -> FastAPI:
    app = FastAPI(
        title="announcer",
        version="0.1.0",
        description="Campus bulk SMS/email announcer with batch approval",
    )
    app.state.runtime = runtime

    def current_auth(authorization: str | None = Header(default=None)) -> auth.TokenInfo:
        if not authorization or not authorization.startswith("Bearer "):
            raise _bad_token()
        info = runtime.tokens.lookup(authorization.removeprefix("Bearer ").strip())
        if info is None:
            raise _bad_token()
        return info

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"code": exc.code, "message": exc.message},
        )

    @app.exception_handler(st.NotifierError)
    async def on_notifier_error(request: Request, exc: st.NotifierError):
        status = {
            "WRONG_STATE": 409,
            "FORBIDDEN_ROLE": 403,
            "UNKNOWN_BATCH": 404,
        }.get(exc.code, 400)
        return JSONResponse(
            status_code=status, content={"code": exc.code, "message": str(exc)}
        )

    @app.exception_handler(reg.RegistryError)
    async def on_registry_error(request: Request, exc: reg.RegistryError):
        status = 404 if exc.code.startswith("UNKNOWN") else 400
        return JSONResponse(
            status_code=status, content={"code": exc.code, "message": str(exc)}
        )

    # -- auth ---------------------------------------------------------------

    @app.post(
        f"{API_PREFIX}/login",
        response_model=schemas.TokenResponse,
        responses={401: {"model": schemas.ErrorBody}},
    )
    def login(body: schemas.LoginRequest):
        try:
            info = auth.login(runtime.registry, runtime.tokens, body.staff_id, body.password)
        except auth.BadCredentials:
            # identical response for unknown id and wrong password
            raise ApiError(401, "BAD_CREDENTIALS", "bad credentials") from None
        return schemas.TokenResponse(
            token=info.token, staff_id=info.staff_id, role=info.role,
            expires_at=info.expires_at,
        )

    @app.get(f"{API_PREFIX}/me", response_model=schemas.MeResponse)
    def me(who: auth.TokenInfo = Depends(current_auth)):
        courses = (
            runtime.registry.courses_for_lecturer(who.staff_id)
            if who.role == "LECTURER"
            else []
        )
        return schemas.MeResponse(staff_id=who.staff_id, role=who.role, courses=courses)

    # -- students -------------------------------------------------------------

    @app.get(f"{API_PREFIX}/students", response_model=list[schemas.StudentOut])
    def students(
        course: str | None = Query(default=None),
        lecturer: str | None = Query(default=None),
        who: auth.TokenInfo = Depends(current_auth),
    ):
        if lecturer is not None:
            if lecturer != "me":
                raise ApiError(400, "BAD_REQUEST", "only lecturer=me is supported")
            found = runtime.registry.students_for_lecturer(who.staff_id)
        elif course is not None:
            if who.role == "LECTURER" and course not in runtime.registry.courses_for_lecturer(who.staff_id):
                raise _forbidden("lecturers may only list their own courses")
            found = runtime.registry.students_for_course(course)
        else:
            raise ApiError(400, "BAD_REQUEST", "pass ?course=CODE or ?lecturer=me")
        return [schemas.StudentOut(**s.__dict__) for s in found]

    # -- announce (the lecturer path) -------------------------------------------

    @app.post(f"{API_PREFIX}/announce", response_model=schemas.BatchOut, status_code=201)
    def announce(body: schemas.AnnounceRequest, who: auth.TokenInfo = Depends(current_auth)):
        if who.role != "LECTURER":
            raise _forbidden("only lecturers announce")
        if not body.body.strip():
            raise ApiError(400, "EMPTY_BODY", "announcement body is empty")
        if bool(body.student_ids) == bool(body.course_code):
            raise ApiError(400, "BAD_REQUEST", "pass student_ids or course_code")

        roster = {s.student_id: s for s in runtime.registry.students_for_lecturer(who.staff_id)}
        if body.course_code is not None:
            if body.course_code not in runtime.registry.courses_for_lecturer(who.staff_id):
                raise _forbidden("not your course")
            targets = runtime.registry.students_for_course(body.course_code)
        else:
            targets = []
            for student_id in body.student_ids:
                student = roster.get(student_id)
                if student is None:
                    raise _forbidden(f"{student_id} is not in your timetable's roster")
                targets.append(student)

        text = tmpl.render(runtime.templates[tmpl.KEY_ANNOUNCE], {"body": body.body})
        items = [build.BuildItem(student=s, body=text) for s in targets]
        batch = build.build_batch(
            runtime.batch_store, st.LECTURER_ANNOUNCE, items,
            build.POLICY_SMS_FIRST, who.staff_id,
            cooldown_days=runtime.config.cooldown_days,
        )
        runtime.dispatch_detached(batch.batch_id)
        return _batch_out(runtime, batch)

    # -- scans ---------------------------------------------------------------

    @app.get(f"{API_PREFIX}/scans/fees", response_model=list[schemas.FeeScanItem])
    def scan_fees(
        as_of: str | None = Query(default=None),
        who: auth.TokenInfo = Depends(current_auth),
    ):
        if who.role not in ("RECORDS", "ADMIN"):
            raise _forbidden()
        day = _parse_as_of(as_of, runtime)
        out = []
        for hit in scans.scan_overdue_fees(runtime.registry, day):
            student = runtime.registry.get_student(hit.record.student_id)
            out.append(
                schemas.FeeScanItem(
                    invoice_id=hit.record.invoice_id,
                    student_id=hit.record.student_id,
                    student_name=student.name if student else "",
                    balance=format_money(hit.balance),
                    due_date=hit.record.due_date.isoformat(),
                    days_overdue=hit.days_overdue,
                )
            )
        return out

    @app.get(f"{API_PREFIX}/scans/loans", response_model=list[schemas.LoanScanItem])
    def scan_loans(
        as_of: str | None = Query(default=None),
        who: auth.TokenInfo = Depends(current_auth),
    ):
        if who.role not in ("LIBRARY", "ADMIN"):
            raise _forbidden()
        day = _parse_as_of(as_of, runtime)
        cfg = runtime.config
        out = []
        for hit in scans.scan_overdue_loans(
            runtime.registry, day, cfg.fine_rate_per_day, cfg.fine_cap
        ):
            student = runtime.registry.get_student(hit.record.student_id)
            out.append(
                schemas.LoanScanItem(
                    loan_id=hit.record.loan_id,
                    student_id=hit.record.student_id,
                    student_name=student.name if student else "",
                    book_title=hit.record.book_title,
                    due_date=hit.record.due_date.isoformat(),
                    days_overdue=hit.days_overdue,
                    fine=format_money(hit.fine),
                )
            )
        return out

    # -- batches -----------------------------------------------------------------

    @app.post(f"{API_PREFIX}/batches", response_model=schemas.BatchOut, status_code=201)
    def create_batch(body: schemas.CreateBatchRequest, who: auth.TokenInfo = Depends(current_auth)):
        if body.kind != st.FEES_MANUAL:
            raise ApiError(
                400, "BAD_KIND",
                "only FEES_MANUAL batches are created here; autoruns use their trigger",
            )
        if who.role not in ("RECORDS", "ADMIN"):
            raise _forbidden()
        if body.channel_policy not in build.POLICIES:
            raise ApiError(400, "BAD_POLICY", f"channel_policy must be one of {build.POLICIES}")
        items = []
        for invoice_id in body.item_refs:
            record = runtime.registry.fee_by_invoice(invoice_id)
            if record is None:
                raise ApiError(404, "UNKNOWN_INVOICE", f"no invoice {invoice_id}")
            student = runtime.registry.get_student(record.student_id)
            if student is None:
                raise ApiError(404, "UNKNOWN_STUDENT", f"no student {record.student_id}")
            body_text = tmpl.render(
                runtime.templates[tmpl.KEY_FEE],
                {
                    "name": student.name,
                    "amount": format_money(record.balance),
                    "due_date": record.due_date.isoformat(),
                },
            )
            items.append(
                build.BuildItem(
                    student=student, body=body_text,
                    reason=st.REASON_FEE, reference=record.invoice_id,
                )
            )
        batch = build.build_batch(
            runtime.batch_store, st.FEES_MANUAL, items, body.channel_policy,
            who.staff_id, cooldown_days=runtime.config.cooldown_days,
        )
        return _batch_out(runtime, batch)

    @app.get(f"{API_PREFIX}/batches", response_model=list[schemas.BatchOut])
    def list_batches(
        state: str | None = Query(default=None),
        who: auth.TokenInfo = Depends(current_auth),
    ):
        if state is not None and state not in st.STATES:
            raise ApiError(400, "BAD_STATE", f"state must be one of {st.STATES}")
        return [_batch_out(runtime, b) for b in runtime.batch_store.list_batches(state)]

    @app.get(f"{API_PREFIX}/batches/{{batch_id}}", response_model=schemas.BatchDetail)
    def get_batch(batch_id: int, who: auth.TokenInfo = Depends(current_auth)):
        batch = runtime.batch_store.get_batch(batch_id)
        return _batch_detail(runtime, batch)

    @app.post(f"{API_PREFIX}/batches/{{batch_id}}/approve", response_model=schemas.BatchOut)
    def approve(batch_id: int, who: auth.TokenInfo = Depends(current_auth)):
        batch = runtime.batch_store.decide(batch_id, who.staff_id, who.role, "APPROVE")
        runtime.dispatch_detached(batch_id)
        return _batch_out(runtime, batch)

    @app.post(f"{API_PREFIX}/batches/{{batch_id}}/reject", response_model=schemas.BatchOut)
    def reject(batch_id: int, who: auth.TokenInfo = Depends(current_auth)):
        batch = runtime.batch_store.decide(batch_id, who.staff_id, who.role, "REJECT")
        return _batch_out(runtime, batch)

    @app.get(f"{API_PREFIX}/batches/{{batch_id}}/report", response_model=schemas.ReportResponse)
    def report(batch_id: int, who: auth.TokenInfo = Depends(current_auth)):
        batch = runtime.batch_store.get_batch(batch_id)
        rep = runtime.batch_store.report(batch_id)
        messages = runtime.batch_store.messages_for_batch(batch_id)
        return schemas.ReportResponse(
            batch_id=batch_id,
            state=batch.state,
            sent=rep.sent, delivered=rep.delivered, failed=rep.failed,
            skipped=rep.skipped, pending=rep.pending, total=rep.total,
            messages=[_message_out(m) for m in messages],
        )

    # -- autorun -----------------------------------------------------------------

    @app.post(f"{API_PREFIX}/autorun/fees/trigger", response_model=schemas.TriggerResponse)
    def trigger_fees(body: schemas.TriggerRequest | None = None,
                     who: auth.TokenInfo = Depends(current_auth)):
        if who.role not in ("RECORDS", "ADMIN"):
            raise _forbidden()
        return _trigger(runtime, autorun.KIND_FEES, body)

    @app.post(f"{API_PREFIX}/autorun/library/trigger", response_model=schemas.TriggerResponse)
    def trigger_library(body: schemas.TriggerRequest | None = None,
                        who: auth.TokenInfo = Depends(current_auth)):
        if who.role not in ("LIBRARY", "ADMIN"):
            raise _forbidden()
        return _trigger(runtime, autorun.KIND_LIBRARY, body)

    console = _console_dist()
    if console is not None:
        app.mount("/console", StaticFiles(directory=console, html=True), name="console")

    return app


def _console_dist() -> Path | None:
    """Built staff-console assets, when present (any static host works too)."""
    override = os.environ.get("ANNOUNCER_CONSOLE_DIST")
    candidates = [Path(override)] if override else []
    candidates.append(Path(__file__).resolve().parents[3] / "frontend" / "dist")
    for candidate in candidates:
        if candidate.is_dir() and (candidate / "index.html").is_file():
            return candidate
    return None


def _trigger(runtime: Runtime, kind: str, body: schemas.TriggerRequest | None):
    as_of = None
    if body is not None and body.as_of:
        try:
            as_of = date.fromisoformat(body.as_of)
        except ValueError:
            raise ApiError(400, "BAD_DATE", "as_of must be YYYY-MM-DD") from None
    batch = runtime.autorun_tick(kind, as_of=as_of)
    if batch is None:
        return schemas.TriggerResponse(batch=None, suppressed=True)
    return schemas.TriggerResponse(batch=_batch_out(runtime, batch), suppressed=False)


def _parse_as_of(as_of: str | None, runtime: Runtime) -> date:
    if as_of is None:
        return datetime.now(runtime.tz).date()
    try:
        return date.fromisoformat(as_of)
    except ValueError:
        raise ApiError(400, "BAD_DATE", "as_of must be YYYY-MM-DD") from None


def _message_out(m: st.OutboundMessage) -> schemas.MessageOut:
    return schemas.MessageOut(
        msg_id=m.msg_id, student_id=m.student_id, channel=m.channel,
        dest=m.dest, body=m.body, status=m.status,
        smsc_message_id=m.smsc_message_id, attempts=m.attempts,
    )


def _batch_out(runtime: Runtime, batch: st.Batch) -> schemas.BatchOut:
    messages = runtime.batch_store.messages_for_batch(batch.batch_id)
    sendable = sum(
        1 for m in messages
        if m.status in (st.MSG_PENDING, st.MSG_SENT, st.MSG_DELIVERED)
    )
    return schemas.BatchOut(
        batch_id=batch.batch_id, kind=batch.kind, created_by=batch.created_by,
        state=batch.state, created_at=batch.created_at,
        decided_at=batch.decided_at, decided_by=batch.decided_by,
        total=len(messages), sendable=sendable,
    )


def _batch_detail(runtime: Runtime, batch: st.Batch) -> schemas.BatchDetail:
    base = _batch_out(runtime, batch)
    messages = runtime.batch_store.messages_for_batch(batch.batch_id)
    return schemas.BatchDetail(
        **base.model_dump(), messages=[_message_out(m) for m in messages]
    )
