"""Request/response bodies for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel


class ErrorBody(BaseModel):
    code: str
    message: str


class LoginRequest(BaseModel):
    staff_id: str
    password: str


class TokenResponse(BaseModel):
    token: str
    staff_id: str
    role: str
    expires_at: float


class MeResponse(BaseModel):
    staff_id: str
    role: str
    courses: list[str] = []  # the lecturer's timetable courses; empty otherwise


class StudentOut(BaseModel):
    student_id: str
    name: str
    phone: str
    email: str
    program: str


class AnnounceRequest(BaseModel):
    body: str
    student_ids: list[str] | None = None
    course_code: str | None = None


class MessageOut(BaseModel):
    msg_id: int
    student_id: str
    channel: str
    dest: str
    body: str
    status: str
    smsc_message_id: str | None = None
    attempts: int = 0


class BatchOut(BaseModel):
    batch_id: int
    kind: str
    created_by: str
    state: str
    created_at: str
    decided_at: str | None = None
    decided_by: str | None = None
    total: int
    sendable: int


class BatchDetail(BatchOut):
    messages: list[MessageOut]


class FeeScanItem(BaseModel):
    invoice_id: str
    student_id: str
    student_name: str
    balance: str  # fixed-point string, e.g. "250.00"
    due_date: str
    days_overdue: int


class LoanScanItem(BaseModel):
    loan_id: str
    student_id: str
    student_name: str
    book_title: str
    due_date: str
    days_overdue: int
    fine: str


class CreateBatchRequest(BaseModel):
    kind: str
    item_refs: list[str]
    channel_policy: str = "SMS_FIRST"


class TriggerRequest(BaseModel):
    as_of: str | None = None


class TriggerResponse(BaseModel):
    batch: BatchOut | None = None
    suppressed: bool = False


class ReportResponse(BaseModel):
    batch_id: int
    state: str
    sent: int
    delivered: int
    failed: int
    skipped: int
    pending: int
    total: int
    messages: list[MessageOut]
