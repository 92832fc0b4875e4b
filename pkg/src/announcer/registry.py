"""Durable store of students, staff, timetables, enrollments, fees and
library loans, populated from CSV exports.

Backed by a single-file SQLite database.  Reads and writes share one
connection guarded by an RLock, so a handle is safe to pass between
threads; batch/message tables defined in :mod:`announcer.notifier.store`
live in the same file.
"""

from __future__ import annotations

import csv
import hashlib
import re
import secrets
import sqlite3
import threading
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path

from .money import parse_money

ROLES = ("LECTURER", "RECORDS", "LIBRARY", "ADMIN")
DAYS = ("MON", "TUE", "WED", "THU", "FRI", "SAT", "SUN")

PBKDF2_ITERATIONS = 120_000

_E164_RE = re.compile(r"^\+\d{8,15}$")
_SEPARATORS_RE = re.compile(r"[ \-()]")


class RegistryError(Exception):
    code = "REGISTRY_ERROR"


class UnknownStaff(RegistryError):
    code = "UNKNOWN_STAFF"


class UnknownCourse(RegistryError):
    code = "UNKNOWN_COURSE"


class UnknownStudent(RegistryError):
    code = "UNKNOWN_STUDENT"


class UnparseablePhone(RegistryError):
    code = "UNPARSEABLE_PHONE"


class MissingHeader(RegistryError):
    code = "MISSING_HEADER"


def is_e164(value: str) -> bool:
    return bool(_E164_RE.match(value))


def normalize_phone(raw: str, default_country: str) -> str:
    """Normalize a phone number to E.164.

    Separators (spaces, dashes, parentheses) are stripped; numbers kept
    verbatim when already "+"-prefixed; a leading "0" is replaced by
    *default_country*; bare digit strings are assumed country-coded.
    """
    if not raw:
        raise UnparseablePhone("empty phone")
    cleaned = _SEPARATORS_RE.sub("", raw.strip())
    if cleaned.startswith("+"):
        digits = cleaned[1:]
    elif cleaned.startswith("0"):
        digits = default_country.lstrip("+") + cleaned[1:]
    else:
        digits = cleaned
    if not digits.isdigit() or not digits.isascii():
        raise UnparseablePhone(f"non-digit residue in {raw!r}")
    if not 8 <= len(digits) <= 15:
        raise UnparseablePhone(f"{raw!r} has {len(digits)} digits, want 8-15")
    return "+" + digits


def hash_password(password: str, salt: bytes) -> str:
    return hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), salt, PBKDF2_ITERATIONS
    ).hex()


@dataclass(frozen=True)
class Student:
    student_id: str
    name: str
    phone: str
    email: str
    program: str


@dataclass(frozen=True)
class StaffUser:
    staff_id: str
    name: str
    role: str
    password_hash: str
    salt: str


@dataclass(frozen=True)
class TimetableEntry:
    course_code: str
    lecturer_id: str
    day_of_week: str
    start_time: int  # minutes since midnight
    end_time: int
    room: str


@dataclass(frozen=True)
class FeeRecord:
    invoice_id: str
    student_id: str
    amount_due: int  # cents
    amount_paid: int
    due_date: date

    @property
    def balance(self) -> int:
        return self.amount_due - self.amount_paid


@dataclass(frozen=True)
class LoanRecord:
    loan_id: str
    student_id: str
    book_title: str
    barcode: str
    due_date: date
    returned_date: date | None


@dataclass
class ImportReport:
    accepted: int
    rejected: list[tuple[int, str]]


CSV_HEADERS = {
    "STUDENTS": ["student_id", "name", "phone", "email", "program"],
    "STAFF": ["staff_id", "name", "role", "password"],
    "TIMETABLE": ["course_code", "lecturer_id", "day_of_week", "start_time", "end_time", "room"],
    "ENROLLMENTS": ["course_code", "student_id"],
    "FEES": ["invoice_id", "student_id", "amount_due", "amount_paid", "due_date"],
    "LOANS": ["loan_id", "student_id", "book_title", "barcode", "due_date", "returned_date"],
}

_SCHEMA = """
CREATE TABLE IF NOT EXISTS students (
    student_id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    phone TEXT NOT NULL DEFAULT '',
    email TEXT NOT NULL DEFAULT '',
    program TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS staff (
    staff_id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    role TEXT NOT NULL,
    password_hash TEXT NOT NULL,
    salt TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS timetable (
    course_code TEXT NOT NULL,
    lecturer_id TEXT NOT NULL,
    day_of_week TEXT NOT NULL,
    start_time INTEGER NOT NULL,
    end_time INTEGER NOT NULL,
    room TEXT NOT NULL DEFAULT '',
    PRIMARY KEY (course_code, day_of_week, start_time)
);
CREATE TABLE IF NOT EXISTS enrollments (
    course_code TEXT NOT NULL,
    student_id TEXT NOT NULL,
    PRIMARY KEY (course_code, student_id)
);
CREATE TABLE IF NOT EXISTS fees (
    invoice_id TEXT PRIMARY KEY,
    student_id TEXT NOT NULL,
    amount_due INTEGER NOT NULL,
    amount_paid INTEGER NOT NULL,
    due_date TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS loans (
    loan_id TEXT PRIMARY KEY,
    student_id TEXT NOT NULL,
    book_title TEXT NOT NULL,
    barcode TEXT NOT NULL DEFAULT '',
    due_date TEXT NOT NULL,
    returned_date TEXT
);
"""


class Database:
    """One SQLite file shared by the registry and the notifier stores."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        self.lock = threading.RLock()
        self.conn = sqlite3.connect(self.path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        with self.lock:
            self.conn.executescript(_SCHEMA)
            self.conn.commit()

    def close(self) -> None:
        with self.lock:
            self.conn.close()


def _parse_date(value: str) -> date:
    return datetime.strptime(value.strip(), "%Y-%m-%d").date()


def _parse_hhmm(value: str) -> int:
    parts = value.strip().split(":")
    if len(parts) != 2:
        raise ValueError(f"bad time {value!r}")
    hh, mm = int(parts[0]), int(parts[1])
    if not (0 <= hh < 24 and 0 <= mm < 60):
        raise ValueError(f"bad time {value!r}")
    return hh * 60 + mm


class Registry:
    def __init__(self, db: Database, default_country: str = "+60"):
        self.db = db
        self.default_country = default_country

    # -- imports ------------------------------------------------------

    def import_csv(self, kind: str, path: str | Path) -> ImportReport:
        """Validate and upsert rows from a CSV export.

        Each row is fully validated before any write for that row; bad
        rows are reported with their line number and skipped.
        """
        kind = kind.upper()
        if kind not in CSV_HEADERS:
            raise RegistryError(f"unknown import kind {kind!r}")
        expected = CSV_HEADERS[kind]
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise MissingHeader(f"{path}: empty file") from None
            if [h.strip() for h in header] != expected:
                raise MissingHeader(f"{path}: expected header {','.join(expected)}")
            rows = [(lineno, row) for lineno, row in enumerate(reader, start=2) if row]

        validator = getattr(self, f"_validate_{kind.lower()}_row")
        writer = getattr(self, f"_upsert_{kind.lower()}")
        accepted = 0
        rejected: list[tuple[int, str]] = []
        with self.db.lock:
            for lineno, row in rows:
                if len(row) != len(expected):
                    rejected.append((lineno, f"BAD_FIELD:row has {len(row)} fields"))
                    continue
                record = dict(zip(expected, (cell.strip() for cell in row)))
                try:
                    value = validator(record)
                except _RowError as exc:
                    rejected.append((lineno, str(exc)))
                    continue
                writer(value)
                accepted += 1
            self.db.conn.commit()
        return ImportReport(accepted=accepted, rejected=rejected)

    def _validate_students_row(self, r: dict) -> Student:
        if not r["student_id"]:
            raise _RowError("BAD_FIELD:student_id")
        phone = r["phone"]
        if phone:
            try:
                phone = normalize_phone(phone, self.default_country)
            except UnparseablePhone:
                raise _RowError("BAD_FIELD:phone") from None
        email = r["email"]
        if email and email.count("@") != 1:
            raise _RowError("BAD_FIELD:email")
        return Student(
            student_id=r["student_id"], name=r["name"], phone=phone,
            email=email, program=r["program"],
        )

    def _upsert_students(self, s: Student) -> None:
        self.db.conn.execute(
            "INSERT INTO students (student_id, name, phone, email, program) "
            "VALUES (?, ?, ?, ?, ?) ON CONFLICT(student_id) DO UPDATE SET "
            "name=excluded.name, phone=excluded.phone, email=excluded.email, "
            "program=excluded.program",
            (s.student_id, s.name, s.phone, s.email, s.program),
        )

    def _validate_staff_row(self, r: dict) -> StaffUser:
        if not r["staff_id"]:
            raise _RowError("BAD_FIELD:staff_id")
        if r["role"] not in ROLES:
            raise _RowError("BAD_FIELD:role")
        if not r["password"]:
            raise _RowError("BAD_FIELD:password")
        salt = secrets.token_bytes(16)
        return StaffUser(
            staff_id=r["staff_id"], name=r["name"], role=r["role"],
            password_hash=hash_password(r["password"], salt), salt=salt.hex(),
        )

    def _upsert_staff(self, s: StaffUser) -> None:
        self.db.conn.execute(
            "INSERT INTO staff (staff_id, name, role, password_hash, salt) "
            "VALUES (?, ?, ?, ?, ?) ON CONFLICT(staff_id) DO UPDATE SET "
            "name=excluded.name, role=excluded.role, "
            "password_hash=excluded.password_hash, salt=excluded.salt",
            (s.staff_id, s.name, s.role, s.password_hash, s.salt),
        )

    def _validate_timetable_row(self, r: dict) -> TimetableEntry:
        if not r["course_code"]:
            raise _RowError("BAD_FIELD:course_code")
        if r["day_of_week"] not in DAYS:
            raise _RowError("BAD_FIELD:day_of_week")
        try:
            start = _parse_hhmm(r["start_time"])
            end = _parse_hhmm(r["end_time"])
        except ValueError as exc:
            raise _RowError(f"BAD_FIELD:{exc}") from None
        if not start < end:
            raise _RowError("BAD_FIELD:start_time must precede end_time")
        if self.staff_by_id(r["lecturer_id"]) is None:
            raise _RowError("DANGLING_REFERENCE:lecturer_id")
        return TimetableEntry(
            course_code=r["course_code"], lecturer_id=r["lecturer_id"],
            day_of_week=r["day_of_week"], start_time=start, end_time=end,
            room=r["room"],
        )

    def _upsert_timetable(self, t: TimetableEntry) -> None:
        self.db.conn.execute(
            "INSERT INTO timetable (course_code, lecturer_id, day_of_week, "
            "start_time, end_time, room) VALUES (?, ?, ?, ?, ?, ?) "
            "ON CONFLICT(course_code, day_of_week, start_time) DO UPDATE SET "
            "lecturer_id=excluded.lecturer_id, end_time=excluded.end_time, "
            "room=excluded.room",
            (t.course_code, t.lecturer_id, t.day_of_week, t.start_time,
             t.end_time, t.room),
        )

    def _validate_enrollments_row(self, r: dict) -> tuple[str, str]:
        if not r["course_code"] or not r["student_id"]:
            raise _RowError("BAD_FIELD:course_code/student_id")
        if self.get_student(r["student_id"]) is None:
            raise _RowError("DANGLING_REFERENCE:student_id")
        return (r["course_code"], r["student_id"])

    def _upsert_enrollments(self, pair: tuple[str, str]) -> None:
        self.db.conn.execute(
            "INSERT OR IGNORE INTO enrollments (course_code, student_id) VALUES (?, ?)",
            pair,
        )

    def _validate_fees_row(self, r: dict) -> FeeRecord:
        if not r["invoice_id"]:
            raise _RowError("BAD_FIELD:invoice_id")
        if self.get_student(r["student_id"]) is None:
            raise _RowError("DANGLING_REFERENCE:student_id")
        try:
            due = parse_money(r["amount_due"])
            paid = parse_money(r["amount_paid"])
        except ValueError:
            raise _RowError("BAD_FIELD:amount") from None
        try:
            due_date = _parse_date(r["due_date"])
        except ValueError:
            raise _RowError("BAD_FIELD:due_date") from None
        return FeeRecord(
            invoice_id=r["invoice_id"], student_id=r["student_id"],
            amount_due=due, amount_paid=paid, due_date=due_date,
        )

    def _upsert_fees(self, f: FeeRecord) -> None:
        self.db.conn.execute(
            "INSERT INTO fees (invoice_id, student_id, amount_due, amount_paid, "
            "due_date) VALUES (?, ?, ?, ?, ?) ON CONFLICT(invoice_id) DO UPDATE SET "
            "student_id=excluded.student_id, amount_due=excluded.amount_due, "
            "amount_paid=excluded.amount_paid, due_date=excluded.due_date",
            (f.invoice_id, f.student_id, f.amount_due, f.amount_paid,
             f.due_date.isoformat()),
        )

    def _validate_loans_row(self, r: dict) -> LoanRecord:
        if not r["loan_id"]:
            raise _RowError("BAD_FIELD:loan_id")
        if self.get_student(r["student_id"]) is None:
            raise _RowError("DANGLING_REFERENCE:student_id")
        try:
            due_date = _parse_date(r["due_date"])
            returned = _parse_date(r["returned_date"]) if r["returned_date"] else None
        except ValueError:
            raise _RowError("BAD_FIELD:date") from None
        return LoanRecord(
            loan_id=r["loan_id"], student_id=r["student_id"],
            book_title=r["book_title"], barcode=r["barcode"],
            due_date=due_date, returned_date=returned,
        )

    def _upsert_loans(self, l: LoanRecord) -> None:
        self.db.conn.execute(
            "INSERT INTO loans (loan_id, student_id, book_title, barcode, due_date, "
            "returned_date) VALUES (?, ?, ?, ?, ?, ?) ON CONFLICT(loan_id) DO UPDATE "
            "SET student_id=excluded.student_id, book_title=excluded.book_title, "
            "barcode=excluded.barcode, due_date=excluded.due_date, "
            "returned_date=excluded.returned_date",
            (l.loan_id, l.student_id, l.book_title, l.barcode,
             l.due_date.isoformat(),
             l.returned_date.isoformat() if l.returned_date else None),
        )

    # -- queries ------------------------------------------------------

    def get_student(self, student_id: str) -> Student | None:
        with self.db.lock:
            row = self.db.conn.execute(
                "SELECT * FROM students WHERE student_id = ?", (student_id,)
            ).fetchone()
        return _student(row) if row else None

    def all_students(self) -> list[Student]:
        with self.db.lock:
            rows = self.db.conn.execute(
                "SELECT * FROM students ORDER BY student_id"
            ).fetchall()
        return [_student(r) for r in rows]

    def staff_by_id(self, staff_id: str) -> StaffUser | None:
        with self.db.lock:
            row = self.db.conn.execute(
                "SELECT * FROM staff WHERE staff_id = ?", (staff_id,)
            ).fetchone()
        if row is None:
            return None
        return StaffUser(
            staff_id=row["staff_id"], name=row["name"], role=row["role"],
            password_hash=row["password_hash"], salt=row["salt"],
        )

    def courses_for_lecturer(self, lecturer_id: str) -> list[str]:
        with self.db.lock:
            rows = self.db.conn.execute(
                "SELECT DISTINCT course_code FROM timetable WHERE lecturer_id = ? "
                "ORDER BY course_code",
                (lecturer_id,),
            ).fetchall()
        return [r["course_code"] for r in rows]

    def course_exists(self, course_code: str) -> bool:
        with self.db.lock:
            row = self.db.conn.execute(
                "SELECT 1 FROM timetable WHERE course_code = ? "
                "UNION SELECT 1 FROM enrollments WHERE course_code = ?",
                (course_code, course_code),
            ).fetchone()
        return row is not None

    def students_for_course(self, course_code: str) -> list[Student]:
        if not self.course_exists(course_code):
            raise UnknownCourse(course_code)
        with self.db.lock:
            rows = self.db.conn.execute(
                "SELECT s.* FROM students s JOIN enrollments e "
                "ON e.student_id = s.student_id WHERE e.course_code = ? "
                "ORDER BY s.student_id",
                (course_code,),
            ).fetchall()
        return [_student(r) for r in rows]

    def students_for_lecturer(self, lecturer_id: str) -> list[Student]:
        """Union of students across every course in the lecturer's timetable."""
        if self.staff_by_id(lecturer_id) is None:
            raise UnknownStaff(lecturer_id)
        with self.db.lock:
            rows = self.db.conn.execute(
                "SELECT DISTINCT s.* FROM students s "
                "JOIN enrollments e ON e.student_id = s.student_id "
                "JOIN timetable t ON t.course_code = e.course_code "
                "WHERE t.lecturer_id = ? ORDER BY s.student_id",
                (lecturer_id,),
            ).fetchall()
        return [_student(r) for r in rows]

    def fee_records(self) -> list[FeeRecord]:
        with self.db.lock:
            rows = self.db.conn.execute(
                "SELECT * FROM fees ORDER BY student_id, invoice_id"
            ).fetchall()
        return [
            FeeRecord(
                invoice_id=r["invoice_id"], student_id=r["student_id"],
                amount_due=r["amount_due"], amount_paid=r["amount_paid"],
                due_date=_parse_date(r["due_date"]),
            )
            for r in rows
        ]

    def fee_by_invoice(self, invoice_id: str) -> FeeRecord | None:
        for rec in self.fee_records():
            if rec.invoice_id == invoice_id:
                return rec
        return None

    def loan_records(self) -> list[LoanRecord]:
        with self.db.lock:
            rows = self.db.conn.execute(
                "SELECT * FROM loans ORDER BY student_id, loan_id"
            ).fetchall()
        return [
            LoanRecord(
                loan_id=r["loan_id"], student_id=r["student_id"],
                book_title=r["book_title"], barcode=r["barcode"],
                due_date=_parse_date(r["due_date"]),
                returned_date=_parse_date(r["returned_date"]) if r["returned_date"] else None,
            )
            for r in rows
        ]

    def counts(self) -> dict[str, int]:
        out = {}
        with self.db.lock:
            for table in ("students", "staff", "timetable", "enrollments", "fees", "loans"):
                out[table] = self.db.conn.execute(
                    f"SELECT COUNT(*) AS n FROM {table}"
                ).fetchone()["n"]
        return out


class _RowError(Exception):
    pass


def _student(row: sqlite3.Row) -> Student:
    return Student(
        student_id=row["student_id"], name=row["name"], phone=row["phone"],
        email=row["email"], program=row["program"],
    )
