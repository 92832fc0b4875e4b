"""Shared fixtures: a small campus data set, CSV builders, and a
real HTTP server harness for CLI/acceptance tests.

The standard fixture is 50 students, two lecturers with timetables,
12 overdue fee invoices and 8 overdue loans as of AS_OF.
"""

from __future__ import annotations

import csv
import socket
import threading
import time
from datetime import date
from pathlib import Path

import pytest
import uvicorn

from announcer.config import Config
from announcer.registry import Database, Registry

AS_OF = date(2010, 3, 1)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible PASS/FAIL line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    label = (item.function.__doc__ or item.name).strip().splitlines()[0]
    status = "PASS" if report.passed else "FAIL"
    terminal = item.config.pluginmanager.get_plugin("terminalreporter")
    if terminal is not None:
        terminal.write_line(f"[ACCEPTANCE] {status}: {label}")

# students S001..S012 owe fees; S021..S028 hold overdue books
OVERDUE_FEE_STUDENTS = [f"S{i:03d}" for i in range(1, 13)]
OVERDUE_LOAN_STUDENTS = [f"S{i:03d}" for i in range(21, 29)]


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def student_phone(i: int) -> str:
    return f"+60120000{i:03d}"


def make_fixture_csvs(dirpath: Path) -> dict[str, Path]:
    dirpath.mkdir(parents=True, exist_ok=True)
    students = [
        [f"S{i:03d}", f"Student {i:03d}", f"012-0000 {i:03d}",
         f"s{i:03d}@campus.example", "BIT"]
        for i in range(1, 51)
    ]
    staff = [
        ["L1", "Dr Lim", "LECTURER", "lecturer-pw"],
        ["L2", "Dr Tan", "LECTURER", "lecturer2-pw"],
        ["R1", "Ms Records", "RECORDS", "records-pw"],
        ["B1", "Mr Library", "LIBRARY", "library-pw"],
        ["A1", "Admin", "ADMIN", "admin-pw"],
    ]
    timetable = [
        ["C1", "L1", "MON", "09:00", "11:00", "RM101"],
        ["C2", "L1", "TUE", "14:00", "16:00", "RM202"],
        ["C3", "L2", "WED", "10:00", "12:00", "RM303"],
    ]
    # C1: S001..S010, C2: S005..S015 (overlap), C3: S030..S034
    enrollments = (
        [["C1", f"S{i:03d}"] for i in range(1, 11)]
        + [["C2", f"S{i:03d}"] for i in range(5, 16)]
        + [["C3", f"S{i:03d}"] for i in range(30, 35)]
    )
    fees = [
        # 12 overdue: due 2010-02-15, nothing paid
        [f"INV{i:03d}", f"S{i:03d}", "250.00", "0.00", "2010-02-15"]
        for i in range(1, 13)
    ] + [
        ["INV900", "S040", "250.00", "250.00", "2010-02-15"],  # settled
        ["INV901", "S041", "300.00", "100.00", "2010-03-01"],  # due today: not overdue
        ["INV902", "S042", "300.00", "0.00", "2010-04-01"],    # future
    ]
    loans = [
        # 8 overdue: due 2010-02-19 (10 days before AS_OF)
        [f"LN{i:03d}", f"S{i:03d}", f"Book {i}", f"BC{i:05d}", "2010-02-19", ""]
        for i in range(21, 29)
    ] + [
        ["LN900", "S045", "Returned Late", "BC90000", "2010-02-01", "2010-02-20"],
        ["LN901", "S046", "Not Due Yet", "BC90100", "2010-03-20", ""],
    ]
    return {
        "students": write_csv(dirpath / "students.csv", ["student_id", "name", "phone", "email", "program"], students),
        "staff": write_csv(dirpath / "staff.csv", ["staff_id", "name", "role", "password"], staff),
        "timetable": write_csv(dirpath / "timetable.csv", ["course_code", "lecturer_id", "day_of_week", "start_time", "end_time", "room"], timetable),
        "enrollments": write_csv(dirpath / "enrollments.csv", ["course_code", "student_id"], enrollments),
        "fees": write_csv(dirpath / "fees.csv", ["invoice_id", "student_id", "amount_due", "amount_paid", "due_date"], fees),
        "loans": write_csv(dirpath / "loans.csv", ["loan_id", "student_id", "book_title", "barcode", "due_date", "returned_date"], loans),
    }


@pytest.fixture
def db(tmp_path):
    database = Database(tmp_path / "announcer.db")
    yield database
    database.close()


@pytest.fixture
def registry(db):
    return Registry(db, default_country="+60")


@pytest.fixture
def loaded_registry(registry, tmp_path):
    csvs = make_fixture_csvs(tmp_path / "csv")
    for kind in ("students", "staff", "timetable", "enrollments", "fees", "loans"):
        report = registry.import_csv(kind.upper(), csvs[kind])
        assert report.rejected == [], f"{kind}: {report.rejected}"
    return registry


@pytest.fixture
def test_config(tmp_path):
    return Config(
        db_path=str(tmp_path / "announcer.db"),
        spool_dir=str(tmp_path / "spool"),
        config_dir=tmp_path,
        cooldown_days=7,
        fine_rate_per_day=50,
        fine_cap=5000,
        suppress_empty=True,
    )


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class ApiServer:
    """Real uvicorn server on a background thread, for tests that must
    exercise actual HTTP (the CLI and the acceptance flows)."""

    def __init__(self, app):
        self.port = free_port()
        self.base_url = f"http://127.0.0.1:{self.port}"
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="warning")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> "ApiServer":
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("uvicorn did not start in time")
            time.sleep(0.02)
        return self

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=5)
