from datetime import date

import pytest

from announcer.registry import (
    Registry,
    UnknownCourse,
    UnknownStaff,
    UnparseablePhone,
    MissingHeader,
    is_e164,
    normalize_phone,
)

from conftest import make_fixture_csvs, write_csv


# -- phone normalization -------------------------------------------------

def test_normalize_national_format():
    # hand-applied rules: strip separators, leading 0 -> +60
    assert normalize_phone("012-345 6789", "+60") == "+60123456789"


def test_normalize_already_e164():
    assert normalize_phone("+60123456789", "+60") == "+60123456789"


def test_normalize_rejects_letters():
    with pytest.raises(UnparseablePhone):
        normalize_phone("12ab", "+60")


def test_normalize_rejects_bad_length():
    with pytest.raises(UnparseablePhone):
        normalize_phone("0123", "+60")
    with pytest.raises(UnparseablePhone):
        normalize_phone("+1234567890123456", "+60")


def test_normalize_parenthesised():
    assert normalize_phone("(012) 345-6789", "+60") == "+60123456789"


def test_normalize_bare_digits_assumed_country_coded():
    assert normalize_phone("60123456789", "+60") == "+60123456789"


# -- imports -------------------------------------------------------------

def test_import_clean_students(registry, tmp_path):
    path = write_csv(
        tmp_path / "s.csv",
        ["student_id", "name", "phone", "email", "program"],
        [
            ["S1", "Ali", "0123456789", "ali@x.edu", "BIT"],
            ["S2", "Siti", "+60198765432", "siti@x.edu", "BIT"],
            ["S3", "Raj", "", "", "BCS"],
        ],
    )
    report = registry.import_csv("STUDENTS", path)
    assert report.accepted == 3
    assert report.rejected == []
    assert registry.get_student("S1").phone == "+60123456789"


def test_import_rejects_bad_phone_row_keeps_others(registry, tmp_path):
    path = write_csv(
        tmp_path / "s.csv",
        ["student_id", "name", "phone", "email", "program"],
        [
            ["S1", "Ali", "abc", "ali@x.edu", "BIT"],
            ["S2", "Siti", "0123456789", "siti@x.edu", "BIT"],
        ],
    )
    report = registry.import_csv("STUDENTS", path)
    assert report.accepted == 1
    assert len(report.rejected) == 1
    line, reason = report.rejected[0]
    assert line == 2
    assert "BAD_FIELD" in reason and "phone" in reason


def test_import_dangling_enrollment(registry, tmp_path):
    write_csv(
        tmp_path / "s.csv",
        ["student_id", "name", "phone", "email", "program"],
        [["S1", "Ali", "", "", ""]],
    )
    registry.import_csv("STUDENTS", tmp_path / "s.csv")
    path = write_csv(
        tmp_path / "e.csv",
        ["course_code", "student_id"],
        [["C1", "S1"], ["C1", "S999"]],
    )
    report = registry.import_csv("ENROLLMENTS", path)
    assert report.accepted == 1
    assert report.rejected[0][0] == 3
    assert "DANGLING_REFERENCE" in report.rejected[0][1]


def test_import_missing_header(registry, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("foo,bar\n1,2\n")
    with pytest.raises(MissingHeader):
        registry.import_csv("STUDENTS", path)


def test_import_bad_email(registry, tmp_path):
    path = write_csv(
        tmp_path / "s.csv",
        ["student_id", "name", "phone", "email", "program"],
        [["S1", "Ali", "", "a@@x.edu", ""]],
    )
    report = registry.import_csv("STUDENTS", path)
    assert report.accepted == 0
    assert "email" in report.rejected[0][1]


def test_reimport_is_idempotent(registry, tmp_path):
    csvs = make_fixture_csvs(tmp_path / "csv")
    for kind in ("students", "staff", "timetable", "enrollments", "fees", "loans"):
        registry.import_csv(kind.upper(), csvs[kind])
    before = registry.counts()
    students_before = registry.all_students()
    fees_before = registry.fee_records()
    for kind in ("students", "timetable", "enrollments", "fees", "loans"):
        report = registry.import_csv(kind.upper(), csvs[kind])
        assert report.rejected == []
    assert registry.counts() == before
    assert registry.all_students() == students_before
    assert registry.fee_records() == fees_before


def test_staff_import_hashes_password(loaded_registry):
    staff = loaded_registry.staff_by_id("L1")
    assert staff.role == "LECTURER"
    assert "lecturer-pw" not in staff.password_hash
    assert len(staff.salt) == 32  # 16 random bytes, hex


def test_timetable_rejects_dangling_lecturer(registry, tmp_path):
    path = write_csv(
        tmp_path / "t.csv",
        ["course_code", "lecturer_id", "day_of_week", "start_time", "end_time", "room"],
        [["C1", "L9", "MON", "09:00", "10:00", "R1"]],
    )
    report = registry.import_csv("TIMETABLE", path)
    assert report.accepted == 0
    assert "DANGLING_REFERENCE" in report.rejected[0][1]


def test_timetable_rejects_inverted_times(loaded_registry, tmp_path):
    path = write_csv(
        tmp_path / "t.csv",
        ["course_code", "lecturer_id", "day_of_week", "start_time", "end_time", "room"],
        [["C9", "L1", "MON", "11:00", "09:00", "R1"]],
    )
    report = loaded_registry.import_csv("TIMETABLE", path)
    assert report.accepted == 0


# -- queries -------------------------------------------------------------

def test_students_for_course(loaded_registry):
    students = loaded_registry.students_for_course("C1")
    assert [s.student_id for s in students] == [f"S{i:03d}" for i in range(1, 11)]


def test_students_for_unknown_course(loaded_registry):
    with pytest.raises(UnknownCourse):
        loaded_registry.students_for_course("NOPE")


def test_students_for_lecturer_union_sorted_deduped(loaded_registry):
    got = [s.student_id for s in loaded_registry.students_for_lecturer("L1")]
    # C1 has S001..S010, C2 has S005..S015: union is S001..S015
    assert got == [f"S{i:03d}" for i in range(1, 16)]
    assert got == sorted(set(got))


def test_students_for_lecturer_empty(loaded_registry, tmp_path):
    # R1 has no timetable rows
    assert loaded_registry.students_for_lecturer("R1") == []


def test_students_for_unknown_staff(loaded_registry):
    with pytest.raises(UnknownStaff):
        loaded_registry.students_for_lecturer("L999")


def test_lecturer_query_matches_nested_loop_oracle(loaded_registry):
    reg = loaded_registry
    with reg.db.lock:
        timetable = reg.db.conn.execute("SELECT * FROM timetable").fetchall()
        enrollments = reg.db.conn.execute("SELECT * FROM enrollments").fetchall()
    for lecturer in ("L1", "L2"):
        expected = set()
        for t in timetable:
            if t["lecturer_id"] != lecturer:
                continue
            for e in enrollments:
                if e["course_code"] == t["course_code"]:
                    expected.add(e["student_id"])
        got = {s.student_id for s in reg.students_for_lecturer(lecturer)}
        assert got == expected


def test_stored_students_satisfy_invariants(loaded_registry):
    for s in loaded_registry.all_students():
        assert s.student_id
        assert s.phone == "" or is_e164(s.phone)
        assert s.email == "" or s.email.count("@") == 1


def test_fee_balance_computed(loaded_registry):
    rec = loaded_registry.fee_by_invoice("INV901")
    assert rec.balance == 20000  # 300.00 - 100.00 in cents
