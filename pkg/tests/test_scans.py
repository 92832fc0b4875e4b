import random
from datetime import date, timedelta

from announcer.notifier import scans
from announcer.registry import FeeRecord, LoanRecord

from conftest import AS_OF


def test_overdue_fee_included_with_days(loaded_registry):
    hits = scans.scan_overdue_fees(loaded_registry, AS_OF)
    by_invoice = {h.record.invoice_id: h for h in hits}
    hit = by_invoice["INV001"]
    # due 2010-02-15, as_of 2010-03-01: 14 whole days
    assert hit.days_overdue == 14
    assert hit.balance == 25000


def test_settled_fee_excluded(loaded_registry):
    hits = scans.scan_overdue_fees(loaded_registry, AS_OF)
    assert "INV900" not in {h.record.invoice_id for h in hits}


def test_due_today_excluded_strict(loaded_registry):
    hits = scans.scan_overdue_fees(loaded_registry, AS_OF)
    assert "INV901" not in {h.record.invoice_id for h in hits}
    # but it is overdue tomorrow
    hits = scans.scan_overdue_fees(loaded_registry, AS_OF + timedelta(days=1))
    assert "INV901" in {h.record.invoice_id for h in hits}


def test_fee_scan_sorted(loaded_registry):
    hits = scans.scan_overdue_fees(loaded_registry, AS_OF)
    keys = [(h.record.student_id, h.record.invoice_id) for h in hits]
    assert keys == sorted(keys)
    assert len(hits) == 12


def test_loan_fine_rate_and_days(loaded_registry):
    hits = scans.scan_overdue_loans(loaded_registry, AS_OF, 50, 5000)
    assert len(hits) == 8
    hit = hits[0]
    # due 2010-02-19, as_of 2010-03-01: 10 days at 0.50 -> 5.00
    assert hit.days_overdue == 10
    assert hit.fine == 500


def test_loan_fine_capped():
    reg_fine = scans.OverdueLoan  # just exercising the cap arithmetic below
    rec = LoanRecord("L1", "S1", "B", "BC", date(2009, 1, 1), None)

    class OneLoanRegistry:
        def loan_records(self):
            return [rec]

    hits = scans.scan_overdue_loans(OneLoanRegistry(), date(2010, 1, 1), 50, 5000)
    assert hits[0].days_overdue == 365
    assert hits[0].fine == 5000  # 365 * 0.50 capped at 50.00


def test_returned_late_loan_excluded(loaded_registry):
    hits = scans.scan_overdue_loans(loaded_registry, AS_OF, 50, 5000)
    assert "LN900" not in {h.record.loan_id for h in hits}
    assert "LN901" not in {h.record.loan_id for h in hits}


class FakeFeeRegistry:
    def __init__(self, records):
        self._records = records

    def fee_records(self):
        return self._records


class FakeLoanRegistry:
    def __init__(self, records):
        self._records = records

    def loan_records(self):
        return self._records


def _random_date(rng):
    return date(2010, 1, 1) + timedelta(days=rng.randint(0, 400))


def test_fee_scan_matches_brute_force_oracle():
    rng = random.Random(2024)
    records = [
        FeeRecord(
            invoice_id=f"I{i:04d}",
            student_id=f"S{rng.randint(1, 200):03d}",
            amount_due=rng.randint(0, 100000),
            amount_paid=rng.choice([0, rng.randint(0, 100000)]),
            due_date=_random_date(rng),
        )
        for i in range(1000)
    ]
    registry = FakeFeeRegistry(records)
    for _ in range(50):
        as_of = _random_date(rng)
        # independent nested filter, no shared code with the scan
        expected = sorted(
            (
                (r.student_id, r.invoice_id, r.amount_due - r.amount_paid,
                 (as_of - r.due_date).days)
                for r in records
                if (r.amount_due - r.amount_paid) > 0 and r.due_date < as_of
            ),
        )
        got = [
            (h.record.student_id, h.record.invoice_id, h.balance, h.days_overdue)
            for h in scans.scan_overdue_fees(registry, as_of)
        ]
        assert got == expected


def test_loan_scan_matches_brute_force_oracle():
    rng = random.Random(777)
    records = [
        LoanRecord(
            loan_id=f"L{i:04d}",
            student_id=f"S{rng.randint(1, 200):03d}",
            book_title=f"Book {i}",
            barcode=f"BC{i:05d}",
            due_date=_random_date(rng),
            returned_date=_random_date(rng) if rng.random() < 0.4 else None,
        )
        for i in range(1000)
    ]
    registry = FakeLoanRegistry(records)
    rate, cap = 50, 5000
    for _ in range(50):
        as_of = _random_date(rng)
        expected = sorted(
            (
                (r.student_id, r.loan_id, (as_of - r.due_date).days,
                 min((as_of - r.due_date).days * rate, cap))
                for r in records
                if r.returned_date is None and r.due_date < as_of
            ),
        )
        got = [
            (h.record.student_id, h.record.loan_id, h.days_overdue, h.fine)
            for h in scans.scan_overdue_loans(registry, as_of, rate, cap)
        ]
        assert got == expected
