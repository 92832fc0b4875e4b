"""Overdue-fee and overdue-loan scans over the registry."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

from ..registry import FeeRecord, LoanRecord, Registry


@dataclass(frozen=True)
class OverdueFee:
    record: FeeRecord
    balance: int  # cents
    days_overdue: int


@dataclass(frozen=True)
class OverdueLoan:
    record: LoanRecord
    days_overdue: int
    fine: int  # cents


def scan_overdue_fees(registry: Registry, as_of: date) -> list[OverdueFee]:
    """Fee records with a positive balance strictly past their due date,
    sorted by student then invoice."""
    out = []
    for rec in registry.fee_records():
        balance = rec.balance
        if balance > 0 and rec.due_date < as_of:
            out.append(
                OverdueFee(
                    record=rec,
                    balance=balance,
                    days_overdue=(as_of - rec.due_date).days,
                )
            )
    out.sort(key=lambda item: (item.record.student_id, item.record.invoice_id))
    return out


def scan_overdue_loans(
    registry: Registry, as_of: date, fine_rate_per_day: int, fine_cap: int
) -> list[OverdueLoan]:
    """Unreturned loans strictly past their due date; fine accrues per
    day and is capped."""
    out = []
    for rec in registry.loan_records():
        if rec.returned_date is None and rec.due_date < as_of:
            days = (as_of - rec.due_date).days
            out.append(
                OverdueLoan(
                    record=rec,
                    days_overdue=days,
                    fine=min(days * fine_rate_per_day, fine_cap),
                )
            )
    out.sort(key=lambda item: (item.record.student_id, item.record.loan_id))
    return out
