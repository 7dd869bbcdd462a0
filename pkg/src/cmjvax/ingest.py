"""Outbreak reconstruction from weekly case counts.

A province's weekly series is cut into outbreaks at every run of more
than ``gap_limit`` consecutive zero-case weeks; the next outbreak
starts at the first later week with a case.  Durations are whole weeks
between the first and last case week, so a single-week outbreak has
duration 0.
"""

import csv
import re
import warnings
from dataclasses import dataclass
from datetime import date
from typing import Dict, List, Sequence, Tuple

from .errors import EmptyInputError, OutOfDomainError
from .inference import OutbreakSizeRecord

_ISO_WEEK = re.compile(r"^(\d{4})-W(\d{2})$")


@dataclass(frozen=True)
class WeeklySeries:
    """Contiguous weekly case counts for one province."""

    province: str
    start_week: int
    cases: Tuple[int, ...]

    def __post_init__(self):
        for c in self.cases:
            if c < 0:
                raise OutOfDomainError("case counts must be nonnegative")

    def week(self, offset: int) -> int:
        return self.start_week + offset


@dataclass(frozen=True)
class OutbreakRecord:
    province: str
    start_week: int
    case_weeks: Tuple[Tuple[int, int], ...]
    initial_cases: int
    duration_weeks: int
    total_cases: int


def segment_outbreaks(series: WeeklySeries, gap_limit: int = 3) -> List[OutbreakRecord]:
    """Split a weekly series into outbreaks at gaps of more than
    ``gap_limit`` zero-case weeks."""
    if gap_limit < 0:
        raise OutOfDomainError("gap_limit must be nonnegative")
    records = []
    current: List[Tuple[int, int]] = []
    zeros = 0
    for offset, count in enumerate(series.cases):
        week = series.week(offset)
        if count > 0:
            if current and zeros > gap_limit:
                records.append(_finish(series.province, current))
                current = []
            current.append((week, count))
            zeros = 0
        else:
            zeros += 1
    if current:
        records.append(_finish(series.province, current))
    return records


def _finish(province: str, case_weeks: List[Tuple[int, int]]) -> OutbreakRecord:
    first_week = case_weeks[0][0]
    last_week = case_weeks[-1][0]
    return OutbreakRecord(
        province=province,
        start_week=first_week,
        case_weeks=tuple(case_weeks),
        initial_cases=case_weeks[0][1],
        duration_weeks=last_week - first_week,
        total_cases=sum(c for _, c in case_weeks),
    )


def filter_outbreaks(records: Sequence[OutbreakRecord], initial_cases: int = 1,
                     max_duration_weeks: int = 9
                     ) -> Tuple[List[OutbreakRecord], Dict[str, int]]:
    """Keep single-initial, short outbreaks; count what was dropped and why.

    ``max_duration_weeks`` is inclusive: the default 9 keeps durations
    0..9 and drops anything of 10 weeks or more (where overlapping
    outbreaks cannot be ruled out).
    """
    kept = []
    dropped = {"initial_cases": 0, "duration": 0}
    for rec in records:
        if rec.initial_cases != initial_cases:
            dropped["initial_cases"] += 1
        elif rec.duration_weeks > max_duration_weeks:
            dropped["duration"] += 1
        else:
            kept.append(rec)
    return kept, dropped


def size_records(records: Sequence[OutbreakRecord]) -> List[OutbreakSizeRecord]:
    """Per outbreak: initial cases and non-initial total births."""
    return [OutbreakSizeRecord(a=rec.initial_cases,
                               n=rec.total_cases - rec.initial_cases)
            for rec in records]


def _parse_week(token: str) -> int:
    token = token.strip()
    match = _ISO_WEEK.match(token)
    if match:
        year, week = int(match.group(1)), int(match.group(2))
        return date.fromisocalendar(year, week, 1).toordinal() // 7
    return int(token)


def read_weekly_csv(path) -> List[WeeklySeries]:
    """Read ``province,week,cases`` rows; weeks are integers or ISO weeks
    like 2005-W07.  Missing weeks inside a province's observed range
    count as zero-case weeks (with a warning)."""
    per_province: Dict[str, Dict[int, int]] = {}
    order: List[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                set(map(str.lower, reader.fieldnames)) != {"province", "week", "cases"}:
            raise OutOfDomainError(
                "weekly CSV needs exactly the columns province,week,cases")
        for row in reader:
            row = {k.lower(): v for k, v in row.items()}
            province = row["province"].strip()
            week = _parse_week(row["week"])
            cases = int(row["cases"])
            if cases < 0:
                raise OutOfDomainError("case counts must be nonnegative")
            if province not in per_province:
                per_province[province] = {}
                order.append(province)
            if week in per_province[province]:
                raise OutOfDomainError(
                    f"duplicate week {week} for province {province!r}")
            per_province[province][week] = cases
    if not per_province:
        raise EmptyInputError("no rows in weekly CSV")

    out = []
    for province in order:
        weeks = per_province[province]
        lo, hi = min(weeks), max(weeks)
        missing = [w for w in range(lo, hi + 1) if w not in weeks]
        if missing:
            warnings.warn(
                f"province {province!r}: {len(missing)} missing weeks treated "
                "as zero cases", UserWarning, stacklevel=2)
        cases = tuple(weeks.get(w, 0) for w in range(lo, hi + 1))
        out.append(WeeklySeries(province=province, start_week=lo, cases=cases))
    return out


def write_outbreaks_csv(path, records: Sequence[OutbreakRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("province,start_week,initial_cases,duration_weeks,total_cases\n")
        for rec in records:
            fh.write(f"{rec.province},{rec.start_week},{rec.initial_cases},"
                     f"{rec.duration_weeks},{rec.total_cases}\n")


def write_sizes_csv(path, sizes: Sequence[OutbreakSizeRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("a,n\n")
        for rec in sizes:
            fh.write(f"{rec.a},{rec.n}\n")


def read_sizes_csv(path) -> List[OutbreakSizeRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                set(map(str.lower, reader.fieldnames)) != {"a", "n"}:
            raise OutOfDomainError("size CSV needs exactly the columns a,n")
        for row in reader:
            row = {k.lower(): v for k, v in row.items()}
            out.append(OutbreakSizeRecord(a=int(row["a"]), n=int(row["n"])))
    if not out:
        raise EmptyInputError("no rows in size CSV")
    return out
