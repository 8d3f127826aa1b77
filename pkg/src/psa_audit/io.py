"""Tabular file schemas and readers/writers.

All files are comma-separated UTF-8 with a header row.  Multi-valued
cells (charge lists, disposition lists) join their elements with ";".
Dates are ISO 8601, booleans are "true"/"false", missing values are
empty cells.  Writers emit "\n" newlines and fixed column orders so
repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .charges import ChargeCode, Derivative, parse_charge_code
from .engine import SupervisionLevel
from .errors import SchemaError
from .linkage import CourtCase, PsaRecord

PSA_COLUMNS = (
    "record_id",
    "sfid",
    "name",
    "dob",
    "arrest_date",
    "psa_date",
    "fta",
    "nca",
    "nvca_flag",
    "booking_charges",
    "age_at_arrest",
    "prior_conviction",
    "prior_violent_convictions",
    "recorded_exclusion",
    "recorded_bumpup",
    "recorded_recommendation",
)

COURT_COLUMNS = (
    "court_number",
    "sfid",
    "name",
    "dob",
    "arrest_date",
    "race",
    "booking_charges",
    "filed_charges",
    "dispositions",
)

GROUND_TRUTH_COLUMNS = (
    "record_id",
    "kind",
    "scenario",
    "group",
    "true_match",
    "disposed",
    "conviction_charges",
    "affected",
    "duplicate_of",
)

RACE_VALUES = {"B", "C", "F", "H", "I", "J", "O", "U", "W", ""}


@dataclass(frozen=True)
class RowIssue:
    row: int  # 1-based data row number (header not counted)
    record_id: str
    message: str

    def __str__(self):
        return f"row {self.row} ({self.record_id or '?'}): {self.message}"


def render_bool(value: bool | None) -> str:
    if value is None:
        return ""
    return "true" if value else "false"


def parse_bool(text: str, where: str) -> bool | None:
    t = text.strip().lower()
    if t == "":
        return None
    if t == "true":
        return True
    if t == "false":
        return False
    raise ValueError(f"{where}: expected true/false, got {text!r}")


def parse_int(text: str, where: str) -> int | None:
    t = text.strip()
    if t == "":
        return None
    try:
        return int(t)
    except ValueError:
        raise ValueError(f"{where}: expected an integer, got {text!r}") from None


def parse_date(text: str, where: str) -> date | None:
    t = text.strip()
    if t == "":
        return None
    try:
        return date.fromisoformat(t)
    except ValueError:
        raise ValueError(f"{where}: expected ISO date, got {text!r}") from None


def join_charges(charges: Iterable[ChargeCode]) -> str:
    return ";".join(c.raw or c.normalized for c in charges)


def split_charges(
    cell: str, prefixes: Mapping[str, Derivative] | None = None
) -> tuple[ChargeCode, ...]:
    parts = [p.strip() for p in cell.split(";") if p.strip()]
    return tuple(parse_charge_code(p, prefixes) for p in parts)


def _read_rows(path: str | Path, required: Sequence[str]) -> list[dict]:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"{path}: file not found")
    with p.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing required columns {missing}")
        return list(reader)


def read_psa_records(
    path: str | Path, prefixes: Mapping[str, Derivative] | None = None
) -> tuple[list[PsaRecord], list[RowIssue]]:
    """Parse an assessment-record file.

    Returns (records, issues).  Rows that cannot be parsed are skipped and
    reported; soft invariant violations (e.g. a form date more than a day
    before the arrest date) keep the row but add a warning issue.
    """
    rows = _read_rows(path, PSA_COLUMNS)
    records, issues = [], []
    for i, row in enumerate(rows, start=1):
        rid = (row.get("record_id") or "").strip()
        try:
            rec = PsaRecord(
                record_id=rid,
                sfid=(row.get("sfid") or "").strip(),
                name=(row.get("name") or "").strip(),
                dob=parse_date(row.get("dob") or "", "dob"),
                arrest_date=parse_date(row.get("arrest_date") or "", "arrest_date"),
                psa_date=parse_date(row.get("psa_date") or "", "psa_date"),
                fta=_parse_score(row.get("fta") or "", "fta"),
                nca=_parse_score(row.get("nca") or "", "nca"),
                nvca_flag=parse_bool(row.get("nvca_flag") or "", "nvca_flag"),
                booking_charges=split_charges(row.get("booking_charges") or "", prefixes),
                age_at_arrest=parse_int(row.get("age_at_arrest") or "", "age_at_arrest"),
                prior_conviction=parse_bool(row.get("prior_conviction") or "", "prior_conviction"),
                prior_violent_convictions=parse_int(
                    row.get("prior_violent_convictions") or "", "prior_violent_convictions"
                ),
                recorded_exclusion=parse_bool(row.get("recorded_exclusion") or "", "recorded_exclusion"),
                recorded_bumpup=parse_bool(row.get("recorded_bumpup") or "", "recorded_bumpup"),
                recorded_recommendation=_parse_level(row.get("recorded_recommendation") or ""),
            )
        except Exception as exc:
            issues.append(RowIssue(row=i, record_id=rid, message=str(exc)))
            continue
        for soft in rec.validate():
            issues.append(RowIssue(row=i, record_id=rid, message=f"warning: {soft}"))
        records.append(rec)
    return records, issues


def _parse_score(text: str, where: str) -> int | None:
    v = parse_int(text, where)
    if v is not None and not (1 <= v <= 6):
        raise ValueError(f"{where}: must be in 1..6, got {v}")
    return v


def _parse_level(text: str) -> SupervisionLevel | None:
    t = text.strip()
    if t == "":
        return None
    return SupervisionLevel.from_label(t)


def read_court_cases(
    path: str | Path, prefixes: Mapping[str, Derivative] | None = None
) -> tuple[list[CourtCase], list[RowIssue]]:
    rows = _read_rows(path, COURT_COLUMNS)
    cases, issues = [], []
    for i, row in enumerate(rows, start=1):
        cn = (row.get("court_number") or "").strip()
        try:
            if not cn:
                raise ValueError("court_number must be non-empty")
            race = (row.get("race") or "").strip().upper()
            if race not in RACE_VALUES:
                raise ValueError(f"race: unknown designation {race!r}")
            filed = split_charges(row.get("filed_charges") or "", prefixes)
            disp_cell = (row.get("dispositions") or "").strip()
            if disp_cell:
                dispositions = tuple(parse_int(part, "dispositions") for part in disp_cell.split(";"))
            else:
                # an entirely empty cell means every filed charge is pending
                dispositions = (None,) * len(filed)
            if len(dispositions) != len(filed):
                raise ValueError(
                    f"dispositions: {len(dispositions)} codes for {len(filed)} filed charges"
                )
            cases.append(
                CourtCase(
                    court_number=cn,
                    sfid=(row.get("sfid") or "").strip(),
                    name=(row.get("name") or "").strip(),
                    dob=parse_date(row.get("dob") or "", "dob"),
                    arrest_date=parse_date(row.get("arrest_date") or "", "arrest_date"),
                    race=race,
                    booking_charges=split_charges(row.get("booking_charges") or "", prefixes),
                    filed_charges=filed,
                    dispositions=dispositions,
                )
            )
        except Exception as exc:
            issues.append(RowIssue(row=i, record_id=cn, message=str(exc)))
            continue
    return cases, issues


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_render(row.get(c, "")) for c in columns])


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return render_bool(value)
    if isinstance(value, float):
        return format(value, ".10g")
    if isinstance(value, SupervisionLevel):
        return value.label
    if isinstance(value, date):
        return value.isoformat()
    return str(value)


SCHEMA_DOC = """\
File schemas (all comma-separated UTF-8 with a header row; lists join
elements with ';'; dates ISO 8601; booleans true/false; missing = empty)

psa_records.csv (input to score/audit/validate/dedupe/link)
  record_id     unique row id
  sfid          person identifier shared with the court file
  name, dob     as recorded
  arrest_date   date of the arrest that triggered the assessment
  psa_date      date the assessment was administered
  fta, nca      1..6 scaled predictions
  nvca_flag     recorded violence flag (true/false)
  booking_charges            ';'-joined charge codes, first = top charge
  age_at_arrest              years
  prior_conviction           true/false
  prior_violent_convictions  count
  recorded_exclusion, recorded_bumpup   as recorded on the form
  recorded_recommendation    OR-NAS | OR-Minimum | SFPDP-ACM |
                             Release-Not-Recommended (or rank 1..4)

court_cases.csv (input to audit/validate/consistency/link)
  court_number  unique case id (one person may have several)
  sfid, name, dob
  arrest_date   the case's arrest date
  race          one of B C F H I J O U W, or empty
  booking_charges  ';'-joined charge codes booked at intake
  filed_charges    ';'-joined charge codes filed by the prosecutor
  dispositions     ';'-joined integer codes aligned with filed_charges;
                   an empty element means that charge is still pending,
                   and an entirely empty cell means all charges are pending

ground_truth.csv (written by simulate)
  record_id, kind (base|duplicate|incomplete), scenario, group,
  true_match (';'-joined court numbers), disposed, conviction_charges,
  affected (final recommendation strictly higher under booking),
  duplicate_of (record_id of the copied row, duplicates only)

Charge code syntax: [prefix/]statute[(sub)(sub)] [body] [class] [degree]
  e.g. '187(A) PC F 1', '664/288(A) PC F'. '664/' marks an attempt; other
  derivative prefixes are defined by the charge catalog.
"""
