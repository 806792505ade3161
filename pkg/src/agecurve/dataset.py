"""Survey microdata: records, CSV loading, filtering, and cohort bins.

Records are immutable and every operation returns new objects, so lists of
records can be shared freely between model fits. Loading is tolerant of
messy input (rows are dropped with a counted reason, never silently) while
filtering is strict: an empty result raises, because every downstream
consumer needs at least one row.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "CONTROL_VARS",
    "DEFAULT_MISSING",
    "DEFAULT_LABOR_MERGE",
    "ESS_SCHEMA",
    "IDENTITY_SCHEMA",
    "RoundYearMap",
    "DEFAULT_ROUND_MAP",
    "DataError",
    "EmptySampleError",
    "SurveyRecord",
    "LoadReport",
    "FilterSpec",
    "FilterReport",
    "load_csv",
    "save_csv",
    "apply_filter",
    "cohort_bin",
]

# Categorical respondent attributes that models may condition on. These are
# the only fields allowed to be missing on a record.
CONTROL_VARS = ("sex", "education", "marital", "labor_status")

DEFAULT_MISSING = frozenset({"", "NA", "NaN", "nan", "na", "."})

# The survey's "main activity" question has a community/military-service
# category with tiny cell counts; it is folded into "other" on load.
DEFAULT_LABOR_MERGE: Mapping[str, str] = {
    "community or military service": "other",
    "community/military service": "other",
}

#: Canonical column names, for files written by :func:`save_csv`.
IDENTITY_SCHEMA: Mapping[str, str] = {
    name: name
    for name in (
        "country",
        "round",
        "period_year",
        "age",
        "happiness",
        "weight",
        *CONTROL_VARS,
    )
}

#: Column mapping for European Social Survey integrated files.
ESS_SCHEMA: Mapping[str, str] = {
    "country": "cntry",
    "round": "essround",
    "age": "agea",
    "happiness": "happy",
    "weight": "dweight",
    "sex": "gndr",
    "education": "eisced",
    "marital": "maritalb",
    "labor_status": "mnactic",
}


class DataError(ValueError):
    """Input data cannot be interpreted (bad header, no usable rows)."""


class EmptySampleError(DataError):
    """A filter removed every record, so no model could be fit."""


@dataclass(frozen=True)
class RoundYearMap:
    """Linear mapping between survey round number and fieldwork year.

    The default places round 1 in 2002 and advances two years per round,
    so rounds 1 through 8 span 2002 to 2016.
    """

    base: int = 2000
    step: int = 2

    def year(self, round_number: int) -> int:
        return self.base + self.step * round_number

    def round_for(self, year: int) -> int | None:
        """Inverse lookup; ``None`` when the year is off the grid."""
        offset, remainder = divmod(year - self.base, self.step)
        if remainder != 0 or offset < 1:
            return None
        return offset


DEFAULT_ROUND_MAP = RoundYearMap()


@dataclass(frozen=True)
class SurveyRecord:
    """One survey response.

    ``birth_year`` is derived, not stored: it always equals
    ``period_year - age``, so the three fields can never disagree.
    ``happiness`` is kept as a float; the 0..10 integer scale of real
    survey data is enforced at load time, while synthetic generators are
    free to produce continuous values.

    ``mediator`` is a synthetic-data channel used by the simulation
    experiments. It is never read from CSV files.
    """

    country: str
    round: int
    period_year: int
    age: int
    happiness: float
    weight: float
    sex: str | None = None
    education: str | None = None
    marital: str | None = None
    labor_status: str | None = None
    mediator: float | None = None
    birth_year: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.age < 15:
            raise ValueError(f"age {self.age} below the survey minimum of 15")
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight}")
        if self.round < 1:
            raise ValueError(f"round must be a positive integer, got {self.round}")
        object.__setattr__(self, "birth_year", self.period_year - self.age)

    def control(self, name: str) -> str | None:
        if name not in CONTROL_VARS:
            raise KeyError(f"unknown control variable {name!r}")
        return getattr(self, name)


@dataclass
class LoadReport:
    """Row accounting for one :func:`load_csv` call."""

    rows_read: int = 0
    rows_kept: int = 0
    dropped: Counter = field(default_factory=Counter)
    notes: list[str] = field(default_factory=list)

    def summary(self) -> str:
        lines = [f"rows read: {self.rows_read}", f"rows kept: {self.rows_kept}"]
        for reason, count in sorted(self.dropped.items()):
            lines.append(f"dropped ({reason}): {count}")
        lines.extend(self.notes)
        return "\n".join(lines)


@dataclass(frozen=True)
class FilterSpec:
    """Declarative sample restriction.

    ``listwise_vars`` names control variables whose missingness should
    drop the record (listwise deletion); only members of
    :data:`CONTROL_VARS` can be missing, so only those are accepted.
    """

    min_age: int = 15
    max_age: int | None = None
    countries: frozenset[str] | None = None
    listwise_vars: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.min_age < 15:
            raise ValueError("min_age below the survey minimum of 15")
        if self.max_age is not None and self.max_age < self.min_age:
            raise ValueError(f"max_age {self.max_age} below min_age {self.min_age}")
        unknown = set(self.listwise_vars) - set(CONTROL_VARS)
        if unknown:
            raise ValueError(f"listwise_vars not control variables: {sorted(unknown)}")


@dataclass
class FilterReport:
    n_in: int = 0
    n_kept: int = 0
    dropped: Counter = field(default_factory=Counter)


def _parse_number(text: str, missing: frozenset[str]) -> float | None:
    s = text.strip()
    if s in missing:
        return None
    try:
        return float(s)
    except ValueError:
        return None


def load_csv(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    *,
    missing: Iterable[str] = DEFAULT_MISSING,
    round_map: RoundYearMap = DEFAULT_ROUND_MAP,
    labor_merge: Mapping[str, str] = DEFAULT_LABOR_MERGE,
) -> tuple[list[SurveyRecord], LoadReport]:
    """Read survey rows from a CSV file.

    ``schema`` maps the logical field names (keys of
    :data:`IDENTITY_SCHEMA`) to the file's column names; omitted control
    variables are simply left unset on the records. The file must supply
    ``country``, ``age``, ``happiness``, ``weight``, and at least one of
    ``round`` / ``period_year``. When only years are present, rounds are
    recovered through ``round_map``; if any observed year is off that
    grid, all years are instead ranked and the ranks used as synthetic
    round numbers (the year values themselves stay untouched).

    Rows that cannot be used are dropped and tallied by reason in the
    returned :class:`LoadReport`; the row order of the file is preserved.
    Raises :class:`DataError` if mapped columns are absent from the
    header or no usable rows remain. When ``schema`` is ``None``, the
    canonical names of :data:`IDENTITY_SCHEMA` are assumed and optional
    columns (controls, and one of round / period_year) may simply be
    absent from the file; an explicit schema is enforced exactly.
    """
    explicit_schema = schema is not None
    schema = dict(schema or IDENTITY_SCHEMA)
    missing = frozenset(missing)

    required = ("country", "age", "happiness", "weight")
    for logical in required:
        if logical not in schema:
            raise DataError(f"schema must map the {logical!r} column")
    if "round" not in schema and "period_year" not in schema:
        raise DataError("schema must map 'round' or 'period_year' (or both)")

    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        if not explicit_schema:
            optional = set(CONTROL_VARS) | {"round", "period_year"}
            schema = {
                logical: col
                for logical, col in schema.items()
                if logical not in optional or col in header
            }
            if "round" not in schema and "period_year" not in schema:
                raise DataError(
                    f"{path} has neither a 'round' nor a 'period_year' column"
                )
        absent = [col for col in schema.values() if col not in header]
        if absent:
            raise DataError(f"columns not in file header: {absent}")
        raw_rows = list(reader)

    report = LoadReport(rows_read=len(raw_rows))

    def cell(row: Mapping[str, str], logical: str) -> str:
        return (row.get(schema[logical]) or "").strip()

    # First pass: parse and validate, keeping provisional tuples so that
    # synthetic rounds (a rank over all observed years) can be assigned
    # after every year has been seen.
    parsed: list[dict] = []
    years_seen: set[int] = set()
    need_synthetic = False
    for row in raw_rows:
        age_val = _parse_number(cell(row, "age"), missing)
        if age_val is None or age_val != int(age_val):
            report.dropped["unparseable age"] += 1
            continue
        age = int(age_val)
        if age < 15 or age > 120:
            report.dropped["age out of range"] += 1
            continue

        happy = _parse_number(cell(row, "happiness"), missing)
        if happy is None:
            report.dropped["unparseable happiness"] += 1
            continue
        if not 0.0 <= happy <= 10.0:
            report.dropped["happiness out of range"] += 1
            continue

        weight = _parse_number(cell(row, "weight"), missing)
        if weight is None:
            report.dropped["unparseable weight"] += 1
            continue
        if weight <= 0:
            report.dropped["nonpositive weight"] += 1
            continue

        rnd: int | None = None
        year: int | None = None
        if "round" in schema:
            rnd_val = _parse_number(cell(row, "round"), missing)
            if rnd_val is None or rnd_val != int(rnd_val) or int(rnd_val) < 1:
                report.dropped["unparseable round"] += 1
                continue
            rnd = int(rnd_val)
        if "period_year" in schema:
            year_val = _parse_number(cell(row, "period_year"), missing)
            if year_val is None or year_val != int(year_val):
                report.dropped["unparseable survey year"] += 1
                continue
            year = int(year_val)
        if rnd is None and year is not None:
            years_seen.add(year)
            if round_map.round_for(year) is None:
                need_synthetic = True

        controls: dict[str, str | None] = {}
        for name in CONTROL_VARS:
            if name in schema:
                value = cell(row, name)
                if value in missing:
                    controls[name] = None
                else:
                    if name == "labor_status":
                        value = labor_merge.get(value, value)
                    controls[name] = value
            else:
                controls[name] = None

        parsed.append(
            {
                "country": cell(row, "country"),
                "round": rnd,
                "year": year,
                "age": age,
                "happiness": happy,
                "weight": weight,
                "controls": controls,
            }
        )

    year_rank: dict[int, int] = {}
    if need_synthetic:
        year_rank = {y: i + 1 for i, y in enumerate(sorted(years_seen))}
        report.notes.append(
            "survey years do not follow the round-year grid; "
            "rounds assigned by rank over observed years"
        )

    records: list[SurveyRecord] = []
    for item in parsed:
        rnd, year = item["round"], item["year"]
        if rnd is None:
            rnd = year_rank[year] if need_synthetic else round_map.round_for(year)
        if year is None:
            year = round_map.year(rnd)
        records.append(
            SurveyRecord(
                country=item["country"],
                round=rnd,
                period_year=year,
                age=item["age"],
                happiness=item["happiness"],
                weight=item["weight"],
                **item["controls"],
            )
        )

    report.rows_kept = len(records)
    if not records:
        raise DataError(f"no usable rows in {path}")
    return records, report


def save_csv(records: Sequence[SurveyRecord], path: str | Path) -> None:
    """Write records with canonical column names; round-trips with
    :func:`load_csv` under the identity schema."""
    columns = list(IDENTITY_SCHEMA)
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, quoting=csv.QUOTE_NONNUMERIC)
        writer.writerow(columns)
        for rec in records:
            writer.writerow(
                [
                    getattr(rec, name) if getattr(rec, name) is not None else ""
                    for name in columns
                ]
            )


def apply_filter(
    records: Sequence[SurveyRecord], spec: FilterSpec
) -> tuple[list[SurveyRecord], FilterReport]:
    """Restrict a sample, preserving order.

    Each dropped record is tallied under the first rule it fails.
    Raises :class:`EmptySampleError` when nothing survives, since an
    empty sample cannot support any fit.
    """
    report = FilterReport(n_in=len(records))
    listwise = sorted(spec.listwise_vars)
    kept: list[SurveyRecord] = []
    for rec in records:
        if rec.age < spec.min_age:
            report.dropped["age below minimum"] += 1
            continue
        if spec.max_age is not None and rec.age > spec.max_age:
            report.dropped["age above maximum"] += 1
            continue
        if spec.countries is not None and rec.country not in spec.countries:
            report.dropped["country excluded"] += 1
            continue
        missing_var = next((v for v in listwise if rec.control(v) is None), None)
        if missing_var is not None:
            report.dropped[f"missing {missing_var}"] += 1
            continue
        kept.append(rec)
    report.n_kept = len(kept)
    if not kept:
        raise EmptySampleError(f"filter removed all {len(records)} records")
    return kept, report


def cohort_bin(birth_year: int, width: int = 5) -> str:
    """Birth-cohort bin label, e.g. ``cohort_bin(1972)`` -> ``"1970-1974"``.

    Bins are anchored at multiples of ``width`` (floor division, so
    negative years bin correctly too).
    """
    if width < 1:
        raise ValueError(f"bin width must be >= 1, got {width}")
    start = (birth_year // width) * width
    return f"{start}-{start + width - 1}"
