"""Labeled design matrices for the model battery.

Each term declares what it contributes (an intercept, age as a polynomial
or as range indicators, period and birth-cohort factors, categorical
controls) and :func:`build_design` turns a record list plus a term list
into a dense float matrix with one human-readable label per column.
Factor encoding is dummy coding against a named reference level; levels
that are declared but unobserved are dropped and logged, never silently
absorbed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import CONTROL_VARS, EmptySampleError, SurveyRecord, cohort_bin

__all__ = [
    "COARSE_BINS",
    "FINE_BINS",
    "COARSE_REFERENCE",
    "FINE_REFERENCE",
    "DesignError",
    "TermSpec",
    "DesignMatrix",
    "age_bin_label",
    "scheme_bin_labels",
    "encode_categorical",
    "build_design",
]


class DesignError(ValueError):
    """A design cannot be built from the given records and terms."""


# (label, low, high) with high=None meaning open-ended. Both schemes
# cover every age from 15 up, so binning is total.
COARSE_BINS: tuple[tuple[str, int, int | None], ...] = (
    ("15-34", 15, 34),
    ("35-59", 35, 59),
    ("60-74", 60, 74),
    ("75+", 75, None),
)
FINE_BINS: tuple[tuple[str, int, int | None], ...] = (
    ("15-24", 15, 24),
    ("25-34", 25, 34),
    ("35-44", 35, 44),
    ("45-54", 45, 54),
    ("55-64", 55, 64),
    ("65-74", 65, 74),
    ("75-84", 75, 84),
    ("85+", 85, None),
)
COARSE_REFERENCE = "35-59"
FINE_REFERENCE = "35-44"

_SCHEMES = {"coarse": COARSE_BINS, "fine": FINE_BINS}
_SCHEME_REFERENCES = {"coarse": COARSE_REFERENCE, "fine": FINE_REFERENCE}


def scheme_bin_labels(scheme: str) -> list[str]:
    """Bin labels of a scheme in age order."""
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown bin scheme {scheme!r}; use 'coarse' or 'fine'")
    return [label for label, _, _ in _SCHEMES[scheme]]


def age_bin_label(age: int, scheme: str = "coarse") -> str:
    """Bin label for an age under the named scheme.

    Total on ages 15 and up; ages below 15 are outside the survey
    population and raise.
    """
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown bin scheme {scheme!r}; use 'coarse' or 'fine'")
    if age < 15:
        raise ValueError(f"age {age} below the survey minimum of 15")
    for label, low, high in _SCHEMES[scheme]:
        if age >= low and (high is None or age <= high):
            return label
    raise AssertionError("unreachable: bin schemes are total on ages >= 15")


@dataclass(frozen=True)
class TermSpec:
    """One additive piece of a model formula.

    Build instances through the classmethods; ``kind`` is one of
    ``intercept``, ``age_linear``, ``age_squared``, ``age_bins``,
    ``period_factor``, ``cohort_factor``, ``control_factor``.
    ``reference_level`` overrides the default reference of any factor
    term; it has no meaning for the non-factor kinds.
    """

    kind: str
    scheme: str | None = None
    width: int | None = None
    name: str | None = None
    reference_level: str | None = None

    @classmethod
    def intercept(cls) -> "TermSpec":
        return cls(kind="intercept")

    @classmethod
    def age_linear(cls) -> "TermSpec":
        return cls(kind="age_linear")

    @classmethod
    def age_squared(cls) -> "TermSpec":
        return cls(kind="age_squared")

    @classmethod
    def age_bins(cls, scheme: str = "coarse", reference: str | None = None) -> "TermSpec":
        if scheme not in _SCHEMES:
            raise ValueError(f"unknown bin scheme {scheme!r}; use 'coarse' or 'fine'")
        if reference is not None and reference not in {b[0] for b in _SCHEMES[scheme]}:
            raise ValueError(f"{reference!r} is not a bin of the {scheme} scheme")
        return cls(kind="age_bins", scheme=scheme, reference_level=reference)

    @classmethod
    def period(cls, reference: str | int | None = None) -> "TermSpec":
        ref = None if reference is None else str(reference)
        return cls(kind="period_factor", reference_level=ref)

    @classmethod
    def cohort(cls, width: int = 5, reference: str | None = None) -> "TermSpec":
        if width < 1:
            raise ValueError(f"bin width must be >= 1, got {width}")
        return cls(kind="cohort_factor", width=width, reference_level=reference)

    @classmethod
    def control(cls, name: str, reference: str | None = None) -> "TermSpec":
        if name not in CONTROL_VARS:
            raise ValueError(f"unknown control variable {name!r}")
        return cls(kind="control_factor", name=name, reference_level=reference)

    def describe(self) -> str:
        if self.kind == "age_bins":
            return f"age_bins({self.scheme})"
        if self.kind == "cohort_factor":
            return f"cohort_factor(width={self.width})"
        if self.kind == "control_factor":
            return f"control_factor({self.name})"
        return self.kind


@dataclass
class DesignMatrix:
    """A dense design with one label per column.

    ``dropped_levels`` records every factor level that was declared but
    produced no column, as ``(term, level, reason)`` triples.
    """

    values: np.ndarray
    column_labels: list[str]
    row_weights: np.ndarray
    response: np.ndarray
    dropped_levels: list[tuple[str, str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.row_weights = np.asarray(self.row_weights, dtype=np.float64)
        self.response = np.asarray(self.response, dtype=np.float64)
        if self.values.ndim != 2:
            raise DesignError("values must be a 2-d array")
        n, p = self.values.shape
        if len(self.column_labels) != p:
            raise DesignError(
                f"{len(self.column_labels)} labels for {p} columns"
            )
        if len(set(self.column_labels)) != p:
            seen, dupes = set(), set()
            for label in self.column_labels:
                (dupes if label in seen else seen).add(label)
            raise DesignError(f"duplicate column labels: {sorted(dupes)}")
        if self.row_weights.shape != (n,) or self.response.shape != (n,):
            raise DesignError("row_weights and response must have one entry per row")
        if n == 0:
            raise DesignError("design has no rows")
        if not np.all(self.row_weights > 0):
            raise DesignError("row weights must all be positive")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.column_labels.index(label)]

    def weighted_column_means(self) -> np.ndarray:
        """Weighted mean of each column; for an indicator column this is
        the weighted share of its level."""
        return self.row_weights @ self.values / self.row_weights.sum()


def _level_sort_key(level: str) -> tuple[int, float, str]:
    try:
        return (0, float(level), "")
    except ValueError:
        return (1, 0.0, level)


def encode_categorical(
    records: Sequence[SurveyRecord],
    variable: str,
    reference: str | None = None,
    declared_levels: Sequence[str] | None = None,
) -> tuple[np.ndarray, list[str], list[tuple[str, str, str]]]:
    """Dummy-code one control variable.

    Returns ``(columns, labels, dropped)`` where ``columns`` has one
    indicator per declared non-reference level that is actually observed
    and labels read ``"variable=level"``. The reference defaults to the
    first observed level in natural sort order (numeric strings by value,
    then the rest alphabetically). Missing values are an error here:
    callers decide on listwise deletion before encoding, not during.
    """
    values: list[str] = []
    for i, rec in enumerate(records):
        value = rec.control(variable)
        if value is None:
            raise DesignError(
                f"record {i} has no {variable!r}; apply listwise deletion "
                f"(FilterSpec.listwise_vars) before building the design"
            )
        values.append(value)

    observed = sorted(set(values), key=_level_sort_key)
    if declared_levels is None:
        declared = list(observed)
    else:
        declared = list(declared_levels)
        stray = set(observed) - set(declared)
        if stray:
            raise DesignError(
                f"observed {variable!r} levels not declared: {sorted(stray)}"
            )
    if reference is None:
        reference = observed[0]
    if reference not in declared:
        raise DesignError(f"reference level {reference!r} is not a declared level")
    if reference not in observed:
        raise DesignError(f"reference level {reference!r} has no observations")

    dropped: list[tuple[str, str, str]] = []
    kept_levels: list[str] = []
    for level in declared:
        if level == reference:
            continue
        if level in set(observed):
            kept_levels.append(level)
        else:
            dropped.append((variable, level, "no observations"))
    if len(observed) == 1:
        dropped.append((variable, reference, "only one observed level"))

    n = len(records)
    columns = np.zeros((n, len(kept_levels)), dtype=np.float64)
    index = {level: j for j, level in enumerate(kept_levels)}
    for i, value in enumerate(values):
        j = index.get(value)
        if j is not None:
            columns[i, j] = 1.0
    labels = [f"{variable}={level}" for level in kept_levels]
    return columns, labels, dropped


def _encode_simple_factor(
    term_name: str,
    row_levels: list[str],
    ordered_levels: list[str],
    reference: str | None,
    label_prefix: str,
) -> tuple[np.ndarray, list[str], list[tuple[str, str, str]]]:
    """Shared dummy coding for period and cohort factors, whose levels
    come straight from the data."""
    if reference is None:
        reference = ordered_levels[0]
    if reference not in ordered_levels:
        raise DesignError(
            f"{term_name} reference level {reference!r} not observed; "
            f"observed levels: {ordered_levels}"
        )
    dropped: list[tuple[str, str, str]] = []
    contrast = [lvl for lvl in ordered_levels if lvl != reference]
    if not contrast:
        dropped.append(
            (term_name, reference, "only one observed level; no contrast columns")
        )
    n = len(row_levels)
    columns = np.zeros((n, len(contrast)), dtype=np.float64)
    index = {lvl: j for j, lvl in enumerate(contrast)}
    for i, lvl in enumerate(row_levels):
        j = index.get(lvl)
        if j is not None:
            columns[i, j] = 1.0
    labels = [f"{label_prefix}:{lvl}" for lvl in contrast]
    return columns, labels, dropped


def build_design(
    records: Sequence[SurveyRecord], terms: Sequence[TermSpec]
) -> DesignMatrix:
    """Assemble the design matrix for a term list.

    Exactly one intercept is required; ``age_linear`` and ``age_bins``
    are mutually exclusive (they answer the same question two ways);
    duplicate terms of any kind are rejected. Columns appear in term
    order, with factor levels in their natural order.
    """
    if not records:
        raise EmptySampleError("cannot build a design from zero records")

    kinds = [t.kind for t in terms]
    keys = [(t.kind, t.name) for t in terms]
    if len(set(keys)) != len(keys):
        dupes = sorted({t.describe() for t in terms if keys.count((t.kind, t.name)) > 1})
        raise DesignError(f"duplicate terms: {dupes}")
    if kinds.count("intercept") != 1:
        raise DesignError("the design must contain exactly one intercept term")
    if "age_linear" in kinds and "age_bins" in kinds:
        raise DesignError("age_linear and age_bins are mutually exclusive")
    if "age_squared" in kinds and "age_bins" in kinds:
        raise DesignError("age_squared and age_bins are mutually exclusive")

    n = len(records)
    ages = np.array([rec.age for rec in records], dtype=np.float64)
    blocks: list[np.ndarray] = []
    labels: list[str] = []
    dropped: list[tuple[str, str, str]] = []

    for term in terms:
        if term.kind == "intercept":
            blocks.append(np.ones((n, 1)))
            labels.append("const")
        elif term.kind == "age_linear":
            blocks.append(ages[:, None])
            labels.append("age")
        elif term.kind == "age_squared":
            blocks.append((ages**2)[:, None])
            labels.append("age_sq")
        elif term.kind == "age_bins":
            scheme = term.scheme or "coarse"
            scheme_levels = [b[0] for b in _SCHEMES[scheme]]
            row_levels = [age_bin_label(rec.age, scheme) for rec in records]
            observed = set(row_levels)
            reference = term.reference_level or _SCHEME_REFERENCES[scheme]
            if reference not in observed:
                raise DesignError(
                    f"reference bin {reference!r} has no observations"
                )
            contrast = []
            for level in scheme_levels:
                if level == reference:
                    continue
                if level in observed:
                    contrast.append(level)
                else:
                    dropped.append(("age_bins", level, "no observations"))
            cols = np.zeros((n, len(contrast)))
            index = {lvl: j for j, lvl in enumerate(contrast)}
            for i, lvl in enumerate(row_levels):
                j = index.get(lvl)
                if j is not None:
                    cols[i, j] = 1.0
            blocks.append(cols)
            labels.extend(f"bin:{lvl}" for lvl in contrast)
        elif term.kind == "period_factor":
            row_levels = [str(rec.period_year) for rec in records]
            ordered = sorted(set(row_levels), key=int)
            cols, labs, drops = _encode_simple_factor(
                "period_factor", row_levels, ordered, term.reference_level, "period"
            )
            blocks.append(cols)
            labels.extend(labs)
            dropped.extend(drops)
        elif term.kind == "cohort_factor":
            width = term.width or 5
            starts: dict[str, int] = {}
            row_levels = []
            for rec in records:
                label = cohort_bin(rec.birth_year, width)
                starts[label] = (rec.birth_year // width) * width
                row_levels.append(label)
            ordered = sorted(starts, key=starts.__getitem__)
            cols, labs, drops = _encode_simple_factor(
                "cohort_factor", row_levels, ordered, term.reference_level, "cohort"
            )
            blocks.append(cols)
            labels.extend(labs)
            dropped.extend(drops)
        elif term.kind == "control_factor":
            assert term.name is not None
            cols, labs, drops = encode_categorical(
                records, term.name, term.reference_level
            )
            blocks.append(cols)
            labels.extend(labs)
            dropped.extend(drops)
        else:
            raise DesignError(f"unknown term kind {term.kind!r}")

    values = np.hstack(blocks)
    weights = np.array([rec.weight for rec in records], dtype=np.float64)
    response = np.array([rec.happiness for rec in records], dtype=np.float64)
    return DesignMatrix(values, labels, weights, response, dropped)
