"""Named model specifications and per-country fitting.

The battery mirrors the analysis the package exists to reproduce and
probe:

* quadratic models of happiness in age, with and without demographic
  controls and with and without capping the sample at age 69;
* age-range (bin indicator) models with period and five-year birth-cohort
  factors, on a coarse and a fine bin scheme.

Two presentation helpers turn fits back into curves that are comparable
across countries: :func:`predict_curve` evaluates a quadratic fit with
every non-age regressor standardized to its weighted sample mean, and
:func:`adjusted_means` does the same for bin models, yielding an adjusted
happiness level per age bin.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dataset import CONTROL_VARS, EmptySampleError, FilterSpec, SurveyRecord, apply_filter
from .design import (
    COARSE_REFERENCE,
    FINE_REFERENCE,
    DesignError,
    TermSpec,
    build_design,
    scheme_bin_labels,
)
from .wls import FitResult, RankDeficientError, fit_wls

__all__ = [
    "ModelSpec",
    "AgeCurve",
    "CountryResult",
    "TooFewPeriodsWarning",
    "PRESETS",
    "PRESET_ALIASES",
    "get_spec",
    "terms_for",
    "fit_spec",
    "batch_fit",
    "predict_curve",
    "quad_vertex",
    "adjusted_means",
]


class TooFewPeriodsWarning(UserWarning):
    """Fewer than three distinct survey rounds: period and cohort factors
    are technically identified but have very little leverage."""


@dataclass(frozen=True)
class ModelSpec:
    """A named model in the battery.

    ``form`` is ``"quadratic"`` (age and age squared) or ``"ranges"``
    (bin indicators under ``scheme``). ``age_cap`` restricts the sample
    to ages at or below the cap before fitting. Period controls are part
    of every model in the battery; the flag exists so the fitted design
    is fully described by its spec.
    """

    name: str
    form: str
    scheme: str = "coarse"
    controls: bool = False
    age_cap: int | None = None
    cohort_control: bool = False
    period_control: bool = True

    def __post_init__(self) -> None:
        if self.form not in ("quadratic", "ranges"):
            raise ValueError(f"unknown model form {self.form!r}")
        if self.scheme not in ("coarse", "fine"):
            raise ValueError(f"unknown bin scheme {self.scheme!r}")
        if not self.period_control:
            raise ValueError("every model in the battery keeps period controls")
        if self.age_cap is not None and self.age_cap < 15:
            raise ValueError(f"age_cap {self.age_cap} below the survey minimum")


# The quadratic 2x2 battery: demographic controls on/off crossed with the
# age-69 sample cap on/off. "quad-controls-cap" is the fully controlled,
# capped model; "quad-nocontrols-nocap" is the bare quadratic whose
# coefficients feed the curvature-based u-shape rule; together the two
# nocontrols/controls no-cap models are the before/after pair for the
# coefficient-reduction report.
PRESETS: dict[str, ModelSpec] = {
    "quad-controls-cap": ModelSpec(
        name="quad-controls-cap", form="quadratic", controls=True, age_cap=69
    ),
    "quad-nocontrols-cap": ModelSpec(
        name="quad-nocontrols-cap", form="quadratic", controls=False, age_cap=69
    ),
    "quad-nocontrols-nocap": ModelSpec(
        name="quad-nocontrols-nocap", form="quadratic", controls=False, age_cap=None
    ),
    "quad-controls-nocap": ModelSpec(
        name="quad-controls-nocap", form="quadratic", controls=True, age_cap=None
    ),
    "ranges-coarse": ModelSpec(
        name="ranges-coarse", form="ranges", scheme="coarse", cohort_control=True
    ),
    "ranges-fine": ModelSpec(
        name="ranges-fine", form="ranges", scheme="fine", cohort_control=True
    ),
}

PRESET_ALIASES: dict[str, str] = {
    "bare-quadratic": "quad-nocontrols-nocap",
    "controlled-quadratic": "quad-controls-cap",
}


def get_spec(name: str) -> ModelSpec:
    key = PRESET_ALIASES.get(name, name)
    try:
        return PRESETS[key]
    except KeyError:
        known = sorted(set(PRESETS) | set(PRESET_ALIASES))
        raise KeyError(f"unknown model preset {name!r}; known: {known}") from None


def terms_for(spec: ModelSpec) -> list[TermSpec]:
    """The term list a spec expands to, in canonical column order."""
    terms = [TermSpec.intercept()]
    if spec.form == "quadratic":
        terms.append(TermSpec.age_linear())
        terms.append(TermSpec.age_squared())
    else:
        terms.append(TermSpec.age_bins(spec.scheme))
    if spec.period_control:
        terms.append(TermSpec.period())
    if spec.cohort_control:
        terms.append(TermSpec.cohort(width=5))
    if spec.controls:
        terms.extend(TermSpec.control(name) for name in CONTROL_VARS)
    return terms


def _filter_for(spec: ModelSpec, country: str | None) -> FilterSpec:
    return FilterSpec(
        min_age=15,
        max_age=spec.age_cap,
        countries=None if country is None else frozenset({country}),
        listwise_vars=frozenset(CONTROL_VARS) if spec.controls else frozenset(),
    )


def fit_spec(
    records: Sequence[SurveyRecord], spec: ModelSpec, country: str | None = None
) -> FitResult:
    """Fit one spec for one country (or the pooled sample when ``country``
    is None).

    Applies the spec's sample restrictions (age cap, listwise deletion
    when controls are on), warns through :class:`TooFewPeriodsWarning`
    when fewer than three distinct rounds remain, and returns the WLS
    fit with its design attached.
    """
    kept, _ = apply_filter(records, _filter_for(spec, country))
    n_periods = len({rec.period_year for rec in kept})
    if n_periods < 3:
        label = country if country is not None else "pooled sample"
        warnings.warn(
            f"{label}: only {n_periods} distinct survey round(s); period "
            "and cohort factors have little leverage",
            TooFewPeriodsWarning,
            stacklevel=2,
        )
    return fit_wls(build_design(kept, terms_for(spec)))


_AGE_BLOCK = ("const", "age", "age_sq")


def _context_offset(fit: FitResult) -> float:
    """Weighted-mean contribution of every column outside the age block.

    For an indicator column the weighted column mean is the weighted
    share of its level, so the offset fixes period, cohort, and control
    composition at the fitted sample's own mix. Adding it to the age
    terms puts predicted values on the level of the observed sample
    rather than the (often unobserved) reference cell.
    """
    if fit.design is None:
        raise ValueError(
            "fit carries no design matrix; refit or keep the design to "
            "compute standardized curves"
        )
    shares = fit.design.weighted_column_means()
    keep = [
        j
        for j, label in enumerate(fit.labels)
        if label not in _AGE_BLOCK and not label.startswith("bin:")
    ]
    if not keep:
        return 0.0
    return float(shares[keep] @ fit.coefficients[keep])


def predict_curve(fit: FitResult, ages: Iterable[int]) -> list[tuple[int, float]]:
    """Evaluate a quadratic fit over ``ages`` as ``(age, value)`` pairs.

    Non-age regressors are standardized to their weighted sample means
    (see :func:`_context_offset`), so curves from different samples are
    level-comparable.
    """
    if "age" not in fit.labels or "age_sq" not in fit.labels:
        raise ValueError("predict_curve needs a quadratic fit (age and age_sq)")
    base = fit.coef("const") + _context_offset(fit)
    b_age = fit.coef("age")
    b_sq = fit.coef("age_sq")
    return [(int(a), base + b_age * a + b_sq * a * a) for a in ages]


def quad_vertex(fit: FitResult) -> float:
    """Stationary age of a quadratic fit (minimum when the age-squared
    coefficient is positive)."""
    b_sq = fit.coef("age_sq")
    if b_sq == 0.0:
        raise ValueError("flat quadratic term: the fit has no stationary age")
    return -fit.coef("age") / (2.0 * b_sq)


@dataclass(frozen=True)
class AgeCurve:
    """Adjusted happiness level per age bin for one country.

    Levels are on the happiness scale and comparable across countries
    fitted with the same scheme. Extremes are derived properties, so
    they cannot drift out of sync with the levels.
    """

    country: str
    bin_labels: tuple[str, ...]
    levels: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.bin_labels) != len(self.levels):
            raise ValueError("one level per bin label required")
        if not self.bin_labels:
            raise ValueError("curve needs at least one bin")

    @property
    def max_level(self) -> float:
        return max(self.levels)

    @property
    def min_level(self) -> float:
        return min(self.levels)

    @property
    def depth(self) -> float:
        return self.max_level - self.min_level

    def level(self, bin_label: str) -> float:
        try:
            return self.levels[self.bin_labels.index(bin_label)]
        except ValueError:
            raise KeyError(f"no bin {bin_label!r} in curve") from None


def adjusted_means(
    records: Sequence[SurveyRecord],
    country: str,
    scheme: str = "fine",
    spec: ModelSpec | None = None,
) -> AgeCurve:
    """Adjusted happiness level per age bin.

    Fits the range model for ``scheme`` (period and cohort controlled by
    default; pass ``spec`` to override) and converts coefficients to
    levels: reference bin = intercept + standardization offset, other
    bins add their own coefficient. Bins with no observations are left
    out of the curve with a warning.
    """
    if spec is None:
        spec = PRESETS["ranges-coarse" if scheme == "coarse" else "ranges-fine"]
    if spec.form != "ranges" or spec.scheme != scheme:
        raise ValueError(
            f"spec {spec.name!r} does not fit {scheme!r} age ranges"
        )
    fit = fit_spec(records, spec, country)
    base = fit.coef("const") + _context_offset(fit)

    reference = COARSE_REFERENCE if scheme == "coarse" else FINE_REFERENCE
    labels: list[str] = []
    levels: list[float] = []
    for bin_label in scheme_bin_labels(scheme):
        if bin_label == reference:
            labels.append(bin_label)
            levels.append(base)
        elif f"bin:{bin_label}" in fit.labels:
            labels.append(bin_label)
            levels.append(base + fit.coef(f"bin:{bin_label}"))
        else:
            warnings.warn(
                f"{country}: no observations in bin {bin_label}; omitted from curve",
                stacklevel=2,
            )
    return AgeCurve(country=country, bin_labels=tuple(labels), levels=tuple(levels))


@dataclass
class CountryResult:
    """Outcome of one country's fit inside a batch; exactly one of ``fit``
    and ``error`` is set."""

    country: str
    fit: FitResult | None = None
    error: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.fit is not None


def batch_fit(
    records: Sequence[SurveyRecord],
    spec: ModelSpec,
    countries: Sequence[str] | None = None,
) -> list[CountryResult]:
    """Fit one spec across countries, isolating failures.

    ``countries`` defaults to first-appearance order in ``records``.
    A country whose data cannot support the spec (no rows after
    filtering, rank deficiency, a single survey round under a cohort
    spec) yields an error entry; other countries are unaffected.
    Cohort-controlled specs additionally require at least two distinct
    rounds, else period and cohort cannot be told apart from noise.
    """
    if countries is None:
        seen: dict[str, None] = {}
        for rec in records:
            seen.setdefault(rec.country, None)
        countries = list(seen)

    results: list[CountryResult] = []
    for country in countries:
        result = CountryResult(country=country)
        try:
            subset, _ = apply_filter(records, _filter_for(spec, country))
            n_periods = len({rec.period_year for rec in subset})
            if spec.cohort_control and n_periods < 2:
                result.error = (
                    f"only {n_periods} distinct survey round(s); "
                    "cohort-controlled fit skipped"
                )
                results.append(result)
                continue
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                result.fit = fit_spec(records, spec, country)
            result.notes.extend(str(w.message) for w in caught)
        except (EmptySampleError, DesignError, RankDeficientError, ValueError) as exc:
            result.error = str(exc)
        results.append(result)
    return results
