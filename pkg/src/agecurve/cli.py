"""Command-line interface.

Subcommands: ``fit`` (model battery to coefficient tables), ``curves``
(adjusted age-bin levels, optionally charted), ``detect`` (u-shape rules
over fitted data or the bundled reference tables), ``simulate`` (the
Monte Carlo bias experiments), and ``report`` (the whole pipeline).

Exit codes: 0 success, 1 fatal error, 2 partial failure (some countries
failed; failures are listed on stderr and the rest of the output is
written normally).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import fixtures
from .dataset import (
    DataError,
    ESS_SCHEMA,
    IDENTITY_SCHEMA,
    load_csv,
)
from .design import DesignError, FINE_BINS, scheme_bin_labels
from .models import (
    PRESETS,
    AgeCurve,
    ModelSpec,
    adjusted_means,
    batch_fit,
    get_spec,
)
from .shape import (
    classify_curve,
    depth,
    detect_quad,
    detect_quad_values,
    detect_ranges,
    detect_ranges_values,
    reduction,
)
from .simulate import (
    AttritionConfig,
    DgpConfig,
    default_attrition_config,
    default_mediator_config,
    default_truncation_config,
    experiment_attrition,
    experiment_mediator,
    experiment_truncation,
)
from .render import bin_midpoint, format_table, svg_line_chart, write_csv
from .wls import RankDeficientError

QUAD_BATTERY = (
    "quad-controls-cap",
    "quad-nocontrols-cap",
    "quad-nocontrols-nocap",
    "quad-controls-nocap",
)

RULES = ("quad_t15", "range_t1", "curve_heuristic")
RULE_FIXTURES = {"quad_t15": "table2", "range_t1": "table3", "curve_heuristic": "table4"}
FORMATS = ("csv", "text", "svg")

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


class FatalError(Exception):
    pass


def _read_config(path: str | None) -> configparser.ConfigParser:
    config = configparser.ConfigParser()
    if path:
        if not Path(path).is_file():
            raise FatalError(f"config file not found: {path}")
        config.read(path, encoding="utf-8")
    return config


def _resolve_schema(args, config: configparser.ConfigParser, input_path: Path) -> dict:
    base = dict(ESS_SCHEMA) if getattr(args, "ess_columns", False) else dict(IDENTITY_SCHEMA)
    if config.has_section("columns"):
        base.update(dict(config.items("columns")))
    explicit: set[str] = set()
    for mapping in getattr(args, "map", None) or []:
        if "=" not in mapping:
            raise FatalError(f"--map expects logical=column, got {mapping!r}")
        logical, column = mapping.split("=", 1)
        base[logical.strip()] = column.strip()
        explicit.add(logical.strip())

    # Drop optional default mappings whose column the file does not carry,
    # so a minimal file (no control columns) loads without ceremony.
    # Explicit --map entries are always kept: if the column is missing the
    # loader reports it instead of silently ignoring the user.
    with input_path.open(newline="", encoding="utf-8") as handle:
        header = next(csv.reader(handle))
    required = {"country", "age", "happiness", "weight"}
    timing = {"round", "period_year"}
    schema = {}
    for logical, column in base.items():
        if logical in required or logical in explicit or column in header:
            schema[logical] = column
    present_timing = {k for k in timing if k in schema and schema[k] in header}
    if not present_timing:
        # keep one so load_csv reports the real problem
        schema.setdefault("round", base.get("round", "round"))
    else:
        for k in timing - present_timing:
            if k not in explicit:
                schema.pop(k, None)
    return schema


def _load_records(args, config: configparser.ConfigParser):
    if not getattr(args, "input", None):
        raise FatalError("this command needs --input (a survey CSV)")
    path = Path(args.input)
    if not path.is_file():
        raise FatalError(f"input file not found: {path}")
    schema = _resolve_schema(args, config, path)
    records, report = load_csv(path, schema)
    if report.dropped:
        drops = ", ".join(f"{r}: {c}" for r, c in sorted(report.dropped.items()))
        print(f"loaded {report.rows_kept} of {report.rows_read} rows (dropped {drops})")
    else:
        print(f"loaded {report.rows_kept} rows")
    return records


def _countries_arg(args, config: configparser.ConfigParser) -> list[str] | None:
    raw = getattr(args, "countries", None)
    if raw is None and config.has_option("filters", "countries"):
        raw = config.get("filters", "countries")
    if raw is None:
        return None
    return [c.strip() for c in raw.split(",") if c.strip()]


def _formats(args, config: configparser.ConfigParser) -> set[str]:
    raw = getattr(args, "format", None)
    if raw is None and config.has_option("output", "formats"):
        raw = config.get("output", "formats")
    if raw is None:
        raw = "csv,text"
    formats = {f.strip() for f in raw.split(",") if f.strip()}
    unknown = formats - set(FORMATS)
    if unknown:
        raise FatalError(f"unknown output formats {sorted(unknown)}; known: {FORMATS}")
    return formats


def _out_dir(args, config: configparser.ConfigParser) -> Path:
    raw = getattr(args, "out", None)
    if raw is None and config.has_option("output", "dir"):
        raw = config.get("output", "dir")
    out = Path(raw or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_partial(failures: list[tuple[str, str]], successes: int) -> int:
    if failures:
        for country, message in failures:
            print(f"FAILED {country}: {message}", file=sys.stderr)
        if successes == 0:
            print("no country could be fitted", file=sys.stderr)
            return EXIT_FATAL
        return EXIT_PARTIAL
    return EXIT_OK


def _fit_rows(spec: ModelSpec, results) -> list[list]:
    rows = []
    for res in results:
        if not res.ok:
            continue
        fit = res.fit
        for label in fit.labels:
            rows.append(
                [
                    res.country,
                    spec.name,
                    label,
                    fit.coef(label),
                    fit.se(label),
                    fit.t(label),
                    fit.n_obs,
                    fit.rank,
                ]
            )
    return rows


def cmd_fit(args) -> int:
    config = _read_config(args.config)
    records = _load_records(args, config)
    countries = _countries_arg(args, config)
    formats = _formats(args, config)
    out = _out_dir(args, config)

    spec_names = list(QUAD_BATTERY) if args.spec == "quad-battery" else [args.spec]
    specs = [get_spec(name) for name in spec_names]

    failures: list[tuple[str, str]] = []
    successes = 0
    for spec in specs:
        results = batch_fit(records, spec, countries)
        for res in results:
            if res.ok:
                successes += 1
            else:
                failures.append((f"{res.country} [{spec.name}]", res.error))
        header = [
            "country", "model", "coefficient", "estimate",
            "std_error", "t_abs", "n", "rank",
        ]
        rows = _fit_rows(spec, results)
        if "csv" in formats:
            path = out / f"fit_{spec.name}.csv"
            write_csv(path, header, rows)
            print(f"wrote {path}")
        if "text" in formats:
            path = out / f"fit_{spec.name}.txt"
            text = format_table(
                header,
                rows,
                ["%s", "%s", "%s", "%.5f", "%.5f", "%.2f", "%d", "%d"],
            )
            path.write_text(text, encoding="utf-8")
            print(f"wrote {path}")
    return _report_partial(failures, successes)


def _curve_table(curves: list[AgeCurve], bin_order: list[str]) -> tuple[list[str], list[list]]:
    header = ["country", *bin_order, "max", "min", "difference"]
    rows = []
    for curve in curves:
        levels = {b: v for b, v in zip(curve.bin_labels, curve.levels)}
        report = depth(curve)
        rows.append(
            [
                curve.country,
                *[levels.get(b) for b in bin_order],
                report.max_level,
                report.min_level,
                report.difference,
            ]
        )
    return header, rows


def cmd_curves(args) -> int:
    config = _read_config(args.config)
    records = _load_records(args, config)
    countries = _countries_arg(args, config)
    formats = _formats(args, config)
    out = _out_dir(args, config)
    scheme = args.scheme

    if countries is None:
        seen: dict[str, None] = {}
        for rec in records:
            seen.setdefault(rec.country, None)
        countries = list(seen)

    bin_order = scheme_bin_labels(scheme)
    curves: list[AgeCurve] = []
    failures: list[tuple[str, str]] = []
    for country in countries:
        try:
            curves.append(adjusted_means(records, country, scheme))
        except (DataError, DesignError, RankDeficientError, ValueError) as exc:
            failures.append((country, str(exc)))

    header, rows = _curve_table(curves, bin_order)
    if "csv" in formats:
        path = out / f"curves_{scheme}.csv"
        write_csv(path, header, rows)
        print(f"wrote {path}")
    if "text" in formats:
        path = out / f"curves_{scheme}.txt"
        fmts = ["%s"] + ["%.2f"] * (len(header) - 1)
        path.write_text(format_table(header, rows, fmts), encoding="utf-8")
        print(f"wrote {path}")
    if "svg" in formats and curves:
        series = [
            (
                curve.country,
                [(bin_midpoint(b), v) for b, v in zip(curve.bin_labels, curve.levels)],
            )
            for curve in curves
        ]
        chart = svg_line_chart(
            series,
            title=f"Adjusted happiness by age range ({scheme} bins)",
            y_range=None if args.autoscale else (0.0, 10.0),
        )
        path = out / f"curves_{scheme}.svg"
        path.write_text(chart, encoding="utf-8")
        print(f"wrote {path}")
    return _report_partial(failures, len(curves))


def _fixture_curve(row: dict) -> AgeCurve:
    bins = [b[0] for b in FINE_BINS]
    return AgeCurve(
        country=str(row["country"]),
        bin_labels=tuple(bins),
        levels=tuple(float(row[b]) for b in bins),
    )


def _detect_from_fixture(rule: str) -> list:
    rows = fixtures.load(RULE_FIXTURES[rule])
    verdicts = []
    for row in rows:
        country = str(row["country"])
        if rule == "quad_t15":
            verdicts.append(
                detect_quad_values(
                    country,
                    float(row["coef_age"]),
                    float(row["t_age"]),
                    float(row["coef_age_sq"]),
                    float(row["t_age_sq"]),
                )
            )
        elif rule == "range_t1":
            verdicts.append(
                detect_ranges_values(
                    country,
                    float(row["coef_15-34"]),
                    float(row["t_15-34"]),
                    float(row["coef_60-74"]),
                    float(row["t_60-74"]),
                )
            )
        else:
            verdicts.append(classify_curve(_fixture_curve(row)))
    return verdicts


def _detect_from_records(rule: str, records, countries) -> tuple[list, list]:
    verdicts = []
    failures: list[tuple[str, str]] = []
    if rule == "quad_t15":
        results = batch_fit(records, PRESETS["quad-nocontrols-nocap"], countries)
        for res in results:
            if res.ok:
                verdicts.append(detect_quad(res.fit, res.country))
            else:
                failures.append((res.country, res.error))
    elif rule == "range_t1":
        results = batch_fit(records, PRESETS["ranges-coarse"], countries)
        for res in results:
            if res.ok:
                verdicts.append(detect_ranges(res.fit, res.country))
            else:
                failures.append((res.country, res.error))
    else:
        if countries is None:
            seen: dict[str, None] = {}
            for rec in records:
                seen.setdefault(rec.country, None)
            countries = list(seen)
        for country in countries:
            try:
                verdicts.append(classify_curve(adjusted_means(records, country, "fine")))
            except (DataError, DesignError, RankDeficientError, ValueError) as exc:
                failures.append((country, str(exc)))
    return verdicts, failures


def cmd_detect(args) -> int:
    config = _read_config(args.config)
    formats = _formats(args, config)
    out = _out_dir(args, config)
    rule = args.rule

    source_flags: dict[str, bool] = {}
    if args.fixture:
        if args.fixture != RULE_FIXTURES[rule]:
            raise FatalError(
                f"rule {rule!r} reads fixture {RULE_FIXTURES[rule]!r}, "
                f"not {args.fixture!r}"
            )
        verdicts = _detect_from_fixture(rule)
        failures: list[tuple[str, str]] = []
        for row in fixtures.load(args.fixture):
            if "source_ushape" in row:
                source_flags[str(row["country"])] = row["source_ushape"] == "yes"
    else:
        records = _load_records(args, config)
        verdicts, failures = _detect_from_records(
            rule, records, _countries_arg(args, config)
        )

    evidence_keys: list[str] = []
    for verdict in verdicts:
        for key in verdict.evidence:
            if key not in evidence_keys:
                evidence_keys.append(key)
    header = ["country", "rule", "is_ushape", *evidence_keys]
    rows = [
        [
            v.country,
            v.rule,
            "yes" if v.is_ushape else "no",
            *[
                (str(v.evidence[k]) if isinstance(v.evidence.get(k), tuple) else v.evidence.get(k))
                for k in evidence_keys
            ],
        ]
        for v in verdicts
    ]
    if "csv" in formats:
        path = out / f"detect_{rule}.csv"
        write_csv(path, header, rows)
        print(f"wrote {path}")
    if "text" in formats:
        path = out / f"detect_{rule}.txt"
        path.write_text(
            format_table(header, rows, ["%s", "%s", "%s"] + ["%g"] * len(evidence_keys)),
            encoding="utf-8",
        )
        print(f"wrote {path}")

    positive = sum(v.is_ushape for v in verdicts)
    print(f"u-shape under {rule}: {positive} of {len(verdicts)} countries")
    for v in verdicts:
        flag = source_flags.get(v.country)
        if flag is not None and flag != v.is_ushape:
            print(
                f"note: {v.country} is flagged "
                f"{'u-shaped' if flag else 'not u-shaped'} in the source table "
                f"but the literal rule says "
                f"{'u-shaped' if v.is_ushape else 'not u-shaped'}"
            )
    return _report_partial(failures, len(verdicts))


def _simulate_config(args, config: configparser.ConfigParser) -> tuple[DgpConfig, int]:
    section = config["simulate"] if config.has_section("simulate") else {}

    def pick(name, cast, fallback):
        value = getattr(args, name, None)
        if value is None:
            value = section.get(name) if hasattr(section, "get") else None
            if value is not None:
                value = cast(value)
        return fallback if value is None else value

    experiment = args.experiment
    seed = pick("seed", int, None)
    reps = pick("reps", int, 200)
    n = pick("n", int, None)
    if experiment == "mediator":
        base = default_mediator_config() if seed is None else default_mediator_config(seed)
    elif experiment == "truncation":
        base = default_truncation_config() if seed is None else default_truncation_config(seed)
    else:
        strength = pick("strength", float, 0.5)
        base = (
            default_attrition_config(strength=strength)
            if seed is None
            else default_attrition_config(seed, strength=strength)
        )
        knee = pick("knee", int, None)
        if knee is not None:
            base = replace(base, attrition=AttritionConfig(knee=knee, strength=strength))
    if n is not None:
        base = replace(base, n=n)
    return base, reps


def cmd_simulate(args) -> int:
    config = _read_config(args.config)
    formats = _formats(args, config)
    out = _out_dir(args, config)
    dgp, reps = _simulate_config(args, config)

    runner = {
        "mediator": experiment_mediator,
        "truncation": experiment_truncation,
        "attrition": experiment_attrition,
    }[args.experiment]
    result = runner(dgp, reps=reps)

    if "csv" in formats:
        header = ["replicate", "seed", *result.estimates.keys()]
        rows = [
            [i, result.seeds[i], *[float(result.estimates[k][i]) for k in result.estimates]]
            for i in range(result.n_reps)
        ]
        path = out / f"simulate_{result.experiment}.csv"
        write_csv(path, header, rows)
        print(f"wrote {path}")
    summary = result.summary()
    if "text" in formats:
        path = out / f"simulate_{result.experiment}.txt"
        path.write_text(summary + "\n", encoding="utf-8")
        print(f"wrote {path}")
    print(summary)
    return EXIT_OK if result.passed else EXIT_FATAL


def cmd_report(args) -> int:
    config = _read_config(args.config)
    records = _load_records(args, config)
    countries = _countries_arg(args, config)
    formats = _formats(args, config)
    out = _out_dir(args, config)

    failures: list[tuple[str, str]] = []
    successes = 0

    # 1. the quadratic battery
    battery = {}
    for name in QUAD_BATTERY:
        spec = get_spec(name)
        results = batch_fit(records, spec, countries)
        battery[name] = {res.country: res for res in results}
        rows = _fit_rows(spec, results)
        write_csv(
            out / f"fit_{name}.csv",
            ["country", "model", "coefficient", "estimate", "std_error", "t_abs", "n", "rank"],
            rows,
        )
        for res in results:
            if res.ok:
                successes += 1
            else:
                failures.append((f"{res.country} [{name}]", res.error))
    print(f"wrote {out}/fit_<model>.csv for {len(QUAD_BATTERY)} models")

    # 2. coefficient reductions: the controlled, age-capped model is the
    # baseline; the bare full-age model is the comparison
    reduction_rows = []
    for country, bare in battery["quad-nocontrols-nocap"].items():
        controlled = battery["quad-controls-cap"].get(country)
        if bare.ok and controlled is not None and controlled.ok:
            report = reduction(controlled.fit, bare.fit)
            for change in report.changes:
                reduction_rows.append(
                    [
                        country,
                        change.label,
                        change.old,
                        change.new,
                        change.percent_reduction,
                        "yes" if change.sign_flipped else "no",
                    ]
                )
    write_csv(
        out / "reductions.csv",
        ["country", "coefficient", "with_controls", "without_controls", "percent_reduction", "sign_flipped"],
        reduction_rows,
    )
    print(f"wrote {out}/reductions.csv")

    # 3. detections from the data
    for rule in RULES:
        verdicts, rule_failures = _detect_from_records(rule, records, countries)
        failures.extend((f"{c} [{rule}]", m) for c, m in rule_failures)
        write_csv(
            out / f"detect_{rule}.csv",
            ["country", "rule", "is_ushape"],
            [[v.country, v.rule, "yes" if v.is_ushape else "no"] for v in verdicts],
        )
        positive = sum(v.is_ushape for v in verdicts)
        print(f"u-shape under {rule}: {positive} of {len(verdicts)} countries")

    # 4. fine curves, with chart
    if countries is None:
        seen: dict[str, None] = {}
        for rec in records:
            seen.setdefault(rec.country, None)
        countries = list(seen)
    curves = []
    for country in countries:
        try:
            curves.append(adjusted_means(records, country, "fine"))
        except (DataError, DesignError, RankDeficientError, ValueError) as exc:
            failures.append((f"{country} [curves]", str(exc)))

    header, rows = _curve_table(curves, [b[0] for b in FINE_BINS])
    write_csv(out / "curves_fine.csv", header, rows)
    print(f"wrote {out}/curves_fine.csv")
    if "svg" in formats and curves:
        series = [
            (c.country, [(bin_midpoint(b), v) for b, v in zip(c.bin_labels, c.levels)])
            for c in curves
        ]
        (out / "curves_fine.svg").write_text(
            svg_line_chart(series, title="Adjusted happiness by age range"),
            encoding="utf-8",
        )
        print(f"wrote {out}/curves_fine.svg")

    return _report_partial(failures, successes + len(curves))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agecurve",
        description="Age-happiness curves from weighted survey cross-sections",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", help="survey CSV file")
            p.add_argument(
                "--ess-columns",
                action="store_true",
                help="interpret columns using European Social Survey names",
            )
            p.add_argument(
                "--map",
                action="append",
                metavar="LOGICAL=COLUMN",
                help="map a logical field to a CSV column (repeatable)",
            )
            p.add_argument("--countries", help="comma-separated country filter")
        p.add_argument("--config", help="INI config file")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--format", help="comma-separated subset of csv,text,svg")

    p_fit = sub.add_parser("fit", help="fit a model spec per country")
    common(p_fit)
    p_fit.add_argument(
        "--spec",
        default="quad-nocontrols-nocap",
        help=f"model preset or 'quad-battery' (known: {', '.join(sorted(PRESETS))})",
    )
    p_fit.set_defaults(func=cmd_fit)

    p_curves = sub.add_parser("curves", help="adjusted happiness level per age bin")
    common(p_curves)
    p_curves.add_argument("--scheme", choices=("coarse", "fine"), default="fine")
    p_curves.add_argument(
        "--autoscale",
        action="store_true",
        help="fit the chart's y axis to the data instead of the 0-10 scale",
    )
    p_curves.set_defaults(func=cmd_curves)

    p_detect = sub.add_parser("detect", help="apply a u-shape detection rule")
    common(p_detect)
    p_detect.add_argument("--rule", choices=RULES, required=True)
    p_detect.add_argument(
        "--fixture",
        choices=tuple(fixtures.FIXTURE_NAMES),
        help="run the rule over a bundled reference table instead of --input",
    )
    p_detect.set_defaults(func=cmd_detect)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo bias experiment")
    common(p_sim, needs_input=False)
    p_sim.add_argument(
        "--experiment", choices=("mediator", "truncation", "attrition"), required=True
    )
    p_sim.add_argument("--reps", type=int, help="number of replicates (default 200)")
    p_sim.add_argument("--n", type=int, help="sample size per replicate")
    p_sim.add_argument("--seed", type=int, help="master seed")
    p_sim.add_argument("--strength", type=float, help="attrition strength in [0,1]")
    p_sim.add_argument("--knee", type=int, help="attrition age knee")
    p_sim.set_defaults(func=cmd_simulate)

    p_report = sub.add_parser("report", help="full pipeline: fits, reductions, detections, curves")
    common(p_report)
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FatalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (DataError, DesignError, RankDeficientError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
