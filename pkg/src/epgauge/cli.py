"""Command-line entry point: reproducible batch runs over the library.

Subcommands: ingest (load + validate + rejects report), assess (cohort
assessments against per-stratum baselines, with plot-ready series and
figures), compare (dual-method comparisons, either from a parameter file
or between two assessed cohorts), synth (seeded synthetic corpora).

Configuration is a single JSON document plus flag overrides (flags win);
unknown config keys are rejected before any computation.  Exit codes:
0 success, 2 input/config error, 3 domain error, 4 internal error.
EPGAUGE_THREADS caps assessment parallelism; outputs do not depend on it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from .corpus import CohortSelector, Corpus, Format, FundingClass, load_records
from .errors import ConfigError, DomainError, EpgaugeError, InputError
from .figures import render_ep_series_figure
from .lognormal import REFERENCE_CA_SCHEDULE, ZeroPolicy, threshold_schedule
from .percentile import GRID_STD, PercentileBaseline, PercentileLevel
from .report import (
    AssessOptions,
    CohortAssessment,
    DualMethodComparison,
    assess_cohort,
    compare_dual,
    dual_from_params,
    ep_series_csv,
    render,
)
from .synth import SynthSpec, gen_global, gen_local_with_ep, merge_cohort

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DOMAIN = 3
EXIT_INTERNAL = 4

_REPORT_FORMATS = ("csv", "json", "markdown")
_EXTENSIONS = {"csv": "csv", "json": "json", "markdown": "md"}

_CONFIG_KEYS = {
    "input",
    "format",
    "grid",
    "deviation_threshold",
    "zero_policy",
    "ca",
    "cohorts",
    "seed",
    "out",
    "report_formats",
    "year_window",
    "figures",
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return obj


def parse_selector(text: str) -> CohortSelector:
    """Parse the flag mini-syntax, e.g. 'countries:DE,FR;funding:ERC;years:2014;field:TECH'."""
    countries = funding = years = field = exclude = None
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition(":")
        if not sep:
            raise ConfigError(f"selector clause {part!r} is not key:value")
        key = key.strip().lower()
        value = value.strip()
        if key == "countries":
            countries = frozenset(v.strip().upper() for v in value.split(",") if v.strip())
        elif key == "exclude":
            exclude = frozenset(v.strip().upper() for v in value.split(",") if v.strip())
        elif key == "funding":
            try:
                funding = frozenset(FundingClass(v.strip().upper()) for v in value.split(","))
            except ValueError:
                raise ConfigError(
                    f"unknown funding class in {value!r}; expected ERC, EU_OTHER, OTHER"
                ) from None
        elif key == "years":
            lo, sep, hi = value.partition("-")
            try:
                years = (int(lo), int(hi) if sep else int(lo))
            except ValueError:
                raise ConfigError(f"bad years range {value!r}; expected YYYY or YYYY-YYYY") from None
        elif key == "field":
            field = value
        else:
            raise ConfigError(f"unknown selector key {key!r}")
    try:
        return CohortSelector(
            countries=countries, funding=funding, years=years, field=field, exclude_countries=exclude
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _selector_from_config(obj: dict) -> CohortSelector:
    known = {"countries", "funding", "years", "field", "exclude_countries"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown selector keys: {sorted(unknown)}")
    try:
        years = obj.get("years")
        return CohortSelector(
            countries=frozenset(str(c).upper() for c in obj["countries"]) if "countries" in obj else None,
            funding=frozenset(FundingClass(str(f).upper()) for f in obj["funding"]) if "funding" in obj else None,
            years=(int(years[0]), int(years[1])) if years is not None else None,
            field=obj.get("field"),
            exclude_countries=frozenset(str(c).upper() for c in obj["exclude_countries"])
            if "exclude_countries" in obj
            else None,
        )
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"bad selector in config: {exc}") from exc


def _resolve(args: argparse.Namespace, config: dict, key: str, default=None):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _parse_grid(raw) -> tuple:
    if raw is None:
        return GRID_STD
    if isinstance(raw, str):
        raw = [part.strip() for part in raw.split(",") if part.strip()]
    try:
        levels = tuple(PercentileLevel.of(x) for x in raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad grid {raw!r}: {exc}") from exc
    return levels

def _read_corpus(args: argparse.Namespace, config: dict):
    path = _resolve(args, config, "input")
    if path is None:
        raise ConfigError("no input file given (flag --input or config 'input')")
    fmt = _resolve(args, config, "format", "csv")
    year_window = config.get("year_window")
    if year_window is not None:
        year_window = (int(year_window[0]), int(year_window[1]))
    try:
        with open(path, "rb") as handle:
            return load_records(handle, Format(fmt), year_window=year_window)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad format {fmt!r}") from exc


def _out_dir(args: argparse.Namespace, config: dict) -> Path:
    out = Path(_resolve(args, config, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_formats(args: argparse.Namespace, config: dict) -> tuple[str, ...]:
    raw = _resolve(args, config, "report_formats")
    if raw is None:
        return _REPORT_FORMATS
    if isinstance(raw, str):
        raw = [part.strip() for part in raw.split(",") if part.strip()]
    for fmt in raw:
        if fmt not in _REPORT_FORMATS:
            raise ConfigError(f"unknown report format {fmt!r}; expected {_REPORT_FORMATS}")
    return tuple(raw)


def _threads() -> int:
    raw = os.environ.get("EPGAUGE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"EPGAUGE_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def _print_seed(args: argparse.Namespace, config: dict) -> int:
    seed = _resolve(args, config, "seed", 0)
    seed = int(seed)
    print(f"seed: {seed}")
    return seed


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    result = _read_corpus(args, config)
    out = _out_dir(args, config)
    rejects_path = out / "rejects.jsonl"
    rejects_path.write_bytes(result.rejects_jsonl())
    _print_seed(args, config)
    print(f"records: {len(result.corpus)}")
    print(f"rejects: {len(result.rejects)} ({rejects_path})")
    return EXIT_OK


def _named_cohorts(args: argparse.Namespace, config: dict) -> dict[str, CohortSelector]:
    cohorts: dict[str, CohortSelector] = {}
    for name, spec in (config.get("cohorts") or {}).items():
        cohorts[name] = _selector_from_config(spec)
    for item in getattr(args, "cohort", None) or []:
        name, sep, spec = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"--cohort must be NAME=SELECTOR, got {item!r}")
        cohorts[name] = parse_selector(spec)
    if not cohorts:
        raise ConfigError("no cohorts given (flag --cohort or config 'cohorts')")
    return cohorts


def _assess_all(
    corpus: Corpus,
    cohorts: dict[str, CohortSelector],
    grid,
    options: AssessOptions,
) -> dict[tuple[str, int], CohortAssessment]:
    strata_present = corpus.strata()
    tasks: list[tuple[str, int, CohortSelector]] = []
    for name, selector in sorted(cohorts.items()):
        if selector.field is None:
            raise ConfigError(f"cohort {name!r} must pin a field for baseline stratification")
        field_years = sorted(y for (y, f) in strata_present if f == selector.field)
        if selector.years is None:
            matched = field_years
        else:
            lo, hi = selector.years
            matched = [y for y in field_years if lo <= y <= hi]
        if not matched:
            raise DomainError(
                f"cohort {name!r}: no ({selector.field}) records in the requested years"
            )
        for year in matched:
            tasks.append((name, year, replace(selector, years=(year, year))))

    baselines: dict[tuple[int, str], PercentileBaseline] = {}
    for _, year, selector in tasks:
        stratum = (year, selector.field)
        if stratum not in baselines:
            baselines[stratum] = PercentileBaseline.from_corpus(corpus, stratum)

    def run(task: tuple[str, int, CohortSelector]) -> tuple[tuple[str, int], CohortAssessment]:
        name, year, selector = task
        assessment = assess_cohort(
            corpus,
            baselines[(year, selector.field)],
            selector,
            grid,
            options,
            label=f"{name}/{year}",
        )
        return (name, year), assessment

    n_threads = min(_threads(), len(tasks))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = dict(pool.map(run, tasks))
    else:
        results = dict(map(run, tasks))
    return dict(sorted(results.items()))


def cmd_assess(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    result = _read_corpus(args, config)
    cohorts = _named_cohorts(args, config)
    grid = _parse_grid(_resolve(args, config, "grid"))
    zero_policy = ZeroPolicy(_resolve(args, config, "zero_policy", "exclude_zeros"))
    deviation = float(_resolve(args, config, "deviation_threshold", 1.05))
    options = AssessOptions(zero_policy=zero_policy, deviation_ratio=deviation)
    out = _out_dir(args, config)
    formats = _report_formats(args, config)
    _print_seed(args, config)

    assessments = _assess_all(result.corpus, cohorts, grid, options)
    items = [assessments[key] for key in sorted(assessments)]
    for fmt in formats:
        path = out / f"assessments.{_EXTENSIONS[fmt]}"
        path.write_bytes(render(items, fmt))
        print(f"wrote {path}")

    series = [
        (name, year, a.ep_report.chosen.value) for (name, year), a in assessments.items()
    ]
    series_path = out / "ep_series.csv"
    series_path.write_bytes(ep_series_csv(series))
    print(f"wrote {series_path}")
    if bool(_resolve(args, config, "figures", True)):
        figure_path = render_ep_series_figure(series, out / "ep_by_year.png")
        print(f"wrote {figure_path}")
    for (name, year), a in assessments.items():
        print(f"{name}/{year}: n={a.n} ep={a.ep_report.chosen.value:.3f}"
              f"{' (deviation)' if a.ep_report.deviation_flag else ''}")
    return EXIT_OK


def _ca_schedule(args: argparse.Namespace, config: dict, years: Sequence[int]) -> dict[int, float]:
    ca_conf = config.get("ca") or {}
    preset = getattr(args, "ca_preset", None) or ca_conf.get("preset")
    if "schedule" in ca_conf:
        try:
            return {int(y): float(v) for y, v in ca_conf["schedule"].items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad ca schedule: {exc}") from exc
    if preset in (None, "table5"):
        return dict(REFERENCE_CA_SCHEDULE)
    if preset == "proportional":
        base = getattr(args, "ca_base", None) or ca_conf.get("base_citations")
        base_year = getattr(args, "ca_base_year", None) or ca_conf.get("base_year")
        horizon = getattr(args, "ca_horizon", None) or ca_conf.get("horizon")
        if base is None or base_year is None or horizon is None:
            raise ConfigError(
                "proportional schedule needs base citations, base year, and horizon "
                "(--ca-base/--ca-base-year/--ca-horizon or config ca.*)"
            )
        try:
            return threshold_schedule(float(base), int(base_year), list(years), horizon=int(horizon))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown ca preset {preset!r}; expected table5 or proportional")


def _load_params_rows(path: str) -> tuple[str, str, list[dict]]:
    if path == "reference":
        data = resources.files("epgauge").joinpath("presets/reference_comparison.json").read_bytes()
    else:
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read params file {path}: {exc}") from exc
    try:
        obj = json.loads(data)
        label_a = str(obj["label_a"])
        label_b = str(obj["label_b"])
        rows = obj["rows"]
        if not isinstance(rows, list) or not rows:
            raise KeyError("rows")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"bad params file {path}: {exc}") from exc
    return label_a, label_b, rows


def _comparisons_from_params(path: str) -> dict[str, list[DualMethodComparison]]:
    label_a, label_b, rows = _load_params_rows(path)
    grouped: dict[str, list[DualMethodComparison]] = {}
    for row in rows:
        try:
            comparison = dual_from_params(
                year=int(row["year"]),
                label_a=label_a,
                label_b=label_b,
                c_a=float(row["citations"]),
                mu_a=float(row["a"]["mu"]),
                sigma_a=float(row["a"]["sigma"]),
                mu_b=float(row["b"]["mu"]),
                sigma_b=float(row["b"]["sigma"]),
                p_ep_a=row["a"].get("p_ep"),
                p_ep_b=row["b"].get("p_ep"),
                ep_a=row["a"].get("ep"),
                ep_b=row["b"].get("ep"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad comparison row {row!r}: {exc}") from exc
        grouped.setdefault(str(row.get("field", "ALL")), []).append(comparison)
    return grouped


def cmd_compare(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    out = _out_dir(args, config)
    formats = _report_formats(args, config)
    _print_seed(args, config)

    if args.params:
        grouped = _comparisons_from_params(args.params)
    else:
        if not (args.cohort_a and args.cohort_b):
            raise ConfigError("compare needs either --params or both --cohort-a and --cohort-b")
        result = _read_corpus(args, config)
        grid = _parse_grid(_resolve(args, config, "grid"))
        zero_policy = ZeroPolicy(_resolve(args, config, "zero_policy", "exclude_zeros"))
        options = AssessOptions(zero_policy=zero_policy)
        name_a, sel_a = _parse_named(args.cohort_a)
        name_b, sel_b = _parse_named(args.cohort_b)
        assessments = _assess_all(result.corpus, {name_a: sel_a, name_b: sel_b}, grid, options)
        years = sorted({year for (_, year) in assessments})
        schedule = _ca_schedule(args, config, years)
        comparisons = []
        for year in years:
            if year not in schedule:
                raise ConfigError(f"no citation threshold scheduled for year {year}")
            a = assessments.get((name_a, year))
            b = assessments.get((name_b, year))
            if a is None or b is None:
                raise DomainError(f"both cohorts must cover year {year}")
            comparisons.append(compare_dual(a, b, year, schedule[year]))
        grouped = {"ALL": comparisons}

    for field_tag, comparisons in sorted(grouped.items()):
        stem = "comparison" if len(grouped) == 1 else f"comparison_{field_tag.replace('/', '_')}"
        for fmt in formats:
            path = out / f"{stem}.{_EXTENSIONS[fmt]}"
            path.write_bytes(render(comparisons, fmt))
            print(f"wrote {path}")
        for c in comparisons:
            print(
                f"{field_tag} {c.year}: P_ln {c.label_a}={c.p_lognormal_a:.5f} "
                f"{c.label_b}={c.p_lognormal_b:.5f} ratio_ep={c.ratio_ep:.2f} "
                f"ratio_ln={c.ratio_lognormal:.2f}"
            )
    return EXIT_OK


def _parse_named(item: str) -> tuple[str, CohortSelector]:
    name, sep, spec = item.partition("=")
    if not sep or not name:
        raise ConfigError(f"expected NAME=SELECTOR, got {item!r}")
    return name, parse_selector(spec)


def cmd_synth(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    try:
        spec_data = Path(args.spec).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read synth spec {args.spec}: {exc}") from exc
    spec = SynthSpec.from_json(spec_data)
    seed_override = _resolve(args, config, "seed")
    if seed_override is not None:
        spec = replace(spec, seed=int(seed_override))
    print(f"seed: {spec.seed}")
    out = _out_dir(args, config)
    fmt = Format(_resolve(args, config, "format", "csv"))

    global_corpus = gen_global(spec)
    cohort = gen_local_with_ep(spec, global_corpus)
    merged = merge_cohort(global_corpus, cohort)

    from .corpus import export_records

    corpus_path = out / f"corpus.{fmt.value}"
    corpus_path.write_bytes(export_records(merged, fmt))
    manifest = {
        "seed": spec.seed,
        "spec": json.loads(spec.to_json()),
        "cohort_tag": "SYN",
        "n_global": len(global_corpus),
        "n_cohort": len(cohort),
    }
    manifest_path = out / "synth_manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {corpus_path}")
    print(f"wrote {manifest_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epgauge",
        description="Percentile-based research performance indicators for publication cohorts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON run configuration (flags override it)")
        p.add_argument("--out", help="output directory (default: current directory)")
        p.add_argument("--seed", type=int, help="run seed; printed in all outputs")
        p.add_argument(
            "--report-format",
            dest="report_formats",
            help="comma-separated subset of csv,json,markdown",
        )

    p_ingest = sub.add_parser("ingest", help="load and validate a corpus; write a rejects report")
    p_ingest.add_argument("--input", help="corpus file")
    p_ingest.add_argument("--format", choices=[f.value for f in Format], help="input format")
    common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_assess = sub.add_parser("assess", help="assess named cohorts against per-stratum baselines")
    p_assess.add_argument("--input", help="corpus file")
    p_assess.add_argument("--format", choices=[f.value for f in Format], help="input format")
    p_assess.add_argument(
        "--cohort",
        action="append",
        metavar="NAME=SELECTOR",
        help="cohort definition, e.g. erc=countries:DE,FR;funding:ERC;years:2014;field:TECH",
    )
    p_assess.add_argument("--grid", help="comma-separated percentile levels (default 7,10,15,20,25,35)")
    p_assess.add_argument("--zero-policy", dest="zero_policy", choices=[z.value for z in ZeroPolicy])
    p_assess.add_argument("--deviation-threshold", dest="deviation_threshold", type=float)
    p_assess.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    common(p_assess)
    p_assess.set_defaults(func=cmd_assess)

    p_compare = sub.add_parser("compare", help="dual-method comparison of two cohorts")
    p_compare.add_argument("--params", help="comparison parameter file, or 'reference' for the built-in preset")
    p_compare.add_argument("--input", help="corpus file (cohort mode)")
    p_compare.add_argument("--format", choices=[f.value for f in Format], help="input format")
    p_compare.add_argument("--cohort-a", dest="cohort_a", metavar="NAME=SELECTOR")
    p_compare.add_argument("--cohort-b", dest="cohort_b", metavar="NAME=SELECTOR")
    p_compare.add_argument("--grid", help="percentile levels for the e_p side")
    p_compare.add_argument("--zero-policy", dest="zero_policy", choices=[z.value for z in ZeroPolicy])
    p_compare.add_argument("--ca-preset", dest="ca_preset", choices=["table5", "proportional"])
    p_compare.add_argument("--ca-base", dest="ca_base", type=float, help="base citations (proportional)")
    p_compare.add_argument("--ca-base-year", dest="ca_base_year", type=int)
    p_compare.add_argument("--ca-horizon", dest="ca_horizon", type=int)
    common(p_compare)
    p_compare.set_defaults(func=cmd_compare)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus from a spec")
    p_synth.add_argument("--spec", required=True, help="SynthSpec JSON document")
    p_synth.add_argument("--format", choices=[f.value for f in Format], help="output corpus format")
    common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, which matches the input-error code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except EpgaugeError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
