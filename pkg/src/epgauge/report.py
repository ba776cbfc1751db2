"""Cohort assessments, dual-method comparisons, and report rendering.

An assessment chains selection -> share counting -> power-law fit
(optionally plus a lognormal fit) for one cohort against one baseline.  A
dual-method comparison puts two cohorts side by side with the probability
of exceeding a citation threshold computed both from the lognormal tail
and from the e_p index.

Reports store full-precision values and round only when rendering; every
probability printed is recomputed from the stored parameters at render
time, so a report that drifted out of sync with its own inputs fails loudly
instead of printing stale numbers.  JSON output is canonical (sorted keys,
shortest round-trip floats) to keep reports diff-stable.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import CohortSelector, Corpus, select_cohort
from .epfit import (
    DEFAULT_DEVIATION_RATIO,
    DEFAULT_SPLIT,
    EpFitReport,
    TOP_BREAKTHROUGH,
    fit_ep,
    probability_top,
)
from .errors import DomainError, EmptyCohortError, ReportConsistencyError
from .lognormal import LognormalFit, ZeroPolicy, fit_mle, tail_probability
from .percentile import (
    GRID_STD,
    LevelLike,
    PercentileBaseline,
    PercentileLevel,
    ShareTable,
    share_table,
)


@dataclass(frozen=True)
class AssessOptions:
    """Knobs for assess_cohort; defaults follow the documented conventions."""

    with_lognormal: bool = True
    zero_policy: ZeroPolicy = ZeroPolicy.EXCLUDE_ZEROS
    split: LevelLike = DEFAULT_SPLIT
    deviation_ratio: float = DEFAULT_DEVIATION_RATIO
    p_levels: tuple[LevelLike, ...] = (10, 1, "0.1", "0.01")
    min_n: int = 3
    flag_below: int = 100


@dataclass(frozen=True)
class RenderOptions:
    """Numeric precision of delimited/markdown cells (JSON is never rounded)."""

    prob_decimals: int = 5
    ep_decimals: int = 3
    ratio_decimals: int = 2
    percent_decimals: int = 1


DEFAULT_RENDER = RenderOptions()


@dataclass(frozen=True)
class CohortAssessment:
    """One cohort's standing against its baseline."""

    label: str
    n: int
    percent_of_parent: float
    ep_report: EpFitReport
    shares: ShareTable
    p_top_x: dict[str, float]
    lognormal: LognormalFit | None = None
    flags: tuple[str, ...] = ()

    def check_consistency(self) -> None:
        for key, stored in self.p_top_x.items():
            expected = probability_top(self.ep_report.chosen, key)
            if not math.isclose(stored, expected, rel_tol=1e-12, abs_tol=0.0):
                raise ReportConsistencyError(
                    f"assessment {self.label!r}: stored p_top[{key}]={stored!r} "
                    f"!= recomputed {expected!r}"
                )

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "percent_of_parent": self.percent_of_parent,
            "ep": self.ep_report.to_json_dict(),
            "shares": {
                "rows": [{"x": str(level), "share": s} for level, s in self.shares.rows],
                "n_local": self.shares.n_local,
                "provenance": self.shares.provenance.value,
                "foreign_values": self.shares.foreign_values,
            },
            "p_top": dict(self.p_top_x),
            "lognormal": None if self.lognormal is None else self.lognormal.to_json_dict(),
            "flags": list(self.flags),
        }


def assess_cohort(
    corpus: Corpus,
    baseline: PercentileBaseline,
    selector: CohortSelector,
    grid: Sequence[LevelLike] = GRID_STD,
    options: AssessOptions = AssessOptions(),
    *,
    label: str = "cohort",
) -> CohortAssessment:
    """Select, count, and fit one cohort against a baseline."""
    cohort = select_cohort(corpus, selector)
    n = len(cohort)
    if n == 0:
        raise EmptyCohortError(f"cohort {label!r} selected no records")
    if n < options.min_n:
        raise DomainError(f"cohort {label!r} has only {n} records (minimum {options.min_n})")
    flags: list[str] = []
    if n < options.flag_below:
        flags.append(f"low-n:{n}")
    shares = share_table(cohort, baseline, grid)
    if shares.foreign_values:
        flags.append(f"foreign-citation-values:{shares.foreign_values}")
    report = fit_ep(shares, split=options.split, deviation_ratio=options.deviation_ratio)
    p_top = {
        str(PercentileLevel.of(x)): probability_top(report.chosen, x) for x in options.p_levels
    }
    fit = None
    if options.with_lognormal:
        try:
            fit = fit_mle(cohort.citations(), options.zero_policy)
        except DomainError as exc:
            flags.append(f"lognormal-degenerate:{exc}")
    return CohortAssessment(
        label=label,
        n=n,
        percent_of_parent=100.0 * n / len(corpus),
        ep_report=report,
        shares=shares,
        p_top_x=p_top,
        lognormal=fit,
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class DualMethodComparison:
    """Two cohorts' tail probabilities by lognormal and by e_p, with ratios."""

    year: int
    label_a: str
    label_b: str
    c_a: float
    lognormal_a: LognormalFit
    lognormal_b: LognormalFit
    p_lognormal_a: float = field(init=False, default=0.0)
    p_lognormal_b: float = field(init=False, default=0.0)
    p_ep_a: float = 0.0
    p_ep_b: float = 0.0
    ratio_lognormal: float = field(init=False, default=0.0)
    ratio_ep: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        pa = tail_probability(self.lognormal_a.mu, self.lognormal_a.sigma, self.c_a)
        pb = tail_probability(self.lognormal_b.mu, self.lognormal_b.sigma, self.c_a)
        if pa == 0.0:
            raise DomainError(
                f"lognormal tail for {self.label_a!r} underflows to 0 at c_a={self.c_a}"
            )
        object.__setattr__(self, "p_lognormal_a", pa)
        object.__setattr__(self, "p_lognormal_b", pb)
        object.__setattr__(self, "ratio_lognormal", pb / pa)
        if self.p_ep_a <= 0.0 or self.p_ep_b <= 0.0:
            raise ValueError("e_p-method probabilities must be positive")
        object.__setattr__(self, "ratio_ep", self.p_ep_b / self.p_ep_a)

    def check_consistency(self) -> None:
        pa = tail_probability(self.lognormal_a.mu, self.lognormal_a.sigma, self.c_a)
        pb = tail_probability(self.lognormal_b.mu, self.lognormal_b.sigma, self.c_a)
        checks = (
            ("p_lognormal_a", self.p_lognormal_a, pa),
            ("p_lognormal_b", self.p_lognormal_b, pb),
            ("ratio_lognormal", self.ratio_lognormal, pb / pa),
            ("ratio_ep", self.ratio_ep, self.p_ep_b / self.p_ep_a),
        )
        for name, stored, expected in checks:
            if not math.isclose(stored, expected, rel_tol=1e-12, abs_tol=0.0):
                raise ReportConsistencyError(
                    f"comparison {self.year}: stored {name}={stored!r} != recomputed {expected!r}"
                )

    def to_json_dict(self) -> dict:
        return {
            "year": self.year,
            "label_a": self.label_a,
            "label_b": self.label_b,
            "c_a": self.c_a,
            "lognormal_a": self.lognormal_a.to_json_dict(),
            "lognormal_b": self.lognormal_b.to_json_dict(),
            "p_lognormal_a": self.p_lognormal_a,
            "p_lognormal_b": self.p_lognormal_b,
            "p_ep_a": self.p_ep_a,
            "p_ep_b": self.p_ep_b,
            "ratio_lognormal": self.ratio_lognormal,
            "ratio_ep": self.ratio_ep,
        }


def compare_dual(
    assess_a: CohortAssessment,
    assess_b: CohortAssessment,
    year: int,
    c_a: float,
) -> DualMethodComparison:
    """Dual-method comparison of two assessed cohorts at one threshold."""
    if assess_a.lognormal is None or assess_b.lognormal is None:
        missing = assess_a.label if assess_a.lognormal is None else assess_b.label
        raise DomainError(f"cohort {missing!r} carries no lognormal fit; cannot compare")
    return DualMethodComparison(
        year=year,
        label_a=assess_a.label,
        label_b=assess_b.label,
        c_a=c_a,
        lognormal_a=assess_a.lognormal,
        lognormal_b=assess_b.lognormal,
        p_ep_a=probability_top(assess_a.ep_report.chosen, TOP_BREAKTHROUGH),
        p_ep_b=probability_top(assess_b.ep_report.chosen, TOP_BREAKTHROUGH),
    )


def dual_from_params(
    year: int,
    label_a: str,
    label_b: str,
    c_a: float,
    mu_a: float,
    sigma_a: float,
    mu_b: float,
    sigma_b: float,
    *,
    p_ep_a: float | None = None,
    p_ep_b: float | None = None,
    ep_a: float | None = None,
    ep_b: float | None = None,
) -> DualMethodComparison:
    """Comparison from raw parameters (parameter-file path, no corpus needed).

    The e_p side accepts either the top-0.01% probabilities directly or the
    e_p values, from which the probabilities follow.
    """

    def resolve(p: float | None, ep: float | None, side: str) -> float:
        if p is None and ep is None:
            raise ValueError(f"side {side}: give either p_ep or ep")
        if p is not None and ep is not None:
            raise ValueError(f"side {side}: give only one of p_ep and ep")
        return p if p is not None else probability_top(ep, TOP_BREAKTHROUGH)  # type: ignore[arg-type]

    return DualMethodComparison(
        year=year,
        label_a=label_a,
        label_b=label_b,
        c_a=c_a,
        lognormal_a=LognormalFit.from_params(mu_a, sigma_a),
        lognormal_b=LognormalFit.from_params(mu_b, sigma_b),
        p_ep_a=resolve(p_ep_a, ep_a, "a"),
        p_ep_b=resolve(p_ep_b, ep_b, "b"),
    )


# ---------------------------------------------------------------------------
# rendering


def _canonical_json(obj: object) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _fmt(value: float, decimals: int) -> str:
    return f"{value:.{decimals}f}"


_ASSESS_CSV_HEADER = "cohort,n,percent,ep,deviation_flag,p_top_0.01"
_COMPARE_CSV_HEADER = (
    "year,c_a,label_a,mu_a,sigma_a,label_b,mu_b,sigma_b,"
    "p_lognormal_a,p_lognormal_b,p_ep_a,p_ep_b,ratio_ep,ratio_lognormal"
)


def _assessment_csv_line(a: CohortAssessment, opt: RenderOptions) -> str:
    p = probability_top(a.ep_report.chosen, TOP_BREAKTHROUGH)
    return ",".join(
        (
            a.label,
            str(a.n),
            _fmt(a.percent_of_parent, opt.percent_decimals),
            _fmt(a.ep_report.chosen.value, opt.ep_decimals),
            str(a.ep_report.deviation_flag),
            _fmt(p, opt.prob_decimals),
        )
    )


def _comparison_csv_line(c: DualMethodComparison, opt: RenderOptions) -> str:
    return ",".join(
        (
            str(c.year),
            repr(c.c_a),
            c.label_a,
            repr(c.lognormal_a.mu),
            repr(c.lognormal_a.sigma),
            c.label_b,
            repr(c.lognormal_b.mu),
            repr(c.lognormal_b.sigma),
            _fmt(c.p_lognormal_a, opt.prob_decimals),
            _fmt(c.p_lognormal_b, opt.prob_decimals),
            _fmt(c.p_ep_a, opt.prob_decimals),
            _fmt(c.p_ep_b, opt.prob_decimals),
            _fmt(c.ratio_ep, opt.ratio_decimals),
            _fmt(c.ratio_lognormal, opt.ratio_decimals),
        )
    )


def _assessments_markdown(items: Sequence[CohortAssessment], opt: RenderOptions) -> str:
    out = io.StringIO()
    out.write("| Cohort | Number | Percent | e_p | Deviation | P(top 0.01%) |\n")
    out.write("| --- | ---: | ---: | ---: | --- | ---: |\n")
    for a in items:
        p = probability_top(a.ep_report.chosen, TOP_BREAKTHROUGH)
        out.write(
            f"| {a.label} | {a.n} | {_fmt(a.percent_of_parent, opt.percent_decimals)} "
            f"| {_fmt(a.ep_report.chosen.value, opt.ep_decimals)} "
            f"| {'yes' if a.ep_report.deviation_flag else 'no'} "
            f"| {_fmt(p, opt.prob_decimals)} |\n"
        )
    return out.getvalue()


def _comparisons_markdown(items: Sequence[DualMethodComparison], opt: RenderOptions) -> str:
    out = io.StringIO()
    first = items[0]
    a, b = first.label_a, first.label_b
    out.write(
        f"| Year | mu {a} | sigma {a} | mu {b} | sigma {b} | Citations "
        f"| P_ln {a} | P_ln {b} | P_ep {a} | P_ep {b} | ratio e_p | ratio lognormal |\n"
    )
    out.write("| --- | ---: | ---: | ---: | ---: | ---: | ---: | ---: | ---: | ---: | ---: | ---: |\n")
    for c in items:
        out.write(
            f"| {c.year} | {c.lognormal_a.mu} | {c.lognormal_a.sigma} "
            f"| {c.lognormal_b.mu} | {c.lognormal_b.sigma} | {c.c_a:g} "
            f"| {_fmt(c.p_lognormal_a, opt.prob_decimals)} | {_fmt(c.p_lognormal_b, opt.prob_decimals)} "
            f"| {_fmt(c.p_ep_a, opt.prob_decimals)} | {_fmt(c.p_ep_b, opt.prob_decimals)} "
            f"| {_fmt(c.ratio_ep, opt.ratio_decimals)} | {_fmt(c.ratio_lognormal, opt.ratio_decimals)} |\n"
        )
    return out.getvalue()


Renderable = CohortAssessment | DualMethodComparison


def render(
    report: Renderable | Sequence[Renderable],
    fmt: str = "json",
    options: RenderOptions = DEFAULT_RENDER,
) -> bytes:
    """Serialize a report (or a homogeneous list of reports) to bytes.

    JSON is lossless and canonical; CSV and Markdown round to the
    configured precision.  Consistency of stored probabilities with their
    parameters is re-checked here.
    """
    items: list[Renderable] = list(report) if isinstance(report, Sequence) else [report]
    if not items:
        raise ValueError("nothing to render")
    kinds = {type(item) for item in items}
    if len(kinds) != 1:
        raise ValueError(f"cannot render a mixed report list: {sorted(k.__name__ for k in kinds)}")
    for item in items:
        item.check_consistency()
    kind = kinds.pop()

    if fmt == "json":
        payload = [item.to_json_dict() for item in items]
        return _canonical_json(payload[0] if not isinstance(report, Sequence) else payload)
    if fmt == "csv":
        if kind is CohortAssessment:
            lines = [_ASSESS_CSV_HEADER] + [
                _assessment_csv_line(a, options) for a in items  # type: ignore[arg-type]
            ]
        else:
            lines = [_COMPARE_CSV_HEADER] + [
                _comparison_csv_line(c, options) for c in items  # type: ignore[arg-type]
            ]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "markdown":
        if kind is CohortAssessment:
            return _assessments_markdown(items, options).encode("utf-8")  # type: ignore[arg-type]
        return _comparisons_markdown(items, options).encode("utf-8")  # type: ignore[arg-type]
    raise ValueError(f"unknown render format {fmt!r} (expected csv, json, or markdown)")


def ep_series_csv(rows: Iterable[tuple[str, int, float]]) -> bytes:
    """Plot-ready (cohort, year, e_p) series as CSV, sorted for stable diffs."""
    out = io.StringIO()
    out.write("cohort,year,ep\n")
    for cohort, year, ep in sorted(rows):
        out.write(f"{cohort},{year},{ep!r}\n")
    return out.getvalue().encode("utf-8")
