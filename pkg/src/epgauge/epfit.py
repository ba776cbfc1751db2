"""The e_p index: single-parameter power-law fit over percentile shares.

The model is P(x) = e_p ** (2 - lg x): the share of a cohort at or above
the global top x% as a function of the level x, with lg = log10.  A cohort
tracking the world average has e_p = 0.1 (shares exactly x/100); stronger
cohorts have larger e_p.  Because the model has one free parameter and is
linear in log-log space, the least-squares fit is closed-form:

    lg e_p = sum(w_i * y_i) / sum(w_i ** 2),   w_i = 2 - lg x_i,  y_i = lg s_i

which always satisfies P(100) = 1, unlike a two-parameter affine fit.

Elite cohorts sometimes bend away from a single power law, with the upper
levels implying a larger index than the lower ones.  fit_ep therefore also
fits the two halves of the grid separately and, when the high-side index
exceeds the low-side index by more than a configurable factor, flags the
deviation and reports the low-side fit as the chosen index (the low levels
are the ones that matter when extrapolating deep into the tail).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DegenerateFitError, InputError
from .percentile import LevelLike, PercentileLevel, ShareTable

#: boundary between the "low" and "high" grid segments
DEFAULT_SPLIT = 10
#: flag a deviation when ep_high > ep_low * this factor
DEFAULT_DEVIATION_RATIO = 1.05
#: a fit needs at least this many levels with positive share
MIN_POSITIVE_LEVELS = 3


@dataclass(frozen=True)
class EpIndex:
    """The fitted index; 0.1 means world-average, values above 1 are impossible."""

    value: float

    def __post_init__(self) -> None:
        if not (0.0 < self.value <= 1.0):
            raise ValueError(f"e_p must be in (0, 1], got {self.value}")

    def __float__(self) -> float:
        return self.value


def _ep_value(ep: EpIndex | float) -> float:
    v = ep.value if isinstance(ep, EpIndex) else float(ep)
    if not (0.0 < v <= 1.0):
        raise ValueError(f"e_p must be in (0, 1], got {v}")
    return v


def probability_top(ep: EpIndex | float, x: LevelLike) -> float:
    """Probability that a random cohort paper reaches the global top x%."""
    level = PercentileLevel.of(x)
    return _ep_value(ep) ** (2.0 - math.log10(float(level.x)))


def expected_frequency(ep: EpIndex | float, x: LevelLike, n_local: int) -> float:
    """Expected number of cohort papers in the global top x%."""
    if n_local < 0:
        raise ValueError(f"n_local must be >= 0, got {n_local}")
    return n_local * probability_top(ep, x)


def prob_ratio(ep_a: EpIndex | float, ep_b: EpIndex | float, x: LevelLike) -> float:
    """How many times likelier cohort a reaches the top x% than cohort b."""
    return probability_top(ep_a, x) / probability_top(ep_b, x)


@dataclass(frozen=True)
class EpFitReport:
    """Fit result with segment diagnostics.

    residuals are log10-space residuals of the full fit, aligned with
    levels_used; dropped_levels lists zero-share rows excluded from all
    fits.  chosen equals ep_low when the deviation flag is set, ep_full
    otherwise.
    """

    ep_full: EpIndex
    ep_low: EpIndex | None
    ep_high: EpIndex | None
    chosen: EpIndex
    deviation_flag: bool
    residuals: tuple[float, ...]
    levels_used: tuple[PercentileLevel, ...]
    dropped_levels: tuple[PercentileLevel, ...]

    def to_json_dict(self) -> dict:
        return {
            "ep_full": self.ep_full.value,
            "ep_low": None if self.ep_low is None else self.ep_low.value,
            "ep_high": None if self.ep_high is None else self.ep_high.value,
            "chosen": self.chosen.value,
            "deviation_flag": self.deviation_flag,
            "residuals": list(self.residuals),
            "levels_used": [str(level) for level in self.levels_used],
            "dropped_levels": [str(level) for level in self.dropped_levels],
        }


#: the level where landmark papers concentrate; shorthand used by reports
TOP_BREAKTHROUGH = PercentileLevel.of("0.01")


def summary_csv_row(cohort: str, n_local: int, report: EpFitReport) -> str:
    """One-line CSV summary: cohort, n, chosen index, deviation flag, top-0.01% probability."""
    p = probability_top(report.chosen, TOP_BREAKTHROUGH)
    return f"{cohort},{n_local},{report.chosen.value:.3f},{report.deviation_flag},{p:.5e}"


def _closed_form(points: list[tuple[float, float]]) -> float:
    """lg e_p from (w, y) pairs; requires at least one level below 100."""
    sw2 = sum(w * w for w, _ in points)
    if sw2 == 0.0:
        raise DegenerateFitError("all levels are at 100%; the model is unconstrained")
    swy = sum(w * y for w, y in points)
    return swy / sw2


def fit_ep(
    table: ShareTable,
    *,
    split: LevelLike = DEFAULT_SPLIT,
    deviation_ratio: float = DEFAULT_DEVIATION_RATIO,
    min_levels: int = MIN_POSITIVE_LEVELS,
) -> EpFitReport:
    """Fit the power law to a share table and run the deviation diagnostic.

    Zero-share rows are dropped with a warning (their log is undefined and
    flooring them would bias the slope).  Fewer than `min_levels` positive
    rows, or any share above 1, is an error.
    """
    split_level = PercentileLevel.of(split)
    used: list[tuple[PercentileLevel, float]] = []
    dropped: list[PercentileLevel] = []
    for level, share in table.rows:
        if share > 1.0:
            raise InputError(f"share {share} at level {level} exceeds 1")
        if share <= 0.0:
            dropped.append(level)
        else:
            used.append((level, share))
    if dropped:
        warnings.warn(
            f"dropping zero-share levels {[str(d) for d in dropped]} from the fit",
            stacklevel=2,
        )
    if len(used) < min_levels:
        raise DegenerateFitError(
            f"need at least {min_levels} levels with positive share, got {len(used)}"
        )

    points = [
        (2.0 - math.log10(float(level.x)), math.log10(share)) for level, share in used
    ]
    m_full = _closed_form(points)
    ep_full = EpIndex(10.0**m_full)
    residuals = tuple(y - w * m_full for w, y in points)

    # segment fits need two or more levels each to be meaningful
    low = [p for (level, _), p in zip(used, points) if level.x <= split_level.x]
    high = [p for (level, _), p in zip(used, points) if level.x > split_level.x]
    ep_low = EpIndex(10.0 ** _closed_form(low)) if len(low) >= 2 else None
    ep_high = EpIndex(10.0 ** _closed_form(high)) if len(high) >= 2 else None

    deviation = (
        ep_low is not None
        and ep_high is not None
        and ep_high.value > ep_low.value * deviation_ratio
    )
    chosen = ep_low if deviation else ep_full
    assert chosen is not None
    return EpFitReport(
        ep_full=ep_full,
        ep_low=ep_low,
        ep_high=ep_high,
        chosen=chosen,
        deviation_flag=deviation,
        residuals=residuals,
        levels_used=tuple(level for level, _ in used),
        dropped_levels=tuple(dropped),
    )
