"""Lognormal citation models: maximum-likelihood fit, density, upper tail.

Citation counts are modelled as C with ln C ~ Normal(mu, sigma).  The
maximum-likelihood estimates are the sample mean and the divide-by-n
standard deviation of ln C.  Zero-citation papers have no log; the default
policy excludes them (with counts kept in the fit for bookkeeping), and a
shift-by-one alternative is available.

The upper cumulative probability of exceeding a citation threshold is

    P(C > c_a) = erfc((ln c_a - mu) / (sigma * sqrt(2))) / 2

evaluated with the package's own erfc (see special.py); numerical
quadrature of the density exists only as a test oracle.  All logarithms
here are natural; base 10 appears only in the percentile power-law fit.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateFitError, DomainError
from .special import erfc

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class ZeroPolicy(enum.Enum):
    EXCLUDE_ZEROS = "exclude_zeros"
    SHIFT_PLUS_ONE = "shift_plus_one"


@dataclass(frozen=True)
class LognormalFit:
    """Parameters of ln-citations with sample bookkeeping.

    n_used == 0 marks externally supplied parameters (no sample behind them).
    """

    mu: float
    sigma: float
    n_used: int
    n_excluded_zero: int
    zero_policy: ZeroPolicy

    def __post_init__(self) -> None:
        if not (self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @classmethod
    def from_params(cls, mu: float, sigma: float) -> "LognormalFit":
        """Wrap externally supplied (mu, sigma), e.g. from a published table."""
        return cls(
            mu=mu, sigma=sigma, n_used=0, n_excluded_zero=0, zero_policy=ZeroPolicy.EXCLUDE_ZEROS
        )

    def to_json_dict(self) -> dict:
        return {
            "mu": self.mu,
            "sigma": self.sigma,
            "n_used": self.n_used,
            "n_excluded_zero": self.n_excluded_zero,
            "zero_policy": self.zero_policy.value,
        }

    def to_json(self) -> bytes:
        return (json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def fit_mle(
    citations: Sequence[int] | np.ndarray,
    policy: ZeroPolicy = ZeroPolicy.EXCLUDE_ZEROS,
) -> LognormalFit:
    """Maximum-likelihood lognormal fit of non-negative citation counts.

    Requires at least two usable values with non-identical logs after the
    zero policy is applied.
    """
    cit = np.asarray(citations, dtype=np.int64)
    if cit.size and (cit < 0).any():
        raise ValueError("citations must be non-negative")
    if policy is ZeroPolicy.EXCLUDE_ZEROS:
        used = cit[cit > 0]
        n_excluded = int(cit.size - used.size)
    else:
        used = cit + 1
        n_excluded = 0
    if used.size < 2:
        raise DegenerateFitError(
            f"need at least 2 positive citation counts to fit, got {used.size}"
        )
    logs = np.log(used.astype(np.float64))
    mu = float(np.mean(logs))
    sigma = float(np.sqrt(np.mean((logs - mu) ** 2)))
    if sigma == 0.0:
        raise DegenerateFitError("all citation counts identical; sigma would be 0")
    return LognormalFit(
        mu=mu,
        sigma=sigma,
        n_used=int(used.size),
        n_excluded_zero=n_excluded,
        zero_policy=policy,
    )


def pdf(fit: LognormalFit, c: float) -> float:
    """Lognormal density at citation count c > 0."""
    if not (c > 0):
        raise ValueError(f"density is defined for c > 0, got {c}")
    z = (math.log(c) - fit.mu) / fit.sigma
    return math.exp(-0.5 * z * z) / (_SQRT2PI * c * fit.sigma)


def tail_probability(mu: float, sigma: float, c_a: float) -> float:
    """P(C > c_a) for ln C ~ Normal(mu, sigma)."""
    if not (c_a > 0):
        raise ValueError(f"citation threshold must be positive, got {c_a}")
    if not (sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma}")
    return 0.5 * erfc((math.log(c_a) - mu) / (sigma * _SQRT2))


def upper_tail(fit: LognormalFit, c_a: float) -> float:
    """Probability that a paper from this fit exceeds c_a citations."""
    return tail_probability(fit.mu, fit.sigma, c_a)


def log_likelihood(fit: LognormalFit, citations: Sequence[int] | np.ndarray) -> float:
    """Log-likelihood of positive citation counts under the fit (zeros excluded)."""
    cit = np.asarray(citations, dtype=np.float64)
    cit = cit[cit > 0]
    logs = np.log(cit)
    z = (logs - fit.mu) / fit.sigma
    return float(-0.5 * np.sum(z * z) - cit.size * math.log(_SQRT2PI * fit.sigma) - np.sum(logs))


def tail_ratio(fit_a: LognormalFit, fit_b: LognormalFit, c_a: float) -> float:
    """upper_tail(fit_a) / upper_tail(fit_b) at the same threshold."""
    pa = upper_tail(fit_a, c_a)
    pb = upper_tail(fit_b, c_a)
    if pb == 0.0:
        raise DomainError(
            f"tail ratio undefined: denominator tail underflows to 0 at c_a={c_a} "
            f"(numerator tail = {pa!r})"
        )
    return pa / pb


#: fixed thresholds of the shipped reference comparison (publication year -> citations)
REFERENCE_CA_SCHEDULE: Mapping[int, float] = {2011: 1000.0, 2012: 850.0, 2013: 700.0, 2014: 500.0}


def threshold_schedule(
    base_citations: float,
    base_year: int,
    years: Sequence[int],
    *,
    horizon: int,
    granularity: int | None = 50,
) -> dict[int, float]:
    """Citation thresholds scaled by citation-window length.

    threshold(y) = base_citations * (horizon - y) / (horizon - base_year),
    rounded to the nearest `granularity` (half away from zero); pass
    granularity=None for the raw proportional values.  Papers published
    closer to the horizon have had less time to accumulate citations, so
    their thresholds shrink proportionally.  The shipped reference schedule
    (REFERENCE_CA_SCHEDULE) does not follow this rule exactly and is kept
    as a literal preset.
    """
    if base_year not in years:
        raise ValueError(f"base_year {base_year} must be one of the scheduled years {list(years)}")
    base_window = horizon - base_year
    if base_window <= 0:
        raise ValueError(f"horizon {horizon} must be after base_year {base_year}")
    out: dict[int, float] = {}
    for y in years:
        window = horizon - y
        if window <= 0:
            raise ValueError(f"horizon {horizon} must be after scheduled year {y}")
        value = base_citations * window / base_window
        if granularity is not None:
            value = granularity * math.floor(value / granularity + 0.5)
        if value <= 0:
            raise ValueError(f"threshold for year {y} rounded to a non-positive value")
        out[y] = float(value)
    return out
