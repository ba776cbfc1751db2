"""Global percentile baselines and tie-aware top-percentile counting.

A baseline is the descending citation distribution of one (year, field)
stratum of a reference corpus.  Papers tied at a percentile boundary are
counted fractionally: each member of a tie group receives the expected
membership it would get under random tie-breaking, which makes the total
mass in the top x% exactly x * n / 100 and makes a corpus scored against
itself exactly uniform.

Boundary arithmetic is exact: the slot count x * n / 100 is a Fraction,
never a rounded float, so small strata cannot suffer threshold
off-by-ones.  Shares are accumulated in exact arithmetic as well and only
converted to float on output, which also makes results independent of
record order and of any summation schedule.
"""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .corpus import Corpus
from .errors import DomainError, EmptyCohortError, InputError

LevelLike = Union[int, float, str, Fraction, "PercentileLevel"]

#: default counted grid (configurable; six levels spanning 7..35)
GRID_STD: tuple[int, ...] = (7, 10, 15, 20, 25, 35)
#: extended grid with the two extra top levels used for elite cohorts
GRID_EXT: tuple[int, ...] = (1, 3) + GRID_STD


@dataclass(frozen=True, order=True)
class PercentileLevel:
    """A "top x%" level, held as an exact rational in (0, 100]."""

    x: Fraction

    def __post_init__(self) -> None:
        if not (0 < self.x <= 100):
            raise ValueError(f"percentile level must be in (0, 100], got {self.x}")

    @classmethod
    def of(cls, value: LevelLike) -> "PercentileLevel":
        if isinstance(value, PercentileLevel):
            return value
        if isinstance(value, np.integer):
            value = int(value)
        elif isinstance(value, float):
            # floats are read as their decimal literal (0.01 -> 1/100)
            value = str(value)
        return cls(Fraction(value))

    def as_float(self) -> float:
        return float(self.x)

    def __str__(self) -> str:
        if self.x.denominator == 1:
            return str(self.x.numerator)
        return repr(float(self.x))


class TableProvenance(enum.Enum):
    COUNTED = "COUNTED"
    EXTERNAL = "EXTERNAL"


class PercentileBaseline:
    """Citation distribution of one stratum, indexed by tie groups.

    Stores the descending unique citation values with their multiplicities
    and 1-based rank spans; `sorted_citations` reconstructs the full
    descending multiset on demand.
    """

    __slots__ = ("stratum", "values", "counts", "lo", "hi", "n_global")

    def __init__(self, stratum: tuple[int, str], citations: Sequence[int] | np.ndarray):
        cit = np.asarray(citations, dtype=np.int64)
        if cit.size == 0:
            raise EmptyCohortError(f"cannot build a baseline from an empty stratum {stratum}")
        if (cit < 0).any():
            raise ValueError("citations must be non-negative")
        values, counts = np.unique(cit, return_counts=True)
        self.stratum = stratum
        self.values = values[::-1].copy()  # descending
        self.counts = counts[::-1].copy()
        self.hi = np.cumsum(self.counts)
        self.lo = self.hi - self.counts + 1
        self.n_global = int(cit.size)

    @classmethod
    def from_corpus(cls, corpus: Corpus, stratum: tuple[int, str]) -> "PercentileBaseline":
        return cls(stratum, corpus.stratum(*stratum).citations())

    def sorted_citations(self) -> np.ndarray:
        return np.repeat(self.values, self.counts)

    def contains(self, citations: int) -> bool:
        i = int(np.searchsorted(-self.values, -citations))
        return i < len(self.values) and int(self.values[i]) == citations

    def tie_group(self, citations: int) -> tuple[int, int, int]:
        """(count, first rank, last rank) of the tie group at a citation value."""
        i = int(np.searchsorted(-self.values, -citations))
        if i >= len(self.values) or int(self.values[i]) != citations:
            raise KeyError(f"citation value {citations} not present in baseline")
        return int(self.counts[i]), int(self.lo[i]), int(self.hi[i])

    def tie_groups(self) -> dict[int, tuple[int, int, int]]:
        return {
            int(v): (int(c), int(lo), int(hi))
            for v, c, lo, hi in zip(self.values, self.counts, self.lo, self.hi)
        }

    def min_citations(self) -> int:
        return int(self.values[-1])

    def _slots(self, x: LevelLike) -> Fraction:
        level = PercentileLevel.of(x)
        return level.x * self.n_global / 100

    def _weight_fraction(self, citations: int, k: Fraction) -> Fraction:
        """Exact expected top-k membership of one paper with this citation value.

        For a value present in the baseline this is the fractional overlap of
        its tie-group rank span with the first k slots, divided by the group
        size.  A value absent from the baseline (foreign scoring) is treated
        as a singleton inserted after all strictly-greater values.
        """
        i = int(np.searchsorted(-self.values, -citations))
        if i < len(self.values) and int(self.values[i]) == citations:
            lo = int(self.lo[i])
            size = int(self.counts[i])
        else:
            lo = int(self.hi[i - 1]) + 1 if i > 0 else 1
            size = 1
        w = Fraction(k - lo + 1, size)
        if w <= 0:
            return Fraction(0)
        if w >= 1:
            return Fraction(1)
        return w


def build_baseline(global_corpus: Corpus, stratum: tuple[int, str]) -> PercentileBaseline:
    """Baseline for one (year, field) stratum of the reference corpus."""
    return PercentileBaseline.from_corpus(global_corpus, stratum)


def top_weight(baseline: PercentileBaseline, citations: int, x: LevelLike) -> float:
    """Fractional membership of a paper with `citations` in the global top x%."""
    if citations < 0:
        raise ValueError("citations must be >= 0")
    return float(baseline._weight_fraction(citations, baseline._slots(x)))


def citation_threshold(baseline: PercentileBaseline, x: LevelLike) -> int:
    """Minimal citation value present in the baseline with nonzero top-x weight."""
    k = baseline._slots(x)
    # weight > 0  <=>  lo < k + 1; tie-group lo values are increasing
    limit = k + 1
    i = int(np.searchsorted(baseline.lo, float(limit), side="left"))
    # float probe then exact adjustment at the boundary
    while i < len(baseline.lo) and Fraction(int(baseline.lo[i])) < limit:
        i += 1
    while i > 0 and Fraction(int(baseline.lo[i - 1])) >= limit:
        i -= 1
    if i == 0:
        raise DomainError(f"no citation value reaches top {PercentileLevel.of(x)}%")
    return int(baseline.values[i - 1])


def _local_value_counts(local: Corpus, baseline: PercentileBaseline) -> tuple[np.ndarray, np.ndarray, int]:
    if len(local) == 0:
        raise EmptyCohortError("cannot score an empty cohort")
    year, field_tag = baseline.stratum
    for r in local.records:
        if r.year != year or r.field_tag != field_tag:
            raise DomainError(
                f"record {r.id!r} ({r.year}, {r.field_tag!r}) does not belong to "
                f"baseline stratum ({year}, {field_tag!r})"
            )
    values, counts = np.unique(local.citations(), return_counts=True)
    return values[::-1], counts[::-1], len(local)


def _share_fraction(
    values: np.ndarray, counts: np.ndarray, n_local: int, baseline: PercentileBaseline, k: Fraction
) -> Fraction:
    total = Fraction(0)
    for v, c in zip(values, counts):
        w = baseline._weight_fraction(int(v), k)
        if w == 0:
            break  # values are descending; everything below is also weight 0
        total += w * int(c)
    return total / n_local


def fraction_in_top(local: Corpus, baseline: PercentileBaseline, x: LevelLike) -> float:
    """Share of the local cohort at or above the global top-x% boundary."""
    values, counts, n_local = _local_value_counts(local, baseline)
    return float(_share_fraction(values, counts, n_local, baseline, baseline._slots(x)))


@dataclass(frozen=True)
class ShareTable:
    """(level, share) rows: the empirical object the power law is fitted to."""

    rows: tuple[tuple[PercentileLevel, float], ...]
    n_local: int
    provenance: TableProvenance = TableProvenance.COUNTED
    foreign_values: int = 0

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("share table must have at least one row")
        if self.n_local <= 0:
            raise ValueError("n_local must be positive")
        # normalize row order so equal tables compare (and fit) identically
        object.__setattr__(self, "rows", tuple(sorted(self.rows, key=lambda r: r[0].x)))
        xs = [level.x for level, _ in self.rows]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("levels must be strictly increasing")
        shares = [s for _, s in self.rows]
        if any(not (0.0 <= s <= 1.0) for s in shares):
            raise InputError(f"shares must lie in [0, 1], got {shares}")
        if any(b < a for a, b in zip(shares, shares[1:])):
            raise InputError("shares must be non-decreasing in the level")
        if self.provenance is TableProvenance.COUNTED:
            for level, s in self.rows:
                if level.x == 100 and s != 1.0:
                    raise InputError(f"counted share at level 100 must be 1, got {s}")

    def levels(self) -> tuple[PercentileLevel, ...]:
        return tuple(level for level, _ in self.rows)

    def shares(self) -> tuple[float, ...]:
        return tuple(s for _, s in self.rows)

    def to_csv(self) -> bytes:
        out = io.StringIO()
        out.write("x,share,n_local\n")
        for level, share in self.rows:
            out.write(f"{level},{share!r},{self.n_local}\n")
        return out.getvalue().encode("utf-8")

    def to_json(self) -> bytes:
        obj = {
            "rows": [{"x": str(level), "share": share} for level, share in self.rows],
            "n_local": self.n_local,
            "provenance": self.provenance.value,
            "foreign_values": self.foreign_values,
        }
        return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")

    @classmethod
    def from_csv(cls, data: bytes) -> "ShareTable":
        text = data.decode("utf-8")
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "x,share,n_local":
            raise InputError("share table CSV must start with header 'x,share,n_local'")
        rows: list[tuple[PercentileLevel, float]] = []
        n_local = 0
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != 3:
                raise InputError(f"bad share table row: {ln!r}")
            rows.append((PercentileLevel.of(parts[0]), float(parts[1])))
            n_local = int(parts[2])
        return cls(rows=tuple(rows), n_local=n_local, provenance=TableProvenance.EXTERNAL)

    @classmethod
    def from_json(cls, data: bytes) -> "ShareTable":
        obj = json.loads(data.decode("utf-8"))
        try:
            rows = tuple(
                (PercentileLevel.of(row["x"]), float(row["share"])) for row in obj["rows"]
            )
            n_local = int(obj["n_local"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad share table JSON: {exc}") from exc
        return cls(rows=rows, n_local=n_local, provenance=TableProvenance.EXTERNAL)


def share_table(
    local: Corpus, baseline: PercentileBaseline, levels: Iterable[LevelLike]
) -> ShareTable:
    """Count the cohort's share at each level (strictly increasing levels)."""
    parsed = [PercentileLevel.of(x) for x in levels]
    if not parsed:
        raise ValueError("levels must be non-empty")
    if any(b.x <= a.x for a, b in zip(parsed, parsed[1:])):
        raise ValueError("levels must be strictly increasing")
    values, counts, n_local = _local_value_counts(local, baseline)
    foreign = sum(int(c) for v, c in zip(values, counts) if not baseline.contains(int(v)))
    rows = tuple(
        (level, float(_share_fraction(values, counts, n_local, baseline, baseline._slots(level))))
        for level in parsed
    )
    return ShareTable(rows=rows, n_local=n_local, foreign_values=foreign)
