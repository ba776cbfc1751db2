"""Publication records: loading, validation, funding classification, cohort selection.

A Corpus is an immutable ordered collection of PaperRecord.  All operations
here are read-only, so corpora and views can be shared freely across
threads.  Input files use a fixed six-column schema (see docs/formats.md);
loading either turns a row into a record or reports it as a rejection with
its line number, and export writes a canonical form that round-trips
byte-identically.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, replace
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .errors import DuplicateIdError, EmptyCohortError, SchemaError

#: canonical column order for CSV/TSV and the key set for JSONL
SCHEMA_COLUMNS = ("id", "year", "citations", "country_tags", "field_tag", "funding_text")


class Format(enum.Enum):
    CSV = "csv"
    TSV = "tsv"
    JSONL = "jsonl"


class FundingClass(enum.Enum):
    ERC = "ERC"
    EU_OTHER = "EU_OTHER"
    OTHER = "OTHER"


# Funding-text matching: short tokens need word boundaries so e.g. "PERCENT"
# does not register as ERC funding; multiword program names match as
# case-insensitive substrings.
_ERC_TOKEN = re.compile(r"\bERC\b", re.IGNORECASE)
_ERC_PHRASE = "european research council"
_EU_TOKENS = re.compile(r"\b(?:COST|FEDER|FP7|FP6)\b", re.IGNORECASE)
_EU_PHRASES = (
    "european social fund",
    "european regional development fund",
    "european commission",
)
_MARIE_CURIE = "marie curie"


def classify_funding(funding_text: str) -> FundingClass:
    """Classify acknowledgment text as ERC, other-EU, or unclassified funding.

    ERC takes precedence over everything; Marie Curie mentions exclude a
    text from EU_OTHER (but never from ERC).  Empty text is OTHER.
    """
    if not funding_text:
        return FundingClass.OTHER
    lowered = funding_text.lower()
    if _ERC_PHRASE in lowered or _ERC_TOKEN.search(funding_text):
        return FundingClass.ERC
    if _MARIE_CURIE in lowered:
        return FundingClass.OTHER
    if _EU_TOKENS.search(funding_text) or any(p in lowered for p in _EU_PHRASES):
        return FundingClass.EU_OTHER
    return FundingClass.OTHER


_EMPTY_TAGS: frozenset[str] = frozenset()


@dataclass(frozen=True, slots=True)
class PaperRecord:
    """One publication: snapshot citation count plus cohort tags."""

    id: str
    year: int
    citations: int
    country_tags: frozenset[str] = _EMPTY_TAGS
    field_tag: str = ""
    funding_text: str = ""
    funding_class: FundingClass | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be non-empty")
        if self.citations < 0:
            raise ValueError(f"record {self.id!r}: citations must be >= 0")
        derived = classify_funding(self.funding_text)
        if self.funding_class is None:
            object.__setattr__(self, "funding_class", derived)
        elif self.funding_class is not derived:
            raise ValueError(
                f"record {self.id!r}: funding_class {self.funding_class} inconsistent "
                f"with funding text (expected {derived})"
            )

    def with_tags(self, extra: Iterable[str]) -> "PaperRecord":
        """Copy of this record with additional country tags."""
        return replace(self, country_tags=self.country_tags | frozenset(extra))


class Corpus:
    """Immutable ordered collection of records with a (year, field) stratum index."""

    __slots__ = ("_records", "_strata", "_citations")

    def __init__(self, records: Iterable[PaperRecord]):
        recs = tuple(records)
        seen: set[str] = set()
        for r in recs:
            if r.id in seen:
                raise DuplicateIdError(f"duplicate record id {r.id!r}")
            seen.add(r.id)
        self._records = recs
        self._strata: dict[tuple[int, str], np.ndarray] | None = None
        self._citations: np.ndarray | None = None

    @classmethod
    def _trusted(cls, records: tuple[PaperRecord, ...]) -> "Corpus":
        # records already validated as id-unique (subset of an existing corpus)
        obj = cls.__new__(cls)
        obj._records = records
        obj._strata = None
        obj._citations = None
        return obj

    @property
    def records(self) -> tuple[PaperRecord, ...]:
        return self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[PaperRecord]:
        return iter(self._records)

    def citations(self) -> np.ndarray:
        """Citation counts in record order (cached int64 array)."""
        if self._citations is None:
            self._citations = np.fromiter(
                (r.citations for r in self._records), dtype=np.int64, count=len(self._records)
            )
        return self._citations

    def strata(self) -> dict[tuple[int, str], np.ndarray]:
        """Index (year, field_tag) -> record positions; partitions the corpus."""
        if self._strata is None:
            buckets: dict[tuple[int, str], list[int]] = {}
            for i, r in enumerate(self._records):
                buckets.setdefault((r.year, r.field_tag), []).append(i)
            self._strata = {
                key: np.asarray(idx, dtype=np.intp) for key, idx in sorted(buckets.items())
            }
        return self._strata

    def stratum(self, year: int, field_tag: str) -> "Corpus":
        """The (year, field_tag) slice as a corpus view; empty stratum raises."""
        idx = self.strata().get((year, field_tag))
        if idx is None:
            raise EmptyCohortError(f"no records in stratum ({year}, {field_tag!r})")
        return Corpus._trusted(tuple(self._records[i] for i in idx))


@dataclass(frozen=True)
class CohortSelector:
    """Conjunction of cohort criteria; at least one must be set.

    countries matches on non-empty intersection with a record's tags;
    exclude_countries rejects any intersection (the ERA-style exclusion
    rule, with membership supplied by configuration); years is an
    inclusive range.
    """

    countries: frozenset[str] | None = None
    funding: frozenset[FundingClass] | None = None
    years: tuple[int, int] | None = None
    field: str | None = None
    exclude_countries: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if (
            self.countries is None
            and self.funding is None
            and self.years is None
            and self.field is None
            and self.exclude_countries is None
        ):
            raise ValueError("selector must set at least one criterion")
        if self.years is not None and self.years[0] > self.years[1]:
            raise ValueError(f"years range {self.years} is inverted")

    def matches(self, record: PaperRecord) -> bool:
        if self.countries is not None and not (self.countries & record.country_tags):
            return False
        if self.exclude_countries is not None and (self.exclude_countries & record.country_tags):
            return False
        if self.funding is not None and record.funding_class not in self.funding:
            return False
        if self.years is not None and not (self.years[0] <= record.year <= self.years[1]):
            return False
        if self.field is not None and record.field_tag != self.field:
            return False
        return True


def select_cohort(corpus: Corpus, selector: CohortSelector) -> Corpus:
    """Subset of `corpus` matching all set criteria, in corpus order.

    The view shares record objects with its parent; an empty result is a
    valid (length 0) corpus, not an error.
    """
    return Corpus._trusted(tuple(r for r in corpus.records if selector.matches(r)))


def cohort_counts(
    corpus: Corpus, selector: CohortSelector, group_by: str
) -> list[tuple[int | FundingClass, int]]:
    """Counts of the selected subset grouped by "year" or "funding_class"."""
    if group_by not in ("year", "funding_class"):
        raise ValueError(f"group_by must be 'year' or 'funding_class', got {group_by!r}")
    counter: Counter = Counter()
    for r in corpus.records:
        if selector.matches(r):
            counter[r.year if group_by == "year" else r.funding_class] += 1
    if group_by == "year":
        return sorted(counter.items())
    order = list(FundingClass)
    return sorted(counter.items(), key=lambda kv: order.index(kv[0]))


@dataclass(frozen=True)
class Rejection:
    """One rejected input row."""

    line: int
    reason: str


@dataclass(frozen=True)
class LoadResult:
    corpus: Corpus
    rejects: tuple[Rejection, ...] = ()

    def rejects_jsonl(self) -> bytes:
        out = io.StringIO()
        for r in self.rejects:
            out.write(json.dumps({"line": r.line, "reason": r.reason}, sort_keys=True))
            out.write("\n")
        return out.getvalue().encode("utf-8")


def _parse_int(text: str, what: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ValueError(f"{what} is not an integer: {text!r}") from None


def _parse_tags(raw: str) -> frozenset[str]:
    if not raw:
        return _EMPTY_TAGS
    return frozenset(t.strip().upper() for t in raw.split(";") if t.strip())


def _build_record(
    fields: dict[str, object], year_window: tuple[int, int] | None
) -> PaperRecord:
    rid = str(fields.get("id", "") or "")
    if not rid:
        raise ValueError("empty id")
    year = fields["year"]
    if not isinstance(year, int) or isinstance(year, bool):
        year = _parse_int(str(year), "year")
    citations = fields["citations"]
    if not isinstance(citations, int) or isinstance(citations, bool):
        citations = _parse_int(str(citations), "citations")
    if citations < 0:
        raise ValueError(f"citations is negative: {citations}")
    if year_window is not None and not (year_window[0] <= year <= year_window[1]):
        raise ValueError(f"year {year} outside window {year_window[0]}..{year_window[1]}")
    tags = fields.get("country_tags", "")
    if isinstance(tags, str):
        tags = _parse_tags(tags)
    elif isinstance(tags, (list, tuple)):
        tags = frozenset(str(t).strip().upper() for t in tags if str(t).strip())
    else:
        raise ValueError(f"country_tags has unsupported type {type(tags).__name__}")
    return PaperRecord(
        id=rid,
        year=year,
        citations=citations,
        country_tags=tags,
        field_tag=str(fields.get("field_tag", "") or ""),
        funding_text=str(fields.get("funding_text", "") or ""),
    )


def load_records(
    source: BinaryIO | bytes,
    fmt: Format | str = Format.CSV,
    *,
    year_window: tuple[int, int] | None = None,
) -> LoadResult:
    """Parse a byte stream into a validated corpus plus per-row rejections.

    A malformed header or a duplicate id aborts the load (SchemaError /
    DuplicateIdError); row-level problems (negative citations, non-integer
    year, missing keys) become Rejection entries instead.  Line numbers are
    1-based positions in the file, header included.
    """
    fmt = Format(fmt) if not isinstance(fmt, Format) else fmt
    data = source if isinstance(source, bytes) else source.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"input is not valid UTF-8: {exc}") from exc

    records: list[PaperRecord] = []
    rejects: list[Rejection] = []
    seen_ids: set[str] = set()

    def accept(fields: dict[str, object], line_no: int) -> None:
        try:
            rec = _build_record(fields, year_window)
        except ValueError as exc:
            rejects.append(Rejection(line=line_no, reason=str(exc)))
            return
        if rec.id in seen_ids:
            raise DuplicateIdError(f"duplicate record id {rec.id!r} at line {line_no}")
        seen_ids.add(rec.id)
        records.append(rec)

    if fmt is Format.JSONL:
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                rejects.append(Rejection(line=line_no, reason=f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(obj, dict):
                rejects.append(Rejection(line=line_no, reason="row is not a JSON object"))
                continue
            missing = [c for c in SCHEMA_COLUMNS if c not in obj]
            extra = [k for k in obj if k not in SCHEMA_COLUMNS]
            if missing or extra:
                rejects.append(
                    Rejection(line=line_no, reason=f"keys mismatch: missing={missing} extra={extra}")
                )
                continue
            accept(obj, line_no)
    else:
        delim = "," if fmt is Format.CSV else "\t"
        reader = csv.reader(io.StringIO(text), delimiter=delim)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("input is empty (no header)") from None
        if tuple(h.strip() for h in header) != SCHEMA_COLUMNS:
            raise SchemaError(
                f"header {header!r} does not match required columns {list(SCHEMA_COLUMNS)}"
            )
        for row in reader:
            line_no = reader.line_num  # physical line, robust to quoted newlines
            if not row:
                continue
            if len(row) != len(SCHEMA_COLUMNS):
                rejects.append(
                    Rejection(line=line_no, reason=f"expected {len(SCHEMA_COLUMNS)} fields, got {len(row)}")
                )
                continue
            accept(dict(zip(SCHEMA_COLUMNS, row)), line_no)

    return LoadResult(corpus=Corpus(records), rejects=tuple(rejects))


def export_records(corpus: Corpus, fmt: Format | str = Format.CSV) -> bytes:
    """Serialize a corpus to its canonical byte form.

    Canonicalization: columns in schema order, country tags sorted and
    joined with ';', LF line endings, minimal CSV quoting, UTF-8.  Loading
    the output and exporting again reproduces identical bytes.
    """
    fmt = Format(fmt) if not isinstance(fmt, Format) else fmt
    out = io.StringIO()
    if fmt is Format.JSONL:
        for r in corpus.records:
            out.write(
                json.dumps(
                    {
                        "id": r.id,
                        "year": r.year,
                        "citations": r.citations,
                        "country_tags": sorted(r.country_tags),
                        "field_tag": r.field_tag,
                        "funding_text": r.funding_text,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
            )
            out.write("\n")
    else:
        delim = "," if fmt is Format.CSV else "\t"
        writer = csv.writer(out, delimiter=delim, lineterminator="\n")
        writer.writerow(SCHEMA_COLUMNS)
        for r in corpus.records:
            writer.writerow(
                (r.id, r.year, r.citations, ";".join(sorted(r.country_tags)), r.field_tag, r.funding_text)
            )
    return out.getvalue().encode("utf-8")
