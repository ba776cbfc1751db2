"""Seeded synthetic corpora: lognormal global citations, cohorts with a known e_p.

These generators are the ground-truth oracle for the counting and fitting
code: a cohort is drawn so that its percentile positions follow
P(x) = e_p ** (2 - lg x) exactly, so the full pipeline should recover the
injected index up to sampling noise.

Percentile positions come from inverse-transform sampling: with
U ~ Uniform(0, 1],

    lg x = 2 - ln U / ln e_p

maps U to a position x in (0, 100] whose distribution function is the
power law above (U = 1 gives x = 100).  The position is then converted to
a global rank ceil(x * n_global / 100) and the rank to a record of the
global corpus sorted by descending citations.  Ranks are drawn without
replacement; a collision moves to the nearest free lower rank, then the
nearest free higher one, which perturbs o(n_local) ranks at sane sizes.

All randomness flows through the counter-based generator in rng.py;
substream 0 drives the global corpus, substream 1 the cohort positions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from . import rng
from .corpus import Corpus, PaperRecord
from .errors import InfeasibleSpecError, InputError
from .percentile import GRID_STD

#: country tag attached to generated cohort members so selectors can find them
COHORT_TAG = "SYN"

_GLOBAL_STREAM = 0
_LOCAL_STREAM = 1


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic study."""

    n_global: int
    mu_g: float
    sigma_g: float
    n_local: int
    target_ep: float
    seed: int
    year: int = 2014
    field_tag: str = "TECH"

    def __post_init__(self) -> None:
        if self.n_global <= 0:
            raise ValueError(f"n_global must be positive, got {self.n_global}")
        if self.n_local <= 0:
            raise ValueError(f"n_local must be positive, got {self.n_local}")
        if self.n_local > self.n_global:
            raise ValueError(f"n_local {self.n_local} exceeds n_global {self.n_global}")
        if not (0.0 < self.target_ep <= 1.0):
            raise ValueError(f"target_ep must be in (0, 1], got {self.target_ep}")
        if self.sigma_g <= 0:
            raise ValueError(f"sigma_g must be positive, got {self.sigma_g}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")

    def to_json(self) -> bytes:
        return (json.dumps(asdict(self), sort_keys=True, indent=2) + "\n").encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str) -> "SynthSpec":
        obj = json.loads(data)
        if not isinstance(obj, dict):
            raise InputError("synth spec must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
        unknown = set(obj) - known
        if unknown:
            raise InputError(f"unknown synth spec keys: {sorted(unknown)}")
        missing = {"n_global", "mu_g", "sigma_g", "n_local", "target_ep", "seed"} - set(obj)
        if missing:
            raise InputError(f"synth spec missing keys: {sorted(missing)}")
        try:
            return cls(**obj)
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad synth spec: {exc}") from exc


def gen_global(spec: SynthSpec) -> Corpus:
    """Global reference corpus: integer lognormal citations, one stratum."""
    child = rng.derive_seed(spec.seed, _GLOBAL_STREAM)
    z = rng.normals(child, 0, spec.n_global)
    # round half up to integers; zeros are kept (the MLE zero policy handles them)
    cit = np.floor(np.exp(spec.mu_g + spec.sigma_g * z) + 0.5).astype(np.int64)
    width = max(7, len(str(spec.n_global)))
    year = spec.year
    tag = spec.field_tag
    records = [
        PaperRecord(id=f"syn{i:0{width}d}", year=year, citations=int(c), field_tag=tag)
        for i, c in enumerate(cit)
    ]
    return Corpus(records)


def percentile_positions(u: np.ndarray, target_ep: float) -> np.ndarray:
    """Invert the power law: uniform draws in (0, 1] -> positions x in (0, 100]."""
    if not (0.0 < target_ep < 1.0):
        raise InfeasibleSpecError(
            f"positions are defined for 0 < target_ep < 1, got {target_ep}"
        )
    lg_x = 2.0 - np.log(u) / math.log(target_ep)
    return 10.0**lg_x


def sample_ranks(spec: SynthSpec, n_global: int, *, repair: bool = True) -> np.ndarray:
    """Global ranks (1-based) of the cohort members, in draw order.

    With repair=True ranks are unique (without replacement); repair=False
    returns the raw mapped ranks, which is only useful for measuring how
    much the collision policy perturbs a fit.
    """
    if spec.target_ep >= 1.0:
        raise InfeasibleSpecError("target_ep = 1 concentrates all mass at x -> 0; not realizable")
    _check_feasible(spec, n_global)
    child = rng.derive_seed(spec.seed, _LOCAL_STREAM)
    u = rng.uniforms(child, 0, spec.n_local)
    x = percentile_positions(u, spec.target_ep)
    ranks = np.ceil(x * n_global / 100.0).astype(np.int64)
    np.clip(ranks, 1, n_global, out=ranks)
    if not repair:
        return ranks
    occupied = np.zeros(n_global + 2, dtype=bool)
    out = np.empty(spec.n_local, dtype=np.int64)
    for j, r in enumerate(ranks):
        rr = int(r)
        if occupied[rr]:
            d = rr - 1
            while d >= 1 and occupied[d]:
                d -= 1
            if d >= 1:
                rr = d
            else:
                d = int(r) + 1
                while d <= n_global and occupied[d]:
                    d += 1
                if d > n_global:
                    raise InfeasibleSpecError("all global ranks occupied; n_local too large")
                rr = d
        occupied[rr] = True
        out[j] = rr
    return out


def _check_feasible(spec: SynthSpec, n_global: int) -> None:
    # the expected cohort mass in the top x% may not exceed the slots there
    for x in GRID_STD + (1, 3):
        expected = spec.n_local * spec.target_ep ** (2.0 - math.log10(x))
        slots = n_global * x / 100.0
        if expected > slots:
            raise InfeasibleSpecError(
                f"cannot place {expected:.0f} expected cohort papers into the "
                f"{slots:.0f} global top-{x}% slots; reduce n_local or target_ep"
            )


def gen_local_with_ep(spec: SynthSpec, global_corpus: Corpus, *, tag: str = COHORT_TAG) -> Corpus:
    """Cohort view whose percentile positions follow the target power law.

    Members are copies of the selected global records carrying an extra
    country tag, so `merge_cohort` plus a countries={tag} selector recovers
    the cohort from the merged corpus.
    """
    n_global = len(global_corpus)
    if n_global != spec.n_global:
        raise InputError(
            f"global corpus has {n_global} records but the synth spec asks for {spec.n_global}"
        )
    ranks = sample_ranks(spec, n_global)
    order = np.argsort(-global_corpus.citations(), kind="stable")
    chosen = order[ranks - 1]
    records = tuple(global_corpus.records[i].with_tags((tag,)) for i in chosen)
    return Corpus(records)


def merge_cohort(global_corpus: Corpus, cohort: Corpus) -> Corpus:
    """Global corpus with cohort members' tagged records swapped in by id."""
    by_id = {r.id: r for r in cohort.records}
    merged = tuple(by_id.get(r.id, r) for r in global_corpus.records)
    return Corpus(merged)
