"""Synthetic generators: determinism, inverse-CDF law, round trips, feasibility."""

import math

import numpy as np
import pytest

from epgauge import rng
from epgauge.corpus import CohortSelector, export_records, select_cohort
from epgauge.epfit import fit_ep
from epgauge.errors import InfeasibleSpecError, InputError
from epgauge.lognormal import fit_mle
from epgauge.percentile import GRID_EXT, build_baseline, share_table
from epgauge.synth import (
    COHORT_TAG,
    SynthSpec,
    gen_global,
    gen_local_with_ep,
    merge_cohort,
    percentile_positions,
    sample_ranks,
)


def spec_for(**overrides) -> SynthSpec:
    base = dict(
        n_global=50_000,
        mu_g=3.0,
        sigma_g=1.2,
        n_local=5_000,
        target_ep=0.15,
        seed=101,
        year=2014,
        field_tag="TECH",
    )
    base.update(overrides)
    return SynthSpec(**base)


class TestGenGlobal:
    def test_deterministic(self):
        spec = spec_for(n_global=2_000, n_local=200)
        a = gen_global(spec)
        b = gen_global(spec)
        assert a.records == b.records
        assert export_records(a) == export_records(b)

    def test_single_record(self):
        corpus = gen_global(spec_for(n_global=1, n_local=1, target_ep=0.1))
        assert len(corpus) == 1

    def test_mle_round_trip(self):
        corpus = gen_global(spec_for(n_global=200_000))
        fit = fit_mle(corpus.citations())
        assert fit.mu == pytest.approx(3.0, abs=0.01)
        assert fit.sigma == pytest.approx(1.2, abs=0.01)

    def test_zeros_are_kept(self):
        corpus = gen_global(spec_for(n_global=100_000, mu_g=0.5, sigma_g=1.0))
        assert (corpus.citations() == 0).sum() > 0

    def test_stratum_is_uniform(self):
        spec = spec_for(n_global=500, n_local=50)
        corpus = gen_global(spec)
        assert set(corpus.strata()) == {(spec.year, spec.field_tag)}


class TestPercentilePositions:
    def test_boundary_u_equals_one(self):
        assert percentile_positions(np.array([1.0]), 0.2)[0] == pytest.approx(100.0, rel=1e-12)

    def test_world_average_is_identity_times_100(self):
        u = np.linspace(0.01, 1.0, 100)
        x = percentile_positions(u, 0.1)
        assert np.allclose(x, 100.0 * u, rtol=1e-12)

    def test_dkw_bands(self):
        n = 20_000
        for target in (0.06, 0.15, 0.2):
            u = rng.uniforms(55, 0, n)
            x = percentile_positions(u, target)
            eps = math.sqrt(math.log(2 / 0.01) / (2 * n))
            for level in (1, 3, 7, 10, 20, 35):
                empirical = float((x <= level).mean())
                model = target ** (2 - math.log10(level))
                assert abs(empirical - model) <= eps, (target, level)

    def test_rejects_degenerate_ep(self):
        with pytest.raises(InfeasibleSpecError):
            percentile_positions(np.array([0.5]), 1.0)


class TestSampleRanks:
    def test_without_replacement_unique(self):
        spec = spec_for()
        ranks = sample_ranks(spec, spec.n_global)
        assert len(np.unique(ranks)) == spec.n_local
        assert ranks.min() >= 1
        assert ranks.max() <= spec.n_global

    def test_repair_changes_few_ranks(self):
        # 2% cohort density, as in the large round-trip runs
        spec = spec_for(n_global=50_000, n_local=1_000)
        raw = sample_ranks(spec, spec.n_global, repair=False)
        fixed = sample_ranks(spec, spec.n_global, repair=True)
        assert (raw != fixed).mean() < 0.03

    def test_infeasible_spec_rejected(self):
        with pytest.raises(InfeasibleSpecError):
            sample_ranks(spec_for(n_global=1_000, n_local=800, target_ep=0.3), 1_000)

    def test_ep_one_rejected(self):
        with pytest.raises(InfeasibleSpecError):
            sample_ranks(spec_for(target_ep=1.0), 50_000)


class TestGenLocalWithEp:
    def test_world_average_cohort_is_uniform(self):
        spec = spec_for(target_ep=0.1, n_global=100_000, n_local=10_000, seed=7)
        corpus = gen_global(spec)
        cohort = gen_local_with_ep(spec, corpus)
        baseline = build_baseline(corpus, (spec.year, spec.field_tag))
        table = share_table(cohort, baseline, GRID_EXT)
        for level, share in table.rows:
            p = float(level.x) / 100
            sigma = math.sqrt(p * (1 - p) / spec.n_local)
            assert abs(share - p) < 3 * sigma, str(level)

    def test_round_trip_recovers_target(self):
        spec = spec_for(n_global=200_000, n_local=10_000, target_ep=0.2, seed=13)
        corpus = gen_global(spec)
        cohort = gen_local_with_ep(spec, corpus)
        baseline = build_baseline(corpus, (spec.year, spec.field_tag))
        report = fit_ep(share_table(cohort, baseline, GRID_EXT))
        assert report.chosen.value == pytest.approx(0.2, abs=0.015)

    def test_expected_breakthrough_frequency_within_poisson_band(self):
        # the realized fractional mass in the top 0.01% should sit inside a
        # 3-sigma Poisson band around n_local * ep**4
        from epgauge.epfit import expected_frequency
        from epgauge.percentile import top_weight

        spec = spec_for(n_global=200_000, n_local=10_000, target_ep=0.2, seed=13)
        corpus = gen_global(spec)
        cohort = gen_local_with_ep(spec, corpus)
        baseline = build_baseline(corpus, (spec.year, spec.field_tag))
        realized = sum(top_weight(baseline, r.citations, "0.01") for r in cohort)
        expected = expected_frequency(spec.target_ep, "0.01", spec.n_local)
        assert abs(realized - expected) <= 3 * math.sqrt(expected)

    def test_collision_repair_barely_moves_the_fit(self):
        spec = spec_for(n_global=200_000, n_local=10_000, target_ep=0.2, seed=13)
        corpus = gen_global(spec)
        baseline = build_baseline(corpus, (spec.year, spec.field_tag))
        order = np.argsort(-corpus.citations(), kind="stable")

        def fit_for(repair):
            ranks = sample_ranks(spec, spec.n_global, repair=repair)
            from epgauge.corpus import Corpus

            records = tuple(corpus.records[i] for i in order[ranks - 1])
            # raw ranks may collide; route around the id-uniqueness check
            local = Corpus._trusted(records)
            return fit_ep(share_table(local, baseline, GRID_EXT)).chosen.value

        assert abs(fit_for(True) - fit_for(False)) < 0.005

    def test_cohort_is_tagged_and_recoverable(self):
        spec = spec_for(n_global=5_000, n_local=400)
        corpus = gen_global(spec)
        cohort = gen_local_with_ep(spec, corpus)
        assert all(COHORT_TAG in r.country_tags for r in cohort)
        merged = merge_cohort(corpus, cohort)
        assert len(merged) == len(corpus)
        again = select_cohort(merged, CohortSelector(countries=frozenset({COHORT_TAG})))
        assert {r.id for r in again} == {r.id for r in cohort}
        # citation values are untouched by tagging
        assert sorted(r.citations for r in merged) == sorted(r.citations for r in corpus)

    def test_spec_corpus_size_mismatch(self):
        spec = spec_for(n_global=5_000, n_local=400)
        corpus = gen_global(spec_for(n_global=4_000, n_local=400))
        with pytest.raises(InputError):
            gen_local_with_ep(spec, corpus)

    def test_deterministic(self):
        spec = spec_for(n_global=5_000, n_local=400)
        corpus = gen_global(spec)
        a = gen_local_with_ep(spec, corpus)
        b = gen_local_with_ep(spec, corpus)
        assert a.records == b.records


class TestSynthSpec:
    def test_json_round_trip(self):
        spec = spec_for()
        assert SynthSpec.from_json(spec.to_json()) == spec

    def test_unknown_keys_rejected(self):
        with pytest.raises(InputError):
            SynthSpec.from_json(b'{"n_global": 10, "bogus": 1}')

    def test_missing_keys_rejected(self):
        with pytest.raises(InputError):
            SynthSpec.from_json(b'{"n_global": 10}')

    def test_validation(self):
        with pytest.raises(ValueError):
            spec_for(n_local=0)
        with pytest.raises(ValueError):
            spec_for(n_local=100_000)  # exceeds n_global
        with pytest.raises(ValueError):
            spec_for(target_ep=0.0)
        with pytest.raises(ValueError):
            spec_for(sigma_g=-1.0)
