import numpy as np
import pytest

from cmjvax.errors import InvalidLawError
from cmjvax.reproduction import (LifeHistory, ReproductionLaw, bhbp,
                                 critical_coverage, law_from_spec, law_spec,
                                 offspring_mean, sample_life_history)
from cmjvax.rng import RandomStream

MUMPS = bhbp(0.3163, 17.0, 50.0)


def sample_many(law, count, seed=0):
    rng = RandomStream(seed)
    return [sample_life_history(law, rng) for _ in range(count)]


class TestValidation:
    def test_rejects_bad_gamma(self):
        with pytest.raises(InvalidLawError):
            ReproductionLaw(("gamma", 0.0, 17.0), ("poisson", 1.0))
        with pytest.raises(InvalidLawError):
            ReproductionLaw(("gamma", 50.0, -1.0), ("poisson", 1.0))

    def test_rejects_negative_poisson_mean(self):
        with pytest.raises(InvalidLawError):
            ReproductionLaw(("fixed", 1.0), ("poisson", -0.5))

    def test_rate_placement_excludes_offspring_law(self):
        with pytest.raises(InvalidLawError):
            ReproductionLaw(("fixed", 2.0), ("poisson", 1.0),
                            ("poisson_process_rate", 0.5))
        law = ReproductionLaw(("fixed", 2.0), None, ("poisson_process_rate", 0.5))
        assert offspring_mean(law) == pytest.approx(1.0)

    def test_rejects_fractional_fixed_count(self):
        with pytest.raises(InvalidLawError):
            ReproductionLaw(("fixed", 1.0), ("fixed", 1.5))

    def test_life_history_invariants(self):
        with pytest.raises(InvalidLawError):
            LifeHistory(lifetime=2.0, contact_ages=(1.0, 0.5))
        with pytest.raises(InvalidLawError):
            LifeHistory(lifetime=2.0, contact_ages=(2.5,))


class TestSampling:
    def test_zero_offspring_fixed_law(self):
        law = ReproductionLaw(("fixed", 3.0), ("fixed", 0))
        h = sample_life_history(law, RandomStream(1))
        assert h.lifetime == 3.0
        assert h.contact_ages == ()

    def test_deterministic_two_children_at_death(self):
        law = ReproductionLaw(("fixed", 2.0), ("fixed", 2))
        h = sample_life_history(law, RandomStream(1))
        assert h.lifetime == 2.0
        assert h.contact_ages == (2.0, 2.0)

    def test_contact_ages_sorted_within_lifetime(self):
        law = ReproductionLaw(("exponential", 5.0), ("poisson", 3.0),
                              ("uniform_over_lifetime",))
        for h in sample_many(law, 500, seed=3):
            assert all(0.0 <= a <= h.lifetime for a in h.contact_ages)
            assert list(h.contact_ages) == sorted(h.contact_ages)

    def test_mumps_incubation_moments(self):
        histories = sample_many(MUMPS, 100_000, seed=11)
        lifetimes = np.array([h.lifetime for h in histories])
        assert lifetimes.mean() == pytest.approx(17.0, abs=0.1)
        in_range = np.mean((lifetimes >= 12.0) & (lifetimes <= 25.0))
        assert in_range == pytest.approx(0.987, abs=0.003)
        # moment check for the gamma sampler
        assert lifetimes.var(ddof=1) == pytest.approx(17.0 ** 2 / 50.0, rel=0.05)

    def test_poisson_count_mean_within_three_se(self):
        histories = sample_many(MUMPS, 10_000, seed=5)
        counts = np.array([len(h.contact_ages) for h in histories])
        se = np.sqrt(0.3163 / len(counts))
        assert abs(counts.mean() - 0.3163) < 3 * se

    def test_rate_placement_count_mean(self):
        # contact rate 0.5 on a fixed lifetime 2 -> mean 1.0 contact
        law = ReproductionLaw(("fixed", 2.0), None, ("poisson_process_rate", 0.5))
        counts = np.array([len(h.contact_ages)
                           for h in sample_many(law, 100_000, seed=9)])
        se = np.sqrt(1.0 / len(counts))
        assert abs(counts.mean() - 1.0) < 3 * se


class TestMoments:
    def test_offspring_mean_values(self):
        assert offspring_mean(MUMPS) == 0.3163
        assert offspring_mean(ReproductionLaw(("fixed", 1.0), ("fixed", 0))) == 0.0
        assert offspring_mean(
            ReproductionLaw(("fixed", 1.0), ("bernoulli", 0.25))) == 0.25

    def test_critical_coverage(self):
        assert critical_coverage(
            ReproductionLaw(("fixed", 1.0), ("poisson", 2.0))) == 0.5
        assert critical_coverage(MUMPS) == 0.0
        assert critical_coverage(
            ReproductionLaw(("fixed", 1.0), ("poisson", 1.0))) == 0.0
        assert critical_coverage(
            ReproductionLaw(("fixed", 1.0), ("fixed", 0))) == 0.0


class TestSpecRoundTrip:
    def test_law_spec_round_trip(self):
        laws = [
            MUMPS,
            ReproductionLaw(("exponential", 3.0), ("bernoulli", 0.5),
                            ("uniform_over_lifetime",)),
            ReproductionLaw(("fixed", 2.0), None, ("poisson_process_rate", 0.7)),
        ]
        for law in laws:
            assert law_from_spec(law_spec(law)) == law

    def test_unknown_keys_rejected(self):
        spec = law_spec(MUMPS)
        spec["lifetime"]["typo"] = 1
        with pytest.raises(InvalidLawError):
            law_from_spec(spec)
