import json
import math

import numpy as np
import pytest

from cmjvax.errors import (EmptyInputError, ExplosionRateError,
                           MultipleInitialsError, OutOfDomainError)
from cmjvax.estimate import (CoupledBatch, EmpiricalDistribution, alpha_ids,
                             continuity_modulus, run_coupled, write_cdf_csv,
                             write_estimates_csv, write_meta_json)
from cmjvax.functionals import parse_functional
from cmjvax.reproduction import ReproductionLaw, bhbp
from cmjvax.tree import SimCaps
from cmjvax.vaccination import StepCoverage, precedes

MUMPS = bhbp(0.3163, 17.0, 50.0)
CAPS = SimCaps(700.0, 100_000)


def dist_of(values, **meta):
    return EmpiricalDistribution(samples=np.sort(np.asarray(values, float)),
                                 meta=meta)


class TestAccessors:
    def test_cdf_counting(self):
        d = dist_of([0.0, 0.0, 3.0])
        assert d.cdf(-1.0) == 0.0
        assert d.cdf(0.0) == pytest.approx(2 / 3)
        assert d.cdf(2.9) == pytest.approx(2 / 3)
        assert d.cdf(3.0) == 1.0
        assert d.cdf(math.inf) == 1.0

    def test_quantile_inf_definition(self):
        d = dist_of([1.0, 2.0, 3.0, 4.0])
        assert d.quantile(0.5) == 2.0
        assert d.quantile(0.25) == 1.0
        assert d.quantile(0.250001) == 2.0
        assert d.quantile(1e-9) == 1.0  # p <= 1/n gives the minimum
        assert d.quantile(0.999) == 4.0
        with pytest.raises(OutOfDomainError):
            d.quantile(0.0)
        with pytest.raises(OutOfDomainError):
            d.quantile(1.0)

    def test_mean_and_se(self):
        d = dist_of([3.0, 3.0, 3.0])
        assert d.mean() == 3.0
        assert d.se_mean() == 0.0
        assert dist_of([0.0, 2.0]).mean() == 1.0

    def test_dkw_band(self):
        d = dist_of(np.zeros(1000))
        assert d.dkw_band(0.05) == pytest.approx(
            math.sqrt(math.log(2 / 0.05) / 2000.0))

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            dist_of([])


class TestRunCoupled:
    def test_full_coverage_is_point_mass_at_initial_lifetime(self):
        law = ReproductionLaw(("fixed", 3.0), ("poisson", 0.5))
        dists = run_coupled(law, 1, SimCaps(600.0, 10_000), "T",
                            [StepCoverage(0.0), StepCoverage(1.0)], 64, 5)
        full = dists[1]
        assert np.all(full.samples == 3.0)

    def test_coupled_samples_ordered_pointwise(self):
        alphas = [StepCoverage(c) for c in (0.0, 0.3, 0.8)]
        coupled = CoupledBatch(MUMPS, 1, CAPS, 3000, 99)
        prev = None
        for alpha in alphas:
            values = coupled.evaluate(alpha, parse_functional("Ttilde"))
            if prev is not None:
                assert np.all(values <= prev + 1e-12)
            prev = values

    def test_cdf_dominance_and_quantile_reversal_exact(self):
        low, high = StepCoverage(0.2), StepCoverage(0.6)
        assert precedes(low, high)
        d_low, d_high = run_coupled(MUMPS, 1, CAPS, "Ninf",
                                    [low, high], 4000, 123)
        xs = np.unique(np.concatenate([d_low.samples, d_high.samples]))
        for x in xs:
            assert d_low.cdf(float(x)) <= d_high.cdf(float(x)) + 1e-15
        for p in np.arange(0.05, 0.96, 0.05):
            assert d_high.quantile(float(p)) <= d_low.quantile(float(p))

    def test_zero_duration_fraction_mumps(self):
        (d,) = run_coupled(MUMPS, 1, CAPS, "Ttilde", [StepCoverage(0.0)],
                           20_000, 2718)
        frac = float(np.mean(d.samples == 0.0))
        assert frac == pytest.approx(math.exp(-0.3163), abs=0.012)

    def test_mumps_mean_total_size(self):
        (d,) = run_coupled(MUMPS, 1, CAPS, "Ninf", [StepCoverage(0.0)],
                           20_000, 1234)
        assert d.mean() == pytest.approx(0.463, abs=0.02)

    def test_means_nonincreasing_across_ordered_alphas(self):
        dists = run_coupled(MUMPS, 1, CAPS, "Ninf",
                            [StepCoverage(c) for c in (0.0, 0.25, 0.5, 0.75)],
                            3000, 5)
        means = [d.mean() for d in dists]
        assert all(a >= b for a, b in zip(means, means[1:]))

    def test_determinism_across_threads(self):
        kw = dict(law=MUMPS, a=1, caps=CAPS, functional="Ttilde",
                  alphas=[StepCoverage(0.4)], n=2000, master_seed=7)
        d1 = run_coupled(**kw, threads=1)[0]
        d4 = run_coupled(**kw, threads=4)[0]
        assert np.array_equal(d1.samples, d4.samples)

    def test_cache_and_regenerate_identical(self):
        cold = CoupledBatch(MUMPS, 1, CAPS, 500, 11, cache=False)
        warm = CoupledBatch(MUMPS, 1, CAPS, 500, 11, cache=True)
        f = parse_functional("Ninf")
        a = StepCoverage(0.25)
        v1 = cold.evaluate(a, f)
        v2 = cold.evaluate(a, f)  # regenerated trees
        v3 = warm.evaluate(a, f)
        warm.evaluate(StepCoverage(0.5), f)
        v4 = warm.evaluate(a, f)  # cached trees
        for other in (v2, v3, v4):
            assert np.array_equal(v1, other)

    def test_explosion_rate_abort(self):
        hot = ReproductionLaw(("fixed", 1.0), ("fixed", 2))
        with pytest.raises(ExplosionRateError):
            run_coupled(hot, 1, SimCaps(1000.0, 20), "Ninf",
                        [StepCoverage(0.0)], 100, 3)

    def test_capped_trees_fine_for_births_by_time(self):
        # doubling tree capped at 20 births: 2 at t=1, 4 at t=2, 8 at t=3,
        # then the cap admits 6 of the 16 births at t=4
        hot = ReproductionLaw(("fixed", 1.0), ("fixed", 2))
        dists = run_coupled(hot, 1, SimCaps(1000.0, 20), "Nt:4",
                            [StepCoverage(0.0)], 50, 3)
        assert np.all(dists[0].samples == 20.0)

    def test_duration_requires_single_initial(self):
        with pytest.raises(MultipleInitialsError):
            run_coupled(MUMPS, 2, CAPS, "Ttilde", [StepCoverage(0.0)], 10, 1)

    def test_subcritical_plateau_warning(self):
        hot = ReproductionLaw(("fixed", 1.0), ("poisson", 2.0))
        with pytest.warns(UserWarning, match="horizon"):
            run_coupled(hot, 1, SimCaps(8.0, 20_000), "Ninf",
                        [StepCoverage(0.2)], 100, 8)


class TestContinuityModulus:
    def test_degenerate_all_zero_counts(self):
        d = dist_of(np.zeros(100))
        assert continuity_modulus(d, 0.1) == 1.0

    def test_all_ones_gives_eps(self):
        d = dist_of(np.ones(100))
        assert continuity_modulus(d, 0.37) == pytest.approx(0.37, abs=1e-9)

    def test_bernoulli_two_closed_form(self):
        # counts 0 and 2 equally likely: (1 + (1-d)^2)/2 = 0.9
        d = dist_of([0.0, 2.0] * 50)
        expect = 1.0 - math.sqrt(0.8)
        assert continuity_modulus(d, 0.1) == pytest.approx(expect, abs=1e-9)

    def test_rejects_non_integer_samples(self):
        with pytest.raises(OutOfDomainError):
            continuity_modulus(dist_of([0.5, 1.0]), 0.1)
        with pytest.raises(OutOfDomainError):
            continuity_modulus(dist_of([0.0, 1.0]), 1.5)


class TestWriters:
    def test_csv_and_meta_shapes(self, tmp_path):
        dists = run_coupled(MUMPS, 1, CAPS, "Ninf",
                            [StepCoverage(0.0), StepCoverage(0.5)], 500, 77)
        est = tmp_path / "estimates.csv"
        cdf = tmp_path / "cdf.csv"
        meta = tmp_path / "meta.json"
        write_estimates_csv(est, dists, [0.5, 0.9])
        write_cdf_csv(cdf, dists)
        write_meta_json(meta, dists, extra={"seed": 77})
        lines = est.read_text().strip().splitlines()
        assert lines[0] == "alpha_id,n,mean,se_mean,p,quantile_p"
        assert len(lines) == 1 + 2 * 2
        header = cdf.read_text().splitlines()[0]
        assert header == "alpha_id,x,cdf,band"
        payload = json.loads(meta.read_text())
        assert payload["seed"] == 77
        assert set(payload["alphas"]) == set(alpha_ids(2))

    def test_write_is_deterministic(self, tmp_path):
        dists = run_coupled(MUMPS, 1, CAPS, "Ttilde", [StepCoverage(0.1)],
                            400, 13)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_estimates_csv(p1, dists, [0.5])
        write_estimates_csv(p2, dists, [0.5])
        assert p1.read_bytes() == p2.read_bytes()
