import math

import numpy as np
import pytest

from cmjvax.errors import (CensoredTreeError, MultipleInitialsError,
                           OutOfDomainError)
from cmjvax.functionals import (Functional, births_by, duration_excl_incubation,
                                evaluate_batch, extinction_time, max_of_z,
                                max_population, parse_functional, to_weeks,
                                total_births)
from cmjvax.reproduction import ReproductionLaw, bhbp
from cmjvax.rng import RandomStream
from cmjvax.tree import BranchingTree, Individual, SimCaps, simulate_batch
from cmjvax.vaccination import (PruneMask, RampCoverage, StepCoverage, precedes,
                                prune, prune_batch)

MUMPS = bhbp(0.3163, 17.0, 50.0)
EMPTY = PruneMask(deleted=frozenset(), surviving_count=0)


def chain_tree():
    individuals = [Individual(0, None, 0.0, 2.0, None)]
    for i, u in enumerate((0.5, 0.9, 0.2)):
        t = 2.0 * (i + 1)
        individuals.append(Individual(i + 1, i, t, t + 2.0, u))
    return BranchingTree(initials=1, individuals=individuals, censored=False,
                         caps=SimCaps(100.0, 100))


def mask_of(tree, deleted):
    return PruneMask(deleted=frozenset(deleted),
                     surviving_count=len(tree.individuals) - len(deleted))


class TestChainExamples:
    def test_extinction_time(self):
        tree = chain_tree()
        assert extinction_time(tree, mask_of(tree, ())) == 8.0
        # deleting birth 1 removes the whole chain below it
        assert extinction_time(tree, mask_of(tree, (1, 2, 3))) == 2.0

    def test_single_individual(self):
        single = BranchingTree(1, [Individual(0, None, 0.0, 3.0, None)],
                               False, SimCaps(10.0, 5))
        assert extinction_time(single, mask_of(single, ())) == 3.0
        assert duration_excl_incubation(single, mask_of(single, ())) == 0.0
        assert max_population(single, mask_of(single, ())) == 1

    def test_duration_excl_incubation(self):
        tree = chain_tree()
        assert duration_excl_incubation(tree, mask_of(tree, ())) == 6.0

    def test_max_population_chain_is_one(self):
        # at-death births with [birth, death) lifetimes never overlap
        tree = chain_tree()
        assert max_population(tree, mask_of(tree, ())) == 1

    def test_max_population_two_initials(self):
        two = BranchingTree(2, [Individual(0, None, 0.0, 1.0, None),
                                Individual(1, None, 0.0, 2.0, None)],
                            False, SimCaps(10.0, 5))
        assert max_population(two, mask_of(two, ())) == 2

    def test_births_by_and_total(self):
        tree = chain_tree()
        empty = mask_of(tree, ())
        assert births_by(tree, empty, 5.0) == 2
        assert births_by(tree, mask_of(tree, (1, 2, 3)), 5.0) == 0
        assert total_births(tree, empty) == 3
        for t in (0.0, 1.0, 4.0, 7.0, 100.0):
            assert total_births(tree, empty) >= births_by(tree, empty, t)


class TestGuards:
    def test_censored_tree_rejected_for_all_time(self):
        tree = chain_tree()
        tree.censored = True
        with pytest.raises(CensoredTreeError):
            extinction_time(tree, mask_of(tree, ()))
        with pytest.raises(CensoredTreeError):
            total_births(tree, mask_of(tree, ()))
        # births-by within the horizon stays valid on a capped tree
        assert births_by(tree, mask_of(tree, ()), 5.0) == 2
        with pytest.raises(CensoredTreeError):
            births_by(tree, mask_of(tree, ()), 1000.0)

    def test_duration_needs_single_initial(self):
        two = BranchingTree(2, [Individual(0, None, 0.0, 1.0, None),
                                Individual(1, None, 0.0, 2.0, None)],
                            False, SimCaps(10.0, 5))
        with pytest.raises(MultipleInitialsError):
            duration_excl_incubation(two, mask_of(two, ()))


class TestWeeks:
    def test_to_weeks(self):
        assert to_weeks(0.0) == 0
        assert to_weeks(17.2) == 3
        assert to_weeks(48.8) == 7
        assert to_weeks(7.0) == 1
        with pytest.raises(OutOfDomainError):
            to_weeks(-1.0)


class TestMaxOfZ:
    def test_z_one_is_a_resample(self):
        samples = [1.0, 2.0, 5.0]
        value = max_of_z(samples, 1, RandomStream(0))
        assert value in samples

    def test_constant_samples(self):
        assert max_of_z([4.0] * 10, 5, RandomStream(1)) == 4.0

    def test_cdf_composes_as_power(self):
        # bootstrap max of z has CDF F^z exactly in expectation
        rng = RandomStream(12)
        base = np.sort(np.array([rng.uniform() for _ in range(500)]))
        z, n_boot = 3, 40_000
        draws = np.array([max_of_z(base, z, rng) for _ in range(n_boot)])
        for q in np.quantile(base, [0.2, 0.5, 0.8]):
            f_base = np.mean(base <= q)
            target = f_base ** z
            got = np.mean(draws <= q)
            se = math.sqrt(target * (1 - target) / n_boot)
            assert abs(got - target) < 4 * se


class TestParse:
    def test_names(self):
        assert parse_functional("T").code == 0
        assert parse_functional("Ttilde").code == 1
        assert parse_functional("M").code == 2
        assert parse_functional("Ninf").code == 4
        nt = parse_functional("Nt:30")
        assert nt.t_param == 30.0
        assert str(nt) == "Nt:30"
        with pytest.raises(OutOfDomainError):
            parse_functional("bogus")
        with pytest.raises(OutOfDomainError):
            Functional(0, t_param=3.0)


class TestBatchKernels:
    @pytest.mark.parametrize("name", ["T", "Ttilde", "M", "Nt:25", "Ninf"])
    def test_kernel_matches_object_level(self, name):
        functional = parse_functional(name)
        batch = simulate_batch(MUMPS, 1, SimCaps(700.0, 1000), 300, 21)
        alpha = StepCoverage(0.3)
        alive = prune_batch(batch, alpha)
        values = evaluate_batch(batch, alive, functional)
        ops = {
            "T": extinction_time,
            "Ttilde": duration_excl_incubation,
            "M": max_population,
            "Ninf": total_births,
        }
        for i in range(batch.n):
            tree = batch.tree(i)
            mask = prune(tree, alpha)
            if name == "Nt:25":
                expect = births_by(tree, mask, 25.0)
            else:
                expect = ops[name](tree, mask)
            assert values[i] == pytest.approx(expect, abs=0.0), (name, i)


class TestPathwiseMonotonicity:
    def test_all_functionals_shrink_under_more_coverage(self):
        law = ReproductionLaw(("exponential", 3.0), ("poisson", 1.3),
                              ("uniform_over_lifetime",))
        batch = simulate_batch(law, 1, SimCaps(60.0, 2000), 400, 17)
        low, high = RampCoverage(0.0, 8.0, 0.05), StepCoverage(0.6)
        assert precedes(low, high)
        a_low = prune_batch(batch, low)
        a_high = prune_batch(batch, high)
        for name in ("T", "Ttilde", "M", "Nt:20", "Ninf"):
            f = parse_functional(name)
            v_low = evaluate_batch(batch, a_low, f)
            v_high = evaluate_batch(batch, a_high, f)
            assert np.all(v_high <= v_low + 1e-12), name

    def test_peak_at_least_initials(self):
        batch = simulate_batch(MUMPS, 3, SimCaps(700.0, 1000), 100, 10)
        alive = prune_batch(batch, StepCoverage(0.0))
        peaks = evaluate_batch(batch, alive, parse_functional("M"))
        assert np.all(peaks >= 3)
