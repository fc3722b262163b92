from fractions import Fraction as F

import pytest

from helpers import brute_matching_only_value, brute_public_value, example1
from stable_persuasion.errors import CapacityError
from stable_persuasion.generators import random_instance
from stable_persuasion.model import (
    in_cell,
    is_bayes_plausible,
    is_indicative,
    is_stable_policy,
    policy_utility,
    posterior_of_metasignal,
)
from stable_persuasion.oracle import (
    nonempty_profiles,
    solve_oracle_public,
    solve_oracle_restricted,
    strict_orders,
    weak_orders,
)


@pytest.mark.parametrize("n,count", [(0, 1), (1, 1), (2, 3), (3, 13), (4, 75)])
def test_weak_order_counts(n, count):
    orders = list(weak_orders(range(n)))
    assert len(orders) == count == len(set(orders))


def test_strict_orders():
    assert len(list(strict_orders("abc"))) == 6


def test_example1_values_match_brute_force():
    inst = example1()
    pol = solve_oracle_public(inst)
    assert policy_utility(inst, pol) == 1 == brute_public_value(inst)
    value, rpol = solve_oracle_restricted(inst)
    assert value == F(1, 2) == brute_matching_only_value(inst)
    assert policy_utility(inst, rpol) == value


def test_example1_cells_contain_posteriors():
    inst = example1()
    pol = solve_oracle_public(inst)
    assert is_stable_policy(inst, pol) and is_indicative(inst, pol) and is_bayes_plausible(inst, pol)
    for s, sig in enumerate(pol.signals):
        assert in_cell(inst, sig.profile, posterior_of_metasignal(inst, pol, s))


def test_profiles_are_distinct_and_nonempty():
    inst = example1()
    profs = nonempty_profiles(inst)
    assert len(set(profs)) == len(profs)
    strict = nonempty_profiles(inst, strict_only=True)
    assert set(strict) <= set(profs)
    # three open intervals between the two crossings, each with a strict profile
    assert len(strict) == 3


def test_random_instances_against_grid():
    for seed in range(12):
        inst = random_instance(2, 2, seed)
        den = 12 * inst.prior[1].denominator  # grid through the prior
        pol = solve_oracle_public(inst)
        assert is_stable_policy(inst, pol) and is_indicative(inst, pol)
        # the grid is a lower bound for the exact optimum
        assert policy_utility(inst, pol) >= brute_public_value(inst, den)
        r, _ = solve_oracle_restricted(inst)
        assert brute_matching_only_value(inst, den) <= r <= policy_utility(inst, pol)


def test_caps():
    with pytest.raises(CapacityError):
        solve_oracle_public(random_instance(4, 2, 0))
    with pytest.raises(CapacityError):
        solve_oracle_restricted(random_instance(3, 2, 0))
