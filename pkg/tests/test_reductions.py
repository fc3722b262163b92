import itertools
import random
from fractions import Fraction as F

import pytest

from stable_persuasion.errors import InputError
from stable_persuasion.generators import random_persuasion, random_smti, random_wsm
from stable_persuasion.matching import WsmProblem, wsm_brute
from stable_persuasion.model import (
    Matching,
    PreferenceProfile,
    all_matchings,
    blocking_pairs,
    is_indicative,
    is_stable_policy,
    policy_utility,
)
from stable_persuasion.reductions import (
    DUMMY_A,
    DUMMY_B,
    PersuasionInstance,
    SmtiInstance,
    build_proof_policy,
    copy_name,
    max_smti_brute,
    persuasion_to_matching,
    smti_restrict,
    smti_to_wsm,
    tie_crossing,
    wsm_to_private_persuasion,
)


def naive_max_smti(m):
    """Largest stable matching by listing every set of mutually acceptable pairs."""
    pairs = [(a, b) for a in m.side_a for b in m.side_b if m.mutual(a, b)]
    best = 0
    for r in range(len(pairs) + 1):
        for chosen in itertools.combinations(pairs, r):
            if len({a for a, _ in chosen}) == r == len({b for _, b in chosen}) and not m.blocking_pairs(dict(chosen)):
                best = r
    return best


def test_branch_and_bound_matches_naive():
    for seed in range(120):
        rng = random.Random(seed)
        m = random_smti(rng.randint(1, 4), rng.randint(1, 4), seed=seed, restricted=bool(seed % 2))
        assert max_smti_brute(m)[0] == naive_max_smti(m)


def test_restrict_without_ties_is_identity():
    m = SmtiInstance.build(["a1", "a2"], ["b1", "b2"],
                           {"a1": ["b1", "b2"], "a2": ["b1"], "b1": ["a2", "a1"], "b2": ["a1"]})
    out, info = smti_restrict(m)
    assert out.side_a == m.side_a and out.side_b == m.side_b and dict(out.prefs) == dict(m.prefs)
    assert not info.a_copies and not info.a_links


def test_restrict_single_tie():
    m = SmtiInstance.build(["a1", "a2"], ["b1", "b2"],
                           {"a1": [], "a2": ["b2"], "b1": ["a1"], "b2": ["a2", "a1"]},
                           {"a1": ["b1", "b2"]})
    out, info = smti_restrict(m)
    assert len(info.a_copies) == 2 and len(info.a_links) == 0
    assert naive_max_smti(out) == naive_max_smti(m) + 2


def test_restrict_size_identity_random():
    rng = random.Random(5)
    for _ in range(40):
        m = random_smti(rng.randint(1, 3), rng.randint(1, 3), seed=rng.randrange(10**9), restricted=False)
        out, info = smti_restrict(m)
        assert max_smti_brute(out)[0] == naive_max_smti(m) + len(info.a_copies) + len(info.a_links)


def test_smti_premise_errors():
    with pytest.raises(InputError, match="b1"):
        SmtiInstance.build(["a1"], ["b1"], {"b1": ["a1"]}, {"b1": ["a1", "a1"]})
    with pytest.raises(InputError, match="a1"):
        SmtiInstance.build(["a1"], ["b1", "b2"], {"a1": ["b1"]}, {"a1": ["b1", "b2"]})


def test_smti_to_wsm_complete_lists():
    m = SmtiInstance.build(["a1", "a2"], ["b1", "b2"],
                           {"a1": ["b2", "b1"], "a2": ["b1", "b2"], "b1": ["a1", "a2"], "b2": ["a2", "a1"]})
    w = smti_to_wsm(m)
    assert set(w.weights.values()) == {1}
    assert wsm_brute(w)[1] == 2


def test_smti_to_wsm_empty_lists():
    m = SmtiInstance.build(["a1", "a2"], ["b1"], {})
    w = smti_to_wsm(m)
    assert w.n == 2 and wsm_brute(w)[1] == 0


def test_smti_to_wsm_value_identity():
    for seed in range(30):
        m = random_smti(3, 3, seed=seed)
        assert wsm_brute(smti_to_wsm(m))[1] == naive_max_smti(m)


def _one_tie_wsm():
    prof = PreferenceProfile({
        "a1": [("b1", "b2")], "a2": [("b1",), ("b2",)],
        "b1": [("a1",), ("a2",)], "b2": [("a1",), ("a2",)],
    })
    return WsmProblem.build(["a1", "a2"], ["b1", "b2"], prof,
                            {("a1", "b1"): 1, ("a2", "b2"): 1, ("a1", "b2"): F(1, 4), ("a2", "b1"): 0})


def _value(inst, x, y, t):
    v = inst.values[x][y]
    return (1 - t) * v[0] + t * v[1]


def test_gadget_constants():
    red = wsm_to_private_persuasion(_one_tie_wsm())
    assert red.prior == (F(4, 5), F(1, 5))
    for b in ("b1", "b2"):
        assert _value(red, DUMMY_A, b, F(1, 2)) == _value(red, DUMMY_A, DUMMY_B, F(1, 2))
        assert _value(red, DUMMY_A, b, F(1, 3)) < _value(red, DUMMY_A, DUMMY_B, F(1, 3))
    # a1's tie members swap below the prior
    t = F(1, 10)
    assert _value(red, "a1", "b1", t) == _value(red, "a1", "b2", t)
    assert t < red.prior[1]
    assert _value(red, "a1", "b1", 0) > _value(red, "a1", "b2", 0)
    assert _value(red, "a1", "b1", red.prior[1]) < _value(red, "a1", "b2", red.prior[1])
    q = tie_crossing(red, "b1")
    assert q is not None and 0 < q < 1


def test_gadget_rejects_bad_weights():
    w = _one_tie_wsm()
    w.weights[("a1", "b1")] = F(3, 2)
    with pytest.raises(InputError, match="outside"):
        wsm_to_private_persuasion(w)


def test_proof_policy_tie_free_reveals_nothing():
    w = random_wsm(3, seed=4, tie_rate=0)
    red = wsm_to_private_persuasion(w)
    m, u = wsm_brute(w)
    strict = PreferenceProfile({x: [t for t in tiers] for x, tiers in w.profile.tiers.items()})
    pol = build_proof_policy(red, m, strict)
    assert pol.notes == ("revealed: []",)
    assert all(row == (1, 0) or row == (0, 1) for row in [tuple(r) for r in pol.kernel])
    assert is_stable_policy(red, pol) and is_indicative(red, pol)
    assert policy_utility(red, pol) == u


def test_proof_policy_with_tie_partner():
    w = _one_tie_wsm()
    red = wsm_to_private_persuasion(w)
    m, u = wsm_brute(w)
    assert m.partner("a1") in ("b1", "b2")
    orders = {x: [y for tier in tiers for y in (tier if m.partner(x) != tier[-1] else tier[::-1])]
              for x, tiers in w.profile.tiers.items()}
    pol = build_proof_policy(red, m, PreferenceProfile.strict(orders))
    assert is_stable_policy(red, pol) and is_indicative(red, pol)
    assert policy_utility(red, pol) == u == 2


def test_proof_policy_rejects_unstable_matching():
    w = _one_tie_wsm()
    red = wsm_to_private_persuasion(w)
    # a1 resolves its tie towards b2, which then blocks with it
    orders = {x: [y for tier in tiers for y in tier] for x, tiers in w.profile.tiers.items()}
    orders["a1"] = ["b2", "b1"]
    bad = Matching({"a1": "b1", "a2": "b2"})
    with pytest.raises(InputError, match="blocking"):
        build_proof_policy(red, bad, PreferenceProfile.strict(orders))


def _stable_at(inst, p):
    return [m for m in all_matchings(inst) if not blocking_pairs(inst, m, p)]


def test_persuasion_single_dominant_action():
    pp = PersuasionInstance.build(["w1", "w2"], [F(1, 2), F(1, 2)], ["r"], ["x", "y"],
                                  {"r": {"x": [3, 2], "y": [0, 1]}}, {"x": [1, 1], "y": [0, 0]})
    inst = persuasion_to_matching(pp)
    for p in ((1, 0), (F(1, 2), F(1, 2)), (0, 1)):
        stable = _stable_at(inst, p)
        assert stable and all(m.partner("r") == copy_name("x", "r") for m in stable)


def test_persuasion_correspondence_random():
    for seed in range(15):
        pp = random_persuasion(2, 2, seed)
        for noise in (0, F(1, 10)):
            inst = persuasion_to_matching(pp, noise, seed)
            for t in (0, F(1, 4), F(1, 3), F(1, 2), F(3, 4), 1):
                p = (1 - t, t)
                stable = _stable_at(inst, p)
                assert stable
                for m in stable:
                    for i in pp.receivers:
                        got = m.partner(i)
                        vals = {copy_name(j, i): sum(q * v for q, v in zip(p, pp.values[i][j])) for j in pp.actions}
                        assert got in vals and vals[got] == max(vals.values())


def test_persuasion_needs_two_actions():
    with pytest.raises(InputError):
        PersuasionInstance.build(["w"], [1], ["r"], ["x"], {"r": {"x": [0]}}, {"x": [0]})
