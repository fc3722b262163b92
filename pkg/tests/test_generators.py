from stable_persuasion import io
from stable_persuasion.generators import random_instance, random_persuasion, random_smti, random_typed, random_wsm


def test_deterministic():
    for make in (lambda s: random_instance(3, 2, s), lambda s: random_typed(2, 3, 2, s),
                 lambda s: random_smti(3, 3, s), lambda s: random_wsm(3, s, 0.5), lambda s: random_persuasion(2, 3, s)):
        assert io.dumps(io.to_json(make(7))) == io.dumps(io.to_json(make(7)))
        assert io.dumps(io.to_json(make(7))) != io.dumps(io.to_json(make(8)))


def test_instance_shape():
    inst = random_instance(3, 2, 1)
    assert inst.n == 3 and len(inst.worlds) == 2 and sum(inst.prior) == 1 and min(inst.prior) > 0


def test_unit_typed():
    ti = random_typed(2, 2, 2, 5, unit=True)
    assert set(ti.sizes.values()) == {1}


def test_restricted_smti_shape():
    for s in range(30):
        m = random_smti(4, 4, s, tie_rate=1.0)
        holders = [b for a in m.side_a for b in m.ties.get(a, ())]
        assert len(holders) == len(set(holders))


def test_wsm_weights_in_unit_interval():
    w = random_wsm(3, 2, 0.5)
    assert all(0 <= x <= 1 for x in w.weights.values())
    for a in w.side_a:
        assert sum(len(t) == 2 for t in w.profile.tiers[a]) <= 1
