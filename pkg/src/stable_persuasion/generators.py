"""Seeded random instance generators. Same seed, same output."""

from __future__ import annotations

import random
from fractions import Fraction

from .errors import InputError
from .matching import WsmProblem
from .model import Instance, PreferenceProfile
from .reductions import PersuasionInstance, SmtiInstance
from .typed import TypedInstance


def _grid(rng, span, den):
    return Fraction(rng.randint(-span * den, span * den), den)


def _prior(rng, k):
    w = [rng.randint(1, 9) for _ in range(k)]
    return [Fraction(x, sum(w)) for x in w]


def random_instance(n: int, k: int, seed, span: int = 10, den: int = 10, max_utility: int = 5) -> Instance:
    """Values uniform on ``{-span, ..., span}`` in steps of ``1/den``; utilities integers in ``[0, max_utility]``."""
    if n < 1 or k < 1:
        raise InputError("n and k must be positive")
    rng = random.Random(seed)
    worlds = [f"w{i}" for i in range(1, k + 1)]
    side_a = [f"a{i}" for i in range(1, n + 1)]
    side_b = [f"b{i}" for i in range(1, n + 1)]
    values = {x: {y: [_grid(rng, span, den) for _ in worlds] for y in (side_b if x in side_a else side_a)}
              for x in side_a + side_b}
    utils = {a: {b: [Fraction(rng.randint(0, max_utility)) for _ in worlds] for b in side_b} for a in side_a}
    return Instance.build(worlds, _prior(rng, k), side_a, side_b, values, utils)


def random_typed(t_a: int, t_b: int, k: int, seed, max_size: int = 3, unit: bool = False,
                 span: int = 10, den: int = 10, max_utility: int = 5) -> TypedInstance:
    """Random typed market; ``unit`` makes every type a single agent (needs ``t_a == t_b``)."""
    rng = random.Random(seed)
    if unit:
        if t_a != t_b:
            raise InputError("unit sizes need as many A-types as B-types")
        sa, sb = [1] * t_a, [1] * t_b
    else:
        if t_a < 1 or t_b < 1:
            raise InputError("each side needs a type")
        sa = [rng.randint(1, max_size) for _ in range(t_a)]
        sb = [1] * t_b
        # spread the same total over the B-types
        total = sum(sa)
        if total < t_b:
            sa[0] += t_b - total
            total = t_b
        for _ in range(total - t_b):
            sb[rng.randrange(t_b)] += 1
    worlds = [f"w{i}" for i in range(1, k + 1)]
    a_types = {f"s{i}": sa[i - 1] for i in range(1, t_a + 1)}
    b_types = {f"t{i}": sb[i - 1] for i in range(1, t_b + 1)}
    values = {x: {y: [_grid(rng, span, den) for _ in worlds] for y in (b_types if x in a_types else a_types)}
              for x in list(a_types) + list(b_types)}
    utils = {s: {t: [Fraction(rng.randint(0, max_utility)) for _ in worlds] for t in b_types} for s in a_types}
    return TypedInstance.build(worlds, _prior(rng, k), a_types, b_types, values, utils)


def random_smti(n_a: int, n_b: int, seed, density: float = 0.6, tie_rate: float = 0.5,
                restricted: bool = True) -> SmtiInstance:
    """Mutually acceptable lists; ties sit after the strict list of A-agents.

    With ``restricted`` every B-agent lies in at most one tie.
    """
    rng = random.Random(seed)
    side_a = [f"a{i}" for i in range(1, n_a + 1)]
    side_b = [f"b{i}" for i in range(1, n_b + 1)]
    prefs, ties, used = {}, {}, set()
    for a in side_a:
        bs = [b for b in side_b if rng.random() < density]
        rng.shuffle(bs)
        if len(bs) >= 2 and rng.random() < tie_rate:
            cand = bs[-2:]
            if not (restricted and used & set(cand)):
                ties[a] = tuple(cand)
                used |= set(cand)
                bs = bs[:-2]
        prefs[a] = bs
    for b in side_b:
        lst = [a for a in side_a if b in prefs[a] or b in ties.get(a, ())]
        rng.shuffle(lst)
        prefs[b] = lst
    return SmtiInstance.build(side_a, side_b, prefs, ties)


def random_wsm(n: int, seed, tie_rate: float = 0.0, weight_den: int = 4) -> WsmProblem:
    """Complete lists, weights in ``[0, 1]``; ``tie_rate > 0`` adds restricted-shape ties on side A."""
    rng = random.Random(seed)
    side_a = [f"a{i}" for i in range(1, n + 1)]
    side_b = [f"b{i}" for i in range(1, n + 1)]
    tiers, used = {}, set()
    for a in side_a:
        bs = side_b[:]
        rng.shuffle(bs)
        row = [(b,) for b in bs]
        free = [k for k in range(n - 1) if bs[k] not in used and bs[k + 1] not in used]
        if free and rng.random() < tie_rate:
            k = rng.choice(free)
            used |= {bs[k], bs[k + 1]}
            row = row[:k] + [(bs[k], bs[k + 1])] + row[k + 2:]
        tiers[a] = row
    for b in side_b:
        as_ = side_a[:]
        rng.shuffle(as_)
        tiers[b] = [(a,) for a in as_]
    weights = {(a, b): Fraction(rng.randint(0, weight_den), weight_den) for a in side_a for b in side_b}
    return WsmProblem.build(side_a, side_b, PreferenceProfile(tiers), weights)


def random_persuasion(receivers: int, k: int, seed, span: int = 5) -> PersuasionInstance:
    rng = random.Random(seed)
    worlds = [f"w{i}" for i in range(1, k + 1)]
    rs = [f"r{i}" for i in range(1, receivers + 1)]
    acts = ["x", "y"]
    values = {i: {j: [Fraction(rng.randint(-span, span)) for _ in worlds] for j in acts} for i in rs}
    payoff = {j: [Fraction(rng.randint(0, span)) for _ in worlds] for j in acts}
    return PersuasionInstance.build(worlds, _prior(rng, k), rs, acts, values, payoff)
