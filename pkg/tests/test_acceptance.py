"""Acceptance suite: one pass/fail line per criterion.

Run with pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction

from helpers import ACCEPTANCE, brute_matching_only_value, brute_public_value, example1, example2
from stable_persuasion.generators import random_instance, random_smti, random_typed, random_wsm
from stable_persuasion.lp import enumerate_vertices
from stable_persuasion.matching import WsmProblem, gale_shapley, wsm_brute, wsm_strict
from stable_persuasion.model import (
    Matching,
    MetaSignal,
    PreferenceProfile,
    PublicPolicy,
    blocking_pairs,
    induced_profile,
    is_bayes_plausible,
    is_indicative,
    is_stable_policy,
    kernel_from_masses,
    policy_utility,
    posterior_of_metasignal,
    signal_probability,
)
from stable_persuasion.oracle import solve_oracle_public, solve_oracle_restricted
from stable_persuasion.reductions import (
    DUMMY_A,
    DUMMY_B,
    build_proof_policy,
    max_smti_brute,
    smti_restrict,
    smti_to_wsm,
    tie_crossing,
    wsm_to_private_persuasion,
)
from stable_persuasion.support import reduce_policy_support
from stable_persuasion.typed import (
    _prototype_polytope,
    all_prototypes,
    expand_typed_policy,
    solve_private_typed,
    solve_public_typed,
    typed_utility,
)
from stable_persuasion.worlds import (
    cell_bound,
    check_non_degenerate,
    crossing_points,
    difference_vectors,
    enumerate_proper_cells,
    perturb,
    solve_public_small_worlds,
)

F = Fraction
EMITTED: list = []  # (label, instance, policy) for criterion 11


def record(num, text, ok, detail=""):
    line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}: {text}" + (f" [{detail}]" if detail else "")
    ACCEPTANCE[num] = line
    print(line)
    return ok


def emit(label, inst, policy):
    EMITTED.append((label, inst, policy))
    return policy


def _non_degenerate_instances(count, n, k, seed0):
    out, seed = [], seed0
    while len(out) < count:
        inst = random_instance(n, k, seed)
        seed += 1
        if check_non_degenerate(inst):
            out.append(inst)
    return out


# --------------------------------------------------------------------------


def test_criterion_01_example1_values():
    t = time.perf_counter()
    inst = example1()
    pub = emit("oracle-public ex1", inst, solve_oracle_public(inst))
    v_pub = policy_utility(inst, pub)
    v_res, res_pol = solve_oracle_restricted(inst)
    emit("oracle-restricted ex1", inst, res_pol)
    ref_pub, ref_res = brute_public_value(inst), brute_matching_only_value(inst)
    elapsed = time.perf_counter() - t
    ok = v_pub == 1 and v_res == F(3, 4) and v_pub > v_res and elapsed < 5
    record(1, "Example 1: public optimum 1, matching-only optimum 3/4, runtime < 5 s", ok,
           f"public={v_pub} (grid brute force {ref_pub}), matching-only={v_res} (grid brute force {ref_res}), "
           f"gap={v_pub - v_res}, {elapsed:.2f}s")
    assert v_pub == ref_pub == 1
    assert v_res == ref_res
    assert v_res == F(3, 4), f"matching-only optimum is {v_res}; independent brute force gives {ref_res}"


def test_criterion_02_instability_certificate():
    t = time.perf_counter()
    inst = example1()
    m1 = Matching({"a1": "b1", "a2": "b2"})
    policy = PublicPolicy.build(inst, [MetaSignal(None, m1)], [[1, 1]])
    verdict = is_stable_policy(inst, policy)
    pairs = blocking_pairs(inst, m1, (F(1, 2), F(1, 2)))
    elapsed = time.perf_counter() - t
    ok = not verdict and ("a1", "b2") in verdict.blocking and pairs == [("a1", "b2")] and elapsed < 1
    record(2, "uninformative M1 policy on Example 1 is blocked by (a1, b2) at (1/2, 1/2)", ok,
           f"blocking={verdict.blocking}, posterior={[str(q) for q in verdict.posterior]}, {elapsed:.3f}s")
    assert ok


def test_criterion_03_example2_values():
    t = time.perf_counter()
    ti = example2()
    priv = solve_private_typed(ti)
    pub = solve_public_typed(ti)
    v_priv, v_pub = typed_utility(ti, priv), typed_utility(ti, pub)
    for label, tp in (("typed-private ex2", priv), ("typed-public ex2", pub)):
        inst, pol = expand_typed_policy(ti, tp)
        emit(label, inst, pol)
    elapsed = time.perf_counter() - t
    ok = v_priv == 4 and v_pub < 4 and elapsed < 30
    record(3, "Example 2: private optimum 4, public optimum < 4, runtime < 30 s", ok,
           f"private={v_priv}, public={v_pub}, {elapsed:.2f}s")
    assert v_priv == 4
    assert v_pub < 4, f"public optimum is {v_pub}; its concrete expansion verifies as stable and indicative"


def test_criterion_04_integer_vertices():
    t = time.perf_counter()
    rng = random.Random(404)
    polytopes = vertices = 0
    bad = []
    for i in range(100):
        ti = random_typed(rng.randint(1, 3), rng.randint(1, 3), 2, seed=rng.randrange(10**9), max_size=4)
        for proto in all_prototypes(ti):
            poly, _ = _prototype_polytope(ti, proto)
            verts = enumerate_vertices(poly)
            if verts:
                polytopes += 1
            for v in verts:
                vertices += 1
                if any(x.denominator != 1 for x in v.values()):
                    bad.append((i, sorted(proto), v))
    elapsed = time.perf_counter() - t
    ok = not bad and elapsed < 60
    record(4, "every vertex of every feasible count polytope is integral (100 instances, T <= 3, < 60 s)", ok,
           f"{polytopes} polytopes, {vertices} vertices, {len(bad)} fractional, {elapsed:.1f}s")
    assert ok, bad[:3]


def test_criterion_05_oracle_equivalence():
    t = time.perf_counter()
    mism = []
    for inst in _non_degenerate_instances(100, 2, 2, seed0=5000):
        res = solve_public_small_worlds(inst, return_details=True)
        emit("worlds-public random", inst, res.policy)
        ora = solve_oracle_public(inst)
        if res.value != policy_utility(inst, ora) or policy_utility(inst, res.policy) != res.value:
            mism.append(("worlds", inst.prior))
    rng = random.Random(55)
    for i in range(50):
        T = rng.randint(1, 2)
        ti = random_typed(T, T, 2, seed=rng.randrange(10**9), unit=True)
        tp = solve_public_typed(ti)
        inst, pol = expand_typed_policy(ti, tp)
        emit("typed-public unit", inst, pol)
        if typed_utility(ti, tp) != policy_utility(inst, solve_oracle_public(inst)):
            mism.append(("typed", i))
    elapsed = time.perf_counter() - t
    ok = not mism and elapsed < 600
    record(5, "worlds solver = oracle on 100 instances; typed public = oracle on 50 unit instances", ok,
           f"{len(mism)} mismatches, {elapsed:.1f}s")
    assert ok, mism[:3]


def test_criterion_06_wsm_cross_check():
    t = time.perf_counter()
    rng = random.Random(606)
    bad = 0
    for _ in range(200):
        prob = random_wsm(rng.randint(2, 6), seed=rng.randrange(10**9), weight_den=5)
        m, v = wsm_strict(prob)
        m2, v2 = wsm_brute(prob)
        if v != v2 or not prob.is_stable(m) or prob.value(m) != v:
            bad += 1
    elapsed = time.perf_counter() - t
    ok = bad == 0 and elapsed < 120
    record(6, "weighted stable matching LP = brute force on 200 strict instances, n <= 6, < 2 min", ok,
           f"{bad} mismatches, {elapsed:.1f}s")
    assert ok


def _three_point_policy(inst):
    """Signals at p(w2) in {0, prior, 1} with a stable matching at each."""
    mu = inst.prior[1]
    pts = [F(0), mu, F(1)]
    # weights: half the mass on the prior point, the rest split to keep the mean
    lam0 = (1 - mu) / 2
    lam1 = mu / 2
    weights = [lam0, F(1, 2), lam1]
    signals, masses = [], []
    for t, lam in zip(pts, weights):
        p = (1 - t, t)
        prof = induced_profile(inst, p)
        strict = PreferenceProfile.strict({x: [y for tier in prof.tiers[x] for y in tier] for x in inst.agents})
        m = gale_shapley(strict, inst.side_a, inst.side_b)
        signals.append(MetaSignal(prof, m))
        masses.append([lam * p[w] for w in range(2)])
    return PublicPolicy.build(inst, signals, kernel_from_masses(inst, masses))


def test_criterion_07_support_bound():
    over = []
    for inst in _non_degenerate_instances(30, 2, 2, seed0=7000):
        pol = solve_public_small_worlds(inst)
        if len(pol.signals) > 2:
            over.append(len(pol.signals))
    for inst in _non_degenerate_instances(2, 2, 3, seed0=7100):
        pol = solve_public_small_worlds(inst)
        emit("worlds-public k=3", inst, pol)
        if len(pol.signals) > 3:
            over.append(len(pol.signals))
    shrink_bad = []
    cases = 0
    for inst in _non_degenerate_instances(20, 2, 2, seed0=7200):
        pol = solve_public_small_worlds(inst)
        # duplicate the first signal with half of its mass
        ker = [list(r) for r in pol.kernel]
        half = [q / 2 for q in ker[0]]
        sigs = list(pol.signals) + [pol.signals[0]]
        ker = [half] + ker[1:] + [half]
        if len(sigs) < 3:
            sigs.append(pol.signals[0])
            ker = [[q / 2 for q in half]] + ker[1:] + [[q / 2 for q in half]]
        inflated = PublicPolicy.build(inst, sigs, ker)
        for src in (inflated, _three_point_policy(inst)):
            assert len(src.signals) == 3 and is_stable_policy(inst, src)
            cases += 1
            out = emit("support-reduced", inst, reduce_policy_support(inst, src))
            if len(out.signals) > 2 or policy_utility(inst, out) < policy_utility(inst, src):
                shrink_bad.append(inst.prior)
    ok = not over and not shrink_bad
    record(7, "worlds outputs use <= |worlds| signals; support reduction of 3-signal policies gives <= 2", ok,
           f"{len(over)} oversized outputs, {cases} inflated inputs, {len(shrink_bad)} failures")
    assert ok


def test_criterion_08_cells():
    t = time.perf_counter()
    problems = []
    ex1 = example1()
    ex1_bounds = sorted({q for c in enumerate_proper_cells(ex1) for q in c.interval} - {0, 1})
    if ex1_bounds != [F(1, 3), F(2, 3)]:
        problems.append(("ex1", ex1_bounds))
    insts = [ex1] + [random_instance(n, 2, seed=800 + i) for i, n in enumerate([2, 3] * 10)]
    insts += [random_instance(2, 3, seed=900 + i) for i in range(3)]
    for inst in insts:
        cells = enumerate_proper_cells(inst)
        k = len(inst.worlds)
        h = len(difference_vectors(inst))
        if len(cells) > cell_bound(h, k - 1):
            problems.append(("bound", len(cells)))
        for c in cells:
            if induced_profile(inst, c.witness) != c.profile:
                problems.append(("witness", c.witness))
        if k == 2:
            ivals = [c.interval for c in cells]
            chain = ivals[0][0] == 0 and ivals[-1][1] == 1 and all(
                a[1] == b[0] and a[0] < a[1] for a, b in zip(ivals, ivals[1:] + [(1, 2)]))
            inner = [iv[1] for iv in ivals[:-1]]
            if not chain or inner != crossing_points(inst):
                problems.append(("partition", ivals))
    elapsed = time.perf_counter() - t
    ok = not problems and elapsed < 60
    record(8, "cells partition [0,1] at the crossing points; Example 1 boundaries {1/3, 2/3}; witnesses and bound hold",
           ok, f"{len(insts)} instances, {len(problems)} problems, {elapsed:.1f}s")
    assert ok, problems[:3]


def test_criterion_09_non_degeneracy():
    t = time.perf_counter()
    inst = example1()
    verdict = check_non_degenerate(inst)
    vecs = [d.vec for d in verdict.witness]
    dependent = len(vecs) == 2 and vecs[0][0] * vecs[1][1] - vecs[0][1] * vecs[1][0] == 0
    passed = sum(bool(check_non_degenerate(perturb(inst, F(1, 100), seed))) for seed in range(20))
    elapsed = time.perf_counter() - t
    ok = not verdict and dependent and passed >= 19 and elapsed < 60
    record(9, "Example 1 is degenerate with a dependent pair; perturbed copies pass for >= 19 of 20 seeds", ok,
           f"witness={[(d.owner, d.pair, [str(q) for q in d.vec]) for d in verdict.witness]}, "
           f"{passed}/20 perturbed pass, {elapsed:.1f}s")
    assert ok


def _order_at(row, keys, t):
    return sorted(keys, key=lambda y: -(row[y][0] * (1 - t) + row[y][1] * t))


def _value(row, y, t):
    return row[y][0] * (1 - t) + row[y][1] * t


def _fig_orders_hold(w: WsmProblem, red) -> bool:
    """Check the relative orders at p(w2) in {0, 1/5, q, 1} within each agent's values."""
    core_b = list(w.side_b)
    qs = [q for q in (tie_crossing(red, b) for b in core_b) if q is not None]
    for a in w.side_a:
        row = red.values[a]
        ties = [t for t in w.profile.tiers[a] if len(t) == 2]
        for t in [F(0), F(1, 5), F(1)] + qs:
            order = _order_at(row, core_b, t)
            if ties:
                top, low = ties[0]
                want_top_first = t == 0
                i, j = order.index(top), order.index(low)
                if (i < j) != want_top_first or abs(i - j) != 1:
                    return False
            # the rest follows the weak order; b' is last
            flat = [y for tier in w.profile.tiers[a] for y in tier]
            if [y for y in order if not ties or y not in ties[0]] != [y for y in flat if not ties or y not in ties[0]]:
                return False
            if _value(row, DUMMY_B, t) >= min(_value(row, y, t) for y in core_b):
                return False
    holder = {y: a for a in w.side_a for tier in w.profile.tiers[a] if len(tier) == 2 for y in tier}
    for b in core_b:
        row = red.values[b]
        strict = [tier[0] for tier in w.profile.tiers[b]]
        q = tie_crossing(red, b)
        probes = [F(0), F(1, 5), F(1)] + ([q] if q is not None else [])
        for t in probes:
            if _value(row, DUMMY_A, t) <= max(_value(row, a, t) for a in w.side_a):
                return False
            x = holder.get(b)
            order = _order_at(row, list(w.side_a), t)
            if x is None or t in (0, F(1, 5)):
                if order != strict:
                    return False
            elif t == 1:
                if order[-1] != x or order[:-1] != [a for a in strict if a != x]:
                    return False
            else:
                below = strict[strict.index(x) + 1:]
                if below and _value(row, x, t) != _value(row, below[0], t):
                    return False
        if q is not None and not (F(1, 2) < q < 1):
            return False
    return True


def _resolve(w: WsmProblem, m) -> PreferenceProfile:
    orders = {}
    for x, tiers in w.profile.tiers.items():
        out = []
        for tier in tiers:
            tier = list(tier)
            if len(tier) == 2 and m.partner(x) == tier[1]:
                tier.reverse()
            out += tier
        orders[x] = out
    return PreferenceProfile.strict(orders)


def test_criterion_10_reductions():
    t = time.perf_counter()
    rng = random.Random(1010)
    restrict_bad = wsm_bad = 0
    for i in range(60):
        m = random_smti(rng.randint(1, 4), rng.randint(1, 4), seed=rng.randrange(10**9), restricted=False)
        v, _ = max_smti_brute(m)
        m2, info = smti_restrict(m)
        v2, _ = max_smti_brute(m2)
        if v2 != v + len(info.a_copies) + len(info.a_links):
            restrict_bad += 1
        if max(len(m.side_a), len(m.side_b)) <= 5:
            _, wv = wsm_brute(smti_to_wsm(m))
            if wv != v:
                wsm_bad += 1
    gadget_bad = claim_bad = proof_bad = 0
    for i in range(40):
        w = random_wsm(rng.randint(1, 3), seed=rng.randrange(10**9), tie_rate=0.8)
        red = wsm_to_private_persuasion(w)
        if not _fig_orders_hold(w, red):
            gadget_bad += 1
        m_star, u_star = wsm_brute(w)
        pol = build_proof_policy(red, m_star, _resolve(w, m_star))
        emit("proof policy", red, pol)
        full = Matching(list(m_star.pairs) + [(DUMMY_A, DUMMY_B)])
        mass = [sum(red.prior[k] * pol.kernel[s][k] for s, sig in enumerate(pol.signals) if sig.matching == full)
                for k in range(2)]
        if mass[1] / sum(mass) > F(1, 2):
            claim_bad += 1
        if not is_stable_policy(red, pol) or policy_utility(red, pol) != u_star:
            proof_bad += 1
    elapsed = time.perf_counter() - t
    ok = not (restrict_bad or wsm_bad or gadget_bad or claim_bad or proof_bad) and elapsed < 300
    record(10, "SMTI restriction and WSM identities; gadget orders at the probes; proof policies stable and optimal",
           ok, f"restrict {restrict_bad}, smti-wsm {wsm_bad}, gadget {gadget_bad}, claim {claim_bad}, "
               f"proof {proof_bad} failures over 60/60/40 instances, {elapsed:.1f}s")
    assert ok


def _best_time(fn, reps=3):
    best = None
    for _ in range(reps):
        t = time.perf_counter()
        fn()
        d = time.perf_counter() - t
        best = d if best is None else min(best, d)
    return best


def test_criterion_11_self_verification():
    # make sure every solver contributed, even when run in isolation
    if not EMITTED:
        inst = example1()
        emit("oracle-public ex1", inst, solve_oracle_public(inst))
        emit("oracle-restricted ex1", inst, solve_oracle_restricted(inst)[1])
        ti = example2()
        for tp in (solve_public_typed(ti), solve_private_typed(ti)):
            emit("typed ex2", *expand_typed_policy(ti, tp))
        for inst in _non_degenerate_instances(5, 2, 2, seed0=1100):
            emit("worlds-public", inst, solve_public_small_worlds(inst))
    rng = random.Random(1111)
    for i in range(10):
        ti = random_typed(2, 2, 2, seed=rng.randrange(10**9), max_size=2)
        for tp in (solve_public_typed(ti), solve_private_typed(ti)):
            emit("typed random", *expand_typed_policy(ti, tp))
    failures = []
    for label, inst, pol in EMITTED:
        if not (is_stable_policy(inst, pol) and is_indicative(inst, pol) and is_bayes_plausible(inst, pol)):
            failures.append(label)
        for s in range(len(pol.signals)):
            if signal_probability(inst, pol, s) and hasattr(pol.signals[s], "profile"):
                assert sum(posterior_of_metasignal(inst, pol, s)) == 1
    ti = example2()
    big = ti.scaled(1024)
    base = _best_time(lambda: (solve_public_typed(ti), solve_private_typed(ti)))
    scaled = _best_time(lambda: (solve_public_typed(big), solve_private_typed(big)))
    ratio = scaled / base
    ok = not failures and ratio <= 2
    record(11, "every emitted policy is stable, indicative and Bayes-plausible; typed time grows <= 2x for 1024x sizes",
           ok, f"{len(EMITTED)} policies, {len(failures)} failures, time ratio {ratio:.2f}")
    assert ok, failures[:5]


if __name__ == "__main__":
    import sys

    rc = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                rc = 1
    sys.exit(rc)
