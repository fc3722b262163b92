"""Two-agent market: revealing the world beats announcing only the matching."""

import os
from fractions import Fraction

from stable_persuasion import io
from stable_persuasion.errors import UnreachableSignalError
from stable_persuasion.model import Matching, blocking_pairs, policy_utility, posterior_of_metasignal
from stable_persuasion.oracle import solve_oracle_public, solve_oracle_restricted
from stable_persuasion.worlds import check_non_degenerate, perturb, solve_public_small_worlds

HERE = os.path.dirname(os.path.abspath(__file__))
inst = io.instance_from_json(io.read_json(os.path.join(HERE, "..", "data", "example1.json")))


def show(title, policy):
    print(title, "->", policy_utility(inst, policy))
    for s, sig in enumerate(policy.signals):
        try:
            post = posterior_of_metasignal(inst, policy, s)
        except UnreachableSignalError:
            continue
        print("   ", dict(sig.matching.pairs), "at posterior", tuple(str(q) for q in post))


m1 = Matching({"a1": "b1", "a2": "b2"})
for t in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
    p = (1 - t, t)
    print(f"M1 at p(w2)={t}: blocking pairs {blocking_pairs(inst, m1, p)}")

show("best public policy", solve_oracle_public(inst))
value, pol = solve_oracle_restricted(inst)
show("matching-only policy", pol)

verdict = check_non_degenerate(inst)
print("non-degenerate:", bool(verdict), [(d.owner, d.pair) for d in verdict.witness])
noisy = perturb(inst, Fraction(1, 1000), seed=1)
res = solve_public_small_worlds(noisy, return_details=True)
print("after perturbation: non-degenerate", res.non_degenerate, "value", res.value, "cells", len(res.cells))
