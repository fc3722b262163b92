"""Typed market where both solvers reach 4, and the per-agent policy it expands to."""

import os

from stable_persuasion import io
from stable_persuasion.model import is_indicative, is_stable_policy
from stable_persuasion.typed import expand_typed_policy, solve_private_typed, solve_public_typed, typed_utility

HERE = os.path.dirname(os.path.abspath(__file__))
ti = io.typed_from_json(io.read_json(os.path.join(HERE, "..", "data", "example2.json")))

for name, solver in (("public", solve_public_typed), ("private", solve_private_typed)):
    tp = solver(ti)
    inst, pol = expand_typed_policy(ti, tp)
    print(f"{name}: value {typed_utility(ti, tp)}, {len(tp.signals)} signals, "
          f"stable={bool(is_stable_policy(inst, pol))}, indicative={is_indicative(inst, pol)}")
    for sig, row in zip(tp.signals, tp.kernel):
        print("   counts", sig.counts, "sent with", [str(q) for q in row])

big = ti.scaled(1000)
print("1000x sizes:", typed_utility(big, solve_public_typed(big)))
