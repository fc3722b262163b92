"""Weighted stable matching with a tie, turned into a two-world private persuasion market."""

from stable_persuasion.generators import random_wsm
from stable_persuasion.matching import wsm_brute
from stable_persuasion.model import PreferenceProfile, is_stable_policy, policy_utility
from stable_persuasion.reductions import build_proof_policy, wsm_to_private_persuasion

w = random_wsm(3, seed=11, tie_rate=1.0)
for x, tiers in w.profile.tiers.items():
    print(x, " > ".join("~".join(t) for t in tiers))
m, u = wsm_brute(w)
print("best stable matching", dict(m.pairs), "weight", u)

red = wsm_to_private_persuasion(w)
orders = {}
for x, tiers in w.profile.tiers.items():
    flat = []
    for t in tiers:
        t = list(t)
        if len(t) == 2 and m.partner(x) == t[1]:
            t.reverse()
        flat += t
    orders[x] = flat
pol = build_proof_policy(red, m, PreferenceProfile.strict(orders))
print(pol.notes[0])
print("stable:", bool(is_stable_policy(red, pol)), "utility:", policy_utility(red, pol))
