"""Shrinking the support of a public policy to at most ``|worlds|`` signals."""

from __future__ import annotations

from fractions import Fraction

from .errors import InvariantError
from .lp import LinearProgram, OPTIMAL, lp_solve, null_space
from .model import (
    Instance,
    PublicPolicy,
    kernel_from_masses,
    posterior_of_metasignal,
    signal_probability,
)

ZERO = Fraction(0)


def _shrink(posteriors, values, phi, k):
    """Carathéodory-style reduction of the weights ``phi``.

    Moves along a direction that keeps ``sum phi_s * posterior_s`` fixed and
    never lowers ``sum phi_s * values_s``, until at most ``k`` weights are
    positive.
    """
    phi = list(phi)
    while True:
        live = [s for s, f in enumerate(phi) if f > 0]
        if len(live) <= k:
            return phi
        rows = [[posteriors[s][w] for s in live] for w in range(k)]
        cands = null_space(rows + [[values[s] for s in live]], len(live))
        if not cands:
            cands = null_space(rows, len(live))
            if not cands:
                raise InvariantError("no redistribution direction although the support exceeds the dimension")
        c = cands[0]
        gain = sum((ci * values[s] for ci, s in zip(c, live)), ZERO)
        if gain < 0 or (gain == 0 and not any(ci < 0 for ci in c)):
            c = [-ci for ci in c]
        best = None
        for ci, s in zip(c, live):
            if ci < 0:
                lam = phi[s] / -ci
                if best is None or lam < best[0]:
                    best = (lam, s)
        lam, zeroed = best
        for ci, s in zip(c, live):
            phi[s] += lam * ci
        phi[zeroed] = ZERO
        if any(f < 0 for f in phi):
            raise InvariantError("support reduction produced a negative weight")


def reduce_policy_support(inst: Instance, policy: PublicPolicy) -> PublicPolicy:
    """An equally good or better policy on at most ``|worlds|`` signals.

    Solves the posterior-decomposition LP over the current support, then
    removes redundant posteriors one at a time. Every kept signal keeps its
    posterior, so stability and indicativeness carry over unchanged.
    """
    k = len(inst.worlds)
    live = [s for s in range(len(policy.signals)) if signal_probability(inst, policy, s) > 0]
    posteriors = [posterior_of_metasignal(inst, policy, s) for s in live]
    values = [
        sum((p[w] * inst.utility(policy.signals[s].matching, w) for w in range(k)), ZERO)
        for s, p in zip(live, posteriors)
    ]
    lp = LinearProgram("posterior-decomposition")
    names = [lp.add_variable(f"phi{j}") for j in range(len(live))]
    for w in range(k):
        lp.add_constraint({v: posteriors[j][w] for j, v in enumerate(names)}, "=", inst.prior[w])
    lp.set_objective({v: values[j] for j, v in enumerate(names)})
    res = lp_solve(lp)
    if res.status != OPTIMAL:
        raise InvariantError(f"posterior-decomposition LP is {res.status}")
    phi = _shrink(posteriors, values, [res.assignment[v] for v in names], k)

    keep = [j for j, f in enumerate(phi) if f > 0]
    masses = [[phi[j] * posteriors[j][w] for w in range(k)] for j in keep]
    return PublicPolicy.build(
        inst,
        [policy.signals[live[j]] for j in keep],
        kernel_from_masses(inst, masses),
        policy.notes,
    )
