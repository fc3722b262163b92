"""Brute-force ground truth for tiny instances."""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations, product

from .errors import CapacityError, InvariantError
from .lp import OPTIMAL, LinearProgram, Polytope, is_feasible, lp_solve
from .model import (
    Instance,
    MetaSignal,
    PreferenceProfile,
    PublicPolicy,
    all_matchings,
    kernel_from_masses,
    stable_under_profile,
)

ZERO = Fraction(0)


def weak_orders(items):
    """All total preorders of ``items`` as best-first tier tuples."""
    items = tuple(items)
    if not items:
        yield ()
        return
    n = len(items)
    for mask in range(1, 1 << n):
        first = tuple(items[i] for i in range(n) if mask >> i & 1)
        rest = tuple(items[i] for i in range(n) if not mask >> i & 1)
        for tail in weak_orders(rest):
            yield (first,) + tail


def strict_orders(items):
    for perm in permutations(items):
        yield tuple((y,) for y in perm)


def _row_constraints(inst: Instance, x: str, tiers) -> list:
    """``(d, sense)`` rows: ``d . p <= 0`` between tiers and ``= 0`` inside a tier."""
    row = inst.values[x]
    out = []
    for tier in tiers:
        for y, z in zip(tier, tier[1:]):
            out.append((tuple(a - b for a, b in zip(row[y], row[z])), "="))
    for better, worse in zip(tiers, tiers[1:]):
        out.append((tuple(a - b for a, b in zip(row[worse[0]], row[better[0]])), "<="))
    return out


def _cell_feasible(inst: Instance, rows) -> bool:
    k = len(inst.worlds)
    poly = Polytope("cell")
    ps = [poly.add_variable(f"p{w}") for w in range(k)]
    poly.add_constraint({v: 1 for v in ps}, "=", 1)
    for d, sense in rows:
        poly.add_constraint({ps[w]: d[w] for w in range(k)}, sense, 0)
    return is_feasible(poly)


def nonempty_profiles(inst: Instance, strict_only: bool = False) -> list[PreferenceProfile]:
    """Profiles whose closed cell meets the simplex, in canonical enumeration order."""
    gen = strict_orders if strict_only else weak_orders
    options = []
    for x in inst.agents:
        rows = [(t, _row_constraints(inst, x, t)) for t in gen(inst.opposite(x))]
        options.append([(t, r) for t, r in rows if _cell_feasible(inst, r)])
    out = []

    def rec(i, chosen, rows):
        if i == len(options):
            out.append(PreferenceProfile(dict(zip(inst.agents, chosen))))
            return
        for tiers, r in options[i]:
            merged = rows + r
            if _cell_feasible(inst, merged):
                rec(i + 1, chosen + [tiers], merged)

    rec(0, [], [])
    return out


def _profile_rows(inst: Instance, profile: PreferenceProfile) -> list:
    return [r for x in inst.agents for r in _row_constraints(inst, x, profile.tiers[x])]


def _space(inst: Instance):
    n = inst.n
    if n <= 2:
        return nonempty_profiles(inst), "weak"
    if n == 3:
        return nonempty_profiles(inst, strict_only=True), "strict"
    raise CapacityError(f"the oracle handles n <= 3, got {n}")


def solve_oracle_public(inst: Instance) -> PublicPolicy:
    """Optimal public policy over all (profile, matching) meta-signals.

    Variables are joint masses ``mu(w) sigma(profile, M | w)``; pairs whose
    matching is unstable under the declared profile are left out.
    """
    k = len(inst.worlds)
    profiles, kind = _space(inst)
    matchings = list(all_matchings(inst))
    lp = LinearProgram("oracle-public")
    keys, groups = [], []
    for pi, prof in enumerate(profiles):
        rows = _profile_rows(inst, prof)
        for mi, m in enumerate(matchings):
            if not stable_under_profile(inst, prof, m):
                continue
            names = [lp.add_variable(f"x_{pi}_{mi}_{w}") for w in range(k)]
            for d, sense in rows:
                coeffs = {names[w]: d[w] for w in range(k) if d[w]}
                if coeffs:
                    lp.add_constraint(coeffs, sense, 0)
            keys.append((prof, m))
            groups.append(names)
    for w in range(k):
        lp.add_constraint({names[w]: 1 for names in groups}, "=", inst.prior[w])
    lp.set_objective({names[w]: inst.utility(m, w) for (_, m), names in zip(keys, groups) for w in range(k)})
    res = lp_solve(lp)
    if res.status != OPTIMAL:
        raise InvariantError(f"oracle LP is {res.status}")
    signals, masses = [], []
    for (prof, m), names in zip(keys, groups):
        mass = [res.assignment[v] for v in names]
        if any(mass):
            signals.append(MetaSignal(prof, m))
            masses.append(mass)
    notes = () if kind == "weak" else ("strict profiles only",)
    return PublicPolicy.build(inst, signals, kernel_from_masses(inst, masses), notes)


def solve_oracle_restricted(inst: Instance) -> tuple[Fraction, PublicPolicy]:
    """Best policy whose only signal is the matching itself.

    Each matching is either unused or assigned a weak-profile cell under
    which it is stable; every assignment is one LP.
    """
    if inst.n > 2 or len(inst.worlds) != 2:
        raise CapacityError("the restricted oracle handles n <= 2 and two worlds")
    k = len(inst.worlds)
    profiles = nonempty_profiles(inst)
    matchings = list(all_matchings(inst))
    choices = []
    for m in matchings:
        choices.append([None] + [p for p in profiles if stable_under_profile(inst, p, m)])
    best = None
    for assign in product(*choices):
        lp = LinearProgram("restricted")
        names = []
        for mi, (m, prof) in enumerate(zip(matchings, assign)):
            if prof is None:
                names.append(None)
                continue
            xs = [lp.add_variable(f"x_{mi}_{w}") for w in range(k)]
            for d, sense in _profile_rows(inst, prof):
                coeffs = {xs[w]: d[w] for w in range(k) if d[w]}
                if coeffs:
                    lp.add_constraint(coeffs, sense, 0)
            names.append(xs)
        used = [xs for xs in names if xs is not None]
        if not used:
            continue
        for w in range(k):
            lp.add_constraint({xs[w]: 1 for xs in used}, "=", inst.prior[w])
        lp.set_objective(
            {xs[w]: inst.utility(m, w) for m, xs in zip(matchings, names) if xs is not None for w in range(k)}
        )
        res = lp_solve(lp)
        if res.status == OPTIMAL and (best is None or res.value > best[0]):
            best = (res.value, assign, names, res.assignment)
    if best is None:
        raise InvariantError("no matching-only policy found")
    value, assign, names, sol = best
    signals, masses = [], []
    for m, prof, xs in zip(matchings, assign, names):
        if xs is None:
            continue
        mass = [sol[v] for v in xs]
        if any(mass):
            signals.append(MetaSignal(prof, m))
            masses.append(mass)
    return value, PublicPolicy.build(inst, signals, kernel_from_masses(inst, masses))
