"""Stable matching: Gale-Shapley, weighted stable matching by LP, and brute force."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Mapping, Sequence

from .errors import CapacityError, InputError, InvariantError
from .lp import LinearProgram, OPTIMAL, lp_solve
from .model import Instance, Matching, PreferenceProfile, Posterior, induced_profile
from .rational import to_fraction

ZERO = Fraction(0)
DEFAULT_BRUTE_CAP = 7


@dataclass(frozen=True, eq=False)
class WsmProblem:
    """Weighted stable matching: maximize total pair weight over stable matchings."""

    side_a: tuple
    side_b: tuple
    profile: PreferenceProfile
    weights: Mapping[tuple, Fraction]

    @classmethod
    def build(cls, side_a, side_b, profile, weights=None) -> "WsmProblem":
        side_a, side_b = tuple(side_a), tuple(side_b)
        if len(side_a) != len(side_b) or not side_a:
            raise InputError("sides must be nonempty and of equal size")
        for x, others in [(a, side_b) for a in side_a] + [(b, side_a) for b in side_b]:
            if x not in profile.tiers or set(profile.order(x)) != set(others):
                raise InputError(f"profile of {x!r} must rank exactly the opposite side")
        w = {}
        for a in side_a:
            for b in side_b:
                w[(a, b)] = to_fraction((weights or {}).get((a, b), 0))
        return cls(side_a, side_b, profile, w)

    @property
    def n(self) -> int:
        return len(self.side_a)

    def value(self, matching: Matching) -> Fraction:
        return sum((self.weights[p] for p in matching.pairs), ZERO)

    def blocking_pairs(self, matching: Matching) -> list:
        prof = self.profile
        out = []
        for a in self.side_a:
            ma = matching.partner(a)
            for b in self.side_b:
                if b != ma and prof.prefers(a, b, ma) and prof.prefers(b, a, matching.partner(b)):
                    out.append((a, b))
        return out

    def is_stable(self, matching: Matching) -> bool:
        return not self.blocking_pairs(matching)


def wsm_problem_at(inst: Instance, p: Posterior, weights=None) -> WsmProblem:
    """The WSM instance induced by a common posterior; weights default to expected utility."""
    if weights is None:
        weights = {
            (a, b): sum((q * u for q, u in zip(p, inst.utilities[a][b])), ZERO)
            for a in inst.side_a
            for b in inst.side_b
        }
    return WsmProblem.build(inst.side_a, inst.side_b, induced_profile(inst, p), weights)


def gale_shapley(profile: PreferenceProfile, side_a: Sequence[str], side_b: Sequence[str]) -> Matching:
    """The A-proposing stable matching for strict complete preferences."""
    if not profile.is_strict:
        raise InputError("gale_shapley needs strict preferences; use wsm_brute for ties")
    WsmProblem.build(side_a, side_b, profile)  # validates coverage
    nxt = {a: 0 for a in side_a}
    holds: dict[str, str] = {}
    free = list(side_a)
    while free:
        a = free.pop(0)
        b = profile.order(a)[nxt[a]]
        nxt[a] += 1
        cur = holds.get(b)
        if cur is None:
            holds[b] = a
        elif profile.prefers(b, a, cur):
            holds[b] = a
            free.append(cur)
        else:
            free.append(a)
    partner = {a: b for b, a in holds.items()}
    return Matching([(a, partner[a]) for a in side_a])


def _stable_matching_lp(prob: WsmProblem) -> tuple[LinearProgram, dict]:
    lp = LinearProgram("stable-matching-polytope")
    var = {}
    for i, a in enumerate(prob.side_a):
        for j, b in enumerate(prob.side_b):
            var[(a, b)] = lp.add_variable(f"x_{i}_{j}")
    for a in prob.side_a:
        lp.add_constraint({var[(a, b)]: 1 for b in prob.side_b}, "=", 1, f"row_{a}")
    for b in prob.side_b:
        lp.add_constraint({var[(a, b)]: 1 for a in prob.side_a}, "=", 1, f"col_{b}")
    prof = prob.profile
    for a in prob.side_a:
        for b in prob.side_b:
            coeffs = {var[(a, b)]: 1}
            for b2 in prob.side_b:
                if prof.prefers(a, b2, b):
                    coeffs[var[(a, b2)]] = 1
            for a2 in prob.side_a:
                if prof.prefers(b, a2, a):
                    coeffs[var[(a2, b)]] = 1
            lp.add_constraint(coeffs, ">=", 1, f"stab_{a}_{b}")
    return lp, var


def _extract_integral(prob: WsmProblem, assignment, var) -> Matching:
    pairs = []
    for (a, b), v in var.items():
        x = assignment[v]
        if x not in (0, 1):
            raise InvariantError(f"fractional stable-matching vertex: x[{a},{b}] = {x}")
        if x == 1:
            pairs.append((a, b))
    m = Matching(sorted(pairs, key=lambda ab: prob.side_a.index(ab[0])))
    if len(pairs) != prob.n:
        raise InvariantError("stable-matching LP vertex is not a perfect matching")
    return m


def wsm_strict(prob: WsmProblem) -> tuple[Matching, Fraction]:
    """Maximum-weight stable matching for strict preferences via the stable-matching polytope.

    Among optimal matchings the lexicographically smallest partner-index
    vector (in canonical agent order) is returned. It is found by a second LP
    over the optimal face, which is again an integral polytope.
    """
    if not prob.profile.is_strict:
        raise InputError("wsm_strict needs strict preferences")
    lp, var = _stable_matching_lp(prob)
    lp.set_objective({var[p]: w for p, w in prob.weights.items()})
    res = lp_solve(lp)
    if res.status != OPTIMAL:
        raise InvariantError(f"stable-matching LP is {res.status}")
    best = res.value
    _extract_integral(prob, res.assignment, var)

    n = prob.n
    lp.add_constraint({var[p]: w for p, w in prob.weights.items()}, ">=", best, "optimal_face")
    lp.set_objective(
        {var[(a, b)]: -(j * n ** (n - 1 - i)) for i, a in enumerate(prob.side_a) for j, b in enumerate(prob.side_b)}
    )
    res = lp_solve(lp)
    if res.status != OPTIMAL:
        raise InvariantError(f"tie-breaking LP is {res.status}")
    m = _extract_integral(prob, res.assignment, var)
    if prob.value(m) != best or prob.blocking_pairs(m):
        raise InvariantError("tie-breaking step lost optimality or stability")
    return m, best


def wsm_brute(prob: WsmProblem, cap: int = DEFAULT_BRUTE_CAP) -> tuple[Matching, Fraction]:
    """Exhaustive weighted stable matching; ties in the profile are allowed."""
    n = prob.n
    if n > cap:
        raise CapacityError(f"wsm_brute limited to n <= {cap}, got {n}")
    best = None
    for perm in permutations(range(n)):
        m = Matching([(prob.side_a[i], prob.side_b[j]) for i, j in enumerate(perm)])
        if prob.blocking_pairs(m):
            continue
        val = prob.value(m)
        if best is None or val > best[1]:
            best = (m, val)
    if best is None:
        raise InvariantError("no weakly stable matching found; weak stability always admits one")
    return best
