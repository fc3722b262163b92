"""Instance transformers between stable matching with ties and persuasion."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import CapacityError, InputError
from .matching import WsmProblem
from .model import (
    Instance,
    JointSignal,
    Matching,
    PreferenceProfile,
    PrivatePolicy,
    blocking_pairs_under_profile,
    induced_row,
)
from .rational import to_fraction

ZERO = Fraction(0)
ONE = Fraction(1)
DUMMY_A = "a'"
DUMMY_B = "b'"


# --------------------------------------------------------------------------
# stable matching with ties and incomplete lists


@dataclass(frozen=True, eq=False)
class SmtiInstance:
    """Incomplete strict lists, plus an optional two-agent tie after the list of an A-agent."""

    side_a: tuple
    side_b: tuple
    prefs: Mapping[str, tuple]
    ties: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        a_set, b_set = set(self.side_a), set(self.side_b)
        if len(a_set) != len(self.side_a) or len(b_set) != len(self.side_b) or a_set & b_set:
            raise InputError("agent identifiers must be unique")
        for x in self.side_a + self.side_b:
            lst = self.prefs.get(x, ())
            other = b_set if x in a_set else a_set
            if len(set(lst)) != len(lst) or any(y not in other for y in lst):
                raise InputError(f"preference list of {x!r} must list distinct agents of the other side")
        for x, tie in self.ties.items():
            if x not in a_set:
                raise InputError(f"tie declared for {x!r}, but ties are allowed on side A only")
            if len(tie) not in (0, 2) or (tie and tie[0] == tie[1]):
                raise InputError(f"tie of {x!r} must contain zero or two agents")
            if any(y not in b_set for y in tie):
                raise InputError(f"tie of {x!r} names an unknown agent")
            if set(tie) & set(self.prefs.get(x, ())):
                raise InputError(f"tie of {x!r} overlaps its strict list")

    @classmethod
    def build(cls, side_a, side_b, prefs, ties=None) -> "SmtiInstance":
        return cls(
            tuple(side_a), tuple(side_b),
            {x: tuple(prefs.get(x, ())) for x in list(side_a) + list(side_b)},
            {a: tuple(t) for a, t in (ties or {}).items() if t},
        )

    def listed(self, x: str, y: str) -> bool:
        return y in self.prefs.get(x, ()) or y in self.ties.get(x, ())

    def mutual(self, a: str, b: str) -> bool:
        return self.listed(a, b) and self.listed(b, a)

    def rank(self, x: str, y: str) -> int:
        lst = self.prefs.get(x, ())
        return lst.index(y) if y in lst else len(lst)

    def prefers(self, x: str, y: str, current) -> bool:
        """Does ``x`` strictly prefer acceptable ``y`` to ``current`` (``None`` = single)?"""
        return current is None or self.rank(x, y) < self.rank(x, current)

    def blocking_pairs(self, matching: Mapping[str, str]) -> list:
        inv = {b: a for a, b in matching.items()}
        out = []
        for a in self.side_a:
            for b in self.side_b:
                if matching.get(a) == b or not self.mutual(a, b):
                    continue
                if self.prefers(a, b, matching.get(a)) and self.prefers(b, a, inv.get(b)):
                    out.append((a, b))
        return out


def max_smti_brute(m: SmtiInstance, leaf_cap: int = 3_000_000) -> tuple[int, dict]:
    """Largest stable matching by exhaustive search over mutually acceptable pairs.

    Branches are cut when two decided agents already block, or when the
    remaining agents cannot beat the best size found so far.
    """
    best = [-1, {}]
    leaves = [0]
    side_a = m.side_a
    options = {a: [b for b in m.side_b if m.mutual(a, b)] for a in side_a}
    rk = {x: {y: m.rank(x, y) for y in (options[x] if x in options else ())} for x in side_a}
    for a in side_a:
        for b in options[a]:
            rk.setdefault(b, {})[a] = m.rank(b, a)
    inf = float("inf")

    def better(x, y, cur):
        return cur is None or rk[x][y] < rk[x][cur]

    def clash(a, b, cur, inv):
        # does fixing a's partner to b (None = single) create a block among decided agents?
        for b2 in options[a]:
            if b2 != b and b2 in inv and better(a, b2, b) and rk[b2][a] < rk[b2][inv[b2]]:
                return True
        if b is not None:
            for a2, c in cur.items():
                if b in rk[a2] and better(a2, b, c) and rk[b][a2] < rk[b][a]:
                    return True
        return False

    def rec(i, cur, inv):
        if i == len(side_a):
            leaves[0] += 1
            if leaves[0] > leaf_cap:
                raise CapacityError("too many partial matchings for brute force")
            if len(cur) > best[0] and not m.blocking_pairs(cur):
                best[0], best[1] = len(cur), dict(cur)
            return
        room = sum(1 for a in side_a[i:] if any(b not in inv for b in options[a]))
        if len(cur) + room <= best[0]:
            return
        a = side_a[i]
        for b in sorted(options[a], key=lambda y: rk[a].get(y, inf)):
            if b not in inv and not clash(a, b, cur, inv):
                cur[a] = b
                inv[b] = a
                rec(i + 1, cur, inv)
                del inv[b]
                del cur[a]
        if not clash(a, None, cur, inv):
            rec(i + 1, cur, inv)

    rec(0, {}, {})
    return best[0], best[1]


@dataclass
class RestrictInfo:
    a_copies: tuple  # one A-agent per (tied agent, tie occurrence)
    a_links: tuple  # occurrences minus one per tied agent


def smti_restrict(m: SmtiInstance) -> tuple[SmtiInstance, RestrictInfo]:
    """Split every B-agent that occurs in ties into one copy per occurrence.

    A B-agent ``b`` in the ties of ``c`` A-agents gets copies ``b#k``, gadget
    agents ``b:a{k}`` and ``b~{k}`` for ``k = 1..c``, and linking agents
    ``b:t{k}`` for ``k = 1..c-1``. Its k-th tying A-agent ties its own copy.
    """
    tiers_of = {b: [a for a in m.side_a if b in m.ties.get(a, ())] for b in m.side_b}
    tied = [b for b in m.side_b if tiers_of[b]]
    copy = {b: [f"{b}#{k}" for k in range(1, len(tiers_of[b]) + 1)] for b in tied}
    a_copy = {b: [f"{b}:a{k}" for k in range(1, len(tiers_of[b]) + 1)] for b in tied}
    tilde_b = {b: [f"{b}~{k}" for k in range(1, len(tiers_of[b]) + 1)] for b in tied}
    tilde_a = {b: [f"{b}:t{k}" for k in range(1, len(tiers_of[b]))] for b in tied}

    side_a = list(m.side_a)
    side_b = [b for b in m.side_b if not tiers_of[b]]
    for b in tied:
        side_b += copy[b] + tilde_b[b]
        side_a += a_copy[b] + tilde_a[b]
    fresh = set(side_a[len(m.side_a):]) | {x for b in tied for x in copy[b] + tilde_b[b]}
    if len(set(side_a) | set(side_b)) != len(side_a) + len(side_b) or fresh & (set(m.side_a) | set(m.side_b)):
        raise InputError("generated agent names collide with existing ones")

    prefs: dict = {}
    ties: dict = {}
    for b in m.side_b:
        if not tiers_of[b]:
            prefs[b] = tuple(m.prefs[b])
    for a in m.side_a:
        lst = []
        for b in m.prefs[a]:
            lst += copy[b] if b in copy else [b]
        prefs[a] = tuple(lst)
        if m.ties.get(a):
            ties[a] = tuple(copy[b][tiers_of[b].index(a)] for b in m.ties[a])
    for b in tied:
        c = len(tiers_of[b])
        for k in range(c):
            prefs[copy[b][k]] = (a_copy[b][k],) + tuple(m.prefs[b])
            prefs[a_copy[b][k]] = (tilde_b[b][k], copy[b][k])
            prefs[tilde_b[b][k]] = tuple(tilde_a[b]) + (a_copy[b][k],)
        for k in range(c - 1):
            prefs[tilde_a[b][k]] = ()
            ties[tilde_a[b][k]] = (tilde_b[b][k], tilde_b[b][k + 1])
    out = SmtiInstance.build(side_a, side_b, prefs, ties)
    info = RestrictInfo(
        tuple(x for b in tied for x in a_copy[b]),
        tuple(x for b in tied for x in tilde_a[b]),
    )
    return out, info


def smti_to_wsm(m: SmtiInstance) -> WsmProblem:
    """Complete the lists and weigh mutually acceptable pairs by 1.

    Entries that are not mutual are dropped first (they can never be matched
    or block). Each list is then extended by the remaining agents of the
    other side in canonical order; the shorter side is padded with dummies.
    """
    n = max(len(m.side_a), len(m.side_b))
    side_a = list(m.side_a) + [f"_pad_a{k}" for k in range(1, n - len(m.side_a) + 1)]
    side_b = list(m.side_b) + [f"_pad_b{k}" for k in range(1, n - len(m.side_b) + 1)]
    if len(set(side_a) | set(side_b)) != 2 * n:
        raise InputError("padding names collide with agent names")
    tiers = {}
    for x in side_a + side_b:
        on_a = x in side_a
        others = side_b if on_a else side_a
        mutual = (lambda y: m.mutual(x, y)) if on_a else (lambda y: m.mutual(y, x))
        head = [(y,) for y in m.prefs.get(x, ()) if mutual(y)]
        tie = tuple(y for y in m.ties.get(x, ()) if mutual(y))
        if tie:
            head.append(tie)
        seen = {y for t in head for y in t}
        tiers[x] = head + [(y,) for y in others if y not in seen]
    weights = {(a, b): (1 if a in m.side_a and b in m.side_b and m.mutual(a, b) else 0) for a in side_a for b in side_b}
    return WsmProblem.build(side_a, side_b, PreferenceProfile(tiers), weights)


# --------------------------------------------------------------------------
# weighted stable matching to private persuasion


def _restricted_shape(w: WsmProblem) -> dict:
    """Return ``a -> tie tier`` after checking the shape the gadget needs."""
    prof = w.profile
    tie_of = {}
    holder = {}
    for a in w.side_a:
        big = [t for t in prof.tiers[a] if len(t) > 1]
        if len(big) > 1 or (big and len(big[0]) != 2):
            raise InputError(f"{a!r} must have at most one tie, of two agents")
        if big:
            tie_of[a] = big[0]
            for b in big[0]:
                if b in holder:
                    raise InputError(f"{b!r} appears in the ties of {holder[b]!r} and {a!r}")
                holder[b] = a
    for b in w.side_b:
        if any(len(t) > 1 for t in prof.tiers[b]):
            raise InputError(f"B-agent {b!r} has a tie; ties are allowed on side A only")
    for (a, b), x in w.weights.items():
        if not 0 <= x <= 1:
            raise InputError(f"weight of ({a!r}, {b!r}) is {x}, outside [0, 1]")
    if DUMMY_A in w.side_a + w.side_b or DUMMY_B in w.side_a + w.side_b:
        raise InputError(f"agent names {DUMMY_A!r} and {DUMMY_B!r} are reserved")
    return tie_of


def _tie_holder(w: WsmProblem, tie_of) -> dict:
    return {b: a for a, t in tie_of.items() for b in t}


def wsm_to_private_persuasion(w: WsmProblem) -> Instance:
    """Two-world persuasion instance whose optimal private policies solve ``w``.

    The tie of an A-agent is ``(u, v)`` best-first; ``u`` is on top in world
    ``w1`` and ``v`` is on top in ``w2``. Tie-free B-agents keep their order
    with world-independent values in ``(2, 3)``.
    """
    tie_of = _restricted_shape(w)
    holder = _tie_holder(w, tie_of)
    n = w.n
    prof = w.profile
    worlds = ("w1", "w2")
    values: dict = {}
    for a in w.side_a:
        row = {}
        worst_first = [t for t in reversed(prof.tiers[a])]
        j = 1
        for tier in worst_first:
            if len(tier) == 1:
                row[tier[0]] = (Fraction(j), Fraction(j))
                j += 1
            else:
                top, low = tier
                row[low] = (j + Fraction(2, 5), j + Fraction(7, 5))
                row[top] = (j + Fraction(3, 5), j - Fraction(2, 5))
                j += 2
        row[DUMMY_B] = (ZERO, ZERO)
        values[a] = row
    for b in w.side_b:
        worst_first = list(reversed(prof.order(b)))
        row = {}
        x = holder.get(b)
        if x is None:
            m = len(worst_first)
            for k, a in enumerate(worst_first, 1):
                v = 2 + Fraction(k, m + 1)
                row[a] = (v, v)
        else:
            j = worst_first.index(x)
            below, above = worst_first[:j], worst_first[j + 1:]
            for k, a in enumerate(below, 1):
                v = Fraction(1, 2) + Fraction(k, 2 * (len(below) + 1))
                row[a] = (v, v)
            for k, a in enumerate(above, 1):
                v = 2 + Fraction(k, len(above) + 1)
                row[a] = (v, v)
            row[x] = (Fraction(2), ZERO)
        row[DUMMY_A] = (Fraction(39, 10), Fraction(39, 10))
        values[b] = row
    values[DUMMY_A] = {b: (-ONE, ONE) for b in w.side_b}
    values[DUMMY_A][DUMMY_B] = (ZERO, ZERO)
    values[DUMMY_B] = {a: (ZERO, ZERO) for a in w.side_a}
    values[DUMMY_B][DUMMY_A] = (ONE, ONE)
    penalty = Fraction(-n)
    utils: dict = {}
    for a in w.side_a:
        utils[a] = {b: (w.weights[(a, b)],) * 2 for b in w.side_b}
        utils[a][DUMMY_B] = (penalty, penalty)
    utils[DUMMY_A] = {b: (penalty, penalty) for b in w.side_b}
    utils[DUMMY_A][DUMMY_B] = (ZERO, ZERO)
    return Instance(
        worlds, (Fraction(4, 5), Fraction(1, 5)),
        tuple(w.side_a) + (DUMMY_A,), tuple(w.side_b) + (DUMMY_B,), values, utils,
    )


def tie_crossing(reduced: Instance, b: str):
    """``p(w2)`` at which ``b`` is indifferent between its tie agent and the agent just below, if any."""
    row = reduced.values[b]
    x = next((a for a in reduced.side_a if a != DUMMY_A and row[a][0] != row[a][1]), None)
    if x is None:
        return None
    lower = [a for a in reduced.side_a if a not in (x, DUMMY_A) and row[a][0] < row[x][0]]
    if not lower:
        return None
    y = max(lower, key=lambda a: row[a][0])
    c = row[y][0]
    # row[x] = (2, 0): 2 (1 - t) = c
    return 1 - c / 2


def _gadget_ties(reduced: Instance) -> dict:
    out = {}
    for a in reduced.side_a:
        if a == DUMMY_A:
            continue
        moving = [b for b in reduced.side_b if b != DUMMY_B and reduced.values[a][b][0] != reduced.values[a][b][1]]
        if moving:
            top = max(moving, key=lambda b: reduced.values[a][b][0])
            out[a] = (top, next(b for b in moving if b != top))
    return out


def gadget_wsm_profile(reduced: Instance) -> PreferenceProfile:
    """The weak profile of the underlying weighted stable matching instance."""
    ties = _gadget_ties(reduced)
    tiers = {}
    core_a = [a for a in reduced.side_a if a != DUMMY_A]
    core_b = [b for b in reduced.side_b if b != DUMMY_B]
    for a in core_a:
        order = sorted(core_b, key=lambda b: (-reduced.values[a][b][0], core_b.index(b)))
        row = []
        for b in order:
            if a in ties and b == ties[a][1]:
                continue
            row.append(ties[a] if a in ties and b == ties[a][0] else (b,))
        tiers[a] = row
    for b in core_b:
        tiers[b] = [(a,) for a in sorted(core_a, key=lambda a: (-reduced.values[b][a][0], core_a.index(a)))]
    return PreferenceProfile(tiers)


def build_proof_policy(reduced: Instance, m_star: Matching, strict_profile: PreferenceProfile) -> PrivatePolicy:
    """The private policy that implements ``m_star`` plus ``(a', b')`` in the gadget.

    A-agents whose tie is resolved against the prior order learn the world,
    and so does the other tie member whenever an A-agent is matched into its
    own tie. Everyone else learns nothing.
    """
    weak = gadget_wsm_profile(reduced)
    core_a = [a for a in reduced.side_a if a != DUMMY_A]
    core_b = [b for b in reduced.side_b if b != DUMMY_B]
    if not strict_profile.is_strict:
        raise InputError("the resolving profile must be strict")
    for x, tiers in weak.tiers.items():
        if x not in strict_profile.tiers:
            raise InputError(f"resolving profile misses {x!r}")
        for k, tier in enumerate(tiers):
            for later in tiers[k + 1:]:
                for y in tier:
                    for z in later:
                        if not strict_profile.prefers(x, y, z):
                            raise InputError(f"resolving profile reverses {x!r}'s order of {y!r} over {z!r}")
    core = Instance(
        reduced.worlds, reduced.prior, tuple(core_a), tuple(core_b),
        {x: {y: reduced.values[x][y] for y in (core_b if x in core_a else core_a)} for x in core_a + core_b},
        {a: {b: reduced.utilities[a][b] for b in core_b} for a in core_a},
    )
    m_star.validate(core)
    blocking = blocking_pairs_under_profile(core, strict_profile, m_star)
    if blocking:
        raise InputError(f"m_star is not stable under the resolving profile; blocking pairs {blocking}")

    ties = _gadget_ties(reduced)
    reveal = set()
    for a, (top, low) in ties.items():
        # at the prior the second tie member is on top (the crossing lies below it)
        if strict_profile.prefers(a, top, low):
            reveal.add(a)
        partner = m_star.partner(a)
        if partner in (top, low):
            reveal.add(low if partner == top else top)
    full = Matching(list(m_star.pairs) + [(DUMMY_A, DUMMY_B)])
    prior = reduced.prior
    signals = []
    for w in reduced.worlds:
        p = reduced.point_mass(w)
        comps = {x: induced_row(reduced, x, p if x in reveal else prior) for x in reduced.agents}
        signals.append(JointSignal(comps, full, tag=w))
    kernel = [[ONE if i == j else ZERO for j in range(2)] for i in range(2)]
    return PrivatePolicy.build(reduced, signals, kernel, (f"revealed: {sorted(reveal)}",))


# --------------------------------------------------------------------------
# multi-receiver persuasion to matching


@dataclass(frozen=True, eq=False)
class PersuasionInstance:
    """Receivers choose one of two actions; ``values[i][j]`` and ``payoff[j]`` are per-world tuples."""

    worlds: tuple
    prior: tuple
    receivers: tuple
    actions: tuple
    values: Mapping[str, Mapping[str, tuple]]
    payoff: Mapping[str, tuple]

    @classmethod
    def build(cls, worlds, prior, receivers, actions, values, payoff) -> "PersuasionInstance":
        worlds = tuple(worlds)
        if len(actions) != 2:
            raise InputError(f"exactly two actions are supported, got {len(actions)}")
        k = len(worlds)

        def vec(e, what):
            e = tuple(to_fraction(x) for x in (e.values() if isinstance(e, Mapping) else e))
            if len(e) != k:
                raise InputError(f"{what} needs {k} entries")
            return e

        prior = vec(prior, "prior")
        if any(q < 0 for q in prior) or sum(prior) != 1:
            raise InputError("prior must be a distribution")
        vals = {i: {j: vec(values[i][j], f"values[{i}][{j}]") for j in actions} for i in receivers}
        pay = {j: vec(payoff[j], f"payoff[{j}]") for j in actions}
        return cls(worlds, prior, tuple(receivers), tuple(actions), vals, pay)


def copy_name(action: str, receiver: str) -> str:
    return f"{action}@{receiver}"


def dummy_name(receiver: str) -> str:
    return f"d:{receiver}"


def persuasion_to_matching(pp: PersuasionInstance, noise=0, seed=0) -> Instance:
    """Matching instance whose stable matchings pair receivers with best actions.

    Every receiver owns one copy of each action and ranks its own copies by
    its original values, above everything else. A dummy per receiver takes
    the copy that receiver leaves. All values other than the receivers' own
    copies are world-independent and strictly ordered; ``noise > 0`` adds
    world-dependent perturbations below a quarter of their spacing.
    """
    if len(pp.actions) != 2:
        raise InputError("exactly two actions are supported")
    k = len(pp.worlds)
    recv = pp.receivers
    side_a = tuple(recv) + tuple(dummy_name(i) for i in recv)
    side_b = tuple(copy_name(j, i) for i in recv for j in pp.actions)
    if len(set(side_a) | set(side_b)) != len(side_a) + len(side_b):
        raise InputError("generated agent names collide")
    noise = to_fraction(noise)
    rng = random.Random(seed)

    def const(v):
        if not noise:
            return (v,) * k
        return tuple(v + noise * Fraction(rng.randint(-999, 999), 4000) for _ in range(k))

    values: dict = {}
    for i in recv:
        own = {copy_name(j, i): pp.values[i][j] for j in pp.actions}
        low = min(min(v) for v in own.values()) - 1
        row = dict(own)
        others = [c for c in side_b if c not in own]
        for r, c in enumerate(others, 1):
            row[c] = const(low - r)
        values[i] = row
    for i in recv:
        d = dummy_name(i)
        row = {}
        own = [copy_name(j, i) for j in pp.actions]
        for r, c in enumerate(own):
            row[c] = const(Fraction(2 - r))
        for r, c in enumerate([c for c in side_b if c not in own], 1):
            row[c] = const(Fraction(-r))
        values[d] = row
    for i in recv:
        for j in pp.actions:
            c = copy_name(j, i)
            row = {i: const(Fraction(3)), dummy_name(i): const(Fraction(2))}
            rest_d = [dummy_name(x) for x in recv if x != i]
            rest_r = [x for x in recv if x != i]
            for r, x in enumerate(rest_d, 1):
                row[x] = const(1 - Fraction(r, len(recv) + 1))
            for r, x in enumerate(rest_r, 1):
                row[x] = const(-Fraction(r, len(recv) + 1))
            values[c] = row
    zero = (ZERO,) * k
    utils = {a: {b: zero for b in side_b} for a in side_a}
    for i in recv:
        for j in pp.actions:
            utils[i][copy_name(j, i)] = pp.payoff[j]
    return Instance(pp.worlds, pp.prior, side_a, side_b, values, utils)
