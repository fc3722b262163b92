"""Instances, matchings, preference profiles, policies and their predicates.

Posteriors are tuples of Fractions aligned with ``Instance.worlds``. Agents
are plain string identifiers; the order of ``side_a`` and ``side_b`` is the
canonical order used for deterministic output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import InputError, UnreachableSignalError
from .rational import to_fraction

ZERO = Fraction(0)
ONE = Fraction(1)

Posterior = tuple  # tuple[Fraction, ...] aligned with Instance.worlds


def _per_world(worlds, entry, what) -> tuple:
    if isinstance(entry, Mapping):
        missing = [w for w in worlds if w not in entry]
        extra = [w for w in entry if w not in worlds]
        if missing or extra:
            raise InputError(f"{what}: world keys mismatch (missing {missing}, unknown {extra})")
        return tuple(to_fraction(entry[w]) for w in worlds)
    vals = tuple(to_fraction(e) for e in entry)
    if len(vals) != len(worlds):
        raise InputError(f"{what}: expected {len(worlds)} per-world entries, got {len(vals)}")
    return vals


@dataclass(frozen=True, eq=False)
class Instance:
    """A matching market with a prior over worlds.

    ``values[x][y]`` and ``utilities[a][b]`` are per-world tuples.
    """

    worlds: tuple
    prior: tuple
    side_a: tuple
    side_b: tuple
    values: Mapping[str, Mapping[str, tuple]]
    utilities: Mapping[str, Mapping[str, tuple]]

    def __post_init__(self):
        object.__setattr__(self, "_a_set", frozenset(self.side_a))
        if not self.worlds:
            raise InputError("instance needs at least one world")
        if len(set(self.worlds)) != len(self.worlds):
            raise InputError("duplicate world identifiers")
        if len(self.prior) != len(self.worlds):
            raise InputError("prior length does not match worlds")
        if any(q < 0 for q in self.prior) or sum(self.prior) != 1:
            raise InputError(f"prior must be nonnegative and sum to 1, got {[str(q) for q in self.prior]}")
        n = len(self.side_a)
        if n < 1 or n != len(self.side_b):
            raise InputError(f"sides must have equal positive size, got {n} and {len(self.side_b)}")
        everyone = list(self.side_a) + list(self.side_b)
        if len(set(everyone)) != 2 * n:
            raise InputError("agent identifiers must be unique across both sides")
        k = len(self.worlds)
        for x in everyone:
            others = self.side_b if x in self._a_set else self.side_a
            row = self.values.get(x)
            if row is None:
                raise InputError(f"missing values for agent {x!r}")
            for y in others:
                if y not in row or len(row[y]) != k:
                    raise InputError(f"missing values for pair ({x!r}, {y!r})")
        for a in self.side_a:
            row = self.utilities.get(a)
            for b in self.side_b:
                if row is None or b not in row or len(row[b]) != k:
                    raise InputError(f"missing principal utility for pair ({a!r}, {b!r})")

    @classmethod
    def build(cls, worlds, prior, side_a, side_b, values, utilities) -> "Instance":
        """Construct from nested maps; per-world entries may be maps or sequences."""
        worlds = tuple(worlds)
        prior = _per_world(worlds, prior, "prior")
        vals = {
            x: {y: _per_world(worlds, e, f"values[{x}][{y}]") for y, e in row.items()}
            for x, row in values.items()
        }
        utils = {
            a: {b: _per_world(worlds, e, f"utilities[{a}][{b}]") for b, e in row.items()}
            for a, row in utilities.items()
        }
        return cls(worlds, prior, tuple(side_a), tuple(side_b), vals, utils)

    @property
    def n(self) -> int:
        return len(self.side_a)

    @property
    def agents(self) -> tuple:
        return self.side_a + self.side_b

    def on_side_a(self, x: str) -> bool:
        if x in self._a_set:
            return True
        if x in self.side_b:
            return False
        raise InputError(f"unknown agent {x!r}")

    def opposite(self, x: str) -> tuple:
        return self.side_b if self.on_side_a(x) else self.side_a

    def world_index(self, w) -> int:
        try:
            return self.worlds.index(w)
        except ValueError:
            raise InputError(f"unknown world {w!r}") from None

    def point_mass(self, w) -> Posterior:
        i = self.world_index(w)
        return tuple(ONE if j == i else ZERO for j in range(len(self.worlds)))

    def value(self, x: str, y: str, p: Posterior) -> Fraction:
        return value_under_posterior(self, x, y, p)

    def utility(self, matching: "Matching", w: int) -> Fraction:
        """u(M | world index w)."""
        return sum((self.utilities[a][b][w] for a, b in matching.pairs), ZERO)

    def replace(self, **changes) -> "Instance":
        fields_ = dict(
            worlds=self.worlds, prior=self.prior, side_a=self.side_a, side_b=self.side_b,
            values=self.values, utilities=self.utilities,
        )
        fields_.update(changes)
        return Instance(**fields_)


def check_posterior(inst: Instance, p) -> Posterior:
    if isinstance(p, Mapping):
        p = _per_world(inst.worlds, p, "posterior")
    p = tuple(to_fraction(q) for q in p)
    if len(p) != len(inst.worlds):
        raise InputError("posterior length does not match worlds")
    if any(q < 0 for q in p) or sum(p) != 1:
        raise InputError(f"invalid posterior {[str(q) for q in p]}")
    return p


def value_under_posterior(inst: Instance, x: str, y: str, p: Posterior) -> Fraction:
    """Expected value ``v_x(y|p)``."""
    row = inst.values.get(x)
    if row is None:
        raise InputError(f"unknown agent {x!r}")
    vec = row.get(y)
    if vec is None:
        raise InputError(f"{y!r} is not on the opposite side of {x!r}")
    if len(p) != len(vec):
        raise InputError("posterior length does not match worlds")
    return sum((q * v for q, v in zip(p, vec) if q), ZERO)


# --------------------------------------------------------------------------
# matchings and profiles


class Matching:
    """A perfect matching between the two sides, stored as ``a -> b``."""

    __slots__ = ("_ab", "_ba", "_key")

    def __init__(self, pairs: Mapping[str, str] | Iterable[tuple[str, str]]):
        items = list(pairs.items()) if isinstance(pairs, Mapping) else list(pairs)
        ab, ba = {}, {}
        for a, b in items:
            if a in ab or b in ba:
                raise InputError(f"matching is not injective at ({a!r}, {b!r})")
            ab[a] = b
            ba[b] = a
        self._ab = ab
        self._ba = ba
        self._key = frozenset(ab.items())

    @property
    def pairs(self) -> tuple:
        return tuple(self._ab.items())

    def partner(self, x: str) -> str:
        if x in self._ab:
            return self._ab[x]
        if x in self._ba:
            return self._ba[x]
        raise InputError(f"agent {x!r} is not matched")

    def as_dict(self) -> dict:
        return dict(self._ab)

    def validate(self, inst: Instance) -> "Matching":
        if set(self._ab) != set(inst.side_a) or set(self._ba) != set(inst.side_b):
            raise InputError("matching is not a bijection between the instance's sides")
        return self

    def encoding(self, inst: Instance) -> tuple:
        """Partner indices in canonical order; used for lexicographic tie-breaking."""
        return tuple(inst.side_b.index(self._ab[a]) for a in inst.side_a)

    def __eq__(self, other):
        return isinstance(other, Matching) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return "Matching({" + ", ".join(f"{a}: {b}" for a, b in self._ab.items()) + "})"


def all_matchings(inst: Instance):
    from itertools import permutations

    for perm in permutations(inst.side_b):
        yield Matching(zip(inst.side_a, perm))


class PreferenceProfile:
    """Total preorders stored as ranked tiers, most preferred tier first."""

    __slots__ = ("tiers", "_rank", "_key")

    def __init__(self, tiers: Mapping[str, Sequence[Sequence[str]]]):
        self.tiers = {x: tuple(tuple(t) for t in ts) for x, ts in tiers.items()}
        self._rank = {}
        for x, ts in self.tiers.items():
            r = {}
            for k, tier in enumerate(ts):
                if not tier:
                    raise InputError(f"empty tier in profile of {x!r}")
                for y in tier:
                    if y in r:
                        raise InputError(f"{y!r} appears twice in profile of {x!r}")
                    r[y] = k
            self._rank[x] = r
        self._key = tuple(sorted(self.tiers.items()))

    @classmethod
    def strict(cls, orders: Mapping[str, Sequence[str]]) -> "PreferenceProfile":
        """From best-first lists."""
        return cls({x: [(y,) for y in order] for x, order in orders.items()})

    @property
    def is_strict(self) -> bool:
        return all(len(t) == 1 for ts in self.tiers.values() for t in ts)

    def rank(self, x: str, y: str) -> int:
        return self._rank[x][y]

    def prefers(self, x: str, y: str, z: str) -> bool:
        """True iff ``x`` strictly prefers ``y`` to ``z``."""
        r = self._rank[x]
        return r[y] < r[z]

    def order(self, x: str) -> tuple:
        """Flattened best-first order (ties kept in stored order)."""
        return tuple(y for t in self.tiers[x] for y in t)

    def validate(self, inst: Instance) -> "PreferenceProfile":
        for x in inst.agents:
            if x not in self.tiers:
                raise InputError(f"profile misses agent {x!r}")
            if set(self._rank[x]) != set(inst.opposite(x)):
                raise InputError(f"profile of {x!r} does not partition the opposite side")
        return self

    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, PreferenceProfile) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        parts = []
        for x, ts in self.tiers.items():
            parts.append(f"{x}: " + " > ".join("~".join(t) for t in ts))
        return "PreferenceProfile(" + "; ".join(parts) + ")"


def tiers_from_values(others: Sequence[str], vals: Sequence[Fraction]) -> tuple:
    """Group ``others`` into best-first tiers by value; ties keep input order."""
    order = sorted(range(len(others)), key=lambda k: -vals[k])
    tiers = []
    last = None
    for k in order:
        if tiers and vals[k] == last:
            tiers[-1].append(others[k])
        else:
            tiers.append([others[k]])
            last = vals[k]
    return tuple(tuple(t) for t in tiers)


def induced_row(inst: Instance, x: str, p: Posterior) -> tuple:
    others = inst.opposite(x)
    return tiers_from_values(others, [value_under_posterior(inst, x, y, p) for y in others])


def induced_profile(inst: Instance, p: Posterior, tie_break: PreferenceProfile | None = None) -> PreferenceProfile:
    """The weak profile a posterior induces, optionally refined by a strict template."""
    p = check_posterior(inst, p)
    tiers = {x: induced_row(inst, x, p) for x in inst.agents}
    if tie_break is None:
        return PreferenceProfile(tiers)
    if not tie_break.is_strict:
        raise InputError("tie_break template must be a strict profile")
    refined = {}
    for x, ts in tiers.items():
        if x not in tie_break.tiers:
            raise InputError(f"tie_break template misses agent {x!r}")
        order = [y for t in ts for y in sorted(t, key=lambda y: tie_break.rank(x, y))]
        for y, z in zip(order, order[1:]):
            if tie_break.prefers(x, z, y):
                raise InputError(f"tie_break contradicts the induced order of {x!r} on ({y!r}, {z!r})")
        refined[x] = [(y,) for y in order]
    return PreferenceProfile(refined)


# --------------------------------------------------------------------------
# stability


def blocking_pairs(inst: Instance, matching: Matching, p: Posterior) -> list:
    """Pairs in which both agents strictly prefer each other at posterior ``p``."""
    return blocking_pairs_private(inst, matching, lambda x: p)


def blocking_pairs_private(inst: Instance, matching: Matching, posterior_of) -> list:
    """Blocking pairs when agent ``x`` evaluates values at ``posterior_of(x)``."""
    vals = {}
    for x in inst.agents:
        p = posterior_of(x)
        vals[x] = {y: value_under_posterior(inst, x, y, p) for y in inst.opposite(x)}
    out = []
    for a in inst.side_a:
        ma = matching.partner(a)
        va = vals[a]
        for b in inst.side_b:
            if b == ma:
                continue
            if va[b] > va[ma] and vals[b][a] > vals[b][matching.partner(b)]:
                out.append((a, b))
    return out


def is_stable_matching(inst: Instance, matching: Matching, p: Posterior) -> tuple[bool, list]:
    """Weak stability at a common posterior. Returns ``(stable, blocking_pairs)``."""
    p = check_posterior(inst, p)
    matching.validate(inst)
    pairs = blocking_pairs(inst, matching, p)
    return (not pairs, pairs)


def blocking_pairs_under_profile(inst: Instance, profile: PreferenceProfile, matching: Matching) -> list:
    """Pairs that block ``matching`` under the declared order relations."""
    out = []
    for a in inst.side_a:
        ma = matching.partner(a)
        for b in inst.side_b:
            if b != ma and profile.prefers(a, b, ma) and profile.prefers(b, a, matching.partner(b)):
                out.append((a, b))
    return out


def stable_under_profile(inst: Instance, profile: PreferenceProfile, matching: Matching) -> bool:
    return not blocking_pairs_under_profile(inst, profile, matching)


# --------------------------------------------------------------------------
# policies


@dataclass(frozen=True)
class MetaSignal:
    profile: PreferenceProfile | None
    matching: Matching
    tag: Hashable | None = None


@dataclass(frozen=True)
class JointSignal:
    components: Mapping[str, Hashable]
    matching: Matching
    tag: Hashable | None = None


def _check_kernel(inst: Instance, n_signals: int, kernel) -> tuple:
    k = len(inst.worlds)
    rows = tuple(tuple(to_fraction(q) for q in row) for row in kernel)
    if len(rows) != n_signals:
        raise InputError("kernel needs one row per signal")
    for row in rows:
        if len(row) != k or any(q < 0 for q in row):
            raise InputError("kernel rows must be nonnegative with one entry per world")
    for w in range(k):
        if sum(row[w] for row in rows) != 1:
            raise InputError(f"kernel column for world {inst.worlds[w]!r} does not sum to 1")
    return rows


@dataclass(frozen=True, eq=False)
class PublicPolicy:
    """``kernel[s][w]`` is the probability of signal ``s`` in world ``w``."""

    signals: tuple
    kernel: tuple
    notes: tuple = field(default=())

    @classmethod
    def build(cls, inst: Instance, signals, kernel, notes=()) -> "PublicPolicy":
        signals = tuple(signals)
        for s in signals:
            s.matching.validate(inst)
            if s.profile is not None:
                s.profile.validate(inst)
        return cls(signals, _check_kernel(inst, len(signals), kernel), tuple(notes))

    mode = "public"


@dataclass(frozen=True, eq=False)
class PrivatePolicy:
    signals: tuple
    kernel: tuple
    notes: tuple = field(default=())

    @classmethod
    def build(cls, inst: Instance, signals, kernel, notes=()) -> "PrivatePolicy":
        signals = tuple(signals)
        for s in signals:
            s.matching.validate(inst)
            missing = [x for x in inst.agents if x not in s.components]
            if missing:
                raise InputError(f"joint signal lacks components for {missing}")
        return cls(signals, _check_kernel(inst, len(signals), kernel), tuple(notes))

    mode = "private"


def signal_mass(inst: Instance, policy, s: int) -> tuple:
    """Per-world joint mass ``mu(w) sigma(s|w)``."""
    return tuple(m * q for m, q in zip(inst.prior, policy.kernel[s]))


def signal_probability(inst: Instance, policy, s: int) -> Fraction:
    return sum(signal_mass(inst, policy, s), ZERO)


def _normalize(mass, what) -> Posterior:
    total = sum(mass, ZERO)
    if total == 0:
        raise UnreachableSignalError(f"{what} has zero marginal probability")
    return tuple(m / total for m in mass)


def posterior_of_metasignal(inst: Instance, policy: PublicPolicy, s: int) -> Posterior:
    if not 0 <= s < len(policy.signals):
        raise InputError(f"no signal with index {s}")
    return _normalize(signal_mass(inst, policy, s), f"meta-signal {s}")


def private_posterior(inst: Instance, policy: PrivatePolicy, x: str, component, matching: Matching) -> Posterior:
    """Posterior of agent ``x`` after observing ``(component, matching)``."""
    inst.on_side_a(x)
    mass = [ZERO] * len(inst.worlds)
    for s, sig in enumerate(policy.signals):
        if sig.components[x] == component and sig.matching == matching:
            for w, m in enumerate(signal_mass(inst, policy, s)):
                mass[w] += m
    return _normalize(mass, f"observation of agent {x!r}")


@dataclass
class PolicyCheck:
    """Verdict of :func:`is_stable_policy`; truthy when the policy is stable."""

    ok: bool
    signal: int | None = None
    blocking: list = field(default_factory=list)
    posterior: object = None

    def __bool__(self):
        return self.ok


def _private_posterior_table(inst: Instance, policy: PrivatePolicy) -> dict:
    """Map (agent, component, matching) -> posterior, over reachable observations."""
    mass: dict = {}
    k = len(inst.worlds)
    for s, sig in enumerate(policy.signals):
        m = signal_mass(inst, policy, s)
        if not any(m):
            continue
        for x in inst.agents:
            key = (x, sig.components[x], sig.matching)
            acc = mass.setdefault(key, [ZERO] * k)
            for w in range(k):
                acc[w] += m[w]
    return {key: _normalize(acc, "observation") for key, acc in mass.items()}


def is_stable_policy(inst: Instance, policy) -> PolicyCheck:
    """Every reachable signal's matching is stable at its posterior(s)."""
    if isinstance(policy, PrivatePolicy):
        table = _private_posterior_table(inst, policy)
        for s, sig in enumerate(policy.signals):
            if signal_probability(inst, policy, s) == 0:
                continue
            post = {x: table[(x, sig.components[x], sig.matching)] for x in inst.agents}
            pairs = blocking_pairs_private(inst, sig.matching, post.__getitem__)
            if pairs:
                return PolicyCheck(False, s, pairs, post)
        return PolicyCheck(True)
    for s, sig in enumerate(policy.signals):
        if signal_probability(inst, policy, s) == 0:
            continue
        p = posterior_of_metasignal(inst, policy, s)
        pairs = blocking_pairs(inst, sig.matching, p)
        if pairs:
            return PolicyCheck(False, s, pairs, p)
    return PolicyCheck(True)


def row_contains(inst: Instance, x: str, tiers, p: Posterior) -> bool:
    """Do the values of ``x`` at ``p`` respect the best-first ``tiers``?"""
    vals = [[value_under_posterior(inst, x, y, p) for y in t] for t in tiers]
    for t in vals:
        if any(v != t[0] for v in t):
            return False
    for better, worse in zip(vals, vals[1:]):
        if better[0] < worse[0]:
            return False
    return True


def in_cell(inst: Instance, profile: PreferenceProfile, p: Posterior) -> bool:
    """``p`` lies in the closed cell of ``profile``."""
    return all(row_contains(inst, x, profile.tiers[x], p) for x in inst.agents)


def is_indicative(inst: Instance, policy) -> bool:
    """Each reachable signal's posterior lies in the cell it declares.

    For private policies every agent's component must be its own best-first
    tier tuple, checked against that agent's private posterior.
    """
    if isinstance(policy, PrivatePolicy):
        table = _private_posterior_table(inst, policy)
        for s, sig in enumerate(policy.signals):
            if signal_probability(inst, policy, s) == 0:
                continue
            for x in inst.agents:
                comp = sig.components[x]
                if not isinstance(comp, tuple) or not all(isinstance(t, tuple) for t in comp):
                    raise InputError(f"component of {x!r} in signal {s} is not a preference row")
                if not row_contains(inst, x, comp, table[(x, comp, sig.matching)]):
                    return False
        return True
    for s, sig in enumerate(policy.signals):
        if sig.profile is None:
            raise InputError(f"meta-signal {s} carries no preference profile")
        if signal_probability(inst, policy, s) == 0:
            continue
        if not in_cell(inst, sig.profile, posterior_of_metasignal(inst, policy, s)):
            return False
    return True


def policy_utility(inst: Instance, policy) -> Fraction:
    total = ZERO
    for s, sig in enumerate(policy.signals):
        for w, m in enumerate(signal_mass(inst, policy, s)):
            if m:
                total += m * inst.utility(sig.matching, w)
    return total


def is_bayes_plausible(inst: Instance, policy) -> bool:
    """Signal-weighted posteriors average back to the prior."""
    acc = [ZERO] * len(inst.worlds)
    for s in range(len(policy.signals)):
        for w, m in enumerate(signal_mass(inst, policy, s)):
            acc[w] += m
    return tuple(acc) == tuple(inst.prior)


def kernel_from_masses(inst: Instance, masses: Sequence[Sequence[Fraction]]) -> list:
    """Turn per-signal joint masses ``mu(w) sigma(s|w)`` into a kernel.

    Worlds with zero prior send the first signal deterministically.
    """
    k = len(inst.worlds)
    kernel = [[ZERO] * k for _ in masses]
    for w in range(k):
        mu = inst.prior[w]
        if mu == 0:
            if kernel:
                kernel[0][w] = ONE
            continue
        for s, m in enumerate(masses):
            kernel[s][w] = m[w] / mu
    return kernel
