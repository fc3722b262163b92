"""Type-based persuasion: prototypes, count-matrix vertices and the typed LPs.

Agents of one type share values and principal utilities, so a matching is
summarized by its count matrix ``M[s][t]``. Stability of a count matrix at a
posterior only depends on which type pairs occur in it.

Both solvers describe the stable region of a count matrix by *literals*. The
literal ``(side, x, cur, other)`` says that an agent of type ``x`` matched to
type ``cur`` does not strictly prefer type ``other``; it is the halfspace
``sum_w p(w) d(w) <= 0`` with ``d = v_x(other) - v_x(cur)``. For every A-subtype
``(s, t')`` and B-subtype ``(t, s')`` occurring in ``M`` with ``t != t'`` and
``s != s'`` one of the two literals ``(A, s, t', t)`` and ``(B, t, s', s)`` must
hold. A public signal carries a set of literals covering every such clause;
a private signal carries one literal set per subtype.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Mapping

from .errors import CapacityError, InputError, InvariantError
from .lp import OPTIMAL, LinearProgram, Polytope, enumerate_vertices, is_feasible, lp_solve
from .model import (
    Instance,
    JointSignal,
    Matching,
    MetaSignal,
    PreferenceProfile,
    PrivatePolicy,
    PublicPolicy,
    _per_world,
    kernel_from_masses,
    tiers_from_values,
)
from .rational import to_fraction

ZERO = Fraction(0)
DEFAULT_TYPE_CAP = 5
DEFAULT_EXPAND_CAP = 10_000
DEFAULT_TUPLE_CAP = 50_000


@dataclass(frozen=True, eq=False)
class TypedInstance:
    worlds: tuple
    prior: tuple
    a_types: tuple
    b_types: tuple
    sizes: Mapping[str, int]
    values: Mapping[str, Mapping[str, tuple]]
    utilities: Mapping[str, Mapping[str, tuple]]

    def __post_init__(self):
        if not self.worlds or len(set(self.worlds)) != len(self.worlds):
            raise InputError("worlds must be nonempty and distinct")
        if len(self.prior) != len(self.worlds) or any(q < 0 for q in self.prior) or sum(self.prior) != 1:
            raise InputError("prior must be nonnegative, one entry per world, summing to 1")
        if not self.a_types or not self.b_types:
            raise InputError("each side needs at least one type")
        names = list(self.a_types) + list(self.b_types)
        if len(set(names)) != len(names):
            raise InputError("type names must be unique across both sides")
        for t in names:
            eta = self.sizes.get(t)
            if not isinstance(eta, int) or isinstance(eta, bool) or eta < 1:
                raise InputError(f"size of type {t!r} must be a positive integer")
        if sum(self.sizes[s] for s in self.a_types) != sum(self.sizes[t] for t in self.b_types):
            raise InputError("the two sides must have equal total size")
        k = len(self.worlds)
        for x, others in [(s, self.b_types) for s in self.a_types] + [(t, self.a_types) for t in self.b_types]:
            for y in others:
                if len(self.values.get(x, {}).get(y, ())) != k:
                    raise InputError(f"missing values for type pair ({x!r}, {y!r})")
        for s in self.a_types:
            for t in self.b_types:
                if len(self.utilities.get(s, {}).get(t, ())) != k:
                    raise InputError(f"missing principal utility for ({s!r}, {t!r})")

    @classmethod
    def build(cls, worlds, prior, a_sizes, b_sizes, values, utilities) -> "TypedInstance":
        worlds = tuple(worlds)
        sizes = {}
        for t, eta in list(a_sizes.items()) + list(b_sizes.items()):
            if isinstance(eta, str) and eta.strip().isdigit():
                eta = int(eta)
            sizes[t] = eta
        vals = {x: {y: _per_world(worlds, e, f"values[{x}][{y}]") for y, e in row.items()} for x, row in values.items()}
        utils = {
            s: {t: _per_world(worlds, e, f"utilities[{s}][{t}]") for t, e in row.items()} for s, row in utilities.items()
        }
        return cls(worlds, _per_world(worlds, prior, "prior"), tuple(a_sizes), tuple(b_sizes), sizes, vals, utils)

    @property
    def n(self) -> int:
        return sum(self.sizes[s] for s in self.a_types)

    def scaled(self, factor: int) -> "TypedInstance":
        return TypedInstance(
            self.worlds, self.prior, self.a_types, self.b_types,
            {t: eta * factor for t, eta in self.sizes.items()}, self.values, self.utilities,
        )


@dataclass(frozen=True, order=True)
class PrototypeMatching:
    """Count matrix indexed ``counts[i][j]`` by A-type and B-type position."""

    counts: tuple

    def support(self) -> frozenset:
        return frozenset((i, j) for i, row in enumerate(self.counts) for j, c in enumerate(row) if c)

    def as_dict(self, ti: TypedInstance) -> dict:
        return {
            (s, t): self.counts[i][j]
            for i, s in enumerate(ti.a_types)
            for j, t in enumerate(ti.b_types)
            if self.counts[i][j]
        }

    def validate(self, ti: TypedInstance) -> "PrototypeMatching":
        if len(self.counts) != len(ti.a_types) or any(len(r) != len(ti.b_types) for r in self.counts):
            raise InputError("count matrix has the wrong shape")
        for i, s in enumerate(ti.a_types):
            if sum(self.counts[i]) != ti.sizes[s]:
                raise InputError(f"row sum of {s!r} differs from its size")
        for j, t in enumerate(ti.b_types):
            if sum(r[j] for r in self.counts) != ti.sizes[t]:
                raise InputError(f"column sum of {t!r} differs from its size")
        if any(c < 0 or int(c) != c for r in self.counts for c in r):
            raise InputError("counts must be nonnegative integers")
        return self


def _check_cap(ti: TypedInstance, cap: int) -> None:
    if max(len(ti.a_types), len(ti.b_types)) > cap:
        raise CapacityError(f"number of types per side exceeds the cap {cap}")


def prototype_of(ti: TypedInstance, counts: PrototypeMatching) -> frozenset:
    """Type pairs ``(s, t)`` that occur in the count matrix."""
    counts.validate(ti)
    return frozenset((ti.a_types[i], ti.b_types[j]) for i, j in counts.support())


def prototype_of_matching(matching: Matching, type_of: Mapping[str, str]) -> frozenset:
    return frozenset((type_of[a], type_of[b]) for a, b in matching.pairs)


def _prototype_polytope(ti: TypedInstance, prototype) -> tuple[Polytope, dict]:
    prototype = frozenset(prototype)
    for s, t in prototype:
        if s not in ti.a_types or t not in ti.b_types:
            raise InputError(f"({s!r}, {t!r}) is not a type pair")
    poly = LinearProgram("prototype")
    var = {}
    for i, s in enumerate(ti.a_types):
        for j, t in enumerate(ti.b_types):
            if (s, t) in prototype:
                var[(i, j)] = poly.add_variable(f"m_{i}_{j}")
    for i, s in enumerate(ti.a_types):
        poly.add_constraint({v: 1 for (r, _), v in var.items() if r == i}, "=", ti.sizes[s], f"row_{s}")
    for j, t in enumerate(ti.b_types):
        poly.add_constraint({v: 1 for (_, c), v in var.items() if c == j}, "=", ti.sizes[t], f"col_{t}")
    return poly, var


def _to_counts(ti: TypedInstance, assignment, var) -> PrototypeMatching:
    rows = []
    for i in range(len(ti.a_types)):
        row = []
        for j in range(len(ti.b_types)):
            x = assignment.get(var[(i, j)], ZERO) if (i, j) in var else ZERO
            if x.denominator != 1:
                raise InvariantError(f"fractional vertex of the count polytope: {x}")
            row.append(int(x))
        rows.append(tuple(row))
    return PrototypeMatching(tuple(rows))


def vertex_set(ti: TypedInstance, prototype, cap: int = DEFAULT_TYPE_CAP) -> list[PrototypeMatching]:
    """Vertices of the count polytope restricted to ``prototype``, sorted."""
    _check_cap(ti, cap)
    poly, var = _prototype_polytope(ti, prototype)
    return sorted(_to_counts(ti, v, var) for v in enumerate_vertices(poly))


def all_prototypes(ti: TypedInstance):
    """Subsets of the type grid in lexicographic order of their bit masks."""
    grid = [(s, t) for s in ti.a_types for t in ti.b_types]
    for mask in range(1 << len(grid)):
        yield frozenset(g for k, g in enumerate(grid) if mask >> k & 1)


def v_star(ti: TypedInstance, cap: int = DEFAULT_TYPE_CAP, by_prototypes: bool = False) -> list[PrototypeMatching]:
    """Union of the vertex sets over all prototypes.

    Fixing variables to zero selects a face of the full count polytope, and
    vertices of a face are vertices of the polytope, so the union equals the
    vertex set of the full grid. ``by_prototypes=True`` forms the union
    literally, which is only sensible for very small grids.
    """
    _check_cap(ti, cap)
    full = frozenset((s, t) for s in ti.a_types for t in ti.b_types)
    if not by_prototypes:
        return vertex_set(ti, full, cap)
    found = set()
    for proto in all_prototypes(ti):
        found.update(vertex_set(ti, proto, cap))
    return sorted(found)


def _hall_witness(ti: TypedInstance, prototype) -> str:
    a_types = list(ti.a_types)
    for r in range(1, len(a_types) + 1):
        for group in combinations(a_types, r):
            nbrs = {t for s, t in prototype if s in group}
            need = sum(ti.sizes[s] for s in group)
            have = sum(ti.sizes[t] for t in nbrs)
            if need > have:
                return f"A-types {list(group)} need {need} partners but their allowed B-types hold {have}"
    return "row and column sums cannot be met"


def best_prototype_substitute(ti: TypedInstance, prototype, q) -> tuple[PrototypeMatching, Fraction]:
    """Best count matrix with support inside ``prototype`` for world weights ``q``."""
    q = [to_fraction(x) for x in q]
    if len(q) != len(ti.worlds):
        raise InputError("q needs one entry per world")
    poly, var = _prototype_polytope(ti, prototype)
    poly.set_objective(
        {
            v: sum((qw * ti.utilities[ti.a_types[i]][ti.b_types[j]][w] for w, qw in enumerate(q)), ZERO)
            for (i, j), v in var.items()
        }
    )
    res = lp_solve(poly)
    if res.status != OPTIMAL:
        raise InputError(f"prototype is infeasible: {_hall_witness(ti, frozenset(prototype))}")
    return _to_counts(ti, res.assignment, var), res.value


def counts_utility(ti: TypedInstance, m: PrototypeMatching, w: int) -> Fraction:
    return sum(
        (c * ti.utilities[ti.a_types[i]][ti.b_types[j]][w] for i, row in enumerate(m.counts) for j, c in enumerate(row) if c),
        ZERO,
    )


# --------------------------------------------------------------------------
# literals and clauses


def literal_vector(ti: TypedInstance, lit) -> tuple:
    side, x, cur, other = lit
    vx = ti.values[x]
    return tuple(a - b for a, b in zip(vx[other], vx[cur]))


def _literal_status(ti: TypedInstance, lit) -> str:
    d = literal_vector(ti, lit)
    if all(c <= 0 for c in d):
        return "true"
    if all(c > 0 for c in d):
        return "false"
    return "open"


def subtypes(ti: TypedInstance, m: PrototypeMatching) -> list:
    """A-subtypes ``("A", s, t)`` then B-subtypes ``("B", t, s)`` occurring in ``m``."""
    sup = sorted(m.support())
    out = [("A", ti.a_types[i], ti.b_types[j]) for i, j in sup]
    out += sorted((("B", ti.b_types[j], ti.a_types[i]) for i, j in sup), key=lambda k: (ti.b_types.index(k[1]), ti.a_types.index(k[2])))
    return out


def clauses(ti: TypedInstance, m: PrototypeMatching):
    """Simplified stability clauses of ``m``, or ``None`` if ``m`` is never stable.

    Each clause is a tuple of open literals, at least one of which must hold.
    """
    sup = sorted(m.support())
    out = []
    for i, jp in sup:
        s, tp = ti.a_types[i], ti.b_types[jp]
        for ip, j in sup:
            if j == jp or ip == i:
                continue
            t, sp = ti.b_types[j], ti.a_types[ip]
            lits = [("A", s, tp, t), ("B", t, sp, s)]
            status = [_literal_status(ti, lit) for lit in lits]
            if "true" in status:
                continue
            open_lits = tuple(lit for lit, st in zip(lits, status) if st == "open")
            if not open_lits:
                return None
            if open_lits not in out:
                out.append(open_lits)
    return out


def _minimal_covers(cls):
    found = []

    def rec(chosen, k):
        while k < len(cls) and any(lit in chosen for lit in cls[k]):
            k += 1
        if k == len(cls):
            for lit in chosen:
                rest = chosen - {lit}
                if all(any(l2 in rest for l2 in c) for c in cls):
                    return
            if chosen not in found:
                found.append(chosen)
            return
        for lit in cls[k]:
            rec(chosen | {lit}, k + 1)

    rec(frozenset(), 0)
    return found


class _FeasibilityCache:
    """Is some posterior on the prior's support consistent with a literal set?"""

    def __init__(self, ti: TypedInstance):
        self.ti = ti
        self.support = [w for w, q in enumerate(ti.prior) if q > 0]
        self.memo = {}

    def __call__(self, lits) -> bool:
        key = frozenset(lits)
        if key not in self.memo:
            poly = Polytope("literals")
            names = [poly.add_variable(f"p{w}") for w in self.support]
            poly.add_constraint({v: 1 for v in names}, "=", 1)
            for lit in sorted(key):
                d = literal_vector(self.ti, lit)
                poly.add_constraint({v: d[w] for v, w in zip(names, self.support)}, "<=", 0)
            self.memo[key] = is_feasible(poly)
        return self.memo[key]


def type_row(ti: TypedInstance, x: str, p) -> tuple:
    others = ti.b_types if x in ti.a_types else ti.a_types
    vals = [sum((q * v for q, v in zip(p, ti.values[x][y]) if q), ZERO) for y in others]
    return tiers_from_values(others, vals)


# --------------------------------------------------------------------------
# typed policies


@dataclass(frozen=True)
class TypedSignal:
    """``components`` maps a type (public) or subtype (private) to best-first type tiers."""

    components: tuple
    counts: PrototypeMatching

    def component(self, key):
        return dict(self.components)[key]


@dataclass(frozen=True, eq=False)
class TypedPolicy:
    mode: str
    signals: tuple
    kernel: tuple
    notes: tuple = field(default=())


def typed_utility(ti: TypedInstance, tp: TypedPolicy) -> Fraction:
    total = ZERO
    for sig, row in zip(tp.signals, tp.kernel):
        for w, (mu, q) in enumerate(zip(ti.prior, row)):
            if mu and q:
                total += mu * q * counts_utility(ti, sig.counts, w)
    return total


def _posterior(mass):
    total = sum(mass, ZERO)
    return tuple(m / total for m in mass)


def _finish(ti: TypedInstance, mode: str, entries, notes) -> TypedPolicy:
    """Merge ``(TypedSignal, mass)`` entries with equal signals and build the kernel."""
    merged: dict = {}
    order = []
    for sig, mass in entries:
        if sig not in merged:
            merged[sig] = [ZERO] * len(ti.worlds)
            order.append(sig)
        for w, m in enumerate(mass):
            merged[sig][w] += m
    kernel = kernel_from_masses(ti, [merged[s] for s in order]) if order else []
    return TypedPolicy(mode, tuple(order), tuple(tuple(r) for r in kernel), tuple(notes))


def _world_rows(ti: TypedInstance, lp: LinearProgram, groups) -> None:
    k = len(ti.worlds)
    for w in range(k):
        lp.add_constraint({names[w]: 1 for names in groups}, "=", ti.prior[w], f"prior_{ti.worlds[w]}")


def solve_public_typed(ti: TypedInstance, cap: int = DEFAULT_TYPE_CAP) -> TypedPolicy:
    """Optimal stable public policy for a typed instance.

    Signals are pairs (count matrix, minimal literal cover); each becomes a
    meta-signal declaring the weak type-level profile its posterior induces.
    """
    _check_cap(ti, cap)
    k = len(ti.worlds)
    feasible = _FeasibilityCache(ti)
    lp = LinearProgram("typed-public")
    groups, keys = [], []
    for mi, m in enumerate(v_star(ti, cap)):
        cls = clauses(ti, m)
        if cls is None:
            continue
        for ci, cover in enumerate(_minimal_covers(cls)):
            if not feasible(cover):
                continue
            names = [lp.add_variable(f"z_{mi}_{ci}_{w}") for w in range(k)]
            for lit in sorted(cover):
                d = literal_vector(ti, lit)
                lp.add_constraint({v: d[w] for w, v in enumerate(names)}, "<=", 0)
            groups.append(names)
            keys.append(m)
    _world_rows(ti, lp, groups)
    lp.set_objective({v: counts_utility(ti, m, w) for m, names in zip(keys, groups) for w, v in enumerate(names)})
    res = lp_solve(lp)
    if res.status != OPTIMAL:
        raise InvariantError(f"typed public LP is {res.status}")
    entries = []
    for m, names in zip(keys, groups):
        mass = [res.assignment[v] for v in names]
        if any(mass):
            p = _posterior(mass)
            comps = tuple((x, type_row(ti, x, p)) for x in ti.a_types + ti.b_types)
            entries.append((TypedSignal(comps, m), mass))
    return _finish(ti, "public", entries, ())


def _label_options(ti: TypedInstance, cls, subs, feasible):
    """Feasible literal subsets per subtype, restricted to literals in clauses."""
    relevant = {tau: [] for tau in subs}
    for c in cls:
        for lit in c:
            tau = (lit[0], lit[1], lit[2])
            if lit not in relevant[tau]:
                relevant[tau].append(lit)
    options = {}
    for tau in subs:
        lits = sorted(relevant[tau])
        opts = []
        for r in range(len(lits) + 1):
            for group in combinations(lits, r):
                if feasible(group):
                    opts.append(frozenset(group))
        options[tau] = opts
    return options


def _label_tuples(cls, subs, options, limit):
    """Label choices per subtype that satisfy every clause."""
    owner = {}
    for c in cls:
        for lit in c:
            owner[lit] = (lit[0], lit[1], lit[2])
    out = []
    pos = {tau: k for k, tau in enumerate(subs)}

    def ok(partial):
        depth = len(partial)
        for c in cls:
            decided = [lit for lit in c if pos[owner[lit]] < depth]
            if len(decided) == len(c) and not any(lit in partial[pos[owner[lit]]] for lit in c):
                return False
        return True

    def rec(partial):
        if len(partial) == len(subs):
            out.append(tuple(partial))
            if len(out) > limit:
                raise CapacityError(f"more than {limit} private label combinations")
            return
        for opt in options[subs[len(partial)]]:
            partial.append(opt)
            if ok(partial):
                rec(partial)
            partial.pop()

    rec([])
    return out


def solve_private_typed(ti: TypedInstance, cap: int = DEFAULT_TYPE_CAP, tuple_cap: int = DEFAULT_TUPLE_CAP) -> TypedPolicy:
    """Optimal stable private policy with one signal component per subtype.

    A joint signal assigns each subtype a set of literals it must satisfy at
    its own posterior. The posterior of a subtype aggregates every joint
    signal with the same matching and the same label for that subtype.
    """
    _check_cap(ti, cap)
    k = len(ti.worlds)
    feasible = _FeasibilityCache(ti)
    lp = LinearProgram("typed-private")
    groups, keys = [], []
    for mi, m in enumerate(v_star(ti, cap)):
        cls = clauses(ti, m)
        if cls is None:
            continue
        subs = subtypes(ti, m)
        options = _label_options(ti, cls, subs, feasible)
        by_label: dict = {}
        for li, labels in enumerate(_label_tuples(cls, subs, options, tuple_cap)):
            names = [lp.add_variable(f"z_{mi}_{li}_{w}") for w in range(k)]
            groups.append(names)
            keys.append((m, subs, labels))
            for tau, lab in zip(subs, labels):
                if lab:
                    by_label.setdefault((tau, lab), []).append(names)
        for (tau, lab), members in by_label.items():
            for lit in sorted(lab):
                d = literal_vector(ti, lit)
                coeffs = {}
                for names in members:
                    for w, v in enumerate(names):
                        coeffs[v] = d[w]
                lp.add_constraint(coeffs, "<=", 0)
    _world_rows(ti, lp, groups)
    lp.set_objective(
        {v: counts_utility(ti, key[0], w) for key, names in zip(keys, groups) for w, v in enumerate(names)}
    )
    res = lp_solve(lp)
    if res.status != OPTIMAL:
        raise InvariantError(f"typed private LP is {res.status}")

    # aggregated posterior of every (matching, subtype, label) observation
    agg: dict = {}
    live = []
    for key, names in zip(keys, groups):
        mass = [res.assignment[v] for v in names]
        if not any(mass):
            continue
        live.append((key, mass))
        m, subs, labels = key
        for tau, lab in zip(subs, labels):
            acc = agg.setdefault((m, tau, lab), [ZERO] * k)
            for w in range(k):
                acc[w] += mass[w]
    entries = []
    for (m, subs, labels), mass in live:
        comps = tuple((tau, type_row(ti, tau[1], _posterior(agg[(m, tau, lab)]))) for tau, lab in zip(subs, labels))
        entries.append((TypedSignal(comps, m), mass))
    return _finish(ti, "private", entries, ())


# --------------------------------------------------------------------------
# expansion to concrete agents


def agent_names(ti: TypedInstance) -> dict:
    """Type -> its agents, named ``<type>.<k>`` with ``k`` from 1."""
    return {t: tuple(f"{t}.{k}" for k in range(1, ti.sizes[t] + 1)) for t in ti.a_types + ti.b_types}


def to_instance(ti: TypedInstance, cap: int = DEFAULT_EXPAND_CAP) -> tuple[Instance, dict]:
    """The concrete instance and the map agent -> type."""
    if ti.n > cap:
        raise CapacityError(f"n = {ti.n} exceeds the expansion cap {cap}")
    names = agent_names(ti)
    type_of = {x: t for t, xs in names.items() for x in xs}
    side_a = tuple(x for s in ti.a_types for x in names[s])
    side_b = tuple(x for t in ti.b_types for x in names[t])
    values = {}
    for x in side_a:
        values[x] = {y: ti.values[type_of[x]][type_of[y]] for y in side_b}
    for y in side_b:
        values[y] = {x: ti.values[type_of[y]][type_of[x]] for x in side_a}
    utils = {a: {b: ti.utilities[type_of[a]][type_of[b]] for b in side_b} for a in side_a}
    return Instance(ti.worlds, ti.prior, side_a, side_b, values, utils), type_of


def concrete_matching(ti: TypedInstance, m: PrototypeMatching) -> Matching:
    """Fill count slots in canonical agent order."""
    names = agent_names(ti)
    used = {t: 0 for t in ti.b_types}
    pairs = []
    for i, s in enumerate(ti.a_types):
        agents = iter(names[s])
        for j, t in enumerate(ti.b_types):
            for _ in range(m.counts[i][j]):
                pairs.append((next(agents), names[t][used[t]]))
                used[t] += 1
    return Matching(pairs)


def _expand_row(names, tiers) -> tuple:
    return tuple(tuple(y for t in tier for y in names[t]) for tier in tiers)


def expand_typed_policy(ti: TypedInstance, tp: TypedPolicy, cap: int = DEFAULT_EXPAND_CAP):
    """Concrete policy over ``n`` agents. Returns ``(instance, policy)``."""
    inst, type_of = to_instance(ti, cap)
    names = agent_names(ti)
    signals = []
    for sig in tp.signals:
        matching = concrete_matching(ti, sig.counts)
        comps = dict(sig.components)
        if tp.mode == "public":
            tiers = {x: _expand_row(names, comps[type_of[x]]) for x in inst.agents}
            signals.append(MetaSignal(PreferenceProfile(tiers), matching))
        else:
            joint = {}
            for x in inst.agents:
                y = matching.partner(x)
                tau = ("A" if x in inst._a_set else "B", type_of[x], type_of[y])
                joint[x] = _expand_row(names, comps[tau])
            signals.append(JointSignal(joint, matching))
    cls = PublicPolicy if tp.mode == "public" else PrivatePolicy
    return inst, cls.build(inst, signals, tp.kernel, tp.notes)
