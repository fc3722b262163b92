"""Persuasion with few worlds: non-degeneracy, proper cells and the multiset search."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement, permutations
from math import comb

from .errors import CapacityError, InputError, InvariantError, RegimeError
from .lp import OPTIMAL, LinearProgram, Polytope, enumerate_vertices, lp_solve, rank, solve_linear_system
from .matching import WsmProblem, wsm_strict
from .model import (
    Instance,
    Matching,
    MetaSignal,
    PreferenceProfile,
    PublicPolicy,
    kernel_from_masses,
    value_under_posterior,
)
from .rational import to_fraction

ZERO = Fraction(0)
ONE = Fraction(1)
DEFAULT_WORLD_CAP = 3
DEFAULT_COMBINATION_CAP = 2_000_000
DEFAULT_MULTISET_CAP = 200_000
HEURISTIC_NOTE = "heuristic (degeneracy detected)"


# --------------------------------------------------------------------------
# non-degeneracy


@dataclass(frozen=True)
class DifferenceVector:
    owner: str
    pair: tuple
    vec: tuple


def difference_vectors(inst: Instance) -> list[DifferenceVector]:
    """``v_x(y) - v_x(y')`` for every agent and unordered partner pair."""
    out = []
    for x in inst.agents:
        others = inst.opposite(x)
        row = inst.values[x]
        for y, z in combinations(others, 2):
            out.append(DifferenceVector(x, (y, z), tuple(a - b for a, b in zip(row[y], row[z]))))
    return out


def _path_union(pairs) -> bool:
    """Do the edges form vertex-disjoint simple paths?"""
    degree: dict = {}
    parent: dict = {}

    def find(u):
        while parent.setdefault(u, u) != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for y, z in pairs:
        degree[y] = degree.get(y, 0) + 1
        degree[z] = degree.get(z, 0) + 1
        if degree[y] > 2 or degree[z] > 2:
            return False
        ry, rz = find(y), find(z)
        if ry == rz:
            return False
        parent[ry] = rz
    return True


def realizable(items) -> bool:
    """Can these (owner, pair) vectors all be consecutive pairs of one strict profile?"""
    by_owner: dict = {}
    for d in items:
        by_owner.setdefault(d.owner, []).append(d.pair)
    return all(_path_union(ps) for ps in by_owner.values())


@dataclass
class DegeneracyVerdict:
    non_degenerate: bool
    witness: tuple = ()
    face: tuple = ()  # worlds whose posterior coordinate is zero at the coincidence

    def __bool__(self):
        return self.non_degenerate


def check_non_degenerate(inst: Instance, cap: int = DEFAULT_COMBINATION_CAP) -> DegeneracyVerdict:
    """Look for realizable difference vectors that are linearly dependent.

    A simplex face counts as well: ``r`` vectors that become dependent once
    the coordinates of ``|worlds| - r`` worlds are dropped meet on the
    boundary where those worlds have zero mass.  A tie there cannot be
    moved off by a nearby interior posterior.
    """
    k = len(inst.worlds)
    vecs = difference_vectors(inst)
    if comb(len(vecs), k) > cap:
        raise CapacityError(
            f"{comb(len(vecs), k)} vector subsets exceed the cap {cap}; perturb the instance and spot-check instead"
        )
    faces = {r: list(combinations(range(k), k - r)) for r in range(1, k + 1)}

    def dependent(cand):
        r = len(cand)
        for drop in faces[r]:
            keep = [w for w in range(k) if w not in drop]
            if rank([[d.vec[w] for w in keep] for d in cand]) < r:
                return drop
        return None

    def rec(start, chosen):
        if len(chosen) == k:
            return None
        for i in range(start, len(vecs)):
            cand = chosen + [vecs[i]]
            if not realizable(cand):
                continue
            drop = dependent(cand)
            if drop is not None:
                return tuple(cand), drop
            hit = rec(i + 1, cand)
            if hit:
                return hit
        return None

    hit = rec(0, [])
    if hit is None:
        return DegeneracyVerdict(True)
    return DegeneracyVerdict(False, hit[0], tuple(inst.worlds[w] for w in hit[1]))


def perturb(inst: Instance, eps, seed, grid: int = 10**6) -> Instance:
    """Add independent noise ``eps * k / grid`` with ``k`` uniform in ``(-grid, grid)`` to every value."""
    eps = to_fraction(eps)
    if eps <= 0:
        raise InputError("eps must be positive")
    rng = random.Random(seed)
    values = {}
    for x in inst.agents:
        row = {}
        for y in inst.opposite(x):
            row[y] = tuple(v + eps * Fraction(rng.randint(-grid + 1, grid - 1), grid) for v in inst.values[x][y])
        values[x] = row
    return inst.replace(values=values)


# --------------------------------------------------------------------------
# proper cells


@dataclass
class ProperCell:
    """A strict profile with the closed region of posteriors that induce it.

    ``region`` lists vectors ``d`` meaning ``sum_w p(w) d(w) <= 0``; for two
    worlds ``interval`` holds the ``p(w2)`` bounds.
    """

    profile: PreferenceProfile
    region: tuple
    witness: tuple
    interval: tuple | None = None


def strict_profile_at(inst: Instance, p) -> PreferenceProfile:
    """Induced profile with ties broken by canonical index."""
    orders = {}
    for x in inst.agents:
        others = inst.opposite(x)
        vals = {y: value_under_posterior(inst, x, y, p) for y in others}
        orders[x] = sorted(others, key=lambda y: (-vals[y], others.index(y)))
    return PreferenceProfile.strict(orders)


def profile_constraints(inst: Instance, profile: PreferenceProfile) -> list:
    """Vectors ``v_x(worse) - v_x(better)`` for consecutive pairs of a strict profile."""
    out = []
    for x in inst.agents:
        order = profile.order(x)
        row = inst.values[x]
        for better, worse in zip(order, order[1:]):
            out.append(tuple(a - b for a, b in zip(row[worse], row[better])))
    return out


def crossing_points(inst: Instance) -> list:
    """Sorted distinct ``p(w2)`` in (0, 1) where some agent is indifferent between two partners."""
    if len(inst.worlds) != 2:
        raise InputError("crossing points are defined for two worlds")
    pts = set()
    for d in difference_vectors(inst):
        d0, d1 = d.vec
        if d0 != d1 and d0 * d1 < 0:
            pts.add(d0 / (d0 - d1))
    return sorted(pts)


def _max_slack(k, region, extra=None):
    """Largest ``s`` with ``p >= s``, ``d . p + s <= 0`` over the region; returns ``(s, p)``."""
    lp = LinearProgram("slack")
    ps = [lp.add_variable(f"p{w}") for w in range(k)]
    s = lp.add_variable("s")
    lp.add_constraint({v: 1 for v in ps}, "=", 1)
    lp.add_constraint({s: 1}, "<=", 1)
    for w in range(k):
        lp.add_constraint({ps[w]: 1, s: -1}, ">=", 0)
    for d in list(region) + ([extra] if extra is not None else []):
        coeffs = {ps[w]: d[w] for w in range(k) if d[w]}
        coeffs[s] = 1
        lp.add_constraint(coeffs, "<=", 0)
    lp.set_objective({s: 1})
    res = lp_solve(lp)
    if res.status != OPTIMAL:
        return ZERO, None
    return res.value, tuple(res.assignment[v] for v in ps)


def enumerate_proper_cells(inst: Instance, cap: int = DEFAULT_WORLD_CAP) -> list[ProperCell]:
    """Cells of the indifference-hyperplane arrangement with nonempty interior."""
    k = len(inst.worlds)
    if k > cap:
        raise CapacityError(f"{k} worlds exceed the cell-enumeration cap {cap}")
    if k == 1:
        p = (ONE,)
        prof = strict_profile_at(inst, p)
        return [ProperCell(prof, tuple(profile_constraints(inst, prof)), p)]
    if k == 2:
        bounds = [ZERO] + crossing_points(inst) + [ONE]
        cells = []
        for lo, hi in zip(bounds, bounds[1:]):
            t = (lo + hi) / 2
            p = (1 - t, t)
            prof = strict_profile_at(inst, p)
            cells.append(ProperCell(prof, tuple(profile_constraints(inst, prof)), p, (lo, hi)))
        return cells

    # incremental splitting: one hyperplane per distinct nonzero direction
    hyper = []
    seen = set()
    for d in difference_vectors(inst):
        if not any(d.vec):
            continue
        lead = next(c for c in d.vec if c)
        key = tuple(c / abs(lead) for c in d.vec)
        if key not in seen and tuple(-c for c in key) not in seen:
            seen.add(key)
            hyper.append(d.vec)
    cells = [()]
    for h in hyper:
        neg = tuple(-c for c in h)
        nxt = []
        for region in cells:
            s1, _ = _max_slack(k, region, h)
            s2, _ = _max_slack(k, region, neg)
            if s1 > 0 and s2 > 0:
                nxt.append(region + (h,))
                nxt.append(region + (neg,))
            else:
                nxt.append(region)
        cells = nxt
    out = []
    for region in cells:
        s, p = _max_slack(k, region)
        if s <= 0:
            raise InvariantError("cell without interior survived the splitting")
        prof = strict_profile_at(inst, p)
        out.append(ProperCell(prof, tuple(profile_constraints(inst, prof)), p))
    return out


def cell_bound(h: int, d: int) -> int:
    """Maximum number of cells ``h`` hyperplanes cut a ``d``-dimensional region into."""
    return sum(comb(h, i) for i in range(d + 1))


# --------------------------------------------------------------------------
# the polytope of vertex assignments


def _cone_faces(cons, k):
    """Faces of ``{x >= 0 : d . x <= 0}`` as generator tuples, plus a full-dimension flag.

    Generators are the vertices of the slice ``sum x = 1``. Faces of
    dimension below ``k`` are simplicial when ``k <= 3``.
    """
    poly = Polytope("slice")
    xs = [poly.add_variable(f"x{w}") for w in range(k)]
    poly.add_constraint({v: 1 for v in xs}, "=", 1)
    for d in cons:
        poly.add_constraint({xs[w]: d[w] for w in range(k)}, "<=", 0)
    rays = [tuple(v[x] for x in xs) for v in enumerate_vertices(poly)]
    if not rays:
        return [()], False
    dim = rank(rays)
    faces = [()] + [(r,) for r in rays]
    if k >= 3 and dim >= 2:
        # two rays span a face when some defining row is tight on both and the
        # tight rows common to them cut out a one-dimensional slice
        rows = [tuple(-c for c in d) for d in cons] + [tuple(ONE if w == j else ZERO for w in range(k)) for j in range(k)]
        for r1, r2 in combinations(rays, 2):
            common = [row for row in rows if sum(a * b for a, b in zip(row, r1)) == 0 and sum(a * b for a, b in zip(row, r2)) == 0]
            if common and rank(common) == k - 2:
                faces.append((r1, r2))
    return faces, dim == k


def _assignment_vertices_structured(inst: Instance, profiles) -> list:
    """Vertices of the assignment polytope by combining cone faces.

    Writing ``x(l, w) = mu(w) gamma(l, w)``, a feasible point is a vertex
    exactly when the faces containing each ``x_l`` in their relative interior
    have linearly independent spans; the point is then the unique solution of
    ``sum_l x_l = mu`` on those spans.
    """
    k = len(inst.worlds)
    mu = inst.prior
    per = []
    for prof in profiles:
        faces, full = _cone_faces(profile_constraints(inst, prof), k)
        per.append((faces, full))
    found = set()
    # a full-dimensional cone containing mu yields the vertex giving it everything
    for l, (faces, full) in enumerate(per):
        if full and all(sum(a * b for a, b in zip(d, mu)) <= 0 for d in profile_constraints(inst, profiles[l])):
            found.add(tuple(tuple(mu) if j == l else tuple(ZERO for _ in range(k)) for j in range(len(profiles))))

    def rec(l, chosen, used):
        if l == len(per):
            gens = [g for _, g in chosen]
            if not gens:
                return
            if rank(gens) < len(gens):
                return
            # solve sum lambda_g g = mu in least-dimensional form
            m = len(gens)
            cols = list(range(m))
            ata = [[sum(gens[i][w] * gens[j][w] for w in range(k)) for j in cols] for i in cols]
            atb = [sum(gens[i][w] * mu[w] for w in range(k)) for i in cols]
            lam = solve_linear_system(ata, atb)
            if lam is None or any(c < 0 for c in lam):
                return
            if any(sum(lam[i] * gens[i][w] for i in cols) != mu[w] for w in range(k)):
                return
            x = [[ZERO] * k for _ in per]
            for (owner, g), c in zip(chosen, lam):
                for w in range(k):
                    x[owner][w] += c * g[w]
            found.add(tuple(tuple(r) for r in x))
            return
        for face in per[l][0]:
            if used + len(face) > k:
                continue
            rec(l + 1, chosen + [(l, g) for g in face], used + len(face))

    rec(0, [], 0)
    out = []
    for x in found:
        out.append(tuple(tuple(x[l][w] / mu[w] for w in range(k)) for l in range(len(profiles))))
    return sorted(out)


def assignment_polytope(inst: Instance, profiles) -> Polytope:
    """Feasible ``gamma(l, w)``: per-world distributions whose signal posteriors lie in the profiles' cells."""
    k = len(inst.worlds)
    poly = Polytope("assignment")
    g = [[poly.add_variable(f"g_{l}_{w}") for w in range(k)] for l in range(len(profiles))]
    for w in range(k):
        poly.add_constraint({g[l][w]: 1 for l in range(len(profiles))}, "=", 1, f"world_{w}")
    for l, prof in enumerate(profiles):
        for d in profile_constraints(inst, prof):
            coeffs = {g[l][w]: inst.prior[w] * d[w] for w in range(k) if inst.prior[w] * d[w]}
            if coeffs:
                poly.add_constraint(coeffs, "<=", 0)
    return poly


def assignment_vertices(inst: Instance, profiles, method: str = "auto") -> list:
    """Vertices as tuples ``gamma[l][w]``, sorted."""
    k = len(inst.worlds)
    if method == "structured" or (method == "auto" and all(q > 0 for q in inst.prior) and k <= 3):
        return _assignment_vertices_structured(inst, profiles)
    poly = assignment_polytope(inst, profiles)
    out = []
    for v in enumerate_vertices(poly):
        out.append(tuple(tuple(v[f"g_{l}_{w}"] for w in range(k)) for l in range(len(profiles))))
    return sorted(out)


# --------------------------------------------------------------------------
# best matching problem


def bmp_weights(inst: Instance, gamma_row) -> dict:
    k = len(inst.worlds)
    return {
        (a, b): sum((inst.prior[w] * gamma_row[w] * inst.utilities[a][b][w] for w in range(k)), ZERO)
        for a in inst.side_a
        for b in inst.side_b
    }


def solve_bmp(inst: Instance, profiles, gamma) -> tuple[list, Fraction]:
    """Independent weighted stable matching per signal with world-aggregated weights."""
    if len(profiles) != len(gamma):
        raise InputError("one gamma row per profile is required")
    matchings, total = [], ZERO
    for prof, row in zip(profiles, gamma):
        m, val = wsm_strict(WsmProblem.build(inst.side_a, inst.side_b, prof, bmp_weights(inst, row)))
        matchings.append(m)
        total += val
    return matchings, total


class _StableLists:
    """Stable matchings of each strict profile, in lexicographic encoding order.

    Picking the first maximizer over this list gives the same answer as
    ``wsm_strict`` (value and tie-break) and is much faster for small ``n``.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self.memo = {}

    def best(self, prof: PreferenceProfile, weights) -> tuple[Matching, Fraction]:
        lst = self.memo.get(prof)
        if lst is None:
            inst = self.inst
            lst = []
            for perm in permutations(range(inst.n)):
                m = Matching([(inst.side_a[i], inst.side_b[j]) for i, j in enumerate(perm)])
                if not _blocks(prof, inst, m):
                    lst.append(m)
            self.memo[prof] = lst
        best = None
        for m in lst:
            val = sum((weights[p] for p in m.pairs), ZERO)
            if best is None or val > best[1]:
                best = (m, val)
        return best


def _blocks(prof, inst, m) -> bool:
    for a in inst.side_a:
        ma = m.partner(a)
        for b in inst.side_b:
            if b != ma and prof.prefers(a, b, ma) and prof.prefers(b, a, m.partner(b)):
                return True
    return False


# --------------------------------------------------------------------------
# the multiset search


@dataclass
class WorldsResult:
    policy: PublicPolicy
    value: Fraction
    non_degenerate: bool | None
    cells: list = field(default_factory=list)


def solve_public_small_worlds(
    inst: Instance,
    cap: int = DEFAULT_WORLD_CAP,
    multiset_cap: int = DEFAULT_MULTISET_CAP,
    fast_bmp_n: int = 5,
    return_details: bool = False,
):
    """Best public policy over multisets of ``|worlds|`` proper-cell profiles."""
    k = len(inst.worlds)
    if k > cap:
        raise RegimeError(f"{k} worlds exceed the small-worlds cap {cap}")
    notes = []
    try:
        verdict = check_non_degenerate(inst)
        nd = bool(verdict)
    except CapacityError:
        nd = None
        notes.append("non-degeneracy not verified (capacity)")
    if nd is False:
        notes.append(HEURISTIC_NOTE)
    cells = enumerate_proper_cells(inst, cap)
    profiles = [c.profile for c in cells]
    n_multisets = comb(len(profiles) + k - 1, k)
    if n_multisets > multiset_cap:
        raise CapacityError(f"{n_multisets} profile multisets exceed the cap {multiset_cap}")
    fast = _StableLists(inst) if inst.n <= fast_bmp_n else None

    best = None
    for combo in combinations_with_replacement(range(len(profiles)), k):
        profs = [profiles[i] for i in combo]
        for gamma in assignment_vertices(inst, profs):
            if fast is not None:
                ms, val = [], ZERO
                for prof, row in zip(profs, gamma):
                    m, v = fast.best(prof, bmp_weights(inst, row))
                    ms.append(m)
                    val += v
            else:
                ms, val = solve_bmp(inst, profs, gamma)
            if best is None or val > best[0]:
                best = (val, profs, gamma, ms)
    val, profs, gamma, ms = best

    merged: dict = {}
    order = []
    for prof, row, m in zip(profs, gamma, ms):
        key = (prof, m)
        mass = [inst.prior[w] * row[w] for w in range(k)]
        if not any(mass):
            continue
        if key not in merged:
            merged[key] = [ZERO] * k
            order.append(key)
        for w in range(k):
            merged[key][w] += mass[w]
    signals = [MetaSignal(prof, m) for prof, m in order]
    policy = PublicPolicy.build(inst, signals, kernel_from_masses(inst, [merged[key] for key in order]), notes)
    if return_details:
        return WorldsResult(policy, val, nd, cells)
    return policy
