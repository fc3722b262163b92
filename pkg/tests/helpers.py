"""Shared fixtures and LP-free reference computations."""

from __future__ import annotations

import os
from fractions import Fraction

from stable_persuasion import io
from stable_persuasion.model import all_matchings, blocking_pairs

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")
ACCEPTANCE: dict = {}  # criterion number -> printed line


def example1():
    return io.instance_from_json(io.read_json(os.path.join(DATA, "example1.json")))


def example2():
    return io.typed_from_json(io.read_json(os.path.join(DATA, "example2.json")))


def grid(den):
    return [Fraction(i, den) for i in range(den + 1)]


def _expected(inst, m, t):
    p = (1 - t, t)
    return sum((p[w] * inst.utility(m, w) for w in range(2)), Fraction(0))


def stable_values(inst, den):
    """``{t: {matching: expected utility}}`` over stable matchings at ``p(w2) = t``."""
    out = {}
    for t in grid(den):
        p = (1 - t, t)
        out[t] = {m: _expected(inst, m, t) for m in all_matchings(inst) if not blocking_pairs(inst, m, p)}
    return out


def _split(prior_t, t0, t1):
    """Weight on ``t0`` so that the mixture of ``t0`` and ``t1`` has mean ``prior_t``."""
    if t0 == t1:
        return None
    lam = (t1 - prior_t) / (t1 - t0)
    return lam if 0 <= lam <= 1 else None


def brute_public_value(inst, den=60):
    """Best two-posterior split for two worlds, taking the best stable matching at each posterior.

    With two worlds two posteriors suffice, so on a grid containing every
    breakpoint this is the exact optimum over public policies.
    """
    table = stable_values(inst, den)
    best_v = {t: max(v.values()) for t, v in table.items() if v}
    mu = inst.prior[1]
    best = best_v.get(mu)
    pts = sorted(best_v)
    for t0 in pts:
        if t0 > mu:
            break
        for t1 in pts:
            if t1 < mu:
                continue
            lam = _split(mu, t0, t1)
            if lam is None:
                continue
            v = lam * best_v[t0] + (1 - lam) * best_v[t1]
            if best is None or v > best:
                best = v
    return best


def brute_matching_only_value(inst, den=60):
    """Best policy whose signal is the matching: each matching has one posterior."""
    table = stable_values(inst, den)
    mu = inst.prior[1]
    best = None
    if mu in table:
        for v in table[mu].values():
            best = v if best is None else max(best, v)
    entries = [(t, m, v) for t, row in table.items() for m, v in row.items()]
    for t0, m0, v0 in entries:
        if t0 > mu:
            continue
        for t1, m1, v1 in entries:
            if t1 < mu or m1 == m0:
                continue
            lam = _split(mu, t0, t1)
            if lam is None:
                continue
            v = lam * v0 + (1 - lam) * v1
            if best is None or v > best:
                best = v
    return best


def policies_equal(a, b) -> bool:
    if type(a) is not type(b) or a.kernel != b.kernel or len(a.signals) != len(b.signals):
        return False
    for s, t in zip(a.signals, b.signals):
        if s.matching != t.matching:
            return False
        if hasattr(s, "profile") and s.profile != t.profile:
            return False
        if hasattr(s, "components") and dict(s.components) != dict(t.components):
            return False
    return True
