"""Command-line front end.

Exit codes: 0 success, 1 a checked property failed, 2 unreadable or invalid
input, 3 a capacity guard was hit, 4 the mode does not support the input.
"""

from __future__ import annotations

import argparse
import sys

from . import generators, io
from .errors import CapacityError, InputError, PersuasionError, RegimeError
from .model import (
    Instance,
    is_bayes_plausible,
    is_indicative,
    is_stable_policy,
    policy_utility,
)
from .oracle import solve_oracle_public, solve_oracle_restricted
from .rational import fmt, to_fraction
from .reductions import (
    persuasion_to_matching,
    smti_restrict,
    smti_to_wsm,
    wsm_to_private_persuasion,
)
from .typed import (
    DEFAULT_EXPAND_CAP,
    DEFAULT_TUPLE_CAP,
    DEFAULT_TYPE_CAP,
    expand_typed_policy,
    solve_private_typed,
    solve_public_typed,
    to_instance,
    typed_utility,
)
from .worlds import (
    DEFAULT_WORLD_CAP,
    HEURISTIC_NOTE,
    check_non_degenerate,
    perturb,
    solve_public_small_worlds,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAPACITY, EXIT_REGIME = 0, 1, 2, 3, 4
MODES = ("typed-public", "typed-private", "worlds-public", "oracle-public", "oracle-restricted")
REDUCTIONS = ("smti-restrict", "smti-wsm", "wsm-private", "persuasion-matching")
GEN_KINDS = ("instance", "typed", "smti", "wsm", "persuasion")
ORACLE_MAX_N = 3


# --------------------------------------------------------------------------
# helpers


def _input_path(args) -> str:
    path = args.in_path or args.input
    if not path:
        raise InputError("no input file given (use --in or a positional path)")
    return path


def _read(path: str):
    try:
        return io.read_json(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _load(path: str):
    return io.load(_read(path))


def _as_instance(kind, obj, args) -> Instance:
    if kind == "typed":
        return to_instance(obj, args.max_expand)[0]
    if kind != "instance":
        raise RegimeError(f"expected a matching instance, got a {kind} file")
    return obj


def _emit(args, obj, text=None) -> None:
    out = text if (args.human and text is not None) else io.dumps(obj)
    sys.stdout.write(out if out.endswith("\n") else out + "\n")


def _write_or_print(args, payload) -> None:
    if args.out:
        io.write_json(args.out, payload)
    else:
        sys.stdout.write(io.dumps(payload))


def _witness_json(verdict) -> list:
    return [{"owner": d.owner, "pair": list(d.pair), "vector": [fmt(q) for q in d.vec]} for d in verdict.witness]


def _table(rows) -> str:
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


# --------------------------------------------------------------------------
# solve


def _solve(args):
    kind, obj = _load(_input_path(args))
    mode = args.mode
    notes, nd, debug = [], None, None
    if mode.startswith("typed-"):
        if kind != "typed":
            raise RegimeError(f"{mode} needs a typed instance file")
        if mode == "typed-public":
            tp = solve_public_typed(obj, args.max_types)
            guarantee = "optimal among public policies"
        else:
            tp = solve_private_typed(obj, args.max_types, args.max_tuples)
            guarantee = "optimal among private policies"
        value = typed_utility(obj, tp)
        support = len(tp.signals)
        notes += list(tp.notes)
        try:
            inst, policy = expand_typed_policy(obj, tp, args.max_expand)
        except CapacityError:
            inst = policy = None
            notes.append("policy file omitted: expansion to agents exceeds the cap")
    else:
        inst = _as_instance(kind, obj, args)
        if args.perturb is not None:
            inst = perturb(inst, to_fraction(args.perturb), args.seed)
            notes.append(f"values perturbed with eps={args.perturb}, seed={args.seed}")
        if mode == "worlds-public":
            res = solve_public_small_worlds(inst, args.max_worlds, return_details=True)
            policy, value, nd = res.policy, res.value, res.non_degenerate
            guarantee = "optimal among public policies" if nd else HEURISTIC_NOTE
            if nd is False:
                sys.stderr.write(f"warning: {HEURISTIC_NOTE}; rerun with --perturb EPS to restore guarantees\n")
            if args.debug:
                debug = {"cells": [_cell_json(c) for c in res.cells]}
        elif mode == "oracle-public":
            if inst.n > args.max_n:
                raise CapacityError(f"the oracle is limited to n <= {args.max_n}")
            policy = solve_oracle_public(inst)
            value = policy_utility(inst, policy)
            guarantee = "optimal among public policies (exhaustive)"
            if inst.n == 3:
                guarantee = "optimal among public policies over strict profiles (exhaustive)"
        else:
            value, policy = solve_oracle_restricted(inst)
            guarantee = "optimal among policies that reveal only the matching"
        support = len(policy.signals)
        notes += list(policy.notes)
    report = {
        "mode": mode,
        "value": fmt(value),
        "support_size": support,
        "guarantee": guarantee,
        "non_degeneracy": None if nd is None else ("non-degenerate" if nd else "degenerate"),
        "notes": notes,
    }
    if policy is not None:
        pj = io.policy_to_json(inst, policy)
        if debug is not None:
            pj["debug"] = debug
        if args.out:
            io.write_json(args.out, pj)
            report["policy_file"] = args.out
        else:
            report["policy"] = pj
    text = None
    if args.human:
        rows = [("field", "value")] + [(k, report[k]) for k in ("mode", "value", "support_size", "guarantee")]
        if report["non_degeneracy"]:
            rows.append(("non_degeneracy", report["non_degeneracy"]))
        for note in notes:
            rows.append(("note", note))
        text = _table(rows)
        if policy is not None:
            sig_rows = [("signal", "matching") + tuple(f"P(s|{w})" for w in inst.worlds)]
            for s, (sig, ker) in enumerate(zip(policy.signals, policy.kernel)):
                match = " ".join(f"{a}-{b}" for a, b in sig.matching.pairs)
                sig_rows.append((s, match) + tuple(fmt(q) for q in ker))
            text += "\n\n" + _table(sig_rows)
    _emit(args, report, text)
    return EXIT_OK


def _cell_json(cell):
    out = {
        "profile": {x: io._listify(t) for x, t in cell.profile.tiers.items()},
        "witness": [fmt(q) for q in cell.witness],
    }
    if cell.interval is not None:
        out["boundary"] = [fmt(q) for q in cell.interval]
    else:
        out["inequalities"] = [[fmt(q) for q in d] for d in cell.region]
    return out


# --------------------------------------------------------------------------
# check


def _check(args):
    kind, obj = _load(_input_path(args))
    inst = _as_instance(kind, obj, args)
    if not args.policy and not args.non_degeneracy:
        args.non_degeneracy = True
    report, failed, lines = {}, False, []
    if args.non_degeneracy:
        verdict = check_non_degenerate(inst)
        entry = {"verdict": "non-degenerate" if verdict else "degenerate"}
        if not verdict:
            entry["witness"] = _witness_json(verdict)
            if verdict.face:
                entry["zero_mass_worlds"] = list(verdict.face)
        report["non_degeneracy"] = entry
        lines.append(f"non-degeneracy: {entry['verdict']}")
        for w in entry.get("witness", ()):
            lines.append(f"  {w['owner']} {tuple(w['pair'])}: ({', '.join(w['vector'])})")
        if entry.get("zero_mass_worlds"):
            lines.append(f"  on the face where {', '.join(entry['zero_mass_worlds'])} has zero mass")
    if args.policy:
        policy = io.policy_from_json(inst, _read(args.policy))
        st = is_stable_policy(inst, policy)
        bare = any(getattr(sig, "profile", ()) is None for sig in policy.signals)
        ind = None if bare else is_indicative(inst, policy)
        bp = is_bayes_plausible(inst, policy)
        words = ["stable" if st else "unstable"]
        words.append("no declared profile" if bare else ("indicative" if ind else "not indicative"))
        entry = {
            "verdict": ", ".join(words),
            "stable": bool(st),
            "indicative": ind,
            "bayes_plausible": bp,
            "utility": fmt(policy_utility(inst, policy)),
        }
        if not st:
            entry["signal"] = st.signal
            entry["blocking_pairs"] = [list(p) for p in st.blocking]
            if isinstance(st.posterior, tuple):
                entry["posterior"] = [fmt(q) for q in st.posterior]
        report["policy"] = entry
        failed = not (st and ind is not False and bp)
        lines.append(f"policy: {entry['verdict']}; utility {entry['utility']}")
        for a, b in entry.get("blocking_pairs", ()):
            lines.append(f"  blocking pair ({a}, {b}) under signal {entry['signal']}")
    _emit(args, report, "\n".join(lines))
    return EXIT_FAIL if failed else EXIT_OK


# --------------------------------------------------------------------------
# gen / perturb / reduce


def _gen(args):
    kind = args.kind or "instance"
    if kind not in GEN_KINDS:
        raise InputError(f"unknown generator kind {kind!r}; choose from {GEN_KINDS}")
    if kind == "instance":
        obj = generators.random_instance(args.n, args.worlds, args.seed)
    elif kind == "typed":
        obj = generators.random_typed(args.types_a, args.types_b, args.worlds, args.seed, unit=args.unit)
    elif kind == "smti":
        obj = generators.random_smti(args.n, args.n, args.seed)
    elif kind == "wsm":
        obj = generators.random_wsm(args.n, args.seed, tie_rate=args.tie_rate)
    else:
        obj = generators.random_persuasion(args.n, args.worlds, args.seed)
    _write_or_print(args, io.to_json(obj))
    return EXIT_OK


def _perturb(args):
    if args.eps is None:
        raise InputError("perturb needs --eps")
    kind, obj = _load(_input_path(args))
    if kind != "instance":
        raise RegimeError("perturb works on matching instance files")
    _write_or_print(args, io.instance_to_json(perturb(obj, to_fraction(args.eps), args.seed)))
    return EXIT_OK


def _reduce(args):
    kind_needed = {"smti-restrict": "smti", "smti-wsm": "smti", "wsm-private": "wsm", "persuasion-matching": "persuasion"}
    if args.kind not in kind_needed:
        raise InputError(f"unknown reduction {args.kind!r}; choose from {REDUCTIONS}")
    kind, obj = _load(_input_path(args))
    if kind != kind_needed[args.kind]:
        raise RegimeError(f"{args.kind} needs a {kind_needed[args.kind]} file, got {kind}")
    extra = {}
    if args.kind == "smti-restrict":
        out, info = smti_restrict(obj)
        extra = {"a_copies": list(info.a_copies), "a_links": list(info.a_links)}
    elif args.kind == "smti-wsm":
        out = smti_to_wsm(obj)
    elif args.kind == "wsm-private":
        out = wsm_to_private_persuasion(obj)
    else:
        out = persuasion_to_matching(obj, to_fraction(args.eps or 0), args.seed)
    payload = io.to_json(out)
    if args.out:
        io.write_json(args.out, payload)
        _emit(args, {"kind": args.kind, "output": args.out, **extra})
    else:
        sys.stdout.write(io.dumps(payload))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stable-persuasion", description="Exact persuasion solvers for stable matching markets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, positional=True):
        if positional:
            p.add_argument("input", nargs="?", help="input JSON file")
            p.add_argument("--in", dest="in_path", help="input JSON file")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--eps", help="noise magnitude, e.g. 1/100")
        p.add_argument("--human", action="store_true", help="plain-text tables instead of JSON")
        p.add_argument("--max-worlds", type=int, default=DEFAULT_WORLD_CAP)
        p.add_argument("--max-types", type=int, default=DEFAULT_TYPE_CAP)
        p.add_argument("--max-n", type=int, default=ORACLE_MAX_N, help="agent cap per side for the oracle")
        p.add_argument("--max-expand", type=int, default=DEFAULT_EXPAND_CAP, help="cap for typed-to-agent expansion")
        p.add_argument("--max-tuples", type=int, default=DEFAULT_TUPLE_CAP, help="cap on private label combinations")

    p = sub.add_parser("solve", help="compute an optimal policy")
    common(p)
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--perturb", metavar="EPS", help="perturb values before solving (uses --seed)")
    p.add_argument("--debug", action="store_true", help="include enumerated cells in the policy file")
    p.set_defaults(func=_solve)

    p = sub.add_parser("check", help="verify a policy or test non-degeneracy")
    common(p)
    p.add_argument("--policy", help="policy file to verify")
    p.add_argument("--non-degeneracy", action="store_true")
    p.set_defaults(func=_check)

    p = sub.add_parser("gen", help="generate a random instance")
    common(p, positional=False)
    p.add_argument("--kind", default="instance", help=f"one of {', '.join(GEN_KINDS)}")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--worlds", type=int, default=2)
    p.add_argument("--types-a", type=int, default=2)
    p.add_argument("--types-b", type=int, default=2)
    p.add_argument("--unit", action="store_true", help="typed: every type has size one")
    p.add_argument("--tie-rate", type=float, default=0.0, help="wsm: chance of a tie per A-agent")
    p.set_defaults(func=_gen)

    p = sub.add_parser("perturb", help="add seeded noise to an instance")
    common(p)
    p.set_defaults(func=_perturb)

    p = sub.add_parser("reduce", help="run an instance transformation")
    common(p)
    p.add_argument("--kind", required=True, help=f"one of {', '.join(REDUCTIONS)}")
    p.set_defaults(func=_reduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except CapacityError as exc:
        sys.stderr.write(f"capacity: {exc}\n")
        return EXIT_CAPACITY
    except RegimeError as exc:
        sys.stderr.write(f"regime: {exc}\n")
        return EXIT_REGIME
    except PersuasionError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
