"""JSON reading and writing. Rationals are written as ``"p/q"`` strings."""

from __future__ import annotations

import json

from .errors import InputError
from .matching import WsmProblem
from .model import (
    Instance,
    JointSignal,
    Matching,
    MetaSignal,
    PreferenceProfile,
    PrivatePolicy,
    PublicPolicy,
    policy_utility,
)
from .rational import fmt, to_fraction
from .reductions import PersuasionInstance, SmtiInstance
from .typed import TypedInstance


def _world_map(worlds, vec) -> dict:
    return {w: fmt(q) for w, q in zip(worlds, vec)}


def _nested(worlds, table) -> dict:
    return {x: {y: _world_map(worlds, v) for y, v in row.items()} for x, row in table.items()}


def _tuplify(obj):
    if isinstance(obj, list):
        return tuple(_tuplify(e) for e in obj)
    return obj


def _listify(obj):
    if isinstance(obj, tuple):
        return [_listify(e) for e in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from exc


def _need(d, *keys, what="file"):
    if not isinstance(d, dict):
        raise InputError(f"{what} must be a JSON object")
    missing = [k for k in keys if k not in d]
    if missing:
        raise InputError(f"{what} lacks keys {missing}")


# --------------------------------------------------------------------------
# instances


def instance_to_json(inst: Instance) -> dict:
    return {
        "worlds": list(inst.worlds),
        "prior": _world_map(inst.worlds, inst.prior),
        "side_a": list(inst.side_a),
        "side_b": list(inst.side_b),
        "values": _nested(inst.worlds, inst.values),
        "utilities": _nested(inst.worlds, inst.utilities),
    }


def instance_from_json(d) -> Instance:
    _need(d, "worlds", "prior", "side_a", "side_b", "values", "utilities", what="instance")
    return Instance.build(d["worlds"], d["prior"], d["side_a"], d["side_b"], d["values"], d["utilities"])


def typed_to_json(ti: TypedInstance) -> dict:
    return {
        "worlds": list(ti.worlds),
        "prior": _world_map(ti.worlds, ti.prior),
        "types": {"a": {t: ti.sizes[t] for t in ti.a_types}, "b": {t: ti.sizes[t] for t in ti.b_types}},
        "values": _nested(ti.worlds, ti.values),
        "utilities": _nested(ti.worlds, ti.utilities),
    }


def typed_from_json(d) -> TypedInstance:
    _need(d, "worlds", "prior", "types", "values", "utilities", what="typed instance")
    _need(d["types"], "a", "b", what="types")
    return TypedInstance.build(d["worlds"], d["prior"], d["types"]["a"], d["types"]["b"], d["values"], d["utilities"])


def smti_to_json(m: SmtiInstance) -> dict:
    return {
        "side_a": list(m.side_a),
        "side_b": list(m.side_b),
        "prefs": {x: list(m.prefs.get(x, ())) for x in m.side_a + m.side_b},
        "ties": {a: list(t) for a, t in m.ties.items()},
    }


def smti_from_json(d) -> SmtiInstance:
    _need(d, "side_a", "side_b", "prefs", what="SMTI instance")
    return SmtiInstance.build(d["side_a"], d["side_b"], d["prefs"], d.get("ties", {}))


def wsm_to_json(w: WsmProblem) -> dict:
    return {
        "side_a": list(w.side_a),
        "side_b": list(w.side_b),
        "profile": {x: _listify(t) for x, t in w.profile.tiers.items()},
        "weights": {a: {b: fmt(w.weights[(a, b)]) for b in w.side_b} for a in w.side_a},
    }


def wsm_from_json(d) -> WsmProblem:
    _need(d, "side_a", "side_b", "profile", "weights", what="WSM instance")
    prof = PreferenceProfile({x: _tuplify(t) for x, t in d["profile"].items()})
    weights = {(a, b): to_fraction(v) for a, row in d["weights"].items() for b, v in row.items()}
    return WsmProblem.build(d["side_a"], d["side_b"], prof, weights)


def persuasion_to_json(pp: PersuasionInstance) -> dict:
    return {
        "worlds": list(pp.worlds),
        "prior": _world_map(pp.worlds, pp.prior),
        "receivers": list(pp.receivers),
        "actions": list(pp.actions),
        "values": _nested(pp.worlds, pp.values),
        "payoff": {j: _world_map(pp.worlds, v) for j, v in pp.payoff.items()},
    }


def persuasion_from_json(d) -> PersuasionInstance:
    _need(d, "worlds", "prior", "receivers", "actions", "values", "payoff", what="persuasion instance")
    worlds = d["worlds"]

    def vec(e):
        return [e[w] for w in worlds] if isinstance(e, dict) else e

    return PersuasionInstance.build(
        worlds, vec(d["prior"]), d["receivers"], d["actions"],
        {i: {j: vec(v) for j, v in row.items()} for i, row in d["values"].items()},
        {j: vec(v) for j, v in d["payoff"].items()},
    )


KINDS = {
    "instance": (instance_from_json, instance_to_json),
    "typed": (typed_from_json, typed_to_json),
    "smti": (smti_from_json, smti_to_json),
    "wsm": (wsm_from_json, wsm_to_json),
    "persuasion": (persuasion_from_json, persuasion_to_json),
}


def detect_kind(d) -> str:
    if not isinstance(d, dict):
        raise InputError("top-level JSON value must be an object")
    if "types" in d:
        return "typed"
    if "receivers" in d:
        return "persuasion"
    if "weights" in d:
        return "wsm"
    if "prefs" in d:
        return "smti"
    if "signals" in d:
        return "policy"
    if "side_a" in d:
        return "instance"
    raise InputError("cannot tell what kind of file this is")


def load(d):
    """Parse any supported non-policy object; returns ``(kind, object)``."""
    kind = detect_kind(d)
    if kind == "policy":
        raise InputError("a policy file needs its instance; use policy_from_json")
    return kind, KINDS[kind][0](d)


def to_json(obj) -> dict:
    for cls, kind in ((Instance, "instance"), (TypedInstance, "typed"), (SmtiInstance, "smti"),
                      (WsmProblem, "wsm"), (PersuasionInstance, "persuasion")):
        if isinstance(obj, cls):
            return KINDS[kind][1](obj)
    raise InputError(f"cannot serialize {type(obj).__name__}")


# --------------------------------------------------------------------------
# policies


def _tag(tag):
    return tag if tag is None or isinstance(tag, (str, int)) else str(tag)


def policy_to_json(inst: Instance, policy) -> dict:
    signals = []
    for sig, row in zip(policy.signals, policy.kernel):
        if isinstance(policy, PrivatePolicy):
            entry = {"joint_signal": {x: _listify(c) for x, c in sig.components.items()}}
        else:
            entry = {"profile": None if sig.profile is None else {x: _listify(t) for x, t in sig.profile.tiers.items()}}
        entry["matching"] = sig.matching.as_dict()
        entry["kernel"] = _world_map(inst.worlds, row)
        if sig.tag is not None:
            entry["tag"] = _tag(sig.tag)
        signals.append(entry)
    return {
        "mode": policy.mode,
        "signals": signals,
        "utility": fmt(policy_utility(inst, policy)),
        "notes": list(policy.notes),
    }


def policy_from_json(inst: Instance, d):
    _need(d, "mode", "signals", what="policy")
    signals, kernel = [], []
    for e in d["signals"]:
        _need(e, "matching", "kernel", what="signal")
        m = Matching(e["matching"])
        ker = e["kernel"]
        kernel.append([ker[w] for w in inst.worlds] if isinstance(ker, dict) else ker)
        if d["mode"] == "private":
            _need(e, "joint_signal", what="private signal")
            signals.append(JointSignal({x: _tuplify(c) for x, c in e["joint_signal"].items()}, m, e.get("tag")))
        elif d["mode"] == "public":
            prof = e.get("profile")
            prof = None if prof is None else PreferenceProfile({x: _tuplify(t) for x, t in prof.items()})
            signals.append(MetaSignal(prof, m, e.get("tag")))
        else:
            raise InputError(f"unknown policy mode {d['mode']!r}")
    cls = PrivatePolicy if d["mode"] == "private" else PublicPolicy
    return cls.build(inst, signals, kernel, tuple(d.get("notes", ())))


def read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))

