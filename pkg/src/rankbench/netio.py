"""JSON reading and writing of probability and rank networks.

Layout::

    {
      "format": "rankbench-network", "version": 1,
      "kind": "probability" | "rank",
      "variables": [{"name": "battery", "domain": ["absent", "present"]}, ...],
      "nodes": [
        {"name": "battery", "parents": [], "kind": "prior", "probabilities": [0.999, 0.001]},
        {"name": "lights", "parents": ["battery-charge"], "kind": "table", "rows": [[...], ...]},
        {"name": "x", "parents": [...], "kind": "noisy-or", "strengths": [...], "leak": 0.01,
         "active": "present", "parent_active": [...]},
        {"name": "y", "parents": [...], "kind": "noisy-max", "strengths": [[[...], ...], ...],
         "leak": [...], "severity": [...]}
      ],
      "diagnoses": [...], "findings": [...]
    }

Table rows follow parent configurations in lexicographic order of the parent
domains, first parent most significant. Rank networks use ``"kind": "table"``
or ``"prior"`` nodes whose entries are integers or the string ``"inf"``.
``active``, ``parent_active``, ``severity``, ``diagnoses`` and ``findings``
are optional.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model import ExplicitTable, Network, NoisyMax, NoisyOr, Prior, RankNetwork, Variable, ensure_valid

FORMAT = "rankbench-network"
VERSION = 1


def _rank_out(x):
    return "inf" if math.isinf(x) else int(x)


def _rank_in(x):
    if x == "inf":
        return math.inf
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValidationError(f"rank entries must be integers or 'inf', got {x!r}")
    return float(x)


def network_to_dict(net) -> dict:
    doc = {"format": FORMAT, "version": VERSION, "kind": net.kind,
           "variables": [{"name": v.name, "domain": list(v.domain)} for v in net.variable_list],
           "nodes": []}
    for v in net.variable_list:
        node = {"name": v.name, "parents": list(net.parents[v.name])}
        if isinstance(net, RankNetwork):
            rows = net.rows(v.name)
            if net.parents[v.name]:
                node.update(kind="table", rows=[[_rank_out(x) for x in r] for r in rows])
            else:
                node.update(kind="prior", ranks=[_rank_out(x) for x in rows[0]])
        else:
            node.update(_spec_to_dict(net.specs[v.name]))
        doc["nodes"].append(node)
    if net.diagnoses:
        doc["diagnoses"] = list(net.diagnoses)
    if net.findings:
        doc["findings"] = list(net.findings)
    return doc


def _spec_to_dict(spec) -> dict:
    if isinstance(spec, Prior):
        return {"kind": "prior", "probabilities": list(spec.probabilities)}
    if isinstance(spec, ExplicitTable):
        return {"kind": "table", "rows": [list(r) for r in spec.rows]}
    if isinstance(spec, NoisyOr):
        out = {"kind": "noisy-or", "strengths": list(spec.strengths), "leak": spec.leak, "active": spec.active}
        if spec.parent_active is not None:
            out["parent_active"] = list(spec.parent_active)
        return out
    if isinstance(spec, NoisyMax):
        out = {"kind": "noisy-max", "strengths": [[list(vec) for vec in per] for per in spec.strengths],
               "leak": list(spec.leak)}
        if spec.severity is not None:
            out["severity"] = list(spec.severity)
        return out
    raise ValidationError(f"cannot serialize conditional spec {type(spec).__name__}")


def _spec_from_dict(node: dict):
    kind = node.get("kind")
    if kind == "prior":
        return Prior(node["probabilities"])
    if kind == "table":
        return ExplicitTable(node["rows"])
    if kind == "noisy-or":
        return NoisyOr(node["strengths"], node.get("leak", 0.0), node.get("active", "present"), node.get("parent_active"))
    if kind == "noisy-max":
        return NoisyMax(node["strengths"], node["leak"], node.get("severity"))
    raise ValidationError(f"node {node.get('name')!r}: unknown kind {kind!r}")


def network_from_dict(doc: dict, validate: bool = True):
    try:
        if doc.get("format", FORMAT) != FORMAT:
            raise ValidationError(f"not a {FORMAT} document")
        variables = [Variable(v["name"], tuple(v["domain"])) for v in doc["variables"]]
        nodes = doc["nodes"]
        parents = {n["name"]: tuple(n.get("parents", ())) for n in nodes}
        kind = doc.get("kind", "probability")
        meta = dict(diagnoses=tuple(doc.get("diagnoses", ())), findings=tuple(doc.get("findings", ())))
        if kind == "rank":
            tables = {}
            for n in nodes:
                entries = [n["ranks"]] if n.get("kind") == "prior" else n["rows"]
                tables[n["name"]] = np.array([[_rank_in(x) for x in r] for r in entries], dtype=float)
            net = RankNetwork(variables, parents, tables, **meta)
        elif kind == "probability":
            net = Network(variables, parents, {n["name"]: _spec_from_dict(n) for n in nodes}, **meta)
        else:
            raise ValidationError(f"unknown network kind {kind!r}")
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ValidationError(f"malformed network document: {exc!r}") from exc
    missing = set(net.variables) - set(parents)
    if missing:
        raise ValidationError(f"no node entry for variable(s) {sorted(missing)}")
    return ensure_valid(net) if validate else net


def dumps(net) -> str:
    return json.dumps(network_to_dict(net), indent=2) + "\n"


def loads(text: str, validate: bool = True):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"network file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("network document must be a JSON object")
    return network_from_dict(doc, validate=validate)


def save_network(net, path) -> None:
    Path(path).write_text(dumps(net), encoding="utf-8")


def load_network(path, validate: bool = True):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read network file {path}: {exc}") from exc
    return loads(text, validate=validate)
