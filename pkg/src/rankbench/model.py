"""Discrete Bayesian networks with table, prior, noisy-OR and noisy-MAX CPDs.

Every conditional distribution compiles to a dense array whose axes are the
parents (in declared order) followed by the child. Flattening the parent
axes in C order enumerates parent configurations lexicographically, first
parent most significant, which is also the row order of the file format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence, Union

import numpy as np

from .algebra import SUM_PRODUCT, Algebra
from .errors import DomainError, ValidationError

ABSENT, PRESENT = "absent", "present"
BINARY = (ABSENT, PRESENT)

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple[str, ...] = BINARY

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))

    @property
    def card(self) -> int:
        return len(self.domain)

    def index(self, value: str) -> int:
        try:
            return self.domain.index(value)
        except ValueError:
            raise DomainError(f"{value!r} is not in the domain of {self.name!r} {list(self.domain)}") from None


@dataclass(frozen=True)
class Prior:
    """Distribution of a source variable, in domain order."""

    probabilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))


@dataclass(frozen=True)
class ExplicitTable:
    """One distribution over the child per parent configuration."""

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(float(x) for x in r) for r in self.rows))


@dataclass(frozen=True)
class NoisyOr:
    """Leaky noisy-OR over binary causes.

    ``strengths[i]`` is the probability that the effect takes its ``active``
    value when parent ``i`` is in its active state and every other cause is
    off. ``leak`` is the probability of the active effect with no cause on.
    A parent is "on" when it takes ``parent_active[i]`` (default
    ``present``); any other value counts as off.
    """

    strengths: tuple[float, ...]
    leak: float = 0.0
    active: str = PRESENT
    parent_active: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "strengths", tuple(float(c) for c in self.strengths))
        object.__setattr__(self, "leak", float(self.leak))
        if self.parent_active is not None:
            object.__setattr__(self, "parent_active", tuple(self.parent_active))

    def parent_on(self, i: int) -> str:
        return PRESENT if self.parent_active is None else self.parent_active[i]


@dataclass(frozen=True)
class NoisyMax:
    """Noisy-MAX: each cause independently draws an effect level.

    ``strengths[i][v]`` is the distribution (over the effect domain, in
    domain order) of the level drawn by parent ``i`` when it takes its
    ``v``-th value. The leak is a cause that is always active. The observed
    effect is the most severe of all draws; ``severity`` lists the effect
    values from least to most severe and defaults to domain order.
    """

    strengths: tuple[tuple[tuple[float, ...], ...], ...]
    leak: tuple[float, ...]
    severity: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(
            self,
            "strengths",
            tuple(tuple(tuple(float(x) for x in vec) for vec in per_parent) for per_parent in self.strengths),
        )
        object.__setattr__(self, "leak", tuple(float(x) for x in self.leak))
        if self.severity is not None:
            object.__setattr__(self, "severity", tuple(self.severity))


ConditionalSpec = Union[Prior, ExplicitTable, NoisyOr, NoisyMax]


def compile_noisy_or(spec: NoisyOr, n_parents: int | None = None) -> np.ndarray:
    """Expand a noisy-OR into a table in canonical orientation.

    The result has shape ``(2,) * n + (2,)``. Index 0 on a parent axis means
    the cause is off, 1 means on; on the last axis 0 is the inactive effect
    and 1 the active one. For the set S of active causes::

        P(inactive | S) = (1 - leak) * prod_{i in S} (1 - c_i)
    """
    c = np.asarray(spec.strengths, dtype=float)
    n = len(c) if n_parents is None else n_parents
    if len(c) != n:
        raise ValidationError(f"noisy-OR has {len(c)} strengths for {n} parents")
    if not (0.0 <= spec.leak <= 1.0) or np.any(~((c >= 0.0) & (c <= 1.0))):
        raise ValidationError("noisy-OR strengths and leak must lie in [0, 1]")

    inactive = np.full((2,) * n, 1.0 - spec.leak)
    for i, ci in enumerate(c):
        shape = [1] * n
        shape[i] = 2
        inactive = inactive * np.array([1.0, 1.0 - ci]).reshape(shape)
    return np.stack([inactive, 1.0 - inactive], axis=-1)


def _severity_perm(spec: NoisyMax, effect_domain: Sequence[str] | None, card: int) -> np.ndarray:
    if spec.severity is None:
        return np.arange(card)
    if effect_domain is None:
        raise ValidationError("noisy-MAX with a severity order needs the effect domain")
    if sorted(spec.severity) != sorted(effect_domain):
        raise ValidationError(f"severity order {list(spec.severity)} is not a permutation of {list(effect_domain)}")
    return np.array([list(effect_domain).index(v) for v in spec.severity])


def compile_noisy_max(
    spec: NoisyMax,
    effect_domain: Sequence[str] | None = None,
    algebra: Algebra = SUM_PRODUCT,
    check: bool = True,
) -> np.ndarray:
    """Expand a noisy-MAX into a table of shape ``(*parent_cards, card)``.

    Works in any algebra: with ranks, ``strengths`` and ``leak`` hold
    kappa values and the result is the min-plus image of the same model.
    The running maximum is folded in one cause at a time; the level of
    max(a, b) is m exactly when (a = m and b <= m) or (a < m and b = m).
    """
    leak = np.asarray(spec.leak, dtype=float)
    card = leak.shape[0]
    qs = [np.asarray(q, dtype=float) for q in spec.strengths]
    if check:
        _check_noisy_max_params(qs, leak, algebra)
    perm = _severity_perm(spec, effect_domain, card)

    running = leak[perm]
    for q in qs:
        q = q[:, perm]
        r = running[..., None, :]
        r_cum = algebra.add.accumulate(r, axis=-1)
        q_cum = algebra.add.accumulate(q, axis=-1)
        new = algebra.combine(r, q_cum)
        if card > 1:
            tail = algebra.combine(r_cum[..., :-1], q[:, 1:])
            new[..., 1:] = algebra.add(new[..., 1:], tail)
        running = new

    out = np.empty_like(running)
    out[..., perm] = running
    return out


def _check_noisy_max_params(qs, leak, algebra):
    vectors = [leak] + [row for q in qs for row in np.atleast_2d(q)]
    for q in qs:
        if q.ndim != 2 or q.shape[1] != leak.shape[0]:
            raise ValidationError("noisy-MAX strength vectors must have one entry per effect value")
    for vec in vectors:
        if algebra.is_rank:
            if np.any(vec < 0) or algebra.total(vec) != 0.0:
                raise ValidationError(f"noisy-MAX rank vector {vec.tolist()} must be non-negative with minimum 0")
        elif np.any(~((vec >= 0.0) & (vec <= 1.0))) or abs(vec.sum() - 1.0) > ROW_SUM_TOL:
            raise ValidationError(f"noisy-MAX strength vector {vec.tolist()} is not a distribution")


def noisy_or_as_max(spec: NoisyOr, parents: Sequence[Variable], effect: Variable) -> NoisyMax:
    """The noisy-MAX with the same semantics as a (labelled) noisy-OR."""
    off = [1.0 if v != spec.active else 0.0 for v in effect.domain]
    on_idx = effect.index(spec.active)

    def dist(p_active):
        vec = [0.0] * effect.card
        vec[on_idx] = p_active
        vec[1 - on_idx] = 1.0 - p_active
        return tuple(vec)

    strengths = []
    for i, parent in enumerate(parents):
        strengths.append(tuple(dist(spec.strengths[i]) if v == spec.parent_on(i) else tuple(off) for v in parent.domain))
    return NoisyMax(tuple(strengths), dist(spec.leak), severity=tuple(v for v in effect.domain if v != spec.active) + (spec.active,))


class _DagModel:
    """Structure shared by probability and rank networks."""

    kind = "abstract"

    def __init__(self, variables: Sequence[Variable], parents: Mapping[str, Sequence[str]],
                 diagnoses: Sequence[str] = (), findings: Sequence[str] = ()):
        self.variable_list = tuple(variables)
        self.variables = {v.name: v for v in self.variable_list}
        self.parents = {v.name: tuple(parents.get(v.name, ())) for v in self.variable_list}
        self.diagnoses = tuple(diagnoses)
        self.findings = tuple(findings)
        self._tables: dict[str, np.ndarray] = {}

    def __repr__(self):
        return f"{type(self).__name__}({len(self.variables)} variables)"

    def card(self, name: str) -> int:
        return self.variables[name].card

    def family(self, name: str) -> tuple[str, ...]:
        return self.parents[name] + (name,)

    def children(self) -> dict[str, list[str]]:
        out = {name: [] for name in self.variables}
        for child, ps in self.parents.items():
            for p in ps:
                if p in out:
                    out[p].append(child)
        return out

    def roots(self) -> list[str]:
        return [n for n, ps in self.parents.items() if not ps]

    def topological_order(self) -> list[str]:
        order, state = [], {}

        def visit(n, stack):
            st = state.get(n)
            if st == "done":
                return
            if st == "active":
                raise ValidationError("network contains a directed cycle through " + " -> ".join(stack + [n]))
            state[n] = "active"
            for p in self.parents.get(n, ()):
                if p in self.variables:
                    visit(p, stack + [n])
            state[n] = "done"
            order.append(n)

        for n in self.variables:
            visit(n, [])
        return order

    def table(self, name: str) -> np.ndarray:
        tab = self._tables.get(name)
        if tab is None:
            tab = self._compile(name)
            tab.setflags(write=False)
            self._tables[name] = tab
        return tab

    def rows(self, name: str) -> np.ndarray:
        return self.table(name).reshape(-1, self.card(name))

    def _compile(self, name: str) -> np.ndarray:
        raise NotImplementedError


class Network(_DagModel):
    """A Bayesian network over discrete variables with numeric CPDs."""

    kind = "probability"

    def __init__(self, variables, parents, specs: Mapping[str, ConditionalSpec], diagnoses=(), findings=()):
        super().__init__(variables, parents, diagnoses, findings)
        self.specs = dict(specs)

    def _compile(self, name):
        spec = self.specs[name]
        var = self.variables[name]
        pvars = [self.variables[p] for p in self.parents[name]]
        shape = tuple(p.card for p in pvars) + (var.card,)
        if isinstance(spec, Prior):
            if pvars:
                raise ValidationError(f"{name}: a prior cannot have parents")
            return np.array(spec.probabilities, dtype=float).reshape(shape)
        if isinstance(spec, ExplicitTable):
            return np.array(spec.rows, dtype=float).reshape(shape)
        if isinstance(spec, NoisyOr):
            if var.card != 2:
                raise ValidationError(f"{name}: noisy-OR needs a binary effect")
            canonical = compile_noisy_or(spec, len(pvars))
            maps = [np.array([1 if v == spec.parent_on(i) else 0 for v in p.domain]) for i, p in enumerate(pvars)]
            maps.append(np.array([1 if v == spec.active else 0 for v in var.domain]))
            return canonical[np.ix_(*maps)]
        if isinstance(spec, NoisyMax):
            if len(spec.strengths) != len(pvars):
                raise ValidationError(f"{name}: noisy-MAX has {len(spec.strengths)} strength sets for {len(pvars)} parents")
            for p, q in zip(pvars, spec.strengths):
                if len(q) != p.card:
                    raise ValidationError(f"{name}: noisy-MAX needs one strength vector per value of {p.name}")
            return compile_noisy_max(spec, var.domain)
        raise ValidationError(f"{name}: unsupported conditional spec {type(spec).__name__}")

    def with_specs(self, updates: Mapping[str, ConditionalSpec]) -> "Network":
        specs = dict(self.specs)
        specs.update(updates)
        return Network(self.variable_list, self.parents, specs, self.diagnoses, self.findings)


class RankNetwork(_DagModel):
    """A network whose CPDs are kappa rankings (non-negative ints or inf)."""

    kind = "rank"

    def __init__(self, variables, parents, tables: Mapping[str, np.ndarray], diagnoses=(), findings=()):
        super().__init__(variables, parents, diagnoses, findings)
        self.raw_tables = {k: np.asarray(v, dtype=float) for k, v in tables.items()}

    def _compile(self, name):
        var = self.variables[name]
        shape = tuple(self.card(p) for p in self.parents[name]) + (var.card,)
        return np.array(self.raw_tables[name], dtype=float).reshape(shape)


Evidence = Mapping[str, str]


def check_evidence(net: _DagModel, evidence: Evidence) -> dict[str, int]:
    """Map evidence labels to domain indices, rejecting unknown names/values."""
    out = {}
    for name, value in evidence.items():
        if name not in net.variables:
            raise DomainError(f"evidence names unknown variable {name!r}")
        out[name] = net.variables[name].index(value)
    return out


def validate(net: _DagModel) -> list[str]:
    """Collect every structural problem in ``net``; empty means valid.

    Never raises: malformed pieces are reported, not propagated.
    """
    issues: list[str] = []
    try:
        variable_list = list(net.variable_list)
    except Exception as exc:  # noqa: BLE001
        return [f"unreadable variable list: {exc}"]

    seen = set()
    for var in variable_list:
        try:
            if not isinstance(var.name, str) or not var.name:
                issues.append(f"variable {var!r}: name must be a non-empty string")
            if var.name in seen:
                issues.append(f"variable {var.name}: declared more than once")
            seen.add(var.name)
            if len(var.domain) < 2:
                issues.append(f"variable {var.name}: domain needs at least 2 values")
            if len(set(var.domain)) != len(var.domain):
                issues.append(f"variable {var.name}: domain values are not distinct")
        except Exception as exc:  # noqa: BLE001
            issues.append(f"variable {var!r}: malformed ({exc})")

    for name, ps in net.parents.items():
        for p in ps:
            if p not in net.variables:
                issues.append(f"variable {name}: parent {p!r} is not a declared variable")
        if len(set(ps)) != len(ps):
            issues.append(f"variable {name}: repeated parent")

    issues.extend(_cycle_issues(net))

    for meta, names in (("diagnoses", net.diagnoses), ("findings", net.findings)):
        for n in names:
            if n not in net.variables:
                issues.append(f"{meta}: {n!r} is not a declared variable")

    for name in net.variables:
        if any(p not in net.variables for p in net.parents[name]):
            continue
        try:
            issues.extend(_node_issues(net, name))
        except Exception as exc:  # noqa: BLE001
            issues.append(f"variable {name}: malformed conditional ({exc})")
    return issues


def _cycle_issues(net) -> list[str]:
    try:
        net.topological_order()
    except ValidationError as exc:
        return [f"acyclicity violation: {exc}"]
    return []


def _node_issues(net, name) -> list[str]:
    var = net.variables[name]
    expected_rows = math.prod(net.card(p) for p in net.parents[name])
    if isinstance(net, RankNetwork):
        if name not in net.raw_tables:
            return [f"variable {name}: missing rank table"]
        raw = net.raw_tables[name]
        if raw.size != expected_rows * var.card:
            return [f"variable {name}: rank table has {raw.size} entries, expected {expected_rows * var.card}"]
        bad = raw[~np.isinf(raw)]
        out = []
        if np.any(raw < 0) or np.any(np.isnan(raw)) or np.any(bad != np.floor(bad)):
            out.append(f"variable {name}: ranks must be non-negative integers or inf")
            return out
        for r, row in enumerate(raw.reshape(-1, var.card)):
            if row.min() != 0:
                out.append(f"variable {name}: row {r} has minimum rank {row.min():g}, not 0 (rank-normalization violation)")
        return out

    spec = net.specs.get(name)
    if spec is None:
        return [f"variable {name}: no conditional spec"]
    out = []
    if isinstance(spec, Prior):
        if net.parents[name]:
            return [f"variable {name}: prior given for a variable with parents"]
        rows = [spec.probabilities]
    elif isinstance(spec, ExplicitTable):
        rows = spec.rows
        if len(rows) != expected_rows:
            return [f"variable {name}: table has {len(rows)} rows, expected {expected_rows}"]
    elif isinstance(spec, NoisyOr):
        if var.card != 2:
            out.append(f"variable {name}: noisy-OR effect must be binary")
        if len(spec.strengths) != len(net.parents[name]):
            out.append(f"variable {name}: {len(spec.strengths)} noisy-OR strengths for {len(net.parents[name])} parents")
        for i, c in enumerate(spec.strengths):
            if not 0.0 <= c <= 1.0:
                out.append(f"variable {name}: strength {i} = {c} outside [0, 1]")
        if not 0.0 <= spec.leak <= 1.0:
            out.append(f"variable {name}: leak {spec.leak} outside [0, 1]")
        if spec.active not in var.domain:
            out.append(f"variable {name}: active value {spec.active!r} not in domain")
        if spec.parent_active is not None:
            if len(spec.parent_active) != len(net.parents[name]):
                out.append(f"variable {name}: parent_active has wrong length")
            else:
                for p, v in zip(net.parents[name], spec.parent_active):
                    if v not in net.variables[p].domain:
                        out.append(f"variable {name}: active value {v!r} not in domain of parent {p}")
        if out:
            return out
        rows = None
    elif isinstance(spec, NoisyMax):
        if len(spec.strengths) != len(net.parents[name]):
            return [f"variable {name}: {len(spec.strengths)} noisy-MAX strength sets for {len(net.parents[name])} parents"]
        for p, q in zip(net.parents[name], spec.strengths):
            if len(q) != net.card(p):
                out.append(f"variable {name}: noisy-MAX needs {net.card(p)} strength vectors for parent {p}")
            for v, vec in enumerate(q):
                out.extend(_dist_issues(f"variable {name}: strength vector for {p}[{v}]", vec, var.card))
        out.extend(_dist_issues(f"variable {name}: leak distribution", spec.leak, var.card))
        if spec.severity is not None and sorted(spec.severity) != sorted(var.domain):
            out.append(f"variable {name}: severity order is not a permutation of the domain")
        if out:
            return out
        rows = None
    else:
        return [f"variable {name}: unsupported conditional spec {type(spec).__name__}"]

    if rows is None:
        rows = net.rows(name)
    for r, row in enumerate(rows):
        out.extend(_dist_issues(f"variable {name}: row {r}", row, var.card))
    return out


def _dist_issues(label, vec, card) -> list[str]:
    vec = list(vec)
    if len(vec) != card:
        return [f"{label} has {len(vec)} entries, expected {card}"]
    if any(not (0.0 <= x <= 1.0) for x in vec):
        return [f"{label} has entries outside [0, 1]"]
    total = math.fsum(vec)
    if abs(total - 1.0) > ROW_SUM_TOL:
        return [f"{label} sums to {total!r}, not 1 (row-sum violation)"]
    return []


def ensure_valid(net: _DagModel) -> _DagModel:
    issues = validate(net)
    if issues:
        raise ValidationError(f"invalid network ({len(issues)} issue(s)): " + "; ".join(issues[:5]), issues)
    return net


def parent_configurations(net: _DagModel, name: str):
    """Parent value tuples in table row order."""
    return list(product(*(net.variables[p].domain for p in net.parents[name])))
