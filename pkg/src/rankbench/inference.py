"""Exact posterior marginals by variable elimination over an algebra.

The same routine serves both schemes: with ``SUM_PRODUCT`` it returns
P(x | e), with ``MIN_PLUS`` it returns kappa(x | e) = kappa(x, e) - kappa(e).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import MIN_PLUS, SUM_PRODUCT, Algebra, get_algebra
from .errors import ContradictoryEvidenceError, StateSpaceTooLarge
from .model import RankNetwork, check_evidence

ORACLE_LIMIT = 2 ** 20
# Above this many target configurations, targets are marginalized one by one.
JOINT_LIMIT = 2 ** 16


@dataclass(frozen=True)
class Factor:
    scope: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != len(self.scope):
            raise ValueError(f"factor over {self.scope} has {self.values.ndim} axes")


def _aligned(f: Factor, scope: Sequence[str]) -> np.ndarray:
    """View of ``f.values`` broadcastable against a table over ``scope``."""
    present = [v for v in scope if v in f.scope]
    arr = np.transpose(f.values, [f.scope.index(v) for v in present])
    shape, it = [], iter(arr.shape)
    for v in scope:
        shape.append(next(it) if v in f.scope else 1)
    return arr.reshape(shape)


def combine(factors: Sequence[Factor], algebra: Algebra) -> Factor:
    scope: list[str] = []
    sizes: dict[str, int] = {}
    for f in factors:
        for v, n in zip(f.scope, f.values.shape):
            if v not in sizes:
                sizes[v] = n
                scope.append(v)
    result = None
    for f in factors:
        arr = _aligned(f, scope)
        result = arr if result is None else algebra.combine(result, arr)
    if result is None:
        return Factor((), np.array(algebra.unit))
    return Factor(tuple(scope), np.broadcast_to(result, tuple(sizes[v] for v in scope)))


def eliminate(factors: list[Factor], var: str, algebra: Algebra) -> list[Factor]:
    touching = [f for f in factors if var in f.scope]
    if not touching:
        return factors
    rest = [f for f in factors if var not in f.scope]
    joint = combine(touching, algebra)
    axis = joint.scope.index(var)
    reduced = algebra.marginalize(joint.values, axis=axis)
    rest.append(Factor(joint.scope[:axis] + joint.scope[axis + 1:], np.asarray(reduced)))
    return rest


def restrict(f: Factor, evidence: Mapping[str, int]) -> Factor:
    if not any(v in evidence for v in f.scope):
        return f
    index = tuple(evidence[v] if v in evidence else slice(None) for v in f.scope)
    return Factor(tuple(v for v in f.scope if v not in evidence), f.values[index])


def min_fill_order(scopes: Iterable[Iterable[str]], to_eliminate: Iterable[str]) -> list[str]:
    """Greedy min-fill order; ties go to the lexicographically smallest name."""
    remaining = set(to_eliminate)
    adj: dict[str, set[str]] = {}
    for scope in scopes:
        scope = list(scope)
        for v in scope:
            adj.setdefault(v, set()).update(u for u in scope if u != v)
    for v in remaining:
        adj.setdefault(v, set())

    order = []
    while remaining:
        best, best_fill = None, None
        for v in sorted(remaining):
            nbrs = list(adj[v])
            fill = sum(1 for i, a in enumerate(nbrs) for b in nbrs[i + 1:] if b not in adj[a])
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
                if fill == 0:
                    break
        nbrs = adj.pop(best)
        for a in nbrs:
            adj[a].discard(best)
            adj[a].update(u for u in nbrs if u != a)
        remaining.remove(best)
        order.append(best)
    return order


def elimination_order(net, evidence: Mapping[str, str], targets: Iterable[str]) -> list[str]:
    """Min-fill order over every variable that is neither target nor observed."""
    targets = set(targets)
    hidden = [v for v in net.variables if v not in targets and v not in evidence]
    scopes = [[v for v in net.family(n) if v not in evidence] for n in net.variables]
    return min_fill_order(scopes, hidden)


def default_algebra(net) -> Algebra:
    return MIN_PLUS if isinstance(net, RankNetwork) else SUM_PRODUCT


def _relevant(net, evidence, targets, algebra) -> list[str]:
    """Drop barren variables: unobserved, untargeted leaves whose CPD rows
    marginalize to the unit contribute nothing and are removed repeatedly."""
    keep = set(net.variables)
    children = net.children()
    changed = True
    while changed:
        changed = False
        for v in sorted(keep):
            if v in targets or v in evidence:
                continue
            if any(c in keep for c in children[v]):
                continue
            if algebra.is_normalized_rows(net.table(v)):
                keep.discard(v)
                changed = True
    return [v for v in net.variables if v in keep]


def posterior_marginals(net, evidence: Mapping[str, str] | None = None, targets: Iterable[str] | None = None,
                        algebra: Algebra | str | None = None, order: Sequence[str] | None = None) -> dict:
    """Posterior distribution (or normalized ranking) of each target.

    Returns ``{target: {value: p_or_kappa}}``. Ranks come back as Python
    ints, with ``math.inf`` for impossible values.

    ``order`` overrides the min-fill order for the non-target variables
    (variables it does not mention are appended in min-fill order).
    """
    evidence = dict(evidence or {})
    algebra = default_algebra(net) if algebra is None else get_algebra(algebra)
    ev_idx = check_evidence(net, evidence)
    targets = list(dict.fromkeys(targets if targets is not None else net.diagnoses or net.variables))
    for t in targets:
        if t not in net.variables:
            raise KeyError(f"unknown target variable {t!r}")
    if not targets:
        return {}

    target_set = set(targets)
    relevant = _relevant(net, evidence, target_set, algebra)
    factors = [restrict(Factor(net.family(v), net.table(v)), ev_idx) for v in relevant]

    hidden = [v for v in relevant if v not in target_set and v not in evidence]
    if order is None:
        phase1 = min_fill_order([f.scope for f in factors], hidden)
    else:
        hidden_set = set(hidden)
        phase1 = [v for v in order if v in hidden_set]
        phase1 += min_fill_order([f.scope for f in factors], hidden_set - set(phase1))
    for v in phase1:
        factors = eliminate(factors, v, algebra)

    free_targets = [t for t in targets if t not in evidence]
    whole = None
    if math.prod(net.card(t) for t in free_targets) <= JOINT_LIMIT:
        whole = combine(factors, algebra)
    result = {}
    for t in targets:
        if whole is not None:
            axes = tuple(i for i, v in enumerate(whole.scope) if v != t)
            joint = Factor(tuple(v for v in whole.scope if v == t), algebra.marginalize(whole.values, axis=axes))
        else:
            others = [u for u in free_targets if u != t]
            local = factors
            for u in min_fill_order([f.scope for f in local], others):
                local = eliminate(local, u, algebra)
            joint = combine(local, algebra)
        var = net.variables[t]
        if t in evidence:
            total = algebra.total(joint.values)
            if (algebra.is_rank and math.isinf(total)) or (not algebra.is_rank and not total > 0.0):
                raise ContradictoryEvidenceError(evidence)
            values = np.full(var.card, algebra.zero)
            values[ev_idx[t]] = algebra.unit
        else:
            values = algebra.normalize(np.asarray(joint.values, dtype=float).reshape(var.card))
            if values is None:
                raise ContradictoryEvidenceError(evidence)
        result[t] = _as_distribution(var.domain, values, algebra)
    return result


def _as_distribution(domain, values, algebra) -> dict:
    if algebra.is_rank:
        return {d: (math.inf if math.isinf(x) else int(x)) for d, x in zip(domain, values)}
    return {d: float(x) for d, x in zip(domain, values)}


def enumerate_oracle(net, evidence: Mapping[str, str] | None = None, targets: Iterable[str] | None = None,
                     algebra: Algebra | str | None = None, limit: int = ORACLE_LIMIT) -> dict:
    """Reference posteriors by walking every joint state consistent with evidence.

    Uses only scalar arithmetic and table lookups, so it shares nothing with
    the elimination path beyond the compiled CPDs.
    """
    evidence = dict(evidence or {})
    algebra = default_algebra(net) if algebra is None else get_algebra(algebra)
    ev_idx = check_evidence(net, evidence)
    targets = list(dict.fromkeys(targets if targets is not None else net.diagnoses or net.variables))
    if not targets:
        return {}

    names = list(net.variables)
    free = [v for v in names if v not in evidence]
    n_states = math.prod(net.card(v) for v in free)
    if n_states > limit:
        raise StateSpaceTooLarge(f"{n_states} joint states exceed the enumeration limit of {limit}")

    rank = algebra.is_rank
    unit, zero = (0.0, math.inf) if rank else (1.0, 0.0)
    acc = {t: [zero] * net.card(t) for t in targets}
    total = zero
    tables = {v: net.table(v) for v in names}
    for values in product(*(range(net.card(v)) for v in free)):
        state = dict(ev_idx)
        state.update(zip(free, values))
        w = unit
        for v in names:
            x = float(tables[v][tuple(state[u] for u in net.family(v))])
            w = w + x if rank else w * x
        total = min(total, w) if rank else total + w
        for t in targets:
            i = state[t]
            acc[t][i] = min(acc[t][i], w) if rank else acc[t][i] + w

    if (rank and math.isinf(total)) or (not rank and total <= 0.0):
        raise ContradictoryEvidenceError(evidence)
    out = {}
    for t in targets:
        vals = [a - total if rank else a / total for a in acc[t]]
        out[t] = _as_distribution(net.variables[t].domain, vals, algebra)
    return out
