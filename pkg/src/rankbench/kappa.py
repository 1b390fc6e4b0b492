"""Conversions between probabilities and kappa ranks.

``kappa_map`` sends a probability p to the rank k with eps**k > p >= eps**(k+1).
Thresholds such as eps = 0.1 and entries such as 0.01 are meant as the
decimal numbers they are written as, so comparisons that land within
floating-point noise of a boundary are settled exactly on the shortest
decimal representation of both operands (``0.1 ** 2 == 0.01`` holds there,
unlike in binary floating point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .algebra import MIN_PLUS
from .errors import DomainError, ValidationError
from .model import (
    ExplicitTable,
    Network,
    NoisyMax,
    NoisyOr,
    Prior,
    RankNetwork,
    compile_noisy_max,
    ensure_valid,
    noisy_or_as_max,
)

INF = math.inf
_CLOSE = 1e-9


@dataclass(frozen=True)
class ConversionPolicy:
    """Threshold ``epsilon`` plus the ranks given to the end points 0 and 1.

    p = 1 falls outside the strict left inequality of the map; it gets
    ``one_rank`` (0, "unsurprising"). p = 0 gets ``zero_rank`` (inf).
    ``mode`` selects what is converted: compiled CPT ``entries`` or the
    noisy-OR/MAX ``parameters`` (then recompiled in min-plus form).
    """

    epsilon: float
    zero_rank: float = INF
    one_rank: int = 0
    mode: str = "entries"

    def __post_init__(self):
        if not (isinstance(self.epsilon, (int, float)) and 0.0 < self.epsilon < 1.0):
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if self.mode not in ("entries", "parameters"):
            raise DomainError(f"unknown conversion mode {self.mode!r}")
        if self.one_rank < 0 or not (self.zero_rank == INF or self.zero_rank >= 0):
            raise DomainError("end-point ranks must be non-negative")


def _policy(policy) -> ConversionPolicy:
    return policy if isinstance(policy, ConversionPolicy) else ConversionPolicy(float(policy))


def _cmp_power(p: float, eps: float, k: int) -> int:
    """Sign of p - eps**k."""
    if k == 0:
        return (p > 1.0) - (p < 1.0)
    power = eps ** k
    if power > 0.0 and abs(p - power) > _CLOSE * power:
        return 1 if p > power else -1
    if power == 0.0:
        lhs, rhs = math.log(p), k * math.log(eps)
        if abs(lhs - rhs) > _CLOSE:
            return 1 if lhs > rhs else -1
    diff = Fraction(repr(p)) - Fraction(repr(eps)) ** k
    return (diff > 0) - (diff < 0)


def kappa_map(p: float, policy) -> float:
    """Rank of probability ``p``: the k with eps**k > p >= eps**(k+1).

    Returns an ``int``, or ``math.inf`` for p = 0.
    """
    pol = _policy(policy)
    p = float(p)
    if math.isnan(p) or p < 0.0 or p > 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0.0:
        return pol.zero_rank
    if p == 1.0:
        return pol.one_rank
    eps = pol.epsilon
    k = max(0, int(math.floor(math.log(p) / math.log(eps))))
    while k > 0 and _cmp_power(p, eps, k) >= 0:
        k -= 1
    while _cmp_power(p, eps, k + 1) < 0:
        k += 1
    return k


def kappa_map_array(values, policy) -> np.ndarray:
    pol = _policy(policy)
    arr = np.asarray(values, dtype=float)
    return np.array([kappa_map(x, pol) for x in arr.ravel()], dtype=float).reshape(arr.shape)


def _kappa_noisy_max(spec: NoisyMax, pol) -> NoisyMax:
    conv = lambda vec: tuple(kappa_map(x, pol) for x in vec)  # noqa: E731
    return NoisyMax(tuple(tuple(conv(v) for v in per) for per in spec.strengths), conv(spec.leak), spec.severity)


def convert_network(net: Network, policy) -> RankNetwork:
    """Map every CPT entry of ``net`` through ``kappa_map``; structure is kept."""
    pol = _policy(policy)
    ensure_valid(net)
    tables = {}
    for name, var in net.variables.items():
        spec = net.specs[name]
        if pol.mode == "parameters" and isinstance(spec, (NoisyOr, NoisyMax)):
            if isinstance(spec, NoisyOr):
                spec = noisy_or_as_max(spec, [net.variables[p] for p in net.parents[name]], var)
            tables[name] = compile_noisy_max(_kappa_noisy_max(spec, pol), var.domain, algebra=MIN_PLUS, check=False)
        else:
            tables[name] = kappa_map_array(net.table(name), pol)
    return RankNetwork(net.variable_list, net.parents, tables, net.diagnoses, net.findings)


@dataclass(frozen=True)
class PlausibleSet:
    members: tuple[str, ...]
    min_rank: float

    def __contains__(self, item):
        return item in self.members

    def __len__(self):
        return len(self.members)


def plausible_set(ranks: Mapping[str, float]) -> PlausibleSet:
    """Hypotheses whose rank equals the minimum rank."""
    if not ranks:
        raise DomainError("plausible set of an empty hypothesis set is undefined")
    low = min(ranks.values())
    return PlausibleSet(tuple(k for k, v in ranks.items() if v == low), low)


def probability_score(phi, true_fault: str) -> float:
    """1/|phi| when the true fault is plausible, otherwise 0.

    ``phi`` is a ``PlausibleSet`` or any collection of diagnosis names.
    """
    members = set(phi.members if isinstance(phi, PlausibleSet) else phi)
    if not members:
        raise DomainError("a plausible set is never empty")
    return 1.0 / len(members) if true_fault in members else 0.0


def kappa_as_probability(rank_net: RankNetwork, base: float = 0.01) -> Network:
    """Numeric network with each rank k replaced by base**k, rows renormalized."""
    if not 0.0 < base < 1.0:
        raise DomainError(f"base must lie in (0, 1), got {base!r}")
    specs = {}
    for name in rank_net.variables:
        rows = rank_net.rows(name)
        weights = np.where(np.isinf(rows), 0.0, np.power(base, np.where(np.isinf(rows), 0.0, rows)))
        sums = weights.sum(axis=1)
        if np.any(sums == 0.0):
            bad = int(np.flatnonzero(sums == 0.0)[0])
            raise ValidationError(f"variable {name}: row {bad} is all-infinite and cannot be renormalized")
        probs = weights / sums[:, None]
        if rank_net.parents[name]:
            specs[name] = ExplicitTable(tuple(map(tuple, probs)))
        else:
            specs[name] = Prior(tuple(probs[0]))
    return Network(rank_net.variable_list, rank_net.parents, specs, rank_net.diagnoses, rank_net.findings)
