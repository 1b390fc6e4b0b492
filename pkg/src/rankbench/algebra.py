"""Evaluation algebras for factor elimination.

An algebra is the pair of operations used when combining factors and when
summing a variable out of them:

    probability   combine = product,           marginalize = sum,  unit 1, zero 0
    rank (kappa)  combine = integer addition,  marginalize = min,  unit 0, zero inf

Ranks are carried in float64 arrays holding non-negative integers plus
``inf``. Integers are exact in float64 far beyond any rank that occurs in
practice, and IEEE ``inf`` already saturates under addition and absorbs
under ``min``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Algebra:
    name: str
    combine: np.ufunc
    add: np.ufunc
    unit: float
    zero: float

    @property
    def is_rank(self) -> bool:
        return self.name == "rank"

    def marginalize(self, values: np.ndarray, axis=None) -> np.ndarray:
        return self.add.reduce(values, axis=axis)

    def total(self, values: np.ndarray) -> float:
        return float(self.add.reduce(np.ravel(values))) if np.size(values) else self.zero

    def normalize(self, values: np.ndarray) -> np.ndarray | None:
        """Normalize a table so it forms a distribution.

        Probabilities are divided by their sum, ranks have their minimum
        subtracted. Returns ``None`` when the table is entirely the
        annihilator, i.e. the conditioning event is impossible.
        """
        total = self.total(values)
        if self.is_rank:
            if math.isinf(total):
                return None
            return values - total
        if not total > 0.0:
            return None
        return values / total

    def is_normalized_rows(self, table: np.ndarray, atol: float = 1e-9) -> bool:
        """True if every row (last axis) marginalizes to the unit."""
        if table.size == 0:
            return False
        rows = self.marginalize(table, axis=-1)
        if self.is_rank:
            return bool(np.all(rows == 0.0))
        return bool(np.all(np.abs(rows - 1.0) <= atol))


SUM_PRODUCT = Algebra("probability", np.multiply, np.add, 1.0, 0.0)
MIN_PLUS = Algebra("rank", np.add, np.minimum, 0.0, math.inf)

ALGEBRAS = {"probability": SUM_PRODUCT, "numeric": SUM_PRODUCT, "rank": MIN_PLUS, "kappa": MIN_PLUS}


def get_algebra(name_or_algebra) -> Algebra:
    if isinstance(name_or_algebra, Algebra):
        return name_or_algebra
    try:
        return ALGEBRAS[name_or_algebra]
    except KeyError:
        raise ValueError(f"unknown algebra {name_or_algebra!r}") from None
