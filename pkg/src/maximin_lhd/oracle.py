"""Ground truth for tiny instances and independent design checks."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Configuration, InstanceSpec, build_distance_state, validate_latin

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    """The instance has more configurations than the enumeration budget allows."""


@dataclass
class OracleResult:
    optimal_dmin_sq: int
    witness: Configuration
    configs_enumerated: int


def search_size(k: int, n: int) -> int:
    """Configurations left once the first dimension is fixed to the identity."""
    return math.factorial(n) ** (k - 1)


def exhaustive_maximin(k: int, n: int, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Largest achievable minimum squared distance, by plain enumeration.

    Relabelling points permutes every column the same way, so fixing column 0
    to ``0..n-1`` loses no optimum.  The last free column is handled as a
    vectorized block over all permutations.
    """
    inst = InstanceSpec(k, n)
    size = search_size(k, n)
    if size > budget:
        raise BudgetExceeded(f"{inst}: {size} configurations exceed budget {budget}")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    iu, ju = np.triu_indices(n, 1)
    gaps = (perms[:, iu] - perms[:, ju]) ** 2  # (n!, pairs)
    base = gaps[0]  # identity permutation is first
    ident = perms[0]

    if k == 1:
        return OracleResult(int(base.min()), Configuration(inst, ident[:, None]), 1)

    best, best_cols = -1, None
    for head in itertools.product(range(len(perms)), repeat=k - 2):
        acc = base + (gaps[list(head)].sum(axis=0) if head else 0)
        mins = (acc[None, :] + gaps).min(axis=1)
        last = int(np.argmax(mins))  # first maximum wins, keeps results deterministic
        if mins[last] > best:
            best, best_cols = int(mins[last]), (*head, last)
    coords = np.column_stack([ident] + [perms[c] for c in best_cols])
    return OracleResult(best, Configuration(inst, coords), size)


@dataclass
class VerificationReport:
    latin_ok: bool
    actual_dmin_sq: Optional[int]
    claimed_dmin_sq: Optional[int]
    checks: list = field(default_factory=list)  # (name, ok, message)

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "latin_ok": self.latin_ok,
            "actual_dmin_sq": self.actual_dmin_sq,
            "claimed_dmin_sq": self.claimed_dmin_sq,
            "checks": [{"name": n, "ok": ok, "message": m} for n, ok, m in self.checks],
        }


def verify_design(config: Configuration, claimed_dmin_sq: Optional[int] = None) -> VerificationReport:
    """Check the Latin property and recompute d_min^2; never raises on bad designs."""
    latin = validate_latin(config)
    checks = [("latin", latin.ok, latin.message or "every dimension is a permutation")]
    actual = None
    if config.coords.shape == (config.instance.n, config.instance.k):
        actual = int(build_distance_state(config).dmin_sq)
    if claimed_dmin_sq is not None:
        same = actual is not None and actual == int(claimed_dmin_sq)
        msg = "claim matches" if same else f"claimed {claimed_dmin_sq}, actual {actual}"
        checks.append(("dmin_sq", same, msg))
    return VerificationReport(latin.ok, actual, claimed_dmin_sq, checks)
