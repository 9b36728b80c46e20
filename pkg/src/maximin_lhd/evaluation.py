"""Potential energies for the annealer (lower is better).

``energy_phi`` is the power-mean criterion over all pair distances and
``energy_psi`` its weighted variant, in which each term ``d_i**-p`` is scaled
by ``w_i = 1/sqrt(sum_j exp(-(D_j - D_i)**2 / sigma**2))``.  Distances far
from the bulk of the distance multiset get larger weights, which pushes the
optimizer toward a narrow distance distribution.

These functions work on a full :class:`~maximin_lhd.core.DistanceState` and
are the reference path; the annealing kernels keep equivalent quantities
incrementally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import DistanceState

#: Proportionality constant in sigma**2 = C * k * n**4.
SIGMA_C = 1.0 / 300.0
#: Squared-difference cutoff, in units of sigma**2, for the truncated weights.
CUTOFF_FACTOR = 5.0

EVAL_KINDS = ("negdmin", "phi", "psi")
_BLOCK = 2048


@dataclass(frozen=True)
class EvalParams:
    kind: str = "phi"
    p: float = 10.0
    sigma: Union[float, str, None] = None
    cutoff_enabled: bool = True
    subsample_size: Optional[int] = None

    def __post_init__(self):
        if self.kind not in EVAL_KINDS:
            raise ValueError(f"unknown evaluation kind {self.kind!r}")
        if not self.p > 0:
            raise ValueError("p must be positive")
        if self.kind == "psi":
            if self.sigma is None or (self.sigma != "auto" and not float(self.sigma) > 0):
                raise ValueError("psi needs sigma > 0 or 'auto'")
        if self.subsample_size is not None and self.subsample_size < 1:
            raise ValueError("subsample_size must be >= 1")

    def resolve(self, k: int, n: int) -> "EvalParams":
        """Replace ``sigma='auto'`` by its tuned value (or fall back to phi)."""
        if self.kind != "psi" or self.sigma != "auto":
            return self
        sigma = sigma_auto(k, n)
        if sigma is None:
            return EvalParams("phi", self.p)
        return EvalParams("psi", self.p, sigma, self.cutoff_enabled, self.subsample_size)


def energy_neg_dmin(state: DistanceState) -> float:
    return -math.sqrt(state.dmin_sq)


def energy_phi(state: DistanceState, p: float) -> float:
    dsq = state.values().astype(np.float64)
    return float(np.sum(dsq ** (-p / 2.0)) ** (1.0 / p))


def _weight_sums(dsq, refs, sigma, cutoff, counters):
    """sum_j exp(-(refs_j - dsq_i)**2 / sigma**2) for every i, in row blocks."""
    out = np.empty(len(dsq))
    s2 = float(sigma) ** 2
    for lo in range(0, len(dsq), _BLOCK):
        rows = dsq[lo:lo + _BLOCK]
        gap2 = (refs[None, :] - rows[:, None]) ** 2
        terms = np.exp(-gap2 / s2)
        if cutoff:
            keep = gap2 <= CUTOFF_FACTOR * s2
            terms = np.where(keep, terms, 0.0)
            if counters is not None:
                counters["exp_terms"] = counters.get("exp_terms", 0) + int(keep.sum())
        elif counters is not None:
            counters["exp_terms"] = counters.get("exp_terms", 0) + gap2.size
        if counters is not None:
            counters["comparisons"] = counters.get("comparisons", 0) + gap2.size
        out[lo:lo + _BLOCK] = terms.sum(axis=1)
    return out


def psi_weights(state: DistanceState, sigma: float, cutoff_enabled: bool = False) -> np.ndarray:
    """Per-pair weights in lexicographic pair order; the self term is included."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    dsq = state.values().astype(np.float64)
    return 1.0 / np.sqrt(_weight_sums(dsq, dsq, sigma, cutoff_enabled, None))


def energy_psi(
    state: DistanceState,
    p: float,
    sigma: float,
    cutoff_enabled: bool = False,
    subsample_size: Optional[int] = None,
    rng=None,
    counters: Optional[dict] = None,
) -> float:
    """Weighted power-mean energy.

    With ``subsample_size`` the weight sums run over that many reference
    distances drawn uniformly (with replacement) from the state, scaled by
    ``n_pairs / subsample_size``.  Sampled sums are clamped at 1, the value
    the self term alone guarantees in the exact sum.  ``counters`` (if given)
    accumulates ``comparisons`` and ``exp_terms``.
    """
    if not p > 0 or not sigma > 0:
        raise ValueError("p and sigma must be positive")
    dsq = state.values().astype(np.float64)
    if subsample_size is None:
        sums = _weight_sums(dsq, dsq, sigma, cutoff_enabled, counters)
    else:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        idx = rng.integers(0, len(dsq), size=subsample_size)
        sums = _weight_sums(dsq, dsq[idx], sigma, cutoff_enabled, counters)
        sums = np.maximum(sums * (len(dsq) / subsample_size), 1.0)
    terms = dsq ** (-p / 2.0) / np.sqrt(sums)
    return float(np.sum(terms) ** (1.0 / p))


def sigma_auto(k: int, n: int) -> Optional[float]:
    """Tuned sigma for instance ``k/n``; ``None`` means use phi instead.

    sigma**2 = k n**4 / 300 when n >= 2k, twice that when k <= n < 2k.
    """
    if k < 1 or n < 2:
        raise ValueError("need k >= 1 and n >= 2")
    if n >= 2 * k:
        return math.sqrt(SIGMA_C * k * n ** 4)
    if n >= k:
        return math.sqrt(2.0 * SIGMA_C * k * n ** 4)
    return None


def select_eval(k: int, n: int, p: float = 5.0) -> EvalParams:
    """psi with tuned sigma when k <= n, phi otherwise."""
    sigma = sigma_auto(k, n)
    if sigma is None:
        return EvalParams("phi", p)
    return EvalParams("psi", p, sigma)


def energy(state: DistanceState, params: EvalParams, rng=None) -> float:
    if params.kind == "negdmin":
        return energy_neg_dmin(state)
    if params.kind == "phi":
        return energy_phi(state, params.p)
    if params.sigma == "auto":
        raise ValueError("resolve sigma='auto' against an instance first")
    return energy_psi(
        state, params.p, float(params.sigma), params.cutoff_enabled, params.subsample_size, rng
    )
