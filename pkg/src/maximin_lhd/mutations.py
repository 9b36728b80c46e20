"""Swap perturbations on a Latin configuration.

Every move exchanges the coordinates of two points in one dimension, so the
Latin constraint is preserved by construction.  All three strategies start
from a critical point, i.e. an endpoint of a pair realizing the minimum
distance:

* ``m2``     partner drawn uniformly from the other points, dimension uniform;
* ``m3``     same partner, dimension chosen to maximize the resulting minimum;
* ``1dmove`` partner and dimension drawn from the critical point's neighbors
  (coordinate gap exactly 1), so every coordinate moves by one step.

Each proposal consumes exactly :data:`UNIFORMS_PER_PROPOSAL` uniforms in a
fixed order, which is what the annealing kernels replicate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Configuration, DistanceState, critical_pairs, neighbors_of

MUTATIONS = ("m2", "m3", "1dmove")
UNIFORMS_PER_PROPOSAL = 5


@dataclass(frozen=True)
class SwapProposal:
    i: int
    j: int
    dim: int
    kind: str


def _pick(u: float, count: int) -> int:
    return min(int(u * count), count - 1)


def _critical_point(state: DistanceState, u) -> int:
    pairs = critical_pairs(state)
    a, b = pairs[_pick(u[0], len(pairs))]
    return a if u[1] < 0.5 else b


def _random_partner(n: int, i: int, u: float) -> int:
    j = _pick(u, n - 1)
    return j + 1 if j >= i else j


def dmin_after_swap(config: Configuration, state: DistanceState, i: int, j: int, dim: int) -> int:
    """Minimum squared distance the configuration would have after the swap."""
    coords, dsq = config.coords, state.dsq
    n = config.instance.n
    mask = np.ones(n, dtype=bool)
    mask[[i, j]] = False
    swapped = coords.copy()
    swapped[i, dim], swapped[j, dim] = coords[j, dim], coords[i, dim]
    best = int(dsq[i, j])
    for p in (i, j):
        diff = swapped[mask] - swapped[p]
        if mask.any():
            best = min(best, int(np.einsum("ak,ak->a", diff, diff).min()))
    rest = dsq[np.ix_(mask, mask)]
    if rest.shape[0] > 1:
        best = min(best, int(rest[np.triu_indices(rest.shape[0], 1)].min()))
    return best


def propose_from_uniforms(kind: str, config: Configuration, state: DistanceState, u) -> SwapProposal:
    n, k = config.instance.n, config.instance.k
    i = _critical_point(state, u)
    if kind == "1dmove":
        nbrs = neighbors_of(config, i)
        j, dim = nbrs[_pick(u[2], len(nbrs))]
        return SwapProposal(i, j, dim, kind)
    j = _random_partner(n, i, u[2])
    if kind == "m2":
        return SwapProposal(i, j, _pick(u[3], k), kind)
    if kind == "m3":
        scores = [dmin_after_swap(config, state, i, j, d) for d in range(k)]
        top = max(scores)
        dims = [d for d, s in enumerate(scores) if s == top]
        return SwapProposal(i, j, dims[_pick(u[4], len(dims))], kind)
    raise ValueError(f"unknown mutation {kind!r}")


def _uniforms(rng):
    return rng.random(UNIFORMS_PER_PROPOSAL)


def propose_m2(config: Configuration, state: DistanceState, rng: np.random.Generator) -> SwapProposal:
    return propose_from_uniforms("m2", config, state, _uniforms(rng))


def propose_m3(config: Configuration, state: DistanceState, rng: np.random.Generator) -> SwapProposal:
    return propose_from_uniforms("m3", config, state, _uniforms(rng))


def propose_1dmove(config: Configuration, state: DistanceState, rng: np.random.Generator) -> SwapProposal:
    return propose_from_uniforms("1dmove", config, state, _uniforms(rng))


PROPOSERS = {"m2": propose_m2, "m3": propose_m3, "1dmove": propose_1dmove}
