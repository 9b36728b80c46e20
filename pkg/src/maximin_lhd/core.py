"""Latin hypercube configurations and their squared-distance bookkeeping.

Coordinates are 0-based: column ``j`` of a valid configuration is a
permutation of ``0..n-1``.  Squared distances are exact integers; square
roots only appear in the energy functions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


class DesignError(ValueError):
    """Raised when a design file or array does not describe a valid design."""


@dataclass(frozen=True)
class InstanceSpec:
    k: int
    n: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def max_dsq(self) -> int:
        """Largest squared distance any pair can reach."""
        return self.k * (self.n - 1) ** 2

    def __str__(self):
        return f"{self.k}/{self.n}"


@dataclass
class Configuration:
    instance: InstanceSpec
    coords: np.ndarray  # (n, k) int64

    def __post_init__(self):
        self.coords = np.array(self.coords, dtype=np.int64).reshape(
            self.instance.n, self.instance.k
        )

    @classmethod
    def from_columns(cls, *columns) -> "Configuration":
        """Build a configuration from per-dimension coordinate lists."""
        coords = np.column_stack([np.asarray(c, dtype=np.int64) for c in columns])
        n, k = coords.shape
        return cls(InstanceSpec(k, n), coords)

    def copy(self) -> "Configuration":
        return Configuration(self.instance, self.coords.copy())

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.instance == other.instance and np.array_equal(self.coords, other.coords)


@dataclass
class LatinReport:
    ok: bool
    dimension: Optional[int] = None
    duplicate: Optional[int] = None
    message: str = "ok"

    def __bool__(self):
        return self.ok


@dataclass
class DistanceState:
    """All pairwise squared distances of a configuration.

    ``dsq`` is a symmetric ``(n, n)`` integer matrix with a zero diagonal;
    the pair ``(i, j)`` with ``i < j`` is the map entry.
    """

    dsq: np.ndarray
    dmin_sq: int
    sum_sq: int
    _argmin: tuple = field(default=(0, 1), repr=False)

    @property
    def n(self) -> int:
        return self.dsq.shape[0]

    def values(self) -> np.ndarray:
        """Squared distances in lexicographic pair order ``(0,1), (0,2), ...``."""
        iu = np.triu_indices(self.n, 1)
        return self.dsq[iu]

    def as_dict(self) -> dict:
        iu, ju = np.triu_indices(self.n, 1)
        return {(int(a), int(b)): int(v) for a, b, v in zip(iu, ju, self.dsq[iu, ju])}

    def copy(self) -> "DistanceState":
        return DistanceState(self.dsq.copy(), self.dmin_sq, self.sum_sq, self._argmin)

    def __eq__(self, other):
        if not isinstance(other, DistanceState):
            return NotImplemented
        return (
            np.array_equal(self.dsq, other.dsq)
            and self.dmin_sq == other.dmin_sq
            and self.sum_sq == other.sum_sq
        )


def random_config(instance: InstanceSpec, seed=None) -> Configuration:
    """Uniform random Latin configuration; each column an independent permutation."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cols = [rng.permutation(instance.n) for _ in range(instance.k)]
    return Configuration(instance, np.column_stack(cols))


def validate_latin(config: Configuration) -> LatinReport:
    n, k = config.instance.n, config.instance.k
    coords = config.coords
    if coords.shape != (n, k):
        return LatinReport(False, message=f"coords shape {coords.shape} != ({n}, {k})")
    for j in range(k):
        seen = set()
        for v in coords[:, j]:
            v = int(v)
            if v < 0 or v >= n:
                return LatinReport(False, j, v, f"dimension {j}: value {v} outside [0, {n - 1}]")
            if v in seen:
                return LatinReport(False, j, v, f"dimension {j}: value {v} appears twice")
            seen.add(v)
    return LatinReport(True)


def squared_distance(config: Configuration, i: int, j: int) -> int:
    if i == j:
        raise ValueError("squared_distance needs two distinct points")
    diff = config.coords[i] - config.coords[j]
    return int(diff @ diff)


def _pairwise(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.einsum("abk,abk->ab", diff, diff)


def _scan_min(dsq: np.ndarray):
    n = dsq.shape[0]
    masked = dsq + np.diag(np.full(n, np.iinfo(np.int64).max // 2))
    flat = int(np.argmin(masked))
    a, b = divmod(flat, n)
    return int(masked[a, b]), (min(a, b), max(a, b))


def build_distance_state(config: Configuration) -> DistanceState:
    dsq = _pairwise(config.coords).astype(np.int64)
    dmin, arg = _scan_min(dsq)
    return DistanceState(dsq, dmin, int(dsq.sum()) // 2, arg)


def critical_pairs(state: DistanceState) -> list:
    """Pairs ``(i, j)``, ``i < j``, whose squared distance equals the minimum."""
    iu, ju = np.nonzero(np.triu(state.dsq == state.dmin_sq, 1))
    return [(int(a), int(b)) for a, b in zip(iu, ju)]


def neighbors_of(config: Configuration, i: int) -> list:
    """``(point, dimension)`` pairs whose coordinate differs from point ``i`` by exactly 1.

    Ordered by dimension, then lower neighbor before upper neighbor.
    """
    coords = config.coords
    out = []
    for d in range(config.instance.k):
        c = coords[i, d]
        col = coords[:, d]
        for target in (c - 1, c + 1):
            hits = np.flatnonzero(col == target)
            out.extend((int(h), d) for h in hits)
    return out


def apply_swap(config: Configuration, state: DistanceState, i: int, j: int, dim: int) -> list:
    """Exchange the coordinates of points ``i`` and ``j`` in ``dim``, in place.

    Only the 2(n-2) pairs involving exactly one of ``i``/``j`` are recomputed;
    the pair ``(i, j)`` keeps its distance since the coordinate difference only
    changes sign.  Returns the recomputed pairs.
    """
    if i == j:
        raise ValueError("apply_swap needs two distinct points")
    if not 0 <= dim < config.instance.k:
        raise ValueError(f"dimension {dim} out of range")
    coords, dsq = config.coords, state.dsq
    coords[i, dim], coords[j, dim] = coords[j, dim], coords[i, dim]

    others = np.array([m for m in range(config.instance.n) if m != i and m != j], dtype=np.int64)
    touched = []
    min_changed = None
    for p in (i, j):
        old = dsq[p, others].copy()
        diff = coords[others] - coords[p]
        new = np.einsum("ak,ak->a", diff, diff)
        dsq[p, others] = new
        dsq[others, p] = new
        state.sum_sq += int(new.sum() - old.sum())
        touched.extend((min(p, int(m)), max(p, int(m))) for m in others)
        if len(new):
            a = int(np.argmin(new))
            cand = (int(new[a]), (min(p, int(others[a])), max(p, int(others[a]))))
            if min_changed is None or cand[0] < min_changed[0]:
                min_changed = cand

    if min_changed is not None and min_changed[0] <= state.dmin_sq:
        state.dmin_sq, state._argmin = min_changed
    elif state._argmin in set(touched):
        # previous minimum pair was raised
        state.dmin_sq, state._argmin = _scan_min(dsq)
    return touched


# -- design files -----------------------------------------------------------

def design_to_dict(config: Configuration, meta: Optional[dict] = None) -> dict:
    state = build_distance_state(config)
    out = {
        "k": config.instance.k,
        "n": config.instance.n,
        "coords": config.coords.tolist(),
        "dmin_sq": int(state.dmin_sq),
    }
    if meta:
        out["meta"] = meta
    return out


def save_design(path, config: Configuration, meta: Optional[dict] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(design_to_dict(config, meta), indent=1) + "\n")
    tmp.replace(path)


def design_from_dict(data: dict, check: bool = True) -> Configuration:
    try:
        inst = InstanceSpec(int(data["k"]), int(data["n"]))
        config = Configuration(inst, np.asarray(data["coords"], dtype=np.int64))
    except (KeyError, TypeError, ValueError) as exc:
        raise DesignError(f"malformed design: {exc}") from exc
    if check:
        rep = validate_latin(config)
        if not rep:
            raise DesignError(rep.message)
        if "dmin_sq" in data:
            actual = build_distance_state(config).dmin_sq
            if actual != int(data["dmin_sq"]):
                raise DesignError(f"claimed dmin_sq {data['dmin_sq']} but design has {actual}")
    return config


def load_design(path, check: bool = True) -> Configuration:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DesignError(f"cannot read design file {path}: {exc}") from exc
    return design_from_dict(data, check=check)
