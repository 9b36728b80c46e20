"""Distribution of squared inter-point distances: exact moments, regimes, histograms."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import InstanceSpec, build_distance_state, random_config, DistanceState

REGIMES = ("unimodal", "bimodal", "spread")
DEFAULT_BINS = 40


def mean_model(k: int, n: int) -> Fraction:
    """Mean squared distance of any Latin configuration: k n (n + 1) / 6."""
    return Fraction(k * n * (n + 1), 6)


def var_y_exact(n: int) -> Fraction:
    """Variance of (a - b)^2 over unordered pairs of distinct levels in 0..n-1.

    A gap z occurs n - z times, so moment sums reduce to sums over z = 1..n-1.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    z = range(1, n)
    e_y2 = Fraction(2 * (n * sum(t**4 for t in z) - sum(t**5 for t in z)), n * (n - 1))
    e_y = Fraction(n * (n + 1), 6)
    return e_y2 - e_y * e_y


@dataclass(frozen=True)
class VarianceModel:
    asymptotic: float
    exact: Fraction

    @property
    def ratio(self) -> float:
        return float(self.exact) / self.asymptotic


def variance_model(k: int, n: int) -> VarianceModel:
    """Exact k * Var(Y) and its large-n approximation 7 k n^4 / 180."""
    return VarianceModel(7.0 * k * n**4 / 180.0, k * var_y_exact(n))


def classify_regime(k: int, n: int) -> str:
    """``unimodal`` for n <= k, ``bimodal`` for k < n < 2k, ``spread`` for n >= 2k."""
    InstanceSpec(k, n)
    if n <= k:
        return "unimodal"
    if n < 2 * k:
        return "bimodal"
    return "spread"


@dataclass
class HistogramTable:
    bin_edges: list
    counts: list

    @property
    def total(self) -> int:
        return int(sum(self.counts))

    def rows(self):
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            yield lo, hi, c

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bin_lo,bin_hi,count\n")
        for lo, hi, c in self.rows():
            buf.write(f"{lo:g},{hi:g},{c}\n")
        return buf.getvalue()


def histogram(state: DistanceState, bin_width: Optional[float] = None) -> HistogramTable:
    """Bins of width ``bin_width`` from d_min^2 up to d_max^2.

    Bins are half-open except the last, which is closed so that d_max^2 lands
    in it.  The default width splits the value range into 40 bins (a single
    bin when all distances coincide).
    """
    vals = state.values()
    lo, hi = int(vals.min()), int(vals.max())
    if bin_width is None:
        nbins = DEFAULT_BINS if hi > lo else 1
        bin_width = (hi - lo) / DEFAULT_BINS if hi > lo else 1.0
    elif bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    else:
        nbins = max(1, math.ceil((hi - lo) / bin_width - 1e-9))
    idx = np.minimum(((vals - lo) // bin_width).astype(np.int64), nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    edges = [lo + b * bin_width for b in range(nbins + 1)]
    return HistogramTable(edges, [int(c) for c in counts])


def interquartile_range(state: DistanceState) -> float:
    q1, q3 = np.percentile(state.values(), [25, 75])
    return float(q3 - q1)


def empirical_moments(instance: InstanceSpec, samples: int, seed=None) -> tuple:
    """Mean and (population) variance of squared distances pooled over random configurations."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    pooled = np.concatenate(
        [build_distance_state(random_config(instance, rng)).values() for _ in range(samples)]
    ).astype(np.float64)
    return float(pooled.mean()), float(pooled.var())
