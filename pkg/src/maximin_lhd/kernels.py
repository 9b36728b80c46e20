"""Backend selection for the annealing kernel.

The compiled ``_ckernel`` extension is used when it imports; otherwise the
pure-Python ``_pykernel`` takes over.  ``LHD_BACKEND=python`` (or
``cython``) forces a choice.  Both kernels consume the same tables built
here, so they agree bit for bit.
"""
from __future__ import annotations

import math
import os
import warnings

import numpy as np

from ._pykernel import M2, M3, ONED, NEGDMIN, PHI, PSI, PSI_SUB, PyKernel
from .evaluation import CUTOFF_FACTOR, EvalParams

try:
    from ._ckernel import CKernel
except ImportError:  # extension not built
    CKernel = None

MUTATION_CODES = {"m2": M2, "m3": M3, "1dmove": ONED}
BACKENDS = {"python": PyKernel}
if CKernel is not None:
    BACKENDS["cython"] = CKernel


def _default_backend() -> str:
    want = os.environ.get("LHD_BACKEND", "auto").lower()
    if want in ("auto", ""):
        return "cython" if CKernel is not None else "python"
    if want not in ("cython", "python"):
        raise ValueError(f"LHD_BACKEND must be auto, cython or python, not {want!r}")
    if want == "cython" and CKernel is None:
        warnings.warn("compiled kernel unavailable, falling back to pure Python")
        return "python"
    return want


BACKEND = _default_backend()


def kernel_class(backend: str | None = None):
    return BACKENDS[backend or BACKEND]


def uniforms_per_iteration(params: EvalParams) -> int:
    """5 for the proposal, 1 for acceptance, plus subsample reference draws."""
    extra = params.subsample_size if params.kind == "psi" and params.subsample_size else 0
    return 6 + extra


def build_tables(k: int, n: int, params: EvalParams):
    """(evalkind, ftab, ktab, window, subsample) for a resolved ``params``."""
    maxd = k * (n - 1) ** 2
    v = np.arange(maxd + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        ftab = np.where(v > 0, np.power(np.maximum(v, 1.0), -params.p / 2.0), 0.0)
    if params.kind == "negdmin":
        return NEGDMIN, ftab, np.zeros(1), 0, 0
    if params.kind == "phi":
        return PHI, ftab, np.zeros(1), 0, 0
    sigma = float(params.sigma)
    s2 = sigma * sigma
    gap2 = v * v
    ktab = np.exp(-gap2 / s2)
    if params.cutoff_enabled:
        ktab[gap2 > CUTOFF_FACTOR * s2] = 0.0
    nz = np.flatnonzero(ktab)
    window = int(nz[-1]) if len(nz) else 0
    if params.subsample_size:
        return PSI_SUB, ftab, ktab, window, int(params.subsample_size)
    return PSI, ftab, ktab, window, 0


def make_kernel(coords, mutation: str, params: EvalParams, backend: str | None = None):
    coords = np.asarray(coords, dtype=np.int64)
    n, k = coords.shape
    evalkind, ftab, ktab, window, sub = build_tables(k, n, params)
    cls = kernel_class(backend)
    return cls(coords, MUTATION_CODES[mutation], evalkind, float(params.p), ftab, ktab, window, sub)


def cutoff_radius(sigma: float) -> int:
    """Largest integer gap kept by the truncated weights."""
    return int(math.floor(math.sqrt(CUTOFF_FACTOR) * sigma))
