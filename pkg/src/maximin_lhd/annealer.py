"""Simulated annealing driver: linear cooling, Metropolis acceptance, batches.

The inner loop lives in a kernel (see :mod:`maximin_lhd.kernels`); this module
draws the random numbers, builds the temperature ramp, calibrates the start
temperature and aggregates repeated runs.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import kernels
from .core import Configuration, InstanceSpec, build_distance_state, random_config
from .evaluation import EvalParams, energy
from .mutations import MUTATIONS

CHUNK = 4096
_MASK64 = (1 << 64) - 1


class CalibrationError(RuntimeError):
    """Start-temperature bisection did not reach the target acceptance rate."""


@dataclass(frozen=True)
class Schedule:
    """Linear descent: T(m) = t0 * (1 - m / total_iters) for m = 1..total_iters."""

    t0: Union[float, str] = "auto"
    total_iters: int = 100_000
    target_rate: float = 0.2

    def __post_init__(self):
        if self.total_iters < 0:
            raise ValueError("total_iters must be >= 0")
        if self.t0 != "auto" and float(self.t0) < 0:
            raise ValueError("t0 must be >= 0 or 'auto'")

    def temperatures(self, t0: float, start: int, count: int) -> np.ndarray:
        m = np.arange(start + 1, start + count + 1, dtype=np.float64)
        return t0 * (1.0 - m / self.total_iters)


@dataclass(frozen=True)
class RunConfig:
    instance: InstanceSpec
    mutation: str = "1dmove"
    eval: EvalParams = field(default_factory=EvalParams)
    schedule: Schedule = field(default_factory=Schedule)
    seed: int = 0

    def __post_init__(self):
        if self.mutation not in MUTATIONS:
            raise ValueError(f"unknown mutation {self.mutation!r}")

    def with_seed(self, seed: int) -> "RunConfig":
        return RunConfig(self.instance, self.mutation, self.eval, self.schedule, seed)


@dataclass
class RunResult:
    best_config: Configuration
    best_dmin_sq: int
    final_energy: float
    accepted_count: int
    initial_dmin_sq: int
    t0: float
    seed: int
    iterations: int
    eval: EvalParams
    trace: Optional[list] = None

    def metadata(self, mutation: str) -> dict:
        return {
            "seed": self.seed,
            "iters": self.iterations,
            "p": self.eval.p,
            "sigma": self.eval.sigma,
            "mutation": mutation,
            "eval": self.eval.kind,
            "t0": self.t0,
        }


@dataclass
class BatchSummary:
    runs: int
    mean_dmin_sq: float
    ci95_halfwidth: float
    best_overall: RunResult
    results: list

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "mean_dmin_sq": self.mean_dmin_sq,
            "ci95": self.ci95_halfwidth,
            "best_dmin_sq": self.best_overall.best_dmin_sq,
            "dmin_sq": [r.best_dmin_sq for r in self.results],
        }


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _MASK64, tag]))


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    return (int(base_seed) ^ splitmix64(index)) & _MASK64


def metropolis_accept(delta_e: float, temperature: float, rng) -> bool:
    """Accept with probability min(1, exp(-delta_e / T)); greedy at T = 0."""
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if delta_e <= 0:
        return True
    if temperature == 0:
        return False
    return bool(rng.random() < math.exp(-delta_e / temperature))


def _pilot(run_config, params, start, u, temperature, backend):
    kern = kernels.make_kernel(start.coords, run_config.mutation, params, backend)
    kern.run(u, np.full(len(u), temperature))
    return kern


def calibrate_t0(
    run_config: RunConfig,
    target_rate: float = 0.8,
    pilot: int = 1000,
    tol: float = 0.05,
    max_rounds: int = 50,
    backend: Optional[str] = None,
) -> float:
    """Temperature at which about ``target_rate`` of worsening pilot moves pass.

    Every pilot starts from the run's initial configuration and reuses the
    same uniforms, so the measured rate is a deterministic function of T.
    Bisection is geometric, seeded by the mean worsening step of an
    accept-everything pilot.
    """
    if not 0 < target_rate < 1:
        raise ValueError("target_rate must lie in (0, 1)")
    inst = run_config.instance
    params = run_config.eval.resolve(inst.k, inst.n)
    start = random_config(inst, run_config.seed)
    u = _stream(run_config.seed, 2).random((pilot, kernels.uniforms_per_iteration(params)))

    hot = _pilot(run_config, params, start, u, math.inf, backend)
    if hot.worse == 0:
        return 0.0
    t = (hot.worse_de_sum / hot.worse) / -math.log(target_rate)
    lo, hi = 0.0, math.inf
    for _ in range(max_rounds):
        kern = _pilot(run_config, params, start, u, t, backend)
        rate = kern.worse_accepted / kern.worse if kern.worse else 1.0
        if abs(rate - target_rate) <= tol:
            return t
        if rate < target_rate:
            lo = t
            t = t * 2.0 if math.isinf(hi) else math.sqrt(lo * hi)
        else:
            hi = t
            t = t / 2.0 if lo == 0.0 else math.sqrt(lo * hi)
    raise CalibrationError(
        f"no temperature within {tol} of acceptance {target_rate} after {max_rounds} rounds"
    )


def pilot_rate(run_config: RunConfig, temperature: float, pilot: int = 1000, backend=None) -> float:
    """Fraction of worsening moves accepted by the calibration pilot at ``temperature``."""
    inst = run_config.instance
    params = run_config.eval.resolve(inst.k, inst.n)
    start = random_config(inst, run_config.seed)
    u = _stream(run_config.seed, 2).random((pilot, kernels.uniforms_per_iteration(params)))
    kern = _pilot(run_config, params, start, u, temperature, backend)
    return kern.worse_accepted / kern.worse if kern.worse else 1.0


def anneal(
    run_config: RunConfig,
    backend: Optional[str] = None,
    trace: bool = False,
    chunk: int = CHUNK,
) -> RunResult:
    """One annealing run; returns the design with the largest minimum distance seen."""
    inst = run_config.instance
    params = run_config.eval.resolve(inst.k, inst.n)
    sched = run_config.schedule
    start = random_config(inst, run_config.seed)
    if sched.t0 == "auto":
        t0 = calibrate_t0(run_config, sched.target_rate, backend=backend)
    else:
        t0 = float(sched.t0)

    kern = kernels.make_kernel(start.coords, run_config.mutation, params, backend)
    initial = int(kern.dmin)
    rng = _stream(run_config.seed, 1)
    width = kernels.uniforms_per_iteration(params)
    checkpoints = [(0, initial)] if trace else None
    done = 0
    while done < sched.total_iters:
        c = min(chunk, sched.total_iters - done)
        u = rng.random((c, width))
        kern.run(u, sched.temperatures(t0, done, c))
        kern.resync()
        done += c
        if trace:
            checkpoints.append((done, int(kern.dmin)))

    best = Configuration(inst, kern.get_best())
    if params.kind == "psi" and params.subsample_size:
        final_config = Configuration(inst, kern.get_coords())
        exact = EvalParams("psi", params.p, params.sigma, params.cutoff_enabled)
        final_energy = energy(build_distance_state(final_config), exact)
    else:
        final_energy = float(kern.e_cur)
    return RunResult(
        best_config=best,
        best_dmin_sq=int(kern.best_dmin),
        final_energy=final_energy,
        accepted_count=int(kern.accepted),
        initial_dmin_sq=initial,
        t0=float(t0),
        seed=int(run_config.seed),
        iterations=int(done),
        eval=params,
        trace=checkpoints,
    )


def summarize(results: list) -> BatchSummary:
    vals = np.array([r.best_dmin_sq for r in results], dtype=np.float64)
    runs = len(results)
    ci = 1.96 * float(np.std(vals, ddof=1)) / math.sqrt(runs) if runs > 1 else 0.0
    best = max(results, key=lambda r: r.best_dmin_sq)  # first maximal run wins ties
    return BatchSummary(runs, float(vals.mean()), ci, best, list(results))


def run_batch(
    run_config: RunConfig,
    runs: int,
    parallelism: int = 1,
    backend: Optional[str] = None,
    trace: bool = False,
) -> BatchSummary:
    """``runs`` independent anneals with seeds ``base_seed XOR splitmix64(index)``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    configs = [run_config.with_seed(derive_seed(run_config.seed, i)) for i in range(runs)]
    if parallelism <= 1:
        results = [anneal(c, backend, trace) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(lambda c: anneal(c, backend, trace), configs))
    return summarize(results)
