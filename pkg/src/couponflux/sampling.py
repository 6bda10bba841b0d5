"""Batch Monte Carlo of hitting times with deterministic parallel fan-out."""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .rng import DEFAULT_SEED, resolve_threads, uniforms

UNLIMITED = np.iinfo(np.int64).max // 2
DEFAULT_BUDGET_MULTIPLIER = 100.0
WARN_MEAN_STEPS = 1e10


@dataclass
class HittingSampleSet:
    """Completed hitting times plus the count of censored runs."""

    samples: np.ndarray
    censored: int
    log_normalization: float
    seed: int
    model: str
    params: dict = field(default_factory=dict)
    engine: str = "direct"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int64)
        if self.samples.size and self.samples.min() < 1:
            raise ValueError("hitting times must be >= 1")
        if not math.isfinite(self.log_normalization):
            raise ValueError("normalization must be positive and finite")

    @property
    def normalization(self):
        return math.exp(self.log_normalization)

    @property
    def total(self):
        return int(self.samples.size) + int(self.censored)

    @property
    def censor_fraction(self):
        return self.censored / self.total if self.total else 0.0

    def scaled(self):
        """mu * T for every completed run, computed in log space."""
        return np.exp(np.log(self.samples.astype(float)) + self.log_normalization)


def resolve_budget(predicted_mean, multiplier=DEFAULT_BUDGET_MULTIPLIER, budget=None):
    """Step budget: explicit value, else multiplier x predicted mean."""
    if budget is not None:
        return int(budget)
    if multiplier is None or predicted_mean is None or not math.isfinite(predicted_mean):
        return UNLIMITED
    return int(min(UNLIMITED, math.ceil(multiplier * predicted_mean)))


def warn_if_slow(predicted_mean, engine):
    if engine == "direct" and predicted_mean > WARN_MEAN_STEPS:
        warnings.warn(f"predicted mean hitting time {predicted_mean:.3g} steps; "
                      "direct simulation will not finish in practice", RuntimeWarning,
                      stacklevel=3)


def _chunks(count, threads):
    size = max(1, math.ceil(count / threads))
    return [(start, min(size, count - start)) for start in range(0, count, size)]


def run_batch(kernel_name, args, count, seed, budget, threads=None, backend=None,
              offset=0):
    """Call ``kernels.<kernel_name>(*args, seed, start, count, budget)`` in chunks.

    Sample i always uses stream (seed, i), so the result does not depend on
    the number of threads.
    """
    fn = getattr(_backend.get(backend), kernel_name)
    threads = resolve_threads(threads)
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    if count <= 0:
        return np.empty(0, dtype=np.int64)
    parts = [(offset + a, b) for a, b in _chunks(count, threads)]
    if len(parts) == 1:
        return fn(*args, seed, offset, count, budget)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda p: fn(*args, seed, p[0], p[1], budget), parts))
    return np.concatenate(results)


def phase_batch(sampler, count, seed, budget, threads=None):
    """Exact inversion sampling from a PhaseTypeHitting law, one uniform per sample."""
    threads = resolve_threads(threads)
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    parts = _chunks(count, threads) if count > 0 else []

    def work(part):
        start, size = part
        u = np.array(uniforms(seed, range(start, start + size)))
        return sampler.quantile(u)

    if not parts:
        return np.empty(0, dtype=np.int64)
    if len(parts) == 1:
        t = work(parts[0])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            t = np.concatenate(list(pool.map(work, parts)))
    t = t.astype(np.int64)
    t[t > budget] = -1
    return t


def to_sample_set(raw, log_normalization, seed, model, params, engine):
    raw = np.asarray(raw, dtype=np.int64)
    done = raw[raw >= 0]
    return HittingSampleSet(samples=done, censored=int((raw < 0).sum()),
                            log_normalization=log_normalization,
                            seed=int(seed), model=model, params=dict(params), engine=engine)


__all__ = ["DEFAULT_SEED", "HittingSampleSet", "resolve_budget", "run_batch",
           "phase_batch", "to_sample_set"]
