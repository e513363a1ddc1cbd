"""Log exchange-rate dynamics: transition law and GBM path simulation.

The log rate moves by independent Gaussian increments, so the exchange rate
itself follows a geometric Brownian motion.  Everything here depends on the
rate only through ratios u'/u; working in ``ln u`` makes that scale
invariance automatic.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

PHYSICAL = "physical"
RISK_NEUTRAL = "risk_neutral"
_MEASURES = (PHYSICAL, RISK_NEUTRAL)


@dataclass(frozen=True)
class MarketParams:
    """Spot rate, drift pair, volatility, and the measure they live under.

    Under the physical measure the drifts are the observed domestic/foreign
    drifts; under the risk-neutral measure they are the risk-free rates
    r_d, r_f.  Pricing routines require the latter.
    """

    u0: float
    drift_d: float
    drift_f: float
    sigma: float
    measure_tag: str = PHYSICAL

    def __post_init__(self):
        if not (self.u0 > 0.0 and math.isfinite(self.u0)):
            raise DomainError("u0 must be positive and finite")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be positive and finite")
        if not (math.isfinite(self.drift_d) and math.isfinite(self.drift_f)):
            raise DomainError("drifts must be finite")
        if self.measure_tag not in _MEASURES:
            raise DomainError(
                f"measure_tag must be one of {_MEASURES}, got {self.measure_tag!r}"
            )

    @classmethod
    def risk_neutral(cls, u0: float, r_d: float, r_f: float, sigma: float) -> "MarketParams":
        return cls(u0=u0, drift_d=r_d, drift_f=r_f, sigma=sigma, measure_tag=RISK_NEUTRAL)

    @property
    def log_drift(self) -> float:
        """Drift of ln u per unit time: drift_d - drift_f - sigma**2 / 2."""
        return self.drift_d - self.drift_f - 0.5 * self.sigma * self.sigma

    def with_spot(self, u0: float) -> "MarketParams":
        return replace(self, u0=u0)


@dataclass(frozen=True)
class TransitionDensity:
    """Gaussian law of ln(u'/u) over an interval dt."""

    log_mean: float
    log_var: float
    dt: float

    def __post_init__(self):
        if not (self.log_var > 0.0 and math.isfinite(self.log_var)):
            raise DomainError("log_var must be positive and finite")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise DomainError("dt must be positive and finite")
        if not math.isfinite(self.log_mean):
            raise DomainError("log_mean must be finite")


def log_coordinate(u: float) -> float:
    """Scale-invariant coordinate ln(u) of an exchange rate."""
    if not (u > 0.0 and math.isfinite(u)):
        raise DomainError("exchange rate must be positive and finite")
    return math.log(u)


def transition_density(params: MarketParams, dt: float) -> TransitionDensity:
    """One-step law of ln(u'/u): mean log_drift*dt, variance sigma**2*dt.

    Depends only on the ratio u'/u, never on the level u0, so it is
    identical for any rescaling of the spot.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise DomainError("dt must be positive and finite")
    return TransitionDensity(
        log_mean=params.log_drift * dt,
        log_var=params.sigma * params.sigma * dt,
        dt=dt,
    )


def transition_pdf(td: TransitionDensity, ln_ratio):
    """Gaussian density of the log ratio; accepts scalars or arrays."""
    ln_ratio = np.asarray(ln_ratio, dtype=float)
    z = (ln_ratio - td.log_mean) ** 2 / (2.0 * td.log_var)
    out = np.exp(-z) / math.sqrt(2.0 * math.pi * td.log_var)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PathSet:
    """Simulated log-rate trajectories on a uniform time grid."""

    times: np.ndarray
    log_paths: np.ndarray
    seed: int
    n_paths: int
    n_steps: int

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        log_paths = np.asarray(self.log_paths, dtype=float)
        if times.ndim != 1 or times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
            raise DomainError("times must start at 0 and increase strictly")
        if log_paths.shape != (self.n_paths, self.n_steps + 1):
            raise DomainError("log_paths shape must be (n_paths, n_steps + 1)")
        if times.size != self.n_steps + 1:
            raise DomainError("times length must be n_steps + 1")
        first = log_paths[:, 0]
        if np.any(first != first[0]):
            raise DomainError("all paths must share the same starting point")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "log_paths", log_paths)

    @property
    def terminal_log(self) -> np.ndarray:
        return self.log_paths[:, -1]

    def rates(self) -> np.ndarray:
        return np.exp(self.log_paths)


def _partition_sizes(n_paths: int, n_partitions: int) -> list[int]:
    base, rem = divmod(n_paths, n_partitions)
    return [base + (1 if k < rem else 0) for k in range(n_partitions)]


def partition_rng(seed: int, partition: int) -> np.random.Generator:
    """Independent stream for one partition, derived from (seed, partition)."""
    return np.random.default_rng(np.random.SeedSequence((seed, partition)))


def simulate_paths(
    params: MarketParams,
    horizon: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    n_partitions: int = 1,
) -> PathSet:
    """Simulate GBM log paths with exact Gaussian increments.

    Each step adds ``log_drift*dt + sigma*sqrt(dt)*Z`` to ln u, which is the
    increment law itself, so the discretization introduces no time-step
    bias.  Paths are split into ``n_partitions`` contiguous blocks, each
    driven by its own RNG stream derived from ``(seed, partition index)``;
    the output is deterministic for a fixed partition count and partitions
    may safely run in parallel.
    """
    if not (horizon > 0.0 and math.isfinite(horizon)):
        raise DomainError("horizon must be positive and finite")
    if n_steps < 1:
        raise DomainError("n_steps must be at least 1")
    if n_paths < 1:
        raise DomainError("n_paths must be at least 1")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise DomainError("seed must be a non-negative integer")
    if n_partitions < 1:
        raise DomainError("n_partitions must be at least 1")

    dt = horizon / n_steps
    step_mean = params.log_drift * dt
    step_sd = params.sigma * math.sqrt(dt)
    x0 = log_coordinate(params.u0)

    log_paths = np.empty((n_paths, n_steps + 1))
    log_paths[:, 0] = x0
    sizes = _partition_sizes(n_paths, n_partitions)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def fill(k: int) -> None:
        lo, hi = offsets[k], offsets[k + 1]
        if lo == hi:
            return
        z = partition_rng(seed, k).standard_normal((hi - lo, n_steps))
        increments = step_mean + step_sd * z
        log_paths[lo:hi, 1:] = x0 + np.cumsum(increments, axis=1)

    if n_partitions == 1:
        fill(0)
    else:
        with ThreadPoolExecutor(max_workers=n_partitions) as pool:
            list(pool.map(fill, range(n_partitions)))

    times = np.linspace(0.0, horizon, n_steps + 1)
    return PathSet(
        times=times,
        log_paths=log_paths,
        seed=int(seed),
        n_paths=n_paths,
        n_steps=n_steps,
    )


def paths_to_csv(paths: PathSet) -> str:
    """Serialize as ``time,path_0,...`` rows with 17 significant digits."""
    out = io.StringIO()
    out.write("time," + ",".join(f"path_{j}" for j in range(paths.n_paths)) + "\n")
    for i, t in enumerate(paths.times):
        row = ",".join(f"{v:.17g}" for v in paths.log_paths[:, i])
        out.write(f"{t:.17g},{row}\n")
    return out.getvalue()
