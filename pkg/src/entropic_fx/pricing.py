"""European FX option pricing by four independent routes.

Closed form, Gaussian quadrature of the terminal density, Monte Carlo with
exact terminal sampling, and a backward PDE solve.  The routes share only
the market inputs, so agreement between them is a real consistency check
rather than a tautology.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .dynamics import (
    RISK_NEUTRAL,
    MarketParams,
    log_coordinate,
    partition_rng,
    simulate_paths,
)
from .errors import (
    DomainError,
    GridTooNarrow,
    MeasureError,
    NumericalError,
    ToleranceNotMet,
)
from .fokker_planck import FPGridSpec

CALL = "call"
PUT = "put"
_KINDS = (CALL, PUT)

_METHODS = ("closed_form", "quadrature", "monte_carlo", "pde")

# Quadrature integrates the payoff over this many terminal-log standard
# deviations around the mean; the Gaussian tail beyond it is ~1e-32.
_QUAD_SIGMAS = 12.0
# PDE grids must reach at least this many sigma*sqrt(T) beyond the strike,
# and the spot must not sit in the outer tenth of the grid.
_PDE_STRIKE_SIGMAS = 8.0
_PDE_EDGE_FRACTION = 0.1


@dataclass(frozen=True)
class OptionSpec:
    """European option contract: kind, strike, expiry."""

    kind: str
    strike: float
    expiry: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if not (self.strike > 0.0 and math.isfinite(self.strike)):
            raise DomainError("strike must be positive and finite")
        if not (self.expiry > 0.0 and math.isfinite(self.expiry)):
            raise DomainError("expiry must be positive and finite")

    def payoff(self, rate):
        rate = np.asarray(rate, dtype=float)
        if self.kind == CALL:
            out = np.maximum(rate - self.strike, 0.0)
        else:
            out = np.maximum(self.strike - rate, 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PriceResult:
    """Premium plus the method that produced it and its diagnostics."""

    premium: float
    method: str
    std_error: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in _METHODS:
            raise DomainError(f"method must be one of {_METHODS}, got {self.method!r}")
        if not math.isfinite(self.premium):
            raise NumericalError("premium must be finite")
        if self.premium < -1e-10:
            raise NumericalError(f"premium {self.premium:.3e} is negative")

    def to_json_dict(self) -> dict:
        return {
            "premium": self.premium,
            "method": self.method,
            "std_error": self.std_error,
            "d1": self.diagnostics.get("d1"),
            "d2": self.diagnostics.get("d2"),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PriceResult":
        diagnostics = {
            k: data[k] for k in ("d1", "d2") if data.get(k) is not None
        }
        return cls(
            premium=data["premium"],
            method=data["method"],
            std_error=data.get("std_error"),
            diagnostics=diagnostics,
        )


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    The erfc tail keeps relative accuracy for large negative x (no
    underflow to zero before x = -37), and evaluating the smaller tail
    first makes N(x) + N(-x) sum to exactly 1.
    """
    t = 0.5 * math.erfc(abs(x) / math.sqrt(2.0))
    return t if x <= 0.0 else 1.0 - t


def _require_risk_neutral(params: MarketParams) -> None:
    if params.measure_tag != RISK_NEUTRAL:
        raise MeasureError(
            "pricing requires risk-neutral drifts; got measure_tag "
            f"{params.measure_tag!r}"
        )


def d1_d2(params: MarketParams, opt: OptionSpec) -> tuple[float, float]:
    """Normalized log moneyness pair for the closed-form price.

    d1 carries +sigma^2/2 in the numerator and d2 = d1 - sigma*sqrt(T);
    N(d2) is then the risk-neutral exercise probability.
    """
    sig_sqrt_t = params.sigma * math.sqrt(opt.expiry)
    if sig_sqrt_t == 0.0:
        raise DomainError("sigma * sqrt(expiry) must be positive")
    num = (
        math.log(params.u0 / opt.strike)
        + (params.drift_d - params.drift_f + 0.5 * params.sigma**2) * opt.expiry
    )
    d1 = num / sig_sqrt_t
    return d1, d1 - sig_sqrt_t


def gk_call(params: MarketParams, opt: OptionSpec) -> PriceResult:
    """Closed-form call premium u0 e^{-rf T} N(d1) - K e^{-rd T} N(d2)."""
    _require_risk_neutral(params)
    if opt.kind != CALL:
        raise DomainError("gk_call requires a call option")
    d1, d2 = d1_d2(params, opt)
    premium = params.u0 * math.exp(-params.drift_f * opt.expiry) * std_normal_cdf(
        d1
    ) - opt.strike * math.exp(-params.drift_d * opt.expiry) * std_normal_cdf(d2)
    return PriceResult(
        premium=premium, method="closed_form", diagnostics={"d1": d1, "d2": d2}
    )


def gk_put(params: MarketParams, opt: OptionSpec) -> PriceResult:
    """Closed-form put premium K e^{-rd T} N(-d2) - u0 e^{-rf T} N(-d1)."""
    _require_risk_neutral(params)
    if opt.kind != PUT:
        raise DomainError("gk_put requires a put option")
    d1, d2 = d1_d2(params, opt)
    premium = opt.strike * math.exp(-params.drift_d * opt.expiry) * std_normal_cdf(
        -d2
    ) - params.u0 * math.exp(-params.drift_f * opt.expiry) * std_normal_cdf(-d1)
    return PriceResult(
        premium=premium, method="closed_form", diagnostics={"d1": d1, "d2": d2}
    )


def closed_form_price(params: MarketParams, opt: OptionSpec) -> PriceResult:
    return gk_call(params, opt) if opt.kind == CALL else gk_put(params, opt)


def parity_residual(
    params: MarketParams, strike: float, expiry: float
) -> float:
    """C - P - (u0 e^{-rf T} - K e^{-rd T}); zero up to rounding."""
    call = gk_call(params, OptionSpec(CALL, strike, expiry))
    put = gk_put(params, OptionSpec(PUT, strike, expiry))
    forward_leg = params.u0 * math.exp(
        -params.drift_f * expiry
    ) - strike * math.exp(-params.drift_d * expiry)
    return call.premium - put.premium - forward_leg


def quadrature_price(
    params: MarketParams, opt: OptionSpec, tol: float = 1e-10
) -> PriceResult:
    """Discounted expectation of the payoff under the terminal log density.

    Integrates payoff(e^y) against the Gaussian law of y = ln u_T over the
    mean +/- 12 standard deviations, clipped to where the payoff is
    nonzero.  Raises ToleranceNotMet if the integrator cannot certify the
    requested absolute tolerance.
    """
    _require_risk_neutral(params)
    if not (tol > 0.0 and math.isfinite(tol)):
        raise DomainError("tol must be positive and finite")
    t = opt.expiry
    mean = log_coordinate(params.u0) + params.log_drift * t
    sd = params.sigma * math.sqrt(t)
    discount = math.exp(-params.drift_d * t)
    strike_z = (math.log(opt.strike) - mean) / sd

    # Integrate in standardized units z = (ln u_T - mean)/sd so the
    # integrand stays O(payoff) regardless of how small sd is.  The payoff
    # vanishes on one side of the strike; integrating only the live side
    # removes the kink from the integrand.
    lo, hi = -_QUAD_SIGMAS, _QUAD_SIGMAS
    if opt.kind == CALL:
        lo = max(lo, strike_z)
    else:
        hi = min(hi, strike_z)
    if lo >= hi:
        return PriceResult(premium=0.0, method="quadrature", std_error=None)

    norm = 1.0 / math.sqrt(2.0 * math.pi)

    def integrand(z: float) -> float:
        return opt.payoff(math.exp(mean + sd * z)) * norm * math.exp(-0.5 * z * z)

    target = 0.5 * tol / discount
    value = err = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for limit in (100, 500):
            value, err = quad(
                integrand, lo, hi, epsabs=target, epsrel=1e-12, limit=limit
            )
            if discount * err <= tol:
                break
    if discount * err > tol:
        raise ToleranceNotMet(
            f"quadrature error bound {discount * err:.3e} exceeds tol {tol:.3e}"
        )
    return PriceResult(
        premium=discount * value,
        method="quadrature",
        std_error=None,
        diagnostics={"abs_error_bound": discount * err},
    )


def mc_price(
    params: MarketParams,
    opt: OptionSpec,
    n_paths: int,
    seed: int,
    antithetic: bool = True,
    n_steps: int = 1,
    n_partitions: int = 1,
) -> PriceResult:
    """Monte Carlo premium with the terminal rate drawn exactly.

    With n_steps = 1 the terminal log rate is sampled in a single exact
    Gaussian step; larger n_steps walks the full path (still exact in
    law).  Antithetic variates pair each draw with its mirror image and
    average within pairs, which cancels the odd part of the payoff's
    dependence on the noise.
    """
    _require_risk_neutral(params)
    if n_paths < 2:
        raise DomainError("n_paths must be at least 2")
    if n_steps < 1:
        raise DomainError("n_steps must be at least 1")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise DomainError("seed must be a non-negative integer")
    if n_partitions < 1:
        raise DomainError("n_partitions must be at least 1")
    if antithetic and n_steps != 1:
        raise DomainError("antithetic sampling requires n_steps = 1")
    if antithetic and n_paths % 2 != 0:
        raise DomainError("antithetic sampling requires an even n_paths")

    t = opt.expiry
    discount = math.exp(-params.drift_d * t)

    if n_steps > 1:
        paths = simulate_paths(params, t, n_steps, n_paths, seed, n_partitions)
        samples = opt.payoff(np.exp(paths.terminal_log))
    else:
        mean = log_coordinate(params.u0) + params.log_drift * t
        sd = params.sigma * math.sqrt(t)
        n_draws = n_paths // 2 if antithetic else n_paths
        base, rem = divmod(n_draws, n_partitions)
        chunks = []
        for k in range(n_partitions):
            size = base + (1 if k < rem else 0)
            if size == 0:
                continue
            chunks.append(partition_rng(seed, k).standard_normal(size))
        z = np.concatenate(chunks)
        if antithetic:
            up = opt.payoff(np.exp(mean + sd * z))
            dn = opt.payoff(np.exp(mean - sd * z))
            samples = 0.5 * (up + dn)
        else:
            samples = opt.payoff(np.exp(mean + sd * z))

    n = samples.size
    premium = discount * float(np.mean(samples))
    std_error = discount * float(np.std(samples, ddof=1)) / math.sqrt(n)
    return PriceResult(
        premium=premium,
        method="monte_carlo",
        std_error=std_error,
        diagnostics={
            "n_paths": n_paths,
            "n_samples": n,
            "antithetic": antithetic,
            "n_steps": n_steps,
            "seed": int(seed),
        },
    )


def default_pde_grid(
    params: MarketParams,
    opt: OptionSpec,
    n_points: int = 1601,
    n_time_steps: int = 400,
) -> FPGridSpec:
    """Log-rate grid wide enough for the backward solve's guards.

    Centered between spot and strike, extended ten sigma*sqrt(T) plus the
    drift excursion on each side.
    """
    x0 = log_coordinate(params.u0)
    ln_k = math.log(opt.strike)
    width = params.sigma * math.sqrt(opt.expiry)
    half = (
        0.5 * abs(x0 - ln_k)
        + 10.0 * width
        + abs(params.log_drift) * opt.expiry
    )
    center = 0.5 * (x0 + ln_k)
    return FPGridSpec(
        x_min=center - half,
        x_max=center + half,
        n_points=n_points,
        dt_step=opt.expiry / n_time_steps,
    )


def _pde_boundary_values(
    params: MarketParams, opt: OptionSpec, x_min: float, x_max: float, tau: float
):
    disc_d = math.exp(-params.drift_d * tau)
    disc_f = math.exp(-params.drift_f * tau)
    if opt.kind == CALL:
        return 0.0, math.exp(x_max) * disc_f - opt.strike * disc_d
    return opt.strike * disc_d - math.exp(x_min) * disc_f, 0.0


def pde_price(
    params: MarketParams, opt: OptionSpec, grid: Optional[FPGridSpec] = None
) -> PriceResult:
    """Backward Crank-Nicolson solve of the log-rate pricing equation.

    In time-to-maturity tau the value satisfies dE/dtau = (sigma^2/2) E_xx
    + nu E_x - rd E with nu = rd - rf - sigma^2/2.  The first step is
    split into two implicit half-steps to damp the payoff kink before
    Crank-Nicolson takes over.  The reported residual diagnostic is the
    worst scaled defect of the stepping equations, a direct check on the
    linear algebra.
    """
    _require_risk_neutral(params)
    if grid is None:
        grid = default_pde_grid(params, opt)

    x = grid.points()
    n = grid.n_points
    h = float(x[1] - x[0])
    x0 = log_coordinate(params.u0)
    ln_k = math.log(opt.strike)
    width = params.sigma * math.sqrt(opt.expiry)

    if not (x[0] < x0 < x[-1]):
        raise GridTooNarrow("spot log rate lies outside the grid")
    if ln_k - x[0] < _PDE_STRIKE_SIGMAS * width or x[-1] - ln_k < _PDE_STRIKE_SIGMAS * width:
        raise GridTooNarrow(
            "grid must extend at least eight sigma*sqrt(T) beyond the strike"
        )
    span = x[-1] - x[0]
    if min(x0 - x[0], x[-1] - x0) < _PDE_EDGE_FRACTION * span:
        raise GridTooNarrow("spot log rate sits within 10% of the grid boundary")

    t = opt.expiry
    n_steps = max(1, math.ceil(t / grid.dt_step - 1e-12))
    dtau = t / n_steps

    nu = params.log_drift
    diffusion = 0.5 * params.sigma * params.sigma
    rd = params.drift_d

    # Interior-row stencil of L: diffusion + advection - discounting.
    lower_c = diffusion / (h * h) - 0.5 * nu / h
    diag_c = -2.0 * diffusion / (h * h) - rd
    upper_c = diffusion / (h * h) + 0.5 * nu / h

    def banded_lhs(theta_dt: float) -> np.ndarray:
        ab = np.zeros((3, n))
        ab[0, 2:] = -theta_dt * upper_c
        ab[1, 1:-1] = 1.0 - theta_dt * diag_c
        ab[2, :-2] = -theta_dt * lower_c
        ab[1, 0] = 1.0
        ab[1, -1] = 1.0
        return ab

    def apply_interior(v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        out[1:-1] = lower_c * v[:-2] + diag_c * v[1:-1] + upper_c * v[2:]
        out[0] = 0.0
        out[-1] = 0.0
        return out

    values = opt.payoff(np.exp(x))
    residual = 0.0

    # Two implicit half-steps over the first dtau smooth the kink.
    ab_half = banded_lhs(0.5 * dtau)
    for j in (1, 2):
        tau = j * 0.5 * dtau
        lo, hi = _pde_boundary_values(params, opt, x[0], x[-1], tau)
        rhs = values.copy()
        rhs[0], rhs[-1] = lo, hi
        values = solve_banded((1, 1), ab_half, rhs)

    ab_cn = banded_lhs(0.5 * dtau)
    for m in range(1, n_steps):
        tau = (m + 1) * dtau
        lo, hi = _pde_boundary_values(params, opt, x[0], x[-1], tau)
        rhs = values + 0.5 * dtau * apply_interior(values)
        rhs[0], rhs[-1] = lo, hi
        new_values = solve_banded((1, 1), ab_cn, rhs)

        mid = 0.5 * (values + new_values)
        defect = (new_values - values) / dtau - apply_interior(mid)
        scale = 1.0 + float(np.max(np.abs(mid)))
        residual = max(residual, float(np.max(np.abs(defect[1:-1]))) / scale)
        values = new_values

    spline = CubicSpline(x, values)
    premium = float(spline(x0))
    return PriceResult(
        premium=premium,
        method="pde",
        std_error=None,
        diagnostics={
            "residual": residual,
            "n_points": n,
            "n_time_steps": n_steps,
        },
    )
