"""Per-node running statistics and output quantizers.

Three local detector kinds are supported: the plain SPRT random walk, a
reflected (clamped) pair of one-sided statistics, and a GLR test with an
estimated post-change mean and a decreasing time-varying boundary.  The
step functions here are pure scalar transitions; the Monte Carlo engine
uses algebraically identical vectorized forms, and the equivalence is
property-tested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .model import GlrConfig, NodeParams, QuantizerConfig, gaussian_llr


class Crossing(Enum):
    NONE = "none"
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class SprtState:
    """Running SPRT statistic; keeps evolving after a threshold crossing."""

    statistic: float = 0.0
    time: int = 0
    crossed: Crossing = Crossing.NONE
    crossing_time: Optional[int] = None


def sprt_step(state: SprtState, x: float, node: NodeParams, gamma: float) -> SprtState:
    """Advance one SPRT slot; latches the first crossing of either threshold."""
    statistic = state.statistic + gaussian_llr(x, node.post_change_mean, node.noise_var)
    time = state.time + 1
    crossed, crossing_time = state.crossed, state.crossing_time
    if crossed is Crossing.NONE:
        if statistic >= gamma:
            crossed, crossing_time = Crossing.UPPER, time
        elif statistic <= -gamma:
            crossed, crossing_time = Crossing.LOWER, time
    return SprtState(statistic, time, crossed, crossing_time)


def quantize_level_index(overshoot: float, delta: float) -> int:
    """Band index 1..4 for a nonnegative overshoot past the threshold.

    Bands are left-closed/right-open with width ``2*delta``; everything at
    or beyond ``6*delta`` maps to the top band.
    """
    if overshoot < 0:
        raise ValueError("overshoot must be >= 0")
    return min(3, int(overshoot // (2.0 * delta))) + 1


def quantize_sprt_output(state: SprtState, q: QuantizerConfig, gamma: float,
                         node: NodeParams) -> float:
    """Per-slot emitted level for the node's current statistic.

    Silent (0) strictly inside (-gamma, gamma); otherwise the band level for
    the current overshoot.  The side is re-evaluated every slot from the
    current statistic, so a statistic that wanders back inside goes silent
    again.
    """
    w = state.statistic
    if w >= gamma:
        j = quantize_level_index(w - gamma, q.resolve_delta_up(node))
        return q.upper_levels[j - 1]
    if w <= -gamma:
        j = quantize_level_index(-w - gamma, q.resolve_delta_down(node))
        return q.lower_levels[j - 1]
    return 0.0


@dataclass(frozen=True)
class CsprtLocalState:
    """Clamped one-sided pair run at a node (DualCSPRT local stage)."""

    pos: float = 0.0
    neg: float = 0.0
    time: int = 0
    crossed: Crossing = Crossing.NONE
    crossing_time: Optional[int] = None


def csprt_local_step(state: CsprtLocalState, x: float, node: NodeParams,
                     gamma: float) -> CsprtLocalState:
    """Advance the clamped pair: pos stays >= 0, neg stays <= 0."""
    llr = gaussian_llr(x, node.post_change_mean, node.noise_var)
    pos = max(0.0, state.pos + llr)
    neg = min(0.0, state.neg + llr)
    time = state.time + 1
    crossed, crossing_time = state.crossed, state.crossing_time
    if crossed is Crossing.NONE:
        if pos >= gamma:
            crossed, crossing_time = Crossing.UPPER, time
        elif neg <= -gamma:
            crossed, crossing_time = Crossing.LOWER, time
    return CsprtLocalState(pos, neg, time, crossed, crossing_time)


def quantize_csprt_output(state: CsprtLocalState, q: QuantizerConfig, gamma: float,
                          node: NodeParams) -> float:
    """Quantize whichever clamped statistic currently sits past its threshold.

    The positive side takes precedence when both are past (possible only
    after a large two-sided excursion; the clamps make it rare).
    """
    if state.pos >= gamma:
        j = quantize_level_index(state.pos - gamma, q.resolve_delta_up(node))
        return q.upper_levels[j - 1]
    if state.neg <= -gamma:
        j = quantize_level_index(-state.neg - gamma, q.resolve_delta_down(node))
        return q.lower_levels[j - 1]
    return 0.0


# --- GLR test with time-varying boundary ---------------------------------

def _log_inverse(t: float) -> float:
    return math.log(1.0 / t)


BOUNDARIES: dict[str, Callable[[float], float]] = {
    "log-inverse": _log_inverse,
}


def glr_boundary(t: float, boundary: str = "log-inverse") -> float:
    """Evaluate the decreasing stopping boundary g at t > 0."""
    if t <= 0:
        raise ValueError(f"boundary argument must be > 0, got {t}")
    try:
        fn = BOUNDARIES[boundary]
    except KeyError:
        raise ValueError(f"unknown boundary {boundary!r}; "
                         f"registered: {sorted(BOUNDARIES)}") from None
    return fn(t)


@dataclass(frozen=True)
class GlrState:
    """Closed-form GLR statistic state: only (n, S_n) is needed."""

    time: int = 0
    running_sum: float = 0.0
    statistic: float = 0.0
    theta_hat: float = 0.0
    stopped: bool = False
    stop_time: Optional[int] = None


def glr_statistic(n: int, running_sum: float, cfg: GlrConfig, sigma_sq: float) -> tuple[float, float]:
    """(statistic, theta_hat) of the Gaussian GLR at sample count n.

    The two candidate sums of per-observation log ratios collapse to
    closed forms in (n, S_n):  sum log f_a/f_b = n (a-b) (S/n - (a+b)/2) / sigma^2.
    """
    mean = running_sum / n
    theta_hat = min(max(cfg.clamp_lo, mean), cfg.clamp_hi)
    vs_null = n * (theta_hat - cfg.theta0) * (mean - 0.5 * (theta_hat + cfg.theta0)) / sigma_sq
    vs_alt = n * (theta_hat - cfg.theta1) * (mean - 0.5 * (theta_hat + cfg.theta1)) / sigma_sq
    return max(vs_null, vs_alt), theta_hat


def glr_statistic_naive(xs, cfg: GlrConfig, sigma_sq: float) -> float:
    """O(n) re-summation oracle for :func:`glr_statistic` (tests only)."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    theta_hat = min(max(cfg.clamp_lo, float(xs.mean())), cfg.clamp_hi)

    def log_ratio(a, b):
        return float(np.sum((xs - b) ** 2 - (xs - a) ** 2)) / (2.0 * sigma_sq)

    return max(log_ratio(theta_hat, cfg.theta0), log_ratio(theta_hat, cfg.theta1))


def glr_step(state: GlrState, x: float, cfg: GlrConfig, sigma_sq: float) -> GlrState:
    """Absorb one observation; latches the first boundary crossing."""
    n = state.time + 1
    running_sum = state.running_sum + x
    statistic, theta_hat = glr_statistic(n, running_sum, cfg, sigma_sq)
    stopped, stop_time = state.stopped, state.stop_time
    if not stopped and statistic >= glr_boundary(cfg.cost * n, cfg.boundary):
        stopped, stop_time = True, n
    return GlrState(n, running_sum, statistic, theta_hat, stopped, stop_time)


def glr_decide(state: GlrState, cfg: GlrConfig) -> bool:
    """True for the H1 direction (theta_hat at or above the KL midpoint)."""
    if not state.stopped:
        raise RuntimeError("glr_decide called before the test stopped")
    return state.theta_hat >= cfg.theta_star


def glr_band_edges(k: int, cfg: GlrConfig) -> tuple[float, float, float, float]:
    """Ascending band edges g(kc), g(3*delta*kc), g(2*delta*kc), g(delta*kc).

    The boundary is decreasing and 3*delta <= 1, so the edges ascend; with
    degenerate delta = 1/3 the first band collapses to zero width and its
    mass moves to the next band up.
    """
    g = lambda t: glr_boundary(t, cfg.boundary)
    kc = cfg.cost * k
    return (g(kc), g(3.0 * cfg.delta * kc), g(2.0 * cfg.delta * kc), g(cfg.delta * kc))


def glr_quantize(state: GlrState, cfg: GlrConfig, q: QuantizerConfig) -> float:
    """Per-slot emitted level from the current statistic and band edges.

    Mirrors the SPRT emission rule: the node transmits whenever its current
    statistic sits at or above the lowest band edge, with the side chosen by
    the current estimate; below the lowest edge it is silent.  Intervals are
    left-closed/right-open.
    """
    if state.time == 0:
        return 0.0
    e1, e2, e3, e4 = glr_band_edges(state.time, cfg)
    w = state.statistic
    if w < e1:
        return 0.0
    level = 1 + (w >= e2) + (w >= e3) + (w >= e4)
    if state.theta_hat >= cfg.theta_star:
        return q.upper_levels[level - 1]
    return q.lower_levels[level - 1]
