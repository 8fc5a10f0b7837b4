"""Closed-form performance pipeline for the clamped-pair fusion test.

Under the true hypothesis, the wrong-side fusion statistic is a reflected
random walk; a false alarm is its first passage across the far threshold.
This module computes that first-passage law on a grid (a killed transition
kernel), the mean first-passage time through a renewal integral equation,
Gaussian approximations of the local crossing times, order-statistic means
of the first transmissions, the piecewise-constant drift schedule the
fusion statistic sees as nodes start transmitting and upgrade their
quantizer levels, and the resulting decision-delay approximation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from .model import Algorithm, Hypothesis, NodeParams, ScenarioConfig


@dataclass(frozen=True)
class IncrementLaw:
    """Gaussian law of one fusion-walk increment within a drift segment."""

    mean: float
    variance: float
    description: str = ""

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class LocalPassageLaw:
    """Gaussian approximation of a node's threshold-crossing time."""

    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def local_passage_law(node: NodeParams, gamma: float) -> LocalPassageLaw:
    """Crossing-time law: mean 2 s^2 g / th^2, variance 8 s^4 g / th^4."""
    th2 = node.post_change_mean**2
    s2 = node.noise_var
    return LocalPassageLaw(mean=2.0 * s2 * gamma / th2,
                           variance=8.0 * s2 * s2 * gamma / (th2 * th2))


def local_passage_cdf(node: NodeParams, gamma: float, k: float) -> float:
    """P(crossing time <= k) under the Gaussian approximation."""
    law = local_passage_law(node, gamma)
    return float(norm.cdf((k - law.mean) / law.std))


# --- first-passage machinery on a grid ------------------------------------

@dataclass(frozen=True)
class RenewalGrid:
    """Solution of the mean first-passage integral equation on [0, beta]."""

    threshold: float
    step: float
    grid: np.ndarray
    values: np.ndarray  # L(s) on the grid

    @property
    def mean(self) -> float:
        return float(self.values[0])

    @property
    def rate(self) -> float:
        """Exponential passage-rate approximation lambda = 1 / L(0)."""
        return 1.0 / self.mean


def renewal_first_passage_mean(law: IncrementLaw, beta: float,
                               step: Optional[float] = None) -> RenewalGrid:
    """Mean first passage of the reflected-at-zero walk across +beta.

    Solves L(s) = 1 + F(-s) L(0) + int_0^beta L(u) f(u - s) du by
    collocation on a uniform grid with exactly integrated kernel cells; the
    passage rate is 1 / L(0).
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if step is None:
        step = beta / 1000.0
    if step > beta / 200.0:
        raise ValueError("step must be <= beta/200 for a usable grid")
    n = int(round(beta / step))
    s = np.linspace(0.0, beta, n + 1)
    h = s[1] - s[0]
    # integration cells around each node: half cells at the ends, seamless on [0, beta]
    edges = np.concatenate(([0.0], s[:-1] + h / 2.0, [beta]))
    cdf = norm.cdf((edges[None, :] - s[:, None] - law.mean) / law.std)
    A = cdf[:, 1:] - cdf[:, :-1]
    A[:, 0] += norm.cdf((0.0 - s - law.mean) / law.std)  # reflected mass restarts at 0
    try:
        values = np.linalg.solve(np.eye(n + 1) - A, np.ones(n + 1))
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"renewal system is singular for {law}: {exc}") from None
    if not np.all(np.isfinite(values)) or values[0] < 1.0:
        raise ArithmeticError(f"renewal solution is not a valid mean passage time for {law}")
    return RenewalGrid(threshold=beta, step=h, grid=s, values=values)


def _cell_masses(source: np.ndarray, edges: np.ndarray, law: IncrementLaw) -> np.ndarray:
    """Mass moved from each source point into each destination cell.

    Rows index destination cells (edges define them), columns the sources.
    Mass below the first edge is folded into the first cell.
    """
    cdf = norm.cdf((edges[None, :] - source[:, None] - law.mean) / law.std)
    dest = cdf[:, 1:] - cdf[:, :-1]
    dest[:, 0] += cdf[:, 0]
    return dest.T


def first_passage_survival(law: IncrementLaw, barrier: float, kmax: int, *,
                           reflect_at_zero: bool, lo: float = 0.0,
                           n_grid: int = 1000, keep_densities: bool = False):
    """P(first passage > k), k = 1..kmax, for a walk started at 0.

    With ``reflect_at_zero`` the state is an atom at 0 plus cells on
    (0, barrier); mass at or beyond the barrier is killed.  Without
    reflection the state is cells on (lo, barrier) with underflow clipped
    into the bottom cell (choose ``lo`` several walk spreads down so the
    clip is negligible).  Returns (survival, points, densities).
    """
    if reflect_at_zero:
        lo = 0.0
        if barrier <= 0:
            raise ValueError("barrier must be > 0")
    elif not lo < 0.0 < barrier:
        raise ValueError("need lo < 0 < barrier for the unreflected grid")
    h = (barrier - lo) / n_grid
    centers = lo + (np.arange(n_grid) + 0.5) * h
    edges = np.concatenate(([lo], lo + np.arange(1, n_grid) * h, [barrier]))
    if reflect_at_zero:
        pts = np.concatenate(([0.0], centers))
        cdf0 = norm.cdf((edges[None, :] - pts[:, None] - law.mean) / law.std)
        T = np.empty((n_grid + 1, n_grid + 1))
        T[0, :] = cdf0[:, 0]                    # clamped back to the atom at 0
        T[1:, :] = (cdf0[:, 1:] - cdf0[:, :-1]).T
        p = np.zeros(n_grid + 1)
        p[0] = 1.0
    else:
        pts = centers
        T = _cell_masses(pts, edges, law)
        # exact first step from the true start point 0
        start_cdf = norm.cdf((edges - law.mean) / law.std)
        p = np.diff(start_cdf)
        p[0] += start_cdf[0]
    survival = np.empty(kmax)
    densities = [] if keep_densities else None
    k0 = 0
    if not reflect_at_zero:
        survival[0] = p.sum()
        if keep_densities:
            densities.append(p.copy())
        k0 = 1
    for k in range(k0, kmax):
        p = T @ p
        survival[k] = p.sum()
        if keep_densities:
            densities.append(p.copy())
    return survival, pts, densities


def local_passage_survival_walk(node: NodeParams, gamma: float, kmax: int,
                                n_grid: int = 900) -> np.ndarray:
    """Exact-walk survival P(no crossing of +gamma by slot k) for one node.

    The LLR walk has positive drift under the changed hypothesis, so a
    lower truncation a few walk spreads below zero is effectively exact.
    """
    drift = node.llr_drift()
    spread = node.llr_std() * math.sqrt(max(gamma / drift, 1.0))
    lo = -max(4.0 * spread, 6.0 * node.llr_std())
    law = IncrementLaw(mean=drift, variance=node.llr_std() ** 2,
                       description="local llr increment")
    survival, _, _ = first_passage_survival(law, gamma, kmax, reflect_at_zero=False,
                                            lo=lo, n_grid=n_grid)
    return survival


# --- false-alarm probability ----------------------------------------------

def pre_onset_increment_law(cfg: ScenarioConfig) -> IncrementLaw:
    """Sign-normalized increment law of the wrong-side fusion walk before any
    node transmits; the walk is analyzed as moving toward +beta."""
    scale = cfg.fusion.increment_scale()
    variance = scale * scale * cfg.fusion.noise_variance
    if cfg.true_hypothesis is Hypothesis.H1:
        mean = -cfg.bias.d0  # negated H0-side walk
    else:
        mean = cfg.bias.d1
    return IncrementLaw(mean=mean, variance=variance,
                        description="pre-onset fusion increment")


def _node_survivals(cfg: ScenarioConfig, kmax: int, t1_model: str) -> np.ndarray:
    gamma = cfg.local_threshold
    if t1_model == "clt":
        k = np.arange(1, kmax + 1)
        rows = []
        for node in cfg.nodes:
            law = local_passage_law(node, gamma)
            rows.append(1.0 - norm.cdf((k - law.mean) / law.std))
        return np.asarray(rows)
    if t1_model != "walk":
        raise ValueError(f"unknown t1_model {t1_model!r}")
    return np.asarray([local_passage_survival_walk(node, gamma, kmax)
                       for node in cfg.nodes])


def pfa_analytic(cfg: ScenarioConfig, *, t1_model: str = "walk",
                 passage_model: str = "grid", n_grid: int = 1000,
                 product_floor: float = 1e-12) -> float:
    """Probability of a wrong decision before the first local transmission.

    The dominant error mechanism: the wrong-side clamped fusion statistic,
    a reflected random walk while only receiver noise arrives, reaches the
    far threshold before any node starts transmitting.  The series pairs
    the first-passage probability mass with the survival function of the
    earliest local crossing and is truncated once that survival falls
    below ``product_floor``.

    ``t1_model`` selects exact walk-based local crossing laws ("walk") or
    their Gaussian approximations ("clt"); ``passage_model`` selects the
    grid-evolved first-passage law ("grid") or the exponential
    approximation with rate from the renewal mean ("exponential").
    """
    if cfg.algorithm is not Algorithm.SPRT_CSPRT:
        raise ValueError("the analytic pipeline covers the sprt-csprt variant only")
    law = pre_onset_increment_law(cfg)
    beta = cfg.fusion_threshold

    laws = [local_passage_law(n, cfg.local_threshold) for n in cfg.nodes]
    kmax = int(math.ceil(max(l.mean + 10.0 * l.std for l in laws)))
    node_surv = _node_survivals(cfg, kmax, t1_model)
    t1_survival = node_surv.prod(axis=0)
    below = t1_survival < product_floor
    if below.any():
        kmax = max(int(np.argmax(below)), 1)
        t1_survival = t1_survival[:kmax]

    if passage_model == "grid":
        survival, _, _ = first_passage_survival(law, beta, kmax,
                                                reflect_at_zero=True, n_grid=n_grid)
        passage_cdf = 1.0 - survival
    elif passage_model == "exponential":
        rate = renewal_first_passage_mean(law, beta, beta / n_grid).rate
        passage_cdf = 1.0 - np.exp(-rate * np.arange(1, kmax + 1))
    else:
        raise ValueError(f"unknown passage_model {passage_model!r}")

    mass = np.diff(np.concatenate(([0.0], passage_cdf)))
    return float(np.sum(mass * t1_survival))


# --- order statistics and the drift schedule -------------------------------

def order_stat_epoch_means(laws: Sequence[LocalPassageLaw],
                           n_points: int = 40_001) -> list[float]:
    """E[i-th smallest] of independent, non-identical Gaussian passage times.

    Assembles the order-statistic CDFs from the per-node CDFs through the
    crossing-count distribution (a running binomial convolution over nodes)
    and integrates E[t] = int_0^inf (1 - F(x)) dx - int_-inf^0 F(x) dx.
    """
    if not laws:
        raise ValueError("at least one passage law is required")
    means = np.array([l.mean for l in laws])
    stds = np.array([l.std for l in laws])
    lo = float((means - 10.0 * stds).min())
    hi = float((means + 10.0 * stds).max())
    x = np.linspace(lo, hi, n_points)
    per_node = norm.cdf((x[:, None] - means) / stds)
    L = len(laws)
    count = np.zeros((n_points, L + 1))
    count[:, 0] = 1.0
    for l in range(L):
        p = per_node[:, l][:, None]
        count[:, 1:l + 2] = count[:, 1:l + 2] * (1.0 - p) + count[:, 0:l + 1] * p
        count[:, 0] *= (1.0 - per_node[:, l])
    out = []
    pos = x >= 0.0
    for i in range(1, L + 1):
        F_i = count[:, i:].sum(axis=1)
        e = float(np.trapezoid(1.0 - F_i[pos], x[pos]))
        if (~pos).any():
            e -= float(np.trapezoid(F_i[~pos], x[~pos]))
        if x[0] > 0.0:
            e += float(x[0])  # survival is ~1 below the grid start
        out.append(e)
    return out


@dataclass(frozen=True)
class EpochSegment:
    time: float        # mean epoch T_k
    drift: float       # mean fusion increment during [T_k, T_k+1)
    level_sum: float   # sum of transmitted levels during the segment
    pre_mean: float    # mean fusion statistic just before T_k


@dataclass(frozen=True)
class EpochSchedule:
    segments: tuple[EpochSegment, ...]
    terminal_drift: float

    def __iter__(self):
        return iter(self.segments)


def build_epoch_schedule(cfg: ScenarioConfig,
                         epoch_means: Optional[Sequence[float]] = None) -> EpochSchedule:
    """Drift-change epochs as nodes start transmitting and upgrade levels.

    Nodes are assumed to cross in the order of their mean passage times;
    the node arriving i-th adds an upgrade epoch each time its statistic
    traverses one quantizer band (band width over drift) while those epochs
    precede the next arrival; the last arrival's upgrades are unbounded.
    Segment means follow the exact recursion
    pre_mean[k+1] = pre_mean[k] + drift[k] * (T[k+1] - T[k]).
    """
    gamma = cfg.local_threshold
    laws = [local_passage_law(n, gamma) for n in cfg.nodes]
    order = sorted(range(cfg.n_nodes), key=lambda i: laws[i].mean)
    if epoch_means is None:
        epoch_means = order_stat_epoch_means([laws[i] for i in order])
    if len(epoch_means) != cfg.n_nodes:
        raise ValueError("epoch_means must have one entry per node")

    scale = cfg.fusion.increment_scale()
    up = cfg.quantizer.upper_levels
    events: list[tuple[float, float]] = []  # (time, level-sum increment)
    for i, node_idx in enumerate(order):
        node = cfg.nodes[node_idx]
        arrival = float(epoch_means[i])
        events.append((arrival, up[0]))
        spacing = 2.0 * cfg.quantizer.resolve_delta_up(node) / node.llr_drift()
        next_arrival = float(epoch_means[i + 1]) if i + 1 < len(epoch_means) else math.inf
        t = arrival
        for j in range(1, 4):
            t += spacing
            if t >= next_arrival:
                break
            events.append((t, up[j] - up[j - 1]))
    events.sort()

    # merge coincident epochs into one segment each
    merged: list[tuple[float, float]] = []
    level = 0.0
    for t, inc in events:
        level += inc
        if merged and merged[-1][0] == t:
            merged[-1] = (t, level)
        else:
            merged.append((t, level))

    segments: list[EpochSegment] = []
    pre_mean = max(0.0, cfg.bias.d1 * merged[0][0])  # pre-onset drift is the bias alone
    for idx, (t, lev) in enumerate(merged):
        if idx > 0:
            prev_t, _ = merged[idx - 1]
            pre_mean = pre_mean + segments[idx - 1].drift * (t - prev_t)
        segments.append(EpochSegment(time=t, drift=scale * lev + cfg.bias.d1,
                                     level_sum=lev, pre_mean=pre_mean))
    terminal = scale * cfg.quantizer.upper_levels[-1] * cfg.n_nodes + cfg.bias.d1
    return EpochSchedule(segments=tuple(segments), terminal_drift=terminal)


def edd_analytic(schedule: EpochSchedule, beta: float) -> float:
    """Mean decision delay: enter the first segment whose drift carries the
    statistic across beta before the next epoch, from that segment's mean."""
    segments = list(schedule.segments)
    if not segments:
        raise ValueError("schedule has no segments")
    for i, seg in enumerate(segments):
        nxt = segments[i + 1].time if i + 1 < len(segments) else math.inf
        if seg.drift > 0:
            residual = (beta - seg.pre_mean) / seg.drift
            if residual < nxt - seg.time:
                return seg.time + max(residual, 0.0)
    if schedule.terminal_drift <= 0:
        raise ArithmeticError("terminal drift is not positive; the statistic "
                              "cannot cross the threshold")
    last = segments[-1]
    return last.time + (beta - last.pre_mean) / schedule.terminal_drift
