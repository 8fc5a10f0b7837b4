"""Monte Carlo engine: end-to-end trials, metrics and fading draws.

Trials are simulated in vectorized batches, but every trial's randomness is
derived independently from ``(master_seed, trial_index)`` (see
:mod:`seqsense.streams`), so results are bit-identical for any batch size,
worker count or execution order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .detectors import glr_boundary
from .model import FadingConfig, Hypothesis, ScenarioConfig
from .streams import STREAM_CHUNK, TrialStreams

_MAX_BATCH = 4096


@dataclass(frozen=True)
class TrialRandomness:
    """Addresses one trial's deterministic randomness stream."""

    master_seed: int
    trial_index: int = 0


@dataclass(frozen=True)
class TrialResult:
    stop_time: int
    decision: Hypothesis
    truth: Hypothesis
    truncated: bool
    local_crossing_times: tuple[Optional[int], ...]

    @property
    def wrong(self) -> bool:
        return self.decision is not self.truth


@dataclass
class TrialBatch:
    """Struct-of-arrays result container for a block of trials."""

    truth: Hypothesis
    trial_indices: np.ndarray       # (n,) int64
    stop_times: np.ndarray          # (n,) int64
    decisions: np.ndarray           # (n,) int8, +1 = H1, -1 = H0
    truncated: np.ndarray           # (n,) bool
    local_crossing_times: np.ndarray  # (n, L) int64, -1 = never
    simultaneous_crossings: int
    master_seed: int

    def __len__(self) -> int:
        return len(self.stop_times)

    def results(self) -> list[TrialResult]:
        out = []
        for i in range(len(self)):
            locals_ = tuple(int(t) if t >= 0 else None
                            for t in self.local_crossing_times[i])
            out.append(TrialResult(
                stop_time=int(self.stop_times[i]),
                decision=Hypothesis.H1 if self.decisions[i] > 0 else Hypothesis.H0,
                truth=self.truth,
                truncated=bool(self.truncated[i]),
                local_crossing_times=locals_,
            ))
        return out


@dataclass(frozen=True)
class MonteCarloSummary:
    trials: int
    edd_mean: float
    edd_stderr: float
    pfa_hat: float
    pfa_ci95: tuple[float, float]
    truncated_count: int


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def draw_fading(fading: FadingConfig, n_nodes: int, rng) -> list[float]:
    """Per-node slow-fading means, held fixed for a whole trial."""
    if not fading.per_trial:
        raise ValueError("only per-trial (slow) fading is supported")
    return list(rng.standard_exponential(n_nodes) / fading.rate)


def _run_batch(cfg: ScenarioConfig, master_seed: int, trial_indices: np.ndarray) -> dict:
    n = len(trial_indices)
    L = cfg.n_nodes
    thetas = np.array([nd.post_change_mean for nd in cfg.nodes])
    samp_std = np.array([nd.effective_sampling_std for nd in cfg.nodes])
    noise_var = np.array([nd.noise_var for nd in cfg.nodes])
    gamma = cfg.local_threshold
    beta = cfg.fusion_threshold
    scale = cfg.fusion.increment_scale()
    fusion_std = cfg.fusion.noise_std
    d1, d0 = cfg.bias.d1, cfg.bias.d0
    under_h1 = cfg.true_hypothesis is Hypothesis.H1
    up_levels = np.asarray(cfg.quantizer.upper_levels)
    lo_levels = np.asarray(cfg.quantizer.lower_levels)
    width_up = 2.0 * np.array([cfg.quantizer.resolve_delta_up(nd) for nd in cfg.nodes])
    width_dn = 2.0 * np.array([cfg.quantizer.resolve_delta_down(nd) for nd in cfg.nodes])
    local_kind = cfg.algorithm.local_kind
    fusion_kind = cfg.algorithm.fusion_kind
    glr = cfg.glr

    streams = TrialStreams(master_seed, L, cfg.fading is not None)

    stop_times = np.full(n, cfg.max_horizon, dtype=np.int64)
    decisions = np.zeros(n, dtype=np.int8)
    truncated = np.zeros(n, dtype=bool)
    local_cross = np.full((n, L), -1, dtype=np.int64)
    simultaneous = 0

    # Packed per-alive state; `alive` holds positions within this batch.
    alive = np.arange(n)
    if local_kind == "sprt":
        W = np.zeros((n, L))
    elif local_kind == "csprt":
        Wp = np.zeros((n, L))
        Wn = np.zeros((n, L))
    else:
        S = np.zeros((n, L))
    if fusion_kind == "sprt":
        F = np.zeros(n)
    else:
        Fp = np.zeros(n)
        Fn = np.zeros(n)
    eff_mean: Optional[np.ndarray] = None  # (A, L) fading means under H1

    k = 0
    chunk_index = 0
    while alive.size and k < cfg.max_horizon:
        obs_z, fus_z, fade = streams.draw_chunk_block(trial_indices[alive], chunk_index)
        if fade is not None:
            eff_mean = fade / cfg.fading.rate
        n_slots = min(STREAM_CHUNK, cfg.max_horizon - k)
        rows = np.arange(alive.size)
        for kl in range(n_slots):
            k += 1
            x = obs_z[rows, :, kl] * samp_std
            if under_h1:
                x = x + (eff_mean if eff_mean is not None else thetas)

            if local_kind == "sprt":
                W = W + thetas * x / noise_var - thetas**2 / (2.0 * noise_var)
                up = W >= gamma
                dn = W <= -gamma
                stat_up, stat_dn = W, W
            elif local_kind == "csprt":
                llr = thetas * x / noise_var - thetas**2 / (2.0 * noise_var)
                Wp = np.maximum(0.0, Wp + llr)
                Wn = np.minimum(0.0, Wn + llr)
                up = Wp >= gamma
                dn = Wn <= -gamma
                stat_up, stat_dn = Wp, Wn
            else:
                S = S + x
                mean = S / k
                th = np.clip(mean, glr.clamp_lo, glr.clamp_hi)
                w_null = k * (th - glr.theta0) * (mean - 0.5 * (th + glr.theta0)) / noise_var
                w_alt = k * (th - glr.theta1) * (mean - 0.5 * (th + glr.theta1)) / noise_var
                Wg = np.maximum(w_null, w_alt)
                kc = glr.cost * k
                e1 = glr_boundary(kc, glr.boundary)
                e2 = glr_boundary(3.0 * glr.delta * kc, glr.boundary)
                e3 = glr_boundary(2.0 * glr.delta * kc, glr.boundary)
                e4 = glr_boundary(glr.delta * kc, glr.boundary)
                firing = Wg >= e1
                pos_dir = th >= glr.theta_star
                up = firing & pos_dir
                dn = firing & ~pos_dir

            # first local crossing times
            crossed_now = up | dn
            lc = local_cross[alive]
            fresh = crossed_now & (lc < 0)
            if fresh.any():
                lc[fresh] = k
                local_cross[alive] = lc

            # quantized emissions
            if local_kind == "glr":
                lev = np.clip((Wg >= e2).astype(np.int64) + (Wg >= e3) + (Wg >= e4), 0, 3)
                em = np.where(up, up_levels[lev], 0.0) + np.where(dn, lo_levels[lev], 0.0)
            else:
                ju = np.clip(((stat_up - gamma) // width_up).astype(np.int64), 0, 3)
                jd = np.clip(((-stat_dn - gamma) // width_dn).astype(np.int64), 0, 3)
                # upper side takes precedence if a clamped pair has both out
                em = np.where(up, up_levels[ju], np.where(dn, lo_levels[jd], 0.0))

            y = em.sum(axis=1) + fusion_std * fus_z[rows, kl]
            s = scale * y

            if fusion_kind == "sprt":
                F = F + s
                hit1 = F >= beta
                hit0 = F <= -beta
            else:
                Fp = np.maximum(0.0, Fp + s + d1)
                Fn = np.minimum(0.0, Fn + s + d0)
                hit1 = Fp >= beta
                hit0 = Fn <= -beta

            newly = hit1 | hit0
            if newly.any():
                if fusion_kind == "csprt":
                    both = hit1 & hit0
                    if both.any():
                        simultaneous += int(both.sum())
                        pos_win = (Fp - beta) >= (-beta - Fn)
                        dec = np.where(both, np.where(pos_win, 1, -1),
                                       np.where(hit1, 1, -1)).astype(np.int8)
                    else:
                        dec = np.where(hit1, 1, -1).astype(np.int8)
                else:
                    dec = np.where(hit1, 1, -1).astype(np.int8)
                idx = alive[newly]
                stop_times[idx] = k
                decisions[idx] = dec[newly]
                keep = ~newly
                alive = alive[keep]
                rows = rows[keep]
                if local_kind == "sprt":
                    W = W[keep]
                elif local_kind == "csprt":
                    Wp = Wp[keep]
                    Wn = Wn[keep]
                else:
                    S = S[keep]
                if fusion_kind == "sprt":
                    F = F[keep]
                else:
                    Fp = Fp[keep]
                    Fn = Fn[keep]
                if eff_mean is not None:
                    eff_mean = eff_mean[keep]
                if not alive.size:
                    break
        chunk_index += 1

    if alive.size:
        truncated[alive] = True
        stop_times[alive] = cfg.max_horizon
        if fusion_kind == "sprt":
            decisions[alive] = np.where(F >= 0.0, 1, -1).astype(np.int8)
        else:
            decisions[alive] = np.where(Fp >= -Fn, 1, -1).astype(np.int8)

    return {
        "stop_times": stop_times,
        "decisions": decisions,
        "truncated": truncated,
        "local_crossing_times": local_cross,
        "simultaneous": simultaneous,
    }


def _worker(args) -> dict:
    cfg, master_seed, start, count = args
    return _run_batch(cfg, master_seed, np.arange(start, start + count, dtype=np.int64))


def run_trials(cfg: ScenarioConfig, n_trials: int, master_seed: int,
               workers: int = 1, start_trial: int = 0) -> TrialBatch:
    """Run ``n_trials`` independent trials; deterministic in the master seed.

    The worker count only affects wall-clock time: trial ``i`` is a pure
    function of ``(master_seed, start_trial + i)``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    spans = []
    pos = start_trial
    while pos < start_trial + n_trials:
        count = min(_MAX_BATCH, start_trial + n_trials - pos)
        spans.append((cfg, master_seed, pos, count))
        pos += count

    if workers > 1 and len(spans) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_worker, spans))
    else:
        parts = [_worker(s) for s in spans]

    return TrialBatch(
        truth=cfg.true_hypothesis,
        trial_indices=np.arange(start_trial, start_trial + n_trials, dtype=np.int64),
        stop_times=np.concatenate([p["stop_times"] for p in parts]),
        decisions=np.concatenate([p["decisions"] for p in parts]),
        truncated=np.concatenate([p["truncated"] for p in parts]),
        local_crossing_times=np.concatenate([p["local_crossing_times"] for p in parts]),
        simultaneous_crossings=sum(p["simultaneous"] for p in parts),
        master_seed=master_seed,
    )


def run_trial(cfg: ScenarioConfig, rng: TrialRandomness) -> TrialResult:
    """Run a single trial; identical to the same row of any batched run."""
    batch = run_trials(cfg, 1, rng.master_seed, start_trial=rng.trial_index)
    return batch.results()[0]


def estimate_metrics(results: Union[TrialBatch, Sequence[TrialResult]]) -> MonteCarloSummary:
    """Decision-delay and error-rate estimates over a set of trials.

    The delay average conditions on the true hypothesis and includes
    wrongly-decided trials; truncated trials contribute the horizon and are
    counted separately.
    """
    if isinstance(results, TrialBatch):
        stop_times = results.stop_times.astype(float)
        errors = int(np.sum(results.decisions != results.truth.sign))
        truncated = int(results.truncated.sum())
    else:
        results = list(results)
        if not results:
            raise ValueError("estimate_metrics requires at least one trial")
        stop_times = np.array([r.stop_time for r in results], dtype=float)
        errors = sum(r.wrong for r in results)
        truncated = sum(r.truncated for r in results)
    n = len(stop_times)
    edd = float(stop_times.mean())
    stderr = float(stop_times.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MonteCarloSummary(
        trials=n,
        edd_mean=edd,
        edd_stderr=stderr,
        pfa_hat=errors / n,
        pfa_ci95=wilson_interval(errors, n),
        truncated_count=truncated,
    )


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
