"""Built-in scenario builders for the reproduction jobs."""
from __future__ import annotations

import math
from dataclasses import replace

from . import golden
from .model import (Algorithm, DriftBias, FadingConfig, FusionChannelParams, GlrConfig,
                    Hypothesis, NodeParams, QuantizerConfig, ScenarioConfig)

_ALGOS = {a.value: a for a in Algorithm}

# Quantizer band half-width matching the reference tables: bands of width 1
# in statistic units (the strongest node traverses one band in two slots).
_TABLE_DELTA = 0.5


def _nodes() -> tuple[NodeParams, ...]:
    return tuple(NodeParams(post_change_mean=m, noise_std=1.0, channel_gain_db=g)
                 for m, g in zip(golden.NODE_MEANS, golden.NODE_GAINS_DB))


def _quantizer(algorithm: Algorithm) -> QuantizerConfig:
    if algorithm in (Algorithm.DUAL_SPRT, Algorithm.GLR_SPRT):
        return QuantizerConfig.binary(1.0)
    return QuantizerConfig(delta_up=_TABLE_DELTA, delta_down=_TABLE_DELTA)


def table1_scenario(algorithm: str | Algorithm, *,
                    truth: Hypothesis = Hypothesis.H1) -> ScenarioConfig:
    """Five-node known-SNR scenario with fusion noise variance 5."""
    algo = _ALGOS[algorithm] if isinstance(algorithm, str) else algorithm
    if algo.local_kind == "glr":
        raise ValueError("table 1 covers the known-SNR algorithms only")
    return ScenarioConfig(
        nodes=_nodes(),
        fusion=FusionChannelParams(noise_variance=5.0, design_mean=1.0),
        algorithm=algo,
        local_threshold=8.0,
        fusion_threshold=30.0,
        quantizer=_quantizer(algo),
        bias=DriftBias(),
        true_hypothesis=truth,
        max_horizon=10_000,
        scenario_id=f"table1-{algo.value}",
    ).validate()


def table4_scenario(gamma: float, beta: float, *,
                    truth: Hypothesis = Hypothesis.H1) -> ScenarioConfig:
    """Fixed-threshold scenario with fusion noise variance 1."""
    return ScenarioConfig(
        nodes=_nodes(),
        fusion=FusionChannelParams(noise_variance=1.0, design_mean=1.0),
        algorithm=Algorithm.SPRT_CSPRT,
        local_threshold=gamma,
        fusion_threshold=beta,
        quantizer=_quantizer(Algorithm.SPRT_CSPRT),
        bias=DriftBias(),
        true_hypothesis=truth,
        max_horizon=10_000,
        scenario_id=f"table4-g{gamma:g}-b{beta:g}",
    ).validate()


def table2_scenario(algorithm: str | Algorithm, *,
                    truth: Hypothesis = Hypothesis.H1) -> ScenarioConfig:
    """Unknown-SNR scenario: fusion noise variance 1, composite local tests.

    The composite test's design alternative is the weakest node mean, the
    estimate clamp spans the node means with headroom, and the band
    parameter is 0.25.
    """
    algo = _ALGOS[algorithm] if isinstance(algorithm, str) else algorithm
    glr = None
    if algo.local_kind == "glr":
        glr = GlrConfig(theta1=0.5, theta0=0.0, cost=0.1,
                        clamp_lo=0.0, clamp_hi=2.0, delta=0.25)
    return ScenarioConfig(
        nodes=_nodes(),
        fusion=FusionChannelParams(noise_variance=1.0, design_mean=1.0),
        algorithm=algo,
        local_threshold=1.0,
        fusion_threshold=10.0,
        quantizer=_quantizer(algo),
        bias=DriftBias(),
        glr=glr,
        true_hypothesis=truth,
        max_horizon=10_000,
        scenario_id=f"table2-{algo.value}",
    ).validate()


def table3_scenario(algorithm: str | Algorithm, *,
                    truth: Hypothesis = Hypothesis.H1) -> ScenarioConfig:
    """Slow-fading scenario: per-trial exponential means, variance-1 fusion.

    Detectors cannot know the realized mean; threshold-based locals assume
    the fading median, and the composite test's design alternative is the
    median as well.
    """
    algo = _ALGOS[algorithm] if isinstance(algorithm, str) else algorithm
    median = math.log(2.0)
    nodes = tuple(NodeParams(post_change_mean=median, noise_std=1.0)
                  for _ in golden.NODE_MEANS)
    glr = None
    if algo.local_kind == "glr":
        glr = GlrConfig(theta1=median, theta0=0.0, cost=0.1,
                        clamp_lo=0.0, clamp_hi=4.0, delta=0.25)
    return ScenarioConfig(
        nodes=nodes,
        fusion=FusionChannelParams(noise_variance=1.0, design_mean=1.0),
        algorithm=algo,
        local_threshold=1.0,
        fusion_threshold=10.0,
        quantizer=_quantizer(algo),
        bias=DriftBias(),
        glr=glr,
        fading=FadingConfig(rate=1.0, per_trial=True),
        true_hypothesis=truth,
        max_horizon=10_000,
        scenario_id=f"table3-{algo.value}",
    ).validate()


def with_truth(cfg: ScenarioConfig, truth: Hypothesis) -> ScenarioConfig:
    return replace(cfg, true_hypothesis=truth)
