"""Per-slot multiple-access aggregation and the fusion-center tests."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .model import DriftBias, FusionChannelParams, Hypothesis, fusion_llr_increment


@dataclass(frozen=True)
class SlotAggregate:
    """One slot's received value: sum of emissions plus receiver noise."""

    y: float
    contributors: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class FusionState:
    """Fusion statistics: a plain sum and a clamped pair, stepped exclusively.

    ``pos_sum`` stays >= 0 and ``neg_sum`` stays <= 0; the decision is set
    exactly once, at the first slot a threshold is met.
    """

    sprt_sum: float = 0.0
    pos_sum: float = 0.0
    neg_sum: float = 0.0
    time: int = 0
    decision: Optional[Hypothesis] = None
    stop_time: Optional[int] = None

    @property
    def stopped(self) -> bool:
        return self.decision is not None


def mac_aggregate(emissions: Sequence[float], fusion: FusionChannelParams, rng) -> SlotAggregate:
    """Physical-layer fusion: arithmetic sum of all emissions plus noise."""
    noise = fusion.noise_std * rng.standard_normal()
    y = float(sum(emissions)) + noise
    contributors = tuple((i, float(e)) for i, e in enumerate(emissions) if e != 0.0)
    return SlotAggregate(y=y, contributors=contributors)


def fusion_sprt_step(state: FusionState, y: float, fusion: FusionChannelParams,
                     beta: float) -> FusionState:
    """Plain SPRT at the fusion center with symmetric thresholds +-beta."""
    if state.stopped:
        raise RuntimeError("fusion_sprt_step called after a decision was made")
    total = state.sprt_sum + fusion_llr_increment(y, fusion)
    time = state.time + 1
    decision, stop_time = None, None
    if total >= beta:
        decision, stop_time = Hypothesis.H1, time
    elif total <= -beta:
        decision, stop_time = Hypothesis.H0, time
    return FusionState(sprt_sum=total, pos_sum=state.pos_sum, neg_sum=state.neg_sum,
                       time=time, decision=decision, stop_time=stop_time)


def resolve_simultaneous(pos_overshoot: float, neg_overshoot: float) -> Hypothesis:
    """Both thresholds met in one slot: larger overshoot wins, ties go to H1."""
    return Hypothesis.H1 if pos_overshoot >= neg_overshoot else Hypothesis.H0


def fusion_csprt_step(state: FusionState, y: float, fusion: FusionChannelParams,
                      beta: float, bias: DriftBias = DriftBias()) -> FusionState:
    """Clamped pair at the fusion center with biases folded into each side."""
    if state.stopped:
        raise RuntimeError("fusion_csprt_step called after a decision was made")
    s = fusion_llr_increment(y, fusion)
    pos = max(0.0, state.pos_sum + s + bias.d1)
    neg = min(0.0, state.neg_sum + s + bias.d0)
    time = state.time + 1
    decision, stop_time = None, None
    hit_pos = pos >= beta
    hit_neg = neg <= -beta
    if hit_pos and hit_neg:
        decision = resolve_simultaneous(pos - beta, -beta - neg)
        stop_time = time
    elif hit_pos:
        decision, stop_time = Hypothesis.H1, time
    elif hit_neg:
        decision, stop_time = Hypothesis.H0, time
    return FusionState(sprt_sum=state.sprt_sum, pos_sum=pos, neg_sum=neg,
                       time=time, decision=decision, stop_time=stop_time)
