"""Scenario description, observation generation and Gaussian LLR arithmetic.

All detectors in this package work on conditionally Gaussian observations:
under the null the sample at node ``l`` is N(0, sigma_l^2), under the
alternative it is N(theta_l, sigma_l^2).  The fusion center observes the
sum of the per-slot node emissions plus zero-mean Gaussian receiver noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml


class ConfigError(ValueError):
    """Invalid scenario configuration; carries the offending field path."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class Hypothesis(Enum):
    H0 = "H0"
    H1 = "H1"

    @property
    def sign(self) -> int:
        return 1 if self is Hypothesis.H1 else -1


class DriftConvention(Enum):
    """How the fusion statistic increment is formed from the slot value y.

    UNNORMALIZED uses 2*mu*y, the form the reference result tables were
    generated with; EXACT_LLR divides by the fusion noise variance, which is
    the true log-likelihood ratio of N(+mu, s^2) against N(-mu, s^2).
    """

    UNNORMALIZED = "unnormalized"
    EXACT_LLR = "exact-llr"


class Algorithm(Enum):
    DUAL_SPRT = "dual-sprt"
    SPRT_CSPRT = "sprt-csprt"
    DUAL_CSPRT = "dual-csprt"
    GLR_SPRT = "glr-sprt"
    GLR_CSPRT = "glr-csprt"

    @property
    def local_kind(self) -> str:
        if self in (Algorithm.DUAL_SPRT, Algorithm.SPRT_CSPRT):
            return "sprt"
        if self is Algorithm.DUAL_CSPRT:
            return "csprt"
        return "glr"

    @property
    def fusion_kind(self) -> str:
        if self in (Algorithm.DUAL_SPRT, Algorithm.GLR_SPRT):
            return "sprt"
        return "csprt"


@dataclass(frozen=True)
class NodeParams:
    """One sensing node's signal statistics.

    ``post_change_mean`` is theta_l, the mean of the observation under H1 in
    LLR units; ``channel_gain_db`` is informational (the mean is derived from
    it offline).  ``sampling_noise_std`` overrides the noise used when
    *drawing* observations without changing the noise the detector assumes;
    it exists for deterministic diagnostics and defaults to ``noise_std``.
    """

    post_change_mean: float
    noise_std: float = 1.0
    channel_gain_db: Optional[float] = None
    sampling_noise_std: Optional[float] = None

    @property
    def noise_var(self) -> float:
        return self.noise_std * self.noise_std

    @property
    def effective_sampling_std(self) -> float:
        return self.noise_std if self.sampling_noise_std is None else self.sampling_noise_std

    def llr_drift(self) -> float:
        """Mean LLR increment under H1 (the KL divergence theta^2 / 2 sigma^2)."""
        return self.post_change_mean**2 / (2.0 * self.noise_var)

    def llr_std(self) -> float:
        """Standard deviation of the LLR increment (theta / sigma)."""
        return self.post_change_mean / self.noise_std


@dataclass(frozen=True)
class FusionChannelParams:
    """Receiver noise and design means of the fusion test."""

    noise_variance: float
    design_mean: float = 1.0
    drift_convention: DriftConvention = DriftConvention.UNNORMALIZED

    @property
    def noise_std(self) -> float:
        return math.sqrt(self.noise_variance)

    def increment_scale(self) -> float:
        """Multiplier applied to y to form the fusion statistic increment."""
        scale = 2.0 * self.design_mean
        if self.drift_convention is DriftConvention.EXACT_LLR:
            scale /= self.noise_variance
        return scale


@dataclass(frozen=True)
class QuantizerConfig:
    """Four-level output quantizer used once a local statistic crosses.

    ``delta_up``/``delta_down`` are the half-widths of the quantizer bands
    (each band spans 2*delta).  ``None`` means drift-matched: node ``l`` uses
    half its own mean LLR drift, which makes every band one expected slot of
    statistic growth wide.
    """

    upper_levels: tuple[float, float, float, float] = (1.0, 2.0, 3.0, 4.0)
    lower_levels: tuple[float, float, float, float] = (-1.0, -2.0, -3.0, -4.0)
    delta_up: Optional[float] = None
    delta_down: Optional[float] = None

    @classmethod
    def binary(cls, level: float = 1.0) -> "QuantizerConfig":
        """Flat quantizer emitting a single constant per side (DualSPRT style)."""
        return cls(upper_levels=(level,) * 4, lower_levels=(-level,) * 4,
                   delta_up=1.0, delta_down=1.0)

    def resolve_delta_up(self, node: NodeParams) -> float:
        return self.delta_up if self.delta_up is not None else 0.5 * node.llr_drift()

    def resolve_delta_down(self, node: NodeParams) -> float:
        return self.delta_down if self.delta_down is not None else 0.5 * node.llr_drift()


@dataclass(frozen=True)
class GlrConfig:
    """Composite-test configuration for nodes with unknown post-change mean."""

    theta1: float
    theta0: float = 0.0
    cost: float = 0.1
    clamp_lo: float = 0.0
    clamp_hi: float = 2.0
    delta: float = 0.25
    boundary: str = "log-inverse"

    @property
    def theta_star(self) -> float:
        """Decision split point: equal KL distance from theta0 and theta1."""
        return 0.5 * (self.theta0 + self.theta1)


@dataclass(frozen=True)
class FadingConfig:
    """Slow fading: the post-change mean is exponential, drawn once per trial."""

    rate: float = 1.0
    per_trial: bool = True

    @property
    def median(self) -> float:
        return math.log(2.0) / self.rate


@dataclass(frozen=True)
class DriftBias:
    """Constants added inside the clamped fusion recursions (D1, D0)."""

    d1: float = 0.0
    d0: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    nodes: tuple[NodeParams, ...]
    fusion: FusionChannelParams
    algorithm: Algorithm
    local_threshold: float
    fusion_threshold: float
    quantizer: QuantizerConfig = field(default_factory=QuantizerConfig)
    bias: DriftBias = field(default_factory=DriftBias)
    glr: Optional[GlrConfig] = None
    fading: Optional[FadingConfig] = None
    true_hypothesis: Hypothesis = Hypothesis.H1
    max_horizon: int = 10_000
    scenario_id: str = "scenario"

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def with_thresholds(self, local: Optional[float] = None,
                        fusion: Optional[float] = None,
                        glr_cost: Optional[float] = None) -> "ScenarioConfig":
        """Copy with replaced calibration knobs."""
        cfg = self
        if local is not None:
            cfg = replace(cfg, local_threshold=local)
        if fusion is not None:
            cfg = replace(cfg, fusion_threshold=fusion)
        if glr_cost is not None:
            if cfg.glr is None:
                raise ConfigError("glr", "cost supplied but scenario has no GLR config")
            cfg = replace(cfg, glr=replace(cfg.glr, cost=glr_cost))
        return cfg

    def validate(self) -> "ScenarioConfig":
        if not self.nodes:
            raise ConfigError("nodes", "at least one node is required")
        for i, node in enumerate(self.nodes):
            if node.noise_std <= 0:
                raise ConfigError(f"nodes[{i}].noise_std", "must be > 0")
            if node.sampling_noise_std is not None and node.sampling_noise_std < 0:
                raise ConfigError(f"nodes[{i}].sampling_noise_std", "must be >= 0")
        if self.fusion.noise_variance <= 0:
            raise ConfigError("fusion.noise_variance", "must be > 0")
        if self.fusion.design_mean <= 0:
            raise ConfigError("fusion.design_mean", "must be > 0")
        if self.local_threshold <= 0:
            raise ConfigError("local_threshold", "must be > 0")
        if self.fusion_threshold <= 0:
            raise ConfigError("fusion_threshold", "must be > 0")
        if self.max_horizon < 1:
            raise ConfigError("max_horizon", "must be >= 1")
        q = self.quantizer
        if list(q.upper_levels) != sorted(q.upper_levels):
            raise ConfigError("quantizer.upper_levels", "must be ascending")
        if list(q.lower_levels) != sorted(q.lower_levels, reverse=True):
            raise ConfigError("quantizer.lower_levels", "must be descending")
        if q.delta_up is not None and q.delta_up <= 0:
            raise ConfigError("quantizer.delta_up", "must be > 0")
        if q.delta_down is not None and q.delta_down <= 0:
            raise ConfigError("quantizer.delta_down", "must be > 0")
        if self.algorithm.local_kind == "glr":
            if self.glr is None:
                raise ConfigError("glr", "required for GLR algorithms")
            g = self.glr
            if g.theta1 <= g.theta0:
                raise ConfigError("glr.theta1", "must exceed glr.theta0")
            if g.cost <= 0:
                raise ConfigError("glr.cost", "must be > 0")
            if g.clamp_lo > g.clamp_hi:
                raise ConfigError("glr.clamp_lo", "must not exceed glr.clamp_hi")
            if not (0.0 <= 3.0 * g.delta <= 1.0):
                raise ConfigError("glr.delta", "3*delta must lie in [0, 1]")
        if self.fading is not None and self.fading.rate <= 0:
            raise ConfigError("fading.rate", "must be > 0")
        return self


def gaussian_llr(x: float, theta: float, sigma_sq: float) -> float:
    """Log-likelihood ratio of N(theta, sigma_sq) against N(0, sigma_sq)."""
    if sigma_sq <= 0:
        raise ConfigError("sigma_sq", "must be > 0")
    return theta * x / sigma_sq - theta * theta / (2.0 * sigma_sq)


def fusion_llr_increment(y: float, fusion: FusionChannelParams) -> float:
    """Fusion statistic increment for one slot value y."""
    return fusion.increment_scale() * y


def sample_observation(hyp: Hypothesis, node: NodeParams, effective_mean: Optional[float],
                       rng) -> float:
    """Draw one observation for a node under the given hypothesis.

    ``effective_mean`` overrides the node's configured post-change mean
    (used for per-trial fading draws); it is ignored under H0.
    """
    mean = 0.0
    if hyp is Hypothesis.H1:
        mean = node.post_change_mean if effective_mean is None else effective_mean
    return mean + node.effective_sampling_std * rng.standard_normal()


_ALGORITHMS = {a.value: a for a in Algorithm}
_CONVENTIONS = {c.value: c for c in DriftConvention}


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    return table[key]


def _levels(value, path: str) -> tuple[float, float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ConfigError(path, "expected a list of 4 levels")
    return tuple(float(v) for v in value)


def scenario_from_dict(data: dict, scenario_id: str = "scenario") -> ScenarioConfig:
    """Build and validate a :class:`ScenarioConfig` from parsed config data."""
    algo_name = str(_require(data, "algorithm", ""))
    if algo_name not in _ALGORITHMS:
        raise ConfigError("algorithm", f"unknown algorithm {algo_name!r}; "
                                       f"expected one of {sorted(_ALGORITHMS)}")
    algorithm = _ALGORITHMS[algo_name]

    raw_nodes = _require(data, "nodes", "")
    if not isinstance(raw_nodes, list):
        raise ConfigError("nodes", "expected an array of node tables")
    nodes = []
    for i, n in enumerate(raw_nodes):
        nodes.append(NodeParams(
            post_change_mean=float(_require(n, "post_change_mean", f"nodes[{i}]")),
            noise_std=float(n.get("noise_std", 1.0)),
            channel_gain_db=(float(n["channel_gain_db"]) if "channel_gain_db" in n else None),
            sampling_noise_std=(float(n["sampling_noise_std"])
                                if "sampling_noise_std" in n else None),
        ))

    f = _require(data, "fusion", "")
    conv_name = str(f.get("drift_convention", DriftConvention.UNNORMALIZED.value))
    if conv_name not in _CONVENTIONS:
        raise ConfigError("fusion.drift_convention",
                          f"unknown convention {conv_name!r}; expected one of {sorted(_CONVENTIONS)}")
    fusion = FusionChannelParams(
        noise_variance=float(_require(f, "noise_variance", "fusion")),
        design_mean=float(f.get("design_mean", 1.0)),
        drift_convention=_CONVENTIONS[conv_name],
    )

    q = data.get("quantizer", {})
    quantizer = QuantizerConfig(
        upper_levels=_levels(q.get("upper_levels", (1.0, 2.0, 3.0, 4.0)), "quantizer.upper_levels"),
        lower_levels=_levels(q.get("lower_levels", (-1.0, -2.0, -3.0, -4.0)), "quantizer.lower_levels"),
        delta_up=(float(q["delta_up"]) if "delta_up" in q else None),
        delta_down=(float(q["delta_down"]) if "delta_down" in q else None),
    )

    b = data.get("bias", {})
    bias = DriftBias(d1=float(b.get("d1", 0.0)), d0=float(b.get("d0", 0.0)))

    glr = None
    if "glr" in data:
        g = data["glr"]
        glr = GlrConfig(
            theta1=float(_require(g, "theta1", "glr")),
            theta0=float(g.get("theta0", 0.0)),
            cost=float(g.get("cost", 0.1)),
            clamp_lo=float(g.get("clamp_lo", 0.0)),
            clamp_hi=float(g.get("clamp_hi", 2.0)),
            delta=float(g.get("delta", 0.25)),
            boundary=str(g.get("boundary", "log-inverse")),
        )

    fading = None
    if "fading" in data:
        fd = data["fading"]
        fading = FadingConfig(rate=float(fd.get("rate", 1.0)),
                              per_trial=bool(fd.get("per_trial", True)))

    hyp_name = str(data.get("true_hypothesis", "H1"))
    if hyp_name not in ("H0", "H1"):
        raise ConfigError("true_hypothesis", f"expected 'H0' or 'H1', got {hyp_name!r}")

    cfg = ScenarioConfig(
        nodes=tuple(nodes),
        fusion=fusion,
        algorithm=algorithm,
        local_threshold=float(_require(data, "local_threshold", "")),
        fusion_threshold=float(_require(data, "fusion_threshold", "")),
        quantizer=quantizer,
        bias=bias,
        glr=glr,
        fading=fading,
        true_hypothesis=Hypothesis[hyp_name],
        max_horizon=int(data.get("max_horizon", 10_000)),
        scenario_id=str(data.get("scenario_id", scenario_id)),
    )
    return cfg.validate()


def load_scenario(path) -> ScenarioConfig:
    """Load a scenario from a TOML file."""
    p = Path(path)
    try:
        with p.open("rb") as fh:
            data = _toml.load(fh)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(str(p), f"TOML parse error: {exc}") from None
    return scenario_from_dict(data, scenario_id=p.stem)
