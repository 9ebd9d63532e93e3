"""Log-distance path-loss channel and the distance-bounding ranging model.

Path loss follows the classic log-distance form with log-normal shadowing:

    PL(d) = PL0 + 10 * gamma * log10(d / d0) + X_sigma,   X_sigma ~ N(0, sigma^2)

Ranging models a multi-round distance-bounding exchange as a single
aggregate estimate: the per-round timing jitter is folded into one
zero-mean Gaussian term (``mp_sigma``) plus a distance-proportional error
term (``dist_err_frac``).  Distance bounding yields an *upper* bound, so
an adversarial prover can only inflate the estimate (extra processing
delay), never deflate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import canonical

__all__ = [
    "ChannelParams",
    "RangingResult",
    "deterministic_path_loss",
    "sample_path_loss",
    "ranging_sigma",
    "range_estimate",
]

# Reference path loss: 40 dB at 1 m.  Only path-loss *differences* feed the
# RF similarity score, so the absolute anchor is arbitrary but fixed.
DEFAULT_PL0_DB = 40.0
DEFAULT_REF_DISTANCE_M = 1.0
DEFAULT_PATH_LOSS_EXPONENT = 2.0  # line of sight
DEFAULT_SHADOW_SIGMA_DB = 3.0
DEFAULT_RANGING_ROUNDS = 32
# Aggregate ranging noise, calibrated together with ZoneConfig.d_acc (see
# simulation.calibrate) so that the edge-position admission probability
# lands at ~0.34 while out-of-zone positions are rejected essentially
# always.
DEFAULT_MULTIPATH_SIGMA_M = 0.25
DEFAULT_DIST_ERR_FRACTION = 0.01


@dataclass(frozen=True)
class ChannelParams:
    """Physical-layer parameters of one witnessing zone."""

    pl0: float = DEFAULT_PL0_DB
    d0: float = DEFAULT_REF_DISTANCE_M
    gamma: float = DEFAULT_PATH_LOSS_EXPONENT
    shadow_sigma: float = DEFAULT_SHADOW_SIGMA_DB
    rounds: int = DEFAULT_RANGING_ROUNDS
    mp_sigma: float = DEFAULT_MULTIPATH_SIGMA_M
    dist_err_frac: float = DEFAULT_DIST_ERR_FRACTION

    def __post_init__(self) -> None:
        if self.d0 <= 0:
            raise ValueError("d0 must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.shadow_sigma < 0:
            raise ValueError("shadow_sigma must be non-negative")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.mp_sigma < 0:
            raise ValueError("mp_sigma must be non-negative")
        if not 0 <= self.dist_err_frac < 1:
            raise ValueError("dist_err_frac must be in [0, 1)")


@dataclass(frozen=True)
class RangingResult:
    """Aggregate outcome of one distance-bounding exchange.

    ``estimate`` is the derived distance bound: the value the witness
    treats as "the prover is no closer than physics allows and no farther
    than this, up to measurement noise".
    """

    witness_id: str
    true_distance: float
    estimate: float
    rounds_used: int

    def __post_init__(self) -> None:
        if self.estimate < 0:
            raise ValueError("estimate must be non-negative")


canonical.register(
    "ranging_result",
    RangingResult,
    (
        ("witness_id", canonical.STR),
        ("true_distance", canonical.F64),
        ("estimate", canonical.F64),
        ("rounds_used", canonical.I64),
    ),
)


def deterministic_path_loss(d: float, p: ChannelParams) -> float:
    """Mean path loss in dB at distance ``d`` (shadowing term zero).

    Distances below the reference distance clamp to ``d0`` to keep the
    log term non-negative; no simulated geometry gets that close.
    """
    d = max(d, p.d0)
    return p.pl0 + 10.0 * p.gamma * math.log10(d / p.d0)


def sample_path_loss(d: float, p: ChannelParams, rng: np.random.Generator) -> float:
    """One stochastic path-loss sample: mean loss plus a shadowing draw."""
    return deterministic_path_loss(d, p) + rng.normal(0.0, p.shadow_sigma)


def ranging_sigma(true_d: float, p: ChannelParams) -> float:
    """Total ranging noise standard deviation at a given true distance."""
    return math.sqrt(p.mp_sigma**2 + (p.dist_err_frac * true_d) ** 2)


def range_estimate(
    true_d: float,
    p: ChannelParams,
    rng: np.random.Generator,
    witness_id: str = "",
    extra_delay_m: float = 0.0,
) -> RangingResult:
    """Run one aggregate distance-bounding exchange.

    ``extra_delay_m`` models adversarial prover processing delay expressed
    in meters of apparent extra distance; it must be non-negative because
    a prover cannot respond faster than immediately.
    """
    if true_d < 0:
        raise ValueError("true distance must be non-negative")
    if extra_delay_m < 0:
        raise ValueError("a prover can only add delay, not remove it")
    e_dist = rng.normal(0.0, p.dist_err_frac * true_d)
    e_mp = rng.normal(0.0, p.mp_sigma)
    estimate = max(0.0, true_d + extra_delay_m + e_dist + e_mp)
    return RangingResult(
        witness_id=witness_id,
        true_distance=true_d,
        estimate=estimate,
        rounds_used=p.rounds,
    )
