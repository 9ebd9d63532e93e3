"""Zone geometry: positions, witness layouts, zone configuration, and the
noise-free effective witness zone.

A witnessing zone is a disc of radius ``R`` monitored by fixed witnesses.
The default deployment places four witnesses on the corners of a square
(half-side 10 m) around the zone center; the six-witness variant uses a
regular hexagon at the same witness-to-center distance.  A point belongs
to the *noise-free effective zone* when at least ``k`` witnesses lie
within the acceptance distance of it using true geometric distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import canonical
from .channel import ChannelParams

__all__ = [
    "ConfigurationError",
    "Vector3",
    "ZoneConfig",
    "WitnessIdentity",
    "distance",
    "witness_layout",
    "noise_free_effective_zone",
]

SQUARE_HALF_SIDE_M = 10.0
HEX_CIRCUMRADIUS_M = 10.0 * math.sqrt(2.0)  # same center distance as square corners

DEFAULT_ZONE_RADIUS_M = 20.0
DEFAULT_D_MAX_M = 20.0
# Noisy acceptance distance; d_max plus a calibrated guard band (see
# simulation.calibrate, edge_admission target).
DEFAULT_ACCEPTANCE_DISTANCE_M = 21.425
DEFAULT_INTERVAL_S = 2.0
DEFAULT_CLAIM_PERIOD_S = 2.0
DEFAULT_RUN_S = 60.0
DEFAULT_QUORUM_K = 3


@dataclass(frozen=True)
class Vector3:
    """A point in meters; deployments are planar (z = 0) but the type is 3D."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError("coordinates must be finite")


canonical.register(
    "vector3",
    Vector3,
    (("x", canonical.F64), ("y", canonical.F64), ("z", canonical.F64)),
)


class ConfigurationError(ValueError):
    """Unsupported or inconsistent zone/scenario configuration."""


def distance(a: Vector3, b: Vector3) -> float:
    """Euclidean distance between two points, in meters."""
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def witness_layout(count: int) -> tuple[Vector3, ...]:
    """Default witness positions for a zone, ordered by angle from east.

    Four witnesses sit on square corners (+-10, +-10); six witnesses on a
    regular hexagon of circumradius 10*sqrt(2) starting at angle 0 and
    proceeding counterclockwise.
    """
    if count == 4:
        s = SQUARE_HALF_SIDE_M
        corners = [Vector3(s, s), Vector3(-s, s), Vector3(-s, -s), Vector3(s, -s)]
        return tuple(corners)
    if count == 6:
        r = HEX_CIRCUMRADIUS_M
        return tuple(
            Vector3(r * math.cos(math.radians(a)), r * math.sin(math.radians(a)))
            for a in range(0, 360, 60)
        )
    raise ConfigurationError(f"unsupported witness count {count} (expected 4 or 6)")


@dataclass(frozen=True)
class ZoneConfig:
    """Geometry, quorum, timing, and channel parameters of one zone."""

    zone_id: str
    radius: float = DEFAULT_ZONE_RADIUS_M
    witness_count: int = 4
    quorum_k: int = DEFAULT_QUORUM_K
    interval_seconds: float = DEFAULT_INTERVAL_S
    claim_period_seconds: float = DEFAULT_CLAIM_PERIOD_S
    run_seconds: float = DEFAULT_RUN_S
    witness_positions: tuple[Vector3, ...] = ()
    channel: ChannelParams = field(default_factory=ChannelParams)
    d_max: float = DEFAULT_D_MAX_M
    d_acc: float = DEFAULT_ACCEPTANCE_DISTANCE_M

    def __post_init__(self) -> None:
        if not self.zone_id:
            raise ConfigurationError("zone_id must be non-empty")
        if self.witness_count < 1:
            raise ConfigurationError("witness_count must be positive")
        if not 1 <= self.quorum_k <= self.witness_count:
            raise ConfigurationError(
                f"quorum_k={self.quorum_k} must be in [1, witness_count={self.witness_count}]"
            )
        if not self.witness_positions:
            object.__setattr__(self, "witness_positions", witness_layout(self.witness_count))
        if len(self.witness_positions) != self.witness_count:
            raise ConfigurationError(
                f"{len(self.witness_positions)} witness positions for witness_count={self.witness_count}"
            )
        if self.interval_seconds <= 0:
            raise ConfigurationError("interval_seconds must be positive")
        if self.claim_period_seconds <= 0:
            raise ConfigurationError("claim_period_seconds must be positive")
        if not self.d_max > 0:
            raise ConfigurationError("d_max must be positive")
        if self.d_acc < self.d_max:
            raise ConfigurationError("d_acc must be at least d_max")
        count = self.run_seconds / self.claim_period_seconds
        if abs(count - round(count)) > 1e-9 or round(count) < 1:
            raise ConfigurationError(
                "run_seconds must be an integer multiple of claim_period_seconds"
            )

    @property
    def claim_count(self) -> int:
        return round(self.run_seconds / self.claim_period_seconds)


@dataclass(frozen=True)
class WitnessIdentity:
    """Stable witness identity: id, verification key, and fixed position."""

    witness_id: str
    public_key: bytes
    position: Vector3


def noise_free_effective_zone(
    point: Vector3,
    layout: Sequence[Vector3],
    d_max: float,
    k: int,
) -> bool:
    """True iff at least ``k`` witnesses lie within ``d_max`` of ``point``.

    Uses true geometric distances: this is the theoretical boundary that a
    noiseless deployment would enforce, used as the heatmap overlay.
    """
    if k > len(layout):
        raise ConfigurationError(f"k={k} exceeds layout size {len(layout)}")
    within = sum(1 for w in layout if distance(point, w) <= d_max)
    return within >= k
