"""Discrete-event simulator, built-in scenarios, Monte Carlo aggregation,
admission heatmaps, and calibration of the channel-dependent constants.

One run is strictly single-threaded: a time-ordered event queue with
integer-microsecond timestamps drives one claim per block interval, each
resolved by a quorum round.  Parallelism exists only across Monte Carlo
iterations; every iteration owns its random stream (master seed plus
iteration index) and results merge in iteration order, so summaries are
bit-identical for any worker count.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from statistics import NormalDist
from typing import Any, Callable, Sequence

import numpy as np

from .channel import ranging_sigma
from .configtext import ConfigSyntaxError, meters, parse_config_text, seconds
from .evidence import Claim, claim_payload, generate_keypair, make_claim, verify_chain
from .evidence import Block
from .geometry import (
    ConfigurationError,
    Vector3,
    WitnessIdentity,
    ZoneConfig,
    distance,
    noise_free_effective_zone,
)
from .policy import Policy, builtin_policy, builtin_policy_ids, load_policy
from .sensing import DEFAULT_DETECTION_PROB, RF_SIMILARITY_SPAN_DB, Scene
from .witness import (
    Environment,
    IntervalOutcome,
    WitnessBehavior,
    WitnessNode,
    build_registry,
    quorum_round,
)

__all__ = [
    "SCENARIO_NAMES",
    "BASELINE_PROVER_POSITION",
    "EDGE_PROVER_POSITION",
    "FRAUD_TRUE_POSITION",
    "EventQueue",
    "ScenarioConfig",
    "RunResult",
    "Summary",
    "build_scenario",
    "parse_scenario_text",
    "load_scenario",
    "run_scenario",
    "monte_carlo",
    "GridSpec",
    "HeatmapGrid",
    "k_of_n_probability",
    "witness_pass_probability",
    "admission_probability_analytic",
    "admission_probability_mc",
    "heatmap",
    "parse_heatmap_csv",
    "CalibrationError",
    "CalibrationResult",
    "edge_admission_closed_form",
    "visual_admission_closed_form",
    "calibrate",
]

_NORMAL = NormalDist()
_SEED_MASK = (1 << 64) - 1

SCENARIO_NAMES = (
    "baseline_4w",
    "baseline_6w",
    "distance_fraud",
    "edge_position",
    "visual_valid",
    "visual_invalid",
)

BASELINE_PROVER_POSITION = Vector3(5.0, 5.0)
EDGE_PROVER_POSITION = Vector3(9.28, 0.0)
FRAUD_TRUE_POSITION = Vector3(13.0, 13.0)
VISUAL_QUERY = "red car"


# -- event queue ---------------------------------------------------------------

class EventQueue:
    """Time-ordered event queue with integer-microsecond timestamps.

    Ties break by scheduling order, so runs are deterministic.  Claims are
    the only event source in the built-in scenarios, but the queue is
    general.
    """

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Any]] = []
        self._seq = 0
        self.now_us = 0

    def schedule(self, time_us: int, payload: Any) -> None:
        if time_us < self.now_us:
            raise ValueError("cannot schedule an event in the past")
        heapq.heappush(self._heap, (int(time_us), self._seq, payload))
        self._seq += 1

    def __len__(self) -> int:
        return len(self._heap)

    def pop(self) -> tuple[int, Any]:
        time_us, _, payload = heapq.heappop(self._heap)
        self.now_us = time_us
        return time_us, payload

    def run(self, handler: Callable[[int, Any], None]) -> None:
        while self._heap:
            time_us, payload = self.pop()
            handler(time_us, payload)


# -- scenario configuration ------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one simulation run needs, including its master seed."""

    name: str
    zone: ZoneConfig
    prover_true_pos: Vector3
    prover_claimed_pos: Vector3
    prover_honesty: bool
    policy: Policy
    scene: Scene
    witness_behaviors: tuple[WitnessBehavior, ...]
    seed: int = 0
    p_det: float = DEFAULT_DETECTION_PROB
    prover_extra_delay_m: float = 0.0
    asserted_objects: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.witness_behaviors) != self.zone.witness_count:
            raise ConfigurationError(
                f"{len(self.witness_behaviors)} behaviors for "
                f"{self.zone.witness_count} witnesses"
            )
        if self.policy.zone_id != self.zone.zone_id:
            raise ConfigurationError(
                f"policy zone {self.policy.zone_id!r} != zone {self.zone.zone_id!r}"
            )
        if self.policy.quorum_k != self.zone.quorum_k:
            raise ConfigurationError("policy quorum k differs from zone quorum k")
        if self.policy.quorum_n != self.zone.witness_count:
            raise ConfigurationError("policy quorum n differs from zone witness count")
        if not 0.0 <= self.p_det <= 1.0:
            raise ConfigurationError("p_det must be in [0, 1]")


@dataclass(frozen=True)
class RunResult:
    """Per-run claim outcomes plus the finalized block chain."""

    outcomes: tuple[IntervalOutcome, ...]
    admitted_count: int
    chain: tuple[Block, ...]

    @property
    def claim_count(self) -> int:
        return len(self.outcomes)

    @property
    def evidence_objects(self):
        return tuple(o.evidence for o in self.outcomes if o.evidence is not None)


@dataclass(frozen=True)
class Summary:
    """Monte Carlo aggregate metrics; precision/recall are None exactly
    when their denominators are zero."""

    success_rate_mean: float
    success_rate_std: float
    precision: float | None
    recall: float | None
    admitted_mean: float
    iterations: int
    claims_per_run: int

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "success_rate_mean": self.success_rate_mean,
            "success_rate_std": self.success_rate_std,
            "precision": self.precision,
            "recall": self.recall,
            "admitted_mean": self.admitted_mean,
            "iterations": self.iterations,
            "claims_per_run": self.claims_per_run,
        }


def _with_quorum(policy: Policy, zone: ZoneConfig) -> Policy:
    if policy.quorum_n == zone.witness_count and policy.quorum_k == zone.quorum_k:
        return policy
    return replace(policy, quorum_k=zone.quorum_k, quorum_n=zone.witness_count)


def build_scenario(name: str, seed: int = 0) -> ScenarioConfig:
    """One of the six built-in scenario configurations."""
    if name not in SCENARIO_NAMES:
        raise ConfigurationError(
            f"unknown scenario {name!r} (expected one of {', '.join(SCENARIO_NAMES)})"
        )
    witness_count = 6 if name == "baseline_6w" else 4
    zone = ZoneConfig("Z-01", witness_count=witness_count)
    honest = tuple([WitnessBehavior.HONEST] * witness_count)

    if name in ("baseline_4w", "baseline_6w"):
        return ScenarioConfig(
            name=name,
            zone=zone,
            prover_true_pos=BASELINE_PROVER_POSITION,
            prover_claimed_pos=BASELINE_PROVER_POSITION,
            prover_honesty=True,
            policy=_with_quorum(builtin_policy("supply_chain_v1"), zone),
            scene=Scene(),
            witness_behaviors=honest,
            seed=seed,
        )
    if name == "distance_fraud":
        return ScenarioConfig(
            name=name,
            zone=zone,
            prover_true_pos=FRAUD_TRUE_POSITION,
            prover_claimed_pos=BASELINE_PROVER_POSITION,
            prover_honesty=False,
            policy=builtin_policy("supply_chain_v1"),
            scene=Scene(),
            witness_behaviors=honest,
            seed=seed,
        )
    if name == "edge_position":
        return ScenarioConfig(
            name=name,
            zone=zone,
            prover_true_pos=EDGE_PROVER_POSITION,
            prover_claimed_pos=EDGE_PROVER_POSITION,
            prover_honesty=True,
            policy=builtin_policy("supply_chain_v1"),
            scene=Scene(),
            witness_behaviors=honest,
            seed=seed,
        )
    # visual scenarios: the claim asserts the query object; only the valid
    # scene actually contains it
    scene = Scene.of(VISUAL_QUERY) if name == "visual_valid" else Scene()
    return ScenarioConfig(
        name=name,
        zone=zone,
        prover_true_pos=BASELINE_PROVER_POSITION,
        prover_claimed_pos=BASELINE_PROVER_POSITION,
        prover_honesty=(name == "visual_valid"),
        policy=builtin_policy("visual_v1"),
        scene=scene,
        witness_behaviors=honest,
        seed=seed,
        asserted_objects=(VISUAL_QUERY,),
    )


# -- scenario files ----------------------------------------------------------------

_SCENARIO_KEYS = {
    "scenario", "seed", "zone", "prover", "witnesses", "scene", "policy",
    "policy_file", "p_det",
}
_ZONE_KEYS = {
    "zone_id", "radius", "witness_count", "quorum_k", "interval",
    "claim_period", "run", "d_max", "d_acc", "channel",
}
_CHANNEL_KEYS = {"pl0", "d0", "gamma", "shadow_sigma", "rounds", "mp_sigma", "dist_err_frac"}
_PROVER_KEYS = {"true_position", "claimed_position", "honest", "asserts", "extra_delay_m"}


def _check_keys(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {sorted(unknown)}")


def _position(block: Any, where: str) -> Vector3:
    if not isinstance(block, dict):
        raise ConfigurationError(f"{where} must be a mapping with x/y/z")
    _check_keys(block, {"x", "y", "z"}, where)
    try:
        return Vector3(
            float(block.get("x", 0.0)), float(block.get("y", 0.0)), float(block.get("z", 0.0))
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def parse_scenario_text(text: str) -> ScenarioConfig:
    """Parse a custom scenario document (same syntax family as policies)."""
    try:
        doc = parse_config_text(text)
    except ConfigSyntaxError as exc:
        raise ConfigurationError(str(exc)) from exc
    _check_keys(doc, _SCENARIO_KEYS, "scenario")
    if "prover" not in doc:
        raise ConfigurationError("scenario requires a prover block")

    try:
        zone = _parse_zone(doc.get("zone", {}))

        prover = doc["prover"]
        _check_keys(prover, _PROVER_KEYS, "prover")
        if "true_position" not in prover:
            raise ConfigurationError("prover requires true_position")
        true_pos = _position(prover["true_position"], "prover.true_position")
        claimed = (
            _position(prover["claimed_position"], "prover.claimed_position")
            if "claimed_position" in prover
            else true_pos
        )
        honest = prover.get("honest", True)
        if not isinstance(honest, bool):
            raise ConfigurationError("prover.honest must be a boolean")
        asserts = prover.get("asserts", [])
        if not isinstance(asserts, list):
            raise ConfigurationError("prover.asserts must be a sequence")
        extra_delay = float(prover.get("extra_delay_m", 0.0))

        behaviors: tuple[WitnessBehavior, ...] = tuple(
            [WitnessBehavior.HONEST] * zone.witness_count
        )
        if "witnesses" in doc:
            _check_keys(doc["witnesses"], {"behaviors"}, "witnesses")
            raw = doc["witnesses"].get("behaviors", [])
            try:
                behaviors = tuple(WitnessBehavior(b) for b in raw)
            except ValueError as exc:
                raise ConfigurationError(f"witnesses.behaviors: {exc}") from exc

        scene = Scene()
        if "scene" in doc:
            _check_keys(doc["scene"], {"objects"}, "scene")
            objects = doc["scene"].get("objects", [])
            if not isinstance(objects, list):
                raise ConfigurationError("scene.objects must be a sequence")
            scene = Scene(frozenset(str(o) for o in objects))

        if "policy" in doc and "policy_file" in doc:
            raise ConfigurationError("give either policy or policy_file, not both")
        if "policy_file" in doc:
            policy = load_policy(str(doc["policy_file"]))
        else:
            policy_name = doc.get("policy", "supply_chain_v1")
            if policy_name not in builtin_policy_ids():
                raise ConfigurationError(f"unknown built-in policy {policy_name!r}")
            policy = builtin_policy(policy_name)
            policy = replace(policy, zone_id=zone.zone_id)
        policy = _with_quorum(policy, zone)

        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigurationError("seed must be an integer")

        return ScenarioConfig(
            name=str(doc.get("scenario", "custom")),
            zone=zone,
            prover_true_pos=true_pos,
            prover_claimed_pos=claimed,
            prover_honesty=honest,
            policy=policy,
            scene=scene,
            witness_behaviors=behaviors,
            seed=seed,
            p_det=float(doc.get("p_det", DEFAULT_DETECTION_PROB)),
            prover_extra_delay_m=extra_delay,
            asserted_objects=tuple(str(a) for a in asserts),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc


def _parse_zone(block: Any) -> ZoneConfig:
    if not isinstance(block, dict):
        raise ConfigurationError("zone must be a mapping")
    _check_keys(block, _ZONE_KEYS, "zone")
    channel_kwargs = {}
    if "channel" in block:
        ch = block["channel"]
        _check_keys(ch, _CHANNEL_KEYS, "zone.channel")
        for key in _CHANNEL_KEYS & set(ch):
            value = ch[key]
            if key in ("d0", "mp_sigma"):
                value = meters(value)
            elif key == "rounds":
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ConfigurationError("zone.channel.rounds must be an integer")
            else:
                value = float(value)
            channel_kwargs[key] = value
    from .channel import ChannelParams

    kwargs: dict[str, Any] = {"channel": ChannelParams(**channel_kwargs)}
    if "zone_id" in block:
        kwargs["zone_id"] = str(block["zone_id"])
    if "radius" in block:
        kwargs["radius"] = meters(block["radius"])
    if "witness_count" in block:
        kwargs["witness_count"] = int(block["witness_count"])
    if "quorum_k" in block:
        kwargs["quorum_k"] = int(block["quorum_k"])
    if "interval" in block:
        kwargs["interval_seconds"] = seconds(block["interval"])
    if "claim_period" in block:
        kwargs["claim_period_seconds"] = seconds(block["claim_period"])
    if "run" in block:
        kwargs["run_seconds"] = seconds(block["run"])
    if "d_max" in block:
        kwargs["d_max"] = meters(block["d_max"])
    if "d_acc" in block:
        kwargs["d_acc"] = meters(block["d_acc"])
    kwargs.setdefault("zone_id", "Z-01")
    return ZoneConfig(**kwargs)


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())


# -- running -------------------------------------------------------------------------

def _norm_seed(seed: int) -> int:
    return seed & _SEED_MASK


def _make_witnesses(
    zone: ZoneConfig, behaviors: Sequence[WitnessBehavior], seed: int
) -> tuple[WitnessNode, ...]:
    witnesses = []
    seed_bytes = _norm_seed(seed).to_bytes(8, "big")
    for i, position in enumerate(zone.witness_positions):
        witness_id = f"w{i + 1}"
        material = b"|".join((zone.zone_id.encode(), witness_id.encode(), seed_bytes))
        secret, public = generate_keypair(material)
        witnesses.append(
            WitnessNode(
                identity=WitnessIdentity(witness_id, public, position),
                secret_key=secret,
                behavior=behaviors[i],
            )
        )
    return tuple(witnesses)


def run_scenario(config: ScenarioConfig, run_log: list | None = None) -> RunResult:
    """Simulate one full run: scheduled claims, quorum rounds, block chain."""
    zone = config.zone
    rng = np.random.default_rng(_norm_seed(config.seed))
    witnesses = _make_witnesses(zone, config.witness_behaviors, config.seed)
    registry = build_registry(zone.zone_id, witnesses)
    env = Environment(
        true_prover_pos=config.prover_true_pos,
        scene=config.scene,
        p_det=config.p_det,
        prover_extra_delay_m=config.prover_extra_delay_m,
    )
    payload = claim_payload(config.asserted_objects)
    interval_us = round(zone.interval_seconds * 1e6)

    queue = EventQueue()
    for i in range(zone.claim_count):
        queue.schedule(round(i * zone.claim_period_seconds * 1e6), "claim")

    chain: list[Block] = []
    outcomes: list[IntervalOutcome] = []

    def on_event(time_us: int, payload_kind: str) -> None:
        interval_index = time_us // interval_us
        claim = make_claim(
            interval_index,
            zone.zone_id,
            config.prover_claimed_pos,
            (),
            payload,
        )
        outcome = quorum_round(
            witnesses, claim, zone, config.policy, env, rng, chain,
            registry=registry, log=run_log,
        )
        outcomes.append(outcome)

    queue.run(on_event)

    if not verify_chain(chain):
        raise RuntimeError("internal error: produced chain failed verification")
    admitted = sum(1 for o in outcomes if o.admitted)
    return RunResult(outcomes=tuple(outcomes), admitted_count=admitted, chain=tuple(chain))


def _iteration_stats(args: tuple[ScenarioConfig, int]) -> tuple[int, int]:
    config, index = args
    result = run_scenario(replace(config, seed=_norm_seed(config.seed + index)))
    return result.admitted_count, result.claim_count


def _claim_is_positive(config: ScenarioConfig) -> bool:
    origin = Vector3(0.0, 0.0, 0.0)
    return config.prover_honesty and distance(config.prover_true_pos, origin) <= config.zone.radius


def monte_carlo(config: ScenarioConfig, iterations: int, jobs: int = 1) -> Summary:
    """Aggregate ``iterations`` independent runs into Table-style metrics.

    Per-iteration seeds are master seed + iteration index; results merge
    in index order regardless of ``jobs``, so output is bit-stable.
    """
    if iterations < 1:
        raise ConfigurationError("iterations must be at least 1")
    tasks = [(config, i) for i in range(iterations)]
    if jobs > 1 and iterations > 1:
        chunk = max(1, iterations // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            stats = list(pool.map(_iteration_stats, tasks, chunksize=chunk))
    else:
        stats = [_iteration_stats(t) for t in tasks]

    admitted = np.array([s[0] for s in stats], dtype=float)
    claims = np.array([s[1] for s in stats], dtype=float)
    rates = admitted / claims
    positive = _claim_is_positive(config)
    total_claims = int(claims.sum())
    total_admitted = int(admitted.sum())
    tp = total_admitted if positive else 0
    fp = 0 if positive else total_admitted
    fn = (total_claims - total_admitted) if positive else 0

    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    return Summary(
        success_rate_mean=float(rates.mean()),
        success_rate_std=float(rates.std()),
        precision=precision,
        recall=recall,
        admitted_mean=float(admitted.mean()),
        iterations=iterations,
        claims_per_run=int(claims[0]),
    )


# -- admission probability and heatmaps ------------------------------------------------

def k_of_n_probability(probs: Sequence[float], k: int) -> float:
    """Exact Poisson-binomial probability that at least ``k`` of the
    independent events with the given probabilities occur."""
    if k <= 0:
        return 1.0
    if k > len(probs):
        return 0.0
    tail = [1.0] + [0.0] * len(probs)
    for p in probs:
        for j in range(len(probs), 0, -1):
            tail[j] = tail[j] * (1.0 - p) + tail[j - 1] * p
        tail[0] *= 1.0 - p
    return float(sum(tail[k:]))


def witness_pass_probability(true_d: float, zone: ZoneConfig) -> float:
    """Probability that one witness's distance gate passes at a true
    distance, under the zone's ranging noise."""
    sigma = ranging_sigma(true_d, zone.channel)
    if sigma == 0:
        return 1.0 if true_d <= zone.d_acc else 0.0
    return _NORMAL.cdf((zone.d_acc - true_d) / sigma)


def _rf_pass_probability(zone: ZoneConfig, threshold: float = 0.5) -> float:
    # honest, truthful claim: similarity fails only if |shadowing| exceeds
    # (1 - threshold) of the similarity span
    margin_db = (1.0 - threshold) * RF_SIMILARITY_SPAN_DB
    sigma = zone.channel.shadow_sigma
    if sigma == 0:
        return 1.0
    return 1.0 - 2.0 * _NORMAL.cdf(-margin_db / sigma)


def admission_probability_analytic(zone: ZoneConfig, point: Vector3) -> float:
    """Closed-form admission probability for an honest, truthful prover at
    ``point``: per-witness Gaussian distance-gate tails composed by exact
    k-of-n summation (RF gate omitted; its failure rate is ~6e-7)."""
    probs = [
        witness_pass_probability(distance(point, w), zone) for w in zone.witness_positions
    ]
    return k_of_n_probability(probs, zone.quorum_k)


def admission_probability_mc(
    zone: ZoneConfig,
    point: Vector3,
    samples: int,
    rng: np.random.Generator,
) -> float:
    """Empirical admission frequency over simulated claims at ``point``.

    Vectorized equivalent of the honest witness decision under the
    supply-chain gates (distance bound plus RF similarity above 0.5) for a
    prover claiming its true position.
    """
    if samples < 1:
        raise ConfigurationError("samples must be at least 1")
    passes = np.zeros(samples, dtype=int)
    ch = zone.channel
    rf_margin = 0.5 * RF_SIMILARITY_SPAN_DB
    for w in zone.witness_positions:
        d = distance(point, w)
        estimates = (
            d
            + rng.normal(0.0, ch.dist_err_frac * d, samples)
            + rng.normal(0.0, ch.mp_sigma, samples)
        )
        ok = estimates <= zone.d_acc
        if ch.shadow_sigma > 0:
            shadow = rng.normal(0.0, ch.shadow_sigma, samples)
            ok &= np.abs(shadow) < rf_margin
        passes += ok
    return float(np.mean(passes >= zone.quorum_k))


@dataclass(frozen=True)
class GridSpec:
    x_min: float = -20.0
    x_max: float = 20.0
    y_min: float = -20.0
    y_max: float = 20.0
    step: float = 0.5

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ConfigurationError("grid step must be positive")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ConfigurationError("grid bounds are degenerate")

    def axis(self, lo: float, hi: float) -> tuple[float, ...]:
        n = int(math.floor((hi - lo) / self.step + 1e-9)) + 1
        return tuple(round(lo + i * self.step, 9) for i in range(n))

    @property
    def xs(self) -> tuple[float, ...]:
        return self.axis(self.x_min, self.x_max)

    @property
    def ys(self) -> tuple[float, ...]:
        return self.axis(self.y_min, self.y_max)


@dataclass(frozen=True)
class HeatmapGrid:
    """Admission probabilities on a grid plus the noise-free 0/1 overlay."""

    rows: tuple[tuple[float, float, float, int], ...]  # (x, y, p, overlay)

    def to_csv(self) -> str:
        lines = [f"{x},{y},{p},{overlay}" for x, y, p, overlay in self.rows]
        return "\n".join(lines) + "\n"


def parse_heatmap_csv(text: str) -> HeatmapGrid:
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        x, y, p, overlay = line.split(",")
        rows.append((float(x), float(y), float(p), int(overlay)))
    return HeatmapGrid(rows=tuple(rows))


def heatmap(
    zone: ZoneConfig,
    grid: GridSpec | None = None,
    mode: str = "analytic",
    samples: int = 1000,
    seed: int = 0,
) -> HeatmapGrid:
    """Admission-probability map of the zone with the theoretical
    effective-zone boundary as an overlay layer."""
    if mode not in ("analytic", "monte_carlo"):
        raise ConfigurationError(f"unknown heatmap mode {mode!r}")
    grid = grid or GridSpec()
    rng = np.random.default_rng(_norm_seed(seed))
    rows = []
    for x in grid.xs:
        for y in grid.ys:
            point = Vector3(x, y)
            if mode == "analytic":
                p = admission_probability_analytic(zone, point)
            else:
                p = admission_probability_mc(zone, point, samples, rng)
            overlay = int(
                noise_free_effective_zone(
                    point, zone.witness_positions, zone.d_max, zone.quorum_k
                )
            )
            rows.append((x, y, p, overlay))
    return HeatmapGrid(rows=tuple(rows))


# -- calibration -------------------------------------------------------------------------

class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationResult:
    target: str
    parameter: str
    value: float
    achieved: float
    residual: float


def _edge_far_distance(zone: ZoneConfig) -> float:
    return max(distance(EDGE_PROVER_POSITION, w) for w in zone.witness_positions)


def edge_admission_closed_form(zone: ZoneConfig, d_acc: float | None = None) -> float:
    """Closed-form admission probability at the edge prover position.

    The two near witnesses pass with overwhelming probability there, so
    admission reduces to "at least one of the two far witnesses passes":
    1 - (1 - Phi((d_acc - d_far) / sigma(d_far)))^2.
    """
    gate = zone.d_acc if d_acc is None else d_acc
    d_far = _edge_far_distance(zone)
    sigma = ranging_sigma(d_far, zone.channel)
    p = _NORMAL.cdf((gate - d_far) / sigma)
    return 1.0 - (1.0 - p) ** 2


def _visual_range_probs(zone: ZoneConfig) -> list[float]:
    return [
        witness_pass_probability(distance(BASELINE_PROVER_POSITION, w), zone)
        for w in zone.witness_positions
    ]


def visual_admission_closed_form(zone: ZoneConfig, p_det: float) -> float:
    """Composed admission probability of the visual policy at the baseline
    prover position for a given per-witness detection probability."""
    rf = _rf_pass_probability(zone)
    probs = [r * rf * p_det for r in _visual_range_probs(zone)]
    return k_of_n_probability(probs, zone.quorum_k)


def calibrate(
    target: str,
    value: float | None = None,
    zone: ZoneConfig | None = None,
) -> CalibrationResult:
    """Solve for the channel-dependent constant hitting a target admission.

    ``edge_admission`` solves the closed form for the acceptance distance
    ``d_acc`` via the inverse normal; ``visual_admission`` solves for the
    per-witness detection probability by bisection of the composed k-of-n
    expression.
    """
    zone = zone or ZoneConfig("Z-01")
    if target == "edge_admission":
        value = 0.359 if value is None else value
        if not 0.0 < value < 1.0:
            raise CalibrationError(f"edge admission {value} unreachable (must be in (0,1))")
        p_single = 1.0 - math.sqrt(1.0 - value)
        d_far = _edge_far_distance(zone)
        sigma = ranging_sigma(d_far, zone.channel)
        d_acc = d_far + _NORMAL.inv_cdf(p_single) * sigma
        achieved = edge_admission_closed_form(zone, d_acc=d_acc)
        return CalibrationResult(
            target=target,
            parameter="d_acc",
            value=d_acc,
            achieved=achieved,
            residual=abs(achieved - value),
        )
    if target == "visual_admission":
        value = 0.973 if value is None else value
        reachable_max = visual_admission_closed_form(zone, 1.0)
        if not 0.0 < value <= reachable_max:
            raise CalibrationError(
                f"visual admission {value} unreachable (max {reachable_max:.6f})"
            )
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = (lo + hi) / 2.0
            if visual_admission_closed_form(zone, mid) < value:
                lo = mid
            else:
                hi = mid
        p_det = (lo + hi) / 2.0
        achieved = visual_admission_closed_form(zone, p_det)
        return CalibrationResult(
            target=target,
            parameter="p_det",
            value=p_det,
            achieved=achieved,
            residual=abs(achieved - value),
        )
    raise CalibrationError(f"unknown calibration target {target!r}")
