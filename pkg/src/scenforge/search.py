"""Dual-layer violation search.

Outer layer: feedback-guided fuzzing over concrete scenarios, mutating
participant positions, speeds and vehicle types while preserving semantic
equivalence with the abstract scenario, and maximizing the behavior distance
between the ego's executed action sequence and the human driver's declared
one. Inner layer: perturbs each found violation to measure how large a
region of trajectory space reproduces it (variation range), marking
violations universal past a threshold. Also: one-at-a-time participant
minimization and violation-kind classification.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from .abstraction import AbstractScenario
from .inspection import (
    check_feasibility,
    check_semantic_equivalence,
    extract_action_sequence,
)
from .mapdata import RoadMap
from .metrics import ActionSequence, behavior_distance, universal, variation_range
from .policies import make_policy
from .scenlang.ast import (
    ConcreteScenario,
    LanePosition,
    ParticipantType,
    TrajectoryDef,
    Waypoint,
)
from .scenlang.printer import print_scenario
from .scripting import DWELL_SPEED, Trajectory, TrajPoint, waypoint_world
from .sim import (
    DEFAULT_DT,
    DEFAULT_HORIZON,
    FOOTPRINTS,
    EntityState,
    ExecutionTrace,
    obb_distance,
    run_scenario,
)
from .synth import generate_concrete

MAX_RESAMPLES = 10
STUCK_SPEED = 0.5
STUCK_DURATION = 15.0
EGO_SAMPLE_PERIOD = 2.0
PED_SPEED_CAP = 2.5


@dataclass(frozen=True)
class SearchConfig:
    outer_budget: int = 200
    inner_budget: int = 20
    population: int = 5
    sigma_pos: float = 5.0
    sigma_speed: float = 1.5
    type_flip_prob: float = 0.1
    m_threshold: float = 10.0
    max_records: int = 5  # violations carried into the inner layer per run
    seed: int = 0
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON

    def __post_init__(self) -> None:
        if self.outer_budget < 1 or self.inner_budget < 1:
            raise ValueError("budgets must be >= 1")
        if self.population < 1:
            raise ValueError("population must be >= 1")
        if self.sigma_pos <= 0 or self.sigma_speed <= 0:
            raise ValueError("mutation sigmas must be > 0")
        if self.m_threshold <= 0:
            raise ValueError("universality threshold must be > 0")


@dataclass(frozen=True)
class Candidate:
    scenario: ConcreteScenario
    equivalent: bool
    d: float | None = None
    verdicts: tuple = ()
    trace: ExecutionTrace | None = None

    @property
    def violated(self) -> bool:
        return any(not v.satisfied for v in self.verdicts)


@dataclass(frozen=True)
class ViolationRecord:
    scenario_text: str
    policy: str
    seed: int
    violation_kind: str
    rv: float
    universal: bool
    essential_participants: tuple[str, ...]
    source_video: str = ""
    abstract_id: str = ""

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario_text,
            "policy": self.policy,
            "seed": self.seed,
            "violation_kind": self.violation_kind,
            "rv": self.rv,
            "universal": self.universal,
            "essential_participants": list(self.essential_participants),
            "source_video": self.source_video,
            "abstract_id": self.abstract_id,
        }


def human_action_sequence(abstract: AbstractScenario) -> ActionSequence:
    """A_h: the ego's declared behavior list."""
    return ActionSequence(abstract.ego.behaviors)


def _rng_for(*parts) -> random.Random:
    return random.Random(":".join(str(p) for p in parts))


# -- mutation ------------------------------------------------------------------


def _shift_waypoints(
    traj: TrajectoryDef, road_map: RoadMap, d_pos: float, d_speed: float, rng
) -> TrajectoryDef:
    wps = []
    xy_dir = None
    for wp in traj.waypoints:
        if isinstance(wp.position, LanePosition):
            lane = road_map.lane(wp.position.lane_id)
            off = max(0.0, min(wp.position.offset + d_pos, lane.length))
            pos = LanePosition(wp.position.lane_id, round(off, 3))
            limit = lane.speed_limit
        else:
            if xy_dir is None:
                xy_dir = _walk_direction(traj)
            pos = (
                round(wp.position[0] + d_pos * xy_dir[0], 3),
                round(wp.position[1] + d_pos * xy_dir[1], 3),
            )
            limit = PED_SPEED_CAP
        if wp.speed < DWELL_SPEED:
            speed = wp.speed  # dwell semantics must survive mutation
        else:
            speed = round(max(0.5, min(wp.speed + d_speed, limit)), 3)
        wps.append(Waypoint(pos, speed, wp.lateral, wp.time))
    return TrajectoryDef(traj.name, traj.participant_type, tuple(wps))


def _walk_direction(traj: TrajectoryDef) -> tuple[float, float]:
    for a, b in zip(traj.waypoints, traj.waypoints[1:]):
        if not isinstance(a.position, LanePosition):
            dx = b.position[0] - a.position[0]
            dy = b.position[1] - a.position[1]
            n = math.hypot(dx, dy)
            if n > 1e-9:
                return dx / n, dy / n
    return 1.0, 0.0


def _spawn_state(name, ptype, x, y, heading) -> EntityState:
    hl, hw = (v / 2.0 for v in FOOTPRINTS[ptype])
    return EntityState(name, x, y, heading, 0.0, hl, hw, ptype)


def spawn_clearance_ok(
    scenario: ConcreteScenario, road_map: RoadMap, min_clearance: float = 2.0
) -> bool:
    """Do all participants spawn with boundary clearance to the ego?

    The feasibility families only constrain center-to-center start spacing;
    a long vehicle can still overlap the clearance envelope at t=0, which
    would charge the policy with a violation it never caused.
    """
    lane = road_map.lane(scenario.ego.start.lane_id)
    ex, ey = lane.point_at(scenario.ego.start.offset)
    ego = _spawn_state(
        "ego", scenario.ego.vehicle_type, ex, ey,
        lane.heading_at(scenario.ego.start.offset),
    )
    for traj in scenario.participants:
        x0, y0 = waypoint_world(traj.waypoints[0], road_map)
        x1, y1 = waypoint_world(traj.waypoints[1], road_map)
        heading = math.atan2(y1 - y0, x1 - x0) if (x1, y1) != (x0, y0) else 0.0
        other = _spawn_state(traj.name, traj.participant_type, x0, y0, heading)
        if obb_distance(ego, other) < min_clearance:
            return False
    return True


_TYPE_FLIP = {
    ParticipantType.CAR: ParticipantType.TRUCK,
    ParticipantType.TRUCK: ParticipantType.CAR,
}


def mutate_scenario(
    scenario: ConcreteScenario,
    config: SearchConfig,
    rng: random.Random,
    road_map: RoadMap,
    abstract: AbstractScenario | None = None,
    sigma_scale: float = 1.0,
    allow_type_flip: bool = True,
) -> ConcreteScenario:
    """Gaussian perturbation of non-ego participants, feasibility-checked.

    Resamples up to MAX_RESAMPLES times; returns the parent unchanged when no
    legal mutant is found.
    """
    for _ in range(MAX_RESAMPLES):
        npcs, peds = [], []
        changed = False
        for traj in scenario.participants:
            d_pos = rng.gauss(0.0, config.sigma_pos * sigma_scale)
            d_speed = rng.gauss(0.0, config.sigma_speed * sigma_scale)
            mutant = _shift_waypoints(traj, road_map, d_pos, d_speed, rng)
            if (
                allow_type_flip
                and mutant.participant_type in _TYPE_FLIP
                and rng.random() < config.type_flip_prob
            ):
                mutant = TrajectoryDef(
                    mutant.name, _TYPE_FLIP[mutant.participant_type], mutant.waypoints
                )
            changed = changed or mutant != traj
            (peds if mutant.participant_type is ParticipantType.PEDESTRIAN else npcs).append(
                mutant
            )
        if not changed:
            return scenario
        try:
            candidate = ConcreteScenario(
                map_id=scenario.map_id,
                ego=scenario.ego,
                npcs=tuple(npcs),
                pedestrians=tuple(peds),
                assertions=scenario.assertions,
            )
            if not spawn_clearance_ok(candidate, road_map):
                continue
            if abstract is not None:
                if not check_semantic_equivalence(candidate, abstract, road_map):
                    continue
            elif not check_feasibility(candidate, road_map).ok:
                continue
            return candidate
        except (ValueError, KeyError):
            continue
    return scenario


# -- ego behavior extraction from a dense trace --------------------------------


def ego_action_sequence(
    trace: ExecutionTrace,
    road_map: RoadMap,
    diagnostics: list[str] | None = None,
) -> ActionSequence:
    """A_E: action sequence of the executed ego trajectory.

    The dense per-step trace is decimated to ~2 s spacing first so that the
    motion-state segmentation sees waypoint-scale kinematic changes rather
    than integrator noise.
    """
    ego = trace.trajectories.get("ego")
    if ego is None or len(ego.points) < 2:
        return ActionSequence(())
    pts = list(ego.points)
    step = max(1, int(round(EGO_SAMPLE_PERIOD / max(pts[1].t - pts[0].t, 1e-9))))
    sampled = pts[::step]
    if sampled[-1].t != pts[-1].t:
        sampled.append(pts[-1])
    if len(sampled) < 2:
        sampled = [pts[0], pts[-1]]
    coarse = Trajectory(points=tuple(sampled))
    return extract_action_sequence(
        coarse, road_map, ParticipantType.CAR, diagnostics=diagnostics
    )


# -- violation classification --------------------------------------------------


def _stuck(trace: ExecutionTrace) -> bool:
    """Did the ego sit below STUCK_SPEED for STUCK_DURATION contiguously?"""
    run_start = None
    best = 0.0
    for state in trace.states:
        ego = state.entities[0]
        if ego.speed < STUCK_SPEED:
            if run_start is None:
                run_start = state.time
            best = max(best, state.time - run_start)
        else:
            run_start = None
    return best >= STUCK_DURATION


def classify_violation(verdicts, trace: ExecutionTrace) -> str | None:
    """collision > traffic_disruption > rule_violation; None if the violated
    verdicts fit no category (e.g. destination missed while still moving)."""
    by_name = {v.assertion: v for v in verdicts}
    if not any(not v.satisfied for v in verdicts):
        raise ValueError("no violated verdict to classify")
    never = by_name.get("never_collision")
    if never is not None and not never.satisfied:
        return "collision"
    dest = by_name.get("eventually_at_destination")
    if dest is not None and not dest.satisfied and _stuck(trace):
        return "traffic_disruption"
    clearance = by_name.get("always_clearance")
    if clearance is not None and not clearance.satisfied:
        return "rule_violation"
    return None


# -- outer layer ---------------------------------------------------------------


@dataclass
class OuterResult:
    best: Candidate
    violations: list[Candidate] = field(default_factory=list)
    evaluations: int = 0


def _evaluate(
    scenario: ConcreteScenario,
    abstract: AbstractScenario,
    policy_name: str,
    road_map: RoadMap,
    config: SearchConfig,
    a_h: ActionSequence,
) -> Candidate:
    eq = check_semantic_equivalence(scenario, abstract, road_map)
    policy = make_policy(policy_name, scenario, road_map)
    trace = run_scenario(
        scenario, policy, road_map, dt=config.dt, horizon=config.horizon,
        seed=config.seed,
    )
    d = None
    if eq:
        a_e = ego_action_sequence(trace, road_map)
        d = behavior_distance(a_e, a_h)
    return Candidate(
        scenario=scenario,
        equivalent=bool(eq),
        d=d,
        verdicts=trace.verdicts,
        trace=trace,
    )


def outer_search(
    abstract: AbstractScenario,
    seed_scenarios: list[ConcreteScenario],
    policy_name: str,
    road_map: RoadMap,
    config: SearchConfig,
) -> OuterResult:
    """(mu + lambda) elitist loop maximizing behavior distance to A_h."""
    feasible_seeds = [
        s for s in seed_scenarios if check_feasibility(s, road_map).ok
    ]
    if not feasible_seeds:
        raise ValueError("no feasible seed scenario")
    a_h = human_action_sequence(abstract)

    evals = 0
    violations: list[Candidate] = []
    population: list[Candidate] = []

    def score(c: Candidate) -> float:
        return c.d if (c.equivalent and c.d is not None) else -math.inf

    def record(c: Candidate) -> None:
        if not c.violated or c.trace is None:
            return
        if not check_feasibility(c.scenario, road_map).ok:
            return  # never report NPC-caused illegality
        if classify_violation(c.verdicts, c.trace) is not None:
            violations.append(c)

    for s in feasible_seeds:
        if evals >= config.outer_budget:
            break
        c = _evaluate(s, abstract, policy_name, road_map, config, a_h)
        evals += 1
        population.append(c)
        record(c)

    generation = 0
    while evals < config.outer_budget:
        generation += 1
        parents = sorted(population, key=score, reverse=True)[: config.population]
        offspring = []
        for i in range(config.population):
            if evals >= config.outer_budget:
                break
            parent = parents[i % len(parents)]
            rng = _rng_for(config.seed, generation, i)
            mutant = mutate_scenario(
                parent.scenario, config, rng, road_map, abstract=abstract
            )
            c = _evaluate(mutant, abstract, policy_name, road_map, config, a_h)
            evals += 1
            offspring.append(c)
            record(c)
        population = sorted(population + offspring, key=score, reverse=True)[
            : config.population
        ]

    best = max(population, key=score)
    return OuterResult(best=best, violations=violations, evaluations=evals)


# -- inner layer ---------------------------------------------------------------


def _scenario_positions(trace: ExecutionTrace) -> list[list[tuple[float, float]]]:
    return [
        [(p.x, p.y) for p in traj.points]
        for _, traj in sorted(trace.trajectories.items())
    ]


@dataclass(frozen=True)
class InnerResult:
    rv: float
    variations: tuple[ConcreteScenario, ...]
    universal: bool


def inner_search(
    violation_scenario: ConcreteScenario,
    abstract: AbstractScenario,
    policy_name: str,
    road_map: RoadMap,
    config: SearchConfig,
) -> InnerResult:
    """Perturb a violation and measure how far the violating region extends."""
    policy = make_policy(policy_name, violation_scenario, road_map)
    base = run_scenario(
        violation_scenario, policy, road_map, dt=config.dt,
        horizon=config.horizon, seed=config.seed,
    )
    if not any(not v.satisfied for v in base.verdicts):
        raise ValueError("violation scenario does not reproduce under replay")
    kind = classify_violation(base.verdicts, base)
    sf = _scenario_positions(base)

    recurred: list[ConcreteScenario] = []
    z_positions = []
    for i in range(config.inner_budget):
        rng = _rng_for(config.seed, "inner", i)
        variant = mutate_scenario(
            violation_scenario, config, rng, road_map, abstract=abstract,
            sigma_scale=0.5, allow_type_flip=False,
        )
        policy = make_policy(policy_name, variant, road_map)
        trace = run_scenario(
            variant, policy, road_map, dt=config.dt, horizon=config.horizon,
            seed=config.seed,
        )
        if not any(not v.satisfied for v in trace.verdicts):
            continue
        if classify_violation(trace.verdicts, trace) == kind:
            recurred.append(variant)
            z_positions.append(_scenario_positions(trace))

    rv = variation_range(sf, z_positions)
    return InnerResult(
        rv=rv, variations=tuple(recurred), universal=universal(rv, config.m_threshold)
    )


def minimize_essential(
    violation_scenario: ConcreteScenario,
    policy_name: str,
    road_map: RoadMap,
    config: SearchConfig,
) -> tuple[str, ...]:
    """Participants whose one-at-a-time removal makes the violation vanish."""
    policy = make_policy(policy_name, violation_scenario, road_map)
    base = run_scenario(
        violation_scenario, policy, road_map, dt=config.dt,
        horizon=config.horizon, seed=config.seed,
    )
    if not any(not v.satisfied for v in base.verdicts):
        raise ValueError("violation scenario does not reproduce under replay")
    essential = []
    for traj in violation_scenario.participants:
        reduced = violation_scenario.without_participant(traj.name)
        policy = make_policy(policy_name, reduced, road_map)
        trace = run_scenario(
            reduced, policy, road_map, dt=config.dt, horizon=config.horizon,
            seed=config.seed,
        )
        if not any(not v.satisfied for v in trace.verdicts):
            essential.append(traj.name)
    return tuple(essential)


# -- full run orchestration ----------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    records: tuple[ViolationRecord, ...]
    best_d: float | None
    evaluations: int


def run_search(
    abstract: AbstractScenario,
    road_map: RoadMap,
    policy_name: str,
    config: SearchConfig,
    out_dir: Path | str | None = None,
    source_video: str = "",
    abstract_id: str = "",
) -> RunResult:
    """Generate seeds, run both layers, minimize, and write run artifacts."""
    seed_result = generate_concrete(abstract, road_map, seed=config.seed)
    outer = outer_search(
        abstract, [seed_result.scenario], policy_name, road_map, config
    )

    records: list[ViolationRecord] = []
    seen: set[str] = set()
    for cand in outer.violations:
        if len(records) >= config.max_records:
            break
        text = print_scenario(cand.scenario)
        if text in seen:
            continue
        seen.add(text)
        kind = classify_violation(cand.verdicts, cand.trace)
        inner = inner_search(cand.scenario, abstract, policy_name, road_map, config)
        essential = minimize_essential(cand.scenario, policy_name, road_map, config)
        records.append(
            ViolationRecord(
                scenario_text=text,
                policy=policy_name,
                seed=config.seed,
                violation_kind=kind,
                rv=inner.rv,
                universal=inner.universal,
                essential_participants=essential,
                source_video=source_video,
                abstract_id=abstract_id,
            )
        )

    if out_dir is not None:
        write_run_outputs(Path(out_dir), records, config)
    return RunResult(
        records=tuple(records), best_d=outer.best.d, evaluations=outer.evaluations
    )


def write_run_outputs(
    out_dir: Path, records: list[ViolationRecord], config: SearchConfig
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "violations.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")

    replay_dir = out_dir / "replays"
    replay_dir.mkdir(exist_ok=True)
    for i, rec in enumerate(records):
        replay = {
            "scenario": rec.scenario_text,
            "policy": rec.policy,
            "seed": rec.seed,
            "dt": config.dt,
            "horizon": config.horizon,
        }
        path = replay_dir / f"violation_{i:04d}.replay"
        path.write_text(json.dumps(replay, sort_keys=True) + "\n", encoding="utf-8")

    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "source_video",
                "abstract_id",
                "violation_kind",
                "rv",
                "universal",
                "essential_participants",
            ]
        )
        for rec in records:
            writer.writerow(
                [
                    rec.source_video,
                    rec.abstract_id,
                    rec.violation_kind,
                    f"{rec.rv:.6f}",
                    str(rec.universal).lower(),
                    ";".join(rec.essential_participants),
                ]
            )
