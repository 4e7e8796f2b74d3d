import json
import random

import pytest

from conftest import slow_npc_abstract
from scenforge.metrics import scenario_distance, variation_range
from scenforge.scenlang.ast import ParticipantType
from scenforge.scenlang.printer import print_scenario
from scenforge.search import (
    SearchConfig,
    _rng_for,
    _scenario_positions,
    classify_violation,
    ego_action_sequence,
    human_action_sequence,
    inner_search,
    minimize_essential,
    mutate_scenario,
    outer_search,
    run_search,
    spawn_clearance_ok,
)
from scenforge.sim import (
    EntityState,
    ExecutionTrace,
    Verdict,
    WorldState,
)
from scenforge.synth import generate_concrete

SMALL = dict(outer_budget=30, inner_budget=5, max_records=2)


def small_config(**over):
    return SearchConfig(**{**SMALL, **over})


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(outer_budget=0)
    with pytest.raises(ValueError):
        SearchConfig(population=0)
    with pytest.raises(ValueError):
        SearchConfig(sigma_pos=-1.0)


def test_hierarchical_rng_deterministic():
    a = _rng_for(42, 3, 1).random()
    b = _rng_for(42, 3, 1).random()
    c = _rng_for(42, 3, 2).random()
    assert a == b
    assert a != c


def test_human_action_sequence_is_ego_behaviors():
    abstract = slow_npc_abstract()
    seq = human_action_sequence(abstract)
    assert seq.actions == abstract.ego.behaviors


def test_spawn_clearance(road_map):
    scenario = generate_concrete(slow_npc_abstract(), road_map, seed=0).scenario
    assert spawn_clearance_ok(scenario, road_map)
    # an absurd minimum clearance rejects every spawn
    assert not spawn_clearance_ok(scenario, road_map, min_clearance=200.0)


def test_mutation_preserves_equivalence_and_determinism(road_map):
    abstract = slow_npc_abstract()
    base = generate_concrete(abstract, road_map, seed=0).scenario
    config = small_config()
    a = mutate_scenario(base, config, random.Random("m:1"), road_map, abstract=abstract)
    b = mutate_scenario(base, config, random.Random("m:1"), road_map, abstract=abstract)
    assert print_scenario(a) == print_scenario(b)
    from scenforge.inspection import check_semantic_equivalence

    assert bool(check_semantic_equivalence(a, abstract, road_map))


def test_mutation_never_touches_ego(road_map):
    abstract = slow_npc_abstract()
    base = generate_concrete(abstract, road_map, seed=0).scenario
    config = small_config()
    for i in range(10):
        mutant = mutate_scenario(
            base, config, random.Random(f"e:{i}"), road_map, abstract=abstract
        )
        assert mutant.ego == base.ego


def _flat_trace(speed, seconds=30.0, dt=0.5):
    states = []
    t = 0.0
    while t <= seconds:
        states.append(
            WorldState(
                time=t,
                entities=(
                    EntityState(
                        "ego", 0.0, 0.0, 0.0, speed, 2.35, 0.9, ParticipantType.CAR
                    ),
                ),
            )
        )
        t += dt
    return ExecutionTrace(states=tuple(states), trajectories={}, termination="horizon")


def test_classify_collision_dominates():
    verdicts = (
        Verdict("never_collision", False),
        Verdict("always_clearance", False),
        Verdict("eventually_at_destination", False),
    )
    assert classify_violation(verdicts, _flat_trace(0.0)) == "collision"


def test_classify_traffic_disruption_needs_stuck_ego():
    verdicts = (
        Verdict("never_collision", True),
        Verdict("always_clearance", True),
        Verdict("eventually_at_destination", False),
    )
    assert classify_violation(verdicts, _flat_trace(0.1)) == "traffic_disruption"
    assert classify_violation(verdicts, _flat_trace(5.0)) is None


def test_classify_rule_violation():
    verdicts = (
        Verdict("never_collision", True),
        Verdict("always_clearance", False),
        Verdict("eventually_at_destination", True),
    )
    assert classify_violation(verdicts, _flat_trace(5.0)) == "rule_violation"


def test_classify_requires_a_violation():
    verdicts = (Verdict("never_collision", True),)
    with pytest.raises(ValueError):
        classify_violation(verdicts, _flat_trace(5.0))


def test_outer_search_flags_buggy_policy(road_map):
    abstract = slow_npc_abstract()
    seed_scn = generate_concrete(abstract, road_map, seed=0).scenario
    config = small_config(seed=42)
    buggy = outer_search(abstract, [seed_scn], "lanekeeper-staticbug", road_map, config)
    assert buggy.violations
    assert buggy.evaluations <= config.outer_budget
    clean = outer_search(abstract, [seed_scn], "lanekeeper", road_map, config)
    assert not clean.violations


def test_inner_search_rv_matches_recomputation(road_map):
    abstract = slow_npc_abstract()
    seed_scn = generate_concrete(abstract, road_map, seed=0).scenario
    config = small_config(seed=42)
    buggy = outer_search(abstract, [seed_scn], "lanekeeper-staticbug", road_map, config)
    violation = buggy.violations[0]
    inner = inner_search(
        violation.scenario, abstract, "lanekeeper-staticbug", road_map, config
    )
    base_positions = _scenario_positions(violation.trace)
    recomputed = variation_range(
        base_positions,
        [_scenario_positions_for(v, road_map, config) for v in inner.variations],
    )
    assert inner.rv == pytest.approx(recomputed)
    assert inner.universal == (inner.rv >= config.m_threshold)


def _scenario_positions_for(scenario, road_map, config):
    from scenforge.policies import make_policy
    from scenforge.sim import run_scenario

    policy = make_policy("lanekeeper-staticbug", scenario, road_map)
    trace = run_scenario(
        scenario, policy, road_map, dt=config.dt, horizon=config.horizon,
        seed=config.seed,
    )
    return _scenario_positions(trace)


def test_minimize_essential_finds_npc(road_map):
    abstract = slow_npc_abstract()
    seed_scn = generate_concrete(abstract, road_map, seed=0).scenario
    config = small_config(seed=42)
    buggy = outer_search(abstract, [seed_scn], "lanekeeper-staticbug", road_map, config)
    essential = minimize_essential(
        buggy.violations[0].scenario, "lanekeeper-staticbug", road_map, config
    )
    assert "npc_1" in essential


def test_run_search_writes_artifacts(tmp_path, road_map):
    abstract = slow_npc_abstract()
    config = small_config(seed=42)
    result = run_search(
        abstract, road_map, "lanekeeper-staticbug", config, out_dir=tmp_path
    )
    assert result.records
    lines = (tmp_path / "violations.jsonl").read_text().splitlines()
    assert len(lines) == len(result.records)
    record = json.loads(lines[0])
    assert record["violation_kind"] in {
        "collision",
        "traffic_disruption",
        "rule_violation",
    }
    replays = list((tmp_path / "replays").glob("*.replay"))
    assert len(replays) == len(result.records)
    replay = json.loads(replays[0].read_text())
    assert {"scenario", "policy", "seed", "dt", "horizon"} <= set(replay)
    assert (tmp_path / "summary.csv").exists()


def test_ego_action_sequence_from_trace(road_map):
    from scenforge.policies import make_policy
    from scenforge.sim import run_scenario
    from scenforge.actions import Action

    scenario = generate_concrete(slow_npc_abstract(), road_map, seed=0).scenario
    policy = make_policy("lanekeeper", scenario, road_map)
    trace = run_scenario(scenario, policy, road_map)
    seq = ego_action_sequence(trace, road_map)
    assert seq.actions  # moving ego yields at least one classified action
    assert all(isinstance(a, Action) for a in seq.actions)
