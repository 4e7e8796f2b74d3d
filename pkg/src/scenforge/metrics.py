"""Behavior and trajectory distance metrics plus evaluation accuracy scores.

behavior_distance is a weighted edit distance over action sequences;
trajectory_distance / scenario_distance / variation_range quantify how far
concrete scenario executions lie from each other in space. sua and csc are
the two dataset-level accuracy metrics: understanding accuracy over abstract
scenario elements and correctness of generated concrete scenarios.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .actions import Action

DEFAULT_LAMBDA = 1.0
DEFAULT_RESAMPLE_POINTS = 50

# action families that are cheap to confuse with each other
_LONGITUDINAL_FAMILY = {Action.ACCELERATE, Action.DECELERATE, Action.BRAKE, Action.STOP}
_GAIT_FAMILY = {Action.WALK_ALONG, Action.WALK_ACROSS, Action.STAND}
_OPPOSITES = {
    frozenset({Action.CHANGE_LEFT, Action.CHANGE_RIGHT}),
    frozenset({Action.TURN_LEFT, Action.TURN_RIGHT}),
}


@dataclass(frozen=True)
class ActionSequence:
    actions: tuple[Action, ...] = ()

    def __post_init__(self) -> None:
        for a in self.actions:
            if not isinstance(a, Action):
                raise ValueError(f"unclassified entry {a!r} in action sequence")

    def __len__(self) -> int:
        return len(self.actions)


def _pair_key(a: Action, b: Action) -> tuple[str, str]:
    return (a.value, b.value) if a.value <= b.value else (b.value, a.value)


def _default_replacement(a: Action, b: Action) -> float:
    if a is b:
        return 0.0
    if frozenset({a, b}) in _OPPOSITES:
        return 2.0
    if {a, b} <= _LONGITUDINAL_FAMILY or {a, b} <= _GAIT_FAMILY:
        return 0.5
    return 1.0


@dataclass(frozen=True)
class CostModel:
    """Insertion/deletion cost plus a symmetric replacement table."""

    lambda_indel: float = DEFAULT_LAMBDA
    replacements: dict[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lambda_indel < 0:
            raise ValueError("insertion/deletion cost must be >= 0")
        for (a, b), cost in self.replacements.items():
            if cost < 0:
                raise ValueError(f"negative replacement cost for ({a}, {b})")
            if a == b and cost != 0.0:
                raise ValueError(f"replacement table diagonal must be zero ({a})")
            if (a, b) != tuple(sorted((a, b))):
                raise ValueError(f"replacement key ({a}, {b}) not in canonical order")

    def cost_rep(self, a: Action, b: Action) -> float:
        if a is b:
            return 0.0
        override = self.replacements.get(_pair_key(a, b))
        return _default_replacement(a, b) if override is None else override

    def cost_ins(self, a: Action) -> float:
        return self.lambda_indel

    cost_del = cost_ins

    def to_json(self) -> dict:
        return {
            "lambda_indel": self.lambda_indel,
            "replacements": {f"{a}|{b}": c for (a, b), c in sorted(self.replacements.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "CostModel":
        reps = {}
        for key, cost in data.get("replacements", {}).items():
            a, b = key.split("|")
            Action(a), Action(b)  # reject unknown action names
            reps[tuple(sorted((a, b)))] = float(cost)
        return cls(
            lambda_indel=float(data.get("lambda_indel", DEFAULT_LAMBDA)),
            replacements=reps,
        )

    @classmethod
    def load(cls, path: Path | str) -> "CostModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def behavior_distance(
    a_e: ActionSequence | Sequence[Action],
    a_h: ActionSequence | Sequence[Action],
    cost_model: CostModel | None = None,
) -> float:
    """Weighted Levenshtein distance between two action sequences."""
    cm = cost_model or CostModel()
    xs = tuple(a_e.actions if isinstance(a_e, ActionSequence) else a_e)
    ys = tuple(a_h.actions if isinstance(a_h, ActionSequence) else a_h)
    m, n = len(xs), len(ys)
    prev = [j * cm.lambda_indel for j in range(n + 1)]
    for i in range(1, m + 1):
        cur = [i * cm.lambda_indel] + [0.0] * n
        for j in range(1, n + 1):
            cur[j] = min(
                prev[j] + cm.cost_del(xs[i - 1]),
                cur[j - 1] + cm.cost_ins(ys[j - 1]),
                prev[j - 1] + cm.cost_rep(xs[i - 1], ys[j - 1]),
            )
        prev = cur
    return prev[n]


def resample_polyline(points: Sequence[tuple[float, float]], mu: int) -> np.ndarray:
    """Resample a polyline to mu points equally spaced by arc length."""
    if mu < 2:
        raise ValueError("resample count must be >= 2")
    if not points:
        raise ValueError("empty trajectory")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("trajectory points must be (x, y) pairs")
    if len(pts) == 1:
        return np.repeat(pts, mu, axis=0)
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        return np.repeat(pts[:1], mu, axis=0)
    target = np.linspace(0.0, s[-1], mu)
    return np.column_stack(
        [np.interp(target, s, pts[:, 0]), np.interp(target, s, pts[:, 1])]
    )


def trajectory_distance(
    traj_a: Sequence[tuple[float, float]],
    traj_b: Sequence[tuple[float, float]],
    mu: int = DEFAULT_RESAMPLE_POINTS,
) -> float:
    """Summed pointwise distance after arc-length resampling to mu points."""
    ra = resample_polyline(traj_a, mu)
    rb = resample_polyline(traj_b, mu)
    return float(np.hypot(ra[:, 0] - rb[:, 0], ra[:, 1] - rb[:, 1]).sum())


def scenario_distance(
    s1: Sequence[Sequence[tuple[float, float]]],
    s2: Sequence[Sequence[tuple[float, float]]],
    mu: int = DEFAULT_RESAMPLE_POINTS,
) -> float:
    """Mean trajectory distance over all cross-scenario participant pairs."""
    if not s1 or not s2:
        raise ValueError("scenario_distance needs at least one participant each")
    total = 0.0
    for ta in s1:
        for tb in s2:
            total += trajectory_distance(ta, tb, mu)
    return total / (len(s1) * len(s2))


def variation_range(
    sf: Sequence[Sequence[tuple[float, float]]],
    variations: Iterable[Sequence[Sequence[tuple[float, float]]]],
    mu: int = DEFAULT_RESAMPLE_POINTS,
) -> float:
    """Largest scenario distance from sf to any recurring variation; 0 if none."""
    return max((scenario_distance(sf, s, mu) for s in variations), default=0.0)


def sua(
    extractions: Sequence[Sequence[tuple]],
    ground_truth: Sequence[Sequence[tuple]],
    category: str = "",
) -> float:
    """Fraction of elements whose attribute tuples all match the ground truth.

    extractions[i][j] and ground_truth[i][j] are the attribute tuples of the
    j-th element of the named category in scenario i. An element counts as
    correct only when every attribute matches.
    """
    if len(extractions) != len(ground_truth):
        raise ValueError("scenario count mismatch between extraction and ground truth")
    total = correct = 0
    for got, want in zip(extractions, ground_truth):
        for j, want_el in enumerate(want):
            total += 1
            if j < len(got) and tuple(got[j]) == tuple(want_el):
                correct += 1
    if total == 0:
        raise ValueError(f"no {category or 'ground truth'} elements to score")
    return correct / total


def csc(
    concrete_results: Sequence,
    abstracts: Sequence,
    sim: Callable[[object, object], Iterable[bool]] | None = None,
) -> float:
    """Fraction of concrete scenarios whose every element matches its abstract.

    When sim is given it maps (concrete_result, abstract) to per-element
    conformance flags; otherwise concrete_results must already hold those
    flags per scenario.
    """
    if len(concrete_results) != len(abstracts):
        raise ValueError("pairing mismatch between concrete results and abstracts")
    if not abstracts:
        raise ValueError("no scenarios to score")
    correct = 0
    for result, abstract in zip(concrete_results, abstracts):
        flags = list(sim(result, abstract)) if sim is not None else list(result)
        if all(bool(f) for f in flags):
            correct += 1
    return correct / len(abstracts)


def universal(rv: float, m_threshold: float = 10.0) -> bool:
    """A violation is universal when its variation range reaches the threshold."""
    return rv >= m_threshold


def _edit_oracle(
    xs: tuple[Action, ...], ys: tuple[Action, ...], cm: CostModel
) -> float:
    """Brute-force minimum edit cost over all monotone alignments.

    Exponential; only usable for short sequences. Exists purely as an
    independent check of the dynamic program.
    """
    from itertools import combinations

    m, n = len(xs), len(ys)
    best = math.inf
    for k in range(min(m, n) + 1):
        for keep_x in combinations(range(m), k):
            for keep_y in combinations(range(n), k):
                cost = (m - k + n - k) * cm.lambda_indel
                cost += sum(
                    cm.cost_rep(xs[i], ys[j]) for i, j in zip(keep_x, keep_y)
                )
                best = min(best, cost)
    return best
