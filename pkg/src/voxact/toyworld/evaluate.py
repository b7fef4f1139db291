"""Closed-loop evaluation: seeded episodes, 0/100 scoring, report table.

An episode ends on task success, on an undecodable action, or at the step
cap. Scores are all-or-nothing. The report is a machine-readable table
with one row per (task, variation) plus per-task aggregates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..voxelizer import CameraView
from .tasks import TaskSpec
from .world import ToyWorld

DEFAULT_EPISODES_PER_TASK = 25
DEFAULT_MAX_STEPS = 25


@dataclass
class EnvObservation:
    views: list[CameraView]
    gripper_open: int
    step_index: int
    max_steps: int


@dataclass
class EpisodeResult:
    score: int  # 0 or 100
    steps_taken: int
    termination: str  # success | step-limit | invalid-action
    task_id: str = ""
    variation_id: int = 0


@dataclass
class EvalReport:
    rows: list[dict] = field(default_factory=list)
    per_task: dict[str, float] = field(default_factory=dict)
    episodes: list[EpisodeResult] = field(default_factory=list)

    def mean_score(self, task_id: str) -> float:
        return self.per_task[task_id]

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "per_task": self.per_task}, indent=2)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path


def run_episode(
    agent,
    world: ToyWorld,
    task: TaskSpec,
    variation_id: int,
    seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    goal_override: str | None = None,
) -> EpisodeResult:
    """One seeded episode; the oracle success predicate ends it early.

    goal_override feeds the agent a different instruction while scoring
    against the original variation (the language-ablation probe).
    """
    views, goal, state = world.reset(task, variation_id, seed)
    agent_goal = goal_override if goal_override is not None else goal
    if hasattr(agent, "begin_episode"):
        agent.begin_episode(agent_goal, state)
    termination = "step-limit"
    steps = 0
    for step_index in range(max_steps):
        obs = EnvObservation(
            views=views, gripper_open=state.gripper.open, step_index=step_index, max_steps=max_steps
        )
        action = agent.act(obs, agent_goal)
        outcome = world.step(task, state, action)
        state, views = outcome.state, outcome.views
        steps = step_index + 1
        if outcome.invalid:
            termination = "invalid-action"
            break
        if outcome.success:
            termination = "success"
            break
    score = 100 if termination == "success" else 0
    return EpisodeResult(
        score=score,
        steps_taken=steps,
        termination=termination,
        task_id=task.task_id,
        variation_id=variation_id,
    )


def evaluate(
    agent,
    world: ToyWorld,
    tasks: list[TaskSpec],
    episodes_per_task: int = DEFAULT_EPISODES_PER_TASK,
    max_steps: int = DEFAULT_MAX_STEPS,
    seed: int = 0,
    goal_swapper=None,
) -> EvalReport:
    """Score an agent over seeded episodes for every task.

    goal_swapper(task, variation_id, goal) -> str, when given, rewrites the
    instruction handed to the agent; scoring still uses the original goal.
    """
    report = EvalReport()
    for task_index, task in enumerate(tasks):
        for episode_index in range(episodes_per_task):
            rng = np.random.default_rng(np.random.SeedSequence([seed, task_index, episode_index]))
            variation_id = int(rng.integers(task.num_variations))
            episode_seed = int(rng.integers(2**31))
            override = None
            if goal_swapper is not None:
                override = goal_swapper(task, variation_id, task.goal(variation_id))
            report.episodes.append(
                run_episode(agent, world, task, variation_id, episode_seed, max_steps, override)
            )

    by_key: dict[tuple[str, int], list[EpisodeResult]] = {}
    for result in report.episodes:
        by_key.setdefault((result.task_id, result.variation_id), []).append(result)
    for (task_id, variation_id), results in sorted(by_key.items()):
        terminations: dict[str, int] = {}
        for r in results:
            terminations[r.termination] = terminations.get(r.termination, 0) + 1
        report.rows.append(
            {
                "task_id": task_id,
                "variation_id": variation_id,
                "episodes": len(results),
                "mean_score": float(np.mean([r.score for r in results])),
                "terminations": terminations,
            }
        )
    for task in tasks:
        scores = [r.score for r in report.episodes if r.task_id == task.task_id]
        if scores:
            report.per_task[task.task_id] = float(np.mean(scores))
    return report
