"""Scripted demonstrations: waypoint plans expanded into dense frames.

Waypoint poses are linearly interpolated; synthesized joint velocities
follow a sine bump per segment, so they are exactly zero at waypoint
arrival frames and stay well above the keyframe threshold in between.
Gripper toggles happen at arrival frames, where the world's grasp,
release, and press rules are applied.
"""

from __future__ import annotations

import numpy as np

from ..action_codec import ContinuousAction, DiscreteAction, discretize, num_rotation_bins
from ..demos import DemoEpisode, DemoFrame
from ..errors import InvalidInputError
from .scene import IDENTITY_QUAT, SceneState
from .tasks import TaskSpec, Waypoint
from .world import ToyWorld

NUM_JOINTS = 7
PEAK_JOINT_SPEED = 1.0  # rad/s at mid-segment
JOINT_SPEED_WEIGHTS = np.array([1.0, 0.9, 0.8, 0.7, 0.5, 0.35, 0.2])


def _segment_velocity(s: float) -> np.ndarray:
    return PEAK_JOINT_SPEED * np.sin(np.pi * s) * JOINT_SPEED_WEIGHTS


def scripted_expert(
    world: ToyWorld,
    task: TaskSpec,
    state: SceneState,
    frames_per_segment: int = 5,
) -> DemoEpisode:
    """Solve the task from `state`, recording a dense demonstration."""
    if frames_per_segment < 2:
        raise InvalidInputError("frames_per_segment must be >= 2")
    waypoints = task.expert_waypoints(state)
    frames = [
        DemoFrame(
            views=world.observe(state),
            gripper_pose=state.gripper.pose,
            gripper_open=state.gripper.open,
            joint_velocities=np.zeros(NUM_JOINTS),
            timestep=0,
        )
    ]
    collide_flags = [0]
    prev_pos = state.gripper.position.copy()
    prev_open = state.gripper.open
    timestep = 0
    for wp in waypoints:
        for i in range(1, frames_per_segment + 1):
            s = i / frames_per_segment
            pos = prev_pos + (wp.position - prev_pos) * s
            arrived = i == frames_per_segment
            open_bit = wp.open if arrived else prev_open
            state = world.apply_gripper(state, pos, IDENTITY_QUAT, open_bit)
            timestep += 1
            frames.append(
                DemoFrame(
                    views=world.observe(state),
                    gripper_pose=state.gripper.pose,
                    gripper_open=open_bit,
                    joint_velocities=np.zeros(NUM_JOINTS) if arrived else _segment_velocity(s),
                    timestep=timestep,
                )
            )
            collide_flags.append(wp.collide)
        prev_pos = wp.position.copy()
        prev_open = wp.open
    return DemoEpisode(
        frames=frames,
        language_goal=task.goal(state.variation_id),
        task_id=task.task_id,
        variation_id=state.variation_id,
        collide_flags=collide_flags,
    )


def generate_demo(
    world: ToyWorld, task: TaskSpec, variation_id: int, seed: int, frames_per_segment: int = 5
) -> DemoEpisode:
    """Reset plus scripted_expert in one call."""
    _, _, state = world.reset(task, variation_id, seed)
    return scripted_expert(world, task, state, frames_per_segment)


class ScriptedReplayAgent:
    """Replays the expert's waypoints as discretized actions.

    Plans from the privileged scene state at episode start; emits one
    action per waypoint, then repeats the last action.
    """

    def __init__(self, world: ToyWorld, task: TaskSpec):
        self.world = world
        self.task = task
        self._actions: list[DiscreteAction] = []

    def begin_episode(self, goal: str, state: SceneState | None = None) -> None:
        if state is None:
            raise InvalidInputError("replay agent needs the scene state to plan")
        waypoints = self.task.expert_waypoints(state)
        self._actions = [
            discretize(waypoint_action(wp), self.world.bounds, self.world.rotation_bin_deg)
            for wp in waypoints
        ]

    def act(self, observation, goal: str) -> DiscreteAction:
        index = min(observation.step_index, len(self._actions) - 1)
        return self._actions[index]


def waypoint_action(wp: Waypoint) -> ContinuousAction:
    return ContinuousAction(
        position=wp.position, quaternion=IDENTITY_QUAT, open=wp.open, collide=wp.collide
    )


class RandomActionAgent:
    """Uniform random discrete actions; the evaluation floor baseline."""

    def __init__(self, world: ToyWorld, seed: int = 0):
        self.world = world
        self.rng = np.random.default_rng(seed)
        self.num_bins = num_rotation_bins(world.rotation_bin_deg)

    def act(self, observation, goal: str) -> DiscreteAction:
        g = self.world.bounds.grid_size
        return DiscreteAction(
            trans_index=tuple(int(self.rng.integers(n)) for n in g),
            rot_indices=tuple(int(self.rng.integers(self.num_bins)) for _ in range(3)),
            open=int(self.rng.integers(2)),
            collide=int(self.rng.integers(2)),
        )
