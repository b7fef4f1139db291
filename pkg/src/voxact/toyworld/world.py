"""World dynamics: seeded resets, teleport execution, grasp/press/settle rules.

The world has no physics: executing a discrete action places the gripper
at the decoded pose. Closing the gripper grasps the nearest movable object
within grasp_radius (boundary inclusive); opening releases the held object,
which settles straight down onto the highest overlapping support or the
table. Buttons within press_radius of the closed fingers become pressed.
Evolution is a pure function of (state, action); states are never mutated
in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..action_codec import DiscreteAction, undiscretize
from ..errors import VoxactError
from ..voxelizer import CameraView, WorkspaceBounds
from .render import default_cameras, render_views
from .scene import BLOCK_SIZE, TABLE_TOP, SceneObject, SceneState, home_gripper
from .tasks import PlacementError, TaskSpec

DEFAULT_GRID_SIZE = 32
DEFAULT_CAMERA_RESOLUTION = 64
RADIUS_IN_VOXEL_EDGES = 1.5
MAX_LAYOUT_RETRIES = 20


@dataclass
class StepOutcome:
    state: SceneState
    views: list[CameraView]
    done: bool
    success: bool
    invalid: bool


class ToyWorld:
    def __init__(
        self,
        grid_size: int = DEFAULT_GRID_SIZE,
        camera_resolution: int = DEFAULT_CAMERA_RESOLUTION,
        bounds: WorkspaceBounds | None = None,
        rotation_bin_deg: float = 5.0,
        grasp_radius: float | None = None,
        press_radius: float | None = None,
    ):
        self.bounds = bounds if bounds is not None else WorkspaceBounds.cube(1.0, grid_size)
        self.rotation_bin_deg = rotation_bin_deg
        edge = self.bounds.edge_length
        self.grasp_radius = grasp_radius if grasp_radius is not None else RADIUS_IN_VOXEL_EDGES * edge
        self.press_radius = press_radius if press_radius is not None else RADIUS_IN_VOXEL_EDGES * edge
        self.camera_resolution = camera_resolution
        self.cameras = default_cameras(camera_resolution)

    def observe(self, state: SceneState) -> list[CameraView]:
        return render_views(state, self.cameras, self.camera_resolution)

    def reset(self, task: TaskSpec, variation_id: int, seed: int):
        """Seeded scene layout; returns (views, language goal, state)."""
        for retry in range(MAX_LAYOUT_RETRIES):
            rng = np.random.default_rng(np.random.SeedSequence([seed, retry]))
            try:
                objects = task.build_objects(variation_id, rng)
                break
            except PlacementError:
                continue
        else:
            raise PlacementError(f"no feasible layout for {task.task_id} with seed {seed}")
        state = SceneState(
            objects=objects,
            gripper=home_gripper(),
            rng_seed=seed,
            task_id=task.task_id,
            variation_id=variation_id,
        )
        return self.observe(state), task.goal(variation_id), state

    def _settle(self, state: SceneState, obj: SceneObject) -> None:
        """Drop an object straight down onto its highest overlapping support."""
        rest_top = TABLE_TOP
        for other in state.objects:
            if other.object_id == obj.object_id or other.object_id == state.gripper.held_object:
                continue
            span = (other.size[:2] + obj.size[:2]) / 2.0
            overlap = np.all(np.abs(obj.position[:2] - other.position[:2]) < span)
            below = other.top_z <= obj.position[2] + obj.size[2] / 2.0 + 0.02
            if overlap and below and other.top_z > rest_top:
                rest_top = other.top_z
        obj.position[2] = rest_top + obj.size[2] / 2.0

    def apply_gripper(
        self, state: SceneState, position: np.ndarray, quaternion: np.ndarray, open_bit: int
    ) -> SceneState:
        """Teleport the fingers center and apply grasp/release/press rules."""
        s = state.copy()
        prev_open = s.gripper.open
        s.gripper.position = np.asarray(position, dtype=np.float64).copy()
        s.gripper.quaternion = np.asarray(quaternion, dtype=np.float64).copy()
        if s.gripper.held_object is not None:
            s.find(s.gripper.held_object).position = s.gripper.position.copy()

        if prev_open == 1 and open_bit == 0 and s.gripper.held_object is None:
            nearest = None
            nearest_dist = np.inf
            for obj in s.objects:
                if not obj.movable:
                    continue
                dist = float(np.linalg.norm(obj.position - s.gripper.position))
                if dist <= self.grasp_radius and dist < nearest_dist:
                    nearest, nearest_dist = obj, dist
            if nearest is not None:
                s.gripper.held_object = nearest.object_id
                nearest.position = s.gripper.position.copy()
        elif prev_open == 0 and open_bit == 1 and s.gripper.held_object is not None:
            released = s.find(s.gripper.held_object)
            s.gripper.held_object = None
            self._settle(s, released)
        s.gripper.open = int(open_bit)

        if s.gripper.open == 0:
            for obj in s.objects:
                if obj.shape == "button" and not obj.pressed:
                    dist = float(np.linalg.norm(obj.top_center - s.gripper.position))
                    if dist <= self.press_radius:
                        obj.pressed = True
        return s

    def step(self, task: TaskSpec, state: SceneState, action: DiscreteAction) -> StepOutcome:
        """Execute one discrete action; done on success or invalid action."""
        try:
            cont = undiscretize(action, self.bounds, self.rotation_bin_deg)
        except VoxactError:
            return StepOutcome(state, self.observe(state), done=True, success=False, invalid=True)
        new_state = self.apply_gripper(state, cont.position, cont.quaternion, cont.open)
        success = task.success(new_state)
        return StepOutcome(new_state, self.observe(new_state), done=success, success=success, invalid=False)
