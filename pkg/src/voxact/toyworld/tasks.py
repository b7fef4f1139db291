"""The three scripted tasks: press a button, stack a block, fill a slot.

A task owns its variation list, language template, scene builder, success
predicate, and expert waypoints. Success is a function of the scene state
alone. Every variation instantiates a unique goal string.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .scene import (
    BLOCK_SIZE,
    BUTTON_DIAMETER,
    BUTTON_HEIGHT,
    PALETTE_NAMES,
    SLOT_SIZE,
    TABLE_TOP,
    SceneObject,
    SceneState,
)

# Object centers stay this far apart so a half-voxel discretization error
# can never grasp or press the wrong object.
MIN_SEPARATION = 0.16
PLACEMENT_REGION = ((0.18, 0.18), (0.82, 0.82))  # (x, y) low/high corners
APPROACH_HEIGHT = 0.14
LIFT_HEIGHT = 0.30

STACK_XY_TOL = 0.03
REST_Z_TOL = 2e-3


@dataclass(frozen=True)
class Waypoint:
    position: np.ndarray
    open: int
    collide: int  # 1 when the segment reaching this pose used collision avoidance


class PlacementError(RuntimeError):
    pass


def _sample_position(rng: np.random.Generator, placed: list[np.ndarray], z: float) -> np.ndarray:
    (x0, y0), (x1, y1) = PLACEMENT_REGION
    for _ in range(100):
        pos = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1), z])
        if all(np.linalg.norm(pos[:2] - other[:2]) >= MIN_SEPARATION for other in placed):
            return pos
    raise PlacementError("could not place object after 100 rejection samples")


class TaskSpec:
    """Base: subclasses fill variations, template, scene, predicate, expert."""

    task_id: str = ""
    language_template: str = ""

    def __init__(self, variations: list):
        if not variations:
            raise InvalidInputError("task needs at least one variation")
        self.variations = list(variations)

    @property
    def num_variations(self) -> int:
        return len(self.variations)

    def goal(self, variation_id: int) -> str:
        raise NotImplementedError

    def build_objects(self, variation_id: int, rng: np.random.Generator) -> list[SceneObject]:
        raise NotImplementedError

    def success(self, state: SceneState) -> bool:
        raise NotImplementedError

    def expert_waypoints(self, state: SceneState) -> list[Waypoint]:
        raise NotImplementedError

    def _check_variation(self, variation_id: int) -> None:
        if not 0 <= variation_id < self.num_variations:
            raise InvalidInputError(
                f"variation {variation_id} invalid for {self.task_id} "
                f"({self.num_variations} variations)"
            )


def _distractor_colors(
    rng: np.random.Generator, pool: list[str], exclude: list[str], count: int
) -> list[str]:
    candidates = [c for c in pool if c not in exclude]
    if not candidates:
        return []
    count = min(count, len(candidates))
    picks = rng.choice(len(candidates), size=count, replace=False)
    return [candidates[int(i)] for i in picks]


class PressButtonTask(TaskSpec):
    """Push the button of the named color; the scene shows distractors."""

    task_id = "press_button"
    language_template = "push the {color} button"

    def __init__(self, colors: list[str] | None = None, num_buttons: int = 3):
        super().__init__(colors if colors is not None else list(PALETTE_NAMES))
        self.num_buttons = num_buttons

    def goal(self, variation_id: int) -> str:
        self._check_variation(variation_id)
        return self.language_template.format(color=self.variations[variation_id])

    def build_objects(self, variation_id, rng):
        self._check_variation(variation_id)
        target = self.variations[variation_id]
        colors = [target] + _distractor_colors(rng, self.variations, [target], self.num_buttons - 1)
        z = TABLE_TOP + BUTTON_HEIGHT / 2.0
        placed: list[np.ndarray] = []
        objects = []
        order = rng.permutation(len(colors))
        for rank, idx in enumerate(order):
            pos = _sample_position(rng, placed, z)
            placed.append(pos)
            objects.append(
                SceneObject(
                    object_id=f"button_{rank}",
                    shape="button",
                    color_name=colors[int(idx)],
                    position=pos,
                    size=np.array([BUTTON_DIAMETER, BUTTON_DIAMETER, BUTTON_HEIGHT]),
                )
            )
        return objects

    def _target(self, state: SceneState) -> SceneObject:
        color = self.variations[state.variation_id]
        for obj in state.objects:
            if obj.shape == "button" and obj.color_name == color:
                return obj
        raise InvalidInputError(f"scene has no {color} button")

    def success(self, state: SceneState) -> bool:
        return self._target(state).pressed

    def expert_waypoints(self, state: SceneState) -> list[Waypoint]:
        top = self._target(state).top_center
        return [
            Waypoint(top + [0.0, 0.0, APPROACH_HEIGHT], open=0, collide=1),
            Waypoint(top + [0.0, 0.0, 0.005], open=0, collide=0),
        ]


class StackBlockTask(TaskSpec):
    """Stack the first named block on the second; one distractor block."""

    task_id = "stack_block"
    language_template = "stack the {top} block on the {base} block"

    def __init__(self, colors: list[str] | None = None):
        pool = colors if colors is not None else PALETTE_NAMES[:4]
        pairs = [(a, b) for a in pool for b in pool if a != b]
        super().__init__(pairs)
        self.color_pool = list(pool)

    def goal(self, variation_id: int) -> str:
        self._check_variation(variation_id)
        top, base = self.variations[variation_id]
        return self.language_template.format(top=top, base=base)

    def build_objects(self, variation_id, rng):
        self._check_variation(variation_id)
        top, base = self.variations[variation_id]
        colors = [top, base] + _distractor_colors(rng, self.color_pool, [top, base], 1)
        z = TABLE_TOP + BLOCK_SIZE / 2.0
        placed: list[np.ndarray] = []
        objects = []
        for i, color in enumerate(colors):
            pos = _sample_position(rng, placed, z)
            placed.append(pos)
            objects.append(
                SceneObject(
                    object_id=f"block_{i}",
                    shape="block",
                    color_name=color,
                    position=pos,
                    size=np.full(3, BLOCK_SIZE),
                )
            )
        return objects

    def _blocks(self, state: SceneState) -> tuple[SceneObject, SceneObject]:
        top_color, base_color = self.variations[state.variation_id]
        top = base = None
        for obj in state.objects:
            if obj.shape != "block":
                continue
            if obj.color_name == top_color:
                top = obj
            elif obj.color_name == base_color:
                base = obj
        if top is None or base is None:
            raise InvalidInputError("scene is missing the goal blocks")
        return top, base

    def success(self, state: SceneState) -> bool:
        top, base = self._blocks(state)
        if state.gripper.held_object == top.object_id:
            return False
        xy_ok = np.all(np.abs(top.position[:2] - base.position[:2]) <= STACK_XY_TOL)
        z_ok = abs(top.position[2] - (base.top_z + BLOCK_SIZE / 2.0)) <= REST_Z_TOL
        return bool(xy_ok and z_ok)

    def expert_waypoints(self, state: SceneState) -> list[Waypoint]:
        top, base = self._blocks(state)
        grasp = top.position
        place = base.top_center + [0.0, 0.0, BLOCK_SIZE / 2.0]
        return [
            Waypoint(grasp + [0.0, 0.0, APPROACH_HEIGHT], open=1, collide=1),
            Waypoint(grasp.copy(), open=0, collide=0),
            Waypoint(grasp + [0.0, 0.0, LIFT_HEIGHT], open=0, collide=1),
            Waypoint(place + [0.0, 0.0, APPROACH_HEIGHT], open=0, collide=1),
            Waypoint(place + [0.0, 0.0, 0.002], open=1, collide=0),
            Waypoint(place + [0.0, 0.0, LIFT_HEIGHT], open=1, collide=1),
        ]


class PutInSlotTask(TaskSpec):
    """Drop the cube onto the named slot pad (left, middle, or right)."""

    task_id = "put_in_slot"
    language_template = "put the cube in the {slot} slot"
    SLOT_NAMES = ["left", "middle", "right"]

    def __init__(self, block_colors: list[str] | None = None):
        super().__init__(list(self.SLOT_NAMES))
        self.block_colors = block_colors if block_colors is not None else ["red", "blue", "lime"]

    def goal(self, variation_id: int) -> str:
        self._check_variation(variation_id)
        return self.language_template.format(slot=self.variations[variation_id])

    def build_objects(self, variation_id, rng):
        self._check_variation(variation_id)
        slot_z = TABLE_TOP + SLOT_SIZE[2] / 2.0
        xs = np.array([0.25, 0.5, 0.75]) + rng.uniform(-0.04, 0.04, size=3)
        y = 0.7 + rng.uniform(-0.05, 0.05)
        objects = []
        for name, x in zip(self.SLOT_NAMES, np.sort(xs)):
            objects.append(
                SceneObject(
                    object_id=f"slot_{name}",
                    shape="slot",
                    color_name="gray",
                    position=np.array([x, y, slot_z]),
                    size=np.asarray(SLOT_SIZE),
                )
            )
        block_color = self.block_colors[int(rng.integers(len(self.block_colors)))]
        block_pos = np.array(
            [rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.42), TABLE_TOP + BLOCK_SIZE / 2.0]
        )
        objects.append(
            SceneObject(
                object_id="block_0",
                shape="block",
                color_name=block_color,
                position=block_pos,
                size=np.full(3, BLOCK_SIZE),
            )
        )
        return objects

    def _slot(self, state: SceneState) -> SceneObject:
        return state.find(f"slot_{self.variations[state.variation_id]}")

    def success(self, state: SceneState) -> bool:
        slot = self._slot(state)
        block = state.find("block_0")
        if state.gripper.held_object == block.object_id:
            return False
        xy_ok = np.all(np.abs(block.position[:2] - slot.position[:2]) <= np.asarray(SLOT_SIZE[:2]) / 2.0)
        z_ok = abs(block.position[2] - (slot.top_z + BLOCK_SIZE / 2.0)) <= REST_Z_TOL
        return bool(xy_ok and z_ok)

    def expert_waypoints(self, state: SceneState) -> list[Waypoint]:
        block = state.find("block_0")
        slot = self._slot(state)
        grasp = block.position
        place = slot.top_center + [0.0, 0.0, BLOCK_SIZE / 2.0]
        return [
            Waypoint(grasp + [0.0, 0.0, APPROACH_HEIGHT], open=1, collide=1),
            Waypoint(grasp.copy(), open=0, collide=0),
            Waypoint(grasp + [0.0, 0.0, LIFT_HEIGHT], open=0, collide=1),
            Waypoint(place + [0.0, 0.0, APPROACH_HEIGHT], open=0, collide=1),
            Waypoint(place + [0.0, 0.0, 0.002], open=1, collide=0),
            Waypoint(place + [0.0, 0.0, LIFT_HEIGHT], open=1, collide=1),
        ]


def make_task(task_id: str, **kwargs) -> TaskSpec:
    registry = {
        "press_button": PressButtonTask,
        "stack_block": StackBlockTask,
        "put_in_slot": PutInSlotTask,
    }
    if task_id not in registry:
        raise InvalidInputError(f"unknown task {task_id!r}; choose from {sorted(registry)}")
    return registry[task_id](**kwargs)
