"""Scene description for the scripted tabletop world.

All geometry is axis-aligned: blocks, pads, and slots are boxes; buttons
are vertical cylinders. Positions are object centers in world meters.
The 20-name color palette maps names to fixed RGB values chosen to stay
mutually distinguishable after the [-1, 1] color normalization.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

# name -> RGB in [0, 255]
PALETTE: dict[str, tuple[int, int, int]] = {
    "red": (255, 0, 0),
    "maroon": (128, 0, 0),
    "lime": (0, 255, 0),
    "green": (0, 128, 0),
    "blue": (0, 0, 255),
    "navy": (0, 0, 128),
    "yellow": (255, 255, 0),
    "cyan": (0, 255, 255),
    "magenta": (255, 0, 255),
    "silver": (192, 192, 192),
    "gray": (128, 128, 128),
    "orange": (255, 165, 0),
    "olive": (128, 128, 0),
    "purple": (128, 0, 128),
    "teal": (0, 128, 128),
    "azure": (0, 128, 255),
    "violet": (238, 130, 238),
    "rose": (255, 0, 128),
    "black": (0, 0, 0),
    "white": (255, 255, 255),
}
PALETTE_NAMES = list(PALETTE)

TABLE_COLOR = (205, 170, 125)
GRIPPER_COLOR = (139, 69, 19)

TABLE_TOP = 0.05  # table surface height (m); the table slab fills z in [0, TABLE_TOP]
GRIPPER_HOME = np.array([0.5, 0.5, 0.45])
IDENTITY_QUAT = np.array([0.0, 0.0, 0.0, 1.0])

BLOCK_SIZE = 0.06
BUTTON_DIAMETER = 0.09
BUTTON_HEIGHT = 0.03
SLOT_SIZE = (0.12, 0.12, 0.02)


@dataclass
class SceneObject:
    object_id: str
    shape: str  # block | button | target_pad | slot
    color_name: str
    position: np.ndarray  # center, world meters
    size: np.ndarray  # full extents; cylinders use (diameter, diameter, height)
    pressed: bool = False

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.size = np.asarray(self.size, dtype=np.float64)

    @property
    def movable(self) -> bool:
        return self.shape == "block"

    @property
    def top_z(self) -> float:
        return float(self.position[2] + self.size[2] / 2.0)

    @property
    def top_center(self) -> np.ndarray:
        return self.position + np.array([0.0, 0.0, self.size[2] / 2.0])

    @property
    def rgb(self) -> tuple[int, int, int]:
        return PALETTE[self.color_name]


@dataclass
class GripperState:
    position: np.ndarray
    quaternion: np.ndarray
    open: int = 1
    held_object: str | None = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.quaternion = np.asarray(self.quaternion, dtype=np.float64)

    @property
    def pose(self) -> np.ndarray:
        return np.concatenate([self.position, self.quaternion])


@dataclass
class SceneState:
    objects: list[SceneObject]
    gripper: GripperState
    rng_seed: int
    task_id: str = ""
    variation_id: int = 0

    def copy(self) -> "SceneState":
        return copy.deepcopy(self)

    def find(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise KeyError(object_id)


def home_gripper() -> GripperState:
    return GripperState(position=GRIPPER_HOME.copy(), quaternion=IDENTITY_QUAT.copy(), open=1)
