"""Discretization of 6-DoF gripper actions and argmax action selection.

Translation becomes the index of the containing voxel. Orientation is
converted to extrinsic X-Y-Z Euler angles in [0, 360) and binned with a
floor rule over half-open intervals; decoding returns bin centers, so the
worst-case angular error is half a bin. Open and collide stay binary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, OutOfBoundsError
from .geometry import euler_xyz_from_quat, normalize_quat, quat_from_euler_xyz
from .voxelizer import WorkspaceBounds, voxel_index_of


@dataclass(frozen=True)
class ContinuousAction:
    """World-frame gripper target: fingers-center position, orientation, bits."""

    position: np.ndarray
    quaternion: np.ndarray
    open: int
    collide: int

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "quaternion", normalize_quat(self.quaternion))
        if not np.all(np.isfinite(self.position)):
            raise InvalidInputError("action position must be finite")


@dataclass(frozen=True)
class DiscreteAction:
    trans_index: tuple[int, int, int]
    rot_indices: tuple[int, int, int]
    open: int
    collide: int


@dataclass(frozen=True)
class QPrediction:
    """Per-head action values: (H, W, D) translation grid, (bins, 3) rotation
    logits, and 2-class open/collide logits."""

    q_trans: np.ndarray
    q_rot: np.ndarray
    q_open: np.ndarray
    q_collide: np.ndarray


@dataclass(frozen=True)
class OneHotLabels:
    y_trans: np.ndarray
    y_rot: np.ndarray
    y_open: np.ndarray
    y_collide: np.ndarray


def num_rotation_bins(bin_deg: float) -> int:
    bins = 360.0 / bin_deg
    if abs(bins - round(bins)) > 1e-9:
        raise InvalidInputError(f"rotation bin width {bin_deg} must divide 360")
    return int(round(bins))


def rotation_bins_from_quat(quat: np.ndarray, bin_deg: float) -> tuple[int, int, int]:
    bins = num_rotation_bins(bin_deg)
    angles = euler_xyz_from_quat(quat)
    idx = np.floor(angles / bin_deg).astype(np.int64)
    idx = np.minimum(idx, bins - 1)
    return (int(idx[0]), int(idx[1]), int(idx[2]))


def discretize(action: ContinuousAction, bounds: WorkspaceBounds, bin_deg: float) -> DiscreteAction:
    """Encode a continuous action as classification targets."""
    trans = voxel_index_of(action.position, bounds)
    if trans is None:
        raise OutOfBoundsError(f"action position {action.position} outside workspace")
    return DiscreteAction(
        trans_index=trans,
        rot_indices=rotation_bins_from_quat(action.quaternion, bin_deg),
        open=int(action.open),
        collide=int(action.collide),
    )


def undiscretize(d: DiscreteAction, bounds: WorkspaceBounds, bin_deg: float) -> ContinuousAction:
    """Decode to the voxel center and rotation bin centers."""
    bins = num_rotation_bins(bin_deg)
    idx = np.asarray(d.trans_index, dtype=np.float64)
    if np.any(idx < 0) or np.any(idx >= np.asarray(bounds.grid_size)):
        raise InvalidInputError(f"trans_index {d.trans_index} outside grid {bounds.grid_size}")
    if any(r < 0 or r >= bins for r in d.rot_indices):
        raise InvalidInputError(f"rot_indices {d.rot_indices} outside [0, {bins})")
    position = bounds.min_corner + (idx + 0.5) * bounds.edge_length
    angles = (np.asarray(d.rot_indices, dtype=np.float64) + 0.5) * bin_deg
    return ContinuousAction(
        position=position,
        quaternion=quat_from_euler_xyz(angles),
        open=int(d.open),
        collide=int(d.collide),
    )


def encode_labels(d: DiscreteAction, bounds: WorkspaceBounds, bin_deg: float) -> OneHotLabels:
    """One-hot targets for the four classification heads."""
    bins = num_rotation_bins(bin_deg)
    y_trans = np.zeros(bounds.grid_size, dtype=np.float32)
    y_trans[d.trans_index] = 1.0
    y_rot = np.zeros((bins, 3), dtype=np.float32)
    for axis, r in enumerate(d.rot_indices):
        y_rot[r, axis] = 1.0
    y_open = np.zeros(2, dtype=np.float32)
    y_open[d.open] = 1.0
    y_collide = np.zeros(2, dtype=np.float32)
    y_collide[d.collide] = 1.0
    return OneHotLabels(y_trans=y_trans, y_rot=y_rot, y_open=y_open, y_collide=y_collide)


def select_best_action(q: QPrediction) -> DiscreteAction:
    """Argmax over every head; ties go to the lowest flattened row-major index."""
    for name in ("q_trans", "q_rot", "q_open", "q_collide"):
        if not np.all(np.isfinite(getattr(q, name))):
            raise InvalidInputError(f"{name} contains non-finite values")
    trans = np.unravel_index(int(np.argmax(q.q_trans)), q.q_trans.shape)
    rot = tuple(int(np.argmax(q.q_rot[:, axis])) for axis in range(3))
    return DiscreteAction(
        trans_index=(int(trans[0]), int(trans[1]), int(trans[2])),
        rot_indices=rot,
        open=int(np.argmax(q.q_open)),
        collide=int(np.argmax(q.q_collide)),
    )
