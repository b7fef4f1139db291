"""Demonstrations and their conversion to supervised training tuples.

A recorded episode is a dense sequence of frames. Keyframes are the frames
where the arm is momentarily at rest or the gripper state flips; every
earlier frame is paired with the next keyframe's discretized action, so an
episode of N frames yields up to N-1 training tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .action_codec import ContinuousAction, DiscreteAction, discretize
from .errors import InvalidInputError
from .voxelizer import CameraView, VoxelGrid, WorkspaceBounds, fuse_points, project_pointcloud

DEFAULT_VEL_EPSILON = 0.1  # rad/s; "near zero" threshold for keyframe extraction
FINGER_OPEN_POS = 0.04  # meters; parallel-gripper finger joint at full open
KEYFRAME_POSE_TOL = 1e-6


@dataclass
class DemoFrame:
    """One recorded timestep: observations plus robot state.

    gripper_pose is [x, y, z, qx, qy, qz, qw] in world frame.
    """

    views: list[CameraView]
    gripper_pose: np.ndarray
    gripper_open: int
    joint_velocities: np.ndarray
    timestep: int

    def __post_init__(self):
        self.gripper_pose = np.asarray(self.gripper_pose, dtype=np.float64)
        self.joint_velocities = np.asarray(self.joint_velocities, dtype=np.float64)
        self.gripper_open = int(self.gripper_open)
        self.timestep = int(self.timestep)

    def validate(self) -> None:
        if self.gripper_pose.shape != (7,):
            raise InvalidInputError("gripper_pose must be a 7-vector (position + quaternion)")
        qnorm = np.linalg.norm(self.gripper_pose[3:7])
        if abs(qnorm - 1.0) > 1e-6:
            raise InvalidInputError(f"gripper quaternion norm {qnorm} not within 1e-6 of 1")
        if self.timestep < 0:
            raise InvalidInputError("timestep must be >= 0")


@dataclass
class DemoEpisode:
    """A full demonstration with its language goal.

    collide_flags[i] records whether the motion segment ending at frame i
    used collision avoidance.
    """

    frames: list[DemoFrame]
    language_goal: str
    task_id: str
    variation_id: int = 0
    collide_flags: list[int] = field(default_factory=list)

    def validate(self) -> None:
        if len(self.frames) < 2:
            raise InvalidInputError("episode must contain at least 2 frames")
        if not self.language_goal:
            raise InvalidInputError("language_goal must be non-empty")
        if self.collide_flags and len(self.collide_flags) != len(self.frames):
            raise InvalidInputError("collide_flags length must match frame count")
        prev_t = -1
        for frame in self.frames:
            frame.validate()
            if frame.timestep <= prev_t:
                raise InvalidInputError("frame timesteps must be strictly increasing")
            prev_t = frame.timestep

    def collide_flag(self, frame_index: int) -> int:
        if not self.collide_flags:
            return 0
        return int(self.collide_flags[frame_index])


@dataclass
class TrainingTuple:
    """One supervised example: fused observation, goal, next-keyframe target.

    points/colors keep the raw fused pointcloud so augmentation can
    re-voxelize after a rigid perturbation.
    """

    voxel_obs: VoxelGrid
    proprio: np.ndarray
    language_goal: str
    target: DiscreteAction
    task_id: str
    points: np.ndarray | None = None
    colors: np.ndarray | None = None


def extract_keyframes(episode: DemoEpisode, vel_epsilon: float = DEFAULT_VEL_EPSILON) -> list[int]:
    """Frame indices selected as supervision targets.

    Frame i >= 1 qualifies when the arm is stopped (max |joint velocity|
    below vel_epsilon) with an unchanged gripper state, or whenever the
    gripper state flips. The final frame is appended if missing, then runs
    of keyframes with identical pose (within 1e-6) and the same open bit
    collapse to their first member.
    """
    episode.validate()
    frames = episode.frames
    keyframes: list[int] = []
    for i in range(1, len(frames)):
        changed = frames[i].gripper_open != frames[i - 1].gripper_open
        stopped = float(np.max(np.abs(frames[i].joint_velocities))) < vel_epsilon
        if changed or stopped:
            keyframes.append(i)
    last = len(frames) - 1
    if not keyframes or keyframes[-1] != last:
        keyframes.append(last)

    collapsed: list[int] = []
    for k in keyframes:
        if collapsed:
            prev = frames[collapsed[-1]]
            cur = frames[k]
            same_pose = np.max(np.abs(prev.gripper_pose - cur.gripper_pose)) <= KEYFRAME_POSE_TOL
            if same_pose and prev.gripper_open == cur.gripper_open:
                continue
        collapsed.append(k)
    return collapsed


def frame_proprio(frame: DemoFrame, frame_index: int, num_frames: int) -> np.ndarray:
    """4 scalars: open bit, two finger positions, normalized timestep.

    Finger joint positions are derived from the open bit (FINGER_OPEN_POS
    when open, 0 when closed); the demo schema does not record them.
    """
    finger = FINGER_OPEN_POS * frame.gripper_open
    t_norm = frame_index / (num_frames - 1) if num_frames > 1 else 0.0
    return np.array([frame.gripper_open, finger, finger, t_norm], dtype=np.float64)


def keyframe_action(episode: DemoEpisode, frame_index: int) -> ContinuousAction:
    """Continuous action recorded at a keyframe."""
    frame = episode.frames[frame_index]
    return ContinuousAction(
        position=frame.gripper_pose[:3],
        quaternion=frame.gripper_pose[3:7],
        open=frame.gripper_open,
        collide=episode.collide_flag(frame_index),
    )


@dataclass
class TupleRecord:
    """TrainingTuple minus the fused grid; holds the raw pointcloud instead.

    Materializing the grid lazily keeps large datasets in memory as points
    rather than dense voxel arrays; fuse_points over the recorded points
    reproduces exactly what fuse() over the frame's views would build.
    """

    proprio: np.ndarray
    language_goal: str
    target: DiscreteAction
    task_id: str
    points: np.ndarray
    colors: np.ndarray

    def materialize(self, bounds: WorkspaceBounds) -> TrainingTuple:
        return TrainingTuple(
            voxel_obs=fuse_points(self.points, self.colors, bounds),
            proprio=self.proprio,
            language_goal=self.language_goal,
            target=self.target,
            task_id=self.task_id,
            points=self.points,
            colors=self.colors,
        )


def iter_tuple_records(
    episode: DemoEpisode,
    keyframes: list[int],
    bounds: WorkspaceBounds,
    bin_deg: float,
):
    """Pair every frame before the last keyframe with its next keyframe action."""
    episode.validate()
    if not keyframes:
        raise InvalidInputError("keyframe list must be non-empty")
    if sorted(keyframes) != list(keyframes):
        raise InvalidInputError("keyframes must be sorted")
    n = len(episode.frames)
    if any(k < 0 or k >= n for k in keyframes):
        raise InvalidInputError(f"keyframes {keyframes} not a subset of frame indices [0, {n})")

    kf_pos = 0
    for t in range(keyframes[-1]):
        while keyframes[kf_pos] <= t:
            kf_pos += 1
        k = keyframes[kf_pos]
        target = discretize(keyframe_action(episode, k), bounds, bin_deg)
        frame = episode.frames[t]
        points_parts = []
        colors_parts = []
        for view in frame.views:
            pts, cols = project_pointcloud(view)
            points_parts.append(pts)
            colors_parts.append(cols)
        points = np.concatenate(points_parts, axis=0) if points_parts else np.zeros((0, 3))
        colors = np.concatenate(colors_parts, axis=0) if colors_parts else np.zeros((0, 3))
        yield TupleRecord(
            proprio=frame_proprio(frame, t, n),
            language_goal=episode.language_goal,
            target=target,
            task_id=episode.task_id,
            points=points,
            colors=colors,
        )


def make_training_tuples(
    episode: DemoEpisode,
    keyframes: list[int],
    bounds: WorkspaceBounds,
    bin_deg: float,
) -> list[TrainingTuple]:
    """Build fully materialized training tuples for an episode."""
    return [rec.materialize(bounds) for rec in iter_tuple_records(episode, keyframes, bounds, bin_deg)]
