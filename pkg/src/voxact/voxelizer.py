"""Multi-view RGB-D fusion into a 10-channel voxel grid.

Cameras are z-forward, x-right, y-down pinholes. A voxel grid cell holds,
in channel order: RGB normalized to [-1, 1], the world coordinates of the
point that landed there (meters), a 0/1 occupancy flag, and the voxel's
own grid coordinates normalized to [-1, 1]. When several points fall into
one voxel the last write wins, under the fixed ordering (view order, then
row-major pixel order), so fused grids are byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Channel layout of the fused grid.
CH_RGB = slice(0, 3)
CH_POINT = slice(3, 6)
CH_OCCUPANCY = 6
CH_POS_INDEX = slice(7, 10)
NUM_CHANNELS = 10

ROTATION_ORTHONORMAL_TOL = 1e-6


@dataclass(frozen=True)
class CameraView:
    """One calibrated RGB-D observation.

    rgb_image: (H, W, 3) color values in [0, 255].
    depth_image: (H, W) metric depth along the camera z axis, meters.
    intrinsics: 3x3 pinhole matrix.
    extrinsics: 4x4 camera-to-world rigid transform, meters.
    """

    rgb_image: np.ndarray
    depth_image: np.ndarray
    intrinsics: np.ndarray
    extrinsics: np.ndarray

    def validate(self) -> None:
        rgb = np.asarray(self.rgb_image)
        depth = np.asarray(self.depth_image)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise InvalidInputError(f"rgb_image must be (H, W, 3), got {rgb.shape}")
        if depth.shape != rgb.shape[:2]:
            raise InvalidInputError(
                f"depth_image shape {depth.shape} does not match rgb {rgb.shape[:2]}"
            )
        if not np.all(np.isfinite(depth)) or np.any(depth < 0):
            raise InvalidInputError("depth values must be finite and >= 0")
        K = np.asarray(self.intrinsics, dtype=np.float64)
        if K.shape != (3, 3) or K[0, 0] <= 0 or K[1, 1] <= 0:
            raise InvalidInputError("intrinsics must be 3x3 with positive focal lengths")
        T = np.asarray(self.extrinsics, dtype=np.float64)
        if T.shape != (4, 4):
            raise InvalidInputError("extrinsics must be 4x4")
        R = T[:3, :3]
        if np.linalg.norm(R.T @ R - np.eye(3)) >= ROTATION_ORTHONORMAL_TOL:
            raise InvalidInputError("extrinsics rotation block is not orthonormal")


@dataclass(frozen=True)
class WorkspaceBounds:
    """Axis-aligned workspace box partitioned into cubic voxels."""

    min_corner: np.ndarray
    max_corner: np.ndarray
    grid_size: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "min_corner", np.asarray(self.min_corner, dtype=np.float64))
        object.__setattr__(self, "max_corner", np.asarray(self.max_corner, dtype=np.float64))
        object.__setattr__(self, "grid_size", tuple(int(g) for g in self.grid_size))
        if len(self.grid_size) != 3 or any(g <= 0 for g in self.grid_size):
            raise InvalidInputError(f"grid_size must be 3 positive integers, got {self.grid_size}")
        extent = self.max_corner - self.min_corner
        if np.any(extent <= 0):
            raise InvalidInputError("max_corner must exceed min_corner on every axis")
        edges = extent / np.asarray(self.grid_size, dtype=np.float64)
        if not np.allclose(edges, edges[0], rtol=1e-9, atol=0.0):
            raise InvalidInputError(f"voxel edge length must be equal on all axes, got {edges}")

    @classmethod
    def cube(cls, side: float, grid: int, min_corner=(0.0, 0.0, 0.0)) -> "WorkspaceBounds":
        lo = np.asarray(min_corner, dtype=np.float64)
        return cls(lo, lo + side, (grid, grid, grid))

    @property
    def edge_length(self) -> float:
        return float((self.max_corner[0] - self.min_corner[0]) / self.grid_size[0])

    @property
    def center(self) -> np.ndarray:
        return (self.min_corner + self.max_corner) / 2.0


@dataclass
class VoxelGrid:
    """Fused observation: (H, W, D, 10) feature channels over the workspace."""

    channels: np.ndarray
    bounds: WorkspaceBounds

    @property
    def occupancy(self) -> np.ndarray:
        return self.channels[..., CH_OCCUPANCY]


def project_pointcloud(view: CameraView) -> tuple[np.ndarray, np.ndarray]:
    """Back-project one RGB-D view to world points.

    Returns (points, colors): (N, 3) world coordinates and (N, 3) raw
    [0, 255] colors, one row per pixel with depth > 0, in row-major pixel
    order. Zero-depth pixels (no return) are omitted.
    """
    view.validate()
    depth = np.asarray(view.depth_image, dtype=np.float64)
    rgb = np.asarray(view.rgb_image, dtype=np.float64)
    K = np.asarray(view.intrinsics, dtype=np.float64)
    T = np.asarray(view.extrinsics, dtype=np.float64)

    h, w = depth.shape
    vs, us = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    valid = depth.ravel() > 0
    u = us.ravel()[valid]
    v = vs.ravel()[valid]
    d = depth.ravel()[valid]

    fx, fy = K[0, 0], K[1, 1]
    cx, cy = K[0, 2], K[1, 2]
    pts_cam = np.stack([(u - cx) * d / fx, (v - cy) * d / fy, d], axis=1)
    points = pts_cam @ T[:3, :3].T + T[:3, 3]
    colors = rgb.reshape(-1, 3)[valid]
    return points, colors


def voxel_index_of(world_point: np.ndarray, bounds: WorkspaceBounds):
    """Voxel containing a point, or None when outside the workspace.

    Half-open voxels: floor((p - min) / edge), with the max corner
    exclusive, so interior boundaries belong to the higher-index voxel.
    """
    p = np.asarray(world_point, dtype=np.float64)
    if np.any(p < bounds.min_corner) or np.any(p >= bounds.max_corner):
        return None
    idx = np.floor((p - bounds.min_corner) / bounds.edge_length).astype(np.int64)
    # A point epsilon under max_corner can round up to the grid size.
    idx = np.minimum(idx, np.asarray(bounds.grid_size) - 1)
    return (int(idx[0]), int(idx[1]), int(idx[2]))


def voxel_indices_of(points: np.ndarray, bounds: WorkspaceBounds) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized voxel_index_of: returns ((N, 3) indices, (N,) in-bounds mask)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    inside = np.all(pts >= bounds.min_corner, axis=1) & np.all(pts < bounds.max_corner, axis=1)
    idx = np.floor((pts - bounds.min_corner) / bounds.edge_length).astype(np.int64)
    idx = np.minimum(idx, np.asarray(bounds.grid_size) - 1)
    return idx, inside


def normalized_position_indices(bounds: WorkspaceBounds) -> np.ndarray:
    """(H, W, D, 3) grid of each voxel's own coordinates mapped to [-1, 1]."""
    axes = []
    for n in bounds.grid_size:
        axes.append(np.zeros(1) if n == 1 else np.linspace(-1.0, 1.0, n))
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    return np.stack([gx, gy, gz], axis=-1)


def normalize_rgb(colors: np.ndarray) -> np.ndarray:
    """Affine map of [0, 255] color values to [-1, 1]."""
    return (np.asarray(colors, dtype=np.float64) / 255.0 - 0.5) * 2.0


def fuse_points(points: np.ndarray, colors: np.ndarray, bounds: WorkspaceBounds) -> VoxelGrid:
    """Scatter an ordered pointcloud into a fresh voxel grid (last write wins)."""
    h, w, d = bounds.grid_size
    channels = np.zeros((h, w, d, NUM_CHANNELS), dtype=np.float32)
    channels[..., CH_POS_INDEX] = normalized_position_indices(bounds)

    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts):
        idx, inside = voxel_indices_of(pts, bounds)
        idx = idx[inside]
        pts = pts[inside]
        cols = np.asarray(colors, dtype=np.float64).reshape(-1, 3)[inside]
        if len(idx):
            flat = np.ravel_multi_index((idx[:, 0], idx[:, 1], idx[:, 2]), (h, w, d))
            # Keep the last occurrence of each voxel: unique() on the
            # reversed array returns first occurrences, i.e. last writes.
            _, first_of_reversed = np.unique(flat[::-1], return_index=True)
            keep = len(flat) - 1 - first_of_reversed
            sel = idx[keep]
            channels[sel[:, 0], sel[:, 1], sel[:, 2], CH_RGB] = normalize_rgb(cols[keep])
            channels[sel[:, 0], sel[:, 1], sel[:, 2], CH_POINT] = pts[keep]
            channels[sel[:, 0], sel[:, 1], sel[:, 2], CH_OCCUPANCY] = 1.0
    return VoxelGrid(channels=channels, bounds=bounds)


def fuse(views: list[CameraView], bounds: WorkspaceBounds) -> VoxelGrid:
    """Fuse calibrated views into one voxel grid, in the fixed ordering."""
    if not views:
        raise InvalidInputError("fuse requires at least one view")
    all_points = []
    all_colors = []
    for view in views:
        pts, cols = project_pointcloud(view)
        all_points.append(pts)
        all_colors.append(cols)
    points = np.concatenate(all_points, axis=0) if all_points else np.zeros((0, 3))
    colors = np.concatenate(all_colors, axis=0) if all_colors else np.zeros((0, 3))
    return fuse_points(points, colors, bounds)


class VoxelGridFuser:
    """Stateless transformer-style wrapper over fuse().

    Implements the fit/transform surface so the fusion step composes with
    pipeline tooling; fit is a no-op.
    """

    def __init__(self, bounds: WorkspaceBounds):
        self.bounds = bounds

    def fit(self, X=None, y=None) -> "VoxelGridFuser":
        return self

    def transform(self, views: list[CameraView]) -> VoxelGrid:
        return fuse(views, self.bounds)

    def get_params(self, deep: bool = True) -> dict:
        return {"bounds": self.bounds}

    def set_params(self, **params) -> "VoxelGridFuser":
        for key, value in params.items():
            if not hasattr(self, key):
                raise InvalidInputError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self
