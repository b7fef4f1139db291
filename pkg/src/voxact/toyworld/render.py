"""Analytic RGB-D rendering by ray-primitive intersection.

Each pixel casts a ray through the pinhole model used everywhere else
(z-forward, x-right, y-down). Because ray directions are parameterized
with camera-z equal to 1, the intersection parameter t is directly the
planar depth stored in the depth image; back-projection therefore
reproduces surface points to floating-point precision. Pixels that hit
nothing get depth 0 (no return).
"""

from __future__ import annotations

import numpy as np

from ..geometry import look_at_extrinsics
from ..voxelizer import CameraView
from .scene import GRIPPER_COLOR, TABLE_COLOR, TABLE_TOP, SceneState


def default_cameras(resolution: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Front and overhead pinholes covering the unit workspace."""
    fx = fy = float(resolution)
    c = resolution / 2.0
    intrinsics = np.array([[fx, 0.0, c], [0.0, fy, c], [0.0, 0.0, 1.0]])
    front = look_at_extrinsics(eye=(0.5, -0.75, 0.65), target=(0.5, 0.5, 0.1))
    overhead = look_at_extrinsics(eye=(0.5, 0.5, 1.35), target=(0.5, 0.5, 0.0))
    return [(intrinsics.copy(), front), (intrinsics.copy(), overhead)]


def _ray_grid(intrinsics: np.ndarray, extrinsics: np.ndarray, resolution: int):
    """World-space origins and directions; directions have camera-z = 1."""
    c = intrinsics
    vs, us = np.meshgrid(np.arange(resolution), np.arange(resolution), indexing="ij")
    dirs_cam = np.stack(
        [(us - c[0, 2]) / c[0, 0], (vs - c[1, 2]) / c[1, 1], np.ones_like(us, dtype=np.float64)],
        axis=-1,
    ).reshape(-1, 3)
    dirs_world = dirs_cam @ extrinsics[:3, :3].T
    origin = extrinsics[:3, 3]
    return origin, dirs_world


def _intersect_box(origin, dirs, lo, hi) -> np.ndarray:
    """Smallest positive t per ray for an axis-aligned box; inf when missed."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - origin) / dirs
        t2 = (hi - origin) / dirs
    near = np.nanmin(np.stack([t1, t2]), axis=0).max(axis=1)
    far = np.nanmax(np.stack([t1, t2]), axis=0).min(axis=1)
    t = np.where((far >= near) & (far > 0), np.where(near > 0, near, far), np.inf)
    return t


def _intersect_cylinder(origin, dirs, center_xy, radius, z0, z1) -> np.ndarray:
    """Smallest positive t per ray for a vertical cylinder with caps."""
    ox, oy, oz = origin
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    px, py = ox - center_xy[0], oy - center_xy[1]

    best = np.full(len(dirs), np.inf)
    a = dx**2 + dy**2
    b = 2 * (px * dx + py * dy)
    c = px**2 + py**2 - radius**2
    disc = b**2 - 4 * a * c
    ok = (disc >= 0) & (a > 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    for sign in (-1.0, 1.0):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(ok, (-b + sign * sq) / (2 * a), np.inf)
        z = oz + t * dz
        hit = ok & (t > 0) & (z >= z0) & (z <= z1)
        best = np.where(hit & (t < best), t, best)
    for z_plane in (z0, z1):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dz != 0, (z_plane - oz) / dz, np.inf)
        x = ox + t * dx - center_xy[0]
        y = oy + t * dy - center_xy[1]
        hit = (t > 0) & (x**2 + y**2 <= radius**2)
        best = np.where(hit & (t < best), t, best)
    return best


def _scene_primitives(state: SceneState) -> list[tuple[str, tuple, tuple[int, int, int]]]:
    prims: list[tuple[str, tuple, tuple[int, int, int]]] = [
        ("box", (np.array([0.0, 0.0, 0.0]), np.array([1.0, 1.0, TABLE_TOP])), TABLE_COLOR)
    ]
    for obj in state.objects:
        if obj.shape == "button":
            prims.append(
                (
                    "cylinder",
                    (
                        obj.position[:2],
                        obj.size[0] / 2.0,
                        obj.position[2] - obj.size[2] / 2.0,
                        obj.position[2] + obj.size[2] / 2.0,
                    ),
                    obj.rgb,
                )
            )
        else:
            half = obj.size / 2.0
            prims.append(("box", (obj.position - half, obj.position + half), obj.rgb))
    # Two finger boxes; spacing tracks the open bit. Orientation is not
    # rendered (fingers stay axis-aligned).
    gap = 0.035 if state.gripper.open else 0.012
    finger = np.array([0.012, 0.03, 0.06])
    for side in (-1.0, 1.0):
        center = state.gripper.position + np.array([side * gap, 0.0, 0.0])
        prims.append(("box", (center - finger / 2.0, center + finger / 2.0), GRIPPER_COLOR))
    return prims


def render_view(state: SceneState, intrinsics: np.ndarray, extrinsics: np.ndarray, resolution: int) -> CameraView:
    origin, dirs = _ray_grid(intrinsics, extrinsics, resolution)
    depth = np.full(len(dirs), np.inf)
    color = np.zeros((len(dirs), 3), dtype=np.uint8)
    for kind, geom, rgb in _scene_primitives(state):
        if kind == "box":
            t = _intersect_box(origin, dirs, *geom)
        else:
            t = _intersect_cylinder(origin, dirs, *geom)
        closer = t < depth
        depth = np.where(closer, t, depth)
        color[closer] = rgb
    depth = np.where(np.isfinite(depth), depth, 0.0)
    return CameraView(
        rgb_image=color.reshape(resolution, resolution, 3),
        depth_image=depth.reshape(resolution, resolution),
        intrinsics=intrinsics,
        extrinsics=extrinsics,
    )


def render_views(state: SceneState, cameras, resolution: int) -> list[CameraView]:
    return [render_view(state, K, T, resolution) for K, T in cameras]
