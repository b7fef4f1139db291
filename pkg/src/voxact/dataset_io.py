"""On-disk demonstration datasets.

Layout (the public contract):

    dataset_root/
      manifest.json                 format_version + ordered episode dirs
      ep_00000/
        episode.json                task id, variation, goal, collide flags
        frame_00000.npz             per-frame arrays (see below)
        ...

Frame records hold gripper_pose (7,), gripper_open, joint_velocities,
timestep, num_views, and per view i: rgb_i (H, W, 3 in [0, 255]),
depth_i (H, W, meters), intrinsics_i (3, 3), extrinsics_i (4, 4).
Arrays round-trip bit-for-bit; positions are meters, angles radians.
"""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

import numpy as np

from .demos import DemoEpisode, DemoFrame
from .errors import DatasetCorruptError, DatasetVersionError
from .voxelizer import CameraView

FORMAT_VERSION = 1


def _episode_dir_name(index: int) -> str:
    return f"ep_{index:05d}"


def save_dataset(episodes: list[DemoEpisode], path) -> Path:
    """Write episodes under `path`; returns the dataset root."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    dir_names = []
    for i, episode in enumerate(episodes):
        episode.validate()
        name = _episode_dir_name(i)
        dir_names.append(name)
        ep_dir = root / name
        ep_dir.mkdir(exist_ok=True)
        meta = {
            "format_version": FORMAT_VERSION,
            "task_id": episode.task_id,
            "variation_id": episode.variation_id,
            "language_goal": episode.language_goal,
            "collide_flags": [int(f) for f in episode.collide_flags],
            "num_frames": len(episode.frames),
        }
        (ep_dir / "episode.json").write_text(json.dumps(meta, indent=2))
        for t, frame in enumerate(episode.frames):
            record = {
                "gripper_pose": frame.gripper_pose,
                "gripper_open": np.int64(frame.gripper_open),
                "joint_velocities": frame.joint_velocities,
                "timestep": np.int64(frame.timestep),
                "num_views": np.int64(len(frame.views)),
            }
            for v, view in enumerate(frame.views):
                record[f"rgb_{v}"] = np.asarray(view.rgb_image)
                record[f"depth_{v}"] = np.asarray(view.depth_image)
                record[f"intrinsics_{v}"] = np.asarray(view.intrinsics)
                record[f"extrinsics_{v}"] = np.asarray(view.extrinsics)
            np.savez(ep_dir / f"frame_{t:05d}.npz", **record)
    manifest = {"format_version": FORMAT_VERSION, "episodes": dir_names}
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return root


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise DatasetCorruptError(f"missing {path}")
    except json.JSONDecodeError as exc:
        raise DatasetCorruptError(f"unreadable {path}: {exc}")


def _check_version(meta: dict, where: str) -> None:
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise DatasetVersionError(
            f"{where} has format_version {version}, this build reads {FORMAT_VERSION}"
        )


def _load_frame(path: Path) -> DemoFrame:
    try:
        with np.load(path) as record:
            num_views = int(record["num_views"])
            views = [
                CameraView(
                    rgb_image=record[f"rgb_{v}"],
                    depth_image=record[f"depth_{v}"],
                    intrinsics=record[f"intrinsics_{v}"],
                    extrinsics=record[f"extrinsics_{v}"],
                )
                for v in range(num_views)
            ]
            return DemoFrame(
                views=views,
                gripper_pose=record["gripper_pose"],
                gripper_open=int(record["gripper_open"]),
                joint_velocities=record["joint_velocities"],
                timestep=int(record["timestep"]),
            )
    except FileNotFoundError:
        raise DatasetCorruptError(f"missing frame record {path}")
    except (zipfile.BadZipFile, OSError, KeyError, ValueError) as exc:
        raise DatasetCorruptError(f"corrupt frame record {path}: {exc}")


def load_dataset(path) -> list[DemoEpisode]:
    """Read a dataset written by save_dataset."""
    root = Path(path)
    manifest = _read_json(root / "manifest.json")
    _check_version(manifest, str(root / "manifest.json"))
    episodes = []
    for name in manifest["episodes"]:
        ep_dir = root / name
        meta = _read_json(ep_dir / "episode.json")
        _check_version(meta, str(ep_dir / "episode.json"))
        frames = [_load_frame(ep_dir / f"frame_{t:05d}.npz") for t in range(meta["num_frames"])]
        episodes.append(
            DemoEpisode(
                frames=frames,
                language_goal=meta["language_goal"],
                task_id=meta["task_id"],
                variation_id=int(meta["variation_id"]),
                collide_flags=[int(f) for f in meta["collide_flags"]],
            )
        )
    return episodes
