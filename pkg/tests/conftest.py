import numpy as np
import pytest

from voxact.policy import PolicyConfig
from voxact.voxelizer import CameraView, WorkspaceBounds


def tiny_policy_config(**overrides) -> PolicyConfig:
    base = dict(
        grid_size=8,
        patch_size=4,
        num_latents=4,
        latent_dim=8,
        num_self_attn_layers=1,
        embed_dim=16,
        rotation_bin_deg=30.0,
        num_lang_tokens=4,
        lang_feature_dim=8,
        num_attention_heads=1,
        voxel_feature_dim=8,
        ff_mult=2,
    )
    base.update(overrides)
    return PolicyConfig(**base)


def identity_view(depth: np.ndarray, rgb: np.ndarray | None = None, fx: float = 10.0) -> CameraView:
    """A pinhole at the world origin looking along +z."""
    h, w = depth.shape
    if rgb is None:
        rgb = np.zeros((h, w, 3), dtype=np.uint8)
    intrinsics = np.array([[fx, 0.0, w / 2.0], [0.0, fx, h / 2.0], [0.0, 0.0, 1.0]])
    return CameraView(
        rgb_image=rgb, depth_image=depth, intrinsics=intrinsics, extrinsics=np.eye(4)
    )


def random_view(rng: np.random.Generator, size: int = 8) -> CameraView:
    from scipy.spatial.transform import Rotation

    depth = rng.uniform(0.2, 2.0, size=(size, size))
    depth[rng.random((size, size)) < 0.2] = 0.0
    rgb = rng.integers(0, 256, size=(size, size, 3)).astype(np.uint8)
    intrinsics = np.array(
        [
            [rng.uniform(5, 20), 0.0, rng.uniform(2, 6)],
            [0.0, rng.uniform(5, 20), rng.uniform(2, 6)],
            [0.0, 0.0, 1.0],
        ]
    )
    extrinsics = np.eye(4)
    extrinsics[:3, :3] = Rotation.random(random_state=int(rng.integers(2**31))).as_matrix()
    extrinsics[:3, 3] = rng.uniform(-0.5, 0.5, size=3)
    return CameraView(rgb_image=rgb, depth_image=depth, intrinsics=intrinsics, extrinsics=extrinsics)


@pytest.fixture
def unit_bounds() -> WorkspaceBounds:
    return WorkspaceBounds.cube(1.0, 100)


@pytest.fixture
def small_bounds() -> WorkspaceBounds:
    return WorkspaceBounds.cube(1.0, 8)
