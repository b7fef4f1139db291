"""The trainable policy: a latent-bottleneck transformer over voxel patches.

The fused voxel grid is lifted to a feature grid, split into non-overlapping
3D patches, joined with tiled proprioception and projected language tokens,
and encoded by cross-attending a small set of trainable latent vectors to
the (long) input sequence. Latents pass through self-attention layers and
are cross-attended back out to input length. Voxel tokens are upsampled to
full grid resolution (with a skip connection from the pre-patchify feature
grid) into the translation value grid; a global max-pool feeds the
rotation, gripper-open, and collide heads.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .action_codec import QPrediction, num_rotation_bins
from .errors import DatasetVersionError, InvalidInputError

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class PolicyConfig:
    """Architecture knobs. Defaults follow the reference configuration:
    100^3 grid in 5^3 patches, 2048x512 latents, 6 self-attention layers,
    77 language tokens of width 512, 128-wide input tokens."""

    grid_size: int = 100
    patch_size: int = 5
    num_latents: int = 2048
    latent_dim: int = 512
    num_self_attn_layers: int = 6
    embed_dim: int = 128
    rotation_bin_deg: float = 5.0
    num_lang_tokens: int = 77
    lang_feature_dim: int = 512
    num_attention_heads: int = 8
    voxel_feature_dim: int = 64
    ff_mult: int = 4

    def __post_init__(self):
        if self.grid_size % self.patch_size != 0:
            raise InvalidInputError(
                f"grid_size {self.grid_size} must be divisible by patch_size {self.patch_size}"
            )
        for name in (
            "grid_size",
            "patch_size",
            "num_latents",
            "latent_dim",
            "num_self_attn_layers",
            "embed_dim",
            "num_lang_tokens",
            "lang_feature_dim",
            "num_attention_heads",
            "voxel_feature_dim",
            "ff_mult",
        ):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.embed_dim <= self.voxel_feature_dim:
            raise InvalidInputError("embed_dim must exceed voxel_feature_dim")
        if self.latent_dim % self.num_attention_heads != 0:
            raise InvalidInputError("latent_dim must be divisible by num_attention_heads")
        num_rotation_bins(self.rotation_bin_deg)

    @property
    def num_patches_per_axis(self) -> int:
        return self.grid_size // self.patch_size

    @property
    def num_voxel_tokens(self) -> int:
        return self.num_patches_per_axis**3

    @property
    def sequence_length(self) -> int:
        return self.num_voxel_tokens + self.num_lang_tokens

    @property
    def num_rot_bins(self) -> int:
        return num_rotation_bins(self.rotation_bin_deg)


class Attention(nn.Module):
    """Multi-head attention with separate query and key/value widths."""

    def __init__(self, q_dim: int, kv_dim: int, heads: int):
        super().__init__()
        if q_dim % heads != 0:
            raise InvalidInputError("attention width must be divisible by head count")
        self.heads = heads
        self.scale = (q_dim // heads) ** -0.5
        self.to_q = nn.Linear(q_dim, q_dim)
        self.to_k = nn.Linear(kv_dim, q_dim)
        self.to_v = nn.Linear(kv_dim, q_dim)
        self.to_out = nn.Linear(q_dim, q_dim)

    def forward(self, x_q: torch.Tensor, x_kv: torch.Tensor) -> torch.Tensor:
        b, n, _ = x_q.shape
        m = x_kv.shape[1]
        h = self.heads
        q = self.to_q(x_q).view(b, n, h, -1).transpose(1, 2)
        k = self.to_k(x_kv).view(b, m, h, -1).transpose(1, 2)
        v = self.to_v(x_kv).view(b, m, h, -1).transpose(1, 2)
        out = F.scaled_dot_product_attention(q, k, v, scale=self.scale)
        out = out.transpose(1, 2).reshape(b, n, -1)
        return self.to_out(out)


class FeedForward(nn.Module):
    def __init__(self, dim: int, mult: int):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(dim, dim * mult), nn.GELU(), nn.Linear(dim * mult, dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class CrossAttentionBlock(nn.Module):
    """Pre-norm cross-attention + feed-forward, both residual."""

    def __init__(self, q_dim: int, kv_dim: int, heads: int, ff_mult: int):
        super().__init__()
        self.norm_q = nn.LayerNorm(q_dim)
        self.norm_kv = nn.LayerNorm(kv_dim)
        self.attn = Attention(q_dim, kv_dim, heads)
        self.norm_ff = nn.LayerNorm(q_dim)
        self.ff = FeedForward(q_dim, ff_mult)

    def forward(self, x_q: torch.Tensor, x_kv: torch.Tensor) -> torch.Tensor:
        x = x_q + self.attn(self.norm_q(x_q), self.norm_kv(x_kv))
        return x + self.ff(self.norm_ff(x))


class SelfAttentionBlock(nn.Module):
    def __init__(self, dim: int, heads: int, ff_mult: int):
        super().__init__()
        self.norm_attn = nn.LayerNorm(dim)
        self.attn = Attention(dim, dim, heads)
        self.norm_ff = nn.LayerNorm(dim)
        self.ff = FeedForward(dim, ff_mult)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.norm_attn(x)
        x = x + self.attn(y, y)
        return x + self.ff(self.norm_ff(x))


class VoxelPolicyNet(nn.Module):
    """End-to-end network from (voxels, proprio, language) to the four heads.

    forward() takes batched tensors:
      voxels  (B, 10, G, G, G)
      proprio (B, 4)
      lang    (B, num_lang_tokens, lang_feature_dim)
    and returns a dict with q_trans (B, G, G, G), q_rot (B, bins, 3),
    q_open (B, 2), q_collide (B, 2).
    """

    # Input cross-attention uses a single head (latent-bottleneck idiom);
    # config heads apply to the latent self-attention stack.
    CROSS_HEADS = 1

    def __init__(self, config: PolicyConfig):
        super().__init__()
        self.config = config
        c = config
        patch_channels = c.embed_dim - c.voxel_feature_dim

        # Per-voxel channel maps and the non-overlapping patchify are
        # expressed as Linear layers over channels-last tensors: identical
        # to 1x1x1 / kernel=stride convolutions, but GEMM-shaped (an order
        # of magnitude faster on CPU).
        self.voxel_lift = nn.Linear(10, c.voxel_feature_dim)
        self.patchify = nn.Linear(c.voxel_feature_dim * c.patch_size**3, patch_channels)
        self.proprio_lift = nn.Linear(4, c.voxel_feature_dim)
        self.lang_proj = nn.Linear(c.lang_feature_dim, c.embed_dim)
        self.pos_embedding = nn.Parameter(torch.zeros(c.sequence_length, c.embed_dim))

        self.latents = nn.Parameter(torch.zeros(c.num_latents, c.latent_dim))
        self.encode_cross = CrossAttentionBlock(c.latent_dim, c.embed_dim, self.CROSS_HEADS, c.ff_mult)
        self.self_attn = nn.ModuleList(
            SelfAttentionBlock(c.latent_dim, c.num_attention_heads, c.ff_mult)
            for _ in range(c.num_self_attn_layers)
        )
        self.decode_cross = CrossAttentionBlock(c.embed_dim, c.latent_dim, self.CROSS_HEADS, c.ff_mult)

        self.upsample_conv = nn.Conv3d(c.embed_dim, c.voxel_feature_dim, kernel_size=3, padding=1)
        self.skip_reduce = nn.Linear(2 * c.voxel_feature_dim, c.voxel_feature_dim)
        self.trans_head = nn.Linear(c.voxel_feature_dim, 1)
        self.rot_head = nn.Linear(c.voxel_feature_dim, 3 * c.num_rot_bins)
        self.open_head = nn.Linear(c.voxel_feature_dim, 2)
        self.collide_head = nn.Linear(c.voxel_feature_dim, 2)

    def preprocess(
        self, voxels: torch.Tensor, proprio: torch.Tensor, lang: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Build the input token sequence; also returns the pre-patchify
        feature grid used as the decoder skip connection."""
        c = self.config
        if voxels.shape[1:] != (10, c.grid_size, c.grid_size, c.grid_size):
            raise InvalidInputError(f"voxels shape {tuple(voxels.shape)} does not match config")
        if proprio.shape[1:] != (4,):
            raise InvalidInputError("proprio must be (B, 4)")
        if lang.shape[1:] != (c.num_lang_tokens, c.lang_feature_dim):
            raise InvalidInputError(f"lang shape {tuple(lang.shape)} does not match config")

        b = voxels.shape[0]
        n, p, vf = c.num_patches_per_axis, c.patch_size, c.voxel_feature_dim
        # channels-last (B, G, G, G, vf) feature grid; kept as the skip connection
        skip = F.gelu(self.voxel_lift(voxels.permute(0, 2, 3, 4, 1)))
        patches = (
            skip.reshape(b, n, p, n, p, n, p, vf)
            .permute(0, 1, 3, 5, 2, 4, 6, 7)
            .reshape(b, n**3, p**3 * vf)
        )
        tokens = self.patchify(patches)
        prop = self.proprio_lift(proprio).unsqueeze(1).expand(-1, n**3, -1)
        tokens = torch.cat([tokens, prop], dim=-1)
        lang_tokens = self.lang_proj(lang)
        seq = torch.cat([tokens, lang_tokens], dim=1)
        return seq + self.pos_embedding, skip

    def latent_transform(self, seq: torch.Tensor) -> torch.Tensor:
        """Cross-attend latents to the sequence, self-attend, cross back out."""
        latents = self.latents.unsqueeze(0).expand(seq.shape[0], -1, -1)
        latents = self.encode_cross(latents, seq)
        for block in self.self_attn:
            latents = block(latents)
        return self.decode_cross(seq, latents)

    def decode(self, seq_out: torch.Tensor, skip: torch.Tensor) -> dict[str, torch.Tensor]:
        c = self.config
        n = c.num_patches_per_axis
        voxel_tokens = seq_out[:, : c.num_voxel_tokens]
        lattice = voxel_tokens.reshape(-1, n, n, n, c.embed_dim).permute(0, 4, 1, 2, 3)
        up = F.gelu(self.upsample_conv(lattice))
        up = F.interpolate(up, scale_factor=c.patch_size, mode="trilinear", align_corners=False)
        fused = self.skip_reduce(torch.cat([up.permute(0, 2, 3, 4, 1), skip], dim=-1))
        # nonlinearity after the fusion so the per-voxel score is not a
        # plain linear function of the input channels
        feat = F.gelu(fused)
        q_trans = self.trans_head(feat).squeeze(-1)
        pooled = feat.amax(dim=(1, 2, 3))
        q_rot = self.rot_head(pooled).view(-1, 3, c.num_rot_bins).transpose(1, 2)
        return {
            "q_trans": q_trans,
            "q_rot": q_rot,
            "q_open": self.open_head(pooled),
            "q_collide": self.collide_head(pooled),
        }

    def forward(
        self, voxels: torch.Tensor, proprio: torch.Tensor, lang: torch.Tensor
    ) -> dict[str, torch.Tensor]:
        seq, skip = self.preprocess(voxels, proprio, lang)
        return self.decode(self.latent_transform(seq), skip)


def init_parameters(model: VoxelPolicyNet, seed: int) -> VoxelPolicyNet:
    """Seeded re-initialization so experiments are reproducible.

    Linear/conv weights get fan-in-scaled uniform values; latents are unit
    normal and positional embeddings small normal, per the latent
    transformer idiom.
    """
    gen = torch.Generator().manual_seed(seed)
    for name, param in sorted(model.named_parameters(), key=lambda kv: kv[0]):
        with torch.no_grad():
            if name == "latents":
                param.normal_(0.0, 1.0, generator=gen)
            elif name == "pos_embedding":
                param.normal_(0.0, 0.02, generator=gen)
            elif param.ndim >= 2:
                fan_in = int(np.prod(param.shape[1:]))
                bound = float(1.0 / np.sqrt(fan_in))
                param.uniform_(-bound, bound, generator=gen)
            else:
                param.zero_()
    # LayerNorm scales start at identity.
    for module in model.modules():
        if isinstance(module, nn.LayerNorm):
            with torch.no_grad():
                module.weight.fill_(1.0)
                module.bias.zero_()
    return model


def build_policy(config: PolicyConfig, seed: int = 0) -> VoxelPolicyNet:
    return init_parameters(VoxelPolicyNet(config), seed)


def predict_q(
    model: VoxelPolicyNet, grid_channels: np.ndarray, proprio: np.ndarray, lang: np.ndarray
) -> QPrediction:
    """Single-sample inference from numpy inputs to a QPrediction."""
    dtype = next(model.parameters()).dtype
    voxels = torch.from_numpy(np.ascontiguousarray(grid_channels)).to(dtype)
    voxels = voxels.permute(3, 0, 1, 2).unsqueeze(0)
    prop = torch.from_numpy(np.asarray(proprio)).to(dtype).unsqueeze(0)
    lang_t = torch.from_numpy(np.asarray(lang)).to(dtype).unsqueeze(0)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        out = model(voxels, prop, lang_t)
    if was_training:
        model.train()
    return QPrediction(
        q_trans=out["q_trans"][0].numpy(),
        q_rot=out["q_rot"][0].numpy(),
        q_open=out["q_open"][0].numpy(),
        q_collide=out["q_collide"][0].numpy(),
    )


def save_checkpoint(path, model: VoxelPolicyNet, extra: dict | None = None) -> None:
    """Versioned container: config + named parameter arrays (+ train state)."""
    payload = {
        "checkpoint_version": CHECKPOINT_VERSION,
        "policy_config": dataclasses.asdict(model.config),
        "model_state": model.state_dict(),
    }
    if extra:
        payload.update(extra)
    torch.save(payload, path)


def load_checkpoint(path, expected_config: PolicyConfig | None = None) -> tuple[VoxelPolicyNet, dict]:
    """Rebuild a policy from a checkpoint; verifies version and config."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("checkpoint_version")
    if version != CHECKPOINT_VERSION:
        raise DatasetVersionError(
            f"checkpoint version {version} is incompatible with {CHECKPOINT_VERSION}"
        )
    config = PolicyConfig(**payload["policy_config"])
    if expected_config is not None and config != expected_config:
        raise InvalidInputError("checkpoint config does not match the expected policy config")
    model = VoxelPolicyNet(config)
    model.load_state_dict(payload["model_state"])
    return model, payload
