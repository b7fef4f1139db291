"""Plain-text key-value run configuration with command-line overrides.

Files hold one `key = value` per line ('#' starts a comment). Values are
typed per key; unknown keys are rejected, and validation reports every
bad key at once. Override precedence is file < command-line."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidInputError
from .policy import PolicyConfig
from .toyworld import PALETTE_NAMES, TaskSpec, ToyWorld, make_task
from .trainer import TrainConfig
from .voxelizer import WorkspaceBounds


@dataclass
class RunConfig:
    # model
    grid_size: int = 32
    patch_size: int = 4
    num_latents: int = 512
    latent_dim: int = 64
    num_self_attn_layers: int = 2
    embed_dim: int = 64
    rotation_bin_deg: float = 5.0
    num_lang_tokens: int = 16
    lang_feature_dim: int = 64
    num_attention_heads: int = 4
    voxel_feature_dim: int = 32
    ff_mult: int = 4
    # training
    batch_size: int = 8
    total_iterations: int = 2000
    learning_rate: float = 1e-3
    optimizer_kind: str = "lamb"
    aug_trans_range: tuple = (0.125, 0.125, 0.125)
    aug_yaw_range_deg: float = 45.0
    checkpoint_interval: int = 1000
    seed: int = 0
    weight_decay: float = 0.0
    grad_clip: float = 0.0
    warmup_iterations: int = 0
    # environment / data generation
    tasks: tuple = ("press_button", "stack_block", "put_in_slot")
    demos_per_task: int = 10
    camera_resolution: int = 64
    frames_per_segment: int = 5
    episodes_per_task: int = 25
    max_steps: int = 25
    color_pool: tuple = ()  # empty means each task's default palette subset
    vel_epsilon: float = 0.1
    workspace_side: float = 1.0
    # paths
    dataset: str = ""
    out: str = ""

    _PARSERS = {
        int: lambda s: int(s),
        float: lambda s: float(s),
        str: lambda s: s,
        tuple: lambda s: tuple(part.strip() for part in s.split(",") if part.strip()),
    }

    @classmethod
    def field_types(cls) -> dict[str, type]:
        return {f.name: f.type for f in dataclasses.fields(cls) if not f.name.startswith("_")}

    @classmethod
    def _parse_value(cls, key: str, raw: str):
        default = getattr(cls(), key)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, tuple):
            parts = tuple(part.strip() for part in raw.split(",") if part.strip())
            if key == "aug_trans_range":
                return tuple(float(p) for p in parts)
            return parts
        return type(default)(raw)

    @classmethod
    def load(cls, path=None, overrides: dict[str, str] | None = None) -> "RunConfig":
        """Build from an optional config file plus override strings."""
        known = {f.name for f in dataclasses.fields(cls) if not f.name.startswith("_")}
        raw: dict[str, str] = {}
        if path is not None:
            for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise InvalidInputError(f"{path}:{line_no}: expected 'key = value'")
                key, value = (part.strip() for part in stripped.split("=", 1))
                raw[key] = value
        if overrides:
            raw.update(overrides)

        bad = sorted(k for k in raw if k not in known)
        if bad:
            raise InvalidInputError(f"unknown config keys: {', '.join(bad)}")
        config = cls()
        errors = []
        for key, value in raw.items():
            try:
                setattr(config, key, cls._parse_value(key, value))
            except (TypeError, ValueError) as exc:
                errors.append(f"{key}: {exc}")
        if errors:
            raise InvalidInputError("bad config values: " + "; ".join(errors))
        return config

    def to_text(self) -> str:
        """A file that load() accepts and that reproduces this config."""
        lines = []
        for f in dataclasses.fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def policy_config(self) -> PolicyConfig:
        return PolicyConfig(
            grid_size=self.grid_size,
            patch_size=self.patch_size,
            num_latents=self.num_latents,
            latent_dim=self.latent_dim,
            num_self_attn_layers=self.num_self_attn_layers,
            embed_dim=self.embed_dim,
            rotation_bin_deg=self.rotation_bin_deg,
            num_lang_tokens=self.num_lang_tokens,
            lang_feature_dim=self.lang_feature_dim,
            num_attention_heads=self.num_attention_heads,
            voxel_feature_dim=self.voxel_feature_dim,
            ff_mult=self.ff_mult,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            total_iterations=self.total_iterations,
            learning_rate=self.learning_rate,
            optimizer_kind=self.optimizer_kind,
            aug_trans_range=tuple(float(v) for v in self.aug_trans_range),
            aug_yaw_range_deg=self.aug_yaw_range_deg,
            checkpoint_interval=self.checkpoint_interval,
            seed=self.seed,
            weight_decay=self.weight_decay,
            grad_clip=self.grad_clip,
            warmup_iterations=self.warmup_iterations,
        )

    def workspace_bounds(self) -> WorkspaceBounds:
        return WorkspaceBounds.cube(self.workspace_side, self.grid_size)

    def make_tasks(self) -> list[TaskSpec]:
        pool = list(self.color_pool) if self.color_pool else None
        if pool:
            unknown = [c for c in pool if c not in PALETTE_NAMES]
            if unknown:
                raise InvalidInputError(f"unknown palette colors: {', '.join(unknown)}")
        tasks = []
        for task_id in self.tasks:
            if task_id == "press_button":
                tasks.append(make_task(task_id, colors=pool))
            elif task_id == "stack_block":
                tasks.append(make_task(task_id, colors=pool))
            else:
                tasks.append(make_task(task_id))
        return tasks

    def make_world(self) -> ToyWorld:
        return ToyWorld(
            grid_size=self.grid_size,
            camera_resolution=self.camera_resolution,
            bounds=self.workspace_bounds(),
            rotation_bin_deg=self.rotation_bin_deg,
        )
