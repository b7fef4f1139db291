"""Supervised training: augmentation, task-uniform sampling, loss, loop.

The four-head loss is plain cross-entropy against one-hot targets. Batches
first sample task ids uniformly (with replacement), then one tuple per
sampled task, so long-horizon tasks are not over-represented. Samples are
perturbed with a random translation plus a yaw rotation about the
workspace center; the raw pointcloud is re-voxelized and the target
re-discretized, and perturbations that push the target out of the
workspace are discarded and resampled.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from scipy.special import logsumexp

from .action_codec import ContinuousAction, OneHotLabels, QPrediction, discretize, undiscretize
from .demos import (
    DEFAULT_VEL_EPSILON,
    DemoEpisode,
    TrainingTuple,
    TupleRecord,
    extract_keyframes,
    iter_tuple_records,
)
from .errors import InvalidInputError, NonFiniteLossError
from .geometry import quat_about_z, quat_multiply, rigid_transform_about
from .lamb import Lamb
from .language import HashingLanguageEncoder, LanguageEncoder
from .policy import PolicyConfig, VoxelPolicyNet, build_policy, load_checkpoint, save_checkpoint
from .voxelizer import WorkspaceBounds, fuse_points, voxel_index_of

LOSS_LOG_HEADER = "# iteration total trans rot open collide wallclock"


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    total_iterations: int = 1000
    learning_rate: float = 1e-3
    optimizer_kind: str = "lamb"  # "lamb" (layerwise-adaptive) or "adam" (adaptive-moment)
    aug_trans_range: tuple[float, float, float] = (0.125, 0.125, 0.125)
    aug_yaw_range_deg: float = 45.0
    checkpoint_interval: int = 500
    seed: int = 0
    weight_decay: float = 0.0
    grad_clip: float = 0.0
    warmup_iterations: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if any(r < 0 for r in self.aug_trans_range) or self.aug_yaw_range_deg < 0:
            raise InvalidInputError("augmentation ranges must be >= 0")
        if self.optimizer_kind not in ("lamb", "adam"):
            raise InvalidInputError(f"unknown optimizer_kind {self.optimizer_kind!r}")


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    trans_term: float
    rot_term: float
    open_term: float
    collide_term: float


def _one_hot_index(y: np.ndarray, name: str) -> int:
    flat = np.asarray(y, dtype=np.float64).ravel()
    if not (np.all((flat == 0.0) | (flat == 1.0)) and flat.sum() == 1.0):
        raise InvalidInputError(f"{name} is not one-hot")
    return int(np.argmax(flat))


def loss(q: QPrediction, y: OneHotLabels) -> LossBreakdown:
    """Cross-entropy of each head against its one-hot target, in nats."""
    q_trans = np.asarray(q.q_trans, dtype=np.float64).ravel()
    trans_term = float(logsumexp(q_trans) - q_trans[_one_hot_index(y.y_trans, "y_trans")])

    q_rot = np.asarray(q.q_rot, dtype=np.float64)
    rot_term = 0.0
    for axis in range(3):
        idx = _one_hot_index(y.y_rot[:, axis], f"y_rot[:, {axis}]")
        rot_term += float(logsumexp(q_rot[:, axis]) - q_rot[idx, axis])

    def binary_term(logits, labels, name):
        logits = np.asarray(logits, dtype=np.float64)
        return float(logsumexp(logits) - logits[_one_hot_index(labels, name)])

    open_term = binary_term(q.q_open, y.y_open, "y_open")
    collide_term = binary_term(q.q_collide, y.y_collide, "y_collide")
    total = trans_term + rot_term + open_term + collide_term
    return LossBreakdown(total, trans_term, rot_term, open_term, collide_term)


def loss_tensors(
    outputs: dict[str, torch.Tensor], targets: dict[str, torch.Tensor]
) -> dict[str, torch.Tensor]:
    """Differentiable batch-mean loss terms from the network's head outputs."""
    q_trans = outputs["q_trans"].flatten(1)
    trans = F.cross_entropy(q_trans, targets["trans"])
    rot = sum(
        F.cross_entropy(outputs["q_rot"][:, :, axis], targets["rot"][:, axis]) for axis in range(3)
    )
    open_t = F.cross_entropy(outputs["q_open"], targets["open"])
    collide = F.cross_entropy(outputs["q_collide"], targets["collide"])
    return {
        "trans": trans,
        "rot": rot,
        "open": open_t,
        "collide": collide,
        "total": trans + rot + open_t + collide,
    }


def apply_augmentation(
    tup: TrainingTuple,
    yaw_deg: float,
    offset: np.ndarray,
    bounds: WorkspaceBounds,
    bin_deg: float,
) -> TrainingTuple | None:
    """One perturbation attempt; None when the target leaves the workspace."""
    if tup.points is None or tup.colors is None:
        raise InvalidInputError("augmentation requires tuples with retained raw points")
    cont = undiscretize(tup.target, bounds, bin_deg)
    center = bounds.center
    new_pos = rigid_transform_about(cont.position[None, :], yaw_deg, offset, center)[0]
    if voxel_index_of(new_pos, bounds) is None:
        return None
    new_quat = quat_multiply(quat_about_z(yaw_deg), cont.quaternion)
    new_target = discretize(
        ContinuousAction(new_pos, new_quat, cont.open, cont.collide), bounds, bin_deg
    )
    new_points = rigid_transform_about(tup.points, yaw_deg, offset, center)
    return TrainingTuple(
        voxel_obs=fuse_points(new_points, tup.colors, bounds),
        proprio=tup.proprio,
        language_goal=tup.language_goal,
        target=new_target,
        task_id=tup.task_id,
        points=new_points,
        colors=tup.colors,
    )


def augment(
    tup: TrainingTuple,
    bounds: WorkspaceBounds,
    bin_deg: float,
    trans_range: tuple[float, float, float],
    yaw_range_deg: float,
    rng: np.random.Generator,
    max_attempts: int = 10,
) -> TrainingTuple:
    """Perturb a tuple, resampling discarded perturbations up to max_attempts,
    then fall back to the unaugmented tuple."""
    ranges = np.asarray(trans_range, dtype=np.float64)
    for _ in range(max_attempts):
        offset = rng.uniform(-ranges, ranges)
        yaw = float(rng.uniform(-yaw_range_deg, yaw_range_deg)) if yaw_range_deg > 0 else 0.0
        if yaw == 0.0 and not np.any(offset):
            return tup
        candidate = apply_augmentation(tup, yaw, offset, bounds, bin_deg)
        if candidate is not None:
            return candidate
    return tup


@dataclass
class TrainingSet:
    """Tuple records grouped by task; grids materialize at sampling time."""

    records: list[TupleRecord]
    bounds: WorkspaceBounds
    bin_deg: float
    task_ids: list[str] = dataclasses.field(default_factory=list)
    by_task: dict[str, list[int]] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if not self.by_task:
            self.by_task = {}
            for i, rec in enumerate(self.records):
                self.by_task.setdefault(rec.task_id, []).append(i)
            self.task_ids = sorted(self.by_task)

    def __len__(self) -> int:
        return len(self.records)

    def materialize(self, index: int) -> TrainingTuple:
        return self.records[index].materialize(self.bounds)

    @classmethod
    def from_episodes(
        cls,
        episodes: list[DemoEpisode],
        bounds: WorkspaceBounds,
        bin_deg: float,
        vel_epsilon: float = DEFAULT_VEL_EPSILON,
    ) -> "TrainingSet":
        records: list[TupleRecord] = []
        for episode in episodes:
            keyframes = extract_keyframes(episode, vel_epsilon)
            records.extend(iter_tuple_records(episode, keyframes, bounds, bin_deg))
        if not records:
            raise InvalidInputError("no training tuples could be built from the episodes")
        return cls(records=records, bounds=bounds, bin_deg=bin_deg)


def sample_indices(dataset: TrainingSet, batch_size: int, rng: np.random.Generator) -> list[int]:
    """Task ids uniform with replacement, then one uniform tuple per task."""
    if not dataset.records:
        raise InvalidInputError("dataset is empty")
    picks = []
    for _ in range(batch_size):
        task = dataset.task_ids[int(rng.integers(len(dataset.task_ids)))]
        indices = dataset.by_task[task]
        picks.append(indices[int(rng.integers(len(indices)))])
    return picks


def sample_batch(
    dataset: TrainingSet, batch_size: int, rng: np.random.Generator
) -> list[TrainingTuple]:
    """Uniform-task sampling, materialized into full training tuples."""
    return [dataset.materialize(i) for i in sample_indices(dataset, batch_size, rng)]


def collate(
    batch: list[TrainingTuple], config: PolicyConfig, lang_encoder: LanguageEncoder
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, dict[str, torch.Tensor]]:
    voxels = torch.from_numpy(
        np.stack([np.moveaxis(t.voxel_obs.channels, -1, 0) for t in batch])
    ).float()
    proprio = torch.from_numpy(np.stack([t.proprio for t in batch])).float()
    lang = torch.from_numpy(np.stack([lang_encoder.encode(t.language_goal) for t in batch])).float()
    g = config.grid_size
    trans = torch.tensor(
        [np.ravel_multi_index(t.target.trans_index, (g, g, g)) for t in batch], dtype=torch.long
    )
    rot = torch.tensor([t.target.rot_indices for t in batch], dtype=torch.long)
    open_t = torch.tensor([t.target.open for t in batch], dtype=torch.long)
    collide = torch.tensor([t.target.collide for t in batch], dtype=torch.long)
    return voxels, proprio, lang, {"trans": trans, "rot": rot, "open": open_t, "collide": collide}


def make_optimizer(model: VoxelPolicyNet, config: TrainConfig) -> torch.optim.Optimizer:
    if config.optimizer_kind == "lamb":
        return Lamb(model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)
    return torch.optim.Adam(
        model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )


def train_step(
    model: VoxelPolicyNet,
    batch: list[TrainingTuple],
    optimizer: torch.optim.Optimizer,
    lang_encoder: LanguageEncoder,
    grad_clip: float = 0.0,
) -> LossBreakdown:
    """One optimization step on a batch; returns the batch-mean loss terms."""
    if not batch:
        raise InvalidInputError("batch must be non-empty")
    model.train()
    voxels, proprio, lang, targets = collate(batch, model.config, lang_encoder)
    outputs = model(voxels, proprio, lang)
    terms = loss_tensors(outputs, targets)
    for name in ("trans", "rot", "open", "collide"):
        if not torch.isfinite(terms[name]):
            raise NonFiniteLossError(f"non-finite loss in the {name} head")
    optimizer.zero_grad()
    terms["total"].backward()
    if grad_clip > 0:
        torch.nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    optimizer.step()
    return LossBreakdown(
        total=float(terms["total"].item()),
        trans_term=float(terms["trans"].item()),
        rot_term=float(terms["rot"].item()),
        open_term=float(terms["open"].item()),
        collide_term=float(terms["collide"].item()),
    )


@dataclass
class TrainResult:
    checkpoint_path: Path
    loss_log_path: Path
    final_loss: LossBreakdown | None


def _checkpoint_extras(
    optimizer: torch.optim.Optimizer,
    train_config: TrainConfig,
    iteration: int,
    rng: np.random.Generator,
) -> dict:
    return {
        "optimizer_state": optimizer.state_dict(),
        "train_config": dataclasses.asdict(train_config),
        "iteration": iteration,
        "numpy_rng_state": rng.bit_generator.state,
        "torch_rng_state": torch.get_rng_state(),
    }


def train(
    episodes: list[DemoEpisode],
    policy_config: PolicyConfig,
    train_config: TrainConfig,
    out_dir,
    bounds: WorkspaceBounds | None = None,
    lang_encoder: LanguageEncoder | None = None,
    vel_epsilon: float = DEFAULT_VEL_EPSILON,
    resume_from=None,
    progress_every: int = 0,
) -> TrainResult:
    """Full training run: builds tuples, optimizes, logs, checkpoints.

    Deterministic given the seed in single-threaded execution. Resuming
    from a checkpoint restores optimizer and RNG state, so the continued
    loss trajectory matches an uninterrupted run.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if bounds is None:
        bounds = WorkspaceBounds.cube(1.0, policy_config.grid_size)
    if lang_encoder is None:
        lang_encoder = HashingLanguageEncoder(
            policy_config.num_lang_tokens, policy_config.lang_feature_dim
        )
    dataset = TrainingSet.from_episodes(episodes, bounds, policy_config.rotation_bin_deg, vel_epsilon)

    rng = np.random.default_rng(train_config.seed)
    torch.manual_seed(train_config.seed)
    start_iteration = 0
    if resume_from is not None:
        model, payload = load_checkpoint(resume_from, expected_config=policy_config)
        optimizer = make_optimizer(model, train_config)
        optimizer.load_state_dict(payload["optimizer_state"])
        start_iteration = int(payload["iteration"])
        rng.bit_generator.state = payload["numpy_rng_state"]
        torch.set_rng_state(payload["torch_rng_state"])
    else:
        model = build_policy(policy_config, seed=train_config.seed)
        optimizer = make_optimizer(model, train_config)

    augmenting = any(r > 0 for r in train_config.aug_trans_range) or train_config.aug_yaw_range_deg > 0
    base_lr = train_config.learning_rate
    log_path = out / "loss_log.txt"
    mode = "a" if (resume_from is not None and log_path.exists()) else "w"
    checkpoint_path = out / "checkpoint_final.pt"
    breakdown = None
    with open(log_path, mode) as log:
        if mode == "w":
            log.write(LOSS_LOG_HEADER + "\n")
        for iteration in range(start_iteration + 1, train_config.total_iterations + 1):
            batch = sample_batch(dataset, train_config.batch_size, rng)
            if augmenting:
                batch = [
                    augment(
                        t,
                        bounds,
                        policy_config.rotation_bin_deg,
                        train_config.aug_trans_range,
                        train_config.aug_yaw_range_deg,
                        rng,
                    )
                    for t in batch
                ]
            if train_config.warmup_iterations > 0:
                scale = min(1.0, iteration / train_config.warmup_iterations)
                for group in optimizer.param_groups:
                    group["lr"] = base_lr * scale
            breakdown = train_step(model, batch, optimizer, lang_encoder, train_config.grad_clip)
            log.write(
                f"{iteration} {breakdown.total:.6f} {breakdown.trans_term:.6f} "
                f"{breakdown.rot_term:.6f} {breakdown.open_term:.6f} "
                f"{breakdown.collide_term:.6f} {time.time():.3f}\n"
            )
            if progress_every and iteration % progress_every == 0:
                print(f"iteration {iteration}: loss {breakdown.total:.4f}", flush=True)
            last = iteration == train_config.total_iterations
            if iteration % train_config.checkpoint_interval == 0 or last:
                extras = _checkpoint_extras(optimizer, train_config, iteration, rng)
                save_checkpoint(out / f"checkpoint_{iteration:06d}.pt", model, extras)
                if last:
                    save_checkpoint(checkpoint_path, model, extras)
    if breakdown is None:
        # Resumed at or past the final iteration; still emit the final file.
        extras = _checkpoint_extras(optimizer, train_config, start_iteration, rng)
        save_checkpoint(checkpoint_path, model, extras)
    return TrainResult(checkpoint_path=checkpoint_path, loss_log_path=log_path, final_loss=breakdown)
