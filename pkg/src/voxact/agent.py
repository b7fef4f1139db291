"""User-facing policy surfaces.

ActingPolicy wraps a trained network for the observe-act loop: fuse the
views, assemble proprioception, encode the goal, take the argmax action.
BehaviorCloner is the sklearn-style estimator over the whole pipeline
(fit on demonstration episodes, predict discrete actions), so the agent
composes with ecosystem tooling via get_params/set_params/clone.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .action_codec import DiscreteAction, QPrediction, select_best_action
from .demos import FINGER_OPEN_POS, TrainingTuple
from .errors import InvalidInputError
from .language import HashingLanguageEncoder, LanguageEncoder
from .policy import PolicyConfig, VoxelPolicyNet, load_checkpoint, predict_q
from .trainer import TrainConfig, train
from .validation import check_episodes, check_goal, check_views
from .voxelizer import WorkspaceBounds, fuse


class ActingPolicy:
    """Inference wrapper: maps (views, gripper state, goal) to an action."""

    def __init__(
        self,
        model: VoxelPolicyNet,
        bounds: WorkspaceBounds | None = None,
        lang_encoder: LanguageEncoder | None = None,
    ):
        self.model = model.eval()
        config = model.config
        self.bounds = bounds if bounds is not None else WorkspaceBounds.cube(1.0, config.grid_size)
        self.lang_encoder = lang_encoder or HashingLanguageEncoder(
            config.num_lang_tokens, config.lang_feature_dim
        )
        self._lang_cache: dict[str, np.ndarray] = {}

    @classmethod
    def from_checkpoint(cls, path, bounds=None, lang_encoder=None) -> "ActingPolicy":
        model, _ = load_checkpoint(path)
        return cls(model, bounds=bounds, lang_encoder=lang_encoder)

    def _lang(self, goal: str) -> np.ndarray:
        if goal not in self._lang_cache:
            self._lang_cache[goal] = self.lang_encoder.encode(check_goal(goal))
        return self._lang_cache[goal]

    def predict_q_values(
        self, views, goal: str, gripper_open: int = 1, timestep: float = 0.0
    ) -> QPrediction:
        grid = fuse(check_views(views), self.bounds)
        finger = FINGER_OPEN_POS * gripper_open
        proprio = np.array([gripper_open, finger, finger, timestep], dtype=np.float64)
        return predict_q(self.model, grid.channels, proprio, self._lang(goal))

    def act(self, observation, goal: str) -> DiscreteAction:
        """Agent protocol for toyworld.evaluate."""
        timestep = observation.step_index / observation.max_steps if observation.max_steps else 0.0
        q = self.predict_q_values(observation.views, goal, observation.gripper_open, timestep)
        return select_best_action(q)


class BehaviorCloner(BaseEstimator):
    """Language-conditioned behavior cloning as a fit/predict estimator.

    fit() consumes demonstration episodes; predict() maps observations to
    discrete actions. All architecture and optimization knobs are
    constructor parameters so the estimator clones and grid-searches like
    any other.
    """

    def __init__(
        self,
        grid_size: int = 32,
        patch_size: int = 4,
        num_latents: int = 128,
        latent_dim: int = 64,
        num_self_attn_layers: int = 2,
        embed_dim: int = 64,
        rotation_bin_deg: float = 5.0,
        num_lang_tokens: int = 16,
        lang_feature_dim: int = 64,
        num_attention_heads: int = 4,
        voxel_feature_dim: int = 32,
        ff_mult: int = 4,
        batch_size: int = 8,
        total_iterations: int = 500,
        learning_rate: float = 1e-3,
        optimizer_kind: str = "lamb",
        aug_trans_range: tuple = (0.125, 0.125, 0.125),
        aug_yaw_range_deg: float = 45.0,
        checkpoint_interval: int = 500,
        seed: int = 0,
        weight_decay: float = 0.0,
        grad_clip: float = 0.0,
        warmup_iterations: int = 0,
        workspace_side: float = 1.0,
        vel_epsilon: float = 0.1,
        out_dir=None,
    ):
        self.grid_size = grid_size
        self.patch_size = patch_size
        self.num_latents = num_latents
        self.latent_dim = latent_dim
        self.num_self_attn_layers = num_self_attn_layers
        self.embed_dim = embed_dim
        self.rotation_bin_deg = rotation_bin_deg
        self.num_lang_tokens = num_lang_tokens
        self.lang_feature_dim = lang_feature_dim
        self.num_attention_heads = num_attention_heads
        self.voxel_feature_dim = voxel_feature_dim
        self.ff_mult = ff_mult
        self.batch_size = batch_size
        self.total_iterations = total_iterations
        self.learning_rate = learning_rate
        self.optimizer_kind = optimizer_kind
        self.aug_trans_range = aug_trans_range
        self.aug_yaw_range_deg = aug_yaw_range_deg
        self.checkpoint_interval = checkpoint_interval
        self.seed = seed
        self.weight_decay = weight_decay
        self.grad_clip = grad_clip
        self.warmup_iterations = warmup_iterations
        self.workspace_side = workspace_side
        self.vel_epsilon = vel_epsilon
        self.out_dir = out_dir

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
            aug_trans_range=tuple(self.aug_trans_range),
            aug_yaw_range_deg=self.aug_yaw_range_deg,
            checkpoint_interval=self.checkpoint_interval,
            seed=self.seed,
            weight_decay=self.weight_decay,
            grad_clip=self.grad_clip,
            warmup_iterations=self.warmup_iterations,
        )

    def workspace_bounds(self) -> WorkspaceBounds:
        return WorkspaceBounds.cube(self.workspace_side, self.grid_size)

    def fit(self, X, y=None) -> "BehaviorCloner":
        """Train on a list of DemoEpisode; y is ignored (targets come from
        the demonstrations themselves)."""
        episodes = check_episodes(X)
        out_dir = self.out_dir if self.out_dir is not None else tempfile.mkdtemp(prefix="voxact_fit_")
        result = train(
            episodes,
            self.policy_config(),
            self.train_config(),
            out_dir,
            bounds=self.workspace_bounds(),
            vel_epsilon=self.vel_epsilon,
        )
        model, _ = load_checkpoint(result.checkpoint_path, expected_config=self.policy_config())
        self.model_ = model
        self.checkpoint_path_ = Path(result.checkpoint_path)
        self.loss_log_path_ = Path(result.loss_log_path)
        self.final_loss_ = result.final_loss
        self.acting_policy_ = ActingPolicy(model, bounds=self.workspace_bounds())
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise InvalidInputError("estimator is not fitted; call fit() first")

    def predict(self, X) -> list[DiscreteAction]:
        """Discrete actions for a list of observations.

        Each item is either a TrainingTuple or a dict with keys `views`
        and `goal` (optional `gripper_open`, `timestep`).
        """
        self._check_fitted()
        actions = []
        for item in X:
            q = self._predict_q(item)
            actions.append(select_best_action(q))
        return actions

    def _predict_q(self, item) -> QPrediction:
        if isinstance(item, TrainingTuple):
            return predict_q(
                self.model_,
                item.voxel_obs.channels,
                item.proprio,
                self.acting_policy_._lang(item.language_goal),
            )
        if isinstance(item, dict):
            return self.acting_policy_.predict_q_values(
                item["views"],
                item["goal"],
                int(item.get("gripper_open", 1)),
                float(item.get("timestep", 0.0)),
            )
        raise InvalidInputError(f"cannot predict from {type(item).__name__}")

    def score(self, X, y=None) -> float:
        """Exact-match action accuracy over TrainingTuple inputs."""
        self._check_fitted()
        tuples = [item for item in X if isinstance(item, TrainingTuple)]
        if not tuples:
            raise InvalidInputError("score requires TrainingTuple inputs")
        hits = sum(1 for t, a in zip(tuples, self.predict(tuples)) if a == t.target)
        return hits / len(tuples)
