"""Language-conditioned behavior cloning over voxel grids.

Pipeline: fuse multi-view RGB-D into a 10-channel voxel grid, extract
keyframes from demonstrations, discretize 6-DoF actions into voxel and
rotation-bin targets, train a latent-bottleneck transformer to detect the
next best action, and act in an observe-act loop. A scripted tabletop
world makes the whole loop testable end to end.
"""

from .action_codec import (
    ContinuousAction,
    DiscreteAction,
    OneHotLabels,
    QPrediction,
    discretize,
    encode_labels,
    select_best_action,
    undiscretize,
)
from .agent import ActingPolicy, BehaviorCloner
from .dataset_io import load_dataset, save_dataset
from .demos import (
    DemoEpisode,
    DemoFrame,
    TrainingTuple,
    extract_keyframes,
    make_training_tuples,
)
from .errors import (
    DatasetCorruptError,
    DatasetVersionError,
    InvalidInputError,
    NonFiniteLossError,
    OutOfBoundsError,
    VoxactError,
)
from .language import HashingLanguageEncoder, LanguageEncoder
from .policy import PolicyConfig, VoxelPolicyNet, build_policy, load_checkpoint, save_checkpoint
from .trainer import (
    LossBreakdown,
    TrainConfig,
    TrainingSet,
    augment,
    loss,
    sample_batch,
    train,
    train_step,
)
from .voxelizer import (
    CameraView,
    VoxelGrid,
    VoxelGridFuser,
    WorkspaceBounds,
    fuse,
    project_pointcloud,
    voxel_index_of,
)

__version__ = "0.1.0"

__all__ = [
    "ActingPolicy",
    "BehaviorCloner",
    "CameraView",
    "ContinuousAction",
    "DatasetCorruptError",
    "DatasetVersionError",
    "DemoEpisode",
    "DemoFrame",
    "DiscreteAction",
    "HashingLanguageEncoder",
    "InvalidInputError",
    "LanguageEncoder",
    "LossBreakdown",
    "NonFiniteLossError",
    "OneHotLabels",
    "OutOfBoundsError",
    "PolicyConfig",
    "QPrediction",
    "TrainConfig",
    "TrainingSet",
    "TrainingTuple",
    "VoxactError",
    "VoxelGrid",
    "VoxelGridFuser",
    "VoxelPolicyNet",
    "WorkspaceBounds",
    "augment",
    "build_policy",
    "discretize",
    "encode_labels",
    "extract_keyframes",
    "fuse",
    "load_checkpoint",
    "load_dataset",
    "loss",
    "make_training_tuples",
    "project_pointcloud",
    "sample_batch",
    "save_checkpoint",
    "save_dataset",
    "select_best_action",
    "train",
    "train_step",
    "undiscretize",
    "voxel_index_of",
]
