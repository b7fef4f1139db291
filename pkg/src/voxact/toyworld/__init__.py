from .evaluate import EnvObservation, EpisodeResult, EvalReport, evaluate, run_episode
from .expert import RandomActionAgent, ScriptedReplayAgent, generate_demo, scripted_expert
from .scene import PALETTE, PALETTE_NAMES, SceneObject, SceneState
from .tasks import PressButtonTask, PutInSlotTask, StackBlockTask, TaskSpec, make_task
from .world import StepOutcome, ToyWorld

__all__ = [
    "EnvObservation",
    "EpisodeResult",
    "EvalReport",
    "PALETTE",
    "PALETTE_NAMES",
    "PressButtonTask",
    "PutInSlotTask",
    "RandomActionAgent",
    "SceneObject",
    "SceneState",
    "ScriptedReplayAgent",
    "StackBlockTask",
    "StepOutcome",
    "TaskSpec",
    "ToyWorld",
    "evaluate",
    "generate_demo",
    "make_task",
    "run_episode",
    "scripted_expert",
]
