"""Input validation helpers shared by the estimator and pipeline surfaces."""

from __future__ import annotations

from .demos import DemoEpisode
from .errors import InvalidInputError
from .voxelizer import CameraView, WorkspaceBounds


def check_views(views) -> list[CameraView]:
    if not views:
        raise InvalidInputError("at least one camera view is required")
    for view in views:
        if not isinstance(view, CameraView):
            raise InvalidInputError(f"expected CameraView, got {type(view).__name__}")
        view.validate()
    return list(views)


def check_episodes(episodes) -> list[DemoEpisode]:
    if not episodes:
        raise InvalidInputError("at least one demonstration episode is required")
    for episode in episodes:
        if not isinstance(episode, DemoEpisode):
            raise InvalidInputError(f"expected DemoEpisode, got {type(episode).__name__}")
        episode.validate()
    return list(episodes)


def check_bounds(bounds) -> WorkspaceBounds:
    if not isinstance(bounds, WorkspaceBounds):
        raise InvalidInputError(f"expected WorkspaceBounds, got {type(bounds).__name__}")
    return bounds


def check_goal(goal) -> str:
    if not isinstance(goal, str) or not goal.strip():
        raise InvalidInputError("goal must be a non-empty string")
    return goal
