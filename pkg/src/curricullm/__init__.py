"""LLM-guided task curricula for goal-conditioned control.

The pipeline asks a language model for an ordered list of subtasks, turns each
subtask into a reward program plus goal distribution, trains a policy per
candidate program with warm starts, and lets the model pick which candidate
carries forward.
"""

from importlib import resources

from .envs import available_envs, get_env
from .orchestrator import RunConfig, RunState, resume, run_curriculum, run_sparse, run_zeroshot
from .trainer import CEMTrainer, PolicyCheckpoint, TrainConfig

__all__ = [
    "CEMTrainer",
    "PolicyCheckpoint",
    "RunConfig",
    "RunState",
    "TrainConfig",
    "available_envs",
    "data_path",
    "get_env",
    "resume",
    "run_curriculum",
    "run_sparse",
    "run_zeroshot",
]


def data_path(name: str) -> str:
    """Path of a file shipped in ``curricullm/data`` (fixtures, example config)."""
    return str(resources.files(__package__) / "data" / name)
