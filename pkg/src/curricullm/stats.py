"""Trajectory statistics handed to the evaluation LLM."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .envs import EnvironmentDefinition
from .errors import EmptyBatch
from .trainer import TrajectoryBatch


@dataclass(frozen=True, eq=False)
class TrajectorySummary:
    means: dict[str, tuple[float, ...]]
    episode_length_mean: float
    success_rate: float
    fault_count: int
    candidate_index: int = 0
    episodes: int = 0
    # std/min/max per variable; stored in run records, never rendered into prompts
    spread: dict[str, dict[str, tuple[float, ...]]] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, TrajectorySummary):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        return {
            "candidate_index": self.candidate_index,
            "episode_length_mean": self.episode_length_mean,
            "episodes": self.episodes,
            "fault_count": self.fault_count,
            "means": {k: list(v) for k, v in self.means.items()},
            "spread": {k: {s: list(x) for s, x in v.items()} for k, v in self.spread.items()},
            "success_rate": self.success_rate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectorySummary":
        return cls(
            means={k: tuple(v) for k, v in data["means"].items()},
            episode_length_mean=data["episode_length_mean"],
            success_rate=data["success_rate"],
            fault_count=data["fault_count"],
            candidate_index=data["candidate_index"],
            episodes=data.get("episodes", 0),
            spread={k: {s: tuple(x) for s, x in v.items()} for k, v in data.get("spread", {}).items()},
        )


def summarize(batch: TrajectoryBatch, env: EnvironmentDefinition, candidate_index: int = 0) -> TrajectorySummary:
    """Component-wise means of every variable over all steps of non-faulted episodes.

    Sums are exact (``math.fsum``), so the result does not depend on episode order.
    """
    if len(batch) == 0:
        raise EmptyBatch()
    clean = [ep for ep in batch if not ep.faulted]
    means, spread = {}, {}
    for v in env.variables:
        if clean:
            stacked = np.concatenate([ep.next_observations[v.name] for ep in clean], axis=0)
        else:
            stacked = np.empty((0, v.dims))
        if len(stacked):
            means[v.name] = tuple(math.fsum(stacked[:, i]) / len(stacked) for i in range(v.dims))
            spread[v.name] = {
                "std": tuple(float(x) for x in stacked.std(axis=0)),
                "min": tuple(float(x) for x in stacked.min(axis=0)),
                "max": tuple(float(x) for x in stacked.max(axis=0)),
            }
        else:
            means[v.name] = (float("nan"),) * v.dims
    n = len(batch)
    return TrajectorySummary(
        means=means,
        episode_length_mean=math.fsum(ep.steps for ep in batch) / n,
        success_rate=sum(ep.success for ep in batch) / n,
        fault_count=n - len(clean),
        candidate_index=candidate_index,
        episodes=n,
        spread=spread,
    )


def round3(value: float) -> str:
    """Round half away from zero to 3 decimals, based on the shortest decimal repr."""
    if not math.isfinite(value):
        return "nan" if value != value else ("inf" if value > 0 else "-inf")
    q = Decimal(repr(float(value))).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP)
    if q == 0:
        q = abs(q)
    return f"{q:.3f}"


def render_summary(summary: TrajectorySummary, agent_index: int, env: EnvironmentDefinition) -> str:
    lines = [f"Agent {agent_index}:"]
    for v in env.variables:
        values = " ".join(round3(x) for x in summary.means[v.name])
        lines.append(f"{v.name}: [{values}]")
    lines.append(f"episode_length: {round3(summary.episode_length_mean)}")
    lines.append(f"success_rate: {round3(summary.success_rate)}")
    return "\n".join(lines)


def render_summaries(summaries, env: EnvironmentDefinition) -> str:
    """One ``Agent k:`` block per summary; ``k`` is the position in ``summaries``."""
    if not summaries:
        raise ValueError("render_summaries needs at least one summary")
    return "\n\n".join(render_summary(s, k, env) for k, s in enumerate(summaries)) + "\n"


_AGENT = re.compile(r"^Agent (\d+):$")
_LINE = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*): \[?([^\]]*)\]?$")


def parse_rendered(text: str) -> list[dict[str, tuple[float, ...]]]:
    """Recover the quantized values of :func:`render_summaries` output."""
    blocks: list[dict] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _AGENT.match(line)
        if m:
            blocks.append({})
            continue
        m = _LINE.match(line)
        if m and blocks:
            blocks[-1][m.group(1)] = tuple(float(x) for x in m.group(2).split())
    return blocks
