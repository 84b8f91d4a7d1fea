"""Deterministic goal-conditioned point environments.

Every environment exposes a registry of named state variables. Observations
are normalized to ``[-1, 1]`` per component, and the same names are what the
reward DSL and the LLM prompts refer to.

Simulation is batched: :class:`BatchSim` advances ``N`` independent episodes
with elementwise numpy operations, so a batch of one and a batch of many
produce bit-identical trajectories for the same seeds. The single-episode
functions (:func:`reset_env`, :func:`step_env`, :func:`observe`) are thin
wrappers over a batch of size one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    InvalidGoalSpec,
    InvertedRange,
    RangeOutOfBounds,
    UnknownDimension,
    UnknownEnvironment,
)

_EPS = 1e-9


@dataclass(frozen=True)
class StateVariableDescriptor:
    name: str
    dims: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    description: str

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError(f"{self.name}: dims must be positive")
        if len(self.lower) != self.dims or len(self.upper) != self.dims:
            raise ValueError(f"{self.name}: bounds must have {self.dims} components")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError(f"{self.name}: lower bound must be below upper bound")


def _var(name, dims, lo, hi, description):
    return StateVariableDescriptor(name, dims, (float(lo),) * dims, (float(hi),) * dims, description)


@dataclass(frozen=True)
class GoalDistributionSpec:
    """Uniform goal distribution given as one ``(lo, hi)`` range per goal dimension."""

    ranges: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "ranges", {k: (float(lo), float(hi)) for k, (lo, hi) in self.ranges.items()}
        )

    def validate(self, env: "EnvironmentDefinition") -> "GoalDistributionSpec":
        for name, (lo, hi) in self.ranges.items():
            if name not in env.goal_dims:
                raise UnknownDimension(name)
            if lo > hi:
                raise InvertedRange(name, lo, hi)
            allowed = env.goal_dims[name]
            if lo < allowed[0] or hi > allowed[1]:
                raise RangeOutOfBounds(name, lo, hi, allowed)
        return self

    def resolved(self, env: "EnvironmentDefinition") -> dict[str, tuple[float, float]]:
        """Ranges for every goal dimension, falling back to the target spec."""
        self.validate(env)
        out = dict(env.target_goal_spec.ranges)
        out.update(self.ranges)
        return out

    def to_text(self) -> str:
        return "\n".join(f"{k}: [{lo!r}, {hi!r}]" for k, (lo, hi) in sorted(self.ranges.items()))


@dataclass(frozen=True, eq=False)
class EnvironmentDefinition:
    id: str
    variables: tuple[StateVariableDescriptor, ...]
    action_dims: int
    goal_dims: Mapping[str, tuple[float, float]]
    horizon: int
    dt: float
    target_goal_spec: GoalDistributionSpec
    env_description: str
    target_description: str
    terminate_on: str
    dynamics: "_Dynamics"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.terminate_on not in ("failure", "success"):
            raise ValueError(f"terminate_on must be 'failure' or 'success', got {self.terminate_on!r}")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        alive = self.variable("is_alive")
        if alive.dims != 1 or alive.lower != (0.0,) or alive.upper != (1.0,):
            raise ValueError("is_alive must be a scalar with bounds [0, 1]")
        self.target_goal_spec.validate(self)

    def variable(self, name: str) -> StateVariableDescriptor:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def feature_dims(self) -> int:
        return sum(v.dims for v in self.variables)


@dataclass(frozen=True, eq=False)
class Observation:
    values: Mapping[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __eq__(self, other):
        if not isinstance(other, Observation) or self.values.keys() != other.values.keys():
            return NotImplemented
        return all(np.array_equal(self.values[k], other.values[k]) for k in self.values)


@dataclass(frozen=True, eq=False)
class Transition:
    observation: Observation
    action: np.ndarray
    next_observation: Observation
    terminated: bool
    success: bool

    def __eq__(self, other):
        if not isinstance(other, Transition):
            return NotImplemented
        return (
            self.observation == other.observation
            and np.array_equal(self.action, other.action)
            and self.next_observation == other.next_observation
            and self.terminated == other.terminated
            and self.success == other.success
        )


# --- dynamics -------------------------------------------------------------------


def _accelerate(vel, action, dt, max_speed):
    vel = vel + action * dt
    speed = np.sqrt(vel[:, 0] ** 2 + vel[:, 1] ** 2)
    scale = np.where(speed > max_speed, max_speed / np.maximum(speed, _EPS), 1.0)
    return vel * scale[:, None]


def _disc_sample(rng, center, lo, hi):
    """Uniform-by-area sample from the annulus ``lo <= r <= hi`` around ``center``."""
    u, theta = rng.random(), rng.random() * 2.0 * np.pi
    radius = np.sqrt(lo * lo + u * (hi * hi - lo * lo))
    return np.array([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)])


def _unit(vec, norm):
    safe = np.where(norm > 1e-12, norm, 1.0)
    return np.where((norm > 1e-12)[:, None], vec / safe[:, None], 0.0)


class _Dynamics:
    def reset(self, ranges, seeds) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def step(self, state, actions, dt) -> tuple[dict[str, np.ndarray], np.ndarray, np.ndarray]:
        raise NotImplementedError

    def raw(self, state) -> dict[str, np.ndarray]:
        raise NotImplementedError


MAZE_LAYOUT = (
    "#####",
    "#...#",
    "###.#",
    "#...#",
    "#####",
)


class MazeDynamics(_Dynamics):
    """Point mass in a walled grid of unit cells; ``x`` is the column axis, ``y`` the row axis."""

    def __init__(self, layout=MAZE_LAYOUT, start=(3, 1), radius=0.1, max_speed=1.0,
                 success_radius=0.5):
        self.walls = np.array([[c == "#" for c in row] for row in layout])
        self.n_rows, self.n_cols = self.walls.shape
        self.start = start
        self.radius = radius
        self.max_speed = max_speed
        self.success_radius = success_radius
        free = [(r, c) for r in range(self.n_rows) for c in range(self.n_cols) if not self.walls[r, c]]
        self.free_cells = free
        n = self.n_rows * self.n_cols
        # hops[g, c] = grid path length from cell c to goal cell g; nxt[g, c] = next cell toward g
        self.hops = np.full((n, n), -1, dtype=np.int64)
        self.next_cell = np.full((n, n), -1, dtype=np.int64)
        for g in free:
            gi = self._flat(g)
            dist = self.bfs(g)
            for cell, d in dist.items():
                self.hops[gi, self._flat(cell)] = d
            for cell, d in dist.items():
                if d == 0:
                    self.next_cell[gi, self._flat(cell)] = gi
                    continue
                for nb in self._neighbours(cell):
                    if dist.get(nb) == d - 1:
                        self.next_cell[gi, self._flat(cell)] = self._flat(nb)
                        break

    def _flat(self, cell):
        return cell[0] * self.n_cols + cell[1]

    def _neighbours(self, cell):
        r, c = cell
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.n_rows and 0 <= cc < self.n_cols and not self.walls[rr, cc]:
                yield rr, cc

    def bfs(self, origin) -> dict[tuple[int, int], int]:
        dist = {origin: 0}
        queue = deque([origin])
        while queue:
            cell = queue.popleft()
            for nb in self._neighbours(cell):
                if nb not in dist:
                    dist[nb] = dist[cell] + 1
                    queue.append(nb)
        return dist

    @staticmethod
    def center(cell):
        return np.array([cell[1] + 0.5, cell[0] + 0.5])

    def admissible_goals(self, lo, hi) -> list[tuple[int, int]]:
        dist = self.bfs(self.start)
        return sorted(cell for cell, d in dist.items() if lo - _EPS <= d <= hi + _EPS)

    def reset(self, ranges, seeds):
        lo, hi = ranges["goal_distance"]
        cells = self.admissible_goals(lo, hi)
        if not cells:
            raise InvalidGoalSpec(f"no maze cell at path distance within [{lo}, {hi}]")
        goals = []
        for seed in seeds:
            rng = np.random.default_rng(seed)
            goals.append(self.center(cells[int(rng.integers(len(cells)))]))
        n = len(seeds)
        return {
            "pos": np.tile(self.center(self.start), (n, 1)),
            "vel": np.zeros((n, 2)),
            "goal": np.array(goals).reshape(n, 2),
        }

    def _move_axis(self, pos, vel, axis, dt):
        r = self.radius
        other = 1 - axis
        moving = vel[:, axis]
        new = pos[:, axis] + moving * dt
        lo_o = np.floor(pos[:, other] - r + _EPS).astype(np.int64)
        hi_o = np.ceil(pos[:, other] + r - _EPS).astype(np.int64) - 1
        cell_pos = np.ceil(new + r - _EPS).astype(np.int64) - 1
        cell_neg = np.floor(new - r + _EPS).astype(np.int64)
        size = self.n_cols if axis == 0 else self.n_rows
        cell = np.clip(np.where(moving > 0, cell_pos, cell_neg), 0, size - 1)
        lo_o = np.clip(lo_o, 0, self.n_rows - 1 if axis == 0 else self.n_cols - 1)
        hi_o = np.clip(hi_o, 0, self.n_rows - 1 if axis == 0 else self.n_cols - 1)
        if axis == 0:
            hit = self.walls[lo_o, cell] | self.walls[hi_o, cell]
        else:
            hit = self.walls[cell, lo_o] | self.walls[cell, hi_o]
        hit &= moving != 0
        clamped = np.where(moving > 0, cell - r, cell + 1 + r)
        pos[:, axis] = np.where(hit, clamped, new)
        vel[:, axis] = np.where(hit, 0.0, moving)

    def step(self, state, actions, dt):
        vel = _accelerate(state["vel"], actions, dt, self.max_speed)
        pos = state["pos"].copy()
        self._move_axis(pos, vel, 0, dt)
        self._move_axis(pos, vel, 1, dt)
        new = {"pos": pos, "vel": vel, "goal": state["goal"]}
        gap = pos - state["goal"]
        success = np.sqrt(gap[:, 0] ** 2 + gap[:, 1] ** 2) < self.success_radius
        return new, success, np.zeros(len(pos), dtype=bool)

    def path_distance(self, pos, goal):
        """Shortest distance through the maze from ``pos`` to the goal cell center."""
        cols = np.clip(np.floor(pos[:, 0]).astype(np.int64), 0, self.n_cols - 1)
        rows = np.clip(np.floor(pos[:, 1]).astype(np.int64), 0, self.n_rows - 1)
        here = rows * self.n_cols + cols
        gcol = np.floor(goal[:, 0]).astype(np.int64)
        grow = np.floor(goal[:, 1]).astype(np.int64)
        gi = grow * self.n_cols + gcol
        nxt = self.next_cell[gi, here]
        waypoint = np.stack([nxt % self.n_cols + 0.5, nxt // self.n_cols + 0.5], axis=1)
        gap = waypoint - pos
        leg = np.sqrt(gap[:, 0] ** 2 + gap[:, 1] ** 2)
        return leg + self.hops[gi, nxt]

    def raw(self, state):
        pos, goal = state["pos"], state["goal"]
        delta = goal - pos
        euclid = np.sqrt(delta[:, 0] ** 2 + delta[:, 1] ** 2)
        return {
            "agent_pos": pos,
            "agent_vel": state["vel"],
            "goal_pos": goal,
            "dist_to_goal": self.path_distance(pos, goal)[:, None],
            "goal_direction": _unit(delta, euclid),
        }


class OpenDynamics(_Dynamics):
    """Point mass in an empty square; the goal is placed on a disc around the center."""

    def __init__(self, size=4.0, start=(1.0, 1.0), radius=0.1, max_speed=1.0, success_radius=0.3):
        self.size = size
        self.start = np.array(start, dtype=float)
        self.radius = radius
        self.max_speed = max_speed
        self.success_radius = success_radius

    def reset(self, ranges, seeds):
        lo, hi = ranges["goal_radius"]
        mid = (self.size / 2.0, self.size / 2.0)
        goals = [_disc_sample(np.random.default_rng(s), mid, lo, hi) for s in seeds]
        n = len(seeds)
        return {
            "pos": np.tile(self.start, (n, 1)),
            "vel": np.zeros((n, 2)),
            "goal": np.array(goals).reshape(n, 2),
        }

    def step(self, state, actions, dt):
        vel = _accelerate(state["vel"], actions, dt, self.max_speed)
        raw_pos = state["pos"] + vel * dt
        pos = np.clip(raw_pos, self.radius, self.size - self.radius)
        vel = np.where(pos != raw_pos, 0.0, vel)
        gap = pos - state["goal"]
        success = np.sqrt(gap[:, 0] ** 2 + gap[:, 1] ** 2) < self.success_radius
        return {"pos": pos, "vel": vel, "goal": state["goal"]}, success, np.zeros(len(pos), dtype=bool)

    def raw(self, state):
        pos, goal = state["pos"], state["goal"]
        delta = goal - pos
        dist = np.sqrt(delta[:, 0] ** 2 + delta[:, 1] ** 2)
        return {
            "agent_pos": pos,
            "agent_vel": state["vel"],
            "goal_pos": goal,
            "dist_to_goal": dist[:, None],
            "goal_direction": _unit(delta, dist),
        }


class PushDynamics(_Dynamics):
    """Agent disc pushing a block disc; contacts are resolved by quasi-static projection."""

    def __init__(self, size=4.0, agent_start=(1.0, 1.0), block_start=(2.0, 2.0),
                 agent_radius=0.2, block_radius=0.3, max_speed=1.0, success_radius=0.5):
        self.size = size
        self.agent_start = np.array(agent_start, dtype=float)
        self.block_start = np.array(block_start, dtype=float)
        self.ra = agent_radius
        self.rb = block_radius
        self.max_speed = max_speed
        self.success_radius = success_radius

    @property
    def contact(self):
        return self.ra + self.rb

    def reset(self, ranges, seeds):
        lo, hi = ranges["goal_radius"]
        goals = [_disc_sample(np.random.default_rng(s), self.block_start, lo, hi) for s in seeds]
        n = len(seeds)
        goal = np.clip(np.array(goals).reshape(n, 2), self.rb, self.size - self.rb)
        return {
            "pos": np.tile(self.agent_start, (n, 1)),
            "vel": np.zeros((n, 2)),
            "block": np.tile(self.block_start, (n, 1)),
            "goal": goal,
        }

    def step(self, state, actions, dt):
        old_pos, old_block = state["pos"], state["block"]
        vel = _accelerate(state["vel"], actions, dt, self.max_speed)
        raw_pos = old_pos + vel * dt
        pos = np.clip(raw_pos, self.ra, self.size - self.ra)
        vel = np.where(pos != raw_pos, 0.0, vel)

        gap = old_block - pos
        dist = np.sqrt(gap[:, 0] ** 2 + gap[:, 1] ** 2)
        touching = dist < self.contact
        # degenerate concentric overlap: push along the agent's motion direction
        normal = np.where((dist > 1e-12)[:, None], gap / np.where(dist > 1e-12, dist, 1.0)[:, None], 0.0)
        moved = pos - old_pos
        fallback = _unit(moved, np.sqrt(moved[:, 0] ** 2 + moved[:, 1] ** 2))
        normal = np.where((dist > 1e-12)[:, None], normal, fallback)
        pushed = np.clip(pos + normal * self.contact, self.rb, self.size - self.rb)
        block = np.where(touching[:, None], pushed, old_block)

        # block pinned by a wall: back the agent off along the contact normal
        gap = block - pos
        dist = np.sqrt(gap[:, 0] ** 2 + gap[:, 1] ** 2)
        overlap = dist < self.contact - _EPS
        n2 = _unit(gap, dist)
        retreat = np.clip(block - n2 * self.contact, self.ra, self.size - self.ra)
        pos = np.where(overlap[:, None], retreat, pos)

        # anything still penetrating reverts to the last valid configuration
        gap = block - pos
        dist = np.sqrt(gap[:, 0] ** 2 + gap[:, 1] ** 2)
        bad = dist < self.contact - _EPS
        pos = np.where(bad[:, None], old_pos, pos)
        block = np.where(bad[:, None], old_block, block)
        vel = np.where((bad | overlap)[:, None], 0.0, vel)

        gap = block - state["goal"]
        success = np.sqrt(gap[:, 0] ** 2 + gap[:, 1] ** 2) < self.success_radius
        new = {"pos": pos, "vel": vel, "block": block, "goal": state["goal"]}
        return new, success, np.zeros(len(pos), dtype=bool)

    def raw(self, state):
        pos, block, goal = state["pos"], state["block"], state["goal"]
        ab = block - pos
        bg = goal - block
        return {
            "agent_pos": pos,
            "agent_vel": state["vel"],
            "block_pos": block,
            "goal_pos": goal,
            "dist_agent_block": np.sqrt(ab[:, 0] ** 2 + ab[:, 1] ** 2)[:, None],
            "dist_block_goal": np.sqrt(bg[:, 0] ** 2 + bg[:, 1] ** 2)[:, None],
        }


# --- batched simulation -------------------------------------------------------------


class BatchSim:
    """``N`` independent episodes of one environment advanced in lockstep.

    Finished episodes are frozen: further actions leave their state unchanged.
    """

    def __init__(self, env: EnvironmentDefinition, spec: GoalDistributionSpec, seeds):
        self.env = env
        self.spec = spec
        self.seeds = [int(s) for s in seeds]
        ranges = spec.resolved(env)
        self.state = env.dynamics.reset(ranges, self.seeds)
        n = len(self.seeds)
        self.t = np.zeros(n, dtype=np.int64)
        self.done = np.zeros(n, dtype=bool)
        self.success = np.zeros(n, dtype=bool)
        self.failed = np.zeros(n, dtype=bool)
        lows, spans = [], []
        for v in env.variables:
            lows.append(np.array(v.lower))
            spans.append(np.array(v.upper) - np.array(v.lower))
        self._lows = lows
        self._spans = spans

    def __len__(self):
        return len(self.seeds)

    def observe(self) -> dict[str, np.ndarray]:
        raw = self.env.dynamics.raw(self.state)
        raw["is_alive"] = (~self.failed).astype(float)[:, None]
        out = {}
        for v, lo, span in zip(self.env.variables, self._lows, self._spans):
            out[v.name] = np.clip(2.0 * (raw[v.name] - lo) / span - 1.0, -1.0, 1.0)
        return out

    def step(self, actions):
        """Advance active episodes; returns ``(success, terminated)`` for this step."""
        actions = np.clip(np.asarray(actions, dtype=float).reshape(len(self), self.env.action_dims), -1.0, 1.0)
        active = ~self.done
        new, success, failure = self.env.dynamics.step(self.state, actions, self.env.dt)
        for key, value in new.items():
            mask = active.reshape((-1,) + (1,) * (value.ndim - 1))
            self.state[key] = np.where(mask, value, self.state[key])
        success &= active
        failure &= active
        self.t = np.where(active, self.t + 1, self.t)
        self.success |= success
        self.failed |= failure
        if self.env.terminate_on == "success":
            stop = success | failure
        else:
            stop = failure
        terminated = active & (stop | (self.t >= self.env.horizon))
        self.done |= terminated
        return success, terminated


# --- single-episode API ---------------------------------------------------------------


@dataclass(eq=False)
class EnvState:
    sim: BatchSim

    @property
    def env(self) -> EnvironmentDefinition:
        return self.sim.env

    @property
    def done(self) -> bool:
        return bool(self.sim.done[0])


def _single(values: dict[str, np.ndarray]) -> Observation:
    return Observation({k: v[0].copy() for k, v in values.items()})


def reset_env(env: EnvironmentDefinition, spec: GoalDistributionSpec, seed: int):
    sim = BatchSim(env, spec, [seed])
    state = EnvState(sim)
    return state, observe(state)


def observe(state: EnvState) -> Observation:
    return _single(state.sim.observe())


def step_env(state: EnvState, action) -> Transition:
    action = np.clip(np.asarray(action, dtype=float).reshape(state.env.action_dims), -1.0, 1.0)
    before = observe(state)
    success, terminated = state.sim.step(action[None, :])
    return Transition(
        observation=before,
        action=action,
        next_observation=observe(state),
        terminated=bool(terminated[0]) or state.done,
        success=bool(success[0]),
    )


def env_description(env: EnvironmentDefinition) -> str:
    lines = [env.env_description.strip(), "", "State variables (each normalized to [-1, 1]):"]
    for v in env.variables:
        lines.append(f"{v.name}: {v.description} ({v.dims} component{'s' if v.dims > 1 else ''})")
    lines.append(f"action: commanded acceleration ({env.action_dims} components in [-1, 1])")
    lines.append("")
    lines.append("Goal distribution dimensions (allowed ranges):")
    for name, (lo, hi) in env.goal_dims.items():
        lines.append(f"{name}: [{lo:g}, {hi:g}]")
    lines.append("")
    lines.append(f"Target task: {env.target_description.strip()}")
    lines.append("Target goal distribution:")
    for name, (lo, hi) in env.target_goal_spec.ranges.items():
        lines.append(f"{name}: [{lo:g}, {hi:g}]")
    return "\n".join(lines) + "\n"


# --- built-in environments ------------------------------------------------------------


def _point_variables(extent, max_speed):
    return [
        _var("agent_pos", 2, 0.0, extent, "agent position (x, y) in the workspace"),
        _var("agent_vel", 2, -max_speed, max_speed, "agent velocity (x, y)"),
        _var("goal_pos", 2, 0.0, extent, "goal position (x, y)"),
    ]


def _make_point_maze() -> EnvironmentDefinition:
    dyn = MazeDynamics()
    diameter = float(np.hypot(5.0, 5.0))
    variables = _point_variables(5.0, dyn.max_speed) + [
        _var("dist_to_goal", 1, 0.0, diameter,
             "shortest path distance from the agent to the goal through the maze corridors"),
        _var("goal_direction", 2, -1.0, 1.0,
             "unit vector pointing from the agent straight toward the goal, ignoring walls"),
        _var("is_alive", 1, 0.0, 1.0, "1 while the episode has not failed, 0 after failure"),
    ]
    return EnvironmentDefinition(
        id="point_maze",
        variables=tuple(variables),
        action_dims=2,
        goal_dims={"goal_distance": (0.0, 6.0)},
        horizon=200,
        dt=0.1,
        target_goal_spec=GoalDistributionSpec({"goal_distance": (6.0, 6.0)}),
        env_description=(
            "A point-mass agent moves inside a 5x5 grid of unit cells. Walls surround the grid and "
            "block two interior cells, so the free corridor forms a U shape. The agent starts at the "
            "center of the lower-left corridor cell. The action is a 2D acceleration; speed is limited "
            "to 1 cell per second and walls stop motion. Goals are placed at free cell centers, chosen "
            "by their path distance (in cells) from the start."
        ),
        target_description=(
            "Reach the goal at the far end of the U-shaped corridor, at path distance 6 cells from the "
            "start, directly above the start on the other side of the wall."
        ),
        terminate_on="success",
        dynamics=dyn,
    )


def _make_point_push() -> EnvironmentDefinition:
    dyn = PushDynamics()
    diameter = float(np.hypot(4.0, 4.0))
    variables = _point_variables(4.0, dyn.max_speed) + [
        _var("block_pos", 2, 0.0, 4.0, "block position (x, y)"),
        _var("dist_agent_block", 1, 0.0, diameter, "distance between agent and block centers"),
        _var("dist_block_goal", 1, 0.0, diameter, "distance between block center and goal"),
        _var("is_alive", 1, 0.0, 1.0, "1 while the episode has not failed, 0 after failure"),
    ]
    # registry order matches the variable list documented for this environment
    order = ["agent_pos", "agent_vel", "block_pos", "goal_pos", "dist_agent_block",
             "dist_block_goal", "is_alive"]
    by_name = {v.name: v for v in variables}
    return EnvironmentDefinition(
        id="point_push",
        variables=tuple(by_name[n] for n in order),
        action_dims=2,
        goal_dims={"goal_radius": (0.0, 1.5)},
        horizon=200,
        dt=0.1,
        target_goal_spec=GoalDistributionSpec({"goal_radius": (1.5, 1.5)}),
        env_description=(
            "A disc-shaped agent (radius 0.2) moves in an open 4x4 workspace and can push a disc-shaped "
            "block (radius 0.3) by contact. The agent starts at (1, 1) and the block at (2, 2). The action "
            "is a 2D acceleration with speed limited to 1 unit per second. The goal is sampled on a ring "
            "around the block's start position whose radius is drawn from goal_radius."
        ),
        target_description=(
            "Push the block so that its center ends within 0.5 units of a goal placed 1.5 units away "
            "from the block's start position."
        ),
        terminate_on="success",
        dynamics=dyn,
    )


def _make_point_open() -> EnvironmentDefinition:
    dyn = OpenDynamics()
    diameter = float(np.hypot(4.0, 4.0))
    variables = _point_variables(4.0, dyn.max_speed) + [
        _var("dist_to_goal", 1, 0.0, diameter, "straight-line distance from the agent to the goal"),
        _var("goal_direction", 2, -1.0, 1.0, "unit vector pointing from the agent toward the goal"),
        _var("is_alive", 1, 0.0, 1.0, "1 while the episode has not failed, 0 after failure"),
    ]
    return EnvironmentDefinition(
        id="point_open",
        variables=tuple(variables),
        action_dims=2,
        goal_dims={"goal_radius": (0.0, 1.5)},
        horizon=100,
        dt=0.1,
        target_goal_spec=GoalDistributionSpec({"goal_radius": (0.0, 1.5)}),
        env_description=(
            "A point-mass agent moves in an empty 4x4 workspace, starting at (1, 1). The action is a 2D "
            "acceleration with speed limited to 1 unit per second. Episodes always run for the full "
            "horizon."
        ),
        target_description="Move to the goal sampled around the workspace center and stay there.",
        terminate_on="failure",
        dynamics=dyn,
    )


_FACTORIES = {
    "point_maze": _make_point_maze,
    "point_push": _make_point_push,
    "point_open": _make_point_open,
}
_CACHE: dict[str, EnvironmentDefinition] = {}


def available_envs() -> list[str]:
    return sorted(_FACTORIES)


def get_env(env_id: str) -> EnvironmentDefinition:
    if env_id not in _FACTORIES:
        raise UnknownEnvironment(f"unknown environment {env_id!r}; available: {', '.join(available_envs())}")
    if env_id not in _CACHE:
        _CACHE[env_id] = _FACTORIES[env_id]()
    return _CACHE[env_id]


def dump_env(env: EnvironmentDefinition) -> dict:
    """Structured record of an environment's registry, for prompt auditing."""
    return {
        "id": env.id,
        "horizon": env.horizon,
        "dt": env.dt,
        "terminate_on": env.terminate_on,
        "action_dims": env.action_dims,
        "variables": [
            {"name": v.name, "dims": v.dims, "lower": list(v.lower), "upper": list(v.upper),
             "description": v.description}
            for v in env.variables
        ],
        "goal_dims": {k: list(r) for k, r in env.goal_dims.items()},
        "target_goal_spec": {k: list(r) for k, r in env.target_goal_spec.ranges.items()},
        "env_description": env.env_description,
        "target_description": env.target_description,
        "description": env_description(env),
    }
