"""Cross-entropy-method policy search over linear-tanh policies.

The policy maps the concatenated normalized observation ``phi`` to
``tanh(W @ phi + b)``; parameters are ``W`` flattened row-major followed by
``b``. All members of a CEM population are simulated together in one
:class:`~curricullm.envs.BatchSim`, and within an iteration every member sees
the same episode seeds.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from sklearn.base import BaseEstimator

from .envs import BatchSim, EnvironmentDefinition, GoalDistributionSpec, Observation, Transition
from .errors import ConfigError, TaskCodeRuntimeFault

logger = logging.getLogger(__name__)

ARCHITECTURE = "linear-tanh-v1"


def n_params(env: EnvironmentDefinition) -> int:
    return env.action_dims * (env.feature_dims + 1)


@dataclass(frozen=True, eq=False)
class PolicyCheckpoint:
    env_id: str
    params: np.ndarray
    provenance: tuple[int, int, int] = (0, 0, 0)  # (subtask, candidate, seed)
    architecture: str = ARCHITECTURE

    def __post_init__(self):
        params = np.array(self.params, dtype=float).reshape(-1)
        if not np.all(np.isfinite(params)):
            raise ValueError("checkpoint parameters must be finite")
        params.setflags(write=False)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "provenance", tuple(int(p) for p in self.provenance))

    @classmethod
    def zeros(cls, env: EnvironmentDefinition, provenance=(0, 0, 0)):
        return cls(env.id, np.zeros(n_params(env)), provenance)

    def check(self, env: EnvironmentDefinition) -> "PolicyCheckpoint":
        if self.architecture != ARCHITECTURE:
            raise ValueError(f"unsupported architecture {self.architecture!r}")
        if self.env_id != env.id or len(self.params) != n_params(env):
            raise ValueError(f"checkpoint for {self.env_id!r} does not match environment {env.id!r}")
        return self

    def __eq__(self, other):
        if not isinstance(other, PolicyCheckpoint):
            return NotImplemented
        return (self.env_id, self.provenance, self.architecture) == (
            other.env_id, other.provenance, other.architecture
        ) and np.array_equal(self.params, other.params)

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "env_id": self.env_id,
            "params": [float(p) for p in self.params],
            "provenance": {"subtask": self.provenance[0], "candidate": self.provenance[1],
                           "seed": self.provenance[2]},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyCheckpoint":
        prov = data["provenance"]
        return cls(data["env_id"], np.array(data["params"], dtype=float),
                   (prov["subtask"], prov["candidate"], prov["seed"]), data["architecture"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "PolicyCheckpoint":
        return cls.from_dict(json.loads(text))


def features(obs: dict[str, np.ndarray], env: EnvironmentDefinition) -> np.ndarray:
    return np.concatenate([obs[v.name] for v in env.variables], axis=1)


def policy_actions(params: np.ndarray, feats: np.ndarray, action_dims: int) -> np.ndarray:
    """Actions for ``P`` parameter vectors applied to ``(P, E, F)`` features -> ``(P, E, A)``."""
    n_feat = feats.shape[-1]
    weights = params[:, : action_dims * n_feat].reshape(len(params), action_dims, n_feat)
    bias = params[:, action_dims * n_feat:]
    # explicit multiply-and-sum keeps every row independent of the batch size
    pre = (feats[:, :, None, :] * weights[:, None, :, :]).sum(axis=-1) + bias[:, None, :]
    return np.tanh(pre)


class SparseReward:
    """1 on the step that achieves success, 0 otherwise."""

    def rewards(self, obs, action, success):
        return success.astype(float), np.zeros(len(success), dtype=np.int8)


@dataclass
class SimResult:
    returns: np.ndarray  # (P, E) discounted returns, NaN where faulted
    faulted: np.ndarray  # (P, E)
    success: np.ndarray  # (P, E)
    lengths: np.ndarray  # (P, E)
    records: dict | None = None


def simulate(env, params, spec, seeds, reward=None, gamma=0.99, record=False) -> SimResult:
    """Run every parameter vector on every seed in one batch."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    seeds = list(seeds)
    n_members, n_eps = len(params), len(seeds)
    sim = BatchSim(env, spec, seeds * n_members)
    n = len(sim)
    obs = sim.observe()
    ret = np.zeros(n)
    disc = np.ones(n)
    faulted = np.zeros(n, dtype=bool)
    steps = []
    for _ in range(env.horizon):
        active = ~sim.done
        if not active.any():
            break
        feats = features(obs, env).reshape(n_members, n_eps, -1)
        act = policy_actions(params, feats, env.action_dims).reshape(n, env.action_dims)
        success, terminated = sim.step(act)
        nxt = sim.observe()
        if reward is not None:
            r, f = reward.rewards(nxt, act, success)
            faulted |= active & (f != 0)
            ret = np.where(active & ~faulted, ret + disc * np.nan_to_num(r), ret)
            disc = disc * gamma
        if record:
            steps.append((obs, act, nxt, active, success, terminated))
        obs = nxt
    ret = np.where(faulted, np.nan, ret)
    shape = (n_members, n_eps)
    records = None
    if record:
        records = _stack_records(steps, env)
    return SimResult(ret.reshape(shape), faulted.reshape(shape), sim.success.reshape(shape),
                     sim.t.reshape(shape), records)


def _stack_records(steps, env):
    if not steps:
        return None
    names = env.variable_names
    return {
        "obs": {k: np.stack([s[0][k] for s in steps]) for k in names},
        "action": np.stack([s[1] for s in steps]),
        "next_obs": {k: np.stack([s[2][k] for s in steps]) for k in names},
        "success": np.stack([s[4] for s in steps]),
        "terminated": np.stack([s[5] for s in steps]),
    }


# --- trajectories ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Episode:
    seed: int
    observations: dict[str, np.ndarray]  # name -> (T, dims), state s_t
    actions: np.ndarray  # (T, A)
    next_observations: dict[str, np.ndarray]  # name -> (T, dims), state s_{t+1}
    success: bool
    discounted_return: float | None = None
    faulted: bool = False

    @property
    def steps(self) -> int:
        return len(self.actions)

    def transitions(self) -> list[Transition]:
        out = []
        for t in range(self.steps):
            last = t == self.steps - 1
            out.append(Transition(
                observation=Observation({k: v[t] for k, v in self.observations.items()}),
                action=self.actions[t],
                next_observation=Observation({k: v[t] for k, v in self.next_observations.items()}),
                terminated=last,
                success=last and self.success,
            ))
        return out

    def __eq__(self, other):
        if not isinstance(other, Episode):
            return NotImplemented
        same_obs = all(
            np.array_equal(self.observations[k], other.observations[k])
            and np.array_equal(self.next_observations[k], other.next_observations[k])
            for k in self.observations
        )
        return (
            same_obs
            and np.array_equal(self.actions, other.actions)
            and (self.seed, self.success, self.faulted) == (other.seed, other.success, other.faulted)
            and (self.discounted_return == other.discounted_return
                 or (self.discounted_return != self.discounted_return
                     and other.discounted_return != other.discounted_return))
        )


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    episodes: tuple[Episode, ...] = ()

    def __len__(self):
        return len(self.episodes)

    def __iter__(self):
        return iter(self.episodes)

    def __eq__(self, other):
        if not isinstance(other, TrajectoryBatch):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self, other))


def rollout(policy: PolicyCheckpoint, env: EnvironmentDefinition, spec: GoalDistributionSpec,
            n_episodes: int, seed: int, code=None, gamma: float = 0.99) -> TrajectoryBatch:
    """Episodes with seeds ``seed .. seed + n_episodes - 1``; returns are computed when ``code`` is given."""
    spec.validate(env)
    if n_episodes <= 0:
        return TrajectoryBatch(())
    policy.check(env)
    seeds = list(range(seed, seed + n_episodes))
    res = simulate(env, policy.params, spec, seeds, reward=code, gamma=gamma, record=True)
    rec = res.records
    episodes = []
    for i, s in enumerate(seeds):
        length = int(res.lengths[0, i])
        obs = {k: v[:length, i].copy() for k, v in rec["obs"].items()}
        nxt = {k: v[:length, i].copy() for k, v in rec["next_obs"].items()}
        ret = None if code is None else float(res.returns[0, i])
        episodes.append(Episode(s, obs, rec["action"][:length, i].copy(), nxt,
                                bool(res.success[0, i]), ret, bool(res.faulted[0, i])))
    return TrajectoryBatch(tuple(episodes))


def evaluate_target(policy: PolicyCheckpoint, env: EnvironmentDefinition, n_episodes: int, seed: int,
                    gamma: float = 0.99) -> tuple[float, float]:
    """Success rate and mean discounted sparse return under the target goal distribution."""
    if n_episodes <= 0:
        raise ValueError("n_episodes must be positive")
    policy.check(env)
    seeds = list(range(seed, seed + n_episodes))
    res = simulate(env, policy.params, env.target_goal_spec, seeds, reward=SparseReward(), gamma=gamma)
    return float(res.success.mean()), float(res.returns.mean())


# --- CEM ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    population: int = 64
    elite_count: int = 8
    iterations: int = 30
    episodes_per_fitness: int = 4
    sigma_init_fresh: float = 0.5
    sigma_init_warm: float = 0.5
    sigma_min: float = 0.02
    discount: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.elite_count <= self.population:
            raise ConfigError("need 0 < elite_count <= population")
        if not 0 < self.discount <= 1:
            raise ConfigError("discount must be in (0, 1]")
        if min(self.sigma_init_fresh, self.sigma_init_warm, self.sigma_min) <= 0:
            raise ConfigError("sigmas must be positive")
        if self.iterations < 0 or self.episodes_per_fitness < 1:
            raise ConfigError("iterations must be >= 0 and episodes_per_fitness >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class IterationRecord:
    iteration: int
    mean_fitness: float
    best_fitness: float
    best_so_far: float
    faulted: int
    sigma_mean: float
    steps: int


@dataclass
class FitnessCurve:
    rows: list[IterationRecord] = field(default_factory=list)

    @property
    def best_so_far(self) -> list[float]:
        return [r.best_so_far for r in self.rows]

    @property
    def total_steps(self) -> int:
        return sum(r.steps for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iteration,mean_fitness,best_fitness,best_so_far,faulted,sigma_mean,steps\n")
        for r in self.rows:
            buf.write(f"{r.iteration},{r.mean_fitness!r},{r.best_fitness!r},{r.best_so_far!r},"
                      f"{r.faulted},{r.sigma_mean!r},{r.steps}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FitnessCurve":
        lines = text.strip().splitlines()[1:]
        rows = []
        for line in lines:
            it, mean, best, bsf, faulted, sigma, steps = line.split(",")
            rows.append(IterationRecord(int(it), float(mean), float(best), float(bsf), int(faulted),
                                        float(sigma), int(steps)))
        return cls(rows)


class CEMTrainer(BaseEstimator):
    """Cross-entropy method over linear-tanh policy parameters.

    Parameters
    ----------
    population : int, default=64
        Members sampled per iteration.
    elite_count : int, default=8
        Best members the Gaussian is refit to.
    iterations : int, default=30
        Number of sample/evaluate/refit rounds.
    episodes_per_fitness : int, default=4
        Episodes averaged into each member's fitness. All members of one
        iteration share the same episode seeds.
    sigma_init_fresh, sigma_init_warm : float
        Initial standard deviation without and with a warm-start checkpoint.
    sigma_min : float, default=0.02
        Floor applied to the refit standard deviation.
    discount : float, default=0.99
    seed : int, default=0

    Attributes
    ----------
    checkpoint_ : PolicyCheckpoint
        Best member ever evaluated (or the initial policy when
        ``iterations == 0``).
    fitness_curve_ : FitnessCurve
    best_fitness_ : float
    """

    def __init__(self, population=64, elite_count=8, iterations=30, episodes_per_fitness=4,
                 sigma_init_fresh=0.5, sigma_init_warm=0.5, sigma_min=0.02, discount=0.99, seed=0):
        self.population = population
        self.elite_count = elite_count
        self.iterations = iterations
        self.episodes_per_fitness = episodes_per_fitness
        self.sigma_init_fresh = sigma_init_fresh
        self.sigma_init_warm = sigma_init_warm
        self.sigma_min = sigma_min
        self.discount = discount
        self.seed = seed

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "CEMTrainer":
        return cls(**cfg.to_dict())

    def evaluate_population(self, env, reward, spec, pop, seeds) -> tuple[np.ndarray, int]:
        """Fitness of each row of ``pop`` (``-inf`` when any episode faulted) and steps used."""
        res = simulate(env, pop, spec, seeds, reward=reward, gamma=self.discount)
        fitness = np.where(res.faulted.any(axis=1), -np.inf, res.returns.mean(axis=1))
        return fitness, int(res.lengths.sum())

    def fit(self, env: EnvironmentDefinition, task_code, init: PolicyCheckpoint | None = None,
            provenance=(0, 0, 0)):
        TrainConfig(**self.get_params())
        spec = getattr(task_code, "goal_spec", env.target_goal_spec)
        dim = n_params(env)
        if init is not None:
            init.check(env)
            mean = np.array(init.params, dtype=float)
            sigma = np.full(dim, float(self.sigma_init_warm))
        else:
            mean = np.zeros(dim)
            sigma = np.full(dim, float(self.sigma_init_fresh))
        rng = np.random.default_rng(self.seed)
        best_params, best = mean.copy(), -np.inf
        curve = FitnessCurve()
        for it in range(self.iterations):
            pop = mean + sigma * rng.standard_normal((self.population, dim))
            seeds = [int(s) for s in rng.integers(0, 2**31 - 1, size=self.episodes_per_fitness)]
            fitness, steps = self.evaluate_population(env, task_code, spec, pop, seeds)
            finite = np.isfinite(fitness)
            if it == 0 and not finite.any():
                raise TaskCodeRuntimeFault("every population member faulted in the first iteration")
            order = np.lexsort((np.arange(len(fitness)), -np.where(finite, fitness, -np.inf)))
            top = int(order[0])
            if finite[top] and fitness[top] > best:
                best, best_params = float(fitness[top]), pop[top].copy()
            elites = [i for i in order if finite[i]][: self.elite_count]
            if elites:
                elite = pop[elites]
                assert np.all(np.isfinite(elite))
                mean = elite.mean(axis=0)
                sigma = np.maximum(elite.std(axis=0), self.sigma_min)
            curve.rows.append(IterationRecord(
                iteration=it + 1,
                mean_fitness=float(fitness[finite].mean()) if finite.any() else float("-inf"),
                best_fitness=float(fitness[top]),
                best_so_far=best,
                faulted=int((~finite).sum()),
                sigma_mean=float(sigma.mean()),
                steps=steps,
            ))
            logger.debug("cem iteration %d: best %.4f mean %.4f", it + 1, best, curve.rows[-1].mean_fitness)
        if init is not None and self.iterations == 0:
            self.checkpoint_ = init
        else:
            self.checkpoint_ = PolicyCheckpoint(env.id, best_params, provenance)
        self.fitness_curve_ = curve
        self.best_fitness_ = best
        self.env_ = env
        return self

    def predict(self, observations):
        """Actions of the fitted policy for an observation dict or a ``(N, F)`` feature array."""
        if not hasattr(self, "checkpoint_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("CEMTrainer is not fitted yet")
        if isinstance(observations, Observation):
            observations = {k: np.asarray(v)[None, :] for k, v in observations.values.items()}
        if isinstance(observations, dict):
            feats = features(observations, self.env_)
        else:
            feats = np.atleast_2d(np.asarray(observations, dtype=float))
        acts = policy_actions(self.checkpoint_.params[None, :], feats[None], self.env_.action_dims)
        return acts[0]


def train(init: PolicyCheckpoint | None, env: EnvironmentDefinition, code, cfg: TrainConfig,
          provenance=(0, 0, 0)) -> tuple[PolicyCheckpoint, FitnessCurve]:
    trainer = CEMTrainer.from_config(cfg).fit(env, code, init=init, provenance=provenance)
    return trainer.checkpoint_, trainer.fitness_curve_
