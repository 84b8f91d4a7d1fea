"""End-to-end curriculum pipeline with per-subtask persistence and resume.

Run directory layout (all JSON / CSV / plain text)::

    manifest.json  config.json  curriculum.json  curriculum_response.txt
    history.json   target_metrics.csv  run.log
    subtask_NN/evaluation_prompt.txt  evaluation_response.txt  selected.json
    subtask_NN/candidate_K/task_code.txt  checkpoint.json  summary.json
                          fitness_curve.csv  status.json

Everything except ``run.log`` is a deterministic function of the config and
the LLM responses.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .dsl import TaskCode, compile_task_code
from .envs import env_description, get_env
from .errors import (
    AllCandidatesFailed,
    ConfigError,
    ConfigMismatch,
    CorruptRunDirectory,
    CurriculumParseFailure,
    InvalidGoalSpec,
    ResponseParseError,
    RunDirectoryBusy,
    TaskCodeError,
    TaskCodeRuntimeFault,
)
from .llm import (
    CURRICULUM,
    DSL_GRAMMAR_CARD,
    EVALUATION,
    TASK_CODE,
    Curriculum,
    Gateway,
    HistoryItem,
    TaskSpec,
    parse_curriculum,
    parse_decision,
    render_prompt,
)
from .llm.prompts import DEFAULT_HISTORY_BUDGET, DEFAULT_MODEL
from .stats import TrajectorySummary, render_summaries, summarize
from .trainer import FitnessCurve, PolicyCheckpoint, SparseReward, TrainConfig, evaluate_target, rollout, train

logger = logging.getLogger(__name__)

MODES = ("curriculum", "zeroshot", "sparse")
MAX_K = 5
FORMAT_VERSION = 1
# config keys that describe how a run executes rather than what it computes
_EXECUTION_KEYS = ("backend", "workers")


def derive_seed(master: int, *path: int) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, path)]).generate_state(1)[0])


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


@dataclass
class RunConfig:
    env_id: str = "point_maze"
    K: int = 4
    train: TrainConfig = field(default_factory=TrainConfig)
    eval_episodes: int = 20
    retries: int = 2
    seed: int = 0
    mode: str = "curriculum"
    backend: str | None = None
    model: str = DEFAULT_MODEL
    budget_subtasks: int = 3
    history_char_budget: int = DEFAULT_HISTORY_BUDGET
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.train, dict):
            self.train = TrainConfig.from_dict(self.train)
        if self.K < 1:
            raise ConfigError("K must be at least 1")
        if self.K > MAX_K:
            raise ConfigError(f"K must be at most {MAX_K}")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes must be at least 1")
        if self.retries < 0:
            raise ConfigError("retries must be non-negative")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.budget_subtasks < 1:
            raise ConfigError("budget_subtasks must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        get_env(self.env_id)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["train"] = self.train.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def comparable(self) -> dict:
        data = self.to_dict()
        for key in _EXECUTION_KEYS:
            data.pop(key, None)
        return data


@dataclass
class HistoryEntry:
    task: TaskSpec
    selected_code: str
    selected_summary: TrajectorySummary
    selected_candidate: int

    def to_dict(self) -> dict:
        return {
            "task": self.task.to_dict(),
            "selected_code": self.selected_code,
            "selected_summary": self.selected_summary.to_dict(),
            "selected_candidate": self.selected_candidate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HistoryEntry":
        return cls(TaskSpec.from_dict(data["task"]), data["selected_code"],
                   TrajectorySummary.from_dict(data["selected_summary"]), data["selected_candidate"])


@dataclass
class CandidateResult:
    slot: int
    status: str  # "trained", "invalid" (task code never parsed) or "faulted" (training fault)
    task_code: str
    errors: list[str] = field(default_factory=list)
    checkpoint: PolicyCheckpoint | None = None
    curve: FitnessCurve | None = None
    summary: TrajectorySummary | None = None
    target_success: float = 0.0
    target_return: float = 0.0
    canonical: str = ""

    @property
    def steps(self) -> int:
        return self.curve.total_steps if self.curve else 0


@dataclass
class RunState:
    config: RunConfig
    run_dir: Path
    curriculum: Curriculum | None = None
    history: list[HistoryEntry] = field(default_factory=list)
    policy: PolicyCheckpoint | None = None
    target_metrics: list[dict] = field(default_factory=list)
    completed: int = 0
    total_steps: int = 0
    llm_calls: int = 0
    status: str = "running"

    @property
    def final_success_rate(self) -> float | None:
        for row in self.target_metrics:
            if row["subtask"] == "final":
                return row["success_rate"]
        return None


# --- candidate jobs (top-level so they can run in worker processes) -------------------------


def _candidate_job(job: dict) -> dict:
    env = get_env(job["env_id"])
    cfg = TrainConfig.from_dict(job["train"])
    if job["code"] is None:
        code = SparseReward()
        spec = env.target_goal_spec
    else:
        code = compile_task_code(job["code"], env)
        spec = code.goal_spec
    init = PolicyCheckpoint.from_dict(job["init"]) if job["init"] else None
    code_for_fit = code if job["code"] is not None else _SparseTask(spec)
    try:
        ckpt, curve = train(init, env, code_for_fit, cfg, provenance=job["provenance"])
    except TaskCodeRuntimeFault as exc:
        return {"status": "faulted", "error": str(exc)}
    batch = rollout(ckpt, env, spec, job["eval_episodes"], job["rollout_seed"],
                    code=code_for_fit, gamma=cfg.discount)
    summary = summarize(batch, env, candidate_index=job["slot"])
    success, ret = evaluate_target(ckpt, env, job["eval_episodes"], job["target_seed"], gamma=cfg.discount)
    return {
        "status": "trained",
        "checkpoint": ckpt.to_dict(),
        "curve": curve.to_csv(),
        "summary": summary.to_dict(),
        "target_success": success,
        "target_return": ret,
    }


class _SparseTask(SparseReward):
    def __init__(self, spec):
        self.goal_spec = spec


class Orchestrator:
    """Runs one pipeline mode into one run directory."""

    def __init__(self, config: RunConfig, run_dir, gateway: Gateway | None = None):
        self.config = config
        self.run_dir = Path(run_dir)
        self.gateway = gateway
        self.env = get_env(config.env_id)
        self._log_handler = None

    # --- persistence -----------------------------------------------------------------

    def _subtask_dir(self, n: int) -> Path:
        return self.run_dir / f"subtask_{n:02d}"

    def _acquire(self, fresh: bool):
        if fresh:
            if self.run_dir.exists() and any(self.run_dir.iterdir()):
                raise ConfigError(f"run directory {self.run_dir} is not empty")
            self.run_dir.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.run_dir / ".lock", os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunDirectoryBusy(f"{self.run_dir} is locked by another orchestrator") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        handler = logging.FileHandler(self.run_dir / "run.log")
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        logging.getLogger("curricullm").addHandler(handler)
        if logging.getLogger("curricullm").level in (logging.NOTSET,) or \
                logging.getLogger("curricullm").level > logging.INFO:
            logging.getLogger("curricullm").setLevel(logging.INFO)
        self._log_handler = handler

    def _release(self):
        if self._log_handler is not None:
            logging.getLogger("curricullm").removeHandler(self._log_handler)
            self._log_handler.close()
            self._log_handler = None
        lock = self.run_dir / ".lock"
        if lock.exists():
            lock.unlink()

    def _write_manifest(self, state: RunState):
        manifest = {
            "format": FORMAT_VERSION,
            "mode": self.config.mode,
            "env_id": self.config.env_id,
            "status": state.status,
            "completed_subtasks": state.completed,
            "total_subtasks": len(state.curriculum) if state.curriculum else None,
            "total_env_steps": state.total_steps,
            "llm_calls": state.llm_calls,
            "final_success_rate": state.final_success_rate,
        }
        _write(self.run_dir / "manifest.json", _dump(manifest))

    def _write_metrics(self, state: RunState):
        cols = ["subtask", "name", "selected_candidate", "success_rate", "mean_return",
                "episode_length_mean", "steps"]
        lines = [",".join(cols)]
        for row in state.target_metrics:
            name = '"' + str(row["name"]).replace('"', '""') + '"'
            lines.append(",".join([str(row["subtask"]), name, str(row["selected_candidate"]),
                                   repr(row["success_rate"]), repr(row["mean_return"]),
                                   repr(row["episode_length_mean"]), str(row["steps"])]))
        _write(self.run_dir / "target_metrics.csv", "\n".join(lines) + "\n")

    # --- stages ----------------------------------------------------------------------------

    def _ask(self, stage: str, subtask: int, context: dict) -> tuple[str, object]:
        context = dict(context, model=self.config.model, history_char_budget=self.config.history_char_budget)
        request = render_prompt(stage, context)
        return self.gateway.complete(request, stage, subtask), request

    def generate_curriculum(self, state: RunState) -> Curriculum:
        context = {"environment": env_description(self.env), "target": self.env.target_description}
        responses, errors = [], []
        for _ in range(self.config.retries + 1):
            text, request = self._ask(CURRICULUM, 0, context)
            responses.append(text)
            try:
                curriculum = parse_curriculum(text)
                break
            except ResponseParseError as exc:
                errors.append(str(exc))
                logger.warning("curriculum response unusable: %s", exc)
        else:
            _write(self.run_dir / "curriculum_response.txt", "\n\n-----\n\n".join(responses))
            raise CurriculumParseFailure(f"curriculum unparseable after retries: {errors[-1]}")
        _write(self.run_dir / "curriculum_prompt.txt", request.text)
        _write(self.run_dir / "curriculum_response.txt", "\n\n-----\n\n".join(responses))
        _write(self.run_dir / "curriculum.json",
               _dump(dict(curriculum.to_dict(), llm_calls=len(responses), errors=errors)))
        state.llm_calls += len(responses)
        return curriculum

    def sample_task_code(self, task: TaskSpec, n: int, slot: int, state: RunState) -> tuple[TaskCode | None, str, list[str]]:
        history = [HistoryItem(h.task, h.selected_code) for h in state.history]
        context = {"task": task, "environment": env_description(self.env), "history": history,
                   "grammar": DSL_GRAMMAR_CARD}
        errors, text = [], ""
        for _ in range(self.config.retries + 1):
            text, _request = self._ask(TASK_CODE, n, context)
            state.llm_calls += 1
            try:
                return compile_task_code(text, self.env), text, errors
            except (TaskCodeError, InvalidGoalSpec, ValueError) as exc:
                errors.append(f"{type(exc).__name__}: {exc}")
                logger.warning("subtask %d slot %d task code rejected: %s", n, slot, exc)
        return None, text, errors

    def _train_candidates(self, jobs: list[dict]) -> list[dict]:
        if self.config.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
                return list(pool.map(_candidate_job, jobs))
        return [_candidate_job(job) for job in jobs]

    def train_candidates(self, n: int, codes: list[tuple[int, TaskCode | None, str, list[str]]],
                         init: PolicyCheckpoint | None, iterations: int, sparse=False) -> list[CandidateResult]:
        cfg = self.config
        train_cfg = dict(cfg.train.to_dict(), iterations=iterations)
        results: dict[int, CandidateResult] = {}
        jobs = []
        for slot, code, text, errors in codes:
            if code is None and not sparse:
                results[slot] = CandidateResult(slot, "invalid", text, errors)
                continue
            seed = derive_seed(cfg.seed, 1, n, slot)
            jobs.append({
                "slot": slot,
                "env_id": cfg.env_id,
                "code": None if sparse else text,
                "init": init.to_dict() if init is not None else None,
                "train": dict(train_cfg, seed=seed),
                "provenance": (n, slot, seed),
                "eval_episodes": cfg.eval_episodes,
                "rollout_seed": derive_seed(cfg.seed, 2, n),
                "target_seed": derive_seed(cfg.seed, 3),
            })
            results[slot] = CandidateResult(slot, "pending", text, errors,
                                            canonical=code.canonical() if code is not None else text)
        for job, out in zip(jobs, self._train_candidates(jobs)):
            res = results[job["slot"]]
            if out["status"] != "trained":
                res.status = "faulted"
                res.errors.append(out["error"])
                continue
            res.status = "trained"
            res.checkpoint = PolicyCheckpoint.from_dict(out["checkpoint"])
            res.curve = FitnessCurve.from_csv(out["curve"])
            res.summary = TrajectorySummary.from_dict(out["summary"])
            res.target_success = out["target_success"]
            res.target_return = out["target_return"]
        return [results[slot] for slot in sorted(results)]

    def _persist_candidates(self, n: int, results: list[CandidateResult]):
        for res in results:
            d = self._subtask_dir(n) / f"candidate_{res.slot}"
            _write(d / "task_code.txt", res.task_code)
            status = {"status": res.status, "errors": res.errors, "steps": res.steps,
                      "target_success_rate": res.target_success, "target_mean_return": res.target_return}
            _write(d / "status.json", _dump(status))
            if res.status == "trained":
                _write(d / "checkpoint.json", res.checkpoint.dumps())
                _write(d / "summary.json", _dump(res.summary.to_dict()))
                _write(d / "fitness_curve.csv", res.curve.to_csv())

    def select_best(self, task: TaskSpec, n: int, trained: list[CandidateResult],
                    state: RunState) -> tuple[int, str, str]:
        """Index into ``trained`` chosen by the evaluation LLM, or by the deterministic fallback."""
        summaries = [r.summary for r in trained]
        context = {"task": task, "history": [HistoryItem(h.task, h.selected_code) for h in state.history],
                   "summaries": render_summaries(summaries, self.env)}
        responses = []
        attempts = 1 if len(trained) == 1 else self.config.retries + 1
        choice, reason, method = None, "", "fallback"
        request = None
        for _ in range(attempts):
            text, request = self._ask(EVALUATION, n, context)
            state.llm_calls += 1
            responses.append(text)
            try:
                decision = parse_decision(text, len(trained))
            except ResponseParseError as exc:
                logger.warning("subtask %d evaluation response unusable: %s", n, exc)
                continue
            choice, reason, method = decision.agent_index, decision.reason, "llm"
            break
        if len(trained) == 1:
            choice, method = 0, "only_candidate" if method != "llm" else method
        if choice is None:
            choice = fallback_choice(trained)
            reason = "evaluation response unusable; selected highest target success rate"
        d = self._subtask_dir(n)
        _write(d / "evaluation_prompt.txt", request.text)
        _write(d / "evaluation_response.txt", "\n\n-----\n\n".join(responses))
        return choice, reason, method

    def run_subtask(self, state: RunState, task: TaskSpec, n: int) -> RunState:
        cfg = self.config
        d = self._subtask_dir(n)
        if d.exists():
            shutil.rmtree(d)
        calls_before = state.llm_calls
        codes = []
        for slot in range(cfg.K):
            code, text, errors = self.sample_task_code(task, n, slot, state)
            codes.append((slot, code, text, errors))
        results = self.train_candidates(n, codes, state.policy, cfg.train.iterations)
        self._persist_candidates(n, results)
        trained = [r for r in results if r.status == "trained"]
        if not trained:
            raise AllCandidatesFailed(n)
        pick, reason, method = self.select_best(task, n, trained, state)
        chosen = trained[pick]
        self._commit(state, task, n, results, trained, chosen, reason, method, state.llm_calls - calls_before)
        return state

    def _commit(self, state, task, n, results, trained, chosen, reason, method, calls):
        selected = {
            "subtask": n,
            "selected_candidate": chosen.slot,
            "agent_index": trained.index(chosen),
            "agent_map": [r.slot for r in trained],
            "method": method,
            "reason": reason,
            "llm_calls": calls,
            "steps": sum(r.steps for r in results),
        }
        _write(self._subtask_dir(n) / "selected.json", _dump(selected))
        state.policy = chosen.checkpoint
        state.history.append(HistoryEntry(task, chosen.canonical, chosen.summary, chosen.slot))
        state.total_steps += selected["steps"]
        state.completed = n
        state.target_metrics.append({
            "subtask": n,
            "name": task.name,
            "selected_candidate": chosen.slot,
            "success_rate": chosen.target_success,
            "mean_return": chosen.target_return,
            "episode_length_mean": chosen.summary.episode_length_mean,
            "steps": selected["steps"],
        })
        _write(self.run_dir / "history.json", _dump([h.to_dict() for h in state.history]))
        self._write_metrics(state)
        self._write_manifest(state)
        logger.info("subtask %d: selected candidate %d (%s), target success %.3f",
                    n, chosen.slot, method, chosen.target_success)

    def _finish(self, state: RunState):
        last = state.target_metrics[-1]
        state.target_metrics.append(dict(last, subtask="final"))
        state.status = "complete"
        self._write_metrics(state)
        self._write_manifest(state)

    # --- modes -------------------------------------------------------------------------------

    def _new_state(self) -> RunState:
        state = RunState(self.config, self.run_dir)
        _write(self.run_dir / "config.json", _dump(self.config.comparable()))
        return state

    def run(self, stop_after: int | None = None) -> RunState:
        """Execute the configured mode from scratch.

        ``stop_after`` ends the run (status ``partial``) once that many
        subtasks are persisted, leaving it resumable.
        """
        self._acquire(fresh=True)
        try:
            state = self._new_state()
            if self.config.mode == "curriculum":
                state.curriculum = self.generate_curriculum(state)
                self._write_manifest(state)
                return self._continue(state, stop_after)
            return self._run_baseline(state)
        finally:
            self._release()

    def _continue(self, state: RunState, stop_after: int | None) -> RunState:
        for n, task in enumerate(state.curriculum, start=1):
            if n <= state.completed:
                continue
            if stop_after is not None and n > stop_after:
                state.status = "partial"
                self._write_manifest(state)
                return state
            self.run_subtask(state, task, n)
        self._finish(state)
        return state

    def _target_task(self) -> TaskSpec:
        return TaskSpec(1, "Original task", self.env.target_description,
                        "Learn the target task directly, without a curriculum.")

    def _run_baseline(self, state: RunState) -> RunState:
        cfg = self.config
        task = self._target_task()
        state.curriculum = Curriculum((task,))
        _write(self.run_dir / "curriculum.json", _dump(dict(state.curriculum.to_dict(), llm_calls=0, errors=[])))
        calls_before = state.llm_calls
        sparse = cfg.mode == "sparse"
        codes = []
        for slot in range(cfg.K):
            if sparse:
                codes.append((slot, None, "sparse success indicator: reward 1 on the success step, else 0\n", []))
            else:
                code, text, errors = self.sample_task_code(task, 1, slot, state)
                codes.append((slot, code, text, errors))
        iterations = cfg.train.iterations * cfg.budget_subtasks
        results = self.train_candidates(1, codes, None, iterations, sparse=sparse)
        self._persist_candidates(1, results)
        trained = [r for r in results if r.status == "trained"]
        if not trained:
            raise AllCandidatesFailed(1)
        chosen = trained[fallback_choice(trained)]
        self._commit(state, task, 1, results, trained, chosen,
                     "highest target success rate", "target_success_rate", state.llm_calls - calls_before)
        self._finish(state)
        return state

    def resume(self, stop_after: int | None = None) -> RunState:
        self._acquire(fresh=False)
        try:
            state = load_state(self.run_dir, self.config)
            if state.status == "complete":
                return state
            if state.curriculum is None:
                if self.config.mode != "curriculum":
                    for child in self.run_dir.iterdir():
                        if child.name not in ("config.json", "run.log", ".lock"):
                            shutil.rmtree(child) if child.is_dir() else child.unlink()
                    return self._run_baseline(self._new_state())
                state.curriculum = self.generate_curriculum(state)
                self._write_manifest(state)
            state.status = "running"
            return self._continue(state, stop_after)
        finally:
            self._release()


def fallback_choice(trained: list[CandidateResult]) -> int:
    """Highest target success rate; ties go to the lowest candidate slot."""
    best = max(r.target_success for r in trained)
    return min((r.slot, i) for i, r in enumerate(trained) if r.target_success == best)[1]


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise CorruptRunDirectory(f"cannot read {path}: {exc}") from exc


def load_config(run_dir) -> RunConfig:
    run_dir = Path(run_dir)
    if not (run_dir / "config.json").exists():
        raise CorruptRunDirectory(f"{run_dir} has no config.json")
    return RunConfig.from_dict(_read_json(run_dir / "config.json"))


def load_state(run_dir, config: RunConfig | None = None) -> RunState:
    """Rebuild the last fully persisted state of a run directory."""
    run_dir = Path(run_dir)
    if not (run_dir / "manifest.json").exists() or not (run_dir / "config.json").exists():
        raise CorruptRunDirectory(f"{run_dir} is not a run directory (missing manifest or config)")
    manifest = _read_json(run_dir / "manifest.json")
    stored = load_config(run_dir)
    if config is not None and config.comparable() != stored.comparable():
        diff = sorted(k for k in stored.comparable()
                      if stored.comparable()[k] != config.comparable().get(k))
        raise ConfigMismatch(f"config differs from the stored run config in: {', '.join(diff)}")
    cfg = config or stored
    state = RunState(cfg, run_dir, status=manifest.get("status", "running"))
    completed = int(manifest.get("completed_subtasks", 0))
    if (run_dir / "curriculum.json").exists():
        data = _read_json(run_dir / "curriculum.json")
        try:
            state.curriculum = Curriculum.from_dict(data)
        except (KeyError, TypeError, ValueError, ResponseParseError) as exc:
            raise CorruptRunDirectory(f"bad curriculum.json: {exc}") from exc
        state.llm_calls += int(data.get("llm_calls", 0))
    elif completed:
        raise CorruptRunDirectory("manifest reports progress but curriculum.json is missing")
    if completed:
        history = _read_json(run_dir / "history.json")
        state.history = [HistoryEntry.from_dict(h) for h in history[:completed]]
        if len(state.history) != completed:
            raise CorruptRunDirectory("history.json is shorter than the manifest progress")
        for n in range(1, completed + 1):
            sel = _read_json(run_dir / f"subtask_{n:02d}" / "selected.json")
            state.total_steps += sel["steps"]
            state.llm_calls += sel["llm_calls"]
            status = _read_json(run_dir / f"subtask_{n:02d}" / f"candidate_{sel['selected_candidate']}" / "status.json")
            summary = state.history[n - 1].selected_summary
            state.target_metrics.append({
                "subtask": n,
                "name": state.history[n - 1].task.name,
                "selected_candidate": sel["selected_candidate"],
                "success_rate": status["target_success_rate"],
                "mean_return": status["target_mean_return"],
                "episode_length_mean": summary.episode_length_mean,
                "steps": sel["steps"],
            })
        last = _read_json(run_dir / f"subtask_{completed:02d}" / "selected.json")
        ckpt_path = run_dir / f"subtask_{completed:02d}" / f"candidate_{last['selected_candidate']}" / "checkpoint.json"
        try:
            state.policy = PolicyCheckpoint.loads(ckpt_path.read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise CorruptRunDirectory(f"cannot load selected checkpoint: {exc}") from exc
        if state.policy.provenance[:2] != (completed, last["selected_candidate"]):
            raise CorruptRunDirectory("selected checkpoint provenance does not match the history")
    state.completed = completed
    if state.status == "complete":
        state.target_metrics.append(dict(state.target_metrics[-1], subtask="final"))
    return state


def _gateway(backend) -> Gateway | None:
    if backend is None or isinstance(backend, Gateway):
        return backend
    return Gateway(backend)


def run_curriculum(config: RunConfig, run_dir, backend, stop_after: int | None = None) -> RunState:
    config = RunConfig.from_dict(dict(config.to_dict(), mode="curriculum"))
    return Orchestrator(config, run_dir, _gateway(backend)).run(stop_after=stop_after)


def run_zeroshot(config: RunConfig, run_dir, backend) -> RunState:
    config = RunConfig.from_dict(dict(config.to_dict(), mode="zeroshot"))
    return Orchestrator(config, run_dir, _gateway(backend)).run()


def run_sparse(config: RunConfig, run_dir) -> RunState:
    config = RunConfig.from_dict(dict(config.to_dict(), mode="sparse"))
    return Orchestrator(config, run_dir, None).run()


def resume(run_dir, backend=None, config: RunConfig | None = None, stop_after: int | None = None) -> RunState:
    cfg = load_config(run_dir) if config is None else config
    # validates the directory and any config override before taking the lock
    load_state(run_dir, config)
    return Orchestrator(cfg, run_dir, _gateway(backend)).resume(stop_after=stop_after)
