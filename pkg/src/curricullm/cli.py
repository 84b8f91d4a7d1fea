"""Command-line front end.

Exit status: 0 success, 2 configuration errors, 3 backend errors, 4 pipeline
and task-code errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dsl import compile_task_code
from .envs import available_envs, dump_env, get_env
from .errors import BackendError, ConfigError, CurricuLLMError, UnknownEnvironment
from .llm import Gateway, parse_backend_spec
from .orchestrator import Orchestrator, RunConfig, load_config, load_state
from .orchestrator import resume as resume_run
from .trainer import FitnessCurve, PolicyCheckpoint, evaluate_target

EXIT_OK, EXIT_CONFIG, EXIT_BACKEND, EXIT_PIPELINE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _coerce(text: str):
    try:
        return json.loads(text)
    except ValueError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` overrides; nested keys use dots (``train.iterations=10``)."""
    data = json.loads(json.dumps(data))
    defaults = RunConfig().to_dict()
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not key=value")
        parts = key.split(".")
        known, target = defaults, data
        for part in parts[:-1]:
            if not isinstance(known.get(part), dict):
                raise ConfigError(f"unknown config key {key!r}")
            known = known[part]
            target = target.setdefault(part, {})
        if parts[-1] not in known:
            raise ConfigError(f"unknown config key {key!r}")
        target[parts[-1]] = _coerce(value)
    return data


def build_config(args, mode: str | None = None) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data = apply_overrides(data, args.set or [])
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "backend", None):
        data["backend"] = args.backend
    if mode is not None:
        data["mode"] = mode
    return RunConfig.from_dict(data)


def _gateway(spec: str | None, model: str | None, required: bool) -> Gateway | None:
    if not spec:
        if required:
            raise ConfigError("a backend is required (--backend or the config's backend key)")
        return None
    try:
        return Gateway(parse_backend_spec(spec, model))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    except OSError as exc:
        raise ConfigError(f"cannot load backend {spec!r}: {exc}") from exc


def _print_result(state):
    print(json.dumps({
        "run_dir": str(state.run_dir),
        "status": state.status,
        "completed_subtasks": state.completed,
        "final_success_rate": state.final_success_rate,
        "total_env_steps": state.total_steps,
    }, sort_keys=True))


def cmd_pipeline(args, mode: str) -> int:
    cfg = build_config(args, mode)
    gateway = _gateway(cfg.backend, cfg.model, required=mode != "sparse")
    state = Orchestrator(cfg, args.out, gateway).run(stop_after=args.stop_after)
    _print_result(state)
    return EXIT_OK


def cmd_resume(args) -> int:
    override = build_config(args) if (args.config or args.set) else None
    stored = load_config(args.run_dir)
    spec = args.backend or (override.backend if override else None) or stored.backend
    gateway = _gateway(spec, stored.model, required=stored.mode != "sparse")
    state = resume_run(args.run_dir, gateway, config=override, stop_after=args.stop_after)
    _print_result(state)
    return EXIT_OK


def _load_checkpoint(path: Path) -> PolicyCheckpoint:
    if path.is_dir():
        state = load_state(path)
        if state.policy is None:
            raise ConfigError(f"{path} has no selected policy yet")
        return state.policy
    try:
        return PolicyCheckpoint.loads(path.read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from exc


def cmd_eval(args) -> int:
    ckpt = _load_checkpoint(Path(args.target))
    env = get_env(ckpt.env_id)
    success, ret = evaluate_target(ckpt, env, args.episodes, args.seed)
    print(json.dumps({"env_id": env.id, "episodes": args.episodes, "seed": args.seed,
                      "success_rate": success, "mean_return": ret}, sort_keys=True))
    return EXIT_OK


def render_report(run_dir) -> tuple[str, str]:
    """Text table and CSV fitness curves for a complete or partial run."""
    run_dir = Path(run_dir)
    state = load_state(run_dir)
    status = "complete" if state.status == "complete" else "partial"
    total = len(state.curriculum) if state.curriculum else 0
    lines = [
        f"mode: {state.config.mode}",
        f"env: {state.config.env_id}",
        f"status: {status} ({state.completed}/{total} subtasks)",
        f"total_env_steps: {state.total_steps}",
        "",
        f"{'subtask':<8} {'selected':>8} {'success_rate':>12} {'episode_length':>14} {'steps':>10}  name",
    ]
    for row in state.target_metrics:
        flag = "" if status == "complete" else "  [partial]"
        lines.append(f"{str(row['subtask']):<8} {row['selected_candidate']:>8} {row['success_rate']:>12.3f} "
                     f"{row['episode_length_mean']:>14.3f} {row['steps']:>10}  {row['name']}{flag}")
    table = "\n".join(lines) + "\n"
    curves = ["subtask,candidate,selected,iteration,mean_fitness,best_fitness,best_so_far,faulted,steps"]
    for n in range(1, state.completed + 1):
        selected = state.history[n - 1].selected_candidate
        for path in sorted((run_dir / f"subtask_{n:02d}").glob("candidate_*/fitness_curve.csv")):
            slot = int(path.parent.name.split("_")[1])
            for r in FitnessCurve.from_csv(path.read_text()).rows:
                curves.append(f"{n},{slot},{int(slot == selected)},{r.iteration},{r.mean_fitness!r},"
                              f"{r.best_fitness!r},{r.best_so_far!r},{r.faulted},{r.steps}")
    return table, "\n".join(curves) + "\n"


def cmd_report(args) -> int:
    table, curves = render_report(args.run_dir)
    out = Path(args.out) if args.out else Path(args.run_dir) / "report"
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(table)
    (out / "curves.csv").write_text(curves)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_validate_dsl(args) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.file}: {exc}") from exc
    code = compile_task_code(text, get_env(args.env))
    sys.stdout.write(code.canonical())
    return EXIT_OK


def cmd_dump_env(args) -> int:
    ids = [args.env_id] if args.env_id else available_envs()
    docs = [dump_env(get_env(i)) for i in ids]
    print(json.dumps(docs[0] if args.env_id else docs, indent=1, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curricullm", description="LLM-guided curriculum pipeline for goal-conditioned control.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def config_flags(p):
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    for name, help_text in (("run", "full curriculum pipeline"),
                            ("zeroshot", "task code for the target task only"),
                            ("sparse", "success-indicator reward, no LLM")):
        p = sub.add_parser(name, help=help_text)
        config_flags(p)
        p.add_argument("--out", required=True, help="run directory (must be empty or absent)")
        p.add_argument("--backend", help="live:<url>,<model> | scripted:<fixture> | replay:<dir>[,<url>,<model>]")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--stop-after", type=int, help="stop after this many subtasks (resumable)")

    p = sub.add_parser("resume", help="continue an interrupted run")
    p.add_argument("run_dir")
    config_flags(p)
    p.add_argument("--backend")
    p.add_argument("--stop-after", type=int)

    p = sub.add_parser("eval", help="evaluate a checkpoint (or a run's selected policy) on the target task")
    p.add_argument("target", help="checkpoint JSON or run directory")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report", help="summary table and fitness curves of a run")
    p.add_argument("run_dir")
    p.add_argument("--out", help="output directory (default: <run_dir>/report)")

    p = sub.add_parser("validate-dsl", help="parse and typecheck a task-code file")
    p.add_argument("file")
    p.add_argument("--env", default="point_maze")

    p = sub.add_parser("dump-env", help="print environment definitions")
    p.add_argument("env_id", nargs="?")
    return parser


def dispatch(args) -> int:
    if args.command in ("run", "zeroshot", "sparse"):
        return cmd_pipeline(args, {"run": "curriculum"}.get(args.command, args.command))
    return {
        "resume": cmd_resume,
        "eval": cmd_eval,
        "report": cmd_report,
        "validate-dsl": cmd_validate_dsl,
        "dump-env": cmd_dump_env,
    }[args.command](args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return dispatch(args)
    except (ConfigError, UnknownEnvironment) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except CurricuLLMError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
