from pathlib import Path

import numpy as np
import pytest

from curricullm.envs import get_env
from curricullm.errors import EmptyBatch
from curricullm.stats import TrajectorySummary, parse_rendered, render_summaries, round3, summarize
from curricullm.trainer import Episode, PolicyCheckpoint, TrajectoryBatch, n_params, rollout

from oracles import naive_summary

MAZE = get_env("point_maze")
DIMS = {v.name: v.dims for v in MAZE.variables}
GOLDEN = Path(__file__).parent / "data" / "summaries_golden.txt"


def episode(rows, success=False, faulted=False):
    """``rows`` maps variable name to a (T, dims) array; unspecified variables default to zero."""
    steps = len(next(iter(rows.values())))
    nxt = {name: np.asarray(rows.get(name, np.zeros((steps, d))), dtype=float) for name, d in DIMS.items()}
    return Episode(0, nxt, np.zeros((steps, 2)), nxt, success, None, faulted)


def constant(steps, **values):
    rows = {}
    for name, d in DIMS.items():
        v = np.broadcast_to(np.asarray(values.get(name, 0.0), dtype=float), (d,))
        rows[name] = np.tile(v, (steps, 1))
    return rows


def fixed_batches():
    a0 = dict(agent_pos=[0.12345, -0.0005], agent_vel=[0.0005, -0.0001], goal_pos=0.5,
              dist_to_goal=1.0, goal_direction=[0.6, 0.8], is_alive=1.0)
    b0 = TrajectoryBatch((episode(constant(2, **a0), success=True), episode(constant(1, **a0))))

    r1 = constant(1, is_alive=1.0, dist_to_goal=2.0)
    r2 = constant(1, is_alive=1.0, dist_to_goal=4.0, agent_pos=[1.0, 2.0])
    joined = {k: np.concatenate([r1[k], r2[k]]) for k in r1}
    b1 = TrajectoryBatch((episode(joined, success=True),))

    quarter = {name: 0.25 for name in DIMS}
    b2 = TrajectoryBatch((episode(constant(4, **quarter)),
                          episode(constant(2, **{name: 99.0 for name in DIMS}), faulted=True)))

    b3 = TrajectoryBatch((episode(constant(200, **{name: -2.0004999 for name in DIMS}), success=True),))
    return [b0, b1, b2, b3]


def random_batch(n=20, seed=0):
    rng = np.random.default_rng(seed)
    ckpt = PolicyCheckpoint(MAZE.id, rng.normal(0, 1.0, n_params(MAZE)))
    return rollout(ckpt, MAZE, MAZE.target_goal_spec, n, 500)


def test_matches_naive_oracle():
    for seed in range(3):
        batch = random_batch(seed=seed)
        summary = summarize(batch, MAZE)
        means, length, success = naive_summary(batch, DIMS)
        for name in DIMS:
            np.testing.assert_allclose(summary.means[name], means[name], rtol=0, atol=1e-12)
        assert summary.episode_length_mean == pytest.approx(length, abs=1e-12)
        assert summary.success_rate == success
        assert summary.episodes == 20 and summary.fault_count == 0


def test_faulted_episodes_excluded_from_means_only():
    summary = summarize(fixed_batches()[2], MAZE)
    assert summary.means["agent_pos"] == (0.25, 0.25)
    assert summary.fault_count == 1
    assert summary.episode_length_mean == 3.0


def test_permutation_invariant():
    batch = random_batch(seed=4)
    shuffled = TrajectoryBatch(tuple(reversed(batch.episodes)))
    assert summarize(shuffled, MAZE) == summarize(batch, MAZE)


def test_empty_batch_rejected():
    with pytest.raises(EmptyBatch):
        summarize(TrajectoryBatch(()), MAZE)


@pytest.mark.parametrize("value,text", [
    (0.12345, "0.123"),
    (-0.0005, "-0.001"),
    (0.0005, "0.001"),
    (0.0015, "0.002"),
    (-0.0001, "0.000"),
    (2.0, "2.000"),
    (1234.56789, "1234.568"),
])
def test_round3(value, text):
    assert round3(value) == text


def test_render_single_variable_line():
    summary = TrajectorySummary({name: (0.0,) * d for name, d in DIMS.items()} | {"dist_to_goal": (0.12345,)},
                                0.0, 0.0, 0)
    assert "dist_to_goal: [0.123]" in render_summaries([summary], MAZE).splitlines()


def test_render_matches_golden():
    summaries = [summarize(b, MAZE, candidate_index=k) for k, b in enumerate(fixed_batches())]
    text = render_summaries(summaries, MAZE)
    assert text == GOLDEN.read_text()
    headers = [line for line in text.splitlines() if line.startswith("Agent")]
    assert headers == ["Agent 0:", "Agent 1:", "Agent 2:", "Agent 3:"]


def test_render_uses_registry_order():
    text = render_summaries([summarize(random_batch(), MAZE)], MAZE)
    names = [line.split(":")[0] for line in text.splitlines()[1:] if line]
    assert names == [v.name for v in MAZE.variables] + ["episode_length", "success_rate"]


def test_rendered_values_round_trip():
    summaries = [summarize(random_batch(seed=s), MAZE) for s in range(4)]
    blocks = parse_rendered(render_summaries(summaries, MAZE))
    assert len(blocks) == 4
    for block, summary in zip(blocks, summaries):
        for name in DIMS:
            assert block[name] == tuple(float(round3(x)) for x in summary.means[name])
        assert block["success_rate"] == (float(round3(summary.success_rate)),)


def test_render_rejects_empty():
    with pytest.raises(ValueError):
        render_summaries([], MAZE)


def test_summary_dict_round_trip():
    summary = summarize(random_batch(), MAZE, candidate_index=2)
    assert TrajectorySummary.from_dict(summary.to_dict()) == summary
