import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curricullm.envs import (
    MAZE_LAYOUT,
    BatchSim,
    GoalDistributionSpec,
    Observation,
    available_envs,
    dump_env,
    env_description,
    get_env,
    observe,
    reset_env,
    step_env,
)
from curricullm.errors import InvalidGoalSpec, InvertedRange, RangeOutOfBounds, UnknownDimension, UnknownEnvironment

from oracles import maze_path_distances, waypoint_controller

MAZE = get_env("point_maze")
PUSH = get_env("point_push")
OPEN = get_env("point_open")


def spec(**ranges):
    return GoalDistributionSpec(ranges)


def raw(env, name, value):
    v = env.variable(name)
    return np.asarray(v.lower) + (np.asarray(value) + 1.0) * (np.asarray(v.upper) - np.asarray(v.lower)) / 2.0


def test_registry_has_builtin_envs():
    assert set(available_envs()) >= {"point_maze", "point_push", "point_open"}
    with pytest.raises(UnknownEnvironment):
        get_env("ant_maze")


@pytest.mark.parametrize("env_id", ["point_maze", "point_push", "point_open"])
def test_is_alive_declared(env_id):
    v = get_env(env_id).variable("is_alive")
    assert v.dims == 1
    assert tuple(v.lower) == (0.0,) and tuple(v.upper) == (1.0,)


def test_maze_variables_match_declaration():
    assert MAZE.variable_names == ["agent_pos", "agent_vel", "goal_pos", "dist_to_goal", "goal_direction", "is_alive"]
    assert [MAZE.variable(n).dims for n in MAZE.variable_names] == [2, 2, 2, 1, 2, 1]
    assert MAZE.horizon == 200 and MAZE.dt == 0.1 and MAZE.terminate_on == "success"
    assert MAZE.target_goal_spec.ranges == {"goal_distance": (6.0, 6.0)}


def test_push_variables_match_declaration():
    assert PUSH.variable_names == ["agent_pos", "agent_vel", "block_pos", "goal_pos", "dist_agent_block",
                                   "dist_block_goal", "is_alive"]
    assert PUSH.target_goal_spec.ranges == {"goal_radius": (1.5, 1.5)}


# --- goal specs ------------------------------------------------------------------------------


def test_goal_spec_validation_errors():
    with pytest.raises(UnknownDimension):
        spec(lin_vel_x=(-2, 2)).validate(MAZE)
    with pytest.raises(RangeOutOfBounds):
        spec(goal_distance=(0, 7)).validate(MAZE)
    with pytest.raises(InvertedRange):
        spec(goal_distance=(3, 1)).validate(MAZE)
    assert isinstance(RangeOutOfBounds("x", 0, 1, (0, 0.5)), InvalidGoalSpec)
    spec(goal_distance=(0, 3)).validate(MAZE)


def test_reset_rejects_invalid_spec():
    with pytest.raises(InvalidGoalSpec):
        reset_env(MAZE, spec(goal_distance=(-1, 2)), 0)


def test_maze_goal_at_start_for_zero_range():
    for seed in range(5):
        state, obs = reset_env(MAZE, spec(goal_distance=(0, 0)), seed)
        np.testing.assert_allclose(raw(MAZE, "goal_pos", obs["goal_pos"]), [1.5, 3.5])
        assert raw(MAZE, "dist_to_goal", obs["dist_to_goal"])[0] == pytest.approx(0.0, abs=1e-12)


def test_maze_far_goal_is_unique_distance_six_cell():
    dist = maze_path_distances(MAZE_LAYOUT, (3, 1))
    far = [cell for cell, d in dist.items() if d == 6]
    assert far == [(1, 1)]
    _, obs = reset_env(MAZE, spec(goal_distance=(6, 6)), 0)
    np.testing.assert_allclose(raw(MAZE, "goal_pos", obs["goal_pos"]), [1.5, 1.5])
    # the goal is one wall away in a straight line but six cells through the corridor
    assert raw(MAZE, "dist_to_goal", obs["dist_to_goal"])[0] == pytest.approx(6.0)


def test_maze_goal_admissibility_matches_bfs_oracle():
    dist = maze_path_distances(MAZE_LAYOUT, (3, 1))
    for hi in range(7):
        seen = set()
        for seed in range(200):
            _, obs = reset_env(MAZE, spec(goal_distance=(0, hi)), seed)
            gx, gy = raw(MAZE, "goal_pos", obs["goal_pos"])
            seen.add((int(gy), int(gx)))
        assert seen == {cell for cell, d in dist.items() if d <= hi}


def test_goal_distance_monotonicity():
    dyn = MAZE.dynamics
    for d in range(7):
        for d2 in range(d, 7):
            assert set(dyn.admissible_goals(0, d)) <= set(dyn.admissible_goals(0, d2))


def test_push_zero_radius_goal_is_block_start():
    _, obs = reset_env(PUSH, spec(goal_radius=(0, 0)), 3)
    np.testing.assert_allclose(raw(PUSH, "goal_pos", obs["goal_pos"]), [2.0, 2.0])


def test_push_goal_radius_range():
    for seed in range(50):
        _, obs = reset_env(PUSH, spec(goal_radius=(1.0, 1.5)), seed)
        g = raw(PUSH, "goal_pos", obs["goal_pos"])
        r = np.hypot(*(g - [2.0, 2.0]))
        assert 1.0 - 1e-9 <= r <= 1.5 + 1e-9


# --- dynamics ----------------------------------------------------------------------------------


def test_zero_action_from_rest_is_fixed_point():
    for env, s in ((MAZE, spec(goal_distance=(6, 6))), (PUSH, PUSH.target_goal_spec), (OPEN, OPEN.target_goal_spec)):
        state, obs = reset_env(env, s, 0)
        tr = step_env(state, np.zeros(env.action_dims))
        np.testing.assert_array_equal(tr.next_observation["agent_pos"], obs["agent_pos"])
        assert not tr.success


def test_maze_goal_at_agent_succeeds_and_terminates():
    state, _ = reset_env(MAZE, spec(goal_distance=(0, 0)), 0)
    tr = step_env(state, [0.0, 0.0])
    assert tr.success and tr.terminated


def test_observation_normalization_endpoints():
    sim = BatchSim(OPEN, OPEN.target_goal_spec, [0, 1, 2])
    v = OPEN.variable("agent_pos")
    lo, hi = np.asarray(v.lower), np.asarray(v.upper)
    sim.state["pos"] = np.stack([lo, (lo + hi) / 2, hi + 10])
    obs = sim.observe()["agent_pos"]
    np.testing.assert_allclose(obs[0], -1.0)
    np.testing.assert_allclose(obs[1], 0.0, atol=1e-15)
    np.testing.assert_allclose(obs[2], 1.0)


def test_actions_are_clamped():
    a, _ = reset_env(OPEN, OPEN.target_goal_spec, 0)
    b, _ = reset_env(OPEN, OPEN.target_goal_spec, 0)
    ta = step_env(a, [5.0, -7.0])
    tb = step_env(b, [1.0, -1.0])
    assert ta == tb
    np.testing.assert_array_equal(ta.action, [1.0, -1.0])


@pytest.mark.parametrize("env_id", ["point_maze", "point_push", "point_open"])
def test_determinism_same_seed_same_actions(env_id):
    env = get_env(env_id)
    rng = np.random.default_rng(5)
    actions = rng.uniform(-1.5, 1.5, size=(60, env.action_dims))
    runs = []
    for _ in range(2):
        state, obs = reset_env(env, env.target_goal_spec, 11)
        runs.append([step_env(state, a) for a in actions])
    assert runs[0] == runs[1]


@pytest.mark.parametrize("env_id", ["point_maze", "point_push", "point_open"])
def test_batch_matches_single_episodes(env_id):
    env = get_env(env_id)
    rng = np.random.default_rng(2)
    seeds = [3, 4, 5]
    actions = rng.uniform(-1, 1, size=(40, len(seeds), env.action_dims))
    sim = BatchSim(env, env.target_goal_spec, seeds)
    batch_obs = []
    for a in actions:
        sim.step(a)
        batch_obs.append(sim.observe())
    for i, seed in enumerate(seeds):
        state, _ = reset_env(env, env.target_goal_spec, seed)
        for t, a in enumerate(actions[:, i]):
            tr = step_env(state, a)
            for name in env.variable_names:
                np.testing.assert_array_equal(tr.next_observation[name], batch_obs[t][name][i])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), env_id=st.sampled_from(["point_maze", "point_push", "point_open"]))
def test_normalization_bounds_under_random_actions(seed, env_id):
    env = get_env(env_id)
    rng = np.random.default_rng(seed)
    sim = BatchSim(env, env.target_goal_spec, list(range(8)))
    for _ in range(60):
        sim.step(rng.uniform(-3, 3, size=(8, env.action_dims)))
        for name, value in sim.observe().items():
            assert value.shape == (8, env.variable(name).dims)
            assert np.all(value >= -1.0) and np.all(value <= 1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_maze_agent_never_enters_walls(seed):
    dyn = MAZE.dynamics
    rng = np.random.default_rng(seed)
    sim = BatchSim(MAZE, spec(goal_distance=(6, 6)), list(range(16)))
    for _ in range(150):
        sim.step(rng.uniform(-1, 1, size=(16, 2)))
        pos = sim.state["pos"]
        r = dyn.radius
        for dx in (-r, r):
            for dy in (-r, r):
                col = np.floor(pos[:, 0] + dx * (1 - 1e-6)).astype(int)
                row = np.floor(pos[:, 1] + dy * (1 - 1e-6)).astype(int)
                assert not dyn.walls[row, col].any()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_push_discs_never_overlap(seed):
    dyn = PUSH.dynamics
    rng = np.random.default_rng(seed)
    sim = BatchSim(PUSH, spec(goal_radius=(0, 1.5)), list(range(16)))
    for _ in range(120):
        # biased toward the block so contacts are frequent
        toward = sim.state["block"] - sim.state["pos"]
        sim.step(np.clip(toward + rng.normal(0, 0.7, size=(16, 2)), -1, 1))
        gap = np.hypot(*(sim.state["pos"] - sim.state["block"]).T)
        assert np.all(gap >= dyn.ra + dyn.rb - 1e-9)


def test_push_straight_drive_displaces_block_along_normal():
    state, obs = reset_env(PUSH, spec(goal_radius=(1.5, 1.5)), 0)
    start_block = raw(PUSH, "block_pos", obs["block_pos"])
    for _ in range(40):
        tr = step_env(state, [1.0, 1.0])
        a = raw(PUSH, "agent_pos", tr.next_observation["agent_pos"])
        b = raw(PUSH, "block_pos", tr.next_observation["block_pos"])
        assert np.hypot(*(a - b)) >= 0.5 - 1e-9
    moved = b - start_block
    assert np.hypot(*moved) > 0.5
    # the drive is along the diagonal, so is the push
    assert moved[0] == pytest.approx(moved[1], abs=1e-9)


def test_waypoint_oracle_solves_maze_target():
    policy = waypoint_controller(MAZE_LAYOUT)
    for seed in range(20):
        state, obs = reset_env(MAZE, MAZE.target_goal_spec, seed)
        success = False
        for _ in range(MAZE.horizon):
            tr = step_env(state, policy(obs.values))
            obs = tr.next_observation
            if tr.terminated:
                success = tr.success
                break
        assert success, seed


def test_observation_equality_is_array_aware():
    a = Observation({"x": np.array([1.0, 2.0])})
    assert a == Observation({"x": np.array([1.0, 2.0])})
    assert a != Observation({"x": np.array([1.0, 2.5])})


def test_env_description_deterministic_and_complete():
    text = env_description(MAZE)
    assert text == env_description(MAZE)
    for name in MAZE.variable_names:
        assert text.count(f"\n{name}:") == 1
    assert "goal_distance: [0, 6]" in text
    assert MAZE.target_description.strip() in text


def test_dump_env_is_json_ready():
    import json

    doc = dump_env(MAZE)
    assert json.loads(json.dumps(doc)) == doc
    assert doc["id"] == "point_maze"
