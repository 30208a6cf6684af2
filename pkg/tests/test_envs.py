import numpy as np
import pytest

from csdlab.envs import (
    EnvState, GraphMdp, PointPush, PointPushConfig, read_trajectory_observations, random_policy, rollout,
    write_trajectories_csv, zero_policy,
)
from csdlab.ndmath import ContractError


def state(*obs):
    return EnvState(np.array(obs, dtype=float), 0)


def test_reset_is_fixed_start():
    env = PointPush()
    s = env.reset(0)
    np.testing.assert_array_equal(s.observation, [0.0, 0.0, 0.5, 0.0])
    assert s.step_index == 0
    np.testing.assert_array_equal(env.reset(0).observation, env.reset(0).observation)


def test_graph_reset():
    env = GraphMdp()
    assert env.state_index(env.reset(3).observation) == 0


def test_block_ignores_distant_agent():
    env = PointPush()
    nxt = env.step(state(-0.5, -0.5, 0.5, 0.0), np.array([0.1, 0.1]))
    np.testing.assert_array_equal(nxt.observation[2:], [0.5, 0.0])


def test_coincident_agent_carries_block():
    env = PointPush()
    nxt = env.step(state(0.5, 0.0, 0.5, 0.0), np.array([0.05, 0.0]))
    np.testing.assert_allclose(nxt.observation, [0.55, 0.0, 0.55, 0.0], atol=1e-15)


def test_agent_clipped_at_wall():
    env = PointPush()
    nxt = env.step(state(0.98, 0.0, -0.5, 0.0), np.array([0.1, 0.0]))
    np.testing.assert_allclose(nxt.observation[:2], [1.0, 0.0])


def test_action_clipped_to_max_action():
    env = PointPush()
    nxt = env.step(state(0.0, 0.0, 0.5, 0.5), np.array([5.0, -5.0]))
    np.testing.assert_allclose(nxt.observation[:2], [0.1, -0.1])


def test_action_dimension_checked():
    with pytest.raises(ContractError):
        PointPush().step(PointPush().reset(), np.zeros(3))
    with pytest.raises(ContractError):
        GraphMdp().step(GraphMdp().reset(), np.zeros(2))


def test_config_validation():
    with pytest.raises(ValueError):
        PointPushConfig(contact_radius=0.0)
    with pytest.raises(ValueError):
        GraphMdp(n_states=2, adjacency=[[0, 5], [1, 0]])


def test_graph_step_follows_table():
    env = GraphMdp()
    s = env.reset()
    s = env.step(s, np.array([0, 0, 0, 0, 1.0]))  # right
    s = env.step(s, np.array([0, 0, 1.0, 0, 0]))  # down
    assert env.state_index(s.observation) == 5
    assert s.step_index == 2


def test_zero_policy_stays_put():
    env = PointPush()
    traj = rollout(env, zero_policy(env), np.zeros(2), 20, seed=0)
    assert len(traj) == 20
    for t in traj:
        np.testing.assert_array_equal(t.s_next, env.reset().observation)


def test_zero_horizon_rollout():
    env = PointPush()
    assert rollout(env, zero_policy(env), np.zeros(2), 0, seed=0) == []


def test_horizon_limited_by_episode_length():
    env = PointPush(PointPushConfig(episode_length=5))
    with pytest.raises(ContractError):
        rollout(env, zero_policy(env), np.zeros(2), 6, seed=0)


def test_rollout_matches_step_by_step_replay():
    env = PointPush()
    policy = random_policy(env)
    z = np.array([0.3, -1.2])
    traj = rollout(env, policy, z, 50, seed=11)
    rng = np.random.default_rng(11)
    s = env.reset(11)
    for t in traj:
        a = policy(s.observation, z, rng)
        np.testing.assert_array_equal(t.a, a)
        np.testing.assert_array_equal(t.s, s.observation)
        s = env.step(s, a)
        np.testing.assert_array_equal(t.s_next, s.observation)
        np.testing.assert_array_equal(t.z, z)


def test_block_moves_only_on_contact_and_stays_in_bounds():
    env = PointPush()
    rng = np.random.default_rng(0)
    s = env.reset()
    for i in range(10_000):
        if i % 50 == 0:
            s = env.reset()
            # start some episodes next to the block so contacts actually happen
            if i % 100 == 0:
                s = EnvState(np.array([0.45, 0.0, 0.5, 0.0]), 0)
        a = rng.uniform(-0.1, 0.1, size=2)
        nxt = env.step(s, a)
        assert env.in_bounds(nxt.observation)
        moved = not np.array_equal(nxt.observation[2:], s.observation[2:])
        if moved:
            assert np.linalg.norm(nxt.observation[:2] - s.observation[2:]) < env.config.contact_radius
        s = nxt


def test_dynamics_deterministic():
    env = PointPush()
    s = state(0.42, 0.03, 0.5, 0.0)
    a = np.array([0.07, -0.02])
    np.testing.assert_array_equal(env.step(s, a).observation, env.step(s, a).observation)


def test_trajectory_csv_round_trip(tmp_path):
    env = PointPush()
    eps = [rollout(env, random_policy(env), np.array([1.0, 0.0]), 5, seed=k) for k in range(3)]
    path = tmp_path / "traj.csv"
    write_trajectories_csv(path, eps, 4, 2, 2)
    header = path.read_text().splitlines()[0]
    assert header == "episode,t,obs_0,obs_1,obs_2,obs_3,action_0,action_1,skill_0,skill_1"
    back = read_trajectory_observations(path)
    assert len(back) == 3
    np.testing.assert_array_equal(back[1][-1], eps[1][-1].s_next)
    assert back[0].shape == (6, 4)
