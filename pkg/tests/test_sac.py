import math

import numpy as np
import pytest

from csdlab.ndmath import Tensor, backward
from csdlab.sac import ReplayBuffer, SacAgent, critic_target, sac_update, squashed_gaussian, squashed_log_prob

from conftest import central_difference, max_rel_error


def filled_buffer(n=300, obs_dim=3, skill_dim=2, action_dim=2, seed=0):
    """Chained transitions, so every next state also appears as a current state."""
    rng = np.random.default_rng(seed)
    buf = ReplayBuffer(obs_dim, action_dim, skill_dim, capacity=1000)
    states = rng.uniform(-1, 1, size=(n + 1, obs_dim))
    z = rng.normal(size=skill_dim)
    for i in range(n):
        buf.add(states[i], rng.uniform(-1, 1, action_dim), states[i + 1], z, False)
    return buf


def zero_reward(batch):
    return np.zeros(len(batch["s"]))


def test_buffer_ring_and_capacity():
    buf = ReplayBuffer(1, 1, 1, capacity=3)
    for i in range(5):
        buf.add([i], [0], [i + 1], [0])
    assert len(buf) == 3
    assert sorted(buf.all()["s"][:, 0]) == [2.0, 3.0, 4.0]
    batch = buf.sample(50, np.random.default_rng(0))
    assert set(batch["s"][:, 0]) <= {2.0, 3.0, 4.0}


def test_update_signals_small_buffer():
    agent = SacAgent(3, 2, 2, hidden=(8,), rng=0)
    assert sac_update(agent, filled_buffer(10), 64, zero_reward, np.random.default_rng(0)) is None


def test_target_reduces_to_reward():
    agent = SacAgent(3, 2, 2, hidden=(8,), rng=0)
    rng = np.random.default_rng(1)
    r = np.array([0.5, -1.0])
    s2, z = rng.normal(size=(2, 3)), rng.normal(size=(2, 2))
    np.testing.assert_array_equal(critic_target(agent, r, s2, z, [1.0, 1.0], rng), r)
    agent.gamma = 0.0
    np.testing.assert_array_equal(critic_target(agent, r, s2, z, [0.0, 0.0], rng), r)


def test_target_matches_scalar_recomputation():
    agent = SacAgent(3, 2, 2, hidden=(8, 8), alpha=0.3, rng=4)
    s2, z = np.array([0.1, -0.4, 0.7]), np.array([1.0, -0.5])
    y = critic_target(agent, 0.25, s2, z, 0.0, np.random.default_rng(9))

    # replay the same noise draw by hand
    eps = np.random.default_rng(9).standard_normal(2)
    x = np.concatenate([s2, z])
    out = agent.actor.predict(x)
    mean, raw = out[:2], out[2:]
    log_std = -5.0 + 0.5 * 7.0 * (np.tanh(raw) + 1.0)
    u = mean + np.exp(log_std) * eps
    a = np.tanh(u)
    logp = 0.0
    for k in range(2):
        gauss = -0.5 * eps[k] ** 2 - log_std[k] - 0.5 * math.log(2 * math.pi)
        logp += gauss - math.log(1 - math.tanh(u[k]) ** 2)
    xa = np.concatenate([x, a])
    q = min(agent.q1_target.predict(xa)[0], agent.q2_target.predict(xa)[0])
    assert y == pytest.approx(0.25 + 0.98 * (q - 0.3 * logp), abs=1e-9)


def test_polyak_update():
    agent = SacAgent(3, 2, 2, hidden=(8,), rng=0)
    rng = np.random.default_rng(0)
    for p in agent.q1_target.parameters():
        p.data = p.data + rng.normal(size=p.data.shape)
    old_target = [p.data.copy() for p in agent.q1_target.parameters()]
    sac_update(agent, filled_buffer(), 64, zero_reward, rng)
    for pt, old, pc in zip(agent.q1_target.parameters(), old_target, agent.q1.parameters()):
        np.testing.assert_allclose(pt.data, 0.995 * old + 0.005 * pc.data, rtol=0, atol=1e-12)


def test_zero_reward_critic_goes_to_zero():
    # With tau=0.995 the targets contract by only (1-tau)(1-gamma) per step, about
    # 18% over 2k steps, so a faster target tracks the fixed point within budget.
    agent = SacAgent(3, 2, 2, hidden=(32, 32), alpha=0.0, gamma=0.98, tau=0.9, rng=0)
    buf = filled_buffer()
    rng = np.random.default_rng(0)
    for _ in range(2000):
        sac_update(agent, buf, 64, zero_reward, rng)
    b = buf.all()
    q1, q2 = agent.q_values(b["s"], b["z"], b["a"])
    assert max(np.abs(q1).max(), np.abs(q2).max()) <= 0.05


def test_updates_are_deterministic():
    def run():
        agent = SacAgent(3, 2, 2, hidden=(16,), rng=3)
        rng = np.random.default_rng(5)
        buf = filled_buffer()
        return [sac_update(agent, buf, 32, lambda b: b["s"][:, 0], rng) for _ in range(5)]

    assert run() == run()


def squashed_density_numeric(a, mean, std, h=1e-6):
    """Probability of [a-h, a+h] under tanh(N(mean, std^2)) divided by its width."""
    cdf = lambda x: 0.5 * (1 + math.erf((math.atanh(x) - mean) / (std * math.sqrt(2))))
    return (cdf(a + h) - cdf(a - h)) / (2 * h)


@pytest.mark.parametrize("mean,log_std", [(0.0, 0.0), (0.5, -1.0), (-1.2, 0.4), (2.0, -2.0)])
def test_log_prob_matches_numeric_density(mean, log_std):
    std = math.exp(log_std)
    for k in (-2.0, -1.0, -0.3, 0.0, 0.5, 1.5, 2.5):
        a = math.tanh(mean + k * std)
        expected = math.log(squashed_density_numeric(a, mean, std))
        assert squashed_log_prob([a], np.array([mean]), np.array([log_std])) == pytest.approx(expected, abs=1e-3)


def test_log_prob_integrates_to_one():
    a = np.linspace(-1 + 1e-9, 1 - 1e-9, 400_001)
    dens = np.exp(squashed_log_prob(a[:, None], np.array([0.3]), np.array([-0.2])))
    assert np.trapezoid(dens, a) == pytest.approx(1.0, abs=1e-3)


def test_reparameterized_sample_log_prob_agrees(rng):
    mean, log_std = rng.normal(size=(4, 2)), rng.uniform(-1, 0.5, size=(4, 2))
    eps = rng.standard_normal((4, 2))
    a, logp = squashed_gaussian(Tensor(mean), Tensor(log_std), eps)
    np.testing.assert_allclose(logp.data, squashed_log_prob(a.data, mean, log_std), rtol=0, atol=1e-8)


def test_stable_jacobian_for_large_preactivation():
    a, logp = squashed_gaussian(Tensor(np.array([[30.0]])), Tensor(np.array([[-5.0]])), np.zeros((1, 1)))
    assert np.isfinite(logp.data).all()
    assert a.data[0, 0] == 1.0


def test_critic_gradient_matches_finite_differences(rng):
    agent = SacAgent(3, 2, 2, hidden=(8, 8), rng=2)
    x = rng.normal(size=(6, 5))
    a = rng.uniform(-1, 1, size=(6, 2))
    y = rng.normal(size=6)

    def loss_value():
        return float(np.mean((agent.q1.predict(np.concatenate([x, a], axis=-1))[:, 0] - y) ** 2))

    loss = (agent._q(agent.q1, x, a) - y).square().mean()
    grads = backward(loss)
    numeric = central_difference(loss_value, agent.q1.parameters())
    for p, n in zip(agent.q1.parameters(), numeric):
        assert max_rel_error(grads[p], n) <= 1e-4


def test_actions_bounded():
    agent = SacAgent(3, 2, 2, hidden=(8,), action_scale=0.1, rng=0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        obs, z = rng.normal(size=3) * 10, rng.normal(size=2) * 10
        assert np.all(np.abs(agent.act(obs, z, rng)) <= 0.1)
        assert np.all(np.abs(agent.explore(obs, z, rng)) <= 0.1)


def test_larger_alpha_gives_higher_entropy():
    buf = filled_buffer(500)
    reward = lambda b: b["a"].sum(axis=-1) * 0.1
    entropies = []
    for alpha in (0.01, 0.1, 1.0):
        agent = SacAgent(3, 2, 2, hidden=(32, 32), alpha=alpha, rng=0)
        rng = np.random.default_rng(0)
        for _ in range(500):
            res = sac_update(agent, buf, 64, reward, rng)
        b = buf.all()
        _, log_std = agent.policy_params(b["s"], b["z"])
        entropies.append(float(np.mean(log_std)))
    assert entropies == sorted(entropies)


def test_target_networks_match_critic_architecture():
    agent = SacAgent(3, 2, 2, hidden=(8, 4), rng=0)
    assert [p.shape for p in agent.q1.parameters()] == [p.shape for p in agent.q1_target.parameters()]
    assert [p.shape for p in agent.q2.parameters()] == [p.shape for p in agent.q2_target.parameters()]


def test_state_dict_round_trip():
    a = SacAgent(3, 2, 2, hidden=(8,), rng=0)
    b = SacAgent(3, 2, 2, hidden=(8,), rng=1)
    b.load_state_dict(a.state_dict())
    x = np.ones(5)
    np.testing.assert_array_equal(a.actor.predict(x), b.actor.predict(x))
