"""Soft Actor-Critic for skill-conditioned policies pi(a | s, z)."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .ndmath import Adam, Mlp, Tensor, as_tensor, concat, minimum, no_grad, parameter

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
LOG_2PI = math.log(2.0 * math.pi)
LOG_2 = math.log(2.0)


class ReplayBuffer:
    def __init__(self, obs_dim: int, action_dim: int, skill_dim: int, capacity: int = 100_000):
        self.capacity = int(capacity)
        self.s = np.zeros((self.capacity, obs_dim))
        self.a = np.zeros((self.capacity, action_dim))
        self.s_next = np.zeros((self.capacity, obs_dim))
        self.z = np.zeros((self.capacity, skill_dim))
        self.done = np.zeros(self.capacity)
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    def add(self, s, a, s_next, z, done=False):
        i = self._next
        self.s[i], self.a[i], self.s_next[i], self.z[i], self.done[i] = s, a, s_next, z, float(done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def extend(self, transitions):
        for t in transitions:
            self.add(t.s, t.a, t.s_next, t.z, t.done)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        idx = rng.integers(0, self.size, size=batch_size)
        return {"s": self.s[idx], "a": self.a[idx], "s_next": self.s_next[idx],
                "z": self.z[idx], "done": self.done[idx]}

    def all(self) -> dict:
        n = self.size
        return {"s": self.s[:n], "a": self.a[:n], "s_next": self.s_next[:n],
                "z": self.z[:n], "done": self.done[:n]}


def squashed_gaussian(mean: Tensor, log_std: Tensor, eps: np.ndarray) -> tuple[Tensor, Tensor]:
    """Reparameterized tanh(mean + std * eps) and its summed log-density.

    log(1 - tanh(u)^2) is evaluated as 2 * (log 2 - u - softplus(-2u)).
    """
    u = mean + log_std.exp() * eps
    action = u.tanh()
    gauss = -0.5 * (eps * eps) - log_std - 0.5 * LOG_2PI
    jacobian = 2.0 * (LOG_2 - u - (u * -2.0).softplus())
    return action, (gauss - jacobian).sum(axis=-1)


def squashed_log_prob(a, mean, log_std) -> np.ndarray:
    """Log-density of tanh-squashed actions ``a`` in (-1, 1), numpy only."""
    a = np.asarray(a, dtype=np.float64)
    u = np.arctanh(a)
    std = np.exp(log_std)
    gauss = -0.5 * ((u - mean) / std) ** 2 - log_std - 0.5 * LOG_2PI
    jacobian = 2.0 * (LOG_2 - u - np.logaddexp(0.0, -2.0 * u))
    return np.sum(gauss - jacobian, axis=-1)


class SacAgent:
    """Actor, twin critics and their Polyak targets.

    Actions are produced in [-1, 1] and multiplied by ``action_scale``; the
    critics and the replay buffer work in those unit actions.
    """

    def __init__(self, obs_dim: int, skill_dim: int, action_dim: int, hidden=(64, 64),
                 activation: str = "relu", lr: float = 1e-3, gamma: float = 0.98,
                 tau: float = 0.995, alpha: float = 0.02, auto_alpha: bool = False,
                 action_scale: float = 1.0, rng=None):
        rng = np.random.default_rng(rng)
        self.obs_dim, self.skill_dim, self.action_dim = obs_dim, skill_dim, action_dim
        self.gamma, self.tau = gamma, tau
        self.action_scale = action_scale
        in_dim = obs_dim + skill_dim
        self.actor = Mlp([in_dim, *hidden, 2 * action_dim], activation, rng)
        self.q1 = Mlp([in_dim + action_dim, *hidden, 1], activation, rng)
        self.q2 = Mlp([in_dim + action_dim, *hidden, 1], activation, rng)
        self.q1_target = self.q1.clone()
        self.q2_target = self.q2.clone()
        self.actor_opt = Adam(self.actor.parameters(), lr)
        self.critic_opt = Adam(self.q1.parameters() + self.q2.parameters(), lr)
        if alpha < 0 or (auto_alpha and alpha == 0):
            raise ValueError("alpha must be non-negative (positive when auto-adjusted)")
        self.auto_alpha = auto_alpha
        self.log_alpha = parameter(np.array([math.log(alpha) if alpha > 0 else -math.inf]))
        self.alpha_opt = Adam([self.log_alpha], lr) if auto_alpha else None
        self.target_entropy = -float(action_dim)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha.data[0]))

    # policy ---------------------------------------------------------------

    def _split(self, out):
        mean = out[..., : self.action_dim]
        raw = out[..., self.action_dim:]
        if isinstance(raw, Tensor):
            log_std = (raw.tanh() + 1.0) * (0.5 * (LOG_STD_MAX - LOG_STD_MIN)) + LOG_STD_MIN
        else:
            log_std = LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (np.tanh(raw) + 1.0)
        return mean, log_std

    def policy_params(self, obs, z) -> tuple[np.ndarray, np.ndarray]:
        x = np.concatenate([np.asarray(obs, dtype=np.float64), np.asarray(z, dtype=np.float64)], axis=-1)
        return self._split(self.actor.predict(x))

    def act(self, obs, z, rng: np.random.Generator, deterministic: bool = False) -> np.ndarray:
        """Action in environment units."""
        mean, log_std = self.policy_params(obs, z)
        if deterministic:
            return np.tanh(mean) * self.action_scale
        u = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        return np.tanh(u) * self.action_scale

    def explore(self, obs, z, rng: np.random.Generator, random_prob: float = 0.3,
                noise: float = 0.2) -> np.ndarray:
        """Training-time action: uniform with ``random_prob``, else a policy sample plus Gaussian noise."""
        if rng.random() < random_prob:
            return rng.uniform(-1.0, 1.0, size=self.action_dim) * self.action_scale
        unit = self.act(obs, z, rng) / self.action_scale
        unit = np.clip(unit + noise * rng.standard_normal(self.action_dim), -1.0, 1.0)
        return unit * self.action_scale

    def sample_tensor(self, obs_z, rng: np.random.Generator) -> tuple[Tensor, Tensor]:
        mean, log_std = self._split(self.actor(obs_z))
        eps = rng.standard_normal(mean.shape)
        return squashed_gaussian(mean, log_std, eps)

    # critics --------------------------------------------------------------

    @staticmethod
    def _q(net: Mlp, obs_z, a):
        return net(concat([as_tensor(obs_z), as_tensor(a)], axis=-1)).reshape(-1)

    def q_values(self, obs, z, a) -> tuple[np.ndarray, np.ndarray]:
        x = np.concatenate([obs, z, a], axis=-1)
        return self.q1.predict(x)[..., 0], self.q2.predict(x)[..., 0]

    def polyak(self):
        tau = self.tau
        for tgt, src in ((self.q1_target, self.q1), (self.q2_target, self.q2)):
            for pt, ps in zip(tgt.parameters(), src.parameters()):
                pt.data = tau * pt.data + (1.0 - tau) * ps.data

    def state_dict(self) -> dict:
        return {"actor": self.actor.state_dict(), "q1": self.q1.state_dict(), "q2": self.q2.state_dict(),
                "q1_target": self.q1_target.state_dict(), "q2_target": self.q2_target.state_dict(),
                "log_alpha": self.log_alpha.data.copy()}

    def load_state_dict(self, state: dict):
        for key in ("actor", "q1", "q2", "q1_target", "q2_target"):
            getattr(self, key).load_state_dict(state[key])
        self.log_alpha.data = np.array(state["log_alpha"], dtype=np.float64)


def critic_target(agent: SacAgent, r, s_next, z, done, rng: np.random.Generator) -> np.ndarray:
    """y = r + gamma * (1 - done) * (min target Q(s', a') - alpha * log pi(a'|s', z)), a' ~ pi."""
    r = np.asarray(r, dtype=np.float64)
    s_next = np.atleast_2d(s_next)
    z = np.asarray(z, dtype=np.float64).reshape(s_next.shape[0], -1)
    with no_grad():
        obs_z = np.concatenate([s_next, z], axis=-1)
        a_next, logp = agent.sample_tensor(obs_z, rng)
        x = np.concatenate([obs_z, a_next.data], axis=-1)
        q = np.minimum(agent.q1_target.predict(x)[:, 0], agent.q2_target.predict(x)[:, 0])
    y = r + agent.gamma * (1.0 - np.asarray(done, dtype=np.float64)) * (q - agent.alpha * logp.data)
    return y.reshape(r.shape) if r.ndim else float(y[0])


def sac_update(agent: SacAgent, buffer: ReplayBuffer, batch_size: int,
               intrinsic_fn: Callable[[dict], np.ndarray], rng: np.random.Generator) -> dict | None:
    """One critic step, one actor step (and alpha step if automatic), then Polyak.

    Rewards come from ``intrinsic_fn(batch)`` at update time. Returns None
    when the buffer holds fewer than ``batch_size`` transitions.
    """
    if len(buffer) < batch_size:
        return None
    batch = buffer.sample(batch_size, rng)
    r = np.asarray(intrinsic_fn(batch), dtype=np.float64)
    y = critic_target(agent, r, batch["s_next"], batch["z"], batch["done"], rng)

    obs_z = np.concatenate([batch["s"], batch["z"]], axis=-1)
    q1 = agent._q(agent.q1, obs_z, batch["a"])
    q2 = agent._q(agent.q2, obs_z, batch["a"])
    critic_loss = ((q1 - y).square().mean() + (q2 - y).square().mean())
    critic_value = agent.critic_opt.minimize(critic_loss)

    critic_params = agent.q1.parameters() + agent.q2.parameters()
    for p in critic_params:
        p.requires_grad = False
    try:
        a_new, logp = agent.sample_tensor(obs_z, rng)
        q_new = minimum(agent._q(agent.q1, obs_z, a_new), agent._q(agent.q2, obs_z, a_new))
        actor_loss = (logp * agent.alpha - q_new).mean()
        actor_value = agent.actor_opt.minimize(actor_loss)
    finally:
        for p in critic_params:
            p.requires_grad = True

    if agent.auto_alpha:
        alpha_loss = -(agent.log_alpha * float(np.mean(logp.data) + agent.target_entropy)).sum()
        agent.alpha_opt.minimize(alpha_loss)

    agent.polyak()
    return {"critic_loss": critic_value, "actor_loss": actor_value, "reward_mean": float(r.mean()),
            "entropy": float(-np.mean(logp.data)), "alpha": agent.alpha}
