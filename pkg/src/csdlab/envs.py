"""Deterministic toy environments and trajectory logging.

``PointPush`` is a 2-D agent that carries a block once it touches it: a
cheap stand-in for a manipulation task where moving the object is a rare
transition compared with moving the agent. ``GraphMdp`` is a small finite
MDP with one-hot observations, used where exact enumeration is needed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ndmath import ContractError


@dataclass(frozen=True)
class EnvState:
    observation: np.ndarray
    step_index: int = 0


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    z: np.ndarray
    done: bool = False


@dataclass(frozen=True)
class PointPushConfig:
    contact_radius: float = 0.1
    max_action: float = 0.1
    episode_length: int = 50
    block_start: tuple = (0.5, 0.0)
    agent_start: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.contact_radius <= 0 or self.max_action <= 0:
            raise ValueError("contact_radius and max_action must be positive")
        if self.episode_length < 0:
            raise ValueError("episode_length must be non-negative")


class PointPush:
    """Observation ``[agent_x, agent_y, block_x, block_y]``, all in [-1, 1]."""

    obs_dim = 4
    action_dim = 2
    low, high = -1.0, 1.0
    coverage_dims = {"agent": (0, 1), "block": (2, 3)}

    def __init__(self, config: PointPushConfig | None = None):
        self.config = config or PointPushConfig()

    @property
    def episode_length(self) -> int:
        return self.config.episode_length

    @property
    def max_action(self) -> float:
        return self.config.max_action

    def reset(self, seed: int = 0) -> EnvState:
        obs = np.array([*self.config.agent_start, *self.config.block_start], dtype=np.float64)
        return EnvState(np.clip(obs, self.low, self.high), 0)

    def step(self, state: EnvState, action) -> EnvState:
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.action_dim,):
            raise ContractError(f"PointPush expects a length-2 action, got shape {action.shape}")
        action = np.clip(action, -self.max_action, self.max_action)
        obs = state.observation
        agent, block = obs[:2], obs[2:]
        new_agent = np.clip(agent + action, self.low, self.high)
        if np.linalg.norm(new_agent - block) < self.config.contact_radius:
            new_block = np.clip(block + (new_agent - agent), self.low, self.high)
        else:
            new_block = block.copy()
        return EnvState(np.concatenate([new_agent, new_block]), state.step_index + 1)

    def in_bounds(self, obs) -> bool:
        obs = np.asarray(obs)
        return bool(np.all(obs >= self.low) and np.all(obs <= self.high))


def grid_adjacency(rows: int, cols: int) -> list[list[int]]:
    """Grid world with actions (stay, up, down, left, right); walls block movement."""
    table = []
    for r in range(rows):
        for c in range(cols):
            here = r * cols + c
            up = here - cols if r > 0 else here
            down = here + cols if r < rows - 1 else here
            left = here - 1 if c > 0 else here
            right = here + 1 if c < cols - 1 else here
            table.append([here, up, down, left, right])
    return table


@dataclass
class GraphMdp:
    """Finite MDP; observation is a one-hot state, the action vector is read by argmax."""

    n_states: int = 16
    adjacency: list = field(default_factory=lambda: grid_adjacency(4, 4))
    episode_length: int = 50
    max_action: float = 1.0

    def __post_init__(self):
        if not 1 <= self.n_states <= 16:
            raise ValueError("GraphMdp supports 1..16 states")
        if len(self.adjacency) != self.n_states:
            raise ValueError("adjacency needs one row per state")
        widths = {len(row) for row in self.adjacency}
        if len(widths) != 1:
            raise ValueError("every state needs the same number of actions")
        for row in self.adjacency:
            for nxt in row:
                if not 0 <= nxt < self.n_states:
                    raise ValueError(f"transition to invalid state {nxt}")
        self.coverage_dims = {"agent": tuple(range(self.n_states))}

    @property
    def obs_dim(self) -> int:
        return self.n_states

    @property
    def action_dim(self) -> int:
        return len(self.adjacency[0])

    def one_hot(self, index: int) -> np.ndarray:
        obs = np.zeros(self.n_states)
        obs[index] = 1.0
        return obs

    def state_index(self, obs) -> int:
        return int(np.argmax(obs))

    def reset(self, seed: int = 0) -> EnvState:
        return EnvState(self.one_hot(0), 0)

    def step(self, state: EnvState, action) -> EnvState:
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.action_dim,):
            raise ContractError(f"GraphMdp expects a length-{self.action_dim} action, got {action.shape}")
        nxt = self.adjacency[self.state_index(state.observation)][int(np.argmax(action))]
        return EnvState(self.one_hot(nxt), state.step_index + 1)

    def in_bounds(self, obs) -> bool:
        obs = np.asarray(obs)
        return bool(np.all((obs == 0) | (obs == 1)) and obs.sum() == 1)


Policy = Callable[[np.ndarray, np.ndarray, np.random.Generator], np.ndarray]


def zero_policy(env) -> Policy:
    def act(obs, z, rng):
        return np.zeros(env.action_dim)

    return act


def random_policy(env) -> Policy:
    def act(obs, z, rng):
        return rng.uniform(-env.max_action, env.max_action, size=env.action_dim)

    return act


def rollout(env, policy: Policy, skill, horizon: int, seed: int) -> list[Transition]:
    """Run ``policy`` for ``horizon`` steps with the skill held fixed."""
    if horizon > env.episode_length:
        raise ContractError(f"horizon {horizon} exceeds episode length {env.episode_length}")
    rng = np.random.default_rng(seed)
    z = np.asarray(skill, dtype=np.float64)
    state = env.reset(seed)
    out = []
    for _ in range(horizon):
        action = np.asarray(policy(state.observation, z, rng), dtype=np.float64)
        nxt = env.step(state, action)
        out.append(Transition(state.observation, action, nxt.observation, z, False))
        state = nxt
    return out


def observations(transitions: Sequence[Transition]) -> np.ndarray:
    """States visited by one episode, including the final one."""
    if not transitions:
        return np.zeros((0, 0))
    return np.stack([t.s for t in transitions] + [transitions[-1].s_next])


# ---------------------------------------------------------------------------
# trajectory CSV: episode, t, obs_*, action_*, skill_*; the last row of each
# episode holds the final observation with blank actions.


def trajectory_header(obs_dim: int, action_dim: int, skill_dim: int) -> list[str]:
    return (["episode", "t"] + [f"obs_{i}" for i in range(obs_dim)]
            + [f"action_{i}" for i in range(action_dim)] + [f"skill_{i}" for i in range(skill_dim)])


def write_trajectories_csv(path, episodes: Sequence[Sequence[Transition]], obs_dim: int,
                           action_dim: int, skill_dim: int):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(obs_dim, action_dim, skill_dim))
        for ep, transitions in enumerate(episodes):
            for t, tr in enumerate(transitions):
                writer.writerow([ep, t, *map(repr, tr.s.tolist()), *map(repr, tr.a.tolist()),
                                 *map(repr, tr.z.tolist())])
            if transitions:
                last = transitions[-1]
                writer.writerow([ep, len(transitions), *map(repr, last.s_next.tolist()),
                                 *([""] * action_dim), *map(repr, last.z.tolist())])


def read_trajectory_observations(path) -> list[np.ndarray]:
    """Per-episode observation arrays from a trajectory CSV."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        obs_cols = [c for c in reader.fieldnames if c.startswith("obs_")]
        episodes: dict[int, list] = {}
        for row in reader:
            episodes.setdefault(int(row["episode"]), []).append([float(row[c]) for c in obs_cols])
    return [np.array(episodes[k]) for k in sorted(episodes)]
