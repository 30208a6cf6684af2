"""Intrinsic rewards and the distance-constrained phi / lambda updates.

Covers the distance-maximizing reward ``(phi(s') - phi(s))^T z`` with its
dual-ascent constraint ``||phi(x) - phi(y)|| <= d(x, y)``, the DIAYN
discriminator reward and the ensemble-disagreement reward.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .ndmath import Adam, Mlp, Tensor, as_tensor, concat, log_softmax, minimum, no_grad, norm
from .skills import SkillSpec, log_prior

CONSTRAINT_TOL = 1e-6


class PhiNet:
    """State embedding phi: S -> R^D."""

    def __init__(self, state_dim: int, skill_dim: int, hidden=(64, 64), activation: str = "relu",
                 lr: float = 1e-3, rng=None):
        self.net = Mlp([state_dim, *hidden, skill_dim], activation, rng)
        self.optimizer = Adam(self.net.parameters(), lr)

    @property
    def skill_dim(self) -> int:
        return self.net.out_dim

    def __call__(self, s) -> Tensor:
        return self.net(s)

    def predict(self, s) -> np.ndarray:
        return self.net.predict(s)


@dataclass(frozen=True)
class DualState:
    lam: float = 3000.0
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def dsd_reward(phi: PhiNet, s, s_next, z) -> float | np.ndarray:
    """(phi(s') - phi(s))^T z, per sample."""
    diff = phi.predict(s_next) - phi.predict(s)
    return np.sum(diff * np.asarray(z, dtype=np.float64), axis=-1)


# distances ----------------------------------------------------------------


def euclidean_distance(s, s_next, scale=None) -> float | np.ndarray:
    """||(s' - s) / scale||; ``scale`` is a per-dimension normalizer (None = identity)."""
    delta = np.asarray(s_next, dtype=np.float64) - np.asarray(s, dtype=np.float64)
    if scale is not None:
        delta = delta / np.asarray(scale, dtype=np.float64)
    return np.sqrt(np.sum(delta * delta, axis=-1))


def constant_distance(s, s_next) -> np.ndarray:
    return np.ones(np.shape(s)[:-1])


class StateNormalizer:
    """Per-dimension scale for the Euclidean distance.

    ``none`` keeps raw units, ``preset`` uses a fixed std measured up front,
    ``ema`` tracks an exponential moving RMS of ``s' - s``.
    """

    MIN_SCALE = 1e-3

    def __init__(self, kind: str, dim: int, preset_std=None, decay: float = 0.99):
        if kind not in ("none", "preset", "ema"):
            raise ValueError(f"unknown normalizer {kind!r}")
        self.kind = kind
        self.decay = decay
        self._sq = None
        if kind == "preset":
            if preset_std is None:
                raise ValueError("preset normalizer needs preset_std")
            self._scale = np.maximum(np.asarray(preset_std, dtype=np.float64), self.MIN_SCALE)
        else:
            self._scale = np.ones(dim)

    @property
    def scale(self):
        return None if self.kind == "none" else self._scale

    def update(self, s, s_next):
        if self.kind != "ema":
            return
        delta = np.asarray(s_next) - np.asarray(s)
        sq = np.mean(delta * delta, axis=0)
        self._sq = sq if self._sq is None else self.decay * self._sq + (1 - self.decay) * sq
        self._scale = np.maximum(np.sqrt(self._sq), self.MIN_SCALE)

    def distance(self, s, s_next):
        return euclidean_distance(s, s_next, self.scale)


# phi / lambda -------------------------------------------------------------


def constraint_slack(phi: PhiNet, s, s_next, d) -> np.ndarray:
    """d(x, y) - ||phi(x) - phi(y)|| without building a tape."""
    return np.asarray(d) - np.linalg.norm(phi.predict(s_next) - phi.predict(s), axis=-1)


def phi_objective(phi: PhiNet, dual: DualState, s, s_next, z,
                  distance_fn: Callable | np.ndarray) -> tuple[Tensor, np.ndarray]:
    """Loss to *minimize* for phi, plus the per-sample slacks.

    loss = -mean[(phi(s') - phi(s))^T z + lam * min(eps, d(s, s') - ||phi(s) - phi(s')||)]

    The constraint pairs are the same (s, s') pairs as the reward term.
    ``distance_fn`` may be a callable or precomputed distances; either way
    no gradient reaches whatever produced them.
    """
    s = np.asarray(s, dtype=np.float64)
    s_next = np.asarray(s_next, dtype=np.float64)
    if s.shape[0] == 0:
        raise ValueError("phi_objective needs a non-empty batch")
    d = distance_fn(s, s_next) if callable(distance_fn) else np.asarray(distance_fn, dtype=np.float64)
    both = phi(np.concatenate([s, s_next], axis=0))
    n = s.shape[0]
    diff = both[n:] - both[:n]
    reward = (diff * as_tensor(z)).sum(axis=-1)
    slack = as_tensor(d) - norm(diff, axis=-1)
    penalty = minimum(dual.epsilon, slack) * dual.lam
    loss = -(reward + penalty).mean()
    return loss, slack.data.copy()


def phi_update(phi: PhiNet, dual: DualState, s, s_next, z, distance_fn) -> tuple[float, np.ndarray]:
    loss, slack = phi_objective(phi, dual, s, s_next, z, distance_fn)
    return phi.optimizer.minimize(loss), slack


def lambda_update(dual: DualState, slacks, lr_lambda: float) -> DualState:
    """Gradient step on -lam * E[min(eps, slack)], projected onto lam >= 0."""
    step = float(np.mean(np.minimum(dual.epsilon, np.asarray(slacks, dtype=np.float64))))
    return replace(dual, lam=max(0.0, dual.lam - lr_lambda * step))


def violation_rate(slacks, tol: float = CONSTRAINT_TOL) -> float:
    slacks = np.asarray(slacks)
    return float(np.mean(slacks < -tol)) if slacks.size else 0.0


# DIAYN --------------------------------------------------------------------


class Discriminator:
    """q(z|s): categorical logits for discrete skills, unit-variance Gaussian mean otherwise."""

    def __init__(self, state_dim: int, spec: SkillSpec, hidden=(64, 64), activation: str = "relu",
                 lr: float = 1e-3, rng=None):
        self.spec = spec
        self.net = Mlp([state_dim, *hidden, spec.vector_dim], activation, rng)
        self.optimizer = Adam(self.net.parameters(), lr)

    def log_q_tensor(self, s, z) -> Tensor:
        out = self.net(s)
        z = np.asarray(z, dtype=np.float64)
        if self.spec.discrete:
            idx = np.argmax(z, axis=-1)
            onehot = np.eye(self.spec.discrete_count)[idx]
            return (log_softmax(out) * onehot).sum(axis=-1)
        resid = as_tensor(z) - out
        return -0.5 * resid.square().sum(axis=-1) - 0.5 * self.spec.dim * np.log(2 * np.pi)

    def log_q(self, s, z) -> np.ndarray:
        with no_grad():
            return self.log_q_tensor(np.atleast_2d(s), np.atleast_2d(z)).data.reshape(np.shape(s)[:-1])


def diayn_reward(disc: Discriminator, spec: SkillSpec, s, z) -> float | np.ndarray:
    """log q(z|s) - log p(z)."""
    value = disc.log_q(s, z) - log_prior(spec, z)
    return float(value) if np.ndim(value) == 0 else value


def discriminator_update(disc: Discriminator, s, z, lr: float | None = None) -> float:
    """One step on the negative log-likelihood of the true skills; returns the pre-step loss."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape[0] == 0:
        raise ValueError("discriminator_update needs a non-empty batch")
    if lr is not None:
        disc.optimizer.lr = lr
    loss = -disc.log_q_tensor(s, z).mean()
    return disc.optimizer.minimize(loss)


# disagreement -------------------------------------------------------------


class DynEnsemble:
    """E forward models (s, a) -> s'; each predicts a residual on s."""

    def __init__(self, state_dim: int, action_dim: int, members: int = 5, hidden=(64, 64),
                 activation: str = "relu", lr: float = 1e-3, rng=None):
        if members < 2:
            raise ValueError("an ensemble needs at least two members")
        rng = np.random.default_rng(rng)
        self.members = [Mlp([state_dim + action_dim, *hidden, state_dim], activation, rng)
                        for _ in range(members)]
        self.optimizers = [Adam(m.parameters(), lr) for m in self.members]

    def __len__(self):
        return len(self.members)

    def predict(self, s, a) -> np.ndarray:
        """Predicted next states, shape (E, ..., state_dim)."""
        s = np.asarray(s, dtype=np.float64)
        x = np.concatenate([s, np.asarray(a, dtype=np.float64)], axis=-1)
        return np.stack([s + m.predict(x) for m in self.members])

    def fit_step(self, s, a, s_next, rng: np.random.Generator) -> float:
        """Each member takes one MSE step on its own bootstrap resample of the batch."""
        s = np.asarray(s, dtype=np.float64)
        a = np.asarray(a, dtype=np.float64)
        s_next = np.asarray(s_next, dtype=np.float64)
        losses = []
        for m, opt in zip(self.members, self.optimizers):
            idx = rng.integers(0, s.shape[0], size=s.shape[0])
            x = concat([s[idx], a[idx]], axis=-1)
            pred = as_tensor(s[idx]) + m(x)
            loss = (pred - s_next[idx]).square().sum(axis=-1).mean()
            losses.append(opt.minimize(loss))
        return float(np.mean(losses))


def disagreement_reward(ens: DynEnsemble, s, a) -> float | np.ndarray:
    """Sum over state dims of the population variance of the members' predictions."""
    preds = ens.predict(s, a)
    value = preds.var(axis=0).sum(axis=-1)
    return float(value) if np.ndim(value) == 0 else value
