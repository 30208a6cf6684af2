"""State-conditioned diagonal Gaussian transition model q(s'|s).

The mean is predicted as a residual on the current state. Log-variances are
clamped to [-10, 10]. With ``normalize`` on, the diagonal variances used by
the distance are divided by their geometric mean at each state, so their
product is one.
"""
from __future__ import annotations

import math

import numpy as np

from .ndmath import Adam, Mlp, Tensor, as_tensor, no_grad

LOGVAR_MIN, LOGVAR_MAX = -10.0, 10.0
LOG_2PI = math.log(2.0 * math.pi)


class CondGaussian:
    def __init__(self, state_dim: int, hidden=(64, 64), activation: str = "relu",
                 normalize: bool = True, lr: float = 1e-3, rng=None):
        rng = np.random.default_rng(rng)
        widths = [state_dim, *hidden, state_dim]
        self.state_dim = state_dim
        self.mu_net = Mlp(widths, activation, rng)
        self.logvar_net = Mlp(widths, activation, rng)
        self.normalize = normalize
        self.optimizer = Adam(self.parameters(), lr)

    def parameters(self):
        return self.mu_net.parameters() + self.logvar_net.parameters()

    def mean_logvar(self, s) -> tuple[Tensor, Tensor]:
        s = as_tensor(s)
        mu = s + self.mu_net(s)
        logvar = self.logvar_net(s).clip(LOGVAR_MIN, LOGVAR_MAX)
        return mu, logvar

    def predict(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Mean and raw (unnormalized) diagonal variance, numpy only."""
        s = np.asarray(s, dtype=np.float64)
        mu = s + self.mu_net.predict(s)
        logvar = np.clip(self.logvar_net.predict(s), LOGVAR_MIN, LOGVAR_MAX)
        return mu, np.exp(logvar)

    def distance_variances(self, s) -> np.ndarray:
        """Variances entering the distance: geometric-mean normalized when enabled."""
        s = np.asarray(s, dtype=np.float64)
        logvar = np.clip(self.logvar_net.predict(s), LOGVAR_MIN, LOGVAR_MAX)
        if self.normalize:
            logvar = logvar - logvar.mean(axis=-1, keepdims=True)
        return np.exp(logvar)

    def nll_tensor(self, s, s_next) -> Tensor:
        """Per-sample -log q(s'|s) as a tensor on the tape."""
        mu, logvar = self.mean_logvar(s)
        resid = as_tensor(s_next) - mu
        quad = resid.square() / logvar.exp()
        return 0.5 * (quad + logvar + LOG_2PI).sum(axis=-1)

    def state_dict(self):
        return {"mu": self.mu_net.state_dict(), "logvar": self.logvar_net.state_dict()}

    def load_state_dict(self, state):
        self.mu_net.load_state_dict(state["mu"])
        self.logvar_net.load_state_dict(state["logvar"])


def nll(model: CondGaussian, s, s_next) -> float | np.ndarray:
    """-log q(s'|s) under the raw diagonal Gaussian."""
    s_next = np.asarray(s_next, dtype=np.float64)
    mu, var = model.predict(s)
    return 0.5 * np.sum((s_next - mu) ** 2 / var + np.log(var) + LOG_2PI, axis=-1)


def fit_step(model: CondGaussian, s, s_next, lr: float | None = None) -> float:
    """One Adam step on the mean NLL of the batch; returns the pre-step loss."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] == 0:
        raise ValueError("fit_step needs a non-empty 2-D batch")
    if lr is not None:
        model.optimizer.lr = lr
    loss = model.nll_tensor(s, s_next).mean()
    return model.optimizer.minimize(loss)


def csd_distance(model: CondGaussian, s, s_next) -> float | np.ndarray:
    """Mahalanobis quadratic form (s' - mu(s))^T Sigma(s)^-1 (s' - mu(s))."""
    s_next = np.asarray(s_next, dtype=np.float64)
    with no_grad():
        mu = np.asarray(s, dtype=np.float64) + model.mu_net.predict(s)
        var = model.distance_variances(s)
    return np.sum((s_next - mu) ** 2 / var, axis=-1)
