"""Training loop, coverage metrics, skill evaluation and downstream control.

One epoch collects ``episodes_per_epoch`` episodes (skill fixed per episode),
then runs the method's learner updates in this order: density fit, phi
update, lambda update, policy update. DIAYN swaps the phi/lambda steps for
discriminator steps and disagreement swaps them for ensemble fitting.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import density as dens
from . import intrinsic as intr
from .envs import GraphMdp, PointPush, PointPushConfig, Transition, observations, rollout, write_trajectories_csv
from .sac import ReplayBuffer, SacAgent, sac_update
from .skills import SKILL_RANGE, SkillSpec, encode, sample_skill

log = logging.getLogger(__name__)

METHODS = ("csd", "lsd", "lsd_preset", "lsd_norm", "diayn", "disagreement")
ENVS = ("point_push", "graph_mdp")
METRIC_COLUMNS = ("epoch", "episodes", "intrinsic_reward_mean", "lambda", "constraint_violation_rate",
                  "coverage_agent", "coverage_block", "density_nll")
DEFAULT_REWARD_COEF = {"csd": 500.0, "lsd": 500.0, "lsd_preset": 500.0, "lsd_norm": 500.0,
                       "diayn": 1500.0, "disagreement": 200.0}
DSD_METHODS = ("csd", "lsd", "lsd_preset", "lsd_norm")


class TrainingDiverged(RuntimeError):
    """A loss became non-finite; a diagnostic snapshot was written if an output dir was given."""


@dataclass
class RunConfig:
    method: str = "csd"
    env: str = "point_push"
    seed: int = 0
    skill_kind: str = "continuous"
    skill_dim: int = 2
    discrete_count: int = 4
    skill_encoding: str = "auto"
    epochs: int = 2000
    episodes_per_epoch: int = 2
    grad_steps_per_episode: int = 10
    batch_size: int = 256
    episode_length: int = 50
    contact_radius: float = 0.1
    max_action: float = 0.1
    hidden_width: int = 64
    hidden_layers: int = 2
    lr: float = 1e-3
    gamma: float = 0.98
    tau: float = 0.995
    alpha: float = 0.02
    auto_alpha: bool = False
    epsilon: float = 1e-6
    lambda_init: float = 3000.0
    lr_lambda: float = 1e-4
    reward_coef: float | None = None
    buffer_size: int = 100_000
    warmup_epochs: int = 100
    random_action_prob: float = 0.3
    action_noise: float = 0.2
    state_mask: list | None = None
    normalize_density: bool = True
    ensemble_size: int = 5
    preset_episodes: int = 20
    ema_decay: float = 0.99
    coverage_bin: float = 0.1
    eval_skills: int = 50

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.env not in ENVS:
            raise ValueError(f"unknown env {self.env!r}; choose from {ENVS}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        for name in ("lr", "gamma", "tau", "alpha", "epsilon", "lr_lambda", "coverage_bin", "max_action",
                     "contact_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lambda_init < 0:
            raise ValueError("lambda_init must be non-negative")
        for name in ("episodes_per_epoch", "grad_steps_per_episode", "batch_size", "buffer_size",
                     "hidden_width", "hidden_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.state_mask is not None:
            self.state_mask = [int(i) for i in self.state_mask]

    @property
    def coef(self) -> float:
        return DEFAULT_REWARD_COEF[self.method] if self.reward_coef is None else float(self.reward_coef)

    @property
    def hidden(self) -> tuple:
        return (self.hidden_width,) * self.hidden_layers

    def skill_spec(self) -> SkillSpec:
        encoding = self.skill_encoding
        if encoding == "auto":
            encoding = "one_hot" if self.method in ("diayn", "disagreement") else "zero_centered_one_hot"
        return SkillSpec(self.skill_kind, self.skill_dim, self.discrete_count, encoding)

    def make_env(self):
        if self.env == "point_push":
            return PointPush(PointPushConfig(self.contact_radius, self.max_action, self.episode_length))
        return GraphMdp(episode_length=self.episode_length)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path, **overrides) -> RunConfig:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        return cls.from_dict({**data, **overrides})


# ---------------------------------------------------------------------------
# coverage


class CoverageGrid:
    """Set of visited ``bin_size`` cells over selected observation dims."""

    def __init__(self, dims: Sequence[int], bin_size: float = 0.1):
        self.dims = tuple(dims)
        self.bin_size = bin_size
        self.occupied: set = set()

    def update(self, obs) -> int:
        obs = np.asarray(obs, dtype=np.float64)
        if obs.size:
            cells = np.floor(obs.reshape(-1, obs.shape[-1])[:, self.dims] / self.bin_size).astype(np.int64)
            self.occupied.update(map(tuple, cells.tolist()))
        return len(self.occupied)

    def __len__(self):
        return len(self.occupied)


def state_coverage(trajectories, dims: Sequence[int], bin_size: float = 0.1) -> int:
    """Distinct bins floor(x / bin_size) visited over ``dims`` across all trajectories."""
    grid = CoverageGrid(dims, bin_size)
    for traj in trajectories:
        if len(traj) and isinstance(traj[0], Transition):
            obs = observations(traj)
        else:
            obs = np.asarray(traj)
        grid.update(obs)
    return len(grid)


# ---------------------------------------------------------------------------
# run state


@dataclass
class RunArtifacts:
    config: dict
    metrics: list = field(default_factory=list)
    events: list = field(default_factory=list)
    trajectories: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    eval_trajectories: list = field(default_factory=list)
    learner: object = None


class Learner:
    """All networks and optimizer state for one run."""

    def __init__(self, cfg: RunConfig, env, rng: np.random.Generator):
        self.cfg = cfg
        self.env = env
        self.spec = cfg.skill_spec()
        self.mask = np.arange(env.obs_dim) if cfg.state_mask is None else np.asarray(cfg.state_mask)
        feat_dim = len(self.mask)
        init = rng.spawn(6)
        action_scale = env.max_action
        self.agent = SacAgent(env.obs_dim, self.spec.vector_dim, env.action_dim, cfg.hidden, lr=cfg.lr,
                              gamma=cfg.gamma, tau=cfg.tau, alpha=cfg.alpha, auto_alpha=cfg.auto_alpha,
                              action_scale=action_scale, rng=init[0])
        self.buffer = ReplayBuffer(env.obs_dim, env.action_dim, self.spec.vector_dim, cfg.buffer_size)
        self.phi = self.density = self.dual = self.normalizer = None
        self.disc = self.ensemble = None
        if cfg.method in DSD_METHODS:
            self.phi = intr.PhiNet(feat_dim, self.spec.vector_dim, cfg.hidden, lr=cfg.lr, rng=init[1])
            self.dual = intr.DualState(cfg.lambda_init, cfg.epsilon)
        if cfg.method == "csd":
            self.density = dens.CondGaussian(feat_dim, cfg.hidden, normalize=cfg.normalize_density,
                                             lr=cfg.lr, rng=init[2])
        if cfg.method in ("lsd", "lsd_preset", "lsd_norm"):
            kind = {"lsd": "none", "lsd_preset": "preset", "lsd_norm": "ema"}[cfg.method]
            preset = preset_state_std(env, cfg, init[3])[self.mask] if kind == "preset" else None
            self.normalizer = intr.StateNormalizer(kind, feat_dim, preset, cfg.ema_decay)
        if cfg.method == "diayn":
            self.disc = intr.Discriminator(feat_dim, self.spec, cfg.hidden, lr=cfg.lr, rng=init[4])
        if cfg.method == "disagreement":
            self.ensemble = intr.DynEnsemble(env.obs_dim, env.action_dim, cfg.ensemble_size, cfg.hidden,
                                             lr=cfg.lr, rng=init[5])

    def feats(self, s):
        return np.asarray(s)[..., self.mask]

    def distance(self, s, s_next) -> np.ndarray:
        """d(s, s') on masked features for the DSD methods."""
        if self.density is not None:
            return dens.csd_distance(self.density, self.feats(s), self.feats(s_next))
        return self.normalizer.distance(self.feats(s), self.feats(s_next))

    def raw_reward(self, s, a, s_next, z) -> np.ndarray:
        m = self.cfg.method
        if m in DSD_METHODS:
            return intr.dsd_reward(self.phi, self.feats(s), self.feats(s_next), z)
        if m == "diayn":
            return intr.diayn_reward(self.disc, self.spec, self.feats(s_next), z)
        return intr.disagreement_reward(self.ensemble, s, a)

    def reward(self, batch: dict) -> np.ndarray:
        r = self.raw_reward(batch["s"], batch["a"], batch["s_next"], batch["z"])
        return self.cfg.coef * np.asarray(r)

    def snapshot(self) -> dict:
        snap = {"agent": self.agent.state_dict()}
        if self.phi is not None:
            snap["phi"] = self.phi.net.state_dict()
            snap["lambda"] = self.dual.lam
        if self.density is not None:
            snap["density"] = self.density.state_dict()
        if self.disc is not None:
            snap["disc"] = self.disc.net.state_dict()
        if self.ensemble is not None:
            snap["ensemble"] = [m.state_dict() for m in self.ensemble.members]
        return snap


def preset_state_std(env, cfg: RunConfig, rng: np.random.Generator) -> np.ndarray:
    """Per-dimension std of states visited by uniform random actions."""
    obs = []
    for k in range(cfg.preset_episodes):
        seed = int(rng.integers(2**31))
        policy = lambda o, z, r: r.uniform(-env.max_action, env.max_action, size=env.action_dim)
        obs.append(observations(rollout(env, policy, np.zeros(0), env.episode_length, seed)))
    return np.concatenate(obs).std(axis=0)


def _finite(*values) -> bool:
    return all(v is None or math.isfinite(v) for v in values)


# ---------------------------------------------------------------------------
# training


def train(cfg: RunConfig, out_dir=None, events: Callable[[int, str], None] | None = None) -> RunArtifacts:
    """Run the full skill-discovery loop; writes metrics/figures when ``out_dir`` is given."""
    env = cfg.make_env()
    root = np.random.default_rng([cfg.seed, 0])
    learner = Learner(cfg, env, root)
    update_rng = np.random.default_rng([cfg.seed, 1])
    art = RunArtifacts(config=cfg.to_dict())
    art.snapshots["initial"] = learner.snapshot()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    grids = {name: CoverageGrid(dims, cfg.coverage_bin) for name, dims in env.coverage_dims.items()}
    steps = cfg.grad_steps_per_episode * cfg.episodes_per_epoch
    scale = env.max_action

    def emit(epoch, name):
        art.events.append({"epoch": epoch, "event": name, "wall_time": time.time()})
        if events is not None:
            events(epoch, name)

    def policy(obs, z, rng):
        return learner.agent.explore(obs, z, rng, cfg.random_action_prob, cfg.action_noise)

    for epoch in range(cfg.epochs):
        episodes = []
        for j in range(cfg.episodes_per_epoch):
            ep_rng = np.random.default_rng([cfg.seed, 2, epoch, j])
            z = sample_skill(learner.spec, ep_rng)
            traj = rollout(env, policy, z, env.episode_length, [cfg.seed, 3, epoch, j])
            episodes.append(traj)
            for t in traj:
                learner.buffer.add(t.s, t.a / scale, t.s_next, t.z, t.done)
            for grid in grids.values():
                grid.update(observations(traj))
        emit(epoch, "collect")

        losses = _update(learner, cfg, epoch, steps, update_rng, emit)
        if not _finite(*losses.values()):
            bad = [k for k, v in losses.items() if v is not None and not math.isfinite(v)]
            if out is not None:
                save_snapshot(out / "diverged", cfg, learner.snapshot())
            raise TrainingDiverged(f"non-finite loss {bad} at epoch {epoch}")

        row = _metrics_row(learner, epoch, episodes, grids)
        row["wall_time"] = time.time()
        art.metrics.append(row)
        if epoch == cfg.epochs - 1:
            art.trajectories = episodes
        if log.isEnabledFor(logging.INFO) and (epoch % 100 == 0 or epoch == cfg.epochs - 1):
            log.info("epoch %d cov_agent=%s cov_block=%s r=%.4g lam=%.4g viol=%.3f", epoch,
                     row["coverage_agent"], row["coverage_block"], row["intrinsic_reward_mean"],
                     row["lambda"], row["constraint_violation_rate"])

    if cfg.epochs:
        art.snapshots["final"] = learner.snapshot()
    art.learner = learner
    if cfg.epochs and cfg.eval_skills:
        art.eval_trajectories = eval_skills(learner.agent, env, learner.spec, cfg.eval_skills,
                                            env.episode_length, seed=cfg.seed)
    if out is not None:
        write_run(out, art, learner, env)
    return art


def _update(learner: Learner, cfg: RunConfig, epoch: int, steps: int, rng, emit) -> dict:
    buf = learner.buffer
    losses = {}
    m = cfg.method
    if m == "csd":
        vals = []
        for _ in range(steps):
            b = buf.sample(cfg.batch_size, rng)
            vals.append(dens.fit_step(learner.density, learner.feats(b["s"]), learner.feats(b["s_next"])))
        losses["density"] = float(np.mean(vals))
        emit(epoch, "density_fit")
    if m in DSD_METHODS:
        vals = []
        for _ in range(steps):
            b = buf.sample(cfg.batch_size, rng)
            if learner.normalizer is not None:
                learner.normalizer.update(learner.feats(b["s"]), learner.feats(b["s_next"]))
            d = learner.distance(b["s"], b["s_next"])
            loss, _ = intr.phi_update(learner.phi, learner.dual, learner.feats(b["s"]),
                                      learner.feats(b["s_next"]), b["z"], d)
            vals.append(loss)
        losses["phi"] = float(np.mean(vals))
        emit(epoch, "phi_update")
        for _ in range(steps):
            b = buf.sample(cfg.batch_size, rng)
            d = learner.distance(b["s"], b["s_next"])
            slack = intr.constraint_slack(learner.phi, learner.feats(b["s"]), learner.feats(b["s_next"]), d)
            learner.dual = intr.lambda_update(learner.dual, slack, cfg.lr_lambda)
        losses["lambda"] = learner.dual.lam
        emit(epoch, "lambda_update")
    elif m == "diayn":
        vals = []
        for _ in range(steps):
            b = buf.sample(cfg.batch_size, rng)
            vals.append(intr.discriminator_update(learner.disc, learner.feats(b["s_next"]), b["z"]))
        losses["disc"] = float(np.mean(vals))
        emit(epoch, "discriminator_update")
    elif m == "disagreement":
        vals = []
        for _ in range(steps):
            b = buf.sample(cfg.batch_size, rng)
            vals.append(learner.ensemble.fit_step(b["s"], b["a"], b["s_next"], rng))
        losses["ensemble"] = float(np.mean(vals))
        emit(epoch, "ensemble_fit")

    if m == "csd" and epoch < cfg.warmup_epochs:
        return losses
    ran = False
    for _ in range(steps):
        res = sac_update(learner.agent, buf, cfg.batch_size, learner.reward, rng)
        if res is None:
            break
        ran = True
        losses["critic"] = res["critic_loss"]
        losses["actor"] = res["actor_loss"]
    if ran:
        emit(epoch, "sac_update")
    return losses


def _metrics_row(learner: Learner, epoch: int, episodes, grids) -> dict:
    s = np.concatenate([[t.s for t in ep] for ep in episodes])
    a = np.concatenate([[t.a / learner.env.max_action for t in ep] for ep in episodes])
    s_next = np.concatenate([[t.s_next for t in ep] for ep in episodes])
    z = np.concatenate([[t.z for t in ep] for ep in episodes])
    cfg = learner.cfg
    row = {"epoch": epoch, "episodes": (epoch + 1) * cfg.episodes_per_epoch,
           "intrinsic_reward_mean": float(np.mean(learner.raw_reward(s, a, s_next, z))),
           "lambda": math.nan, "constraint_violation_rate": math.nan,
           "coverage_agent": len(grids["agent"]), "coverage_block": len(grids["block"]) if "block" in grids else 0,
           "density_nll": math.nan}
    if learner.phi is not None:
        d = learner.distance(s, s_next)
        slack = intr.constraint_slack(learner.phi, learner.feats(s), learner.feats(s_next), d)
        row["lambda"] = learner.dual.lam
        row["constraint_violation_rate"] = intr.violation_rate(slack)
    if learner.density is not None:
        row["density_nll"] = float(np.mean(dens.nll(learner.density, learner.feats(s), learner.feats(s_next))))
    return row


# ---------------------------------------------------------------------------
# evaluation


def eval_skills(agent: SacAgent, env, spec: SkillSpec, n_skills: int, horizon: int, seed: int,
                enumerate_discrete: bool = False) -> list[list[Transition]]:
    """Deterministic rollouts, one freshly sampled skill each (or one per category)."""
    rng = np.random.default_rng([seed, 4])

    def policy(obs, z, r):
        return agent.act(obs, z, r, deterministic=True)

    episodes = []
    for k in range(n_skills):
        if enumerate_discrete and spec.discrete:
            z = encode(spec, k % spec.discrete_count)
        else:
            z = sample_skill(spec, rng)
        episodes.append(rollout(env, policy, z, horizon, [seed, 5, k]))
    return episodes


def coverage_summary(env, episodes, bin_size: float = 0.1) -> dict:
    return {name: state_coverage(episodes, dims, bin_size) for name, dims in env.coverage_dims.items()}


# ---------------------------------------------------------------------------
# downstream goal reaching


@dataclass(frozen=True)
class GoalTask:
    goal_low: float = -0.8
    goal_high: float = 0.8
    radius: float = 0.15
    fixed_goal: tuple | None = None

    def sample_goal(self, rng) -> np.ndarray:
        if self.fixed_goal is not None:
            return np.asarray(self.fixed_goal, dtype=np.float64)
        return rng.uniform(self.goal_low, self.goal_high, size=2)

    def success(self, obs, goal) -> bool:
        return bool(np.linalg.norm(np.asarray(obs)[2:4] - goal) <= self.radius)


@dataclass
class HighLevelConfig:
    skill_dim: int = 2
    skill_period: int = 10
    skill_range: float = SKILL_RANGE
    epochs: int = 300
    episodes_per_epoch: int = 4
    grad_steps_per_epoch: int = 4
    batch_size: int = 256
    eval_episodes: int = 100
    hidden_width: int = 64
    lr: float = 1e-3
    gamma: float = 0.98
    tau: float = 0.995
    alpha: float = 0.02
    horizon: int = 50
    seed: int = 0


def _goal_episode(env, low_policy, high: SacAgent | None, task: GoalTask, hcfg: HighLevelConfig,
                  rng, deterministic: bool, buffer: ReplayBuffer | None) -> bool:
    state = env.reset(0)
    goal = task.sample_goal(rng)
    if task.success(state.observation, goal):
        return True
    t = 0
    while t < hcfg.horizon:
        hobs = np.concatenate([state.observation, goal])
        if high is None:
            z = rng.uniform(-hcfg.skill_range, hcfg.skill_range, size=hcfg.skill_dim)
        elif deterministic:
            z = high.act(hobs, np.zeros(0), rng, deterministic=True)
        else:
            z = high.explore(hobs, np.zeros(0), rng, 0.3, 0.2)
        z = np.clip(z, -hcfg.skill_range, hcfg.skill_range)
        done = False
        for _ in range(hcfg.skill_period):
            if t >= hcfg.horizon:
                break
            state = env.step(state, low_policy(state.observation, z, rng))
            t += 1
            if task.success(state.observation, goal):
                done = True
                break
        if buffer is not None:
            buffer.add(hobs, z / hcfg.skill_range, np.concatenate([state.observation, goal]), np.zeros(0), done)
        if done:
            return True
    return False


def train_high_level(low_policy, env, goal_task: GoalTask, hcfg: HighLevelConfig | None = None,
                     learn: bool = True) -> float:
    """Train a SAC controller choosing a skill every ``skill_period`` steps; return eval success rate.

    ``low_policy(obs, z, rng)`` is frozen. Reward is 1 on success, which ends the episode.
    With ``learn=False`` skills are drawn uniformly from the skill range.
    """
    hcfg = hcfg or HighLevelConfig()
    rng = np.random.default_rng([hcfg.seed, 7])
    high = None
    if learn:
        high = SacAgent(env.obs_dim + 2, 0, hcfg.skill_dim, (hcfg.hidden_width,) * 2, lr=hcfg.lr,
                        gamma=hcfg.gamma, tau=hcfg.tau, alpha=hcfg.alpha, action_scale=hcfg.skill_range,
                        rng=np.random.default_rng([hcfg.seed, 8]))
        buffer = ReplayBuffer(env.obs_dim + 2, hcfg.skill_dim, 0, 100_000)

        def reward(batch):
            return np.array([float(goal_task.success(s[:4], s[4:6])) for s in batch["s_next"]])

        for _ in range(hcfg.epochs):
            for _ in range(hcfg.episodes_per_epoch):
                _goal_episode(env, low_policy, high, goal_task, hcfg, rng, False, buffer)
            for _ in range(hcfg.grad_steps_per_epoch):
                if sac_update(high, buffer, hcfg.batch_size, reward, rng) is None:
                    break
    eval_rng = np.random.default_rng([hcfg.seed, 9])
    wins = sum(_goal_episode(env, low_policy, high, goal_task, hcfg, eval_rng, True, None)
               for _ in range(hcfg.eval_episodes))
    return wins / hcfg.eval_episodes if hcfg.eval_episodes else 0.0


def skill_policy(agent: SacAgent):
    """Frozen deterministic low-level policy for downstream control."""
    def act(obs, z, rng):
        return agent.act(obs, z, rng, deterministic=True)

    return act


# ---------------------------------------------------------------------------
# persistence


def _flatten(prefix: str, obj, out: dict):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}/{k}" if prefix else k, v, out)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}/{i}", v, out)
    else:
        out[prefix] = np.asarray(obj)


def save_snapshot(directory, cfg: RunConfig, snapshot: dict):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "config.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
    flat = {}
    _flatten("", snapshot, flat)
    np.savez(directory / "weights.npz", **flat)


def load_agent(directory) -> tuple[RunConfig, SacAgent]:
    directory = Path(directory)
    cfg = RunConfig.load(directory / "config.json")
    env = cfg.make_env()
    spec = cfg.skill_spec()
    agent = SacAgent(env.obs_dim, spec.vector_dim, env.action_dim, cfg.hidden, action_scale=env.max_action)
    with np.load(directory / "weights.npz") as w:
        state = {}
        for key in ("actor", "q1", "q2", "q1_target", "q2_target"):
            n = len(getattr(agent, key).parameters())
            state[key] = [w[f"agent/{key}/{i}"] for i in range(n)]
        state["log_alpha"] = w["agent/log_alpha"]
    agent.load_state_dict(state)
    return cfg, agent


def format_value(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_metrics_csv(path, rows: Sequence[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for row in rows:
            writer.writerow([format_value(row[c]) for c in METRIC_COLUMNS])


def write_run(out: Path, art: RunArtifacts, learner: Learner, env):
    from . import plotting

    cfg = learner.cfg
    with open(out / "config.json", "w") as fh:
        json.dump(art.config, fh, indent=2, sort_keys=True)
    write_metrics_csv(out / "metrics.csv", art.metrics)
    with open(out / "events.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "event", "wall_time"])
        for e in art.events:
            writer.writerow([e["epoch"], e["event"], repr(e["wall_time"])])
    spec = learner.spec
    if art.trajectories:
        write_trajectories_csv(out / "train_trajectories.csv", art.trajectories, env.obs_dim,
                               env.action_dim, spec.vector_dim)
    if art.eval_trajectories:
        write_trajectories_csv(out / "eval_trajectories.csv", art.eval_trajectories, env.obs_dim,
                               env.action_dim, spec.vector_dim)
    save_snapshot(out / "snapshot", cfg, art.snapshots.get("final", art.snapshots["initial"]))
    if art.metrics:
        plotting.plot_metrics(art.metrics, out / "metrics.png")
    if art.eval_trajectories and cfg.env == "point_push":
        plotting.plot_skill_trajectories(art.eval_trajectories, out / "skills.png")


def read_metrics_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [dict(r) for r in csv.DictReader(fh)]
