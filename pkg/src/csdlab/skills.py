"""Skill latents: prior sampling, encodings and prior log-densities."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ndmath import ContractError

SKILL_RANGE = 1.5  # high-level controllers clamp continuous skills to [-1.5, 1.5]^D


@dataclass(frozen=True)
class SkillSpec:
    kind: str = "continuous"  # "continuous" | "discrete"
    dim: int = 2
    discrete_count: int = 4
    encoding: str = "zero_centered_one_hot"  # or "one_hot"

    def __post_init__(self):
        if self.kind not in ("continuous", "discrete"):
            raise ValueError(f"unknown skill kind {self.kind!r}")
        if self.encoding not in ("one_hot", "zero_centered_one_hot"):
            raise ValueError(f"unknown skill encoding {self.encoding!r}")
        if self.kind == "continuous" and self.dim < 1:
            raise ValueError("continuous skills need dim >= 1")
        if self.kind == "discrete" and self.discrete_count < 2:
            raise ValueError("discrete skills need discrete_count >= 2")

    @property
    def vector_dim(self) -> int:
        return self.dim if self.kind == "continuous" else self.discrete_count

    @property
    def discrete(self) -> bool:
        return self.kind == "discrete"


def encode(spec: SkillSpec, category: int) -> np.ndarray:
    if not spec.discrete:
        raise ContractError("encode() is only defined for discrete skills")
    if not 0 <= category < spec.discrete_count:
        raise ContractError(f"category {category} out of range")
    z = np.zeros(spec.discrete_count)
    z[category] = 1.0
    if spec.encoding == "zero_centered_one_hot":
        z -= 1.0 / spec.discrete_count
    return z


def decode(spec: SkillSpec, z) -> int:
    return int(np.argmax(np.asarray(z)))


def sample_skill(spec: SkillSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.discrete:
        return encode(spec, int(rng.integers(spec.discrete_count)))
    return rng.standard_normal(spec.dim)


def sample_skills(spec: SkillSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 0:
        return np.zeros((0, spec.vector_dim))
    return np.stack([sample_skill(spec, rng) for _ in range(n)])


def enumerate_skills(spec: SkillSpec) -> np.ndarray:
    return np.stack([encode(spec, k) for k in range(spec.discrete_count)])


def _check(spec: SkillSpec, z: np.ndarray):
    if z.shape[-1] != spec.vector_dim:
        raise ContractError(f"skill has length {z.shape[-1]}, expected {spec.vector_dim}")
    if spec.discrete:
        base = 0.0 if spec.encoding == "one_hot" else -1.0 / spec.discrete_count
        offsets = z - base
        ok = np.isclose(offsets, 0.0) | np.isclose(offsets, 1.0)
        if not ok.all() or not np.allclose(offsets.sum(axis=-1), 1.0):
            raise ContractError("malformed discrete skill vector")


def log_prior(spec: SkillSpec, z) -> float | np.ndarray:
    """log p(z); accepts a single skill or a batch along the first axis."""
    z = np.asarray(z, dtype=np.float64)
    _check(spec, z)
    if spec.discrete:
        value = -math.log(spec.discrete_count)
        return value if z.ndim == 1 else np.full(z.shape[0], value)
    return -0.5 * spec.dim * math.log(2 * math.pi) - 0.5 * np.sum(z * z, axis=-1)


def clamp_skill(z, bound: float = SKILL_RANGE) -> np.ndarray:
    return np.clip(np.asarray(z, dtype=np.float64), -bound, bound)
