"""Induced pseudometric of an arbitrary non-negative distance on a finite set.

Given d >= 0 on n states (asymmetric, non-zero diagonal allowed), the induced
pseudometric is the shortest-path closure of the symmetrized cost
min(d(x, y), d(y, x)), with zero on the diagonal. The checks below verify on
concrete instances that it is a pseudometric, that it lower-bounds d, and
that ``||phi(x) - phi(y)|| <= d`` for all pairs holds exactly when the same
bound holds with the induced pseudometric.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ndmath import ContractError

MAX_STATES = 64


@dataclass(frozen=True)
class FiniteDistance:
    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ContractError(f"distance matrix must be square, got shape {d.shape}")
        if d.shape[0] > MAX_STATES:
            raise ContractError(f"at most {MAX_STATES} states are supported")
        if np.any(np.isnan(d)) or np.any(d < 0):
            raise ContractError("distance entries must be non-negative")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @classmethod
    def from_json(cls, payload: dict | str) -> FiniteDistance:
        if isinstance(payload, str):
            payload = json.loads(payload)
        fd = cls(np.asarray(payload["d"], dtype=np.float64))
        if "n" in payload and int(payload["n"]) != fd.n:
            raise ContractError(f"n={payload['n']} does not match a {fd.n}x{fd.n} matrix")
        return fd


@dataclass(frozen=True)
class InducedMetric:
    dtilde: np.ndarray

    @property
    def n(self) -> int:
        return self.dtilde.shape[0]


@dataclass(frozen=True)
class Report:
    ok: bool
    check: str
    violation: tuple | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return f"{self.check}: pass"
        return f"{self.check}: FAIL at {self.violation} ({self.detail})"


def symmetrize(fd: FiniteDistance) -> np.ndarray:
    return np.minimum(fd.d, fd.d.T)


def path_cost(fd: FiniteDistance, path: Sequence[int]) -> float:
    """Sum of symmetrized edge costs along ``path``; a single state costs 0."""
    if len(path) < 1:
        raise ContractError("a path needs at least one state")
    for i in path:
        if not 0 <= i < fd.n:
            raise ContractError(f"state index {i} out of range for n={fd.n}")
    ds = symmetrize(fd)
    return float(sum(ds[a, b] for a, b in zip(path[:-1], path[1:])))


def floyd_warshall(w: np.ndarray) -> np.ndarray:
    dist = np.array(w, dtype=np.float64, copy=True)
    for k in range(dist.shape[0]):
        np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :], out=dist)
    return dist


def induce(fd: FiniteDistance) -> InducedMetric:
    ds = symmetrize(fd)
    np.fill_diagonal(ds, 0.0)
    return InducedMetric(floyd_warshall(ds))


def check_axioms(im: InducedMetric, tol: float = 0.0) -> Report:
    """Zero diagonal, symmetry and all n^3 triangle inequalities; reports the first failure."""
    dt = im.dtilde
    diag = np.flatnonzero(np.abs(np.diag(dt)) > tol)
    if diag.size:
        i = int(diag[0])
        return Report(False, "zero_diagonal", (i,), f"dtilde[{i}][{i}] = {dt[i, i]}")
    asym = np.argwhere(np.abs(dt - dt.T) > tol)
    if asym.size:
        i, j = map(int, asym[0])
        return Report(False, "symmetry", (i, j), f"{dt[i, j]} != {dt[j, i]}")
    # dt[x, y] <= dt[x, z] + dt[z, y] for all (x, z, y)
    slack = dt[:, :, None] + dt[None, :, :] - dt[:, None, :]
    bad = np.argwhere(slack < -tol)
    if bad.size:
        x, z, y = map(int, bad[0])
        return Report(False, "triangle", (x, z, y),
                      f"d({x},{y})={dt[x, y]} > d({x},{z})+d({z},{y})={dt[x, z] + dt[z, y]}")
    return Report(True, "axioms")


def check_lower_bound(fd: FiniteDistance, im: InducedMetric, tol: float = 0.0) -> Report:
    dt = im.dtilde
    bad = np.argwhere((dt < -tol) | (dt > fd.d + tol))
    if bad.size:
        i, j = map(int, bad[0])
        return Report(False, "lower_bound", (i, j), f"dtilde={dt[i, j]} vs d={fd.d[i, j]}")
    return Report(True, "lower_bound")


def embedding_gaps(embeddings) -> np.ndarray:
    phi = np.asarray(embeddings, dtype=np.float64)
    if phi.ndim == 1:
        phi = phi[:, None]
    return np.linalg.norm(phi[:, None, :] - phi[None, :, :], axis=-1)


def check_constraint_equivalence(fd: FiniteDistance, im: InducedMetric, embeddings,
                                 tol: float = 0.0) -> Report:
    """Both constraint sets must agree: all gaps <= d  iff  all gaps <= dtilde."""
    gaps = embedding_gaps(embeddings)
    if gaps.shape[0] != fd.n:
        raise ContractError(f"need one embedding per state ({fd.n}), got {gaps.shape[0]}")
    under_d = bool(np.all(gaps <= fd.d + tol))
    under_dt = bool(np.all(gaps <= im.dtilde + tol))
    if under_d == under_dt:
        return Report(True, "equivalence", detail=f"both sides {'hold' if under_d else 'fail'}")
    failing = "dtilde" if under_d else "d"
    bad = np.argwhere(gaps > (im.dtilde if under_d else fd.d) + tol)
    return Report(False, "equivalence", tuple(map(int, bad[0])), f"only the {failing} side fails")


def max_feasible_scale(fd_or_matrix, embeddings) -> float:
    """Largest c with ||c phi(x) - c phi(y)|| <= m(x, y) for every pair."""
    m = fd_or_matrix.d if isinstance(fd_or_matrix, FiniteDistance) else np.asarray(fd_or_matrix)
    gaps = embedding_gaps(embeddings)
    mask = gaps > 0
    if not mask.any():
        return float("inf")
    return float(np.min(m[mask] / gaps[mask]))


def distance_matrix(distance_fn: Callable, states: np.ndarray) -> FiniteDistance:
    """Tabulate d(states[i], states[j]) for a vectorized ``distance_fn(s, s_next)``."""
    states = np.asarray(states, dtype=np.float64)
    n = states.shape[0]
    src = np.repeat(states, n, axis=0)
    dst = np.tile(states, (n, 1))
    return FiniteDistance(np.maximum(np.asarray(distance_fn(src, dst)).reshape(n, n), 0.0))


def report_json(fd: FiniteDistance, im: InducedMetric, tol: float = 1e-9) -> dict:
    return {
        "n": fd.n,
        "dtilde": im.dtilde.tolist(),
        "axioms": str(check_axioms(im, tol)),
        "lower_bound": str(check_lower_bound(fd, im, tol)),
    }
