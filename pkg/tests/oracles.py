"""Independent reference implementations shared by unit and acceptance tests.

Deliberately naive: plain Python loops, no numpy vectorization, so they
share no code paths with the library.
"""
import itertools

import numpy as np


def random_distance(rng, n, quarters=40):
    """n x n matrix of dyadic entries k/4 in [0, 10]; sums of these are exact in float64."""
    return rng.integers(0, quarters + 1, size=(n, n)) / 4.0


def sym(d):
    n = len(d)
    return [[min(d[i][j], d[j][i]) for j in range(n)] for i in range(n)]


def floyd_warshall_loops(d):
    n = len(d)
    w = sym(d)
    for i in range(n):
        w[i][i] = 0.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if w[i][k] + w[k][j] < w[i][j]:
                    w[i][j] = w[i][k] + w[k][j]
    return np.array(w)


def simple_path_closure(d):
    """Minimum symmetrized cost over every simple path, by brute-force enumeration."""
    n = len(d)
    w = sym(d)
    best = np.zeros((n, n))
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            others = [k for k in range(n) if k not in (x, y)]
            cost = w[x][y]
            for r in range(1, len(others) + 1):
                for mid in itertools.permutations(others, r):
                    path = (x, *mid, y)
                    total = 0.0
                    for a, b in zip(path, path[1:]):
                        total += w[a][b]
                    cost = min(cost, total)
            best[x, y] = cost
    return best


def variance_two_pass(values):
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)
