"""Independent brute-force oracles used to pin expected values.

Everything here is deliberately naive (loops over pairs and triples, a
primal transport program, direct index arithmetic) and shares no code with
the package paths it checks.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from qmetric import AlgebraShape, BiElement


def classical_axioms(d: np.ndarray, tol: float = 1e-12) -> dict:
    """Brute-force check of the five classical metric axioms on a matrix."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    nonneg = bool(np.all(d >= -tol))
    zero_diag = bool(np.all(np.abs(np.diag(d)) <= tol))
    nondeg = all(d[x, y] > tol for x in range(n) for y in range(n) if x != y)
    symmetric = bool(np.all(np.abs(d - d.T) <= tol))
    triangle = all(
        d[x, y] <= d[x, z] + d[z, y] + tol
        for x in range(n)
        for y in range(n)
        for z in range(n)
    )
    return {
        "i": nonneg,
        "ii": zero_diag,
        "iii": nondeg,
        "iv": symmetric,
        "v": triangle,
        "all": nonneg and zero_diag and nondeg and symmetric and triangle,
    }


def embed_distance_matrix(d: np.ndarray) -> BiElement:
    """Diagonal embedding of an arbitrary square matrix, without validation."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    data = np.zeros((n * n, n * n), dtype=complex)
    for x in range(n):
        for y in range(n):
            data[x * n + y, x * n + y] = d[x, y]
    return BiElement(AlgebraShape((1,) * n), data)


def lipschitz_constant(d: np.ndarray, values: np.ndarray) -> float:
    """Best Lipschitz constant of a function on a finite metric space."""
    n = d.shape[0]
    best = 0.0
    for x in range(n):
        for y in range(n):
            if x != y:
                best = max(best, abs(values[x] - values[y]) / d[x, y])
    return best


def transport_lp_primal(d: np.ndarray, p: np.ndarray, q: np.ndarray) -> float:
    """Primal Kantorovich program: cheapest coupling of p and q under cost d."""
    n = d.shape[0]
    cost = np.asarray(d, dtype=float).ravel()
    a_eq = []
    b_eq = []
    for x in range(n):
        row = np.zeros(n * n)
        row[x * n : (x + 1) * n] = 1.0
        a_eq.append(row)
        b_eq.append(p[x])
    for y in range(n):
        row = np.zeros(n * n)
        row[y::n] = 1.0
        a_eq.append(row)
        b_eq.append(q[y])
    res = linprog(
        cost,
        A_eq=np.asarray(a_eq),
        b_eq=np.asarray(b_eq),
        bounds=[(0, None)] * (n * n),
        method="highs",
    )
    assert res.success, res.message
    return float(res.fun)


def random_metric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """Random valid metric: shortest-path closure of random symmetric weights."""
    w = rng.uniform(0.2, 2.0, size=(n, n)) * scale
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    d = w.copy()
    for k in range(n):
        for i in range(n):
            for j in range(n):
                d[i, j] = min(d[i, j], d[i, k] + d[k, j])
    return d


def plant_triangle_violation(rng: np.random.Generator, d: np.ndarray) -> np.ndarray:
    """Stretch one distance well past a two-leg path, keeping symmetry."""
    n = d.shape[0]
    out = d.copy()
    x, y, z = rng.permutation(n)[:3]
    out[x, y] = out[y, x] = d[x, z] + d[z, y] + 0.5
    return out


def plant_negativity(rng: np.random.Generator, d: np.ndarray) -> np.ndarray:
    n = d.shape[0]
    out = d.copy()
    x, y = rng.permutation(n)[:2]
    out[x, y] = out[y, x] = -0.3
    return out
