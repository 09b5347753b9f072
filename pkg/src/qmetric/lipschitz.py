"""Lipschitz seminorm and transport distance induced by a metric candidate.

The seminorm of a in A is the operator norm of (a (x) 1 - 1 (x) a) applied
to the pseudo-inverse of the candidate; on classical shapes this is the best
Lipschitz constant.  The induced distance between states is the supremum of
|phi(a) - psi(a)| over self-adjoint a in the unit seminorm ball.  On
all-ones shapes the supremum is computed exactly by linear programming; on
general shapes an iterative ascent produces a certified bracket instead of
a bare number, since the supremum may be unattained or infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .algebra import (
    AlgebraElement,
    AlgebraShape,
    BiElement,
    ShapeMismatchError,
    as_shape,
    hermitian_param_basis,
    op_norm,
    op_norm_array,
    support_mask,
)
from .axioms import (
    MetricCandidate,
    ToleranceConfig,
    check_diag_vanish,
    check_nondegenerate,
    check_positive,
)

STATE_TOL = 1e-9


class PreconditionError(ValueError):
    """The candidate does not satisfy the axioms this operation relies on."""


@dataclass(frozen=True)
class State:
    """A state on A: one PSD density per block, total trace one."""

    shape: AlgebraShape
    densities: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        shape = as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        if len(self.densities) != shape.num_blocks:
            raise ValueError(
                f"need {shape.num_blocks} block densities, got {len(self.densities)}"
            )
        dens = []
        total = 0.0
        for n, d in zip(shape.blocks, self.densities):
            arr = np.asarray(d, dtype=complex)
            if arr.shape != (n, n):
                raise ValueError(f"block density must be {n}x{n}, got {arr.shape}")
            if op_norm_array(arr - arr.conj().T) > STATE_TOL * max(1.0, op_norm_array(arr)):
                raise ValueError("block densities must be self-adjoint")
            if float(np.linalg.eigvalsh((arr + arr.conj().T) / 2.0)[0]) < -STATE_TOL:
                raise ValueError("block densities must be positive semidefinite")
            total += float(np.trace(arr).real)
            arr = arr.copy()
            arr.setflags(write=False)
            dens.append(arr)
        if abs(total - 1.0) > STATE_TOL:
            raise ValueError(f"total trace must be 1, got {total}")
        object.__setattr__(self, "densities", tuple(dens))

    @classmethod
    def classical(cls, weights) -> "State":
        """Probability vector as a state on the all-ones shape."""
        w = np.asarray(weights, dtype=float)
        shape = AlgebraShape((1,) * w.size)
        return cls(shape, tuple(np.array([[v]], dtype=complex) for v in w))

    def as_element(self) -> AlgebraElement:
        d = self.shape.dim
        out = np.zeros((d, d), dtype=complex)
        for (a, b), dens in zip(self.shape.block_ranges(), self.densities):
            out[a:b, a:b] = dens
        return AlgebraElement(self.shape, out)

    def pair(self, a: AlgebraElement) -> float:
        """The pairing phi(a) = sum_k tr(d_k a_k); real for self-adjoint a."""
        if a.shape != self.shape:
            raise ShapeMismatchError("state and element live over different shapes")
        return float(np.trace(self.as_element().data @ a.data).real)


@dataclass(frozen=True)
class PureState:
    """A vector state supported in a single block."""

    shape: AlgebraShape
    block: int
    vector: np.ndarray

    def __post_init__(self) -> None:
        shape = as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        if not 0 <= self.block < shape.num_blocks:
            raise ValueError(f"block index {self.block} out of range")
        v = np.asarray(self.vector, dtype=complex).ravel()
        n = shape.blocks[self.block]
        if v.size != n:
            raise ValueError(f"vector must have length {n}, got {v.size}")
        if abs(np.linalg.norm(v) - 1.0) > STATE_TOL:
            raise ValueError("pure-state vector must have unit norm")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    def embedded(self) -> np.ndarray:
        """The vector inside C^D, zero outside its block."""
        out = np.zeros(self.shape.dim, dtype=complex)
        a, b = self.shape.block_ranges()[self.block]
        out[a:b] = self.vector
        return out

    def to_state(self) -> State:
        dens = []
        for k, n in enumerate(self.shape.blocks):
            if k == self.block:
                dens.append(np.outer(self.vector, self.vector.conj()))
            else:
                dens.append(np.zeros((n, n), dtype=complex))
        return State(self.shape, tuple(dens))


def _rho_of(candidate) -> BiElement:
    if isinstance(candidate, MetricCandidate):
        return candidate.rho
    if isinstance(candidate, BiElement):
        return candidate
    raise TypeError("expected a MetricCandidate or BiElement")


def metric_pseudo_inverse(candidate, cfg: ToleranceConfig | None = None) -> BiElement:
    """Pseudo-inverse of the candidate: inverts it off the diagonal subspace.

    Requires positivity, diagonal vanishing, and nondegeneracy; with those
    the pseudo-inverse equals the inverse of the restriction off the
    diagonal, extended by zero.  Refuses degenerate candidates since the
    inverse would be ambiguous.
    """
    rho = _rho_of(candidate)
    cfg = cfg if cfg is not None else ToleranceConfig()
    scale = op_norm(rho) or 1.0
    failures = []
    if not check_positive(rho, cfg, scale).passed:
        failures.append("positivity")
    if not check_diag_vanish(rho, cfg, scale).passed:
        failures.append("diagonal vanishing")
    if not failures and not check_nondegenerate(rho, cfg, scale, prerequisites_ok=True).passed:
        failures.append("nondegeneracy")
    if failures:
        raise PreconditionError(
            "pseudo-inverse needs a candidate passing positivity, diagonal "
            f"vanishing, and nondegeneracy; failed: {', '.join(failures)}"
        )
    sym = (rho.data + rho.data.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    cutoff = cfg.resolved_floor(scale) / 2.0
    inv = np.where(vals > cutoff, 1.0 / np.where(vals > cutoff, vals, 1.0), 0.0)
    out = (vecs * inv) @ vecs.conj().T
    out[~support_mask(rho.shape.blocks, 2)] = 0.0
    return BiElement(rho.shape, out)


def _commutator_gap(a: AlgebraElement, rho: BiElement, pinv: BiElement) -> np.ndarray:
    d = rho.shape.dim
    eye = np.eye(d, dtype=complex)
    return (np.kron(a.data, eye) - np.kron(eye, a.data)) @ pinv.data


def lip_seminorm(a: AlgebraElement, candidate, pinv: BiElement | None = None) -> float:
    """Seminorm ||(a (x) 1 - 1 (x) a) rho^+||; zero exactly on multiples of 1."""
    rho = _rho_of(candidate)
    if a.shape != rho.shape:
        raise ShapeMismatchError("element and candidate live over different shapes")
    if pinv is None:
        pinv = metric_pseudo_inverse(candidate)
    return op_norm_array(_commutator_gap(a, rho, pinv))


def check_leibniz(
    a: AlgebraElement,
    b: AlgebraElement,
    candidate,
    tol: float = 1e-9,
) -> tuple[bool, float]:
    """Product rule estimate for commuting a, b.

    Returns (holds, slack) with slack = ||a|| lip(b) + lip(a) ||b|| - lip(ab),
    nonnegative up to the tolerance when ab = ba.  Non-commuting inputs are
    rejected: the estimate is only established for commuting pairs.
    """
    comm = op_norm(a @ b - b @ a)
    scale = max(1.0, op_norm(a) * op_norm(b))
    if comm > tol * scale:
        raise ValueError(f"inputs do not commute (commutator norm {comm:.3e})")
    pinv = metric_pseudo_inverse(candidate)
    lip_ab = lip_seminorm(a @ b, candidate, pinv)
    bound = op_norm(a) * lip_seminorm(b, candidate, pinv) + lip_seminorm(a, candidate, pinv) * op_norm(b)
    slack = bound - lip_ab
    return slack >= -tol * max(1.0, bound), slack


def pure_state_bound(v: PureState, w: PureState, candidate) -> float:
    """Upper bound ||rho (v (x) w)|| on the distance between cross-block vector states."""
    rho = _rho_of(candidate)
    if v.shape != rho.shape or w.shape != rho.shape:
        raise ShapeMismatchError("pure states and candidate live over different shapes")
    if v.block == w.block:
        raise ValueError("the bound needs pure states in two distinct blocks")
    vec = np.kron(v.embedded(), w.embedded())
    return float(np.linalg.norm(rho.data @ vec))


@dataclass(frozen=True)
class MKDistance:
    """Bracket result of a transport-distance computation."""

    lower: float
    upper: float
    converged: bool
    iterations: int
    unbounded: bool = False

    def to_dict(self) -> dict:
        return {
            "lower": None if math.isinf(self.lower) else float(self.lower),
            "upper": None if math.isinf(self.upper) else float(self.upper),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "unbounded": bool(self.unbounded),
        }


def _classical_weights(state: State) -> np.ndarray:
    return np.array([float(d[0, 0].real) for d in state.densities])


def _mk_classical_lp(phi: State, psi: State, rho: BiElement) -> float:
    """Exact supremum on an all-ones shape via its linear program.

    Maximize sum (p - q) a subject to a(x) - a(y) <= d(x, y); the first
    coordinate is pinned to zero to remove the constant gauge direction.
    """
    n = rho.shape.dim
    dmat = np.array(
        [[float(rho.data[x * n + y, x * n + y].real) for y in range(n)] for x in range(n)]
    )
    p, q = _classical_weights(phi), _classical_weights(psi)
    rows, rhs = [], []
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            row = np.zeros(n)
            row[x], row[y] = 1.0, -1.0
            rows.append(row)
            rhs.append(dmat[x, y])
    bounds = [(0.0, 0.0)] + [(None, None)] * (n - 1)
    res = linprog(q - p, A_ub=np.asarray(rows), b_ub=np.asarray(rhs), bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"transport linear program failed: {res.message}")
    return float(-res.fun)


def _pure_decomposition(state: State, weight_tol: float = 1e-12):
    """Spectral decomposition into weighted block pure states."""
    parts = []
    for k, dens in enumerate(state.densities):
        sym = (dens + dens.conj().T) / 2.0
        vals, vecs = np.linalg.eigh(sym)
        for w, v in zip(vals, vecs.T):
            if w > weight_tol:
                parts.append((float(w), k, v / np.linalg.norm(v)))
    return parts


def _pair_bound(rho: BiElement, i: int, v: np.ndarray, j: int, w: np.ndarray) -> float:
    shape = rho.shape
    if i != j:
        return pure_state_bound(
            PureState(shape, i, v), PureState(shape, j, w), rho
        )
    if abs(np.vdot(v, w)) >= 1.0 - 1e-12:
        return 0.0
    # same block: route through another block, using the triangle property
    # of the transport distance
    best = math.inf
    for l, n in enumerate(shape.blocks):
        if l == i:
            continue
        for basis_idx in range(n):
            u = np.zeros(n, dtype=complex)
            u[basis_idx] = 1.0
            mid = PureState(shape, l, u)
            via = pure_state_bound(PureState(shape, i, v), mid, rho) + pure_state_bound(
                mid, PureState(shape, j, w), rho
            )
            best = min(best, via)
    return best


def _mk_upper_bound(phi: State, psi: State, rho: BiElement) -> float:
    total = 0.0
    for pw, i, v in _pure_decomposition(phi):
        for qw, j, w in _pure_decomposition(psi):
            b = _pair_bound(rho, i, v, j, w)
            if math.isinf(b):
                return math.inf
            total += pw * qw * b
    return total


def _mk_ascent(
    phi: State,
    psi: State,
    rho: BiElement,
    pinv: BiElement,
    max_iter: int,
    improve_tol: float,
    patience: int,
) -> tuple[float, bool, int, bool]:
    """Maximize phi(a) - psi(a) over the unit seminorm ball, from below."""
    shape = rho.shape
    d = shape.dim
    delta = phi.as_element().data - psi.as_element().data
    basis = hermitian_param_basis(shape, 1)
    # real matrix of the seminorm map on the hermitian parameter basis
    cols = []
    for h in basis:
        t = _commutator_gap(AlgebraElement(shape, h), rho, pinv)
        cols.append(np.concatenate([t.real.ravel(), t.imag.ravel()]))
    tmat = np.stack(cols, axis=1)
    _, s, vt = np.linalg.svd(tmat)
    null_tol = 1e-10 * max(1.0, s[0] if s.size else 0.0)
    null_vectors = vt[np.sum(s > null_tol):]
    for nv in null_vectors:
        k = np.einsum("a,aij->ij", nv, basis)
        if abs(np.vdot(delta, k).real) > 1e-10 * max(1.0, op_norm_array(delta)):
            return math.inf, True, 0, True

    eye = np.eye(d, dtype=complex)

    def functional(a: np.ndarray) -> float:
        return float(np.trace(delta @ a).real)

    def seminorm(a: np.ndarray) -> float:
        return op_norm_array((np.kron(a, eye) - np.kron(eye, a)) @ pinv.data)

    step = 1.0 / max(1.0, 2.0 * op_norm(pinv))
    a = np.zeros((d, d), dtype=complex)
    best = 0.0
    since_improve = 0
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        a = a + step * delta
        a = a - (np.trace(a) / d) * eye
        lip = seminorm(a)
        if lip > 1e-14:
            a = a / lip
        val = abs(functional(a))
        if val > best + improve_tol:
            best = val
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= patience:
                return best, True, iterations, False
    return best, False, iterations, False


def mk_distance(
    phi: State,
    psi: State,
    candidate,
    cfg: ToleranceConfig | None = None,
    method: str = "auto",
    max_iter: int = 500,
    improve_tol: float = 1e-8,
    patience: int = 50,
) -> MKDistance:
    """Transport distance bracket between two states.

    On all-ones shapes (method "auto" or "lp") the exact value is computed
    by linear programming and returned as a zero-width bracket.  Otherwise
    an iterative ascent supplies the lower end and a pure-state
    decomposition the upper end; a detected zero-seminorm direction that
    separates the states yields the unbounded marker, since the distance is
    only a semimetric.
    """
    rho = _rho_of(candidate)
    if phi.shape != rho.shape or psi.shape != rho.shape:
        raise ShapeMismatchError("states and candidate live over different shapes")
    if method not in ("auto", "lp", "ascent"):
        raise ValueError("method must be one of auto, lp, ascent")
    use_lp = rho.shape.is_classical and method in ("auto", "lp")
    if method == "lp" and not rho.shape.is_classical:
        raise ValueError("the exact path applies to all-ones shapes only")
    if use_lp:
        value = _mk_classical_lp(phi, psi, rho)
        return MKDistance(value, value, True, 0)
    pinv = metric_pseudo_inverse(candidate, cfg)
    lower, converged, iterations, unbounded = _mk_ascent(
        phi, psi, rho, pinv, max_iter, improve_tol, patience
    )
    if unbounded:
        return MKDistance(math.inf, math.inf, True, iterations, unbounded=True)
    upper = _mk_upper_bound(phi, psi, rho)
    return MKDistance(lower, upper, converged, iterations)
