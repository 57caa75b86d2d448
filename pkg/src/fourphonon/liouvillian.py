"""Lindblad generators as sparse superoperators, time evolution, steady states.

Vectorization is column stacking, ``vec(A X B) = (B^T kron A) vec(X)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DimensionError, IntegrationError
from .fock import DensityMatrix, Operator

#: RK4 step bound, ``dt * ||S|| <= STEP_FACTOR``.
STEP_FACTOR = 0.1
NULL_SPACE_MAX_DIM = 32


@dataclass(frozen=True, eq=False)
class Superoperator:
    hilbert_dim: int
    action: sp.csr_matrix
    term_log: tuple = ()
    mode_dims: tuple[int, int] | None = None
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = self.hilbert_dim ** 2
        if self.action.shape != (n, n):
            raise DimensionError(f"action shape {self.action.shape} != ({n}, {n})")
        object.__setattr__(self, "action", sp.csr_matrix(self.action, dtype=np.complex128))
        object.__setattr__(self, "term_log", tuple(self.term_log))

    def apply(self, rho) -> np.ndarray:
        """Return ``S(rho)`` as a dense ``D x D`` array."""
        out = self.action @ vectorize(rho)
        return out.reshape(self.hilbert_dim, self.hilbert_dim, order="F")

    def __add__(self, other):
        if not isinstance(other, Superoperator):
            return NotImplemented
        return add(self, other)

    def slowest_rate(self) -> float:
        rates = [rate for _, rate in self.term_log if rate > 0]
        if not rates:
            raise ValueError("generator has no positive rates in its term log")
        return min(rates)

    def __repr__(self):
        return f"Superoperator(hilbert_dim={self.hilbert_dim}, terms={list(self.term_log)})"


def vectorize(rho) -> np.ndarray:
    arr = rho.data if isinstance(rho, (DensityMatrix, Operator)) else np.asarray(rho)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return np.asarray(arr, dtype=np.complex128).reshape(-1, order="F")


def devectorize(v, dim: int, mode_dims=None, validate: bool = False) -> DensityMatrix:
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != dim * dim:
        raise DimensionError(f"vector of length {v.shape} cannot be reshaped to {dim}x{dim}")
    return DensityMatrix(v.reshape(dim, dim, order="F"), mode_dims, validate=validate)


def _sparse(op: Operator):
    return sp.csr_matrix(op.data)


def hamiltonian_term(h: Operator, tol: float = 1e-10) -> Superoperator:
    """Coherent part ``rho -> -i [H, rho]``.

    The logged rate is the spectral norm of ``H``.
    """
    if not h.is_hermitian(tol):
        raise ValueError("Hamiltonian is not Hermitian")
    d = h.dim
    eye = sp.identity(d, dtype=np.complex128, format="csr")
    hs = _sparse(h)
    action = -1j * (sp.kron(eye, hs) - sp.kron(hs.T, eye))
    scale = float(np.linalg.norm(h.data, 2)) if d else 0.0
    return Superoperator(d, action, (("hamiltonian", scale),), h.mode_dims)


def dissipator(jump: Operator, rate: float) -> Superoperator:
    """``rho -> rate * (L rho L^dag - {L^dag L, rho}/2)``."""
    if rate < 0:
        raise ValueError(f"dissipation rate must be >= 0, got {rate}")
    d = jump.dim
    eye = sp.identity(d, dtype=np.complex128, format="csr")
    ls = _sparse(jump)
    ldl = (ls.conj().T @ ls).tocsr()
    action = sp.kron(ls.conj(), ls) - 0.5 * sp.kron(eye, ldl) - 0.5 * sp.kron(ldl.T, eye)
    return Superoperator(d, rate * action, (("dissipator", float(rate)),), jump.mode_dims)


def add(s1: Superoperator, s2: Superoperator) -> Superoperator:
    if s1.hilbert_dim != s2.hilbert_dim:
        raise DimensionError(f"hilbert_dim mismatch: {s1.hilbert_dim} vs {s2.hilbert_dim}")
    return Superoperator(
        s1.hilbert_dim,
        s1.action + s2.action,
        s1.term_log + s2.term_log,
        s1.mode_dims or s2.mode_dims,
        {**s1.info, **s2.info},
    )


def zero(dim: int) -> Superoperator:
    return Superoperator(dim, sp.csr_matrix((dim * dim, dim * dim), dtype=np.complex128))


def spectral_norm_estimate(matrix, iterations: int = 30, seed: int = 0, safety: float = 1.1) -> float:
    """Power iteration on ``A^H A``; returns ``safety`` times the estimate of ``||A||_2``."""
    n = matrix.shape[0]
    if matrix.nnz == 0 if sp.issparse(matrix) else not np.any(matrix):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    adj = matrix.conj().T
    est = 0.0
    for _ in range(iterations):
        y = adj @ (matrix @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        est = math.sqrt(nrm)
        x = y / nrm
    return safety * est


def reachable_indices(action, v0) -> np.ndarray:
    """Indices of the smallest coordinate subspace that contains ``supp(v0)`` and is invariant under ``action``.

    The generator maps this subspace into itself, so evolving the restricted
    system is exact.
    """
    n = action.shape[0]
    sources = np.flatnonzero(v0)
    if sources.size == 0:
        return sources
    # edge j -> i whenever action[i, j] != 0, plus a virtual root feeding every source
    graph = sp.csr_matrix(action.T, copy=True)
    graph.data = np.ones_like(graph.data, dtype=np.int8)
    root = sp.csr_matrix(
        (np.ones(sources.size, dtype=np.int8), (np.zeros(sources.size, dtype=int), sources)), shape=(1, n)
    )
    graph = sp.bmat([[graph, None], [root, None]], format="csr")
    graph.resize(n + 1, n + 1)
    order = csgraph.breadth_first_order(graph, n, directed=True, return_predecessors=False)
    return np.sort(order[order != n])


def _restrict(s: Superoperator, v0):
    idx = reachable_indices(s.action, v0)
    sub = s.action[idx][:, idx].tocsr()
    return idx, sub


def _rk4_steps(a, v, dt, n_steps):
    half = 0.5 * dt
    for _ in range(n_steps):
        k1 = a @ v
        k2 = a @ (v + half * k1)
        k3 = a @ (v + half * k2)
        k4 = a @ (v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


def _as_density(rho0, dim):
    if isinstance(rho0, DensityMatrix):
        return rho0
    return DensityMatrix(np.asarray(rho0))


def _finish(full, s, rho0, tol, what):
    if not np.all(np.isfinite(full)):
        raise IntegrationError(f"{what}: non-finite values in the state")
    rho = full.reshape(s.hilbert_dim, s.hilbert_dim, order="F")
    drift = abs(np.trace(rho) - np.trace(rho0.data))
    if drift > tol:
        raise IntegrationError(f"{what}: trace drift {drift:.3e} exceeds {tol:.1e}", residual=drift)
    return DensityMatrix(rho, rho0.mode_dims or s.mode_dims, validate=False)


def rk4_step_size(a, t_final, dt_max=None):
    """Fixed step ``dt <= dt_max`` with ``dt * ||a|| <= STEP_FACTOR``; returns ``(dt, n_steps)``."""
    norm = spectral_norm_estimate(a)
    bound = STEP_FACTOR / norm if norm > 0 else math.inf
    dt = min(bound, dt_max if dt_max is not None else math.inf)
    if not math.isfinite(dt):
        dt = t_final
    n_steps = max(1, math.ceil(t_final / dt)) if t_final > 0 else 0
    return (t_final / n_steps if n_steps else 0.0), n_steps


def evolve(s: Superoperator, rho0, t_final: float, dt_max: float | None = None, tol: float = 1e-9) -> DensityMatrix:
    """Integrate ``drho/dt = S rho`` to ``t_final`` with fixed-step classic RK4.

    The step satisfies ``dt <= dt_max`` and ``dt * ||S||_2 <= 0.1``, with the
    norm estimated by power iteration on the part of the generator reachable
    from ``rho0``. Raises :class:`IntegrationError` if the trace drifts by more
    than ``tol`` or the state stops being finite.
    """
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    rho0 = _as_density(rho0, s.hilbert_dim)
    if rho0.dim != s.hilbert_dim:
        raise DimensionError(f"state dim {rho0.dim} != generator dim {s.hilbert_dim}")
    v0 = vectorize(rho0)
    idx, sub = _restrict(s, v0)
    dt, n_steps = rk4_step_size(sub, t_final, dt_max)
    v = _rk4_steps(sub, v0[idx], dt, n_steps)
    full = np.zeros_like(v0)
    full[idx] = v
    return _finish(full, s, rho0, tol, "evolve")


@dataclass
class SteadyStateResult:
    rho: DensityMatrix
    residual: float
    elapsed: float
    steps: int
    method: str


def steady_state(
    s: Superoperator,
    rho0,
    stop_tol: float = 1e-10,
    t_cap: float | None = None,
    method: str = "implicit",
    dt_max: float | None = None,
    implicit_steps: int = 200,
    tol: float = 1e-8,
    full_output: bool = False,
):
    """Evolve ``rho0`` until ``max|S rho| <= stop_tol``; the first such state is returned.

    ``method="implicit"`` (default) marches with backward Euler, a single
    sparse LU of ``1 - h S`` and ``h = t_cap / implicit_steps``. Every
    stationary state and every conserved quantity of ``S`` is a fixed point
    of that map, so the limit reached depends on ``rho0`` exactly as the true
    dynamics does, while stiff generators cost a handful of solves.
    ``method="rk4"`` uses the same fixed-step integrator as :func:`evolve`.

    Only the part of the generator reachable from ``rho0`` is assembled.
    ``t_cap`` defaults to ``50 / slowest rate`` from the term log.
    """
    rho0 = _as_density(rho0, s.hilbert_dim)
    if rho0.dim != s.hilbert_dim:
        raise DimensionError(f"state dim {rho0.dim} != generator dim {s.hilbert_dim}")
    if t_cap is None:
        t_cap = 50.0 / s.slowest_rate()
    v0 = vectorize(rho0)
    idx, sub = _restrict(s, v0)
    v = v0[idx].copy()

    def residual(vec):
        return float(np.max(np.abs(sub @ vec), initial=0.0))

    res = residual(v)
    elapsed, steps = 0.0, 0
    if res > stop_tol:
        if method == "implicit":
            h = t_cap / implicit_steps
            lu = spla.splu(sp.csc_matrix(sp.identity(len(idx), dtype=np.complex128, format="csc") - h * sub))
            while res > stop_tol and steps < implicit_steps:
                v = lu.solve(v)
                steps += 1
                elapsed += h
                if not np.all(np.isfinite(v)):
                    raise IntegrationError("steady_state: non-finite values in the state")
                res = residual(v)
        elif method == "rk4":
            n_chunks = 200
            chunk = t_cap / n_chunks
            dt, n_sub = rk4_step_size(sub, chunk, dt_max)
            while res > stop_tol and steps < n_chunks:
                v = _rk4_steps(sub, v, dt, n_sub)
                steps += 1
                elapsed += chunk
                if not np.all(np.isfinite(v)):
                    raise IntegrationError("steady_state: non-finite values in the state")
                res = residual(v)
        else:
            raise ValueError(f"unknown method {method!r}")
    if res > stop_tol:
        raise ConvergenceError(
            f"steady_state: residual {res:.3e} > {stop_tol:.1e} at t_cap={t_cap:g}", residual=res
        )
    full = np.zeros_like(v0)
    full[idx] = v
    rho = _finish(full, s, rho0, tol, "steady_state")
    if full_output:
        return SteadyStateResult(rho, res, elapsed, steps, method)
    return rho


def null_space_steady_state(s: Superoperator) -> DensityMatrix:
    """Direct solve of ``S rho = 0`` with a trace row appended (test oracle, ``D <= 32``).

    Only meaningful when the stationary state is unique.
    """
    d = s.hilbert_dim
    if d > NULL_SPACE_MAX_DIM:
        raise DimensionError(f"null-space oracle limited to D <= {NULL_SPACE_MAX_DIM}, got {d}")
    a = s.action.toarray()
    trace_row = np.eye(d).reshape(-1, order="F")[None, :]
    lhs = np.vstack([a, trace_row])
    rhs = np.zeros(d * d + 1, dtype=np.complex128)
    rhs[-1] = 1.0
    v, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return devectorize(v, d, s.mode_dims)
