"""Operators and states on truncated single- and two-mode Fock spaces.

Everything is dense ``complex128``. Arrays held by :class:`Operator`,
:class:`Ket` and :class:`DensityMatrix` are copied on construction and
marked read-only, so values can be shared freely between threads.

Truncation convention: levels ``0 .. dim-1`` are kept. The top level is
never trusted; factories that build physical states check the tail and
raise :class:`~fourphonon.errors.TruncationError` instead of silently
returning a clipped state.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from numbers import Number

import numpy as np

from .errors import DimensionError, TruncationError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
TAIL_AMPLITUDE_TOL = 1e-8


def _frozen(a, ndim):
    arr = np.array(a, dtype=np.complex128, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Operator:
    """Square matrix acting on a (possibly two-mode) truncated Fock space."""

    data: np.ndarray
    mode_dims: tuple[int, int] | None = None

    def __post_init__(self):
        arr = _frozen(self.data, 2)
        if arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"operator must be square, got {arr.shape}")
        if self.mode_dims is not None:
            da, db = self.mode_dims
            if da * db != arr.shape[0]:
                raise DimensionError(f"mode_dims {self.mode_dims} do not match size {arr.shape[0]}")
            object.__setattr__(self, "mode_dims", (int(da), int(db)))
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dag(self) -> "Operator":
        return dagger(self)

    def is_hermitian(self, tol=HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T), initial=0.0) <= tol)

    def __matmul__(self, other):
        if isinstance(other, Ket):
            return apply(self, other)
        if isinstance(other, Operator):
            return matmul(self, other)
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        _check_same(self, other)
        return Operator(self.data + other.data, self.mode_dims or other.mode_dims)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        _check_same(self, other)
        return Operator(self.data - other.data, self.mode_dims or other.mode_dims)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return Operator(scalar * self.data, self.mode_dims)

    __rmul__ = __mul__

    def __neg__(self):
        return Operator(-self.data, self.mode_dims)

    def __repr__(self):
        return f"Operator(dim={self.dim}, mode_dims={self.mode_dims})"


@dataclass(frozen=True, eq=False)
class Ket:
    """State vector. ``normalized`` is False for raw results of :func:`apply`."""

    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes, 1))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self):
        return f"Ket(dim={self.dim}, normalized={self.normalized})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    data: np.ndarray
    mode_dims: tuple[int, int] | None = None
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        arr = _frozen(self.data, 2)
        if arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"density matrix must be square, got {arr.shape}")
        if self.mode_dims is not None and self.mode_dims[0] * self.mode_dims[1] != arr.shape[0]:
            raise DimensionError(f"mode_dims {self.mode_dims} do not match size {arr.shape[0]}")
        object.__setattr__(self, "data", arr)
        if self.validate:
            check_density(arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, mode_dims={self.mode_dims})"


def check_density(rho, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL):
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace, with a nonnegative diagonal."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T), initial=0.0)
    if herm > herm_tol:
        raise ValueError(f"density matrix not Hermitian: max|rho - rho^dag| = {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr} differs from 1")
    if np.min(rho.diagonal().real, initial=0.0) < -herm_tol:
        raise ValueError("density matrix has negative diagonal entries")


def _check_dim(dim, minimum=2):
    if not isinstance(dim, (int, np.integer)) or dim < minimum:
        raise DimensionError(f"dimension must be an integer >= {minimum}, got {dim!r}")
    return int(dim)


def _check_same(a, b):
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def annihilation(dim: int) -> Operator:
    """Lowering operator: ``b|n> = sqrt(n)|n-1>`` for ``n < dim``."""
    dim = _check_dim(dim)
    return Operator(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1))


def creation(dim: int) -> Operator:
    return dagger(annihilation(dim))


def number_operator(dim: int) -> Operator:
    dim = _check_dim(dim)
    return Operator(np.diag(np.arange(dim, dtype=float)))


def identity(dim: int) -> Operator:
    dim = _check_dim(dim, minimum=1)
    return Operator(np.eye(dim))


def kron(a: Operator, b: Operator) -> Operator:
    """Tensor product; the result remembers ``mode_dims = (a.dim, b.dim)``."""
    return Operator(np.kron(a.data, b.data), (a.dim, b.dim))


def dagger(a: Operator) -> Operator:
    return Operator(a.data.conj().T, a.mode_dims)


def matmul(a: Operator, b: Operator) -> Operator:
    _check_same(a, b)
    return Operator(a.data @ b.data, a.mode_dims or b.mode_dims)


def commutator(a: Operator, b: Operator) -> Operator:
    """``AB - BA``.

    On a truncated space ``[b, b^dag]`` is the identity except for the last
    diagonal entry, which equals ``-(dim - 1)``.
    """
    _check_same(a, b)
    return Operator(a.data @ b.data - b.data @ a.data, a.mode_dims or b.mode_dims)


def apply(a: Operator, psi: Ket) -> Ket:
    if a.dim != psi.dim:
        raise DimensionError(f"operator dim {a.dim} does not match ket dim {psi.dim}")
    return Ket(a.data @ psi.amplitudes, normalized=False)


def basis_ket(dim: int, n: int) -> Ket:
    dim = _check_dim(dim, minimum=1)
    if not 0 <= n < dim:
        raise DimensionError(f"level {n} outside 0..{dim - 1}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[n] = 1.0
    return Ket(amps)


def fock_dm(dim: int, n: int) -> DensityMatrix:
    return basis_ket(dim, n).to_density()


def normalize(psi: Ket) -> Ket:
    nrm = psi.norm()
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return Ket(psi.amplitudes / nrm)


def _check_tail(amps, tol, what):
    tail = np.abs(amps[-2:]).max()
    if tail >= tol:
        raise TruncationError(
            f"{what}: top-level amplitude {tail:.3e} >= {tol:.1e}; increase the dimension"
        )


def squeezed_vacuum_ket(dim: int, r: float, theta: float = 0.0, check_tail: bool = True) -> Ket:
    """Vacuum of ``mu*b + nu*b^dag`` with ``mu = cosh r``, ``nu = exp(i theta) sinh r``.

    Built from the two-term recursion on even levels, then normalized.
    """
    dim = _check_dim(dim)
    if r < 0:
        raise ValueError(f"squeeze strength must be >= 0, got {r}")
    ratio = np.exp(1j * theta) * math.tanh(r)
    amps = np.zeros(dim, dtype=np.complex128)
    amps[0] = 1.0
    for n in range(0, dim - 2, 2):
        amps[n + 2] = -ratio * math.sqrt((n + 1) / (n + 2)) * amps[n]
    amps /= np.linalg.norm(amps)
    if check_tail:
        _check_tail(amps, TAIL_AMPLITUDE_TOL, "squeezed vacuum")
    return Ket(amps)


def coherent_ket(dim: int, alpha: complex, check_tail: bool = True) -> Ket:
    """Coherent state ``|alpha>``; amplitudes built in log space."""
    dim = _check_dim(dim)
    amps = np.zeros(dim, dtype=np.complex128)
    if alpha == 0:
        amps[0] = 1.0
    else:
        n = np.arange(dim)
        log_fact = np.array([math.lgamma(k + 1.0) for k in n])
        log_mag = n * math.log(abs(alpha)) - 0.5 * log_fact - abs(alpha) ** 2 / 2
        amps = np.exp(log_mag) * np.exp(1j * n * cmath.phase(alpha))
    if check_tail:
        _check_tail(amps, TAIL_AMPLITUDE_TOL, "coherent state")
    return Ket(amps / np.linalg.norm(amps))
