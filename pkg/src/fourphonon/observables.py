"""Expectation values, variances, fidelities and reduced states."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, TruncationError, UndefinedError
from .fock import DensityMatrix, Ket, Operator, annihilation, creation, number_operator

#: population allowed in the top two Fock levels when computing variances
EDGE_POPULATION_TOL = 1e-8


@dataclass(frozen=True)
class YPair:
    """Real and imaginary parts of ``b^2``, rotated by ``theta / 2``."""

    y1: Operator
    y2: Operator
    theta: float


def y_pair(dim: int, theta: float = 0.0) -> YPair:
    if dim < 6:
        raise DimensionError(f"Y operators need dim >= 6, got {dim}")
    b = annihilation(dim).data
    bd = creation(dim).data
    lower = (b @ b) * cmath.exp(-0.5j * theta)
    upper = (bd @ bd) * cmath.exp(0.5j * theta)
    return YPair(Operator(0.5 * (lower + upper)), Operator((lower - upper) / 2j), theta)


def quadratures(dim: int, scale: float = 0.5) -> tuple[Operator, Operator]:
    """``x = scale (b + b^dag)``, ``p = -i scale (b - b^dag)``.

    ``scale = 1/2`` makes ``x^2 - p^2`` and ``xp + px`` equal the ``Y``
    operators; the Wigner coordinates use ``scale = 1/sqrt(2)``.
    """
    b = annihilation(dim).data
    bd = b.conj().T
    return Operator(scale * (b + bd)), Operator(-1j * scale * (b - bd))


def _matrix(state):
    if isinstance(state, Ket):
        return None, state.amplitudes
    if isinstance(state, DensityMatrix):
        return state.data, None
    arr = np.asarray(state)
    return (arr, None) if arr.ndim == 2 else (None, arr)


def _check(op, n):
    if op.dim != n:
        raise DimensionError(f"operator dim {op.dim} does not match state dim {n}")


def expect(op: Operator, state) -> complex:
    """``tr(A rho)``, or ``<psi|A|psi>`` for a ket."""
    rho, psi = _matrix(state)
    if psi is not None:
        return expect_ket(op, Ket(psi, normalized=False))
    _check(op, rho.shape[0])
    return complex(np.einsum("ij,ji->", op.data, rho))


def expect_ket(op: Operator, psi: Ket) -> complex:
    _check(op, psi.dim)
    return complex(np.vdot(psi.amplitudes, op.data @ psi.amplitudes))


def edge_population(state, levels: int = 2) -> float:
    rho, psi = _matrix(state)
    if psi is not None:
        return float(np.sum(np.abs(psi[-levels:]) ** 2))
    return float(np.sum(rho.diagonal()[-levels:].real))


def variance(op: Operator, state, edge_tol: float = EDGE_POPULATION_TOL) -> float:
    """``<A^2> - <A>^2`` for Hermitian ``A``.

    Refuses states with more than ``edge_tol`` population in the top two
    levels, where truncated ladder operators are wrong.
    """
    if not op.is_hermitian(1e-12):
        raise ValueError("variance needs a Hermitian operator")
    edge = edge_population(state)
    if edge > edge_tol:
        raise TruncationError(f"top-two-level population {edge:.3e} > {edge_tol:.0e}")
    mean = expect(op, state).real
    second = expect(op @ op, state).real
    return second - mean**2


def fidelity_ket(psi: Ket, rho) -> float:
    """``<psi|rho|psi>`` clipped to ``[0, 1]``."""
    mat, _ = _matrix(rho)
    if mat.shape[0] != psi.dim:
        raise DimensionError(f"ket dim {psi.dim} does not match state dim {mat.shape[0]}")
    value = np.vdot(psi.amplitudes, mat @ psi.amplitudes)
    if abs(value.imag) > 1e-10:
        raise ValueError(f"fidelity has imaginary part {value.imag:.3e}")
    return float(min(1.0, max(0.0, value.real)))


def partial_trace(rho: DensityMatrix, keep: int | str) -> DensityMatrix:
    """Reduced state of one mode. ``keep`` is 0/"a"/"cavity" or 1/"b"/"mech"."""
    if rho.mode_dims is None:
        raise DimensionError("partial_trace needs a state with mode_dims")
    which = {"a": 0, "cavity": 0, "b": 1, "mech": 1}.get(keep, keep)
    if which not in (0, 1):
        raise ValueError(f"keep must select mode 0 or 1, got {keep!r}")
    da, db = rho.mode_dims
    t = rho.data.reshape(da, db, da, db)
    out = np.einsum("ijkj->ik", t) if which == 0 else np.einsum("ijil->jl", t)
    return DensityMatrix(out, validate=False)


def populations(rho) -> np.ndarray:
    mat, psi = _matrix(rho)
    if psi is not None:
        return np.abs(psi) ** 2
    return mat.diagonal().real.copy()


def purity(rho) -> float:
    mat, psi = _matrix(rho)
    if psi is not None:
        return float(np.vdot(psi, psi).real ** 2)
    return float(np.einsum("ij,ji->", mat, mat).real)


def mean_number(rho) -> float:
    n = np.arange(populations(rho).shape[0])
    return float(np.dot(n, populations(rho)))


def g2_from_state(rho) -> float:
    """``<b^dag^2 b^2> / <b^dag b>^2`` from the diagonal."""
    pops = populations(rho)
    n = np.arange(pops.shape[0])
    mean = float(np.dot(n, pops))
    if mean <= 1e-12:
        raise UndefinedError(f"g2(0) undefined: <n> = {mean:.3e}")
    return float(np.dot(n * (n - 1), pops)) / mean**2


def y_variances_numeric(rho, theta: float = 0.0) -> tuple[float, float, float]:
    """``(dY1, dY2, <n> + 1/2)`` evaluated on a numerical state."""
    mat, psi = _matrix(rho)
    dim = (mat if mat is not None else psi).shape[0]
    pair = y_pair(dim, theta)
    d1 = math.sqrt(max(variance(pair.y1, rho), 0.0))
    d2 = math.sqrt(max(variance(pair.y2, rho), 0.0))
    nbar = expect(number_operator(dim), rho).real
    return d1, d2, nbar + 0.5
