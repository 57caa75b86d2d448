"""Closed-form steady state of the four-phonon dark-state problem.

The dark state of ``J = mu b^2 + nu b^dag^2`` reached from the ground state
lives on levels ``4m`` only::

    c_{4m} = sqrt((1/2)_m (1/4)_m / ((3/4)_m m!)) (-nu/mu)^m / N,
    N^2    = 2F1(1/2, 1/4; 3/4; |nu|^2/mu^2),

and everything here (phonon statistics, mean phonon number, g2(0), Klyshko
ratios, amplitude-squared variances) follows from it. The hypergeometric
series is summed directly; its argument ``tanh(r)^2`` stays below 1 and r is
capped at 3.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, DomainError, TruncationError, UndefinedError
from .fock import Ket

R_MAX = 3.0
R_SLOW = 2.0
#: largest |c|^2 allowed on the last retained family member of a ket
KET_TAIL_TOL = 1e-10
#: omitted probability allowed for a caller-supplied max_m
DIST_TAIL_TOL = 1e-10
#: omitted probability for the automatic max_m; tight enough that
#: first and second moments summed from the distribution stay accurate
DIST_AUTO_TOL = 1e-15


def pochhammer(a: float, m: int) -> float:
    """Rising factorial ``(a)_m = a (a+1) ... (a+m-1)``."""
    if m < 0 or int(m) != m:
        raise ValueError(f"m must be a nonnegative integer, got {m}")
    out = 1.0
    for k in range(int(m)):
        out *= a + k
    return out


def hyp2f1(a: float, b: float, c: float, z: float, rtol: float = 1e-16, max_terms: int = 10**6) -> float:
    """Gauss hypergeometric series for ``0 <= z < 1``."""
    if not 0.0 <= z < 1.0:
        raise DomainError(f"hyp2f1 series needs 0 <= z < 1, got {z}")
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"c must not be a nonpositive integer, got {c}")
    total, term = 1.0, 1.0
    for m in range(max_terms):
        term *= (a + m) * (b + m) / ((c + m) * (m + 1)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) <= rtol * abs(total):
            # stop only once terms are shrinking
            ratio = abs((a + m + 1) * (b + m + 1) / ((c + m + 1) * (m + 2)) * z)
            if ratio < 1.0:
                return total
    raise ConvergenceError(f"hyp2f1 did not converge in {max_terms} terms", partial=total)


def _check_r(r):
    if r < 0:
        raise DomainError(f"squeeze strength must be >= 0, got {r}")
    if r > R_MAX:
        raise DomainError(f"r = {r} exceeds the supported range r <= {R_MAX}")
    if r > R_SLOW:
        warnings.warn(f"r = {r} > {R_SLOW}: hypergeometric series converges slowly", RuntimeWarning, stacklevel=3)


def squeeze_ratio(r: float) -> float:
    """``|nu|^2 / mu^2 = tanh(r)^2``, the hypergeometric argument."""
    return math.tanh(r) ** 2


def normalization_sq(r: float) -> float:
    """``N^2 = 2F1(1/2, 1/4; 3/4; tanh^2 r)``."""
    _check_r(r)
    return hyp2f1(0.5, 0.25, 0.75, squeeze_ratio(r))


def family_weight(m: int) -> float:
    """``(1/2)_m (1/4)_m / ((3/4)_m m!)``."""
    return pochhammer(0.5, m) * pochhammer(0.25, m) / (pochhammer(0.75, m) * math.factorial(m))


def _family_weights(n_members, z):
    """Unnormalized ``P_{4m}`` for ``m < n_members`` by the term ratio (avoids overflow in m!)."""
    w = np.empty(n_members)
    t = 1.0
    for m in range(n_members):
        w[m] = t
        t *= (0.5 + m) * (0.25 + m) / ((0.75 + m) * (m + 1)) * z
    return w


def _ket_tail_check(amps, dim):
    last = 4 * ((dim - 1) // 4)
    tail = abs(amps[last]) ** 2
    if tail >= KET_TAIL_TOL:
        raise TruncationError(
            f"steady ket: |c_{last}|^2 = {tail:.3e} >= {KET_TAIL_TOL:.0e}; increase dim (currently {dim})"
        )


def steady_ket(dim: int, r: float, theta: float = 0.0, check_tail: bool = True) -> Ket:
    """Dark state of ``J`` grown from the ground state, from the closed form.

    Use ``dim = 4M + 1`` (see :func:`default_ket_dim`) for a ket that the
    truncated ``J`` annihilates exactly.

    Amplitudes are divided by ``N``; the recursion route in
    :func:`steady_ket_recursion` must agree to 1e-12 and is checked here.
    """
    if dim < 1:
        raise DimensionError(f"dim must be >= 1, got {dim}")
    _check_r(r)
    ratio = -np.exp(1j * theta) * math.tanh(r)
    norm = math.sqrt(normalization_sq(r))
    amps = np.zeros(dim, dtype=np.complex128)
    n_members = (dim - 1) // 4 + 1
    weights = _family_weights(n_members, 1.0)
    for m in range(n_members):
        amps[4 * m] = math.sqrt(weights[m]) * ratio**m / norm
    if check_tail:
        _ket_tail_check(amps, dim)
    other = steady_ket_recursion(dim, r, theta)
    gap = np.max(np.abs(amps - other.amplitudes))
    if gap > 1e-12:
        raise AssertionError(f"closed form and recursion disagree by {gap:.3e}")
    return Ket(amps)


def steady_ket_recursion(dim: int, r: float, theta: float = 0.0) -> Ket:
    """Same state from ``c_n = -sqrt((n-2)(n-3)/(n(n-1))) (nu/mu) c_{n-4}`` with ``c_0 = 1/N``."""
    _check_r(r)
    ratio = np.exp(1j * theta) * math.tanh(r)
    amps = np.zeros(dim, dtype=np.complex128)
    amps[0] = 1.0 / math.sqrt(normalization_sq(r))
    for n in range(4, dim, 4):
        amps[n] = -math.sqrt((n - 2) * (n - 3) / (n * (n - 1))) * ratio * amps[n - 4]
    return Ket(amps)


def default_ket_dim(r: float) -> int:
    """``4M + 1``, where ``|4M>`` is the first family member with ``|c|^2 < KET_TAIL_TOL``.

    Ending on a family member keeps ``J`` annihilating the truncated ket
    exactly; a cutoff just above ``4M`` would leave ``J`` acting on ``c_{4M}``.
    """
    _check_r(r)
    z = squeeze_ratio(r)
    norm2 = normalization_sq(r)
    m, t = 0, 1.0
    while t / norm2 >= KET_TAIL_TOL:
        t *= (0.5 + m) * (0.25 + m) / ((0.75 + m) * (m + 1)) * z
        m += 1
    return 4 * m + 1


@dataclass(frozen=True)
class PhononDistribution:
    """Probabilities indexed by phonon number ``n``."""

    probabilities: np.ndarray
    r: float | None = None
    theta: float | None = None

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float, copy=True)
        if p.ndim != 1:
            raise DimensionError("probabilities must be one-dimensional")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def __len__(self):
        return len(self.probabilities)

    def __getitem__(self, n):
        return self.probabilities[n]

    def mean(self) -> float:
        n = np.arange(len(self.probabilities))
        return float(np.dot(n, self.probabilities))

    def factorial_moment2(self) -> float:
        n = np.arange(len(self.probabilities))
        return float(np.dot(n * (n - 1), self.probabilities))


def _auto_members(z, tol):
    """Number of family members so the omitted tail is below ``tol``.

    Successive term ratios increase towards ``z``, so the tail after term
    ``t`` is at most ``t * z / (1 - z)`` relative to the unnormalized sum.
    """
    if z == 0.0:
        return 1
    m, t = 0, 1.0
    while True:
        t_next = t * (0.5 + m) * (0.25 + m) / ((0.75 + m) * (m + 1)) * z
        if t_next / (1.0 - z) < tol:
            return m + 1
        t = t_next
        m += 1


def phonon_distribution(r: float, theta: float = 0.0, max_m: int | None = None) -> PhononDistribution:
    """``P_{4m}`` of the steady state for ``m = 0..max_m``; all other levels exactly 0."""
    _check_r(r)
    z = squeeze_ratio(r)
    norm2 = normalization_sq(r)
    if max_m is None:
        max_m = _auto_members(z, DIST_AUTO_TOL * norm2) - 1
    else:
        needed = _auto_members(z, DIST_TAIL_TOL * norm2) - 1
        if max_m < needed:
            raise TruncationError(f"max_m = {max_m} leaves a tail above {DIST_TAIL_TOL:.0e}; need >= {needed}")
    # three trailing zeros keep K_n defined at the last family member
    probs = np.zeros(4 * max_m + 4)
    probs[::4] = _family_weights(max_m + 1, z) / norm2
    return PhononDistribution(probs, r, theta)


def mean_phonon(r: float) -> float:
    """Closed-form steady-state mean phonon number."""
    _check_r(r)
    if r == 0:
        return 0.0
    z = squeeze_ratio(r)
    return 2.0 * z / 3.0 * hyp2f1(1.5, 1.25, 1.75, z) / hyp2f1(0.5, 0.25, 0.75, z)


def g2_zero(r: float) -> float:
    """``<b^dag^2 b^2> / <b^dag b>^2`` summed over the phonon distribution."""
    if r == 0:
        raise UndefinedError("g2(0) is undefined at r = 0 (no phonons)")
    dist = phonon_distribution(r)
    return dist.factorial_moment2() / dist.mean() ** 2


def klyshko(dist, n: int) -> float:
    """``K_n = (n+1) P_{n-1} P_{n+1} / (n P_n^2)``; raises when ``P_n = 0``."""
    p = dist.probabilities if isinstance(dist, PhononDistribution) else np.asarray(dist, dtype=float)
    if n < 1:
        raise DomainError(f"Klyshko index must be >= 1, got {n}")
    if n + 1 >= len(p):
        raise DomainError(f"distribution has {len(p)} entries; K_{n} needs P_{n + 1}")
    if p[n] == 0.0:
        raise UndefinedError(f"K_{n} undefined: P_{n} = 0")
    return (n + 1) * p[n - 1] * p[n + 1] / (n * p[n] ** 2)


def y_variances(r: float) -> tuple[float, float, float]:
    """``(dY1, dY2, nbar + 1/2)`` with ``dY1 = e^-r sqrt(nbar+1/2)``, ``dY2 = e^r sqrt(nbar+1/2)``."""
    bound = mean_phonon(r) + 0.5
    root = math.sqrt(bound)
    return math.exp(-r) * root, math.exp(r) * root, bound
