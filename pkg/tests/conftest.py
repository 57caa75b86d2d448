"""Independent test oracles and the acceptance report hook.

Nothing here imports the numerical kernels under test: the oracles are
written from the defining formulas with different algorithms (dense
matrix exponential, arbitrary-precision series, direct quadrature).
"""
from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import eval_hermite

ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


# ---------------------------------------------------------------- expm oracle

def expm_oracle(a: np.ndarray) -> np.ndarray:
    """Scaling and squaring with a 30-term Taylor series."""
    a = np.asarray(a, dtype=np.complex128)
    norm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    scaled = a / 2**s
    out = np.eye(a.shape[0], dtype=np.complex128)
    term = np.eye(a.shape[0], dtype=np.complex128)
    for k in range(1, 31):
        term = term @ scaled / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def dense_lindblad(h, jumps, rates):
    """Column-stacked generator from the textbook formula, built entrywise via basis matrices."""
    d = h.shape[0]
    cols = []
    for j in range(d):
        for i in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = 1.0
            out = -1j * (h @ e - e @ h)
            for l, g in zip(jumps, rates):
                ldl = l.conj().T @ l
                out = out + g * (l @ e @ l.conj().T - 0.5 * ldl @ e - 0.5 * e @ ldl)
            cols.append(out.reshape(-1, order="F"))
    return np.array(cols).T


# ---------------------------------------------------------------- series oracle

def hyp2f1_mp(a, b, c, z, dps=40):
    """Gauss series summed in 40-digit arithmetic (no mpmath.hyp2f1 shortcuts)."""
    return float(_hyp2f1_series(a, b, c, z, dps))


def _hyp2f1_series(a, b, c, z, dps):
    with mpmath.workdps(dps):
        a, b, c, z = (mpmath.mpf(v) for v in (a, b, c, z))
        total = term = mpmath.mpf(1)
        m = 0
        while True:
            term *= (a + m) * (b + m) / ((c + m) * (m + 1)) * z
            total += term
            m += 1
            if abs(term) < mpmath.mpf(10) ** (-dps + 2) * abs(total):
                return +total


def family_probs_mp(r, n_members, dps=40):
    """``P_{4m}`` from Pochhammer products in high precision."""
    with mpmath.workdps(dps):
        z = mpmath.tanh(r) ** 2
        norm = _hyp2f1_series(0.5, 0.25, 0.75, z, dps)
        out = []
        for m in range(n_members):
            w = mpmath.rf(0.5, m) * mpmath.rf(0.25, m) / (mpmath.rf(0.75, m) * mpmath.factorial(m))
            out.append(float(w * z**m / norm))
        return np.array(out)


# ---------------------------------------------------------------- Wigner oracle

def ho_wavefunction(n: int, x: float) -> float:
    """Harmonic-oscillator eigenfunction with ``x = (b + b^dag) / sqrt(2)``."""
    return math.pi**-0.25 / math.sqrt(2.0**n * math.factorial(n)) * eval_hermite(n, x) * math.exp(-x * x / 2)


def ho_wavefunctions(dim: int, x: np.ndarray) -> np.ndarray:
    """``phi_n(x)`` for ``n < dim`` by the normalized Hermite recurrence (stable for large n)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((dim,) + x.shape)
    out[0] = math.pi**-0.25 * np.exp(-x * x / 2)
    if dim > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, dim - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def wigner_integral(rho: np.ndarray, x: float, p: float) -> float:
    """``(1/pi) int dy <x+y|rho|x-y> exp(-2ipy)`` by adaptive quadrature."""
    d = rho.shape[0]

    def integrand(y, part):
        left = np.array([ho_wavefunction(n, x + y) for n in range(d)])
        right = np.array([ho_wavefunction(n, x - y) for n in range(d)])
        value = left @ rho @ right * np.exp(-2j * p * y)
        return value.real if part == 0 else value.imag

    re = quad(integrand, -14, 14, args=(0,), limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    return re / math.pi


# ---------------------------------------------------------------- helpers

def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = rank or dim
    a = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str):
        ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))
        print(f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")
