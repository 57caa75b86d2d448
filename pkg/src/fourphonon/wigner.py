"""Wigner function of a single-mode state on a square phase-space grid.

Coordinates are dimensionless, ``alpha = (x + i p) / sqrt(2)``, so the
vacuum is ``exp(-x^2 - p^2) / pi``. The Fock-basis kernel is evaluated with
normalized Laguerre functions

    f_n^k(u) = sqrt(n! / (n+k)!) u^{k/2} e^{-u/2} L_n^k(u),   u = 4 |alpha|^2,

which are bounded by 1 and obey the ordinary three-term recurrence in ``n``,
so nothing overflows for large ``u`` or ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, TruncationError
from .fock import DensityMatrix, Ket

#: population allowed in the top two Fock levels
TAIL_TOL = 1e-8
DEFAULT_POINTS = 161
#: equidensity levels used for the published contour style
CONTOUR_LEVELS = (0.25, 0.15, 0.05)


@dataclass(frozen=True)
class WignerGrid:
    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray
    cell_area: float

    def __post_init__(self):
        for name in ("xs", "ps", "values"):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.values.shape != (self.xs.size, self.ps.size):
            raise DimensionError(f"values shape {self.values.shape} does not match grid")
        for axis in (self.xs, self.ps):
            if axis.size > 1 and np.any(np.diff(axis) <= 0):
                raise DomainError("grid axes must be strictly increasing")

    def total(self) -> float:
        """Riemann sum of ``W``; close to 1 when the grid covers the state."""
        return float(self.values.sum() * self.cell_area)


def _density(rho) -> np.ndarray:
    if isinstance(rho, Ket):
        return rho.to_density().data
    if isinstance(rho, DensityMatrix):
        return rho.data
    arr = np.asarray(rho, dtype=np.complex128)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj())
    return arr


def _check_tail(mat):
    tail = float(mat.diagonal()[-2:].real.sum())
    if tail >= TAIL_TOL:
        raise TruncationError(f"top-two-level population {tail:.3e} >= {TAIL_TOL:.0e}; Wigner kernel unreliable")


def _wigner_values(mat: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``sum_{mn} rho_mn W_mn`` at the (broadcast) points ``x``, ``p``."""
    dim = mat.shape[0]
    alpha = (x + 1j * p) / math.sqrt(2.0)
    u = 4.0 * np.abs(alpha) ** 2
    phase = np.exp(-1j * np.angle(alpha))  # conj(alpha) / |alpha|
    log_u = np.log(np.where(u > 0, u, 1.0))
    total = np.zeros(u.shape)
    for k in range(dim):
        diag = np.diagonal(mat, -k)  # rho_{n+k, n}
        if not np.any(diag):
            continue
        # f_0^k = u^{k/2} e^{-u/2} / sqrt(k!)
        if k == 0:
            f_prev = np.exp(-u / 2.0)
        else:
            f_prev = np.where(u > 0, np.exp(0.5 * k * log_u - u / 2.0 - 0.5 * math.lgamma(k + 1)), 0.0)
        acc = diag[0] * f_prev
        if diag.size > 1:
            f_cur = f_prev * (1.0 + k - u) / math.sqrt(k + 1.0)
            acc = acc - diag[1] * f_cur
            sign = 1.0
            for n in range(1, diag.size - 1):
                f_next = ((2 * n + 1 + k - u) * f_cur - math.sqrt(n * (n + k)) * f_prev) / math.sqrt((n + 1) * (n + k + 1))
                f_prev, f_cur = f_cur, f_next
                if diag[n + 1] != 0:
                    acc = acc + sign * diag[n + 1] * f_cur
                sign = -sign
        if k == 0:
            total += acc.real
        else:
            # the (n, n+k) partner is the complex conjugate
            total += 2.0 * (acc * phase**k).real
    return total / math.pi


def wigner_point(rho, x: float, p: float) -> float:
    """``W(x, p)`` of a single-mode state."""
    mat = _density(rho)
    _check_tail(mat)
    return float(_wigner_values(mat, np.asarray(float(x)), np.asarray(float(p))))


def default_x_max(mean_number: float) -> float:
    """``ceil(3 sqrt(2 nbar + 1))``, the half-width of the default grid."""
    return float(math.ceil(3.0 * math.sqrt(2.0 * mean_number + 1.0)))


def wigner_grid(rho, x_max: float, n_points: int = DEFAULT_POINTS) -> WignerGrid:
    """Square grid ``xs == ps`` on ``[-x_max, x_max]`` with an odd number of points."""
    if int(n_points) != n_points or n_points < 3 or n_points % 2 == 0:
        raise DomainError(f"n_points must be an odd integer >= 3, got {n_points}")
    if not x_max > 0 or not math.isfinite(x_max):
        raise DomainError(f"x_max must be positive and finite, got {x_max}")
    mat = _density(rho)
    _check_tail(mat)
    axis = np.linspace(-x_max, x_max, int(n_points))
    # the origin must be exactly 0 for the rotation to map the lattice onto itself
    axis[int(n_points) // 2] = 0.0
    axis = 0.5 * (axis - axis[::-1])
    xg, pg = np.meshgrid(axis, axis, indexing="ij")
    values = _wigner_values(mat, xg, pg)
    step = axis[1] - axis[0]
    return WignerGrid(axis, axis.copy(), values, float(step * step))


def negativity(w: WignerGrid) -> dict:
    """``min_value`` and ``negative_volume = sum max(-W, 0) dA``."""
    return {
        "min_value": float(w.values.min()),
        "negative_volume": float(np.clip(-w.values, 0.0, None).sum() * w.cell_area),
    }


def _check_square(w: WignerGrid):
    if w.xs.shape != w.ps.shape or not np.array_equal(w.xs, w.ps) or not np.array_equal(w.xs, -w.xs[::-1]):
        raise DomainError("fourfold_defect needs a square grid symmetric about the origin")


def fourfold_defect(w: WignerGrid) -> float:
    """``max |W(x, p) - W(-p, x)|`` over the grid (exact lattice rotation)."""
    _check_square(w)
    rotated = w.values[::-1, :].T  # rotated[i, j] = W(-p_j, x_i)
    return float(np.max(np.abs(w.values - rotated)))


def twofold_defect(w: WignerGrid) -> float:
    """``max |W(x, p) - W(-x, -p)|``."""
    _check_square(w)
    return float(np.max(np.abs(w.values - w.values[::-1, ::-1])))
