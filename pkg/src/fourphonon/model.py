"""The quadratic optomechanical model driven by a squeezed reservoir.

Two levels of description are built here:

* the full cavity + mechanics generator in the interaction picture, all rates
  in units of the cavity decay rate ``kappa``;
* the effective mechanics-only generator after eliminating the cavity, in
  the scaled time ``tau = gamma t``:
  ``C2 D[J] + (n_th+1) D[b] + n_th D[b^dag]`` with ``C2 = 4 g2^2 / (kappa gamma)``.

Phase convention everywhere: ``mu = cosh r``, ``nu = exp(i theta) sinh r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import oracle
from .errors import DimensionError, DomainError
from .fock import Operator, annihilation, creation, identity, kron
from .liouvillian import Superoperator, add, dissipator, hamiltonian_term

MAX_FULL_DIM = 4096
MIN_FULL_DIMS = (8, 12)
MIN_EFFECTIVE_DIM = 12
#: default mechanical cutoff: oracle probability on the top family member
MECH_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class SqueezeCoeffs:
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise DomainError(f"squeeze strength must be >= 0, got {self.r}")

    @property
    def mu(self) -> float:
        return math.cosh(self.r)

    @property
    def nu(self) -> complex:
        return complex(np.exp(1j * self.theta) * math.sinh(self.r))


def squeeze_coeffs(r: float, theta: float = 0.0) -> SqueezeCoeffs:
    return SqueezeCoeffs(float(r), float(theta))


@dataclass(frozen=True)
class LinearizedParams:
    g2: float
    omega_m_prime: float
    delta_c: float


def linearize(g0_quadratic: float, n_c: float, omega_m: float) -> LinearizedParams:
    """Strong-drive linearization: ``g2 = g0 sqrt(n_c)``, ``w_m' = w_m + 2 g0 n_c``, ``Delta_c = -2 w_m'``."""
    if n_c < 1:
        raise DomainError(f"linearization needs n_c >= 1 (and really n_c >> 1), got {n_c}")
    omega_prime = omega_m + 2.0 * g0_quadratic * n_c
    return LinearizedParams(g0_quadratic * math.sqrt(n_c), omega_prime, -2.0 * omega_prime)


def default_dim_cavity(r: float) -> int:
    """``4 + ceil(8 sinh^2 r)``, bumped to the next odd number.

    With an odd cutoff the top level is even, and the truncated
    ``mu a - nu a^dag`` still annihilates the truncated squeezed vacuum.
    """
    dim = 4 + math.ceil(8.0 * math.sinh(r) ** 2)
    return dim if dim % 2 else dim + 1


def default_dim_mech(r: float, tail_tol: float = MECH_TAIL_TOL) -> int:
    """Mechanical cutoff ``4M + 1``, so the top level ``|4M>`` is a family member.

    ``4M`` is at least ``32 + ceil(12 nbar)`` rounded up to a multiple of 4,
    and grows until the oracle probability on ``|4M>`` is below ``tail_tol``.
    With this cutoff the truncated ``J`` keeps an exact dark state (the
    truncated closed-form ket); other cutoffs break it at the edge.
    """
    base = 32 + math.ceil(12.0 * oracle.mean_phonon(r))
    top = math.ceil(base / 4)
    z = oracle.squeeze_ratio(r)
    if z > 0.0:
        norm2 = oracle.normalization_sq(r)
        m, t = 0, 1.0
        while t / norm2 >= tail_tol:
            t *= (0.5 + m) * (0.25 + m) / ((0.75 + m) * (m + 1)) * z
            m += 1
        top = max(top, m)
    return 4 * top + 1


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters plus truncation.

    ``g2``, ``kappa``, ``gamma`` share one unit (the full model sets
    ``kappa = 1``); ``n_th`` is dimensionless.
    """

    squeeze: SqueezeCoeffs
    g2: float = 0.05
    kappa: float = 1.0
    gamma: float = 0.0
    n_th: float = 0.0
    dim_cavity: int = 0
    dim_mech: int = 0
    include_mech_bath: bool = False

    def __post_init__(self):
        for name in ("g2", "gamma", "n_th"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if self.kappa <= 0:
            raise DomainError("kappa must be > 0")
        if self.dim_cavity == 0:
            object.__setattr__(self, "dim_cavity", default_dim_cavity(self.squeeze.r))
        if self.dim_mech == 0:
            object.__setattr__(self, "dim_mech", default_dim_mech(self.squeeze.r))

    @classmethod
    def build(cls, r: float, theta: float = 0.0, **kwargs) -> "ModelParams":
        return cls(squeeze_coeffs(r, theta), **kwargs)

    @property
    def cooperativity(self) -> float:
        """``C2 = 4 g2^2 / (kappa gamma)``; infinite when ``gamma = 0``."""
        if self.gamma == 0:
            return math.inf
        return 4.0 * self.g2**2 / (self.kappa * self.gamma)

    @property
    def effective_rate(self) -> float:
        """Rate of the ``D[J]`` channel in unscaled time, ``4 g2^2 / kappa``."""
        return 4.0 * self.g2**2 / self.kappa


def jump_operator(dim: int, sq: SqueezeCoeffs) -> Operator:
    """``J = mu b^2 + nu b^dag^2``."""
    if dim < 5:
        raise DimensionError(f"jump operator needs dim >= 5, got {dim}")
    b = annihilation(dim).data
    bd = creation(dim).data
    return Operator(sq.mu * (b @ b) + sq.nu * (bd @ bd))


def bogoliubov_operator(dim: int, sq: SqueezeCoeffs) -> Operator:
    """``beta = mu b + nu b^dag``; its vacuum is the ordinary squeezed vacuum."""
    if dim < 3:
        raise DimensionError(f"Bogoliubov operator needs dim >= 3, got {dim}")
    return Operator(sq.mu * annihilation(dim).data + sq.nu * creation(dim).data)


@dataclass(frozen=True)
class RegimeReport:
    ratios: dict = field(default_factory=dict)
    satisfied: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.satisfied.values())

    def warnings(self) -> list[str]:
        return [f"{k} = {self.ratios[k]:.4g} below threshold" for k, v in self.satisfied.items() if not v]

    def to_dict(self) -> dict:
        return {
            "ratios": {k: ("inf" if math.isinf(v) else v) for k, v in self.ratios.items()},
            "satisfied": dict(self.satisfied),
        }


def regime_check(p: ModelParams) -> RegimeReport:
    """Advisory check of the elimination hierarchy; nothing is enforced."""
    nu2 = abs(p.squeeze.nu) ** 2
    if p.n_th == 0:
        reservoir = math.inf
    else:
        reservoir = p.cooperativity * nu2 / p.n_th if p.gamma > 0 else math.inf
    weak = p.kappa / p.g2 if p.g2 > 0 else math.inf
    damping = p.kappa / p.gamma if p.gamma > 0 else math.inf
    ratios = {
        "C2_nu2_over_nth": reservoir,
        "kappa_over_g2": weak,
        "kappa_over_gamma": damping,
    }
    satisfied = {
        "C2_nu2_over_nth": reservoir >= 10,
        "kappa_over_g2": weak >= 10,
        "kappa_over_gamma": damping >= 100,
    }
    return RegimeReport(ratios, satisfied)


def _with_info(s: Superoperator, **info) -> Superoperator:
    return replace(s, info={**s.info, **info})


def full_generator(p: ModelParams) -> Superoperator:
    """Cavity + mechanics generator on ``H_cavity (x) H_mech`` (time unit ``1/kappa`` when ``kappa = 1``).

    Terms: ``-i g2 [a^dag b^2 + b^dag^2 a, .]``, ``kappa D[i mu a - i nu a^dag]``
    and, with the mechanical bath, ``gamma (n_th+1) D[b] + gamma n_th D[b^dag]``.
    """
    da, db = p.dim_cavity, p.dim_mech
    if da < MIN_FULL_DIMS[0] or db < MIN_FULL_DIMS[1]:
        raise DimensionError(f"full model needs dims >= {MIN_FULL_DIMS}, got ({da}, {db})")
    if da * db > MAX_FULL_DIM:
        raise DimensionError(f"dim_cavity * dim_mech = {da * db} exceeds {MAX_FULL_DIM}")
    sq = p.squeeze
    a = kron(annihilation(da), identity(db))
    ad = a.dag()
    b = kron(identity(da), annihilation(db))
    bd = b.dag()
    h = p.g2 * (ad @ b @ b + bd @ bd @ a)
    gen = hamiltonian_term(h)
    gen = add(gen, dissipator(1j * sq.mu * a - 1j * sq.nu * ad, p.kappa))
    if p.include_mech_bath:
        gen = add(gen, dissipator(b, p.gamma * (p.n_th + 1)))
        gen = add(gen, dissipator(bd, p.gamma * p.n_th))
    report = regime_check(p)
    return _with_info(gen, model="full", time_unit="1/kappa", regime=report.to_dict(), warnings=report.warnings())


def effective_generator(p: ModelParams, override_rate: float | None = None) -> Superoperator:
    """Mechanics-only generator in scaled time ``tau = gamma t``.

    With ``gamma = 0`` the cooperativity is undefined: pass ``override_rate``
    (typically ``4 g2^2 / kappa``, making the time unit that of ``kappa``) and
    leave the bath off.
    """
    d = p.dim_mech
    if d < MIN_EFFECTIVE_DIM:
        raise DimensionError(f"effective model needs dim_mech >= {MIN_EFFECTIVE_DIM}, got {d}")
    if p.gamma == 0:
        if override_rate is None:
            raise DomainError("gamma = 0: C2 undefined, pass override_rate for the D[J] term")
        if p.include_mech_bath:
            raise DomainError("gamma = 0 is incompatible with the mechanical bath terms")
    rate = override_rate if override_rate is not None else p.cooperativity
    gen = dissipator(jump_operator(d, p.squeeze), rate)
    if p.include_mech_bath:
        b = annihilation(d)
        gen = add(gen, dissipator(b, p.n_th + 1))
        gen = add(gen, dissipator(b.dag(), p.n_th))
    time_unit = "1/gamma (tau = gamma t)" if override_rate is None else "set by override_rate (1/kappa for 4 g2^2/kappa)"
    report = regime_check(p)
    return _with_info(gen, model="effective", time_unit=time_unit, jump_rate=rate,
                      regime=report.to_dict(), warnings=report.warnings())


def default_t_cap(p: ModelParams, which: str) -> float:
    """``50 /`` the slowest relaxation rate of the chosen model."""
    if which == "effective":
        rates = [p.cooperativity if p.gamma > 0 else p.effective_rate]
        if p.include_mech_bath:
            rates.append(1.0)
    else:
        rates = [p.kappa]
        if p.g2 > 0:
            rates.append(p.effective_rate)
        if p.include_mech_bath and p.gamma > 0:
            rates.append(p.gamma)
    rates = [r for r in rates if r > 0 and math.isfinite(r)]
    return 50.0 / min(rates)
