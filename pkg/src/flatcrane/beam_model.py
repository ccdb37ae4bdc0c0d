"""Rigid-flexible model of a single mast stacker crane.

The mast is an Euler-Bernoulli beam clamped on the driving unit and
approximated by one Rayleigh-Ritz mode, ``w(z, t) = phi(z) * q2(t)``.
Generalized coordinates are

    q1  horizontal position of the driving unit [m]
    q2  modal (tip) deflection of the mast [m]
    q3  height of the lifting unit along the mast [m]

and the state is ``x = (q1, q2, q3, v1, v2, v3)`` with ``v = dq/dt``.
Inputs are the driving force ``F1`` and the hoisting force ``F2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .errors import DomainError, SingularityError

Variant = Literal["printed", "lagrange"]
VARIANTS = ("printed", "lagrange")

#: input matrix, rows (q1, q2, q3)
G = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])

MASS_COND_LIMIT = 1e12
_QUAD_RTOL = 1e-10


@dataclass(frozen=True)
class AnsatzShape:
    """Polynomial mode shape of the mast.

    ``coeffs`` are ascending-power coefficients in the height ``z`` [m].
    ``None`` selects the static tip-load cubic ``(3 L z^2 - z^3) / (2 L^3)``.
    """

    coeffs: tuple[float, ...] | None = None

    @property
    def is_default(self) -> bool:
        return self.coeffs is None

    def polynomial(self, L: float) -> Polynomial:
        if self.coeffs is None:
            return Polynomial([0.0, 0.0, 3.0 / (2.0 * L**2), -1.0 / (2.0 * L**3)])
        return Polynomial(np.asarray(self.coeffs, dtype=float))


@dataclass(frozen=True)
class PhysicalParams:
    m_w: float = 450.0
    m_h: float = 200.0
    rhoA: float = 15.0
    EI: float = 1.5e5
    L: float = 10.0
    g: float = 9.81
    T_s: float = 0.05
    ansatz: AnsatzShape = field(default_factory=AnsatzShape)

    def __post_init__(self):
        for name in ("m_w", "m_h", "rhoA", "EI", "L", "T_s"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be strictly positive, got {value}", field=name)
        if not (math.isfinite(self.g) and self.g >= 0):
            raise DomainError(f"g must be non-negative, got {self.g}", field="g")
        phi, dphi, _ = self._shape
        if abs(phi(0.0)) > 1e-12 or abs(dphi(0.0)) > 1e-12:
            raise DomainError("ansatz must satisfy phi(0) = phi'(0) = 0", field="ansatz")
        if abs(phi(self.L) - 1.0) > 1e-9:
            raise DomainError("ansatz must satisfy phi(L) = 1", field="ansatz")
        if self.k_el <= 0:
            raise DomainError("ansatz yields a non-positive beam stiffness", field="ansatz")

    def replace(self, **changes) -> "PhysicalParams":
        from dataclasses import replace

        return replace(self, **changes)

    @cached_property
    def _shape(self) -> tuple[Polynomial, Polynomial, Polynomial]:
        p = self.ansatz.polynomial(self.L)
        return p, p.deriv(1), p.deriv(2)

    @cached_property
    def _shape_coeffs(self) -> tuple[tuple[float, ...], ...]:
        # descending powers for Horner evaluation
        return tuple(tuple(float(c) for c in P.coef[::-1]) for P in self._shape)

    @cached_property
    def m11(self) -> float:
        return self.m_w + self.rhoA * self.L + self.m_h

    @cached_property
    def m12(self) -> float:
        if self.ansatz.is_default:
            return self.rhoA * 3.0 * self.L / 8.0
        return self.rhoA * _quad(self._shape[0], self.L)

    @cached_property
    def m22(self) -> float:
        if self.ansatz.is_default:
            return self.rhoA * 33.0 * self.L / 140.0
        return self.rhoA * _quad(self._shape[0] ** 2, self.L)

    @cached_property
    def k_el(self) -> float:
        """Modal stiffness ``EI * int_0^L phi''(z)^2 dz``."""
        if self.ansatz.is_default:
            return 3.0 * self.EI / self.L**3
        return self.EI * _quad(self._shape[2] ** 2, self.L)


def _quad(poly: Polynomial, L: float) -> float:
    value, _ = integrate.quad(poly, 0.0, L, epsrel=_QUAD_RTOL, epsabs=0.0)
    return float(value)


def eval_ansatz(params: PhysicalParams, z: float) -> tuple[float, float, float]:
    """Return ``(phi, phi', phi'')`` at height ``z``."""
    if not (0.0 <= z <= params.L):
        raise DomainError(f"height {z} outside [0, {params.L}]", value=float(z))
    return tuple(_horner(c, z) for c in params._shape_coeffs)


def _horner(coeffs: tuple[float, ...], z: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * z + c
    return acc


def mass_matrix(params: PhysicalParams, q: Sequence[float]) -> np.ndarray:
    _, q2, q3 = q
    phi, dphi, _ = eval_ansatz(params, q3)
    mh = params.m_h
    m13 = mh * q2 * dphi
    m23 = mh * q2 * phi * dphi
    m12 = params.m12 + mh * phi
    return np.array(
        [
            [params.m11, m12, m13],
            [m12, params.m22 + mh * phi**2, m23],
            [m13, m23, mh + mh * (q2 * dphi) ** 2],
        ]
    )


def mass_matrix_partials(params: PhysicalParams, q: Sequence[float]) -> np.ndarray:
    """Analytic ``dM/dq_i`` stacked along the first axis, shape (3, 3, 3)."""
    _, q2, q3 = q
    phi, dphi, ddphi = eval_ansatz(params, q3)
    mh = params.m_h
    dM = np.zeros((3, 3, 3))
    # q1 is cyclic
    d2 = dM[1]
    d2[0, 2] = d2[2, 0] = mh * dphi
    d2[1, 2] = d2[2, 1] = mh * phi * dphi
    d2[2, 2] = 2.0 * mh * q2 * dphi**2
    d3 = dM[2]
    d3[0, 1] = d3[1, 0] = mh * dphi
    d3[0, 2] = d3[2, 0] = mh * q2 * ddphi
    d3[1, 1] = 2.0 * mh * phi * dphi
    d3[1, 2] = d3[2, 1] = mh * q2 * (dphi**2 + phi * ddphi)
    d3[2, 2] = 2.0 * mh * q2**2 * dphi * ddphi
    return dM


def is_positive_definite(M: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    return True


def potential_energy(params: PhysicalParams, q: Sequence[float]) -> float:
    return 0.5 * params.k_el * q[1] ** 2 + params.m_h * params.g * q[2]


def potential_gradient(params: PhysicalParams, q: Sequence[float]) -> np.ndarray:
    return np.array([0.0, params.k_el * q[1], params.m_h * params.g])


def kinetic_energy(params: PhysicalParams, q: Sequence[float], v: Sequence[float]) -> float:
    v = np.asarray(v, dtype=float)
    return 0.5 * float(v @ mass_matrix(params, q) @ v)


def total_energy(params: PhysicalParams, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    return kinetic_energy(params, x[:3], x[3:]) + potential_energy(params, x[:3])


def _c1_printed(params, q, v) -> float:
    _, q2, q3 = q
    _, dphi, ddphi = eval_ansatz(params, q3)
    mh = params.m_h
    # second term reproduced literally, q2 where a velocity v2 would be expected
    return mh * v[2] ** 2 * q2 * ddphi + 2.0 * mh * v[2] * q2 * dphi


def coriolis_printed(params: PhysicalParams, q: Sequence[float], v: Sequence[float]) -> np.ndarray:
    """Coriolis, elastic and gravity terms exactly as tabulated with the model."""
    _, q2, q3 = q
    phi, dphi, _ = eval_ansatz(params, q3)
    c1 = _c1_printed(params, q, v)
    return np.array(
        [
            c1,
            q2 * params.k_el + phi * c1,
            c1 * q2 * dphi + params.m_h * params.g,
        ]
    )


def coriolis_lagrange(params: PhysicalParams, q: Sequence[float], v: Sequence[float]) -> np.ndarray:
    """``Mdot v - 1/2 d/dq (v^T M v) + dV/dq`` from the mass matrix partials."""
    v = np.asarray(v, dtype=float)
    dM = mass_matrix_partials(params, q)
    Mdot = dM[1] * v[1] + dM[2] * v[2]  # dM/dq1 = 0
    quad = np.array([0.0, v @ dM[1] @ v, v @ dM[2] @ v])
    return Mdot @ v - 0.5 * quad + potential_gradient(params, q)


def christoffel_matrix(params: PhysicalParams, q: Sequence[float], v: Sequence[float]) -> np.ndarray:
    """Matrix ``C(q, v)`` with ``C v`` equal to the velocity-dependent terms.

    Built from Christoffel symbols of the first kind, so ``Mdot - 2 C`` is
    skew-symmetric.
    """
    v = np.asarray(v, dtype=float)
    dM = mass_matrix_partials(params, q)
    # gamma[i, j, k] = 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i)
    dMk = np.moveaxis(dM, 0, 2)
    gamma = 0.5 * (dMk + np.transpose(dMk, (0, 2, 1)) - np.moveaxis(dMk, 2, 0))
    return gamma @ v


def coriolis(params: PhysicalParams, q, v, variant: Variant = "lagrange") -> np.ndarray:
    if variant == "lagrange":
        return coriolis_lagrange(params, q, v)
    if variant == "printed":
        return coriolis_printed(params, q, v)
    raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")


def coriolis_discrepancy(params: PhysicalParams, q, v) -> dict:
    """Compare the tabulated Coriolis vector with the Lagrange one.

    Both share the structure ``(C1, k q2 + phi C1, q2 phi' C1 + m_h g)``.
    ``structural_residual`` is what remains after substituting the
    Lagrange ``C1`` into the tabulated structure; it vanishes when the
    only disagreement is the ``C1`` entry.
    """
    _, q2, q3 = q
    phi, dphi, _ = eval_ansatz(params, q3)
    printed = coriolis_printed(params, q, v)
    lagrange = coriolis_lagrange(params, q, v)
    c1_lag = lagrange[0]
    rebuilt = np.array(
        [c1_lag, q2 * params.k_el + phi * c1_lag, c1_lag * q2 * dphi + params.m_h * params.g]
    )
    return {
        "printed": printed,
        "lagrange": lagrange,
        "difference": printed - lagrange,
        "c1_difference": float(printed[0] - lagrange[0]),
        "structural_residual": rebuilt - lagrange,
    }


def _check_height(params: PhysicalParams, q3: float) -> None:
    if not (0.0 <= q3 <= params.L):
        raise DomainError(f"lifting-unit height {q3} outside [0, {params.L}]", value=float(q3))


def _solve_mass(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvalsh(M)
    cond = ev[-1] / ev[0] if ev[0] > 0 else np.inf
    if not cond < MASS_COND_LIMIT:
        raise SingularityError(f"mass matrix numerically singular (cond {cond:.3g})", cond=float(cond))
    return np.linalg.solve(M, rhs)


def accelerations(params: PhysicalParams, x, u, variant: Variant = "lagrange") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    q, v = x[:3], x[3:]
    _check_height(params, q[2])
    M = mass_matrix(params, q)
    return _solve_mass(M, G @ np.asarray(u, dtype=float) - coriolis(params, q, v, variant))


def dynamics_rhs(params: PhysicalParams, x, u, variant: Variant = "lagrange") -> np.ndarray:
    """Continuous-time vector field ``f(x, u) = (v, M^-1 (G u - C))``."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([x[3:], accelerations(params, x, u, variant)])


def configuration_flat_output(params: PhysicalParams, x) -> np.ndarray:
    """Evaluate ``(x1 + phi(x3) x2, x1 (m22 - m12 phi(x3)))``."""
    phi, _, _ = eval_ansatz(params, x[2])
    return np.array([x[0] + phi * x[1], x[0] * (params.m22 - params.m12 * phi)])


def rest_state(q1: float, q3: float) -> np.ndarray:
    return np.array([q1, 0.0, q3, 0.0, 0.0, 0.0])


def hold_input(params: PhysicalParams) -> np.ndarray:
    """Force pair that keeps any rest state at rest."""
    return np.array([0.0, params.m_h * params.g])
