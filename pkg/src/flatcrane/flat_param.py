"""Flat output and parameterizing map of the Euler-discretized crane.

The first flat-output component is the lifting-unit height, the second is
the canonical-form output of the horizontal subsystem once the height
trajectory is fixed. Samples are stored in the forward-only convention:
the map at step ``k`` reads ``y1[k .. k+9]`` and ``y2[k .. k+4]``, and the
height there is ``x3_k = y1[k+4]``. Read backwards, ``y1_k`` is the height
four steps earlier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .beam_model import PhysicalParams, Variant, dynamics_rhs, rest_state
from .decoupling import X1_IDX, discretize_ltv, extract_ltv, invert_input_transform
from .errors import DomainError, FlatCraneError, WindowError
from .ltv_canonical import (
    RANK_RTOL,
    CanonicalData,
    LtvProvider,
    _rank_info,
    canonical_covector,
    canonical_sequence,
    canonical_transform,
    reachability_matrix,
)

N_X1 = 4
#: backward shift between the stored y1 samples and the height
SHIFT = N_X1
Y1_WINDOW = 2 * N_X1 + 2  # 10
Y2_WINDOW = N_X1 + 1  # 5


@dataclass(frozen=True)
class FlatReference:
    """Flat-output samples ``y1[0 .. N+9]`` and ``y2[0 .. N+4]``."""

    y1: np.ndarray
    y2: np.ndarray
    T_s: float

    def __post_init__(self):
        y1 = np.asarray(self.y1, dtype=float)
        y2 = np.asarray(self.y2, dtype=float)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y2", y2)
        if y1.ndim != 1 or y2.ndim != 1 or len(y1) - len(y2) != Y1_WINDOW - Y2_WINDOW:
            raise ValueError(f"expected len(y1) = len(y2) + 5, got {len(y1)} and {len(y2)}")
        if len(y2) < Y2_WINDOW:
            raise ValueError("reference too short for a single step")
        if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y2))):
            raise ValueError("reference samples must be finite")

    @property
    def N(self) -> int:
        return len(self.y2) - Y2_WINDOW

    def heights(self) -> np.ndarray:
        """Lifting-unit heights ``x3_0 .. x3_N`` induced by ``y1``."""
        return self.y1[SHIFT : SHIFT + self.N + 1]

    @classmethod
    def constant(cls, y1: float, y2: float, N: int, T_s: float) -> "FlatReference":
        return cls(np.full(N + Y1_WINDOW, float(y1)), np.full(N + Y2_WINDOW, float(y2)), T_s)


@dataclass(frozen=True)
class ZetaHistory:
    """Past heights ``x3_{k-4} .. x3_{k-1}``.

    ``zeta2`` (past driving-unit positions) completes the invertible
    extension of the system map but does not enter the flat output.
    """

    zeta1: Sequence[float]
    zeta2: Sequence[float] | None = field(default=None)

    def __post_init__(self):
        if len(self.zeta1) != N_X1:
            raise ValueError(f"need {N_X1} past heights, got {len(self.zeta1)}")


class CranePoint(NamedTuple):
    x: np.ndarray
    u: np.ndarray
    ubar: np.ndarray
    sv_ratio: float
    sv_min: float


def param_vertical(y0: float, y1: float, y2: float, T_s: float) -> tuple[float, float, float]:
    """Height, hoist velocity and hoist acceleration from three height samples."""
    if not T_s > 0:
        raise ValueError(f"T_s must be positive, got {T_s}")
    return y0, (y1 - y0) / T_s, (y2 - 2.0 * y1 + y0) / T_s**2


def crane_ltv_provider(params: PhysicalParams, y1: Sequence[float], variant: Variant = "lagrange",
                       k_min: int = 0) -> LtvProvider:
    """Euler-discrete horizontal subsystem along the height samples ``y1``.

    Provider index ``k_min + i`` is built from ``y1[i .. i+2]`` read as
    ``(x3, x3 shifted once, x3 shifted twice)``.
    """
    y1 = np.asarray(y1, dtype=float)
    K = len(y1) - 2
    if K < 1:
        raise WindowError("need at least three height samples")
    A = np.empty((K, N_X1, N_X1))
    b = np.empty((K, N_X1))
    for i in range(K):
        x3, x6, ubar2 = param_vertical(y1[i], y1[i + 1], y1[i + 2], params.T_s)
        try:
            d = discretize_ltv(extract_ltv(params, x3, x6, ubar2, variant), params.T_s)
        except FlatCraneError as exc:
            exc.step = k_min + i
            raise
        A[i], b[i] = d.A1, d.b1
    return LtvProvider(A, b, k_min)


def _parameterize_at(params: PhysicalParams, p: LtvProvider, y1: np.ndarray, y2: np.ndarray,
                     k: int, offset: int, variant: Variant, data: CanonicalData | None = None) -> CranePoint:
    """Map at step ``k``; ``y1[k - offset]`` is the first stored sample used."""
    i = k - offset
    x3, x6, ubar2 = param_vertical(y1[i + SHIFT], y1[i + SHIFT + 1], y1[i + SHIFT + 2], params.T_s)
    if data is None:
        data = canonical_transform(p, k)
    w = y2[i : i + Y2_WINDOW]
    # Rigid translation x_1 = s e_1 is an input-free trajectory with flat
    # output s * c_{k+j}[0]. Splitting it off keeps the large y2 samples
    # away from the companion coefficients.
    g = data.covectors[:, 0]
    s = w[0] / g[0] if g[0] != 0.0 else 0.0
    r = w - s * g
    x1 = data.T @ r[:N_X1]
    x1[0] += s
    ubar1 = float(r[N_X1] + data.a @ r[:N_X1])
    x = np.empty(6)
    x[list(X1_IDX)] = x1
    x[2], x[5] = x3, x6
    ubar = np.array([ubar1, ubar2])
    try:
        u = invert_input_transform(params, x, ubar, variant)
    except FlatCraneError as exc:
        exc.step = k
        raise
    _, s_min, ratio = _rank_info(reachability_matrix(p, k))
    return CranePoint(x, u, ubar, ratio, s_min)


def _check_window(ref: FlatReference, k: int) -> None:
    if not 0 <= k <= ref.N:
        raise WindowError(f"step {k} outside [0, {ref.N}]", step=k)


def parameterize_crane(params: PhysicalParams, ref: FlatReference, k: int,
                       variant: Variant = "lagrange") -> tuple[np.ndarray, np.ndarray]:
    """State and forces at step ``k`` from ``y1[k .. k+9]`` and ``y2[k .. k+4]``."""
    return parameterize_point(params, ref, k, variant)[:2]


def parameterize_point(params: PhysicalParams, ref: FlatReference, k: int,
                       variant: Variant = "lagrange") -> CranePoint:
    _check_window(ref, k)
    y1 = ref.y1[k : k + Y1_WINDOW]
    y2 = ref.y2[k : k + Y2_WINDOW]
    p = crane_ltv_provider(params, y1, variant, k_min=k - SHIFT)
    return _parameterize_at(params, p, y1, y2, k, k, variant)


def parameterize_all(params: PhysicalParams, ref: FlatReference,
                     variant: Variant = "lagrange") -> list[CranePoint]:
    """Map at every step ``0 .. N`` sharing one provider."""
    p = crane_ltv_provider(params, ref.y1, variant, k_min=-SHIFT)
    seq = canonical_sequence(p, 0, ref.N)
    return [_parameterize_at(params, p, ref.y1, ref.y2, k, 0, variant, seq[k]) for k in range(ref.N + 1)]


def flat_output_crane(params: PhysicalParams, zeta: ZetaHistory, x,
                      variant: Variant = "lagrange") -> tuple[float, float]:
    """Flat output at step ``k`` from past heights and the current state."""
    x = np.asarray(x, dtype=float)
    heights = [*map(float, zeta.zeta1), x[2], x[2] + params.T_s * x[5]]
    p = crane_ltv_provider(params, heights, variant, k_min=-SHIFT)
    c = canonical_covector(reachability_matrix(p, 0), step=0)
    return float(zeta.zeta1[0]), float(c @ x[list(X1_IDX)])


def rest_covector(params: PhysicalParams, height: float, variant: Variant = "lagrange") -> np.ndarray:
    """``c`` for a crane held at constant height."""
    p = crane_ltv_provider(params, [height] * (SHIFT + 2), variant, k_min=-SHIFT)
    return canonical_covector(reachability_matrix(p, 0), step=0)


@dataclass
class SubmersivityReport:
    rank: int
    singular_values: np.ndarray
    jacobian: np.ndarray

    @property
    def ok(self) -> bool:
        return self.rank == self.jacobian.shape[0]


def euler_map(params: PhysicalParams, x, u, variant: Variant = "lagrange") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x + params.T_s * dynamics_rhs(params, x, u, variant)


def check_submersivity(params: PhysicalParams, x, u, variant: Variant = "lagrange",
                       h: float = 1e-6) -> SubmersivityReport:
    """Rank of the Euler map's Jacobian in ``(x, u)`` by central differences."""
    z = np.concatenate([np.asarray(x, dtype=float), np.asarray(u, dtype=float)])
    if not 0.0 <= z[2] <= params.L:
        raise DomainError(f"lifting-unit height {z[2]} outside [0, {params.L}]")
    J = np.empty((6, 8))
    for j in range(8):
        step = h * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += step
        zm[j] -= step
        J[:, j] = (euler_map(params, zp[:6], zp[6:], variant) - euler_map(params, zm[:6], zm[6:], variant)) / (2 * step)
    s = np.linalg.svd(J, compute_uv=False)
    rank = int(np.sum(s > RANK_RTOL * s[0]))
    return SubmersivityReport(rank, s, J)


def rest_point(params: PhysicalParams, q1: float, q3: float) -> tuple[np.ndarray, np.ndarray]:
    from .beam_model import hold_input

    return rest_state(q1, q3), hold_input(params)
