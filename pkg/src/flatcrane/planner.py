"""Rest-to-rest planning, feedforward generation and open-loop rollout."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beam_model import PhysicalParams, Variant, dynamics_rhs, hold_input, rest_state
from .errors import FlatCraneError, HorizonError, DomainError
from .flat_param import (
    SHIFT,
    Y1_WINDOW,
    Y2_WINDOW,
    FlatReference,
    parameterize_all,
    rest_covector,
)


@dataclass(frozen=True)
class RestPosition:
    q1: float
    q3: float

    def state(self) -> np.ndarray:
        return rest_state(self.q1, self.q3)


@dataclass(frozen=True)
class PlanSpec:
    start: RestPosition
    goal: RestPosition
    N: int = 200
    head_len: int = 10
    tail_len: int = 10
    blend_degree: int = 9
    q3_min: float | None = None
    q3_max: float | None = None

    def __post_init__(self):
        if self.head_len < Y1_WINDOW or self.tail_len < Y1_WINDOW:
            raise HorizonError(f"head and tail need at least {Y1_WINDOW} samples")
        if self.N <= self.head_len + self.tail_len:
            raise HorizonError(f"N = {self.N} must exceed head_len + tail_len = {self.head_len + self.tail_len}")
        if self.blend_degree < 5 or self.blend_degree % 2 == 0:
            raise ValueError(f"blend_degree must be odd and >= 5, got {self.blend_degree}")


@dataclass
class FeedforwardResult:
    x_d: np.ndarray  # (N+1, 6)
    u_d: np.ndarray  # (N, 2)
    ubar_d: np.ndarray  # (N, 2)
    u_final: np.ndarray  # map value at N, the goal holding force
    ubar_final: np.ndarray
    sv_min: np.ndarray  # smallest singular value of M_k, k = 0..N
    sv_ratio: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def smoothstep(tau, degree: int = 9):
    """Odd-degree polynomial from 0 to 1 with ``(degree - 1) / 2`` flat derivatives at both ends."""
    if degree < 1 or degree % 2 == 0:
        raise ValueError(f"degree must be odd, got {degree}")
    d = (degree - 1) // 2
    tau = np.clip(np.asarray(tau, dtype=float), 0.0, 1.0)
    total = sum(math.comb(d + j, j) * (1.0 - tau) ** j for j in range(d + 1))
    return tau ** (d + 1) * total


def rest_flat_values(params: PhysicalParams, rest: RestPosition, variant: Variant = "lagrange") -> tuple[float, float]:
    """Flat-output values that hold the crane at ``rest``."""
    c = rest_covector(params, rest.q3, variant)
    return float(rest.q3), float(c[0] * rest.q1)


def _blend(start: float, goal: float, length: int, head: int, end: int, degree: int) -> np.ndarray:
    k = np.arange(length)
    tau = (k - head) / (end - head)
    out = start + (goal - start) * smoothstep(tau, degree)
    out[k <= head] = start
    out[k >= end] = goal
    return out


def plan_reference(params: PhysicalParams, spec: PlanSpec, variant: Variant = "lagrange") -> FlatReference:
    lo = spec.q3_min if spec.q3_min is not None else 0.0
    hi = spec.q3_max if spec.q3_max is not None else params.L
    for name, rest in (("start", spec.start), ("goal", spec.goal)):
        if not lo <= rest.q3 <= hi:
            raise DomainError(f"{name} height {rest.q3} outside [{lo}, {hi}]")
    y1s, y2s = rest_flat_values(params, spec.start, variant)
    y1g, y2g = rest_flat_values(params, spec.goal, variant)
    end = spec.N - spec.tail_len
    y1 = _blend(y1s, y1g, spec.N + Y1_WINDOW, spec.head_len, end, spec.blend_degree)
    y2 = _blend(y2s, y2g, spec.N + Y2_WINDOW, spec.head_len, end, spec.blend_degree)
    return FlatReference(y1, y2, params.T_s)


def euler_step(params: PhysicalParams, x, u, T_s: float | None = None, variant: Variant = "lagrange") -> np.ndarray:
    T_s = params.T_s if T_s is None else T_s
    x = np.asarray(x, dtype=float)
    return x + T_s * dynamics_rhs(params, x, u, variant)


def rollout(params: PhysicalParams, x0, u_seq, variant: Variant = "lagrange", T_s: float | None = None) -> np.ndarray:
    """States ``x_0 .. x_M`` under the inputs ``u_0 .. u_{M-1}``."""
    u_seq = np.asarray(u_seq, dtype=float).reshape(-1, 2)
    xs = np.empty((len(u_seq) + 1, 6))
    xs[0] = x0
    for k, u in enumerate(u_seq):
        try:
            xs[k + 1] = euler_step(params, xs[k], u, T_s, variant)
        except FlatCraneError as exc:
            exc.step = k
            raise
    return xs


def max_deviation(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(a - b, axis=1)))


def feedforward(params: PhysicalParams, ref: FlatReference, variant: Variant = "lagrange",
                verify: bool = True) -> FeedforwardResult:
    """States and forces along ``ref``; optionally replays them open loop."""
    points = parameterize_all(params, ref, variant)
    x_d = np.array([p.x for p in points])
    u_all = np.array([p.u for p in points])
    ubar_all = np.array([p.ubar for p in points])
    res = FeedforwardResult(
        x_d=x_d,
        u_d=u_all[:-1],
        ubar_d=ubar_all[:-1],
        u_final=u_all[-1],
        ubar_final=ubar_all[-1],
        sv_min=np.array([p.sv_min for p in points]),
        sv_ratio=np.array([p.sv_ratio for p in points]),
    )
    scale = 1.0 + float(np.max(np.linalg.norm(x_d, axis=1)))
    res.diagnostics = {
        "min_sv_Mk": float(res.sv_min.min()),
        "min_sv_ratio_Mk": float(res.sv_ratio.min()),
        "state_scale": scale,
        "max_abs_force": np.max(np.abs(u_all), axis=0).tolist(),
    }
    if verify:
        xs = rollout(params, x_d[0], res.u_d, variant)
        dev = max_deviation(xs, x_d)
        res.diagnostics["max_open_loop_dev"] = dev
        res.diagnostics["max_open_loop_rel_dev"] = dev / scale
    return res


def boundary_forces(params: PhysicalParams, res: FeedforwardResult, head: int, tail: int) -> float:
    """Largest deviation of head/tail forces from the holding force."""
    hold = hold_input(params)
    u = np.vstack([res.u_d, res.u_final])
    N = len(res.u_d)
    idx = list(range(0, head - Y1_WINDOW + 2)) + list(range(N - tail, N + 1))
    return float(np.max(np.abs(u[idx] - hold)))
