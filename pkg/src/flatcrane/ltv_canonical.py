"""Controller canonical form of single-input discrete-time LTV systems.

For ``x_{k+1} = A_k x_k + b_k u_k`` the covector ``c_k`` solving
``c_k^T M_k = e_n^T`` with the reachability matrix

    M_k = [b_{k-1}, A_{k-1} b_{k-2}, ..., A_{k-1} ... A_{k-n+1} b_{k-n}]

defines a flat output ``y_k = c_k^T x_k``. Stacking its ``n`` forward
shifts gives the state transformation into companion form, from which the
state and input are read back as linear functions of ``y_k .. y_{k+n}``.

Every function documents the index window it reads from the provider;
providers reject indices outside the window they were built on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import SingularityError, WindowError

RANK_RTOL = 1e-10
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class LtvProvider:
    """Matrices ``(A_k, b_k)`` on the index window ``[k_min, k_max]``."""

    A: np.ndarray  # (K, n, n)
    b: np.ndarray  # (K, n)
    k_min: int = 0

    def __post_init__(self):
        if self.A.ndim != 3 or self.b.ndim != 2 or self.A.shape[:2] != self.b.shape:
            raise ValueError("expected A of shape (K, n, n) and b of shape (K, n)")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("provider matrices must be finite")

    @property
    def n(self) -> int:
        return self.b.shape[1]

    @property
    def k_max(self) -> int:
        return self.k_min + self.b.shape[0] - 1

    def require(self, lo: int, hi: int) -> None:
        if lo < self.k_min or hi > self.k_max:
            raise WindowError(
                f"indices [{lo}, {hi}] requested from window [{self.k_min}, {self.k_max}]",
                step=lo if lo < self.k_min else hi,
            )

    def __call__(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        self.require(k, k)
        i = k - self.k_min
        return self.A[i], self.b[i]

    @classmethod
    def time_invariant(cls, A, b, k_min: int, k_max: int) -> "LtvProvider":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        K = k_max - k_min + 1
        return cls(np.broadcast_to(A, (K, *A.shape)).copy(), np.broadcast_to(b, (K, *b.shape)).copy(), k_min)

    @classmethod
    def from_function(cls, fn: Callable[[int], tuple], k_min: int, k_max: int) -> "LtvProvider":
        pairs = [fn(k) for k in range(k_min, k_max + 1)]
        A = np.array([np.atleast_2d(p[0]) for p in pairs], dtype=float)
        b = np.array([np.atleast_1d(p[1]) for p in pairs], dtype=float)
        return cls(A, b, k_min)


@dataclass(frozen=True)
class CanonicalData:
    k: int
    c: np.ndarray
    T: np.ndarray
    Tinv: np.ndarray
    a: np.ndarray
    A_bar: np.ndarray = field(repr=False)
    b_bar: np.ndarray = field(repr=False)
    #: rows c_k, ..., c_{k+n}
    covectors: np.ndarray = field(repr=False, default=None)


@dataclass
class RegularityReport:
    n: int
    ks: list[int]
    ranks: list[int]
    sv_min: list[float]
    sv_ratio: list[float]

    @property
    def full_rank(self) -> bool:
        return not self.failures

    @property
    def failures(self) -> list[int]:
        return [k for k, r in zip(self.ks, self.ranks) if r < self.n]

    @property
    def min_sv(self) -> float:
        return min(self.sv_min, default=float("nan"))

    @property
    def min_ratio(self) -> float:
        return min(self.sv_ratio, default=float("nan"))


def reachability_matrix(p: LtvProvider, k: int) -> np.ndarray:
    """``M_k``; reads ``[k - n, k - 1]``."""
    n = p.n
    p.require(k - n, k - 1)
    M = np.empty((n, n))
    P = np.eye(n)  # A_{k-1} ... A_{k-j}
    for j in range(n):
        A, b = p(k - 1 - j)
        M[:, j] = P @ b
        P = P @ A
    return M


def _rank_info(M: np.ndarray, rtol: float = RANK_RTOL) -> tuple[int, float, float]:
    s = np.linalg.svd(M, compute_uv=False)
    ratio = s[-1] / s[0] if s[0] > 0 else 0.0
    rank = int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0
    return rank, float(s[-1]), float(ratio)


def check_regularity(p: LtvProvider, ks: Iterable[int], rtol: float = RANK_RTOL) -> RegularityReport:
    """Rank and smallest singular value of ``M_k`` for each ``k``."""
    ks = list(ks)
    ranks, smin, ratios = [], [], []
    for k in ks:
        r, s, q = _rank_info(reachability_matrix(p, k), rtol)
        ranks.append(r)
        smin.append(s)
        ratios.append(q)
    return RegularityReport(p.n, ks, ranks, smin, ratios)


def canonical_covector(M: np.ndarray, *, step: int | None = None) -> np.ndarray:
    """Solve ``c^T M = e_n^T``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    rank, _, ratio = _rank_info(M)
    if rank < n:
        raise SingularityError(
            f"reachability matrix singular (sv ratio {ratio:.3g})",
            step=step,
            cond=float(np.inf if ratio == 0 else 1.0 / ratio),
        )
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    c = np.linalg.solve(M.T, e_n)
    residual = np.max(np.abs(c @ M - e_n))
    if residual > RESIDUAL_TOL * max(1.0, np.linalg.norm(c) * np.linalg.norm(M)):
        raise SingularityError(f"covector residual {residual:.3g}", step=step)
    return c


def covector(p: LtvProvider, k: int) -> np.ndarray:
    return canonical_covector(reachability_matrix(p, k), step=k)


def _inverse_transform(p: LtvProvider, k: int, cs: list[np.ndarray]) -> np.ndarray:
    """Rows ``c_{k+i}^T A_{k+i-1} ... A_k`` given ``cs = [c_k, ..., c_{k+n-1}]``."""
    n = p.n
    rows = np.empty((n, n))
    P = np.eye(n)
    for i in range(n):
        if i:
            P = p(k + i - 1)[0] @ P
        rows[i] = cs[i] @ P
    return rows


def canonical_transform(p: LtvProvider, k: int, covectors=None) -> CanonicalData:
    """Canonical-form data at ``k``; reads ``[k - n, k + n - 1]``.

    ``covectors`` may supply precomputed ``c_k .. c_{k+n}``.
    """
    n = p.n
    p.require(k - n, k + n - 1)
    if covectors is None:
        cs = [covector(p, j) for j in range(k, k + n + 1)]
    else:
        cs = list(covectors)
    Tinv = _inverse_transform(p, k, cs[:n])
    Tinv_next = _inverse_transform(p, k + 1, cs[1:])
    T = _invert(Tinv, k)
    A, b = p(k)
    A_bar = Tinv_next @ A @ T
    b_bar = Tinv_next @ b
    return CanonicalData(k, cs[0], T, Tinv, -A_bar[-1].copy(), A_bar, b_bar, np.array(cs))


def _invert(Tinv: np.ndarray, k: int) -> np.ndarray:
    rank, _, ratio = _rank_info(Tinv)
    if rank < Tinv.shape[0]:
        raise SingularityError(f"canonical transform singular (sv ratio {ratio:.3g})", step=k)
    return np.linalg.inv(Tinv)


def canonical_sequence(p: LtvProvider, k_lo: int, k_hi: int) -> list[CanonicalData]:
    """``canonical_transform`` for ``k_lo .. k_hi`` with each covector solved once."""
    n = p.n
    p.require(k_lo - n, k_hi + n - 1)
    cs = [covector(p, j) for j in range(k_lo, k_hi + n + 1)]
    return [canonical_transform(p, k, cs[k - k_lo : k - k_lo + n + 1]) for k in range(k_lo, k_hi + 1)]


def flat_output_ltv(p: LtvProvider, k: int, x) -> float:
    return float(covector(p, k) @ np.asarray(x, dtype=float))


def parameterize_ltv(p: LtvProvider, k: int, y) -> tuple[np.ndarray, float]:
    """State and input at ``k`` from ``y_k, ..., y_{k+n}``."""
    y = np.asarray(y, dtype=float)
    n = p.n
    if y.shape != (n + 1,):
        raise ValueError(f"expected {n + 1} flat-output samples, got shape {y.shape}")
    data = canonical_transform(p, k)
    return data.T @ y[:n], float(y[n] + data.a @ y[:n])
