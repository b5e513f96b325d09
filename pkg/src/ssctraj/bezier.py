"""Bernstein-basis algebra for scaled Bezier segments.

A segment of duration ``alpha`` starting at ``t_start`` is

    f(t) = alpha * sum_i p_i * b_m^i(u),   u = (t - t_start) / alpha

so that its k-th time derivative is ``alpha**(1 - k) * sum_i q_i^(k) b_{m-k}^i(u)``
where ``q^(k)`` are the hodograph control points of the unscaled curve.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError

DEFAULT_DEGREE = 5
MAX_ORDER = 3


def bernstein(m: int, i: int, u):
    """Bernstein basis polynomial ``C(m, i) u^i (1 - u)^(m - i)``."""
    if not 0 <= i <= m:
        raise DomainError(f"basis index {i} outside [0, {m}]")
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0.0) | (u_arr > 1.0)) or not np.all(np.isfinite(u_arr)):
        raise DomainError("normalized time must lie in [0, 1]")
    out = comb(m, i) * u_arr ** i * (1.0 - u_arr) ** (m - i)
    return float(out) if out.ndim == 0 else out


def bernstein_matrix(m: int, u) -> np.ndarray:
    """Rows: sample points, columns: basis index 0..m."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any((u < 0.0) | (u > 1.0)):
        raise DomainError("normalized time must lie in [0, 1]")
    i = np.arange(m + 1)
    binom = np.array([comb(m, k) for k in i], dtype=float)
    return binom * u[:, None] ** i * (1.0 - u[:, None]) ** (m - i)


def hodograph(p, m: int | None = None, max_order: int = MAX_ORDER) -> list[np.ndarray]:
    """Control points of the derivative curves of the unscaled Bezier curve.

    Element ``k`` of the returned list holds ``q^(k)`` (``m - k + 1`` points),
    with ``q^(0) = p`` and ``q^(k)_i = (m - k + 1) (q^(k-1)_{i+1} - q^(k-1)_i)``.
    Unrolled, ``q^(k) = m!/(m-k)! * Delta^k p``.
    """
    p = np.asarray(p, dtype=float)
    if m is None:
        m = len(p) - 1
    if len(p) != m + 1:
        raise DomainError(f"degree {m} needs {m + 1} control points, got {len(p)}")
    chain = [p.copy()]
    for k in range(1, min(max_order, m) + 1):
        chain.append((m - k + 1) * np.diff(chain[-1]))
    return chain


def difference_operator(m: int, k: int) -> np.ndarray:
    """Matrix ``D`` with ``q^(k) = D @ p`` for a degree-``m`` curve."""
    D = np.eye(m + 1)
    for j in range(1, k + 1):
        n = m - j + 1
        step = np.zeros((n, n + 1))
        step[np.arange(n), np.arange(n)] = -1.0
        step[np.arange(n), np.arange(1, n + 1)] = 1.0
        D = (m - j + 1) * step @ D
    return D


def _gram(n: int) -> np.ndarray:
    # integral over [0, 1] of b_n^i * b_n^j
    G = np.empty((n + 1, n + 1))
    for i in range(n + 1):
        for j in range(n + 1):
            G[i, j] = comb(n, i) * comb(n, j) / ((2 * n + 1) * comb(2 * n, i + j))
    return G


def jerk_hessian(m: int = DEFAULT_DEGREE, alpha: float = 1.0) -> np.ndarray:
    """Squared-jerk Hessian of one scaled segment, ``Q / alpha**3``.

    ``p @ jerk_hessian(m, alpha) @ p`` equals the time integral of the squared
    third derivative of ``alpha * sum p_i b_m^i((t - t0) / alpha)`` over the
    segment.
    """
    if m < 3:
        raise DomainError("jerk needs degree >= 3")
    if not alpha > 0.0:
        raise DomainError("segment scale must be positive")
    D3 = difference_operator(m, 3)
    Q = D3.T @ _gram(m - 3) @ D3
    return 0.5 * (Q + Q.T) / alpha ** 3


@dataclass(frozen=True)
class BezierSegment:
    """One scaled Bezier piece with control points for the ``s`` and ``l`` dimensions."""

    control_points: np.ndarray  # shape (2, m + 1); row 0 is s, row 1 is l
    alpha: float
    t_start: float = 0.0

    def __post_init__(self):
        cp = np.array(self.control_points, dtype=float)
        if cp.ndim == 1:
            cp = cp[None, :]
        if cp.shape[1] < 4:
            raise DomainError("segment degree must be at least 3")
        if not self.alpha > 0.0:
            raise DomainError("segment scale must be positive")
        cp.setflags(write=False)
        object.__setattr__(self, "control_points", cp)

    @property
    def degree(self) -> int:
        return self.control_points.shape[1] - 1

    @property
    def t_end(self) -> float:
        return self.t_start + self.alpha

    def hodograph(self, dim: int = 0) -> list[np.ndarray]:
        return hodograph(self.control_points[dim], self.degree)

    def eval(self, t, k: int = 0, dim: int = 0):
        """k-th time derivative (k = 0..3) of dimension ``dim`` at time ``t``."""
        if not 0 <= k <= MAX_ORDER:
            raise DomainError(f"derivative order {k} not supported")
        t_arr = np.asarray(t, dtype=float)
        span = 1e-12 * max(1.0, abs(self.t_end))
        if np.any(t_arr < self.t_start - span) or np.any(t_arr > self.t_end + span):
            raise DomainError(f"t outside segment [{self.t_start}, {self.t_end}]")
        u = np.clip((t_arr - self.t_start) / self.alpha, 0.0, 1.0)
        q = self.hodograph(dim)[k]
        val = self.alpha ** (1 - k) * (bernstein_matrix(self.degree - k, u.ravel()) @ q)
        return float(val[0]) if t_arr.ndim == 0 else val.reshape(t_arr.shape)

    def scaled_hodograph(self, k: int, dim: int = 0) -> np.ndarray:
        """Control points of the k-th time derivative curve, ``alpha^(1-k) q^(k)``."""
        return self.alpha ** (1 - k) * self.hodograph(dim)[k]
