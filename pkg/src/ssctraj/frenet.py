"""Frenet frame along a polyline reference lane.

The frame is built on a piecewise-linear centerline.  Positions along a
segment are linearly interpolated; the left-hand normal is obtained by
linearly interpolating the unit directions attached to the segment's two
vertices (a vertex direction is the normalized mean of the directions of
its adjacent segments).  ``to_frenet`` solves for the foot point along those
interpolated normals, which makes it the exact inverse of ``to_cartesian``
everywhere inside the capture region.  On straight stretches the foot point
is the closest point of the polyline.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfCaptureRange, OutOfRange

DEFAULT_CAPTURE_RADIUS = 20.0


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class ReferenceLane:
    """Arc-length parameterized centerline.

    Parameters
    ----------
    points : array-like, shape (n, 2)
        Ordered lane positions in meters, ``n >= 2``, consecutive points
        distinct.
    """

    points: np.ndarray
    cum_arclength: np.ndarray = field(init=False, repr=False)
    _seg: np.ndarray = field(init=False, repr=False)
    _seg_len: np.ndarray = field(init=False, repr=False)
    _vertex_tangent: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("reference lane needs at least two 2-D points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("reference lane points must be finite")
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            raise ValueError("consecutive reference lane points must be distinct")
        unit = seg / seg_len[:, None]
        tangent = np.empty_like(pts)
        tangent[0] = unit[0]
        tangent[-1] = unit[-1]
        if len(unit) > 1:
            mid = unit[:-1] + unit[1:]
            norm = np.hypot(mid[:, 0], mid[:, 1])
            if np.any(norm < 1e-9):
                raise ValueError("reference lane folds back on itself")
            tangent[1:-1] = mid / norm[:, None]
        pts.setflags(write=False)
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        cum.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "cum_arclength", cum)
        object.__setattr__(self, "_seg", seg)
        object.__setattr__(self, "_seg_len", seg_len)
        object.__setattr__(self, "_vertex_tangent", tangent)

    @property
    def length(self) -> float:
        return float(self.cum_arclength[-1])

    @classmethod
    def straight(cls, length, heading=0.0, origin=(0.0, 0.0), n=2):
        u = np.linspace(0.0, length, n)
        o = np.asarray(origin, float)
        return cls(o + u[:, None] * np.array([np.cos(heading), np.sin(heading)]))

    @classmethod
    def arc(cls, radius, sweep, center=(0.0, 0.0), start_angle=0.0, step=1e-2):
        """Counter-clockwise circular arc sampled every ``step`` radians
        (negative ``sweep`` turns clockwise)."""
        n = max(2, int(np.ceil(abs(sweep) / step)) + 1)
        ang = start_angle + np.linspace(0.0, sweep, n)
        c = np.asarray(center, float)
        return cls(c + radius * np.c_[np.cos(ang), np.sin(ang)])

    def _normals(self, i, lam):
        # left normal of the interpolated tangent (unnormalized)
        tan = (1.0 - lam)[..., None] * self._vertex_tangent[i] + lam[..., None] * self._vertex_tangent[i + 1]
        return np.stack([-tan[..., 1], tan[..., 0]], axis=-1)


def to_cartesian(s, l, lane: ReferenceLane) -> np.ndarray:
    """Map ``(s, l)`` to a Cartesian position; ``l`` is positive to the left."""
    s = float(s)
    if not (0.0 <= s <= lane.length):
        raise OutOfRange(f"s={s} outside lane range [0, {lane.length}]")
    cum = lane.cum_arclength
    i = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2))
    lam = np.array((s - cum[i]) / lane._seg_len[i])
    base = lane.points[i] + lam * lane._seg[i]
    n = lane._normals(i, lam)
    return base + float(l) * n / np.hypot(n[0], n[1])


def to_frenet(point, lane: ReferenceLane, capture_radius: float = DEFAULT_CAPTURE_RADIUS):
    """Project a Cartesian point onto the lane.

    Returns ``(s, l)``.  Raises :class:`OutOfCaptureRange` when the point is
    farther than ``capture_radius`` from the lane.
    """
    p = np.asarray(point, dtype=float)
    a = lane.points[:-1]
    d = lane._seg
    n0 = lane._normals(np.arange(len(d)), np.zeros(len(d)))
    n1 = lane._normals(np.arange(len(d)), np.ones(len(d)))
    e = n1 - n0
    w = p - a
    # cross(n0 + lam*e, w - lam*d) = C + B lam + A lam^2
    C = _cross(n0, w)
    B = _cross(e, w) - _cross(n0, d)
    A = -_cross(e, d)
    disc = B * B - 4.0 * A * C
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    sign = np.where(B >= 0.0, 1.0, -1.0)
    q = -0.5 * (B + sign * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(q != 0.0, C / q, np.where(C == 0.0, 0.0, np.nan))
        r2 = np.where(np.abs(A) > 1e-14 * np.maximum(np.abs(B), 1.0), q / A, np.nan)
    lam = np.stack([np.fmin(r1, r2), np.fmax(r1, r2)], axis=1)
    lam = np.where(ok[:, None], lam, np.nan)
    eps = 1e-12
    valid = (lam >= -eps) & (lam <= 1.0 + eps)
    lam = np.clip(np.where(valid, lam, 0.0), 0.0, 1.0)

    idx = np.repeat(np.arange(len(d)), 2)
    lam_f = lam.ravel()
    valid_f = valid.ravel()
    foot = a[idx] + lam_f[:, None] * d[idx]
    nrm = lane._normals(idx, lam_f)
    nlen = np.hypot(nrm[:, 0], nrm[:, 1])
    rel = p - foot
    l_all = (rel[:, 0] * nrm[:, 0] + rel[:, 1] * nrm[:, 1]) / nlen
    s_all = lane.cum_arclength[idx] + lam_f * lane._seg_len[idx]

    if np.any(valid_f):
        cand = np.flatnonzero(valid_f)
        best = np.abs(l_all[cand])
        m = best.min()
        # ties resolve to the smaller s
        tied = cand[best == m]
        k = tied[np.argmin(s_all[tied])]
        s, l = float(s_all[k]), float(l_all[k])
    else:
        # beyond the lane ends: fall back to the nearest end point
        s, l = _closest_end(p, lane)
    if abs(l) > capture_radius:
        raise OutOfCaptureRange(f"point {p.tolist()} is {abs(l):.3f} m from the lane (capture radius {capture_radius})")
    return s, l


def _closest_end(p, lane):
    cands = []
    for i, s in ((0, 0.0), (len(lane.points) - 1, lane.length)):
        rel = p - lane.points[i]
        t = lane._vertex_tangent[i]
        dist = float(np.hypot(*rel))
        side = 1.0 if _cross(t, rel) >= 0.0 else -1.0
        cands.append((dist, s, side * dist))
    cands.sort()
    return cands[0][1], cands[0][2]


def closest_point_projection(point, lane: ReferenceLane):
    """Brute-force nearest point on the polyline; returns ``(s, distance)``."""
    p = np.asarray(point, float)
    a = lane.points[:-1]
    d = lane._seg
    lam = np.clip(np.einsum("ij,ij->i", p - a, d) / lane._seg_len ** 2, 0.0, 1.0)
    foot = a + lam[:, None] * d
    dist = np.hypot(*(p - foot).T)
    k = int(np.argmin(dist))
    return float(lane.cum_arclength[k] + lam[k] * lane._seg_len[k]), float(dist[k])


@dataclass(frozen=True)
class FrenetState:
    """Ego state in the Frenet frame; derivatives default to rest."""

    s: float
    l: float
    t: float = 0.0
    s_dot: float = 0.0
    l_dot: float = 0.0
    s_ddot: float = 0.0
    l_ddot: float = 0.0

    def __post_init__(self):
        vals = (self.s, self.l, self.t, self.s_dot, self.l_dot, self.s_ddot, self.l_ddot)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("Frenet state fields must be finite")
        if self.t < 0.0:
            raise ValueError("Frenet state time must be non-negative")

    def derivatives(self, dim: str) -> tuple[float, float, float]:
        """``(position, velocity, acceleration)`` along ``dim`` in {'s', 'l'}."""
        if dim == "s":
            return (self.s, self.s_dot, self.s_ddot)
        if dim == "l":
            return (self.l, self.l_dot, self.l_ddot)
        raise ValueError(f"unknown dimension {dim!r}")
