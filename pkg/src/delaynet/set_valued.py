"""Intervals, boxes, the sigmoid, the inflated step map and Hausdorff distances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .measures import DelayMeasure, Path, partition_masses
from .phase_space import History, stack_samples

__all__ = [
    "EPS_MAX",
    "Interval",
    "Box",
    "sigmoid",
    "b_of",
    "chi",
    "aumann_chi_integral",
    "aumann_from_masses",
    "hausdorff",
    "hausdorff_sym",
    "box_dist",
    "hausdorff_box",
    "cloud_dist",
    "hausdorff_cloud",
]

EPS_MAX = 0.2


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    __radd__ = __add__

    def __mul__(self, t: float) -> "Interval":
        a, b = t * self.lo, t * self.hi
        return Interval(min(a, b), max(a, b))

    __rmul__ = __mul__

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi

    def issubset(self, other: "Interval", tol: float = 0.0) -> bool:
        return other.lo - tol <= self.lo and self.hi <= other.hi + tol

    def clip(self, v: float) -> float:
        return min(max(v, self.lo), self.hi)


@dataclass(frozen=True, eq=False)
class Box:
    """Product of closed intervals, stored as two endpoint arrays."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float)
        hi = np.array(self.hi, dtype=float)
        if lo.shape != hi.shape:
            raise ValueError("endpoint arrays differ in shape")
        if np.any(lo > hi):
            raise ValueError("box has an empty component")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __len__(self):
        return self.lo.shape[-1]

    def __getitem__(self, k) -> Interval:
        return Interval(float(self.lo[k]), float(self.hi[k]))

    def contains(self, v, tol: float = 0.0) -> bool:
        v = np.asarray(v)
        return bool(np.all(self.lo - tol <= v) and np.all(v <= self.hi + tol))

    def excess(self, v) -> np.ndarray:
        """Component-wise distance from ``v`` to the box."""
        v = np.asarray(v, dtype=float)
        return np.maximum(0.0, np.maximum(self.lo - v, v - self.hi))

    def issubset(self, other: "Box", tol: float = 0.0) -> bool:
        return bool(np.all(other.lo - tol <= self.lo) and np.all(self.hi <= other.hi + tol))


def sigmoid(eps: float, s):
    """``1 / (1 + exp(-s / eps))``."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    out = expit(np.asarray(s, dtype=float) / eps)
    return float(out) if np.ndim(out) == 0 else out


def b_of(eps: float) -> float:
    """Half-width ``eps * ln((1 - eps) / eps)`` of the indeterminate band."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if eps == 0.0 or eps == 1.0:
        return 0.0
    # split log: (1 - eps) / eps overflows for subnormal eps
    return eps * (math.log1p(-eps) - math.log(eps))


def _check_eps(eps: float) -> float:
    if not 0.0 <= eps <= EPS_MAX:
        raise ValueError(f"eps must lie in [0, {EPS_MAX}]")
    return float(eps)


def chi(eps: float, s: float) -> Interval:
    eps = _check_eps(eps)
    b = b_of(eps)
    if s < -b:
        return Interval(0.0, eps)
    if s > b:
        return Interval(1.0 - eps, 1.0)
    return Interval(0.0, 1.0)


def aumann_from_masses(eps, m_minus, m_zero, m_plus):
    """Endpoints ``((1 - eps) m+, eps m- + m0 + m+)``; works on arrays."""
    return (1.0 - eps) * m_plus, eps * m_minus + m_zero + m_plus


def aumann_chi_integral(eps: float, x: Path, threshold: float, mu: DelayMeasure) -> Interval:
    """Aumann integral of ``chi_eps(x(.) - threshold)`` against ``mu``."""
    eps = _check_eps(eps)
    m = partition_masses(mu, x, threshold, b_of(eps))
    lo, hi = aumann_from_masses(eps, *m)
    return Interval(lo, max(lo, hi))


def hausdorff(A: Interval, B: Interval) -> float:
    """One-sided ``sup_{a in A} inf_{b in B} |a - b|``."""
    return max(0.0, B.lo - A.lo, A.hi - B.hi)


def hausdorff_sym(A: Interval, B: Interval) -> float:
    return max(hausdorff(A, B), hausdorff(B, A))


def box_dist(A: Box, B: Box) -> float:
    """One-sided distance of boxes under the sup norm."""
    d = np.maximum(0.0, np.maximum(B.lo - A.lo, A.hi - B.hi))
    return float(np.max(d)) if d.size else 0.0


def hausdorff_box(A: Box, B: Box) -> float:
    return max(box_dist(A, B), box_dist(B, A))


def _cloud_array(P) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(P, History):
        P = [P]
    if len(P) == 0:
        raise ValueError("empty cloud")
    arr = stack_samples(list(P))
    return arr, P[0].weights


def cloud_dist(P: Sequence[History], Q: Sequence[History], chunk: int = 64) -> float:
    """One-sided ``max_p min_q distance_gamma(p, q)``."""
    a, w = _cloud_array(P)
    b, w2 = _cloud_array(Q)
    if a.shape[1:] != b.shape[1:] or not np.array_equal(w, w2):
        raise ValueError("clouds differ in geometry")
    best = np.full(a.shape[0], np.inf)
    for i in range(0, a.shape[0], chunk):
        ai = a[i : i + chunk]
        for j in range(0, b.shape[0], chunk):
            bj = b[j : j + chunk]
            diff = np.abs(ai[:, None] - bj[None, :]).max(axis=-1)
            d = (diff * w).max(axis=-1)
            best[i : i + chunk] = np.minimum(best[i : i + chunk], d.min(axis=1))
    return float(best.max())


def hausdorff_cloud(P: Sequence[History], Q: Sequence[History]) -> float:
    return max(cloud_dist(P, Q), cloud_dist(Q, P))
