"""Delay measures on (-inf, 0] and quadrature against them.

A measure is a finite sum of atoms ``w * delta(t_a)`` and exponential
densities ``c * exp(lam * t)``. Scalar paths are piecewise linear on the
stored window and follow ``x(-H - s) = x(-H) exp(gamma s)`` beyond it, so
every cell integral and the tail integral has a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .phase_space import GRID_RTOL

__all__ = [
    "DIVERGENT",
    "DelayMeasure",
    "Path",
    "MeasurePlan",
    "Split",
    "gamma_moment",
    "integrate",
    "partition_masses",
    "plan_for",
]

# returned by gamma_moment when the weighted moment is infinite
DIVERGENT = math.inf


@dataclass(frozen=True)
class DelayMeasure:
    """Positive measure ``sum w delta(t_a) + sum c exp(lam t) dt`` on (-inf, 0]."""

    atoms: tuple = ()
    exp_terms: tuple = ()
    total_variation: float = field(init=False, compare=False)

    def __post_init__(self):
        atoms = tuple((float(t), float(w)) for t, w in self.atoms)
        terms = tuple((float(c), float(lam)) for c, lam in self.exp_terms)
        for t, w in atoms:
            if not (t <= 0 and math.isfinite(t)):
                raise ValueError(f"atom location {t} must be finite and <= 0")
            if not (w > 0 and math.isfinite(w)):
                raise ValueError(f"atom weight {w} must be positive")
        for c, lam in terms:
            if not (c > 0 and math.isfinite(c)):
                raise ValueError(f"density coefficient {c} must be positive")
            if not (lam > 0 and math.isfinite(lam)):
                raise ValueError(f"density rate {lam} must be positive")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "exp_terms", terms)
        tv = math.fsum([w for _, w in atoms] + [c / lam for c, lam in terms])
        object.__setattr__(self, "total_variation", tv)

    @classmethod
    def atom(cls, location: float, weight: float = 1.0) -> "DelayMeasure":
        return cls(atoms=((location, weight),))

    @classmethod
    def exponential(cls, coefficient: float, rate: float) -> "DelayMeasure":
        return cls(exp_terms=((coefficient, rate),))

    def __add__(self, other: "DelayMeasure") -> "DelayMeasure":
        return DelayMeasure(self.atoms + other.atoms, self.exp_terms + other.exp_terms)

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.exp_terms

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw locations from the normalised measure (for Monte Carlo checks)."""
        tv = self.total_variation
        masses = [w for _, w in self.atoms] + [c / lam for c, lam in self.exp_terms]
        which = rng.choice(len(masses), size=size, p=np.asarray(masses) / tv)
        out = np.empty(size)
        na = len(self.atoms)
        for j in range(len(masses)):
            sel = which == j
            if j < na:
                out[sel] = self.atoms[j][0]
            else:
                lam = self.exp_terms[j - na][1]
                out[sel] = -rng.exponential(1.0 / lam, size=int(sel.sum()))
        return out


def gamma_moment(mu: DelayMeasure, gamma: float) -> float:
    """``int exp(-gamma t) dmu(t)``, or :data:`DIVERGENT` if some rate is <= gamma."""
    if any(lam <= gamma for _, lam in mu.exp_terms):
        return DIVERGENT
    return math.fsum(
        [w * math.exp(-gamma * t) for t, w in mu.atoms]
        + [c / (lam - gamma) for c, lam in mu.exp_terms]
    )


@dataclass(frozen=True, eq=False)
class Path:
    """Scalar path: nodal values on ``[-H, 0]`` plus the exponential tail."""

    values: np.ndarray
    step: float
    gamma: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size < 2:
            raise ValueError("a path needs at least two nodes")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def window(self) -> float:
        return self.step * (self.values.size - 1)

    @property
    def times(self) -> np.ndarray:
        return -self.window + self.step * np.arange(self.values.size)

    def __call__(self, t):
        ta = np.asarray(t, dtype=float)
        if np.any(ta > 0):
            raise ValueError("paths are defined on (-inf, 0] only")
        plan = _interp_matrix(np.atleast_1d(ta), self.step, self.values.size, self.gamma)
        out = self.values @ plan
        return float(out[0]) if ta.ndim == 0 else out.reshape(ta.shape)


def _interp_matrix(t: np.ndarray, step: float, n_nodes: int, gamma: float) -> np.ndarray:
    """Matrix ``M`` with ``values @ M`` the path evaluated at ``t``."""
    H = step * (n_nodes - 1)
    M = np.zeros((n_nodes, t.size))
    for j, tj in enumerate(t):
        p = (tj + H) / step
        if p < 0:
            M[0, j] = math.exp(-gamma * (tj + H))
            continue
        near = round(p)
        if abs(p - near) <= GRID_RTOL * max(1.0, p):
            M[min(int(near), n_nodes - 1), j] = 1.0
            continue
        k = min(int(math.floor(p)), n_nodes - 2)
        th = p - k
        M[k, j] = 1.0 - th
        M[k + 1, j] = th
    return M


def _psi(z: np.ndarray) -> np.ndarray:
    """Mass-centroid fraction of ``exp(z theta)`` on ``[0, 1]``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = 0.5 + zs / 12.0 - zs**3 / 720.0
    zl = z[~small]
    out[~small] = 1.0 / (-np.expm1(-zl)) - 1.0 / zl
    return out


class Split(NamedTuple):
    """Masses of the three preimage sets and, optionally, the sigmoid integral."""

    minus: np.ndarray
    zero: np.ndarray
    plus: np.ndarray
    sigma: np.ndarray | None


class MeasurePlan:
    """Quadrature of one measure against batches of paths on a fixed grid.

    Parameters
    ----------
    mu : DelayMeasure
    step : float
        Grid spacing of the paths.
    n_nodes : int
        Number of nodes on ``[-H, 0]``.
    gamma : float
        Tail growth rate of the paths.
    """

    def __init__(self, mu: DelayMeasure, step: float, n_nodes: int, gamma: float):
        self.mu = mu
        self.step = float(step)
        self.n_nodes = int(n_nodes)
        self.gamma = float(gamma)
        self.window = self.step * (self.n_nodes - 1)
        t_nodes = -self.window + self.step * np.arange(self.n_nodes)
        self._t_left = t_nodes[:-1]

        if mu.atoms:
            loc = np.array([t for t, _ in mu.atoms])
            self.atom_weights = np.array([w for _, w in mu.atoms])
            self.atom_matrix = _interp_matrix(loc, self.step, self.n_nodes, self.gamma)
        else:
            self.atom_weights = np.zeros(0)
            self.atom_matrix = np.zeros((self.n_nodes, 0))

        # per exponential term: cell base masses, full-cell centroid and tail data
        self._terms = []
        node_w = self.atom_matrix @ self.atom_weights
        tail_coef = 0.0
        for c, lam in mu.exp_terms:
            base = (c / lam) * np.exp(lam * self._t_left)
            full = base * math.expm1(lam * self.step)
            theta = float(_psi(np.array(lam * self.step)))
            node_w = node_w.copy()
            node_w[:-1] += full * (1.0 - theta)
            node_w[1:] += full * theta
            if lam > self.gamma:
                tail_coef += c * math.exp(-lam * self.window) / (lam - self.gamma)
            else:
                tail_coef = math.inf
            self._terms.append((c, lam, base))
        self.node_weights = node_w
        self.tail_coef = tail_coef

    # linear functionals ----------------------------------------------------

    def integrate(self, values) -> np.ndarray:
        """Exact ``int f dmu`` for piecewise-linear ``f`` with exponential tail.

        ``values`` has shape ``(n_nodes,)`` or ``(B, n_nodes)``.
        """
        X = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(X)):
            raise ValueError("path values must be finite")
        out = X @ self.node_weights
        if self.tail_coef:
            anchor = X[..., 0]
            if math.isinf(self.tail_coef):
                if np.any(anchor != 0):
                    raise ValueError("integral diverges: tail grows faster than the density decays")
            else:
                out = out + self.tail_coef * anchor
        return out

    # preimage decomposition ----------------------------------------------

    def split(self, values, threshold: float, half_width: float, eps: float | None = None) -> Split:
        """Masses of ``{x - threshold < -b}``, ``{|x - threshold| <= b}``, ``{> b}``.

        With ``eps`` given, also returns ``int sigma_eps(x - threshold) dmu``
        evaluated piecewise at the mass centroid of every monotone piece, so
        the value always lies in the matching Aumann interval.
        """
        X = np.asarray(values, dtype=float)
        scalar = X.ndim == 1
        X = np.atleast_2d(X)
        b = float(half_width)
        if b < 0:
            raise ValueError("half_width must be nonnegative")
        B = X.shape[0]
        S = X - threshold
        m_minus = np.zeros(B)
        m_zero = np.zeros(B)
        m_plus = np.zeros(B)
        sig = np.zeros(B) if eps is not None else None

        def accumulate(mass, val_class, val_centroid, axis=None):
            # axis=None: one piece per batch member, nothing to reduce
            def total(a):
                return a if axis is None else np.sum(a, axis=axis)

            lo = val_class < -b
            hi = val_class > b
            mid = ~(lo | hi)
            m_minus[:] += total(np.where(lo, mass, 0.0))
            m_plus[:] += total(np.where(hi, mass, 0.0))
            m_zero[:] += total(np.where(mid, mass, 0.0))
            if sig is not None:
                sig[:] += total(mass * expit(val_centroid / eps))

        if self.atom_weights.size:
            # interpolate x, not x - threshold: tail atoms scale the anchor value
            Sa = X @ self.atom_matrix - threshold
            accumulate(np.broadcast_to(self.atom_weights, Sa.shape), Sa, Sa, axis=1)

        if self._terms:
            s0 = S[:, :-1]
            D = S[:, 1:] - s0
            with np.errstate(divide="ignore", invalid="ignore"):
                th_a = np.where(D != 0, (-b - s0) / D, 0.0)
                th_b = np.where(D != 0, (b - s0) / D, 0.0)
            th_a = np.clip(th_a, 0.0, 1.0)
            th_b = np.clip(th_b, 0.0, 1.0)
            cuts = [np.zeros_like(s0), np.minimum(th_a, th_b), np.maximum(th_a, th_b), np.ones_like(s0)]
            x0 = X[:, 0]
            for c, lam, base in self._terms:
                z = lam * self.step
                for start, end in zip(cuts[:-1], cuts[1:]):
                    ell = end - start
                    mass = base * np.exp(z * start) * np.expm1(z * ell)
                    val_mid = s0 + D * (start + 0.5 * ell)
                    val_c = s0 + D * (start + ell * _psi(z * ell))
                    accumulate(mass, val_mid, val_c, axis=1)
                self._split_tail(c, lam, x0, threshold, b, eps, accumulate)

        if scalar:
            return Split(
                m_minus[0], m_zero[0], m_plus[0], None if sig is None else sig[0]
            )
        return Split(m_minus, m_zero, m_plus, sig)

    def _split_tail(self, c, lam, x0, threshold, b, eps, accumulate):
        # beyond the window x(-H - s) = x0 exp(gamma s), s >= 0
        g = self.gamma
        scale = (c / lam) * math.exp(-lam * self.window)
        bps = []
        for level in (threshold - b, threshold + b):
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                ratio = level / x0
                # crossing only when x0 has the level's sign and smaller size
                ok = (ratio > 1.0) & np.isfinite(ratio)
                s_star = np.where(ok, np.log(np.where(ok, ratio, 1.0)) / g, 0.0)
            bps.append(s_star)
        p1 = np.minimum(bps[0], bps[1])
        p2 = np.maximum(bps[0], bps[1])
        pieces = [(np.zeros_like(x0), p1), (p1, p2), (p2, None)]
        for sa, sb in pieces:
            if sb is None:
                mass = scale * np.exp(-lam * sa)
                s_mid = sa + 1.0
                s_c = sa + 1.0 / lam
            else:
                ell = sb - sa
                mass = scale * np.exp(-lam * sa) * (-np.expm1(-lam * ell))
                s_mid = sa + 0.5 * ell
                s_c = sa + ell * (1.0 - _psi(lam * ell))
            with np.errstate(over="ignore", invalid="ignore"):
                # a zero anchor keeps the tail at 0 even where s is infinite
                v_mid = np.where(x0 == 0, 0.0, x0 * np.exp(g * s_mid)) - threshold
                v_c = np.where(x0 == 0, 0.0, x0 * np.exp(g * s_c)) - threshold
            v_mid = np.where(mass > 0, v_mid, 0.0)
            v_c = np.where(mass > 0, v_c, 0.0)
            accumulate(mass, v_mid, v_c)


@lru_cache(maxsize=256)
def plan_for(mu: DelayMeasure, step: float, n_nodes: int, gamma: float) -> MeasurePlan:
    """Cached :class:`MeasurePlan` for a measure and grid geometry."""
    return MeasurePlan(mu, step, n_nodes, gamma)


def integrate(mu: DelayMeasure, f: Path) -> float:
    """``int f dmu`` for a piecewise-linear path with exponential tail."""
    return float(plan_for(mu, f.step, f.values.size, f.gamma).integrate(f.values))


def partition_masses(mu: DelayMeasure, x: Path, threshold: float, half_width: float):
    """``(mu(E-), mu(E0), mu(E+))`` with boundary points counted in ``E0``."""
    sp = plan_for(mu, x.step, x.values.size, x.gamma).split(x.values, threshold, half_width)
    return float(sp.minus), float(sp.zero), float(sp.plus)
