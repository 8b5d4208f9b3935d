"""Histories in the fading-memory space C_gamma.

A history is a function on (-inf, 0] stored on a uniform grid over the
window [-H, 0] and extended to the left by ``u(t) = u(-H) exp(-gamma (t + H))``.
On that tail ``exp(gamma t) u(t)`` is constant, so the weighted supremum is
attained on the grid and the limit at -inf exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "History",
    "gamma_norm",
    "evaluate",
    "shift_append",
    "distance_gamma",
    "default_window",
    "stack_samples",
    "history_to_csv",
    "history_from_csv",
    "GRID_RTOL",
]

# relative tolerance when deciding that a length is a multiple of the step
GRID_RTOL = 1e-9


def _n_cells(length: float, step: float) -> int:
    q = length / step
    k = int(round(q))
    if k < 0 or abs(q - k) > GRID_RTOL * max(1.0, abs(q)):
        raise ValueError(f"{length!r} is not an integer multiple of step {step!r}")
    return k


@dataclass(frozen=True, eq=False)
class History:
    """Immutable sampled history ``u: (-inf, 0] -> R^dim``.

    ``samples[k]`` is the value at ``t_k = -window + k * step``.
    """

    gamma: float
    window: float
    step: float
    samples: np.ndarray

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError("gamma must be positive and finite")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.window > 0:
            raise ValueError("window must be positive")
        cells = _n_cells(self.window, self.step)
        if cells < 1:
            raise ValueError("window must hold at least one cell")
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] != cells + 1:
            raise ValueError(
                f"expected {cells + 1} samples of shape (dim,), got array of shape {s.shape}"
            )
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return -self.window + self.step * np.arange(self.n_nodes)

    @property
    def weights(self) -> np.ndarray:
        """``exp(gamma t_k)`` at the grid nodes."""
        return np.exp(self.gamma * self.times)

    @property
    def current(self) -> np.ndarray:
        """Value at ``t = 0``."""
        return self.samples[-1]

    def same_geometry(self, other: "History") -> bool:
        return (
            self.gamma == other.gamma
            and self.step == other.step
            and self.n_nodes == other.n_nodes
            and self.dim == other.dim
        )

    def component(self, index: int):
        """Scalar path of one state component (see :class:`delaynet.measures.Path`)."""
        from .measures import Path

        return Path(self.samples[:, index], self.step, self.gamma)

    def replace_samples(self, samples) -> "History":
        return History(self.gamma, self.window, self.step, samples)

    # constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value, gamma: float, window: float, step: float) -> "History":
        v = np.atleast_1d(np.asarray(value, dtype=float))
        n = _n_cells(window, step) + 1
        return cls(gamma, window, step, np.tile(v, (n, 1)))

    @classmethod
    def from_function(
        cls, fn: Callable[[np.ndarray], np.ndarray], gamma: float, window: float, step: float
    ) -> "History":
        """Sample ``fn`` (vectorised over times, returning ``(len(t), dim)`` or ``(len(t),)``)."""
        n = _n_cells(window, step) + 1
        t = -window + step * np.arange(n)
        return cls(gamma, window, step, np.asarray(fn(t), dtype=float))

    # convenience wrappers ---------------------------------------------

    def norm(self) -> float:
        return gamma_norm(self)

    def __call__(self, t):
        return evaluate(self, t)


def gamma_norm(u: History) -> float:
    """``sup_{t<=0} exp(gamma t) ||u(t)||_inf``, attained on the grid."""
    return float(np.max(u.weights * np.max(np.abs(u.samples), axis=1)))


def evaluate(u: History, t):
    """Evaluate ``u`` at scalar or array ``t <= 0``.

    Returns shape ``(dim,)`` for scalar ``t`` and ``(len(t), dim)`` otherwise.
    """
    ta = np.asarray(t, dtype=float)
    scalar = ta.ndim == 0
    ta = np.atleast_1d(ta)
    if np.any(ta > 0):
        raise ValueError("histories are defined on (-inf, 0] only")
    H, h = u.window, u.step
    last = u.n_nodes - 1
    pos = (ta + H) / h
    out = np.empty((ta.size, u.dim))

    tail = pos < 0
    if np.any(tail):
        out[tail] = u.samples[0] * np.exp(-u.gamma * (ta[tail] + H))[:, None]
    inside = ~tail
    if np.any(inside):
        p = pos[inside]
        near = np.rint(p)
        on_node = np.abs(p - near) <= GRID_RTOL * np.maximum(1.0, p)
        k = np.where(on_node, near, np.floor(p)).astype(int)
        k = np.clip(k, 0, last)
        theta = np.where(on_node, 0.0, p - k)
        k1 = np.minimum(k + 1, last)
        out[inside] = (1.0 - theta)[:, None] * u.samples[k] + theta[:, None] * u.samples[k1]
    return out[0] if scalar else out


def shift_append(u: History, segment, step: float | None = None) -> History:
    """History of the trajectory extended by ``segment``.

    ``segment[m-1]`` is the state at ``m * step`` past the current time.
    Samples leaving the window are dropped; the tail is re-anchored at the
    new left node.
    """
    if step is not None and abs(step - u.step) > GRID_RTOL * u.step:
        raise ValueError(f"segment spacing {step} does not match history step {u.step}")
    seg = np.asarray(segment, dtype=float)
    if seg.size == 0:
        return u
    if seg.ndim == 1:
        seg = seg[:, None] if u.dim == 1 else seg[None, :]
    if seg.shape[1] != u.dim:
        raise ValueError("segment dimension does not match history")
    joined = np.concatenate([u.samples, seg], axis=0)
    return u.replace_samples(joined[-u.n_nodes :])


def distance_gamma(u: History, v: History) -> float:
    if not u.same_geometry(v):
        raise ValueError("histories differ in gamma, grid or dimension")
    return float(np.max(u.weights * np.max(np.abs(u.samples - v.samples), axis=1)))


def default_window(gamma: float, norm: float, step: float, tol: float = 1e-9) -> float:
    """Smallest multiple of ``step`` with ``exp(-gamma H) * norm < tol``."""
    if norm <= tol:
        return step
    h_min = math.log(norm / tol) / gamma
    return step * max(1, math.floor(h_min / step) + 1)


def stack_samples(histories: Sequence[History]) -> np.ndarray:
    """Samples of equally shaped histories as one ``(B, nodes, dim)`` array."""
    first = histories[0]
    for h in histories[1:]:
        if not first.same_geometry(h):
            raise ValueError("histories differ in gamma, grid or dimension")
    return np.stack([h.samples for h in histories])


def history_to_csv(u: History, fh, names: Sequence[str] | None = None, member: int | None = None,
                   header: bool = True) -> None:
    """Write ``u`` as rows ``[member,] s, components`` after a geometry line."""
    names = list(names) if names is not None else [f"u_{k + 1}" for k in range(u.dim)]
    if header:
        fh.write(f"# gamma={u.gamma!r} window={u.window!r} step={u.step!r}\n")
        fh.write(",".join((["member"] if member is not None else []) + ["s"] + names) + "\n")
    lead = [] if member is None else [str(member)]
    for s, row in zip(u.times, u.samples):
        fh.write(",".join(lead + [repr(float(s))] + [repr(float(v)) for v in row]) + "\n")


def history_from_csv(fh) -> History:
    """Inverse of :func:`history_to_csv` for a single history."""
    meta = fh.readline().lstrip("#").split()
    geo = dict(item.split("=") for item in meta)
    cols = fh.readline().strip().split(",")
    start = cols.index("s") + 1
    rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array([[float(v) for v in r[start:]] for r in rows])
    return History(float(geo["gamma"]), float(geo["window"]), float(geo["step"]), data)
