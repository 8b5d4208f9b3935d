"""Fixed-step integrators for the sigmoidal equations and the inflated inclusion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import NetworkParams, evaluator_for
from .phase_space import GRID_RTOL, History, stack_samples

__all__ = [
    "Method",
    "IntegratorConfig",
    "PolicyKind",
    "SelectorPolicy",
    "TrajectoryRecord",
    "TrajectoryBatch",
    "NumericalError",
    "ResidualReport",
    "integrate_sigmoidal",
    "integrate_sigmoidal_batch",
    "integrate_inclusion",
    "integrate_inclusion_batch",
    "residual_membership",
    "sigmoidal_convergence_sweep",
]


class Method(str, Enum):
    EULER = "euler"
    RK4_INTERP = "rk4_interp"


@dataclass(frozen=True)
class IntegratorConfig:
    method: Method = Method.EULER
    step: float = 0.01
    horizon: float = 1.0
    t0: float = 0.0
    residual_tol: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.step > 0 or not self.horizon > 0:
            raise ValueError("step and horizon must be positive")
        if self.residual_tol < 0:
            raise ValueError("residual_tol must be nonnegative")
        q = self.horizon / self.step
        if abs(q - round(q)) > GRID_RTOL * max(1.0, q):
            raise ValueError("step must divide the horizon")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(self.n_steps + 1)


class PolicyKind(str, Enum):
    LOWER = "lower"
    UPPER = "upper"
    MIDPOINT = "midpoint"
    RANDOM = "random"
    BANG_BANG = "bang_bang"
    SIGMOID = "sigmoid"


@dataclass(frozen=True)
class SelectorPolicy:
    """Rule picking one velocity from each box component.

    ``SIGMOID`` picks the sigmoidal field itself, which always lies in the
    box; with Euler steps it reproduces the sigmoidal trajectory.
    """

    kind: PolicyKind
    seed: int | None = None
    period: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.kind is PolicyKind.RANDOM and self.seed is None:
            raise ValueError("random policy needs a seed")
        if self.kind is PolicyKind.BANG_BANG and not (self.period and self.period > 0):
            raise ValueError("bang_bang policy needs a positive period")

    @property
    def label(self) -> str:
        if self.kind is PolicyKind.RANDOM:
            return f"random{self.seed}"
        if self.kind is PolicyKind.BANG_BANG:
            return f"bang_bang{self.period!r}"
        return self.kind.value

    @classmethod
    def parse(cls, entry) -> "SelectorPolicy":
        """From ``"lower"``, ``{"kind": "random", "seed": 3}`` and similar."""
        if isinstance(entry, SelectorPolicy):
            return entry
        if isinstance(entry, str):
            return cls(entry)
        return cls(entry["kind"], entry.get("seed"), entry.get("period"))


class NumericalError(RuntimeError):
    """A state became non-finite; usually the step is too large."""

    def __init__(self, step: int, component: int, member: int = 0):
        self.step = step
        self.component = component
        self.member = member
        super().__init__(
            f"non-finite state at step {step}, component {component}, trajectory {member}"
        )


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One trajectory on ``[t0, t0 + T]``.

    ``slopes[m]`` is the velocity used from ``times[m]`` to ``times[m+1]``
    and ``gamma_norms[m]`` the norm of the full history at ``times[m]``.
    """

    times: np.ndarray
    states: np.ndarray
    slopes: np.ndarray
    gamma_norms: np.ndarray
    initial: History
    provenance: dict = field(default_factory=dict)

    @property
    def step(self) -> float:
        return self.initial.step

    def buffer(self) -> np.ndarray:
        """Initial window followed by every computed state."""
        return np.concatenate([self.initial.samples, self.states[1:]], axis=0)

    def history_at(self, m: int = -1) -> History:
        """Stored history ``u_t`` at ``times[m]``."""
        m = m % self.times.size
        n0 = self.initial.n_nodes
        buf = self.buffer()
        return self.initial.replace_samples(buf[m : m + n0])

    def final_history(self) -> History:
        return self.history_at(-1)


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    """Trajectories sharing a grid; arrays carry a leading batch axis."""

    times: np.ndarray
    states: np.ndarray
    slopes: np.ndarray
    gamma_norms: np.ndarray
    initial: np.ndarray
    final_window: np.ndarray
    template: History
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return self.states.shape[0]

    def record(self, b: int) -> TrajectoryRecord:
        return TrajectoryRecord(
            self.times,
            self.states[b],
            self.slopes[b],
            self.gamma_norms[b],
            self.template.replace_samples(self.initial[b]),
            dict(self.provenance, member=b),
        )

    def final_histories(self) -> list:
        return [self.template.replace_samples(w) for w in self.final_window]


def _prepare(u0, p: NetworkParams, cfg: IntegratorConfig):
    hist = [u0] if isinstance(u0, History) else list(u0)
    if not hist:
        raise ValueError("no initial data")
    tpl = hist[0]
    if tpl.dim != p.dim:
        raise ValueError(f"history dimension {tpl.dim} does not match n^2 = {p.dim}")
    if tpl.gamma != p.gamma:
        raise ValueError("history gamma differs from the network's gamma")
    if abs(tpl.step - cfg.step) > GRID_RTOL * cfg.step:
        raise ValueError("integrator step must equal the history grid step")
    return tpl, stack_samples(hist)


def _march(
    tpl: History,
    init: np.ndarray,
    cfg: IntegratorConfig,
    velocity: Callable[[np.ndarray, float, int], np.ndarray],
    rk4: bool,
):
    """Shared loop. ``velocity(W, t, m)`` maps windows ``(B, N0, dim)`` to ``(B, dim)``."""
    B, n0, dim = init.shape
    steps = cfg.n_steps
    h = cfg.step
    buf = np.empty((B, n0 + steps, dim))
    buf[:, :n0] = init
    slopes = np.empty((B, steps, dim))
    norms = np.empty((B, steps + 1))
    decay = math.exp(-tpl.gamma * h)
    norms[:, 0] = np.max(tpl.weights[None, :] * np.max(np.abs(init), axis=2), axis=1)
    t0 = cfg.t0
    # blow-ups surface as NumericalError below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(steps):
            W = buf[:, m : m + n0]
            t = t0 + m * h
            if rk4:
                y = W[:, -1]
                k1 = velocity(W, t, m)
                half = 0.5 * (W[:, :-1] + W[:, 1:])
                Wc = np.empty_like(W)
                Wc[:, :-1] = half
                Wc[:, -1] = y + 0.5 * h * k1
                k2 = velocity(Wc, t + 0.5 * h, m)
                Wc[:, -1] = y + 0.5 * h * k2
                k3 = velocity(Wc, t + 0.5 * h, m)
                Wc[:, :-1] = W[:, 1:]
                Wc[:, -1] = y + h * k3
                k4 = velocity(Wc, t + h, m)
                v = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            else:
                v = velocity(W, t, m)
            new = W[:, -1] + h * v
            if not np.all(np.isfinite(new)):
                bad = np.argwhere(~np.isfinite(new))[0]
                raise NumericalError(m + 1, int(bad[1]), int(bad[0]))
            buf[:, n0 + m] = new
            slopes[:, m] = v
            norms[:, m + 1] = np.maximum(decay * norms[:, m], np.max(np.abs(new), axis=1))
    states = buf[:, n0 - 1 :]
    return TrajectoryBatch(
        times=cfg.times,
        states=states.copy(),
        slopes=slopes,
        gamma_norms=norms,
        initial=init.copy(),
        final_window=buf[:, steps:].copy(),
        template=tpl,
    )


def integrate_sigmoidal_batch(
    p: NetworkParams, eps: float, u0: Sequence[History], cfg: IntegratorConfig
) -> TrajectoryBatch:
    tpl, init = _prepare(u0, p, cfg)
    ev = evaluator_for(p, tpl.step, tpl.n_nodes)

    def velocity(W, t, m):
        return ev.evaluate(W, t, eps)[0]

    out = _march(tpl, init, cfg, velocity, cfg.method is Method.RK4_INTERP)
    out.provenance.update(mode="sigmoidal", eps=eps, method=cfg.method.value, step=cfg.step)
    return out


def integrate_sigmoidal(p: NetworkParams, eps: float, u0: History, cfg: IntegratorConfig) -> TrajectoryRecord:
    """March the sigmoidal equations from ``u0`` over ``[t0, t0 + T]``."""
    return integrate_sigmoidal_batch(p, eps, [u0], cfg).record(0)


def _fractions(policy: SelectorPolicy, cfg: IntegratorConfig, members: np.ndarray, dim: int):
    """Per-step selection fractions in ``[0, 1]``: ``(steps, B, dim)`` or a scalar rule."""
    if policy.kind is PolicyKind.LOWER:
        return lambda m: 0.0
    if policy.kind is PolicyKind.UPPER:
        return lambda m: 1.0
    if policy.kind is PolicyKind.MIDPOINT:
        return lambda m: 0.5
    if policy.kind is PolicyKind.SIGMOID:
        return None
    if policy.kind is PolicyKind.BANG_BANG:
        per = policy.period

        def bang(m):
            return 1.0 if int(math.floor(m * cfg.step / per + 1e-9)) % 2 == 0 else 0.0

        return bang
    draws = np.stack(
        [np.random.default_rng([policy.seed, int(k)]).random((cfg.n_steps, dim)) for k in members],
        axis=1,
    )
    return lambda m: draws[m]


def integrate_inclusion_batch(
    p: NetworkParams,
    eps: float,
    u0: Sequence[History],
    cfg: IntegratorConfig,
    policy: SelectorPolicy,
    *,
    z_mode: str = "sigma",
    member_ids: Sequence[int] | None = None,
) -> TrajectoryBatch:
    """Euler march driven by ``policy`` selections from the inclusion box.

    ``member_ids`` index the random streams, so a trajectory does not
    depend on how the ensemble was batched.
    """
    policy = SelectorPolicy.parse(policy)
    tpl, init = _prepare(u0, p, cfg)
    ev = evaluator_for(p, tpl.step, tpl.n_nodes)
    members = np.arange(init.shape[0]) if member_ids is None else np.asarray(member_ids)
    frac = _fractions(policy, cfg, members, p.dim)
    if frac is None and not eps > 0:
        raise ValueError("the sigmoid selector needs eps > 0")

    def velocity(W, t, m):
        f, lo, hi = ev.evaluate(W, t, eps, sigmoidal=frac is None, box=True, z_mode=z_mode)
        target = f if frac is None else lo + frac(m) * (hi - lo)
        return np.clip(target, lo, hi)

    out = _march(tpl, init, cfg, velocity, rk4=False)
    out.provenance.update(
        mode="inclusion",
        eps=eps,
        policy=policy.label,
        seed=policy.seed,
        method=Method.EULER.value,
        step=cfg.step,
        z_mode=z_mode,
    )
    return out


def integrate_inclusion(
    p: NetworkParams,
    eps: float,
    u0: History,
    cfg: IntegratorConfig,
    policy: SelectorPolicy,
    *,
    z_mode: str = "sigma",
) -> TrajectoryRecord:
    """One admissible trajectory of the inflated inclusion."""
    return integrate_inclusion_batch(p, eps, [u0], cfg, policy, z_mode=z_mode).record(0)


@dataclass(frozen=True)
class ResidualReport:
    max_violation: float
    step: int
    component: int
    per_step: np.ndarray
    passed: bool


def residual_membership(
    record: TrajectoryRecord,
    p: NetworkParams,
    eps: float,
    *,
    tol: float | None = None,
    z_mode: str = "sigma",
    derivative: str = "forward",
    chunk: int = 256,
) -> ResidualReport:
    """Distance from the numerical velocity to the inclusion box, step by step.

    ``derivative="forward"`` uses ``(u_{m+1} - u_m) / h``;
    ``"recorded"`` uses the stored slopes.
    """
    h = record.step
    if derivative == "forward":
        vel = np.diff(record.states, axis=0) / h
    elif derivative == "recorded":
        vel = record.slopes
    else:
        raise ValueError("derivative must be 'forward' or 'recorded'")
    n0 = record.initial.n_nodes
    windows = sliding_window_view(record.buffer(), n0, axis=0)  # (M+1, dim, n0)
    ev = evaluator_for(p, h, n0)
    steps = vel.shape[0]
    excess = np.empty((steps, p.dim))
    for s in range(0, steps, chunk):
        e = min(s + chunk, steps)
        W = np.swapaxes(windows[s:e], 1, 2)
        ts = record.times[s:e]
        # the stimulus enters the x rows additively: evaluate at t = 0, then shift
        _, lo, hi = ev.evaluate(W, 0.0, eps, sigmoidal=False, box=True, z_mode=z_mode)
        shift = np.zeros((e - s, p.dim))
        I0 = p.stimulus_vector(0.0)
        for k, t in enumerate(ts):
            shift[k, : p.n] = p.stimulus_vector(t) - I0
        lo = lo + shift
        hi = hi + shift
        v = vel[s:e]
        excess[s:e] = np.maximum(0.0, np.maximum(lo - v, v - hi))
    per_step = excess.max(axis=1) if steps else np.zeros(0)
    if steps:
        flat = int(np.argmax(excess))
        m, comp = divmod(flat, p.dim)
        worst = float(excess[m, comp])
    else:
        m, comp, worst = 0, 0, 0.0
    limit = math.inf if tol is None else tol
    return ResidualReport(worst, m, comp, per_step, worst <= limit)


def sup_distance(a: TrajectoryRecord, b: TrajectoryRecord) -> float:
    """``max_t |u(t) - v(t)|_inf`` over the common time grid."""
    if a.states.shape != b.states.shape:
        raise ValueError("records differ in length or dimension")
    return float(np.max(np.abs(a.states - b.states)))


def sigmoidal_convergence_sweep(
    p: NetworkParams,
    u0: History,
    cfg: IntegratorConfig,
    eps_list: Sequence[float],
    *,
    z_mode: str = "sigma",
    records: dict | None = None,
) -> list:
    """Consecutive sup-distances and residuals against the Heaviside box.

    Returns one dict per ``eps`` with keys ``eps``, ``eps_next``,
    ``sup_distance`` (``None`` for the last entry), ``residual_heaviside``
    and ``residual_own``.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("empty eps list")
    if any(e <= 0 for e in eps_list) or any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be positive and strictly descending")
    recs = {e: integrate_sigmoidal(p, e, u0, cfg) for e in eps_list}
    if records is not None:
        records.update(recs)
    rows = []
    for k, e in enumerate(eps_list):
        nxt = eps_list[k + 1] if k + 1 < len(eps_list) else None
        rows.append(
            {
                "eps": e,
                "eps_next": nxt,
                "sup_distance": None if nxt is None else sup_distance(recs[e], recs[nxt]),
                "residual_heaviside": residual_membership(recs[e], p, 0.0, z_mode=z_mode).max_violation,
                "residual_own": residual_membership(recs[e], p, e, z_mode=z_mode).max_violation,
            }
        )
    return rows
