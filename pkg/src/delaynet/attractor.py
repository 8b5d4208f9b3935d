"""Pullback-attractor clouds and their Hausdorff comparison across eps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .dynamics import (
    IntegratorConfig,
    Method,
    NumericalError,
    PolicyKind,
    SelectorPolicy,
    integrate_inclusion_batch,
    integrate_sigmoidal_batch,
)
from .model import NetworkParams, absorbing_radius, check_hypotheses
from .phase_space import History
from .set_valued import cloud_dist

__all__ = [
    "Mode",
    "Grid",
    "AttractorEstimate",
    "sample_ball",
    "pullback_estimate",
    "attractor_distance",
    "attractor_convergence_sweep",
]


class Mode(str, Enum):
    SIGMOIDAL = "sigmoidal"
    INCLUSION = "inclusion"


@dataclass(frozen=True)
class Grid:
    """History grid and time-stepping shared by every trajectory of an estimate."""

    step: float
    window: float
    method: Method = Method.EULER

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))


@dataclass(frozen=True, eq=False)
class AttractorEstimate:
    """Finite cloud approximating ``A(t)``.

    ``clouds[tau]`` holds the endpoints ``u_t`` of trajectories started at
    ``t - tau``; ``cloud`` is the one for the largest depth.
    """

    t: float
    taus: tuple
    clouds: dict
    eps: float
    mode: Mode
    samples: int
    seed: int
    policies: tuple
    drift: tuple
    radius: float
    absorption_time: float
    excluded: int = 0
    z_mode: str = "sigma"
    meta: dict = field(default_factory=dict)

    @property
    def cloud(self) -> list:
        return self.clouds[self.taus[-1]]

    @property
    def last_drift(self) -> float:
        return self.drift[-1][2] if self.drift else math.nan

    def max_norm(self, tau=None) -> float:
        members = self.clouds[self.taus[-1] if tau is None else tau]
        return max(h.norm() for h in members)


def sample_ball(
    n_samples: int, radius: float, dim: int, gamma: float, window: float, step: float, rng
) -> list:
    """Histories with ``|u|_gamma <= radius``.

    Even draws are constant histories ``v``; odd draws are profiles
    ``v exp(-kappa s)`` with ``kappa`` uniform in ``[0, gamma]``, whose
    weighted supremum ``|v|`` sits at ``s = 0``.
    """
    out = []
    tpl_times = -window + step * np.arange(int(round(window / step)) + 1)
    for k in range(n_samples):
        v = rng.uniform(-radius, radius, size=dim)
        if k % 2 == 0:
            samples = np.tile(v, (tpl_times.size, 1))
        else:
            kappa = rng.uniform(0.0, gamma)
            samples = np.exp(-kappa * tpl_times)[:, None] * v[None, :]
        out.append(History(gamma, window, step, samples))
    return out


def _run_members(p, eps, mode, hist, cfg, policy, z_mode, ids):
    """Integrate one batch; on a numerical failure retry member by member."""

    def run(batch, members):
        if mode is Mode.SIGMOIDAL:
            return integrate_sigmoidal_batch(p, eps, batch, cfg)
        return integrate_inclusion_batch(p, eps, batch, cfg, policy, z_mode=z_mode, member_ids=members)

    try:
        return run(hist, ids).final_histories(), 0
    except NumericalError:
        kept, bad = [], 0
        for h, k in zip(hist, ids):
            try:
                kept.extend(run([h], [k]).final_histories())
            except NumericalError:
                bad += 1
        return kept, bad


def pullback_estimate(
    p: NetworkParams,
    eps: float,
    mode,
    t: float,
    tau_list: Sequence[float],
    samples_per_tau: int,
    policies: Sequence = ("lower", "upper", "midpoint"),
    seed: int = 0,
    *,
    grid: Grid,
    z_mode: str = "sigma",
    threads: int = 1,
    radius: float | None = None,
) -> AttractorEstimate:
    """Pull back clouds of the absorbing ball to time ``t``.

    For every depth ``tau`` the initial data are drawn in the ball of
    radius ``absorbing_radius(t - tau)`` and integrated over ``[t - tau, t]``.
    A fixed ``radius`` replaces that ball and waives the square-integrability
    requirement (useful for constant stimuli on finite horizons).
    The same draws are reused by every policy and by every ``eps`` sharing
    the seed, so estimates for different ``eps`` are directly comparable.
    """
    mode = Mode(mode)
    report = check_hypotheses(p)
    if not report.ok:
        raise ValueError("hypotheses fail:\n" + "\n".join(report.lines()))
    if radius is None and not report.L2:
        raise ValueError("attractor runs need square-integrable stimuli")
    if radius is not None and not radius > 0:
        raise ValueError("radius must be positive")
    ac = report.constants

    def ball(t_start):
        return radius if radius is not None else absorbing_radius(ac, p, t_start)

    taus = tuple(sorted(float(v) for v in tau_list))
    if not taus or taus[0] <= 0:
        raise ValueError("pullback depths must be positive")
    pols = (
        (SelectorPolicy(PolicyKind.SIGMOID),)
        if mode is Mode.SIGMOIDAL
        else tuple(SelectorPolicy.parse(q) for q in policies)
    )
    if mode is Mode.INCLUSION and not pols:
        raise ValueError("inclusion mode needs at least one policy")

    tasks = []
    for k, tau in enumerate(taus):
        r0 = ball(t - tau)
        rng = np.random.default_rng([seed, k])
        init = sample_ball(samples_per_tau, r0, p.dim, p.gamma, grid.window, grid.step, rng)
        cfg = IntegratorConfig(grid.method, grid.step, tau, t0=t - tau)
        for q in pols:
            tasks.append((tau, init, cfg, q))

    def work(task):
        tau, init, cfg, q = task
        return _run_members(p, eps, mode, init, cfg, q, z_mode, list(range(len(init))))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(task) for task in tasks]

    clouds = {tau: [] for tau in taus}
    excluded = 0
    for (tau, *_), (members, bad) in zip(tasks, results):
        clouds[tau].extend(members)
        excluded += bad
    if any(not c for c in clouds.values()):
        raise NumericalError(-1, -1)

    drift = tuple(
        (a, b, max(cloud_dist(clouds[a], clouds[b]), cloud_dist(clouds[b], clouds[a])))
        for a, b in zip(taus, taus[1:])
    )
    r_now = ball(t)
    r_start = max(ball(t - tau) for tau in taus)
    absorption = max(0.0, math.log(p.n * r_start) / p.gamma) if r_start > 0 else 0.0
    return AttractorEstimate(
        t=float(t),
        taus=taus,
        clouds=clouds,
        eps=float(eps),
        mode=mode,
        samples=int(samples_per_tau),
        seed=int(seed),
        policies=tuple(q.label for q in pols),
        drift=drift,
        radius=r_now,
        absorption_time=absorption,
        excluded=excluded,
        z_mode=z_mode,
    )


def attractor_distance(E1: AttractorEstimate, E2: AttractorEstimate):
    """``(dist(E1, E2), dist(E2, E1), symmetric)`` between the final clouds."""
    if E1.t != E2.t:
        raise ValueError("estimates are for different times")
    d12 = cloud_dist(E1.cloud, E2.cloud)
    d21 = cloud_dist(E2.cloud, E1.cloud)
    return d12, d21, max(d12, d21)


SWEEP_COLUMNS = (
    "eps",
    "dist_phi_eps_phi0",
    "dist_phi0_phi_eps",
    "dist_s_eps_phi0",
    "dist_s_eps_phi_eps",
    "own_dist_phi_eps_phi0",
    "own_dist_phi0_phi_eps",
    "drift_phi_eps",
    "drift_s_eps",
)


def attractor_convergence_sweep(
    p: NetworkParams,
    t: float,
    eps_list: Sequence[float],
    tau_list: Sequence[float],
    samples_per_tau: int,
    policies: Sequence = ("lower", "upper", "midpoint"),
    seed: int = 0,
    *,
    grid: Grid,
    threads: int = 1,
    estimates: dict | None = None,
) -> list:
    """Hausdorff distances between attractor clouds for a descending eps list.

    Inclusion estimates use the inflated step in every row, so the
    inclusions are nested in ``eps``. The estimate of the attractor for
    ``eps`` is the union of the raw clouds for every listed ``eps' <= eps``
    (each is a set of admissible endpoints for ``eps``). The ``own_``
    columns use the raw cloud for ``eps`` alone. For ``eps > 0`` the
    sigmoid selector is part of the catalog, so sigmoidal endpoints are
    included as well.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("empty eps list")
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly descending")
    if eps_list[-1] != 0.0:
        raise ValueError("eps list must end with 0")
    if any(e < 0 for e in eps_list):
        raise ValueError("eps must be nonnegative")
    base = tuple(SelectorPolicy.parse(q) for q in policies)
    raw, sig = {}, {}
    for e in eps_list:
        pols = base + ((SelectorPolicy(PolicyKind.SIGMOID),) if e > 0 else ())
        raw[e] = pullback_estimate(
            p, e, Mode.INCLUSION, t, tau_list, samples_per_tau, pols, seed,
            grid=grid, z_mode="chi", threads=threads,
        )
        if e > 0:
            sig[e] = pullback_estimate(
                p, e, Mode.SIGMOIDAL, t, tau_list, samples_per_tau, (), seed,
                grid=Grid(grid.step, grid.window, Method.EULER), threads=threads,
            )
    if estimates is not None:
        estimates.update({("inclusion", e): v for e, v in raw.items()})
        estimates.update({("sigmoidal", e): v for e, v in sig.items()})

    phi0 = raw[0.0].cloud
    rows = []
    for e in eps_list:
        nested = [h for e2 in eps_list if e2 <= e for h in raw[e2].cloud]
        row = {
            "eps": e,
            "dist_phi_eps_phi0": cloud_dist(nested, phi0),
            "dist_phi0_phi_eps": cloud_dist(phi0, nested),
            "own_dist_phi_eps_phi0": cloud_dist(raw[e].cloud, phi0),
            "own_dist_phi0_phi_eps": cloud_dist(phi0, raw[e].cloud),
            "drift_phi_eps": raw[e].last_drift,
        }
        if e > 0:
            row["dist_s_eps_phi0"] = cloud_dist(sig[e].cloud, phi0)
            row["dist_s_eps_phi_eps"] = cloud_dist(sig[e].cloud, nested)
            row["drift_s_eps"] = sig[e].last_drift
        else:
            row["dist_s_eps_phi0"] = math.nan
            row["dist_s_eps_phi_eps"] = math.nan
            row["drift_s_eps"] = math.nan
        rows.append({k: row[k] for k in SWEEP_COLUMNS})
    return rows
