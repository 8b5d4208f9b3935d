"""Network parameters, right-hand sides and hypothesis checks.

State layout: ``x_1 .. x_n`` followed by ``z_ij`` for ``i != j`` in row-major
order, so the dimension is ``n**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate as _quad
from scipy.special import erf, expit

from .measures import DelayMeasure, gamma_moment, plan_for
from .phase_space import History
from .set_valued import EPS_MAX, Box, aumann_from_masses, b_of

__all__ = [
    "DecayKind",
    "DecayFn",
    "StimulusKind",
    "StimulusFn",
    "NetworkParams",
    "HypothesisReport",
    "AbsorbingConstants",
    "NetworkEvaluator",
    "evaluator_for",
    "rhs_sigmoidal",
    "rhs_inclusion_box",
    "check_hypotheses",
    "absorbing_constants",
    "absorbing_radius",
    "solution_bound_constants",
    "lipschitz_constant",
    "rhs_bound",
]


class DecayKind(str, Enum):
    CONSTANT = "constant"
    AFFINE_CLIPPED = "affine_clipped"
    LOGISTIC_OFFSET = "logistic_offset"


@dataclass(frozen=True)
class DecayFn:
    """Decay rate ``A(s)`` from a closed catalog.

    ``CONSTANT(a)``: ``a``.
    ``AFFINE_CLIPPED(a, slope, cap)``: ``min(cap, a + slope |s|)``.
    ``LOGISTIC_OFFSET(a, amp, rate)``: ``a + amp / (1 + exp(-rate s))``.
    """

    kind: DecayKind
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", DecayKind(self.kind))
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        need = {DecayKind.CONSTANT: 1, DecayKind.AFFINE_CLIPPED: 3, DecayKind.LOGISTIC_OFFSET: 3}
        if len(p) != need[self.kind]:
            raise ValueError(f"{self.kind.value} takes {need[self.kind]} parameters")
        if not all(math.isfinite(v) for v in p):
            raise ValueError("decay parameters must be finite")
        if self.kind is DecayKind.AFFINE_CLIPPED and (p[1] < 0 or p[2] < p[0]):
            raise ValueError("affine_clipped needs slope >= 0 and cap >= a")
        if self.kind is DecayKind.LOGISTIC_OFFSET and p[1] < 0:
            raise ValueError("logistic_offset needs amp >= 0")

    @classmethod
    def constant(cls, a: float) -> "DecayFn":
        return cls(DecayKind.CONSTANT, (a,))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        p = self.params
        if self.kind is DecayKind.CONSTANT:
            return np.full_like(s, p[0])
        if self.kind is DecayKind.AFFINE_CLIPPED:
            return np.minimum(p[2], p[0] + p[1] * np.abs(s))
        return p[0] + p[1] * expit(p[2] * s)

    def lower_bound(self) -> float:
        """Infimum over the real line."""
        return self.params[0]

    def sup_on(self, r: float) -> float:
        p = self.params
        if self.kind is DecayKind.CONSTANT:
            return p[0]
        if self.kind is DecayKind.AFFINE_CLIPPED:
            return min(p[2], p[0] + p[1] * r)
        return p[0] + p[1] * float(expit(abs(p[2]) * r))

    def lipschitz_on(self, r: float) -> float:
        p = self.params
        if self.kind is DecayKind.CONSTANT:
            return 0.0
        if self.kind is DecayKind.AFFINE_CLIPPED:
            return p[1]
        return p[1] * abs(p[2]) / 4.0


class StimulusKind(str, Enum):
    CONSTANT = "constant"
    SINUSOID = "sinusoid"
    GAUSSIAN_PULSE = "gaussian_pulse"
    SUM = "sum"


@dataclass(frozen=True)
class StimulusFn:
    """External input ``I(t)`` from a closed catalog.

    ``CONSTANT(v)``, ``SINUSOID(amp, freq, phase)``,
    ``GAUSSIAN_PULSE(amp, center, width)`` and ``SUM`` of those (``terms``).
    """

    kind: StimulusKind
    params: tuple = ()
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", StimulusKind(self.kind))
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "terms", tuple(self.terms))
        need = {
            StimulusKind.CONSTANT: 1,
            StimulusKind.SINUSOID: 3,
            StimulusKind.GAUSSIAN_PULSE: 3,
            StimulusKind.SUM: 0,
        }
        if len(p) != need[self.kind]:
            raise ValueError(f"{self.kind.value} takes {need[self.kind]} parameters")
        if not all(math.isfinite(v) for v in p):
            raise ValueError("stimulus parameters must be finite")
        if self.kind is StimulusKind.GAUSSIAN_PULSE and p[2] <= 0:
            raise ValueError("pulse width must be positive")
        if self.kind is StimulusKind.SUM:
            if not all(isinstance(t, StimulusFn) for t in self.terms):
                raise ValueError("sum terms must be stimuli")
        elif self.terms:
            raise ValueError("only sums take terms")

    @classmethod
    def constant(cls, v: float) -> "StimulusFn":
        return cls(StimulusKind.CONSTANT, (v,))

    @classmethod
    def zero(cls) -> "StimulusFn":
        return cls.constant(0.0)

    @classmethod
    def pulse(cls, amp: float, center: float, width: float) -> "StimulusFn":
        return cls(StimulusKind.GAUSSIAN_PULSE, (amp, center, width))

    @classmethod
    def sinusoid(cls, amp: float, freq: float, phase: float = 0.0) -> "StimulusFn":
        return cls(StimulusKind.SINUSOID, (amp, freq, phase))

    @classmethod
    def sum(cls, *terms: "StimulusFn") -> "StimulusFn":
        return cls(StimulusKind.SUM, (), terms)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind is StimulusKind.CONSTANT:
            out = np.full_like(t, p[0])
        elif self.kind is StimulusKind.SINUSOID:
            out = p[0] * np.sin(p[1] * t + p[2])
        elif self.kind is StimulusKind.GAUSSIAN_PULSE:
            out = p[0] * np.exp(-(((t - p[1]) / p[2]) ** 2))
        else:
            out = np.zeros_like(t)
            for term in self.terms:
                out = out + term(t)
        return float(out) if out.ndim == 0 else out

    @property
    def is_zero(self) -> bool:
        if self.kind is StimulusKind.SUM:
            return all(t.is_zero for t in self.terms)
        return self.params[0] == 0.0

    @property
    def square_integrable(self) -> bool:
        """Whether ``int_R I^2`` is finite."""
        if self.kind is StimulusKind.GAUSSIAN_PULSE or self.is_zero:
            return True
        if self.kind is StimulusKind.SUM:
            return all(t.square_integrable for t in self.terms)
        return False

    def square_integral(self, a: float, b: float) -> float:
        """``int_a^b I(t)^2 dt``; infinite endpoints allowed."""
        if b < a:
            raise ValueError("need a <= b")
        if a == b or self.is_zero:
            return 0.0
        finite = math.isfinite(a) and math.isfinite(b)
        p = self.params
        if self.kind is StimulusKind.CONSTANT:
            return p[0] ** 2 * (b - a) if finite else math.inf
        if self.kind is StimulusKind.SINUSOID:
            if not finite:
                return math.inf
            amp, w, ph = p
            if w == 0:
                return amp**2 * math.sin(ph) ** 2 * (b - a)
            return amp**2 * (
                0.5 * (b - a) - (math.sin(2 * (w * b + ph)) - math.sin(2 * (w * a + ph))) / (4 * w)
            )
        if self.kind is StimulusKind.GAUSSIAN_PULSE:
            amp, c, w = p
            r2 = math.sqrt(2.0)
            return amp**2 * w * math.sqrt(math.pi / 8.0) * (
                float(erf(r2 * (b - c) / w)) - float(erf(r2 * (a - c) / w))
            )
        if not finite and not self.square_integrable:
            return math.inf
        val, _ = _quad.quad(lambda s: self(s) ** 2, a, b, limit=200, epsabs=1e-13, epsrel=1e-12)
        return float(val)

    def sup_abs(self, a: float = -math.inf, b: float = math.inf) -> float:
        """Upper bound of ``|I|`` on ``[a, b]`` (exact except for sums)."""
        p = self.params
        if self.kind is StimulusKind.CONSTANT:
            return abs(p[0])
        if self.kind is StimulusKind.SINUSOID:
            return abs(p[0])
        if self.kind is StimulusKind.GAUSSIAN_PULSE:
            t = min(max(p[1], a), b)
            return abs(p[0]) * math.exp(-(((t - p[1]) / p[2]) ** 2))
        return sum(term.sup_abs(a, b) for term in self.terms)

    def sup_abs_derivative(self) -> float:
        """Upper bound of ``|I'|`` on the real line."""
        p = self.params
        if self.kind is StimulusKind.CONSTANT:
            return 0.0
        if self.kind is StimulusKind.SINUSOID:
            return abs(p[0] * p[1])
        if self.kind is StimulusKind.GAUSSIAN_PULSE:
            return abs(p[0]) * math.sqrt(2.0) * math.exp(-0.5) / p[2]
        return sum(term.sup_abs_derivative() for term in self.terms)


@dataclass(frozen=True, eq=False)
class NetworkParams:
    """Coefficients of the network. Diagonal entries of the pair arrays are unused."""

    n: int
    decay_x: tuple
    decay_z: tuple
    alpha: float
    c: np.ndarray
    d: np.ndarray
    Gamma: np.ndarray
    mu: tuple
    stimulus: tuple
    gamma: float

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "n", n)
        c = np.array(self.c, dtype=float).reshape(n, n)
        d = np.array(self.d, dtype=float).reshape(n, n)
        G = np.array(self.Gamma, dtype=float).reshape(n)
        off = ~np.eye(n, dtype=bool)
        if np.any(c[off] < 0) or np.any(d[off] < 0):
            raise ValueError("c and d must be nonnegative")
        for arr in (c, d, G):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "Gamma", G)
        if len(self.decay_x) != n or len(self.stimulus) != n:
            raise ValueError("decay_x and stimulus need n entries")
        dz = tuple(tuple(row) for row in self.decay_z)
        mu = tuple(tuple(row) for row in self.mu)
        if len(dz) != n or any(len(r) != n for r in dz) or len(mu) != n or any(len(r) != n for r in mu):
            raise ValueError("decay_z and mu need n x n entries")
        for i, j in self.pairs:
            if not isinstance(dz[i][j], DecayFn) or not isinstance(mu[i][j], DelayMeasure):
                raise ValueError(f"missing decay or measure for pair ({i + 1},{j + 1})")
        object.__setattr__(self, "decay_x", tuple(self.decay_x))
        object.__setattr__(self, "decay_z", dz)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "stimulus", tuple(self.stimulus))
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError("gamma must be positive")

    @property
    def dim(self) -> int:
        return self.n * self.n

    @property
    def pairs(self) -> list:
        return [(i, j) for i in range(self.n) for j in range(self.n) if i != j]

    def z_index(self, i: int, j: int) -> int:
        if i == j:
            raise ValueError("no diagonal z component")
        return self.n + i * (self.n - 1) + (j if j < i else j - 1)

    def component_names(self) -> list:
        return [f"x_{i + 1}" for i in range(self.n)] + [f"z_{i + 1}{j + 1}" for i, j in self.pairs]

    def stimulus_vector(self, t: float) -> np.ndarray:
        return np.array([float(s(t)) for s in self.stimulus])

    def replace(self, **changes) -> "NetworkParams":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return NetworkParams(**fields)

    @classmethod
    def uniform(
        cls,
        n: int,
        alpha: float,
        c: float,
        d: float,
        Gamma: float,
        mu: DelayMeasure,
        stimulus,
        gamma: float,
        decay: DecayFn | None = None,
    ) -> "NetworkParams":
        """Every neuron and pair shares the same coefficients."""
        decay = decay or DecayFn.constant(alpha)
        stim = tuple(stimulus) if isinstance(stimulus, (list, tuple)) else (stimulus,) * n
        return cls(
            n=n,
            decay_x=(decay,) * n,
            decay_z=tuple(tuple(None if i == j else decay for j in range(n)) for i in range(n)),
            alpha=alpha,
            c=np.full((n, n), c),
            d=np.full((n, n), d),
            Gamma=np.full(n, Gamma),
            mu=tuple(tuple(None if i == j else mu for j in range(n)) for i in range(n)),
            stimulus=stim,
            gamma=gamma,
        )


class NetworkEvaluator:
    """Batched right-hand sides on a fixed history grid.

    Windows have shape ``(B, n_nodes, dim)``; outputs ``(B, dim)``.
    """

    def __init__(self, p: NetworkParams, step: float, n_nodes: int):
        self.p = p
        self.step = float(step)
        self.n_nodes = int(n_nodes)
        n = p.n
        self.pairs = p.pairs
        self.plans = [plan_for(p.mu[i][j], self.step, self.n_nodes, p.gamma) for i, j in self.pairs]
        self.src = np.array([i for i, _ in self.pairs], dtype=int)
        self.dst = np.array([j for _, j in self.pairs], dtype=int)
        self.c_pair = np.array([p.c[i, j] for i, j in self.pairs])
        self.d_pair = np.array([p.d[i, j] for i, j in self.pairs])
        self.zcol = np.array([p.z_index(i, j) for i, j in self.pairs], dtype=int)
        # scatter matrix adding each pair's term to the row of its target neuron
        self.to_dst = np.zeros((len(self.pairs), n))
        if self.pairs:
            self.to_dst[np.arange(len(self.pairs)), self.dst] = 1.0

    def _decay(self, u):
        p = self.p
        out = np.empty_like(u)
        for i in range(p.n):
            out[:, i] = p.decay_x[i](u[:, i]) * u[:, i]
        for k, (i, j) in enumerate(self.pairs):
            col = self.zcol[k]
            out[:, col] = p.decay_z[i][j](u[:, col]) * u[:, col]
        return out

    def couplings(self, W, eps: float, with_sigma: bool):
        """Per-pair Aumann endpoints and (optionally) the sigmoid integrals."""
        B = W.shape[0]
        P = len(self.pairs)
        lo = np.zeros((B, P))
        hi = np.zeros((B, P))
        sig = np.zeros((B, P)) if with_sigma else None
        b = b_of(eps)
        for k, (i, _) in enumerate(self.pairs):
            sp = self.plans[k].split(W[:, :, i], self.p.Gamma[i], b, eps if with_sigma else None)
            lo[:, k], hi[:, k] = aumann_from_masses(eps, sp.minus, sp.zero, sp.plus)
            if with_sigma:
                sig[:, k] = sp.sigma
        return lo, np.maximum(lo, hi), sig

    def evaluate(self, W, t: float, eps: float, *, sigmoidal=True, box=False, z_mode="sigma"):
        """Return ``(f, lo, hi)``; entries not requested are ``None``."""
        W = np.asarray(W, dtype=float)
        if W.ndim == 2:
            W = W[None]
        if W.shape[1:] != (self.n_nodes, self.p.dim):
            raise ValueError(f"window shape {W.shape[1:]} does not match ({self.n_nodes}, {self.p.dim})")
        if sigmoidal and not 0.0 < eps <= EPS_MAX:
            raise ValueError(f"sigmoidal right-hand side needs eps in (0, {EPS_MAX}]")
        if box and not 0.0 <= eps <= EPS_MAX:
            raise ValueError(f"inclusion box needs eps in [0, {EPS_MAX}]")
        if z_mode not in ("sigma", "chi"):
            raise ValueError("z_mode must be 'sigma' or 'chi'")
        n = self.p.n
        u = W[:, -1, :]
        base = -self._decay(u)
        base[:, :n] += self.p.stimulus_vector(t)
        want_sigma = sigmoidal or (box and z_mode == "sigma" and eps > 0)
        lo_a, hi_a, sig = self.couplings(W, eps, want_sigma)
        zc = u[:, self.zcol] - self.c_pair
        xpos = np.maximum(u[:, self.dst], 0.0)
        f = lo = hi = None
        if sigmoidal:
            f = base.copy()
            f[:, :n] += (zc * sig) @ self.to_dst
            f[:, self.zcol] += self.d_pair * sig * xpos
        if box:
            a, b = zc * lo_a, zc * hi_a
            lo = base.copy()
            hi = base.copy()
            lo[:, :n] += np.minimum(a, b) @ self.to_dst
            hi[:, :n] += np.maximum(a, b) @ self.to_dst
            gain = self.d_pair * xpos
            if z_mode == "sigma" and eps > 0:
                lo[:, self.zcol] += gain * sig
                hi[:, self.zcol] += gain * sig
            else:
                lo[:, self.zcol] += gain * lo_a
                hi[:, self.zcol] += gain * hi_a
        return f, lo, hi


@lru_cache(maxsize=64)
def evaluator_for(p: NetworkParams, step: float, n_nodes: int) -> NetworkEvaluator:
    return NetworkEvaluator(p, step, n_nodes)


def _check_history(p: NetworkParams, u: History):
    if u.dim != p.dim:
        raise ValueError(f"history dimension {u.dim} does not match n^2 = {p.dim}")
    if u.gamma != p.gamma:
        raise ValueError("history gamma differs from the network's gamma")


def rhs_sigmoidal(p: NetworkParams, eps: float, t: float, u: History) -> np.ndarray:
    """Sigmoidal vector field at time ``t`` and history ``u``."""
    _check_history(p, u)
    ev = evaluator_for(p, u.step, u.n_nodes)
    return ev.evaluate(u.samples, t, eps)[0][0]


def rhs_inclusion_box(p: NetworkParams, eps: float, t: float, u: History, z_mode: str = "sigma") -> Box:
    """Box of admissible velocities of the inflated inclusion.

    ``z_mode="sigma"`` keeps the sigmoid in the ``z`` rows (singletons for
    ``eps > 0``); ``"chi"`` uses the inflated step there as well, which makes
    the boxes nested in ``eps``.
    """
    _check_history(p, u)
    ev = evaluator_for(p, u.step, u.n_nodes)
    _, lo, hi = ev.evaluate(u.samples, t, eps, sigmoidal=False, box=True, z_mode=z_mode)
    return Box(lo[0], hi[0])


# hypotheses and constants -------------------------------------------------


@dataclass(frozen=True)
class AbsorbingConstants:
    """Witnesses of the dissipativity condition and derived constants."""

    lambda_x: dict
    lambda_z: dict
    nu_x: dict
    nu_z: dict
    eta: dict
    eps: dict
    omega: float
    xi: float
    beta: float
    K: float
    K_sum: float

    @property
    def gamma_max(self) -> float:
        return self.beta / 2.0


@dataclass
class HypothesisReport:
    D: bool
    M: bool
    I: bool
    L2: bool
    A: bool
    margin: float
    gamma_ok: bool
    constants: AbsorbingConstants | None = None
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.D and self.M and self.I and self.A and self.gamma_ok

    def lines(self) -> list:
        def verdict(flag):
            return "PASS" if flag else "FAIL"

        out = [
            f"(D) decay bounded below by alpha: {verdict(self.D)}",
            f"(M) finite gamma-moments: {verdict(self.M)}",
            f"(I) continuous stimuli: {verdict(self.I)}",
            f"    square-integrable stimuli: {'yes' if self.L2 else 'no'}",
            f"(A) sufficient condition: {verdict(self.A)} margin={self.margin!r}",
        ]
        ac = self.constants
        if ac is not None:
            out.append(
                f"    beta={ac.beta!r} K={ac.K!r} K_sum={ac.K_sum!r} omega={ac.omega!r} xi={ac.xi!r}"
            )
            out.append(f"    gamma < beta/2 = {ac.gamma_max!r}: {verdict(self.gamma_ok)}")
        else:
            out.append(f"    gamma feasibility: {verdict(self.gamma_ok)}")
        out.extend("    " + m for m in self.messages)
        return out


def _pair_label(i, j):
    return f"({i + 1},{j + 1})"


def absorbing_constants(p: NetworkParams) -> AbsorbingConstants | None:
    """Witness built from the uniform choice ``eta_ij = eps_ij = eta*``.

    ``eta*`` is the midpoint of the feasible interval; the remaining slack
    of the x rows is split in equal thirds between ``(n - 1) omega``,
    ``xi`` and the decay rate ``beta``.
    """
    alpha = p.alpha
    n = p.n
    if alpha <= 0:
        return None
    tv = {ij: p.mu[ij[0]][ij[1]].total_variation for ij in p.pairs}
    lower = max((tv[ij] ** 2 * (1 + float(p.d[ij]) ** 2) / (2 * alpha) for ij in p.pairs), default=0.0)
    upper = alpha / (n - 1) if n > 1 else math.inf
    if not lower < upper:
        return None
    eta_star = 0.5 * (lower + upper) if n > 1 else 1.0
    slack = 2 * alpha - 2 * (n - 1) * eta_star
    share = slack / 3.0
    omega = share / max(n - 1, 1)
    xi = share
    z_rates = [
        2 * alpha - tv[ij] ** 2 / eta_star - tv[ij] ** 2 * float(p.d[ij]) ** 2 / eta_star for ij in p.pairs
    ]
    beta = min([share] + z_rates)
    rows = [
        math.fsum(float(p.c[k, i]) ** 2 * tv[(k, i)] ** 2 for k in range(n) if k != i) for i in range(n)
    ]
    K = max(rows) / omega
    K_sum = math.fsum(rows) / omega
    label = {ij: _pair_label(*ij) for ij in p.pairs}
    return AbsorbingConstants(
        lambda_x={label[ij]: 1.0 for ij in p.pairs},
        lambda_z={label[ij]: tv[ij] ** 2 * float(p.d[ij]) ** 2 for ij in p.pairs},
        nu_x={label[ij]: 1.0 for ij in p.pairs},
        nu_z={label[ij]: tv[ij] ** 2 for ij in p.pairs},
        eta={label[ij]: eta_star for ij in p.pairs},
        eps={label[ij]: eta_star for ij in p.pairs},
        omega=omega,
        xi=xi,
        beta=beta,
        K=K,
        K_sum=K_sum,
    )


def check_hypotheses(p: NetworkParams) -> HypothesisReport:
    msgs = []
    D = p.alpha > 0
    if not D:
        msgs.append(f"alpha={p.alpha!r} must be positive")
    for i, a in enumerate(p.decay_x):
        if a.lower_bound() < p.alpha:
            D = False
            msgs.append(f"A_{i + 1} infimum {a.lower_bound()!r} below alpha")
    for i, j in p.pairs:
        if p.decay_z[i][j].lower_bound() < p.alpha:
            D = False
            msgs.append(f"B_{i + 1}{j + 1} infimum {p.decay_z[i][j].lower_bound()!r} below alpha")

    M = True
    for i, j in p.pairs:
        if math.isinf(gamma_moment(p.mu[i][j], p.gamma)):
            M = False
            msgs.append(f"(M) fails for mu{_pair_label(i, j)}: a density rate is <= gamma={p.gamma!r}")

    # catalog stimuli are continuous by construction
    I_ok = all(isinstance(s, StimulusFn) for s in p.stimulus)
    L2 = all(s.square_integrable for s in p.stimulus)

    a2 = 2 * p.alpha**2
    margin = min(
        (a2 - (p.n - 1) * p.mu[i][j].total_variation ** 2 * (1 + float(p.d[i, j]) ** 2) for i, j in p.pairs),
        default=a2,
    )
    A = D and margin > 0
    ac = absorbing_constants(p) if A else None
    if A and ac is None:
        A = False
    gamma_ok = ac is not None and p.gamma < ac.gamma_max
    if ac is not None and not gamma_ok:
        msgs.append(f"gamma={p.gamma!r} is not below beta/2={ac.gamma_max!r}")
    return HypothesisReport(D, M, I_ok, L2, A, margin, gamma_ok, ac, msgs)


def stimulus_energy(p: NetworkParams, t0: float, t: float) -> float:
    """``sum_i int_{t0}^t I_i^2``."""
    return math.fsum(s.square_integral(t0, t) for s in p.stimulus)


def absorbing_radius(ac: AbsorbingConstants, p: NetworkParams, t: float, t0: float = -math.inf) -> float:
    """Radius of the absorbing ball at time ``t``."""
    energy = stimulus_energy(p, t0, t)
    if not math.isfinite(energy):
        raise ValueError("stimulus energy diverges on the requested interval")
    return math.sqrt(ac.K / ac.beta) + math.sqrt(energy / ac.xi) + 1.0


def absorbing_bound(ac, p, t, t0, norm0, factor=None) -> float:
    """Right side of the history bound ``factor e^{-gamma(t-t0)} |u_t0| + ...`` (no ``+1``)."""
    factor = p.n if factor is None else factor
    return (
        factor * math.exp(-p.gamma * (t - t0)) * norm0
        + math.sqrt(ac.K / ac.beta)
        + math.sqrt(stimulus_energy(p, t0, t) / ac.xi)
    )


def solution_bound_constants(p: NetworkParams, r: float, a: float, b: float, T: float):
    """``(k1, k2)`` with ``|u_t|_gamma <= k1 exp(k2 (t - t0))`` for data in the ``r`` ball.

    Valid for every ``eps`` and every ``t0`` in ``[a, b]`` on ``[t0, t0 + T]``.
    """
    n = p.n
    tv = {ij: p.mu[ij[0]][ij[1]].total_variation for ij in p.pairs}
    coef_x = -2 * p.alpha + 3 * (n - 1) + 1
    coef_z = max((-2 * p.alpha + tv[ij] ** 2 * (1 + float(p.d[ij]) ** 2) for ij in p.pairs), default=-math.inf)
    k4 = [s.sup_abs(a, b + T) for s in p.stimulus]
    const = math.fsum(float(p.c[ij]) ** 2 * tv[ij] ** 2 for ij in p.pairs) + math.fsum(v * v for v in k4)
    k = max(coef_x, coef_z, const, 1e-12)
    k1 = max(r, math.sqrt(1 + n * n * r * r))
    return k1, k / 2.0


def lipschitz_constant(p: NetworkParams, eps: float, r: float) -> float:
    """Sup-norm Lipschitz bound of the sigmoidal field on the ``r`` ball of histories."""
    n = p.n
    slope = 1.0 / eps
    rows = []
    for i in range(n):
        a = p.decay_x[i]
        v = a.sup_on(r) + r * a.lipschitz_on(r)
        for k in range(n):
            if k == i:
                continue
            mu = p.mu[k][i]
            v += mu.total_variation + (r + p.c[k, i]) * slope * gamma_moment(mu, p.gamma)
        rows.append(v)
    for i, j in p.pairs:
        bz = p.decay_z[i][j]
        mu = p.mu[i][j]
        v = bz.sup_on(r) + r * bz.lipschitz_on(r)
        v += p.d[i, j] * (r * slope * gamma_moment(mu, p.gamma) + mu.total_variation)
        rows.append(v)
    return max(rows)


def rhs_bound(p: NetworkParams, r: float, a: float, b: float) -> float:
    """Bound of the sigmoidal field on ``[a, b]`` times the ``r`` ball, for every ``eps``."""
    n = p.n
    rows = []
    for i in range(n):
        v = p.decay_x[i].sup_on(r) * r + p.stimulus[i].sup_abs(a, b)
        for k in range(n):
            if k != i:
                v += (r + p.c[k, i]) * p.mu[k][i].total_variation
        rows.append(v)
    for i, j in p.pairs:
        rows.append(p.decay_z[i][j].sup_on(r) * r + p.d[i, j] * p.mu[i][j].total_variation * r)
    return max(rows)
