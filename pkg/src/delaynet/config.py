"""Experiment configuration files (JSON)."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attractor import Grid
from .dynamics import IntegratorConfig, Method, SelectorPolicy
from .measures import DelayMeasure
from .model import DecayFn, NetworkParams, StimulusFn
from .phase_space import History, default_window

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing '{key}' in {where}")
    return d[key]


def _decay(entry, where) -> DecayFn:
    try:
        if isinstance(entry, (int, float)):
            return DecayFn.constant(float(entry))
        return DecayFn(entry["kind"], tuple(entry.get("params", ())))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _stimulus(entry, where) -> StimulusFn:
    try:
        if isinstance(entry, (int, float)):
            return StimulusFn.constant(float(entry))
        if entry["kind"] == "sum":
            return StimulusFn.sum(*[_stimulus(t, where) for t in entry.get("terms", [])])
        return StimulusFn(entry["kind"], tuple(entry.get("params", ())))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _measure(entry, where) -> DelayMeasure:
    try:
        return DelayMeasure(
            atoms=tuple(tuple(a) for a in entry.get("atoms", ())),
            exp_terms=tuple(tuple(e) for e in entry.get("exp_terms", ())),
        )
    except (AttributeError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _pair_table(entry, n, build, where):
    """``{"default": ..., "i,j": ...}`` (1-based) or a single value for every pair."""
    table = [[None] * n for _ in range(n)]
    if isinstance(entry, dict) and ("default" in entry or any("," in k for k in entry)):
        default = entry.get("default")
        for key in entry:
            if key == "default":
                continue
            try:
                i, j = (int(v) - 1 for v in key.split(","))
            except ValueError:
                raise ConfigError(f"{where}: bad pair key '{key}'") from None
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ConfigError(f"{where}: pair '{key}' out of range")
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                item = entry.get(f"{i + 1},{j + 1}", default)
                if item is None:
                    raise ConfigError(f"{where}: no entry for pair '{i + 1},{j + 1}'")
                table[i][j] = build(item, f"{where}[{i + 1},{j + 1}]")
    else:
        for i in range(n):
            for j in range(n):
                if i != j:
                    table[i][j] = build(entry, f"{where}[{i + 1},{j + 1}]")
    return tuple(tuple(r) for r in table)


def _per_neuron(entry, n, build, where):
    if isinstance(entry, list):
        if len(entry) != n:
            raise ConfigError(f"{where}: expected {n} entries")
        return tuple(build(s, f"{where}[{k + 1}]") for k, s in enumerate(entry))
    return tuple(build(entry, f"{where}[{k + 1}]") for k in range(n))


def _matrix(entry, n, where) -> np.ndarray:
    try:
        if isinstance(entry, (int, float)):
            return np.full((n, n), float(entry))
        arr = np.array(entry, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number or an n x n matrix") from None
    if arr.shape != (n, n):
        raise ConfigError(f"{where}: expected shape ({n}, {n})")
    return arr


def parse_network(entry: dict) -> NetworkParams:
    n = _req(entry, "n", "network")
    if not isinstance(n, int) or n < 1:
        raise ConfigError("network.n must be a positive integer")
    alpha = float(_req(entry, "alpha", "network"))
    gamma = float(_req(entry, "gamma", "network"))
    decay_x = _per_neuron(entry.get("decay_x", alpha), n, _decay, "network.decay_x")
    decay_z = _pair_table(entry.get("decay_z", alpha), n, _decay, "network.decay_z")
    mu = _pair_table(_req(entry, "mu", "network"), n, _measure, "network.mu")
    stim = _per_neuron(entry.get("stimulus", 0.0), n, _stimulus, "network.stimulus")
    G = entry.get("Gamma", 0.0)
    G = np.full(n, float(G)) if isinstance(G, (int, float)) else np.array(G, dtype=float)
    if G.shape != (n,):
        raise ConfigError("network.Gamma must be a number or a list of n numbers")
    try:
        return NetworkParams(
            n=n,
            decay_x=decay_x,
            decay_z=decay_z,
            alpha=alpha,
            c=_matrix(entry.get("c", 0.0), n, "network.c"),
            d=_matrix(entry.get("d", 0.0), n, "network.d"),
            Gamma=G,
            mu=mu,
            stimulus=stim,
            gamma=gamma,
        )
    except ValueError as exc:
        raise ConfigError(f"network: {exc}") from None


@dataclass
class ExperimentConfig:
    raw: dict
    sha256: str
    seed: int
    network: NetworkParams
    step: float
    window: float | None
    initial: dict
    run: dict
    attractor: dict
    output_dir: str
    threads: int = 1
    meta: dict = field(default_factory=dict)

    def initial_history(self) -> History:
        p = self.network
        entry = self.initial
        kind = entry.get("kind", "constant")
        value = np.atleast_1d(np.array(entry.get("value", 0.0), dtype=float))
        if value.size == 1:
            value = np.full(p.dim, value[0])
        if value.shape != (p.dim,):
            raise ConfigError(f"initial.value needs {p.dim} entries")
        window = self.window
        if window is None:
            window = default_window(p.gamma, float(np.max(np.abs(value))), self.step)
        if kind == "constant":
            return History.constant(value, p.gamma, window, self.step)
        if kind == "profile":
            kappa = float(entry.get("kappa", 0.0))
            if not 0.0 <= kappa <= p.gamma:
                raise ConfigError("initial.kappa must lie in [0, gamma]")
            return History.from_function(
                lambda t: np.exp(-kappa * t)[:, None] * value[None, :], p.gamma, window, self.step
            )
        raise ConfigError(f"unknown initial kind '{kind}'")

    def integrator(self) -> IntegratorConfig:
        r = self.run
        try:
            return IntegratorConfig(
                method=r.get("method", "euler"),
                step=self.step,
                horizon=float(_req(r, "horizon", "run")),
                t0=float(r.get("t0", 0.0)),
                residual_tol=float(r.get("residual_tol", math.inf)),
            )
        except ValueError as exc:
            raise ConfigError(f"run: {exc}") from None

    def policies(self, section: dict) -> list:
        try:
            return [SelectorPolicy.parse(q) for q in section.get("policies", ["lower", "upper"])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"policies: {exc}") from None

    def eps_list(self, section: dict, where: str) -> list:
        eps = section.get("eps_list")
        if not isinstance(eps, list) or not eps:
            raise ConfigError(f"{where}.eps_list must be a nonempty list")
        try:
            return [float(e) for e in eps]
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.eps_list must hold numbers") from None

    def grid(self) -> Grid:
        if self.window is None:
            raise ConfigError("attractor runs need grid.window")
        return Grid(self.step, self.window, Method(self.attractor.get("method", "euler")))


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    if "seed" not in raw or not isinstance(raw["seed"], int):
        raise ConfigError("an integer 'seed' is required")
    network = parse_network(_req(raw, "network", "config"))
    grid = _req(raw, "grid", "config")
    step = float(_req(grid, "step", "grid"))
    window = grid.get("window")
    if not step > 0:
        raise ConfigError("grid.step must be positive")
    threads = raw.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads must be a positive integer")
    return ExperimentConfig(
        raw=raw,
        sha256=config_hash(raw),
        seed=raw["seed"],
        network=network,
        step=step,
        window=None if window is None else float(window),
        initial=raw.get("initial", {}),
        run=raw.get("run", {}),
        attractor=raw.get("attractor", {}),
        output_dir=raw.get("output", {}).get("dir", "out"),
        threads=threads,
    )


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)
