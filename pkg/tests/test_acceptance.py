"""Acceptance criteria 1-11. Each test prints and records one PASS/FAIL line."""

import filecmp
import itertools
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import decoupled_network, pulse_response, reference_network
from delaynet.attractor import Grid, attractor_convergence_sweep, pullback_estimate, sample_ball
from delaynet.dynamics import IntegratorConfig, integrate_sigmoidal, integrate_sigmoidal_batch, residual_membership
from delaynet.measures import DelayMeasure, Path as ScalarPath
from delaynet.model import (
    StimulusFn,
    absorbing_bound,
    check_hypotheses,
    lipschitz_constant,
    rhs_bound,
    solution_bound_constants,
)
from delaynet.phase_space import History, distance_gamma
from delaynet.set_valued import Interval, aumann_chi_integral, b_of, chi, hausdorff, sigmoid

ROOT = Path(__file__).resolve().parents[1]


def verdict(acceptance, number, name, passed, detail, elapsed, budget):
    ok = bool(passed) and elapsed < budget
    detail = f"{detail}; {elapsed:.1f}s (budget {budget:g}s)"
    acceptance(number, name, ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {name}: {detail}")
    assert ok, detail


# 1 ------------------------------------------------------------------------


def path_value(values, step, gamma, t):
    """Independent evaluation: np.interp on the window, exponential growth beyond it."""
    H = step * (len(values) - 1)
    if t < -H:
        return values[0] * math.exp(gamma * (-H - t))
    return float(np.interp(t, -H + step * np.arange(len(values)), values))


def brute_force_aumann(eps, values, step, gamma, threshold, atoms):
    """Enumerate every extreme selector: each atom takes an endpoint of its chi interval."""
    choices = []
    for t, w in atoms:
        I = chi(eps, path_value(values, step, gamma, t) - threshold)
        choices.append((w * I.lo, w * I.hi))
    sums = [math.fsum(c) for c in itertools.product(*choices)]
    return min(sums), max(sums)


def test_criterion_01_aumann_oracle(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    gamma, step = 0.1, 0.1
    worst = 0.0
    for case in range(200):
        n_nodes = int(rng.integers(5, 40))
        H = step * (n_nodes - 1)
        values = rng.uniform(-1.0, 1.5, size=n_nodes)
        threshold = float(rng.uniform(-0.5, 1.0))
        eps = float(rng.choice([0.0, rng.uniform(1e-3, 0.2)]))
        k = int(rng.integers(1, 7))
        locs = -rng.uniform(0.0, 1.5 * H, size=k)
        if case % 4 == 0:
            # land some atoms on grid nodes sitting exactly on a band edge
            node = int(rng.integers(0, n_nodes))
            values[node] = threshold + b_of(eps) * rng.choice([-1.0, 1.0])
            locs[0] = -H + step * node
        atoms = tuple((float(t), float(w)) for t, w in zip(locs, rng.uniform(0.1, 2.0, size=k)))
        mu = DelayMeasure(atoms=atoms)
        got = aumann_chi_integral(eps, ScalarPath(values, step, gamma), threshold, mu)
        lo, hi = brute_force_aumann(eps, values, step, gamma, threshold, mu.atoms)
        worst = max(worst, abs(got.lo - lo), abs(got.hi - hi))
    verdict(acceptance, 1, "Aumann oracle equivalence", worst <= 1e-12, f"max endpoint error {worst:.2e} over 200 cases",
            time.perf_counter() - start, 10)


# 2 ------------------------------------------------------------------------


def test_criterion_02_hausdorff_laws(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2)

    def draw():
        a = rng.uniform(-10, 10)
        return Interval(a, a + rng.uniform(0, 5))

    worst_scale = worst_sub = 0.0
    for _ in range(10_000):
        A, B, C, D = draw(), draw(), draw(), draw()
        t = rng.uniform(0, 10)
        worst_scale = max(worst_scale, abs(hausdorff(t * A, t * B) - t * hausdorff(A, B)))
        worst_sub = max(worst_sub, hausdorff(A + B, C + D) - hausdorff(A, C) - hausdorff(B, D))
    ok = worst_scale <= 1e-12 and worst_sub <= 1e-12
    verdict(acceptance, 2, "Hausdorff scaling and subadditivity", ok,
            f"scaling error {worst_scale:.2e}, subadditivity excess {worst_sub:.2e}", time.perf_counter() - start, 5)


# 3 ------------------------------------------------------------------------


def test_criterion_03_sigmoid_chi(acceptance):
    start = time.perf_counter()
    eps_grid = np.linspace(0.2, 0.0, 41)[:-1]
    s_grid = np.linspace(-2.0, 2.0, 1000)
    outside = 0
    edge_err = 0.0
    for e in eps_grid:
        sig = sigmoid(e, s_grid)
        for s, v in zip(s_grid, sig):
            I = chi(e, s)
            outside += not (I.lo - 1e-12 <= v <= I.hi + 1e-12)
        b = b_of(e)
        edge_err = max(edge_err, abs(sigmoid(e, b) - (1 - e)), abs(sigmoid(e, -b) - e))
    ok = outside == 0 and edge_err <= 1e-12
    verdict(acceptance, 3, "sigmoid lies in chi", ok, f"{outside} points outside, band-edge error {edge_err:.2e}",
            time.perf_counter() - start, 1)


# 4 ------------------------------------------------------------------------


def test_criterion_04_nesting(acceptance):
    start = time.perf_counter()
    eps_grid = [0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2]
    s_grid = np.r_[np.linspace(-1, 1, 401), [b_of(e) for e in eps_grid], [-b_of(e) for e in eps_grid]]
    chi_fail = sum(
        not chi(e1, s).issubset(chi(e2, s)) for e1, e2 in itertools.combinations(eps_grid, 2) for s in s_grid
    )
    rng = np.random.default_rng(4)
    mu = DelayMeasure.exponential(1.0, 1.0) + DelayMeasure.atom(-1.0, 0.5) + DelayMeasure.atom(-0.35, 0.25)
    aumann_fail = 0
    for _ in range(25):
        x = ScalarPath(0.2 + rng.normal(scale=0.3, size=41), 0.1, 0.1)
        sets = {e: aumann_chi_integral(e, x, 0.2, mu) for e in eps_grid}
        aumann_fail += sum(not sets[e1].issubset(sets[e2], tol=1e-12) for e1, e2 in itertools.combinations(eps_grid, 2))
    ok = chi_fail == 0 and aumann_fail == 0
    verdict(acceptance, 4, "nesting in eps", ok, f"chi violations {chi_fail}, Aumann violations {aumann_fail}",
            time.perf_counter() - start, 5)


# 5 and 6 ----------------------------------------------------------------

ENSEMBLE_T0, ENSEMBLE_T, ENSEMBLE_H = -2.0, 10.0, 0.01
ENSEMBLE_RUNS = (("atom", 0.2), ("atom", 0.05), ("exp", 0.1))


@pytest.fixture(scope="module")
def ensemble():
    start = time.perf_counter()
    out = []
    for variant, eps in ENSEMBLE_RUNS:
        p = reference_network(variant)
        rng = np.random.default_rng([5, int(eps * 100)])
        init = sample_ball(1000, 5.0, p.dim, p.gamma, 2.0, ENSEMBLE_H, rng)
        cfg = IntegratorConfig("euler", ENSEMBLE_H, ENSEMBLE_T, t0=ENSEMBLE_T0)
        batch = integrate_sigmoidal_batch(p, eps, init, cfg)
        out.append((variant, eps, p, batch, np.array([u.norm() for u in init])))
    return out, time.perf_counter() - start


def test_criterion_05_envelope(acceptance, ensemble):
    runs, elapsed = ensemble
    start = time.perf_counter()
    worst = -math.inf
    for _, _, p, batch, _ in runs:
        k1, k2 = solution_bound_constants(p, 5.0, ENSEMBLE_T0, ENSEMBLE_T0, ENSEMBLE_T)
        env = k1 * np.exp(k2 * (batch.times - ENSEMBLE_T0))
        worst = max(worst, float(np.max(batch.gamma_norms - env[None, :])))
    verdict(acceptance, 5, "solution envelope", worst <= 0.0,
            f"max excess over the envelope {worst:.3g} (3 x 1000 trajectories)",
            elapsed + time.perf_counter() - start, 120)


def test_criterion_06_absorbing_bound(acceptance, ensemble):
    runs, elapsed = ensemble
    start = time.perf_counter()
    worst = -math.inf
    for _, _, p, batch, norm0 in runs:
        ac = check_hypotheses(p).constants
        tail = np.array([absorbing_bound(ac, p, float(t), ENSEMBLE_T0, 0.0) for t in batch.times])
        decay = 2.0 * np.exp(-p.gamma * (batch.times - ENSEMBLE_T0))
        bound = decay[None, :] * norm0[:, None] + tail[None, :] + 1e-3
        worst = max(worst, float(np.max(batch.gamma_norms - bound)))
    verdict(acceptance, 6, "absorbing bound", worst <= 0.0, f"max excess over the bound {worst:.3g}",
            elapsed + time.perf_counter() - start, 120)


# 7 ------------------------------------------------------------------------


def test_criterion_07_inclusion_membership(acceptance):
    start = time.perf_counter()
    eps, T, t0 = 0.1, 5.0, -1.0
    lines, ok = [], True
    for variant in ("atom", "exp"):
        p = reference_network(variant)
        res = {}
        for h in (1e-2, 5e-3):
            u0 = History.from_function(
                lambda t: np.exp(-0.02 * t)[:, None] * np.array([0.5, -0.3, 0.2, 0.4])[None, :], p.gamma, 2.0, h
            )
            rec = integrate_sigmoidal(p, eps, u0, IntegratorConfig("rk4_interp", h, T, t0=t0))
            r = float(np.max(rec.gamma_norms))
            C = lipschitz_constant(p, eps, r) * rhs_bound(p, r, t0, t0 + T) + max(s.sup_abs_derivative() for s in p.stimulus)
            res[h] = residual_membership(rec, p, eps).max_violation
            ok &= res[h] <= C * h
        ratio = res[1e-2] / res[5e-3]
        ok &= 1.6 <= ratio <= 2.4
        lines.append(f"{variant}: residual {res[1e-2]:.3g} -> {res[5e-3]:.3g}, ratio {ratio:.3f}, C*h {C * 1e-2:.3g}")
    verdict(acceptance, 7, "inclusion membership", ok, "; ".join(lines), time.perf_counter() - start, 60)


# 8 ------------------------------------------------------------------------


def test_criterion_08_integrator_order(acceptance):
    start = time.perf_counter()
    p = decoupled_network()
    T = 2.0
    slopes = {}
    for method in ("euler", "rk4_interp"):
        errs = []
        steps = (0.1, 0.05, 0.025)
        for h in steps:
            u0 = History.constant([1.0], p.gamma, 1.0, h)
            rec = integrate_sigmoidal(p, 0.1, u0, IntegratorConfig(method, h, T))
            errs.append(float(np.max(np.abs(rec.states[:, 0] - np.exp(-rec.times)))))
        slopes[method] = float(np.polyfit(np.log(steps), np.log(errs), 1)[0])
    ok = slopes["euler"] >= 0.95 and slopes["rk4_interp"] >= 1.9
    verdict(acceptance, 8, "integrator order", ok, f"Euler slope {slopes['euler']:.3f}, RK4 slope {slopes['rk4_interp']:.3f}",
            time.perf_counter() - start, 10)


# 9 ------------------------------------------------------------------------


def test_criterion_09_attractor_sanity(acceptance):
    start = time.perf_counter()
    amp, center, width = 1.0, 0.0, 1.0
    p = decoupled_network(StimulusFn.pulse(amp, center, width), gamma=0.1)
    H, h, t = 2.0, 0.01, 1.0
    est = pullback_estimate(p, 0.1, "sigmoidal", t, [10.0, 20.0], 10, seed=9, grid=Grid(h, H, "rk4_interp"))
    s = -H + h * np.arange(int(round(H / h)) + 1)
    target = History(p.gamma, H, h, pulse_response(t + s, amp, center, width)[:, None])
    err = max(distance_gamma(u, target) for u in est.clouds[20.0])
    drift = est.last_drift
    ok = err <= 1e-3 and drift <= 1e-3
    verdict(acceptance, 9, "attractor sanity", ok, f"distance to closed form {err:.2e}, drift {drift:.2e}",
            time.perf_counter() - start, 60)


# 10 -----------------------------------------------------------------------


def test_criterion_10_attractor_trend(acceptance):
    start = time.perf_counter()
    p = reference_network()
    eps_list = [0.2, 0.1, 0.05, 0.02, 0.0]
    policies = ["lower", "upper", "midpoint", {"kind": "random", "seed": 1}, {"kind": "bang_bang", "period": 0.5}]
    rows = attractor_convergence_sweep(p, 0.0, eps_list, [10.0, 20.0], 20, policies, 10, grid=Grid(0.01, 2.0, "euler"))
    rows = [r for r in rows if r["eps"] > 0]
    tol = 2.0 * max(max(r["drift_phi_eps"] for r in rows), max(r["drift_s_eps"] for r in rows))
    d = [r["dist_phi_eps_phi0"] for r in rows]
    own = [r["own_dist_phi_eps_phi0"] for r in rows]
    mono = all(b <= a + tol for a, b in zip(d, d[1:]))
    own_mono = all(b <= a + tol for a, b in zip(own, own[1:]))
    contain = all(r["dist_phi0_phi_eps"] <= tol for r in rows)
    ok = mono and own_mono and contain
    detail = (
        "dist " + ", ".join(f"{v:.4f}" for v in d)
        + "; own " + ", ".join(f"{v:.4f}" for v in own)
        + f"; max reverse {max(r['dist_phi0_phi_eps'] for r in rows):.2e}; tolerance {tol:.3g}"
    )
    verdict(acceptance, 10, "attractor eps-trend", ok, detail, time.perf_counter() - start, 300)


# 11 -----------------------------------------------------------------------


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "delaynet.cli", *args], cwd=cwd, capture_output=True, text=True)


def same_tree(a: Path, b: Path) -> bool:
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    return files_a == files_b and all(filecmp.cmp(a / f, b / f, shallow=False) for f in files_a)


def test_criterion_11_reproducibility(acceptance, tmp_path):
    start = time.perf_counter()
    cfg = str(ROOT / "configs" / "reference.json")
    ok, notes = True, []
    for cmd in ("check", "simulate", "converge", "attractor"):
        outs = []
        for k in range(2):
            out = tmp_path / f"{cmd}{k}"
            res = run_cli([cmd, cfg, "--out", str(out)], ROOT)
            ok &= res.returncode == 0
            outs.append((res.stdout, out))
        same = outs[0][0] == outs[1][0]
        if cmd != "check":
            same &= same_tree(outs[0][1], outs[1][1]) and any(outs[0][1].rglob("*"))
        ok &= same
        notes.append(f"{cmd} {'identical' if same else 'differs'}")
    verdict(acceptance, 11, "reproducibility", ok, ", ".join(notes), time.perf_counter() - start, 120)
