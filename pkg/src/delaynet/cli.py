"""Command-line runner: ``delaynet check|simulate|converge|attractor CONFIG``."""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .attractor import SWEEP_COLUMNS, attractor_convergence_sweep
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import (
    NumericalError,
    integrate_inclusion,
    integrate_sigmoidal,
    residual_membership,
    sigmoidal_convergence_sweep,
)
from .io import fmt, provenance_line, write_csv, write_json
from .model import absorbing_bound, check_hypotheses, solution_bound_constants
from .phase_space import history_to_csv

EXIT_OK, EXIT_HYPOTHESIS, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

CONVERGE_COLUMNS = ("eps", "eps_next", "sup_distance", "residual_heaviside", "residual_own")


def _out_dir(cfg: ExperimentConfig, override) -> Path:
    return Path(override if override is not None else cfg.output_dir)


def _require_hypotheses(cfg: ExperimentConfig):
    report = check_hypotheses(cfg.network)
    if not report.ok:
        for line in report.lines():
            print(line)
        return None
    return report


def cmd_check(cfg: ExperimentConfig, out=None, threads=None) -> int:
    report = check_hypotheses(cfg.network)
    print(f"config_sha256={cfg.sha256} seed={cfg.seed}")
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_HYPOTHESIS


def _trajectory_rows(rec):
    for t, u, g in zip(rec.times, rec.states, rec.gamma_norms):
        yield [float(t), *u.tolist(), float(g)]


def _summaries(cfg, rec, eps, report, z_mode):
    p = cfg.network
    run = cfg.run
    t0 = float(rec.times[0])
    res = residual_membership(rec, p, eps, tol=float(run.get("residual_tol", math.inf)), z_mode=z_mode)
    norm0 = float(rec.gamma_norms[0])
    k1, k2 = solution_bound_constants(p, norm0, t0, t0, float(rec.times[-1] - t0))
    env = k1 * np.exp(k2 * (rec.times - t0))
    env_gap = float(np.max(rec.gamma_norms - env))
    ac = report.constants
    absorb = np.array([absorbing_bound(ac, p, float(t), t0, norm0) for t in rec.times])
    abs_gap = float(np.max(rec.gamma_norms - absorb))
    summary = {
        "provenance": rec.provenance,
        "residual": {
            "max_violation": res.max_violation,
            "step": res.step,
            "component": res.component,
            "tolerance": run.get("residual_tol"),
            "passed": res.passed,
        },
        "envelope": {"k1": k1, "k2": k2, "max_excess": env_gap, "passed": env_gap <= 0},
        "absorbing_bound": {"max_excess": abs_gap, "passed": abs_gap <= 1e-3},
        "final_state": rec.states[-1],
    }
    ref = run.get("reference_final")
    if ref is not None:
        summary["reference_deviation"] = float(np.max(np.abs(rec.states[-1] - np.asarray(ref, dtype=float))))
    return summary


def _print_summary(label, s):
    r = s["residual"]
    print(
        f"[{label}] residual max={fmt(r['max_violation'])} at step {r['step']} "
        f"component {r['component']} {'PASS' if r['passed'] else 'FAIL'}"
    )
    e = s["envelope"]
    print(f"[{label}] envelope k1={fmt(e['k1'])} k2={fmt(e['k2'])} {'PASS' if e['passed'] else 'FAIL'}")
    a = s["absorbing_bound"]
    print(f"[{label}] absorbing bound excess={fmt(a['max_excess'])} {'PASS' if a['passed'] else 'FAIL'}")
    print(f"[{label}] final state " + " ".join(fmt(float(v)) for v in s["final_state"]))
    if "reference_deviation" in s:
        print(f"[{label}] deviation from reference final state {fmt(s['reference_deviation'])}")


def cmd_simulate(cfg: ExperimentConfig, out=None, threads=None) -> int:
    report = _require_hypotheses(cfg)
    if report is None:
        return EXIT_HYPOTHESIS
    p = cfg.network
    run = cfg.run
    mode = run.get("mode", "sigmoidal")
    icfg = cfg.integrator()
    u0 = cfg.initial_history()
    eps = float(run.get("eps", 0.1))
    z_mode = run.get("z_mode", "sigma")
    outdir = _out_dir(cfg, out)
    cols = ["t"] + p.component_names() + ["gamma_norm"]
    if mode == "sigmoidal":
        jobs = [("sigmoidal", lambda: integrate_sigmoidal(p, eps, u0, icfg))]
    elif mode == "inclusion":
        jobs = [
            (q.label, (lambda q=q: integrate_inclusion(p, eps, u0, icfg, q, z_mode=z_mode)))
            for q in cfg.policies(run)
        ]
    else:
        raise ConfigError(f"unknown run.mode '{mode}'")
    n_threads = threads or cfg.threads
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        recs = list(pool.map(lambda job: job[1](), jobs))
    for (label, _), rec in zip(jobs, recs):
        suffix = "" if mode == "sigmoidal" else f"_{label}"
        write_csv(outdir / f"trajectory{suffix}.csv", cols, _trajectory_rows(rec), cfg.sha256, cfg.seed)
        s = _summaries(cfg, rec, eps, report, z_mode)
        write_json(outdir / f"residual{suffix}.json", s, cfg.sha256, cfg.seed)
        _print_summary(label, s)
    return EXIT_OK


def cmd_converge(cfg: ExperimentConfig, out=None, threads=None) -> int:
    eps_list = cfg.eps_list(cfg.run, "run")
    report = _require_hypotheses(cfg)
    if report is None:
        return EXIT_HYPOTHESIS
    rows = sigmoidal_convergence_sweep(
        cfg.network, cfg.initial_history(), cfg.integrator(), eps_list,
        z_mode=cfg.run.get("z_mode", "sigma"),
    )
    outdir = _out_dir(cfg, out)
    write_csv(
        outdir / "converge.csv", CONVERGE_COLUMNS,
        ([r[c] for c in CONVERGE_COLUMNS] for r in rows), cfg.sha256, cfg.seed,
    )
    write_json(outdir / "manifest.json", {"command": "converge", "rows": rows}, cfg.sha256, cfg.seed)
    _print_table(CONVERGE_COLUMNS, rows)
    return EXIT_OK


def _print_table(columns, rows):
    print("  ".join(f"{c:>22}" for c in columns))
    for r in rows:
        print("  ".join(f"{_short(r[c]):>22}" for c in columns))


def _short(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def cmd_attractor(cfg: ExperimentConfig, out=None, threads=None) -> int:
    a = cfg.attractor
    eps_list = cfg.eps_list(a, "attractor")
    report = _require_hypotheses(cfg)
    if report is None:
        return EXIT_HYPOTHESIS
    if not report.L2:
        print("attractor runs need square-integrable stimuli")
        return EXIT_HYPOTHESIS
    try:
        t = float(a.get("t", 0.0))
        taus = [float(v) for v in a["taus"]]
        samples = int(a.get("samples", 10))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"attractor: {exc}") from None
    estimates = {}
    rows = attractor_convergence_sweep(
        cfg.network, t, eps_list, taus, samples, cfg.policies(a), cfg.seed,
        grid=cfg.grid(), threads=threads or cfg.threads, estimates=estimates,
    )
    outdir = _out_dir(cfg, out)
    write_csv(
        outdir / "attractor.csv", SWEEP_COLUMNS,
        ([r[c] for c in SWEEP_COLUMNS] for r in rows), cfg.sha256, cfg.seed,
    )
    names = cfg.network.component_names()
    manifest = {"command": "attractor", "t": t, "taus": taus, "eps_list": eps_list, "rows": rows, "clouds": []}
    for (mode, e), est in sorted(estimates.items(), key=lambda kv: (kv[0][0], -kv[0][1])):
        fname = f"clouds/{mode}_eps{e!r}.csv"
        path = outdir / fname
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(provenance_line(cfg.sha256, cfg.seed))
            for k, h in enumerate(est.cloud):
                history_to_csv(h, fh, names, member=k, header=(k == 0))
        manifest["clouds"].append(
            {
                "file": fname,
                "mode": mode,
                "eps": e,
                "policies": list(est.policies),
                "members": len(est.cloud),
                "excluded": est.excluded,
                "radius": est.radius,
                "absorption_time": est.absorption_time,
                "drift": [list(d) for d in est.drift],
            }
        )
    write_json(outdir / "manifest.json", manifest, cfg.sha256, cfg.seed)
    _print_table(SWEEP_COLUMNS, rows)
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "attractor": cmd_attractor,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="delaynet", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("config", help="JSON experiment file")
    ap.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("config error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args.out, args.threads)
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
