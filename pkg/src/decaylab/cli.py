"""Batch front-end: ``decaylab <task> --config <path> [--out <dir>] [--verbose]``.

Exit status: 0 success, 2 configuration error, 3 damping hypothesis failure
(``a == 0``), 4 spectrum on the imaginary axis, 5 eigensolver failure,
6 I/O error.  Outputs written by a failed run are removed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import TASKS, RunConfig, config_to_dict, parse_config
from .damping import build_damping, fat_cantor_intervals, support_intervals
from .decay import (bound_stability, burq_prediction, check_monotone, fit_log_decay,
                    log_spaced_times)
from .errors import (ConfigError, DecaylabError, EigensolverError, HypothesisError,
                     SpectrumOnAxisError, TrivialDampingError)
from .geometry import assemble
from .inequalities import (constant_curve, fit_spectral_constants, poincare_constant,
                           region_from_intervals, region_from_mask, unique_continuation_check,
                           whole_domain)
from .resolvent import fit_growth, resolvent_norm, scan_M
from .semigroup import (evolve_oracle, evolve_stepped, schrodinger_generator, wave_generator,
                        wave_state)
from .spectral import eigendecompose

log = logging.getLogger("decaylab")

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_AXIS, EXIT_EIGEN, EXIT_IO = 0, 2, 3, 4, 5, 6

CSV_COLUMNS = {
    "evolution": ("t", "energy", "bound_curve"),
    "scan": ("tau", "norm", "sigma_min", "running_M"),
    "constants": ("Lambda", "kappa", "flagged"),
    "eigen": ("k", "lambda_sq", "r_omega"),
}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class RunContext:
    cfg: RunConfig
    out: Path
    files: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    report: list = field(default_factory=list)

    def write_csv(self, name: str, schema: str, rows) -> tuple[int, int]:
        """Write rows; returns the 1-based data-row range for citations."""
        path = self.out / name
        rows = list(rows)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(CSV_COLUMNS[schema])
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(path)
        return 1, len(rows)

    def timed(self, label):
        ctx = self

        class _T:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                ctx.timings[label] = round(time.perf_counter() - self.t0, 6)

        return _T()


def _setup(cfg: RunConfig, ctx: RunContext):
    with ctx.timed("assemble"):
        op = assemble(cfg.domain, cfg.metric)
    n = min(cfg.numerics.modes, op.n_free)
    with ctx.timed("eigendecompose"):
        basis = eigendecompose(op, n)
    profile = build_damping(cfg.damping, op)
    ctx.derived["damping"] = {"alpha": profile.alpha, "beta": profile.beta, "vol_F": profile.vol_F,
                              "trivial": profile.trivial}
    ctx.derived["modes"] = n
    return op, basis, profile


def _initial_coefficients(cfg: RunConfig, basis):
    k = np.arange(basis.size)
    lam2 = np.clip(basis.eigenvalues, 0.0, None)
    s = cfg.initial.smoothness
    sign = (-1.0) ** k
    u = sign * (1 + lam2) ** (-s / 2) / (1 + k)
    v = cfg.initial.velocity * sign * (1 + lam2) ** (-(s - 1) / 2) / (1 + k)
    return u, v


def _simulate(cfg: RunConfig, ctx: RunContext, setup, kind: str):
    op, basis, profile = setup
    num = cfg.numerics
    u, v = _initial_coefficients(cfg, basis)
    if kind == "wave":
        gen = wave_generator(basis, profile)
        state0 = wave_state(gen, u, v)
        p = 2
    else:
        gen = schrodinger_generator(basis, profile)
        state0 = u.astype(complex)
        p = 4
    times = np.concatenate([[0.0], log_spaced_times(1.0, num.T, num.time_samples)])
    with ctx.timed(f"evolve_{kind}_oracle"):
        res = evolve_oracle(gen, state0, times)
    with ctx.timed(f"evolve_{kind}_stepper"):
        steps = int(round(num.T / num.dt))
        stepped = evolve_stepped(gen, state0, num.dt, num.T, record_every=max(1, steps // 1000))
    fit = fit_log_decay(res, p, window=(1.0, num.T))
    mono = check_monotone(res)
    mono_step = check_monotone(stepped)
    final_ref = res.snapshots[-1]
    # relative to the initial norm: damped final states may underflow
    discrepancy = gen.norm(stepped.final_state - final_ref) / gen.norm(state0)
    name = f"evolution_{kind}.csv"
    rows = ctx.write_csv(name, "evolution",
                         zip(res.times, res.energies, fit.bound_curve(res.times)))
    stability = bound_stability(fit, num.T) if num.T >= 4 else float("nan")
    ctx.derived[f"decay_{kind}"] = {
        "p": p, "C_star": fit.C_star, "argmax_t": fit.argmax_t, "window": list(fit.window),
        "ref_norm": fit.ref_norm, "bound_satisfied": fit.bound_satisfied,
        "late_over_early": stability, "monotone": mono.ok, "max_violation": mono.max_violation,
        "stepper_monotone": mono_step.ok, "stepper_error_at_T_over_initial_norm": discrepancy,
        "oracle_fallback": res.fallback, "quotient": gen.quotient,
    }
    ctx.report.append(
        f"- {kind}: C_star = {fit.C_star:.6g} for E(t) log(2+t)^{p} / ||data||^2 on "
        f"[1, {num.T:g}], attained at t = {fit.argmax_t:.4g}; late/early window ratio "
        f"{stability:.4g} ({name} rows {rows[0]}-{rows[1]})")
    ctx.report.append(
        f"- {kind}: energies nonincreasing: {mono.ok} (worst rise {mono.max_violation:.3g}); "
        f"implicit-midpoint vs exponential at T: error {discrepancy:.3g} x ||U0|| "
        f"({name} rows {rows[0]}-{rows[1]})")


def _scan(cfg: RunConfig, ctx: RunContext, setup, kind: str):
    op, basis, profile = setup
    num = cfg.numerics
    gen = wave_generator(basis, profile) if kind == "wave" else schrodinger_generator(basis, profile)
    with ctx.timed(f"scan_{kind}"):
        scan = scan_M(gen, num.tau_max, num.grid_points)
    rows = ctx.write_csv("scan.csv", "scan",
                         zip(scan.taus, scan.norms, scan.sigma_min, scan.running_M))
    fits = {m: fit_growth(scan, m) for m in ("exp", "exp_sqrt")}
    ctx.derived["growth_fit"] = {
        m: {"C": f.C, "c": f.c, "residual": f.residual, "window": list(f.window)}
        for m, f in fits.items()}
    ctx.derived["scan"] = {"equation": kind, "min_sigma_min": float(scan.sigma_min.min()),
                           "max_M": float(scan.running_M.max()), "points": int(len(scan.taus)),
                           "refined_points": scan.refined}
    ctx.derived["burq"] = {m: vars(burq_prediction(f, 1)) for m, f in fits.items()}
    ctx.report.append(
        f"- resolvent ({kind}): min sigma_min = {scan.sigma_min.min():.6g}, "
        f"M({num.tau_max:g}) = {scan.running_M.max():.6g} (scan.csv rows {rows[0]}-{rows[1]})")
    ctx.report.append(
        f"- growth envelope exp: C = {fits['exp'].C:.4g}, c = {fits['exp'].c:.4g}; "
        f"energy exponent {burq_prediction('exp').energy_exponent} "
        f"(scan.csv rows {rows[0]}-{rows[1]})")


def _region(cfg: RunConfig, op, profile):
    obs = cfg.observation
    if obs.kind == "whole":
        return whole_domain(op)
    if obs.kind == "intervals":
        return region_from_intervals(op, obs.intervals)
    if obs.kind == "fat_cantor":
        return region_from_intervals(op, fat_cantor_intervals(obs.level, obs.measure, op.domain.length))
    intervals = support_intervals(cfg.damping, op.domain.length)
    if cfg.damping.kind == "constant":
        return whole_domain(op)
    if intervals is not None:
        return region_from_intervals(op, intervals)
    if profile.trivial:
        raise TrivialDampingError("trivial damping: observation set {a > 0} is empty")
    return region_from_mask(op, profile.F_mask)


def _constants(cfg: RunConfig, ctx: RunContext, setup):
    op, basis, profile = setup
    region = _region(cfg, op, profile)
    freqs = basis.frequencies
    if cfg.numerics.Lambda_grid is not None:
        lambdas = np.asarray(cfg.numerics.Lambda_grid, dtype=float)
    else:
        lo = freqs[freqs > 0][0] if np.any(freqs > 0) else 1.0
        lambdas = np.linspace(lo, 0.9 * freqs[-1], 24)
    with ctx.timed("spectral_constant"):
        curve = constant_curve(basis, region, lambdas)
    rows = ctx.write_csv("constants.csv", "constants",
                         zip(curve.lambdas, curve.kappas, curve.flagged))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        C, D = fit_spectral_constants(curve)
    if curve.flagged.any():
        log.warning("excluded %d flagged kappa values (> 1e8) from the envelope fit",
                    int(curve.flagged.sum()))
    ratios = unique_continuation_check(basis, region, basis.size)
    erows = ctx.write_csv("eigen.csv", "eigen", zip(range(basis.size), basis.eigenvalues, ratios))
    ctx.derived["spectral_constant"] = {"C": C, "D": D, "omega_measure": region.measure,
                                        "flagged": int(curve.flagged.sum()),
                                        "kappa_max": float(np.max(curve.kappas))}
    ctx.derived["unique_continuation"] = {"min_ratio": float(ratios.min()),
                                          "argmin_k": int(np.argmin(ratios))}
    ctx.report.append(
        f"- spectral inequality: kappa(Lambda) <= {C:.4g} exp({D:.4g} Lambda) on "
        f"[{curve.lambdas[0]:.4g}, {curve.lambdas[-1]:.4g}], |omega| = {region.measure:.6g} "
        f"(constants.csv rows {rows[0]}-{rows[1]})")
    ctx.report.append(
        f"- unique continuation: min_k ||e_k||_omega / ||e_k|| = {ratios.min():.6g} "
        f"(eigen.csv rows {erows[0]}-{erows[1]})")


def _poincare(cfg: RunConfig, ctx: RunContext, setup):
    op, basis, profile = setup
    with ctx.timed("poincare"):
        cp = poincare_constant(op, profile)
    gen = schrodinger_generator(basis, profile)
    taus = np.linspace(0.0, cfg.numerics.tau_max, 64)
    worst = max(resolvent_norm(gen, t) for t in taus)
    ctx.derived["poincare"] = {"C_P": cp, "schrodinger_max_resolvent_tau_ge_0": worst,
                               "two_C_P": 2 * cp, "bound_holds": bool(worst <= 2 * cp + 1e-6)}
    ctx.report.append(f"- Poincare constant C_P = {cp:.10g}; Schrodinger resolvent on "
                      f"[0, {cfg.numerics.tau_max:g}] peaks at {worst:.6g} <= 2 C_P = {2 * cp:.6g}")


def _require_damping(setup):
    if setup[2].trivial:
        raise TrivialDampingError("trivial damping: a == 0, the decay hypothesis fails")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: RunConfig) -> dict:
    """Execute ``cfg.task``; returns the manifest (also written to manifest.json)."""
    out = Path(cfg.output_dir)
    created = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(cfg=cfg, out=out)
    start = time.perf_counter()
    try:
        setup = _setup(cfg, ctx)
        task = cfg.task
        if task == "simulate_wave":
            _simulate(cfg, ctx, setup, "wave")
        elif task == "simulate_schrodinger":
            _simulate(cfg, ctx, setup, "schrodinger")
        elif task == "resolvent_scan":
            _scan(cfg, ctx, setup, cfg.equation)
        elif task == "spectral_constant":
            _constants(cfg, ctx, setup)
        elif task == "poincare":
            _poincare(cfg, ctx, setup)
        elif task == "decay_report":
            _require_damping(setup)
            _simulate(cfg, ctx, setup, "wave")
            _simulate(cfg, ctx, setup, "schrodinger")
            ctx.derived["burq"] = {m: vars(burq_prediction(m, 1)) for m in ("exp", "exp_sqrt")}
        elif task == "full_report":
            _require_damping(setup)
            _poincare(cfg, ctx, setup)
            _scan(cfg, ctx, setup, "wave")
            _constants(cfg, ctx, setup)
            _simulate(cfg, ctx, setup, "wave")
            _simulate(cfg, ctx, setup, "schrodinger")
        else:
            raise ConfigError(f"unknown task {task!r}")
        ctx.timings["total"] = round(time.perf_counter() - start, 6)

        report = out / "report.md"
        report.write_text(f"# decaylab {task}\n\n" + "\n".join(ctx.report) + "\n")
        ctx.files.append(report)
        manifest = {
            "config": config_to_dict(cfg),
            "versions": {"decaylab": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
            "derived": ctx.derived,
            "timings": ctx.timings,
            "files": [{"name": p.name, "sha256": _digest(p)} for p in ctx.files],
        }
        path = out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
        return manifest
    except BaseException:
        for p in ctx.files + [out / "manifest.json"]:
            p.unlink(missing_ok=True)
        if created:
            try:
                out.rmdir()
            except OSError:
                pass
        raise


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="decaylab", description=__doc__.splitlines()[0])
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        if cfg.task != args.task:
            log.info("task %s from the command line overrides %s in the config", args.task, cfg.task)
            cfg.task = args.task
        if args.out:
            cfg.output_dir = args.out
        manifest = run(cfg)
    except (ConfigError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except HypothesisError as exc:
        log.error("%s", exc)
        return EXIT_HYPOTHESIS
    except SpectrumOnAxisError as exc:
        log.error("%s", exc)
        return EXIT_AXIS
    except EigensolverError as exc:
        log.error("%s (residual %.3g)", exc, exc.residual)
        return EXIT_EIGEN
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except DecaylabError as exc:
        log.error("%s", exc)
        return exc.exit_code
    for f in manifest["files"]:
        log.info("wrote %s (sha256 %s)", f["name"], f["sha256"][:12])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
