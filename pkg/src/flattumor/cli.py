"""Command-line front end: ``flattumor simulate|classify|periodic|verify``.

Exit codes: 0 ok, 2 config error, 3 integration failure, 4 wrong regime,
5 verification failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import checks
from .config import DEFAULT, ConfigError, RunConfig, from_dict, load
from .integrator import IntegrationError, integrate
from .model import forcing_eval, growth_envelope, rhs
from .periodic import BracketError, ConvergenceError, convergence_rate, find_periodic, verify_periodicity
from .regime import PERSISTENCE, BoundViolation, classify
from .reporting import dump_json, orbit_svg, write_csv, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_REGIME = 4
EXIT_VERIFY = 5


class CommandError(Exception):
    def __init__(self, code: int, message: str, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload


def _config(args) -> RunConfig:
    cfg = load(args.config) if args.config else from_dict(dict(DEFAULT))
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed", "must be non-negative")
        cfg.seed = args.seed
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("--tol", "must be positive")
        cfg.tol = args.tol
    if args.periods is not None and args.periods < 1:
        raise ConfigError("--periods", "must be at least 1")
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig, args) -> dict:
    params, icfg = cfg.params(), cfg.integrator()
    if args.periods is not None:
        span = args.periods * cfg.period
    else:
        span = cfg.span()
    ts = np.linspace(0.0, span, cfg.samples)
    traj = integrate(params, cfg.rho0, 0.0, span, icfg, t_eval=ts)
    phi = forcing_eval(params.forcing, traj.t)
    rate = np.array([rhs(params, t, r) for t, r in zip(traj.t, traj.rho)])
    env = np.array([growth_envelope(params, cfg.rho0, float(t)) for t in traj.t])
    lower, upper = env[:, 0], env[:, 1]
    slack = checks.ENVELOPE_SLACK
    outside = int(np.count_nonzero((traj.rho < lower * (1 - slack)) | (traj.rho > upper * (1 + slack))))
    out = _outdir(args)
    write_csv(
        out / "trajectory.csv",
        ["t", "rho", "phi", "rhs", "lower_envelope", "upper_envelope"],
        [traj.t, traj.rho, phi, rate, lower, upper],
    )
    summary = {
        "command": "simulate",
        "config": cfg.as_dict(),
        "regime": classify(params).regime,
        "t_end": span,
        "final_rho": traj.final,
        "envelope_violations": outside + traj.envelope_violations,
        "steps": {"accepted": traj.accepted, "rejected": traj.rejected},
        "error_estimate": traj.error_estimate,
    }
    write_json(out / "summary.json", summary)
    if args.figures:
        from .plotting import trajectory_figure

        trajectory_figure(traj.t, traj.rho, lower, upper, out / "trajectory.png")
    return summary


def cmd_classify(cfg: RunConfig, args) -> dict:
    report = classify(cfg.params())
    summary = {"command": "classify", **report.as_dict()}
    write_json(_outdir(args) / "summary.json", summary)
    return summary


def cmd_periodic(cfg: RunConfig, args) -> dict:
    params, icfg = cfg.params(), cfg.integrator()
    report = classify(params)
    out = _outdir(args)
    if report.regime != PERSISTENCE:
        payload = {"command": "periodic", "error": "no positive periodic solution", "regime": report.as_dict()}
        write_json(out / "summary.json", payload)
        raise CommandError(EXIT_REGIME, f"regime is {report.regime}", payload)
    sol = find_periodic(params, icfg, cfg.tol)
    probe = convergence_rate(params, sol, cfg.probe_deviation * sol.rho_star_0)
    phi = forcing_eval(params.forcing, sol.t)
    write_csv(out / "orbit.csv", ["t", "rho_star", "phi"], [sol.t, sol.rho, phi])
    summary = {
        "command": "periodic",
        "config": cfg.as_dict(),
        "regime": report.as_dict(),
        "rho_star_0": sol.rho_star_0,
        "bracket": {"x_bar": sol.bracket.x_bar, "x2": sol.bracket.x2},
        "residual": sol.residual,
        "periodicity_residual": verify_periodicity(sol, params, icfg),
        "rho_min": sol.rho_min,
        "rho_max": sol.rho_max,
        "bisections": sol.iterations,
        "probe": {
            "deviation_factor": cfg.probe_deviation,
            "delta": probe.delta,
            "C": probe.C,
            "M_min": probe.M_min,
            "M_bar_min": probe.M_bar_min,
            "y0": probe.y0,
        },
    }
    write_json(out / "summary.json", summary)
    if args.svg:
        (out / "orbit.svg").write_text(orbit_svg(sol.t, sol.rho, phi))
    if args.figures:
        from .plotting import orbit_figure

        orbit_figure(sol.t, sol.rho, phi, sol.bracket, out / "orbit.png")
    return summary


VERIFY_ENVELOPE_DRAWS = 9


def run_battery(cfg: RunConfig, periods: int = 50) -> tuple[list[checks.CheckResult], dict]:
    """Every property check for one configuration; returns results and plot data."""
    params, icfg = cfg.params(), cfg.integrator()
    rng = np.random.default_rng(cfg.seed)
    results = []
    report = classify(params)
    results.append(checks.CheckResult("classification", True, report.as_dict()))

    draws = [(params, cfg.rho0)]
    for _ in range(VERIFY_ENVELOPE_DRAWS):
        draws.append((checks.random_params(rng), float(math.exp(rng.uniform(math.log(0.05), math.log(5.0))))))
    results.append(checks.check_envelope(draws, icfg))
    results.append(checks.check_comparison(params, [0.5 * cfg.rho0, cfg.rho0, 2.0 * cfg.rho0], icfg))
    hardest = [p for p in checks.oracle_grid() if p.period == 2.0]
    results.append(checks.check_oracle_equivalence([params] + hardest, icfg))
    results.append(checks.check_field_residuals(params, cfg.rho0))

    extras: dict = {}
    names = ("bracket_self_map", "periodicity", "periodic_fields", "convergence_envelope", "uniqueness")
    if report.regime == PERSISTENCE:
        sol = find_periodic(params, icfg, cfg.tol)
        results.append(checks.check_bracket_self_map(params, icfg))
        results.append(checks.check_periodicity(params, sol, icfg))
        results.append(checks.check_periodic_fields(params, sol, icfg))
        conv = checks.check_convergence(params, sol, periods, icfg)
        results.append(conv)
        extras["probes"] = conv.measured["probes"]
        results.append(checks.check_uniqueness(params, rng, icfg, cfg.tol))
        results.append(checks.skipped("extinction_bounds", f"regime is {report.regime}"))
    else:
        for name in names:
            results.append(checks.skipped(name, f"regime is {report.regime}"))
        results.append(checks.check_extinction(params, cfg.rho0, icfg))
    return results, extras


def cmd_verify(cfg: RunConfig, args) -> dict:
    periods = args.periods if args.periods is not None else 50
    results, extras = run_battery(cfg, periods)
    passed = all(r.passed for r in results)
    report = {
        "command": "verify",
        "config": cfg.as_dict(),
        "seed": cfg.seed,
        "periods": periods,
        "passed": passed,
        "checks": [r.as_dict() for r in results],
    }
    out = _outdir(args)
    write_json(out / "report.json", report)
    if args.figures and "probes" in extras:
        from .plotting import convergence_figure

        convergence_figure(extras["probes"], cfg.period, out / "convergence.png")
    for r in results:
        print(f"{r.status.upper():4s}  {r.name}")
    if not passed:
        raise CommandError(EXIT_VERIFY, "verification failed")
    return report


COMMANDS = {
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "periodic": cmd_periodic,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flattumor",
        description="Flat multi-layer tumor model with periodic nutrient supply.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat JSON config file (built-in default when omitted)")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--svg", action="store_true", help="periodic: also write orbit.svg")
    parser.add_argument("--figures", action="store_true", help="render matplotlib PNG figures")
    parser.add_argument("--seed", type=int, help="seed for randomized check grids")
    parser.add_argument("--periods", type=int, help="simulate: span in periods; verify: convergence horizon")
    parser.add_argument("--tol", type=float, help="relative tolerance of the fixed-point solve")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        result = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, BracketError, ConvergenceError, BoundViolation) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except CommandError as exc:
        if exc.payload is not None:
            sys.stdout.write(dump_json(exc.payload))
        print(f"{args.command}: {exc}", file=sys.stderr)
        return exc.code
    if args.command != "verify":
        sys.stdout.write(dump_json(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
