"""Command-line front end: reflection runs, gate evaluation, parameter
sweeps, cluster-growth Monte Carlo, verification suites, and figure-data
reproduction as CSV.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical/solver error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .cluster import monte_carlo_growth, write_growth_csv
from .core import (
    CavityParams,
    ConfigError,
    WindowTooSmallError,
    default_time_grid,
    g0_for_mean_coupling,
    make_sech_pulse,
    parse_config,
)
from .gate import BranchReflectivities, two_cavity_gate, write_gate_csv
from .reflection import (
    SolverError,
    reflect_bare,
    reflect_coupled,
    reflect_coupled_motion_averaged,
    sweep,
    write_sweep_csv,
)
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

_DEFAULTS = {
    "g0": 0.0, "kappa_l": 0.0, "gamma": 0.0,
    "T_f": 10.0, "T_g": 50.0, "phi": 0.0,
    "dt": None, "window": None,
}

# CLI flag name -> config key
_PARAM_FLAGS = {
    "g0": "g0", "kappa_l": "kappa_l", "gamma": "gamma",
    "Tf": "T_f", "Tg": "T_g", "phi": "phi", "dt": "dt", "window": "window",
}


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _add_param_flags(parser: argparse.ArgumentParser, lists: bool = False) -> None:
    conv = _floats if lists else float
    parser.add_argument("--g0", type=conv, help="peak coupling rate [kappa_c]")
    parser.add_argument("--kappa-l", dest="kappa_l", type=conv,
                        help="unwanted cavity loss rate [kappa_c]")
    parser.add_argument("--gamma", type=conv, help="spontaneous emission rate [kappa_c]")
    parser.add_argument("--Tf", type=conv, help="pulse width [1/kappa_c]")
    parser.add_argument("--Tg", type=conv, help="atomic motion period [1/kappa_c]")
    parser.add_argument("--phi", type=float, help="motion phase [rad]")
    parser.add_argument("--dt", type=float, help="integrator step [1/kappa_c]")
    parser.add_argument("--window", type=float,
                        help="half-width of the time window in units of Tf")
    parser.add_argument("--config", help="key=value config file")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _load_settings(args) -> dict:
    """Merge defaults, config file, and explicit flags (in that precedence)."""
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                settings.update(parse_config(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for flag, key in _PARAM_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            settings[key] = val
    return settings


def _params(settings: dict) -> CavityParams:
    try:
        return CavityParams(
            g0=float(settings["g0"]), kappa_l=float(settings["kappa_l"]),
            gamma=float(settings["gamma"]), T_g=float(settings["T_g"]),
            phi=float(settings["phi"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _grid_and_pulse(settings: dict, p: CavityParams):
    tf = float(settings["T_f"])
    kwargs = {}
    if settings.get("dt") is not None:
        kwargs["dt"] = float(settings["dt"])
    if settings.get("window") is not None:
        kwargs["window_halfwidth"] = float(settings["window"])
    grid = default_time_grid(tf, p, **kwargs)
    return grid, make_sech_pulse(tf, grid)


def _config_comment(command: str, settings: dict, extra: dict | None = None) -> str:
    items = {k: v for k, v in settings.items() if v is not None}
    if extra:
        items.update(extra)
    body = " ".join(f"{k}={v}" for k, v in sorted(items.items()))
    return f"photongate {__version__} | {command} | {body}"


def cmd_reflect(args) -> int:
    settings = _load_settings(args)
    if args.case not in ("bare", "coupled"):
        raise ConfigError(f"--case must be 'bare' or 'coupled', got {args.case!r}")
    p = _params(settings)
    grid, f_in = _grid_and_pulse(settings, p)
    if args.case == "bare":
        rec = reflect_bare(p, f_in)
    elif args.n_phi and args.n_phi > 1:
        rec = reflect_coupled_motion_averaged(p, f_in, args.n_phi, keep_envelopes=False)
    else:
        rec = reflect_coupled(p, f_in)
    print(f"case={args.case} T_f={_fmt(float(settings['T_f']))} "
          f"n_steps={grid.n_steps} dt={_fmt(grid.dt)}")
    for name in ("P", "F", "phase", "loss_atom", "loss_cavity"):
        print(f"{name} = {_fmt(getattr(rec, name))}")
    print(f"flux_residual = {_fmt(rec.flux_residual)}")
    if args.out and hasattr(rec, "f_out_raw"):
        t = grid.times()
        fo = rec.f_out_raw.samples
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {_config_comment('reflect', settings, {'case': args.case})}\n")
            fh.write("t,f_in_re,f_in_im,f_out_re,f_out_im\n")
            for k in range(len(t)):
                fh.write(",".join(_fmt(v) for v in (
                    t[k], f_in.samples[k].real, f_in.samples[k].imag,
                    fo[k].real, fo[k].imag)) + "\n")
    return EXIT_OK


def cmd_gate(args) -> int:
    out = two_cavity_gate(BranchReflectivities(P0=args.P0, r=args.r))
    print(f"P0={_fmt(args.P0)} r={_fmt(args.r)}")
    for name in ("P_L", "P_R", "P_total", "F_L", "F_R", "F_avg"):
        print(f"{name} = {_fmt(getattr(out, name))}")
    print("psi_L =", " ".join(_fmt(c.real) for c in out.psi_L.coefficients))
    print("psi_R =", " ".join(_fmt(c.real) for c in out.psi_R.coefficients))
    print("psi_R_raw =", " ".join(_fmt(c.real) for c in out.psi_R_raw.coefficients))
    return EXIT_OK


def cmd_sweep(args) -> int:
    settings = _load_settings(args)
    if args.case not in ("bare", "coupled"):
        raise ConfigError(f"--case must be 'bare' or 'coupled', got {args.case!r}")

    def rng_of(flag, key):
        val = getattr(args, flag)
        if val is not None:
            return val
        return [float(settings[key])]

    rows = sweep(
        args.case,
        g0_values=rng_of("g0", "g0"),
        kappa_l_values=rng_of("kappa_l", "kappa_l"),
        gamma_values=rng_of("gamma", "gamma"),
        T_f_values=rng_of("Tf", "T_f"),
        T_g_values=rng_of("Tg", "T_g"),
        n_phi=args.n_phi or 1,
        dt=settings.get("dt"),
    )
    comment = _config_comment("sweep", settings, {"case": args.case, "n_phi": args.n_phi or 1})
    if args.out:
        write_sweep_csv(rows, args.out, comment)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        from .reflection import SWEEP_CSV_HEADER
        print(f"# {comment}")
        print(SWEEP_CSV_HEADER)
        for r in rows:
            print(",".join(str(x) for x in (
                r.g0, r.kappa_l, r.gamma, r.T_f, r.T_g, r.n_phi, r.case,
                r.P, r.F, r.phase, r.loss_atom, r.loss_cavity, r.error)))
    bad = [r for r in rows if r.error]
    if bad:
        print(f"{len(bad)} rows failed", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR
    return EXIT_OK


def cmd_cluster(args) -> int:
    if args.P is None:
        raise ConfigError("--P is required for the cluster command")
    stats = monte_carlo_growth(args.P, args.m, args.trials, seed=args.seed)
    law = (3.0 * args.P - 2.0) * args.m
    print(f"P={_fmt(args.P)} m={args.m} trials={args.trials} seed={args.seed}")
    print(f"mean_delta = {_fmt(stats.mean_delta)}")
    print(f"std_err = {_fmt(stats.std_err)}")
    print(f"(3P-2)m = {_fmt(law)}")
    print(f"floor_hits = {stats.floor_hits}")
    if args.out:
        comment = _config_comment("cluster", {"P": args.P, "m": args.m,
                                              "trials": args.trials, "seed": args.seed})
        write_growth_csv([stats], args.out, comment)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = sorted(SUITES) if args.suite == "all" else [args.suite]
    try:
        results = [res for name in suites for res in run_suite(name)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    failed = 0
    for res in results:
        print(res.line())
        failed += not res.ok
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


# Figure-data parameter grids.
FIG2_TF = (10.0, 20.0, 30.0, 50.0, 70.0)
FIG2_KL = tuple(round(0.05 * k, 2) for k in range(7))  # 0 .. 0.3
FIG3_COMBOS = tuple(
    (tf, tg, kl) for tf in (10.0, 50.0) for tg in (50.0, 125.0) for kl in (0.0, 0.2)
)
FIG3_GAVG = tuple(0.5 * k for k in range(1, 11))  # 0.5 .. 5.0
FIG5_R = tuple(round(0.05 * k, 2) for k in range(81))  # 0 .. 4


def cmd_figures(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{args.which}.csv")
    if args.which == "fig2":
        rows = []
        for tf in FIG2_TF:
            rows.extend(sweep("bare", kappa_l_values=FIG2_KL, T_f_values=[tf]))
        write_sweep_csv(rows, path, _config_comment(
            "figures fig2", {"T_f": list(FIG2_TF), "kappa_l": list(FIG2_KL)}))
    elif args.which == "fig3":
        n_phi = args.n_phi or 16
        rows = []
        for tf, tg, kl in FIG3_COMBOS:
            rows.extend(sweep(
                "coupled",
                g0_values=[g0_for_mean_coupling(g) for g in FIG3_GAVG],
                kappa_l_values=[kl], gamma_values=[1.0],
                T_f_values=[tf], T_g_values=[tg], n_phi=n_phi,
            ))
        write_sweep_csv(rows, path, _config_comment(
            "figures fig3",
            {"gamma": 1.0, "n_phi": n_phi, "g_avg": list(FIG3_GAVG),
             "note": "g_avg = g0 * J0(pi/3)"}))
    elif args.which == "fig5":
        P0 = args.P0 if args.P0 is not None else 1.0
        rows = [(P0, r, two_cavity_gate(BranchReflectivities(P0=P0, r=r)))
                for r in FIG5_R]
        write_gate_csv(rows, path, _config_comment("figures fig5", {"P0": P0}))
    else:
        raise ConfigError(f"unknown figure {args.which!r}")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photongate",
        description="Cavity-mediated photon gate and cluster-growth simulator",
    )
    parser.add_argument("--version", action="version", version=f"photongate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_reflect = sub.add_parser("reflect", help="single reflection run")
    p_reflect.add_argument("--case", required=True, choices=("bare", "coupled"))
    p_reflect.add_argument("--n-phi", dest="n_phi", type=int,
                           help="phi-average the coupled case over this many phases")
    p_reflect.add_argument("--out", help="optional envelope dump (CSV)")
    _add_param_flags(p_reflect)
    p_reflect.set_defaults(func=cmd_reflect)

    p_gate = sub.add_parser("gate", help="closed-form two-cavity gate outcome")
    p_gate.add_argument("--P0", type=float, required=True)
    p_gate.add_argument("--r", type=float, required=True)
    p_gate.set_defaults(func=cmd_gate)

    p_sweep = sub.add_parser("sweep", help="Cartesian parameter sweep to CSV")
    p_sweep.add_argument("--case", required=True, choices=("bare", "coupled"))
    p_sweep.add_argument("--n-phi", dest="n_phi", type=int)
    p_sweep.add_argument("--out", help="output CSV path (default: stdout)")
    _add_param_flags(p_sweep, lists=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_cluster = sub.add_parser("cluster", help="Monte Carlo cluster growth")
    p_cluster.add_argument("--P", type=float, required=True,
                           help="per-attempt success probability")
    p_cluster.add_argument("--m", type=int, default=10_000)
    p_cluster.add_argument("--trials", type=int, default=200)
    p_cluster.add_argument("--seed", type=int, default=0)
    p_cluster.add_argument("--out", help="output CSV path")
    p_cluster.set_defaults(func=cmd_cluster)

    p_verify = sub.add_parser("verify", help="run an invariant suite")
    p_verify.add_argument(
        "suite", choices=("all", "flux", "oracle", "recovery", "growth", "twosided")
    )
    p_verify.set_defaults(func=cmd_verify)

    p_fig = sub.add_parser("figures", help="emit figure-reproduction CSV data")
    p_fig.add_argument("which", choices=("fig2", "fig3", "fig5"))
    p_fig.add_argument("--out", default=".", help="output directory")
    p_fig.add_argument("--n-phi", dest="n_phi", type=int)
    p_fig.add_argument("--P0", type=float)
    p_fig.set_defaults(func=cmd_figures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, WindowTooSmallError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except SolverError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
