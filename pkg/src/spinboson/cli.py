"""``spinboson`` command line: sse, niba, fit, sweep and kernel-check."""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np
from scipy import integrate

from . import __version__
from .analysis import InsufficientWindowError, fit_damped_cosine, sweep_dissipation
from .bath import (
    KernelPositivityError,
    fourier_coefficients,
    kernel_l2,
    max_reconstruction_error,
    spectral_density,
)
from .io import ConfigError, RunManifest, params_dict, parse_config, read_series, write_series, write_sweep
from .model import Channel, ParameterError, SimulationParams
from .niba import DegenerateParametersError, QuadratureError, RootContinuationError, niba_curve
from .noise import RNG_NAME
from .sse import TrajectoryError, _output_times, run_ensemble, thread_count

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

_NUMERIC_ERRORS = (
    TrajectoryError,
    RootContinuationError,
    QuadratureError,
    KernelPositivityError,
    DegenerateParametersError,
    InsufficientWindowError,
    FloatingPointError,
    ArithmeticError,
)

_PARAM_FLAGS = {
    "delta": float, "alpha": float, "omega_c": float, "gamma_phi": float,
    "gamma_x": float, "t_max": float, "dt": float, "m_max": int, "n_traj": int,
    "seed": int, "channel": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinboson", description=__doc__)
    parser.add_argument("--version", action="version", version=f"spinboson {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("sse", "stochastic ensemble of sigma_z(t)"),
        ("niba", "analytic NIBA curve"),
        ("fit", "damped-cosine fit of a series CSV"),
        ("sweep", "SSE and NIBA fits across a grid of Markovian rates"),
        ("kernel-check", "bath kernel oracle report"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="key=value parameter file")
        for key, typ in _PARAM_FLAGS.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, type=typ, default=None)
        p.add_argument("--out", type=Path, default=None, help="output path (default: stdout)")
        if name == "fit":
            p.add_argument("--input", type=Path, required=True, help="series CSV to fit")
            p.add_argument("--window-lo", type=float, default=None)
            p.add_argument("--window-hi", type=float, default=None)
        if name == "sweep":
            p.add_argument("--grid", required=True,
                           help="comma-separated rates for the selected --channel")
    return parser


def _params(args) -> SimulationParams:
    overrides = {k: getattr(args, k) for k in _PARAM_FLAGS}
    return parse_config(args.config, overrides)


def _emit_text(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _cmd_sse(args) -> None:
    p = _params(args)
    out = args.out or Path("sse.csv")
    start = time.perf_counter()
    basis = fourier_coefficients(p)
    series = run_ensemble(p, basis)
    write_series(series, out)
    manifest = RunManifest(
        params=params_dict(p), rng=RNG_NAME, seed=p.seed, code_version=__version__,
        command="sse",
        kernel={"m_max": p.m_max, "max_reconstruction_error": max_reconstruction_error(basis, p)},
        threads=thread_count(None), wall_clock_s=time.perf_counter() - start,
        outputs=[str(out)],
    )
    manifest.write(out.with_name(out.name + ".manifest.json"))


def _cmd_niba(args) -> None:
    p = _params(args)
    out = args.out or Path("niba.csv")
    channel = p.channel if p.channel is not Channel.BOTH else None
    if channel is None:
        raise ParameterError("NIBA handles one Markovian channel at a time")
    write_series(niba_curve(channel, p, _output_times(p)), out)


def _cmd_fit(args) -> None:
    series = read_series(args.input)
    window = None
    if args.window_lo is not None or args.window_hi is not None:
        lo = args.window_lo if args.window_lo is not None else float(series.times[0])
        hi = args.window_hi if args.window_hi is not None else float(series.times[-1])
        if not lo < hi:
            raise ConfigError(f"empty fit window [{lo}, {hi}]")
        window = (lo, hi)
    fit = fit_damped_cosine(series, window)
    _emit_text(json.dumps(asdict(fit), indent=2, sort_keys=True) + "\n", args.out)


def _cmd_sweep(args) -> None:
    p = _params(args)
    if p.channel not in (Channel.DEPHASING, Channel.DEPOLARIZATION):
        raise ConfigError("sweep needs --channel dephasing or depolarization")
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --grid value: {exc}") from None
    rows = sweep_dissipation(p, p.channel, grid)
    write_sweep(rows, args.out or Path("sweep.csv"))
    failed = [r for r in rows if r.error]
    for r in failed:
        sys.stderr.write(json.dumps({"row": r.gamma_in, "error": r.error}) + "\n")


def _quadrature_l2(p: SimulationParams, s: float) -> float:
    # e^{-60} truncation of the exponential cutoff is far below double precision
    with warnings.catch_warnings():
        # epsrel=1e-13 sits at the roundoff floor; the report shows the achieved error
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(spectral_density, 0, 60 * p.omega_c, args=(p,), weight="cos",
                              wvar=s, epsabs=0, epsrel=1e-13, limit=2000)[0]


def kernel_report(p: SimulationParams, n_lags: int = 41) -> dict:
    """Closed-form kernel against direct quadrature, and reconstruction error vs ``m_max``."""
    # 1/omega_c is a node of L2; the grid steps straddle it
    lags = np.concatenate([np.linspace(0, 10 / p.omega_c, n_lags // 2),
                           np.linspace(1.0, p.t_max, n_lags - n_lags // 2)])
    scale = float(kernel_l2(0.0, p))
    quad_rows = []
    for s in lags:
        exact = float(kernel_l2(s, p))
        q = _quadrature_l2(p, float(s))
        quad_rows.append({"s": float(s), "closed_form": exact, "quadrature": q,
                          "relative_error": abs(q - exact) / abs(exact)})
    recon = []
    m = p.m_max
    for frac in (8, 4, 2, 1):
        mm = max(2, m // frac)
        basis = fourier_coefficients(p, m_max=mm)
        recon.append({"m_max": mm, "max_error_over_l2_0": max_reconstruction_error(basis, p) / scale})
    worst = max(r["relative_error"] for r in quad_rows)
    return {"params": params_dict(p), "quadrature": quad_rows,
            "max_quadrature_relative_error": worst, "reconstruction": recon}


def _cmd_kernel_check(args) -> None:
    report = kernel_report(_params(args))
    _emit_text(json.dumps(report, indent=2) + "\n", args.out)


_COMMANDS = {
    "sse": _cmd_sse,
    "niba": _cmd_niba,
    "fit": _cmd_fit,
    "sweep": _cmd_sweep,
    "kernel-check": _cmd_kernel_check,
}


def _error(code: int, exc: BaseException) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(record) + "\n")
    return code


def run_command(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        return _error(EXIT_CONFIG, exc)
    except _NUMERIC_ERRORS as exc:
        return _error(EXIT_NUMERIC, exc)
    except OSError as exc:
        return _error(EXIT_IO, exc)
    except ValueError as exc:
        # remaining value errors come from malformed inputs (e.g. a bad CSV)
        return _error(EXIT_CONFIG, exc)
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
