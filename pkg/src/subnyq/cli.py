"""Command-line front end.

Subcommands cover the full workflow: ``optimize`` runs one alternating
design at a fixed delay/Doppler weighting, ``pareto`` sweeps the weight
grid, ``simulate`` runs the Monte-Carlo estimation harness, ``ambiguity``
renders a delay/Doppler surface, and ``reference`` dumps the benchmark
waveform spectra.  Every run writes CSV artifacts, companion figures and
a ``manifest.json`` recording the command, resolved configuration, seed,
library versions, output list and wall time.  Exit codes: 0 on success,
2 for configuration or usage problems, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .estimator import ambiguity_surfaces, monte_carlo
from .figures import (
    ambiguity_figure,
    design_figure,
    pareto_figure,
    simulate_figure,
    spectra_figure,
)
from .freqops import noise_covariance
from .model import load_config
from .optimizer import alternate_optimize, pareto_sweep, scalarization_weight
from .report import write_manifest, write_report
from .waveforms import lfm_waveform, reference_lowpass, reference_pair, rpc_waveform

__all__ = ["build_parser", "run", "main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subnyq",
        description="Design and verify sub-Nyquist delay-Doppler systems.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="JSON system configuration")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=0,
                        help="random seed (default 0)")
    commands = parser.add_subparsers(dest="command", required=True)

    optimize = commands.add_parser(
        "optimize", parents=[common],
        help="alternating design at one delay/Doppler weight")
    optimize.add_argument("--alpha", type=float, default=0.5,
                          help="delay weight in [0, 1] (default 0.5)")
    optimize.add_argument("--restarts", type=int, default=3)

    pareto = commands.add_parser(
        "pareto", parents=[common],
        help="sweep the delay/Doppler weight grid")
    pareto.add_argument("--restarts", type=int, default=3)

    simulate = commands.add_parser(
        "simulate", parents=[common],
        help="Monte-Carlo estimation error against the bound")
    simulate.add_argument("--alpha", type=float, default=None,
                          help="optimize at this weight first "
                               "(default: benchmark reference system)")
    simulate.add_argument("--restarts", type=int, default=3)
    simulate.add_argument("--trials", type=int, default=2000)
    simulate.add_argument("--psnr-min", type=float, default=40.0)
    simulate.add_argument("--psnr-max", type=float, default=110.0)
    simulate.add_argument("--psnr-step", type=float, default=5.0)

    ambiguity = commands.add_parser(
        "ambiguity", parents=[common],
        help="delay/Doppler ambiguity surface")
    ambiguity.add_argument("--alpha", type=float, default=None,
                           help="optimize at this weight first "
                                "(default: benchmark reference system)")
    ambiguity.add_argument("--restarts", type=int, default=3)
    ambiguity.add_argument("--kind", choices=("classic", "map"),
                           default="classic")
    ambiguity.add_argument("--psnr", type=float, default=None,
                           help="assumed per-Hz SNR (dB-Hz) for the "
                                "map surface")
    ambiguity.add_argument("--grid-points", type=int, default=121)

    commands.add_parser("reference", parents=[common],
                        help="benchmark waveform spectra")
    return parser


def _design_or_reference(args, config, prior):
    """Optimized (transmit, receive, files) at ``--alpha``, else benchmark."""
    if args.alpha is None:
        g, h = reference_pair(config)
        return g, h, []
    weight = scalarization_weight(args.alpha, prior)
    design = alternate_optimize(config, prior, weight,
                                restarts=args.restarts, seed=args.seed,
                                alpha=args.alpha)
    files = write_report(design, args.out, config)
    return design.transmit, design.receive, files


def _cmd_optimize(args, config, prior):
    weight = scalarization_weight(args.alpha, prior)
    design = alternate_optimize(config, prior, weight,
                                restarts=args.restarts, seed=args.seed,
                                alpha=args.alpha)
    files = write_report(design, args.out, config)
    files.append(design_figure(design, config, Path(args.out) / "design.png"))
    return files


def _cmd_pareto(args, config, prior):
    sweep = pareto_sweep(config, prior, restarts=args.restarts,
                         seed=args.seed)
    files = write_report(sweep, args.out, config)
    files.append(pareto_figure(sweep, Path(args.out) / "pareto.png"))
    return files


def _cmd_simulate(args, config, prior):
    if args.psnr_step <= 0 or args.psnr_max < args.psnr_min:
        raise ConfigError("per-Hz SNR sweep must have positive step and "
                          "psnr-max >= psnr-min")
    if args.trials < 1:
        raise ConfigError("trials must be positive")
    grid = tuple(np.arange(args.psnr_min, args.psnr_max + args.psnr_step / 2,
                           args.psnr_step))
    g, h, files = _design_or_reference(args, config, prior)
    report = monte_carlo(g, h, prior, config, psnr_grid=grid,
                         trials=args.trials, seed=args.seed)
    files.extend(write_report(report, args.out))
    files.append(simulate_figure(report, Path(args.out) / "simulate.png"))
    return files


def _cmd_ambiguity(args, config, prior):
    if args.grid_points < 2:
        raise ConfigError("grid-points must be at least 2")
    g, h, files = _design_or_reference(args, config, prior)
    taus = prior.mu_tau + np.linspace(-4 * prior.sigma_tau,
                                      4 * prior.sigma_tau, args.grid_points)
    nus = prior.mu_nu + np.linspace(-4 * prior.sigma_nu,
                                    4 * prior.sigma_nu, args.grid_points)
    noise = None
    if args.psnr is not None:
        noise = noise_covariance(
            h, config.p_t / 10.0 ** (args.psnr / 10.0), config)
    surface = ambiguity_surfaces(g, h, prior, config, taus, nus,
                                 kind=args.kind, noise=noise)
    files.extend(write_report(surface, args.out))
    files.append(ambiguity_figure(surface, Path(args.out) / "ambiguity.png"))
    return files


def _cmd_reference(args, config, prior):
    spectra = {
        "rpc": rpc_waveform(config),
        "lfm": lfm_waveform(config),
        "lowpass": reference_lowpass(config),
    }
    files = write_report(spectra, args.out, config)
    files.append(spectra_figure(spectra, config,
                                Path(args.out) / "reference.png"))
    return files


_HANDLERS = {
    "optimize": _cmd_optimize,
    "pareto": _cmd_pareto,
    "simulate": _cmd_simulate,
    "ambiguity": _cmd_ambiguity,
    "reference": _cmd_reference,
}


def _snapshot(config, prior):
    return {
        "fs_hz": config.f_s,
        "t0_s": config.t_0,
        "L": config.l_factor,
        "pt": config.p_t,
        "n0": config.n_0,
        "sigma_tau_s": prior.sigma_tau,
        "sigma_nu_hz": prior.sigma_nu,
        "mu_tau_s": prior.mu_tau,
        "mu_nu_hz": prior.mu_nu,
        "ghq_nodes": config.quad_nodes,
    }


def run(argv=None) -> int:
    """Parse ``argv``, execute one subcommand and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    start = time.perf_counter()
    try:
        config, prior = load_config(args.config)
        outputs = _HANDLERS[args.command](args, config, prior)
    except ConfigError as exc:
        print(f"subnyq: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"subnyq: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to exit code
        print(f"subnyq: numerical failure: "
              f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    write_manifest(Path(args.out) / "manifest.json",
                   command=argv,
                   config_snapshot=_snapshot(config, prior),
                   seed=args.seed,
                   outputs=[str(item) for item in outputs],
                   wall_time_s=time.perf_counter() - start)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
