"""Deterministic CSV/JSON serialization of results and run manifests.

Every writer follows the same conventions: comma-separated columns with a
single header line, floats printed with 17 significant digits (enough to
round-trip a double exactly), ``\\n`` line endings regardless of
platform, and UTF-8 text.  Writers return the list of paths they
created, so callers can assemble a manifest; re-running the command
recorded in a manifest reproduces every CSV byte for byte.
"""

from __future__ import annotations

import json
import platform
from pathlib import Path

import numpy as np

from .estimator import AmbiguitySurface, McReport
from .freqops import get_bundle
from .model import SystemConfig
from .optimizer import DesignResult, SweepResult

__all__ = [
    "format_float",
    "write_csv",
    "write_spectrum",
    "write_report",
    "write_manifest",
]


def format_float(value):
    """Render one float with 17 significant digits (lossless round-trip)."""
    return "%.17g" % float(value)


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(value)


def write_csv(path, header, rows):
    """Write one CSV file and return its path.

    ``header`` is a sequence of column names; each row is a sequence of
    numbers (bools become 0/1, floats get 17 significant digits).
    """
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(",".join(_cell(value) for value in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_spectrum(path, values, config: SystemConfig):
    """Write one harmonic spectrum as ``index,re,im`` rows."""
    values = np.asarray(values, dtype=complex)
    harmonics = get_bundle(config).harmonics
    rows = zip(harmonics, values.real, values.imag)
    return write_csv(path, ("index", "re", "im"), rows)


def _design_files(result: DesignResult, out, config, stem=""):
    prefix = f"{stem}_" if stem else ""
    meta = {
        "alpha": result.alpha,
        "objective": result.objective,
        "converged": bool(result.converged),
        "iterations": result.iterations,
        "restart": result.restart,
        "gain_db": None if result.gain_db is None else list(result.gain_db),
        "transmit_power": float(np.sum(np.abs(result.transmit) ** 2)),
    }
    meta_path = out / f"{prefix}design.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8", newline="\n")
    files = [meta_path]
    files.append(write_spectrum(out / f"{prefix}g.csv", result.transmit,
                                config))
    files.append(write_spectrum(out / f"{prefix}h.csv", result.receive,
                                config))
    files.append(write_csv(out / f"{prefix}trace.csv", ("step", "objective"),
                           enumerate(result.objective_trace)))
    return files


def _sweep_files(sweep: SweepResult, out, config):
    rows = []
    files = []
    for index, alpha in enumerate(np.asarray(sweep.alphas)):
        design = sweep.designs[index]
        rows.append((
            float(alpha),
            float(sweep.gains[index, 0]),
            float(sweep.gains[index, 1]),
            0 if design is None else design.iterations,
            False if design is None else design.converged,
        ))
        if design is not None:
            files.append(write_spectrum(out / f"g_{index:02d}.csv",
                                        design.transmit, config))
            files.append(write_spectrum(out / f"h_{index:02d}.csv",
                                        design.receive, config))
    files.insert(0, write_csv(
        out / "pareto.csv",
        ("alpha", "chi_tau_db", "chi_nu_db", "iterations", "converged"),
        rows))
    summary = {
        "best_index": sweep.best_index,
        "best_alpha": (None if sweep.best_index is None
                       else float(sweep.alphas[sweep.best_index])),
        "failures": [list(item) for item in sweep.failures],
        "gains_approx_db": [[float(g) for g in row[2:]]
                            for row in sweep.gains],
    }
    summary_path = out / "sweep.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True)
                            + "\n", encoding="utf-8", newline="\n")
    files.append(summary_path)
    return files


def _mc_files(report: McReport, out):
    rows = zip(report.psnr_grid, report.nmse_tau, report.nmse_nu,
               report.bcrlb_tau, report.bcrlb_nu, report.failures)
    return [write_csv(
        out / "report.csv",
        ("psnr_dbhz", "nmse_tau", "nmse_nu", "bcrlb_tau_norm",
         "bcrlb_nu_norm", "failures"),
        rows)]


def _surface_files(surface: AmbiguitySurface, out):
    rows = ((tau, nu, surface.values[i, j])
            for i, tau in enumerate(surface.tau_grid)
            for j, nu in enumerate(surface.nu_grid))
    return [write_csv(out / "ambiguity.csv", ("tau_s", "nu_hz", "value"),
                      rows)]


def write_report(result, path, config: SystemConfig = None):
    """Serialize one result object into ``path`` and list the files written.

    Dispatches on the result type: design runs produce ``design.json``
    plus spectrum and trace CSVs, sweeps produce ``pareto.csv`` with
    per-weight filter spectra, Monte-Carlo reports produce ``report.csv``,
    ambiguity surfaces produce ``ambiguity.csv``, and a mapping of named
    spectra produces one CSV per name.  An empty result writes nothing.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if result is None or (isinstance(result, (list, tuple)) and not result):
        return []
    if isinstance(result, DesignResult):
        return _design_files(result, out, config)
    if isinstance(result, SweepResult):
        return _sweep_files(result, out, config)
    if isinstance(result, McReport):
        return _mc_files(result, out)
    if isinstance(result, AmbiguitySurface):
        return _surface_files(result, out)
    if isinstance(result, dict):
        return [write_spectrum(out / f"{name}.csv", values, config)
                for name, values in result.items()]
    raise TypeError(f"no report writer for {type(result).__name__}")


def write_manifest(path, *, command, config_snapshot, seed, outputs,
                   wall_time_s):
    """Write ``manifest.json`` describing one finished run."""
    import matplotlib
    import scipy

    from . import __version__

    manifest = {
        "command": list(command),
        "config": config_snapshot,
        "seed": seed,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
            "subnyq": __version__,
        },
        "outputs": sorted(Path(name).name for name in outputs),
        "wall_time_s": wall_time_s,
    }
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")
    return path
