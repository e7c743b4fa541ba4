"""Command-line front end: reproducible runs with machine-readable output.

Subcommands: absorption, pump-probe, chi, 2des, witness, polaron.  Every
run writes CSV and/or JSON artifacts plus a manifest.json recording the
resolved configuration, its hash, the seed and the tool version, so
identical (config, seed, version) reproduce identical outputs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .ensemble import DisorderSpec
from .model import (DimerModel, ModelError, PulseSpec, build_model,
                    exciton_transform, preset_fwhm)
from .pipeline import (DEFAULT_N_LEVELS, DEFAULT_SIGMA_SCAN,
                       DEFAULT_TEMPERATURE, ensemble_absorption,
                       pump_probe_scan, run_witness)
from .polaron import (PolaronError, PolaronSpec, perturbation_magnitude,
                      polaron_basis, renormalized_coupling)
from .processmatrix import broadband_signal, compute_chi, default_t_grid
from .signals import NumericalError, rephasing_2des, resonant_pulse
from .traces import (SignalTrace, TraceError, write_csv_table,
                     write_json_table)
from .vibronic import diagonalize_model, thermal_weights
from .witness import WitnessError, analyze_traces

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class ConfigError(ValueError):
    pass


def _add_common(p):
    p.add_argument("--preset", help="model preset name")
    p.add_argument("--config", help="INI config file (flat key = value)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--n-levels", type=int, default=None,
                   help=f"oscillator levels per mode (default {DEFAULT_N_LEVELS})")
    p.add_argument("--temperature", type=float, default=None,
                   help=f"initial bath temperature in K (default {DEFAULT_TEMPERATURE})")
    p.add_argument("--t-max", type=float, default=None,
                   help="waiting-time range in fs (default 900)")
    p.add_argument("--t-points", type=int, default=None,
                   help="waiting-time samples (default 512)")
    p.add_argument("--seed", type=int, default=None,
                   help="disorder RNG seed (default 2024)")
    p.add_argument("--samples", type=int, default=None,
                   help="disorder ensemble size (0 disables disorder)")
    p.add_argument("--disorder-std", type=float, default=None,
                   help="site-energy disorder std in cm^-1 (default 40)")
    p.add_argument("--disorder-correlation", type=float, default=None,
                   help="site-energy correlation (default 0.8)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="ecwitness",
        description="Vibronic pump-probe simulator and witness for "
                    "coherent electronic oscillations")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("absorption", help="linear absorption spectrum")
    _add_common(p)
    p.add_argument("--line-width", type=float, default=30.0)

    p = sub.add_parser("pump-probe", help="pump-probe traces vs waiting time")
    _add_common(p)
    p.add_argument("--sigma", type=float, action="append", default=None,
                   help="pulse width sigma in fs (repeatable; 0 = broadband)")
    p.add_argument("--fwhm", type=float, action="append", default=None,
                   help="pulse intensity FWHM in fs (repeatable)")
    p.add_argument("--preset-fwhm", action="store_true",
                   help="use the preset's tabulated FWHM")

    p = sub.add_parser("chi", help="process matrix on the waiting-time grid")
    _add_common(p)
    p.add_argument("--basis", choices=("site", "exciton", "polaron"),
                   default="site")
    p.add_argument("--polaron-omega", type=float, action="append", default=None)
    p.add_argument("--polaron-g10", type=float, action="append", default=None)
    p.add_argument("--polaron-g01", type=float, action="append", default=None)

    p = sub.add_parser("2des", help="impulsive rephasing 2D spectra")
    _add_common(p)
    p.add_argument("--waiting-time", type=float, action="append", default=None,
                   help="waiting time T in fs (repeatable; default 100)")
    p.add_argument("--tau-step", type=float, default=4.0)
    p.add_argument("--tau-points", type=int, default=128)
    p.add_argument("--dephasing", type=float, default=30.0)

    p = sub.add_parser("witness", help="full sigma-scan witness pipeline")
    _add_common(p)
    p.add_argument("--sigma", type=float, action="append", default=None,
                   help="pulse widths for the scan (repeatable; >= 3 values)")
    p.add_argument("--fwhm", type=float, action="append", default=None)
    p.add_argument("--from-csv", nargs="+", metavar="TRACE_CSV",
                   help="analyze previously emitted traces instead of "
                        "simulating")

    p = sub.add_parser("polaron", help="polaron-transformation diagnostics")
    _add_common(p)
    p.add_argument("--polaron-omega", type=float, action="append", default=None)
    p.add_argument("--polaron-g10", type=float, action="append", default=None)
    p.add_argument("--polaron-g01", type=float, action="append", default=None)
    p.add_argument("--coupling", type=float, default=None,
                   help="bare J in cm^-1 (defaults to the model's)")
    return ap


# ---------------------------------------------------------------------------
# configuration resolution
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "n_levels": DEFAULT_N_LEVELS,
    "temperature": DEFAULT_TEMPERATURE,
    "t_max": 900.0,
    "t_points": 512,
    "seed": 2024,
    "samples": 0,
    "disorder_std": 40.0,
    "disorder_correlation": 0.8,
}

_TYPES = {"n_levels": int, "t_points": int, "seed": int, "samples": int}


def _read_config_file(path):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file '{path}'")
    out = {"model": {}, "run": {}}
    for section in cp.sections():
        for key, raw in cp.items(section):
            key = key.strip()
            if section == "model":
                out["model"][key] = _parse_scalar(raw)
            elif section in ("pulses", "ensemble", "grids", "analysis",
                             "output", "run"):
                out["run"][key] = _parse_scalar(raw)
            else:
                raise ConfigError(f"unknown config section '[{section}]'")
    return out


def _parse_scalar(raw):
    raw = raw.strip()
    if "," in raw:
        return [_parse_scalar(v) for v in raw.split(",")]
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def _resolve(args):
    """Merge defaults, config file and CLI flags into one run config."""
    cfg = dict(_DEFAULTS)
    model_cfg = {}
    if args.config:
        file_cfg = _read_config_file(args.config)
        model_cfg.update(file_cfg["model"])
        for key, val in file_cfg["run"].items():
            if key not in _DEFAULTS and key not in ("sigma", "fwhm"):
                raise ConfigError(f"unknown config key '{key}'")
            cfg[key] = val
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    for key, cast in _TYPES.items():
        cfg[key] = cast(cfg[key])
    if args.preset and model_cfg:
        raise ConfigError("give either --preset or a [model] config section")
    if args.preset:
        model = build_model(args.preset)
        model_desc = {"preset": args.preset}
    elif model_cfg:
        model = build_model(dict(model_cfg))
        model_desc = dict(model_cfg)
    else:
        raise ConfigError("a model is required: --preset or --config with "
                          "a [model] section")
    sigmas = _resolve_sigmas(args, cfg, model)
    return model, model_desc, cfg, sigmas


def _resolve_sigmas(args, cfg, model):
    sig = list(getattr(args, "sigma", None) or [])
    for f in (getattr(args, "fwhm", None) or []):
        sig.append(PulseSpec.sigma_from_fwhm(f))
    if getattr(args, "preset_fwhm", False):
        if not model.name:
            raise ConfigError("--preset-fwhm needs a preset model")
        sig.append(PulseSpec.sigma_from_fwhm(preset_fwhm(model.name)))
    if not sig:
        raw = cfg.get("sigma")
        if raw is not None:
            sig = [float(v) for v in (raw if isinstance(raw, list) else [raw])]
    if not sig:
        raw = cfg.get("fwhm")
        if raw is not None:
            sig = [PulseSpec.sigma_from_fwhm(float(v))
                   for v in (raw if isinstance(raw, list) else [raw])]
    return sig


def _disorder(cfg) -> DisorderSpec | None:
    if cfg["samples"] <= 0:
        return None
    return DisorderSpec(samples=cfg["samples"], std=cfg["disorder_std"],
                        correlation=cfg["disorder_correlation"],
                        seed=cfg["seed"])


def _t_grid(cfg):
    return default_t_grid(cfg["t_max"], cfg["t_points"])


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

class RunWriter:
    def __init__(self, outdir, fmt, command, model_desc, cfg, extra=None):
        self.outdir = outdir
        self.fmt = fmt
        self.files = []
        resolved = {"command": command, "model": model_desc,
                    "run": {k: cfg[k] for k in sorted(cfg)}}
        if extra:
            resolved["parameters"] = extra
        self.resolved = resolved
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.outdir, name)

    def want(self, kind):
        return self.fmt in (kind, "both")

    def write_trace(self, trace: SignalTrace, stem):
        if self.want("csv"):
            trace.to_csv(self.path(f"{stem}.csv"))
        if self.want("json"):
            trace.to_json(self.path(f"{stem}.json"))

    def write_table(self, stem, axis_label, axis, columns, metadata):
        if self.want("csv"):
            write_csv_table(self.path(f"{stem}.csv"), axis_label, axis,
                            columns, metadata)
        if self.want("json"):
            write_json_table(self.path(f"{stem}.json"), axis_label, axis,
                             columns, metadata)

    def finalize(self):
        blob = json.dumps(self.resolved, sort_keys=True).encode()
        manifest = {
            "tool": "ecwitness",
            "version": __version__,
            "config": self.resolved,
            "config_hash": hashlib.sha256(blob).hexdigest(),
            "seed": self.resolved["run"].get("seed"),
            "outputs": self.files,
        }
        with open(os.path.join(self.outdir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)


def _fmt_sigma(s):
    return f"{s:g}".replace(".", "p")


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_absorption(args):
    model, model_desc, cfg, _ = _resolve(args)
    writer = RunWriter(args.out, args.format, "absorption", model_desc, cfg,
                       {"line_width": args.line_width})
    trace = ensemble_absorption(model, _disorder(cfg),
                                temperature=cfg["temperature"],
                                n_levels=cfg["n_levels"],
                                line_width=args.line_width)
    writer.write_trace(trace, "absorption")
    writer.finalize()
    print(f"absorption spectrum written to {args.out}")
    return EXIT_OK


def _cmd_pump_probe(args):
    model, model_desc, cfg, sigmas = _resolve(args)
    if not sigmas:
        sigmas = [0.0]
    writer = RunWriter(args.out, args.format, "pump-probe", model_desc, cfg,
                       {"sigmas_fs": sigmas})
    t_grid = _t_grid(cfg)
    disorder = _disorder(cfg)
    tags = ("total", "SE", "ESA", "GSB")
    scanned = pump_probe_scan(model, sigmas, t_grid=t_grid, disorder=disorder,
                              temperature=cfg["temperature"],
                              n_levels=cfg["n_levels"], components=tags)
    for k, s in enumerate(sigmas):
        md = dict(scanned["total"][k].metadata)
        writer.write_table(f"pump_probe_sigma{_fmt_sigma(s)}", "T_fs", t_grid,
                           {tag: scanned[tag][k].values for tag in tags}, md)
    writer.finalize()
    print(f"pump-probe traces written to {args.out}")
    return EXIT_OK


def _cmd_chi(args):
    model, model_desc, cfg, _ = _resolve(args)
    basis = args.basis
    if basis == "polaron":
        spec = _polaron_spec(args, model, cfg)
        basis_m = polaron_basis(spec, model.site_energies())
    elif basis == "exciton" and model.site_count == 1:
        raise ModelError("no exciton basis for monomer")
    else:
        basis_m = basis
    writer = RunWriter(args.out, args.format, "chi", model_desc, cfg,
                       {"basis": args.basis})
    eig = diagonalize_model(model, cfg["n_levels"])
    w = thermal_weights(eig.ground, cfg["temperature"])
    t_grid = _t_grid(cfg)
    chi = compute_chi(model, eig, w,
                      t_grid, basis_m if basis == "polaron" else basis)
    report = chi.invariant_report()
    labels = chi.labels
    cols = {}
    ne = chi.n_electronic
    for i in range(ne):
        for j in range(ne):
            for q in range(ne):
                for p in range(ne):
                    stem = f"chi_{labels[i]}{labels[j]}_{labels[q]}{labels[p]}"
                    cols[f"{stem}_re"] = chi.tensor[:, i, j, q, p].real
                    cols[f"{stem}_im"] = chi.tensor[:, i, j, q, p].imag
    md = dict(chi.metadata)
    md.update({f"invariant_{k}": v for k, v in report.items()})
    writer.write_table("chi", "T_fs", t_grid, cols, md)
    writer.finalize()
    print("process matrix invariants (max deviation over grid):")
    for k, v in report.items():
        print(f"  {k}: {v:.3e}")
    print(f"written to {args.out}")
    return EXIT_OK


def _cmd_2des(args):
    model, model_desc, cfg, _ = _resolve(args)
    times = args.waiting_time or [100.0]
    writer = RunWriter(args.out, args.format, "2des", model_desc, cfg,
                       {"waiting_times_fs": times, "tau_step": args.tau_step,
                        "tau_points": args.tau_points,
                        "dephasing": args.dephasing})
    eig = diagonalize_model(model, cfg["n_levels"])
    w = thermal_weights(eig.ground, cfg["temperature"])
    grid = np.arange(args.tau_points) * args.tau_step
    for T in times:
        spec = rephasing_2des(model, eig, w, T, grid, grid,
                              dephasing=args.dephasing)
        stem = f"twodes_T{_fmt_sigma(T)}"
        if writer.want("csv"):
            spec.to_csv(writer.path(f"{stem}.csv"))
        if writer.want("json"):
            spec.to_json(writer.path(f"{stem}.json"))
    writer.finalize()
    print(f"2D spectra written to {args.out}")
    return EXIT_OK


def _cmd_witness(args):
    if args.from_csv:
        traces = [SignalTrace.from_csv(p) for p in args.from_csv]
        report = analyze_traces(traces)
        writer = RunWriter(args.out, args.format, "witness-from-csv",
                           {"inputs": list(args.from_csv)}, dict(_DEFAULTS))
    else:
        model, model_desc, cfg, sigmas = _resolve(args)
        if not sigmas:
            sigmas = list(DEFAULT_SIGMA_SCAN)
        if len(sigmas) < 3:
            raise ConfigError("the witness scan needs >= 3 pulse widths")
        if "samples" not in _given_keys(args) and cfg["samples"] == 0:
            cfg["samples"] = 500
        writer = RunWriter(args.out, args.format, "witness", model_desc, cfg,
                           {"sigmas_fs": sigmas})
        report, traces = run_witness(model, sigmas=sigmas,
                                     t_grid=_t_grid(cfg),
                                     disorder=_disorder(cfg),
                                     temperature=cfg["temperature"],
                                     n_levels=cfg["n_levels"])
        for tr in traces:
            stem = f"trace_sigma{_fmt_sigma(tr.metadata['sigma_fs'])}"
            writer.write_trace(tr, stem)
    report.to_json(writer.path("witness_report.json"))
    with open(writer.path("witness_report.txt"), "w") as fh:
        fh.write(report.summary() + "\n")
    writer.finalize()
    print(report.summary())
    return EXIT_OK


def _given_keys(args):
    return {k for k, v in vars(args).items() if v is not None}


def _polaron_spec(args, model, cfg):
    omegas = args.polaron_omega
    g10 = args.polaron_g10
    g01 = args.polaron_g01
    if not (omegas and g10 and g01):
        raise ConfigError("polaron basis needs --polaron-omega, "
                          "--polaron-g10 and --polaron-g01 (one per mode)")
    coupling = getattr(args, "coupling", None)
    if coupling is None:
        coupling = model.coupling
    return PolaronSpec(mode_frequencies=tuple(omegas),
                       couplings_10=tuple(g10), couplings_01=tuple(g01),
                       temperature=cfg["temperature"], coupling=coupling)


def _cmd_polaron(args):
    model, model_desc, cfg, _ = _resolve(args)
    if model.site_count == 1:
        raise ModelError("polaron diagnostics need a dimer")
    spec = _polaron_spec(args, model, cfg)
    w_avg, j_tilde = renormalized_coupling(spec)
    pert = perturbation_magnitude(spec)
    basis = polaron_basis(spec, model.site_energies())
    if pert < 0.2 * abs(spec.coupling) or w_avg > 0.9:
        recommended = "exciton" if w_avg > 0.9 else "polaron"
    else:
        recommended = "polaron (low confidence: large residual coupling)"
    writer = RunWriter(args.out, args.format, "polaron", model_desc, cfg,
                       {"mode_frequencies": list(spec.mode_frequencies),
                        "g10": list(spec.couplings_10),
                        "g01": list(spec.couplings_01),
                        "coupling": spec.coupling})
    payload = {
        "thermal_dressing_factor": w_avg,
        "renormalized_coupling_cm": j_tilde,
        "perturbation_magnitude_cm": pert,
        "recommended_basis": recommended,
        "basis_rotation": basis.tolist(),
        "temperature_K": spec.temperature,
    }
    with open(writer.path("polaron.json"), "w") as fh:
        json.dump(payload, fh, indent=1)
    writer.finalize()
    print(f"thermal dressing factor <w> = {w_avg:.6f}")
    print(f"renormalized coupling J<w>  = {j_tilde:.4f} cm^-1")
    print(f"perturbation magnitude      = {pert:.4f} cm^-1")
    print(f"recommended electronic basis: {recommended}")
    return EXIT_OK


_HANDLERS = {
    "absorption": _cmd_absorption,
    "pump-probe": _cmd_pump_probe,
    "chi": _cmd_chi,
    "2des": _cmd_2des,
    "witness": _cmd_witness,
    "polaron": _cmd_polaron,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, matching the config-error code
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ModelError, PolaronError, WitnessError, TraceError,
            configparser.Error, KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
