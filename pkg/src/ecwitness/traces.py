"""Signal containers and their CSV/JSON serialization.

CSV layout: `#`-prefixed metadata header lines (`# key = value`), then a
plain header row and comma-separated columns.  JSON files mirror the same
content (axis, columns, metadata) verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class TraceError(ValueError):
    """Raised for malformed or incompatible traces."""


def coerce_real(values, tol=1e-9):
    """Drop a numerically vanishing imaginary part; keep large ones visible."""
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return values
    scale = max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
    if np.max(np.abs(values.imag)) <= tol * scale:
        return values.real.copy()
    return values


def _meta_str(value):
    if isinstance(value, (np.floating, np.integer)):
        return repr(value.item())
    return repr(value) if isinstance(value, str) else json.dumps(value)


@dataclass
class SignalTrace:
    """One real or complex trace over a strictly increasing axis.

    metadata carries everything needed to reproduce the trace (preset,
    pulse widths, ensemble settings, polarization, component tag, ...).
    """

    axis: np.ndarray
    values: np.ndarray
    axis_label: str = "T_fs"
    value_label: str = "signal"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values)
        if self.axis.ndim != 1 or self.values.shape[0] != self.axis.size:
            raise TraceError("axis and values must align")
        if self.axis.size > 1 and not np.all(np.diff(self.axis) > 0):
            raise TraceError("axis must be strictly increasing")

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    def copy_with(self, values=None, **meta):
        md = dict(self.metadata)
        md.update(meta)
        return SignalTrace(self.axis.copy(),
                           self.values.copy() if values is None else values,
                           self.axis_label, self.value_label, md)

    # -- serialization ------------------------------------------------------

    def _columns(self):
        if self.is_complex:
            return {f"{self.value_label}_re": self.values.real,
                    f"{self.value_label}_im": self.values.imag}
        return {self.value_label: self.values}

    def to_csv(self, path):
        cols = self._columns()
        with open(path, "w") as fh:
            for key in sorted(self.metadata):
                fh.write(f"# {key} = {_meta_str(self.metadata[key])}\n")
            fh.write(",".join([self.axis_label] + list(cols)) + "\n")
            data = np.column_stack([self.axis] + [np.asarray(c, float) for c in cols.values()])
            np.savetxt(fh, data, delimiter=",", fmt="%.12g")

    def to_json_dict(self):
        out = {"axis_label": self.axis_label, "axis": self.axis.tolist(),
               "metadata": self.metadata}
        for name, col in self._columns().items():
            out[name] = np.asarray(col, float).tolist()
        return out

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @classmethod
    def from_csv(cls, path):
        metadata, header, rows = {}, None, []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if "=" in body:
                        key, _, raw = body.partition("=")
                        metadata[key.strip()] = _parse_meta(raw.strip())
                    continue
                if header is None:
                    header = [c.strip() for c in line.split(",")]
                    continue
                rows.append([float(v) for v in line.split(",")])
        if header is None or not rows:
            raise TraceError(f"no data in {path}")
        data = np.asarray(rows)
        axis = data[:, 0]
        names = header[1:]
        if len(names) == 2 and names[0].endswith("_re") and names[1].endswith("_im"):
            values = data[:, 1] + 1j * data[:, 2]
            label = names[0][:-3]
        else:
            values = data[:, 1]
            label = names[0]
        return cls(axis=axis, values=values, axis_label=header[0],
                   value_label=label, metadata=metadata)


def _parse_meta(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        try:
            import ast

            return ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            return raw


def write_csv_table(path, axis_label, axis, columns, metadata=None):
    """Multi-column CSV sharing one axis; '#' metadata header lines."""
    with open(path, "w") as fh:
        for key in sorted(metadata or {}):
            fh.write(f"# {key} = {_meta_str(metadata[key])}\n")
        fh.write(",".join([axis_label] + list(columns)) + "\n")
        data = np.column_stack([np.asarray(axis, float)]
                               + [np.asarray(c, float) for c in columns.values()])
        np.savetxt(fh, data, delimiter=",", fmt="%.12g")


def write_json_table(path, axis_label, axis, columns, metadata=None):
    """JSON mirror of write_csv_table."""
    out = {"axis_label": axis_label, "axis": np.asarray(axis, float).tolist(),
           "metadata": metadata or {}}
    for name, col in columns.items():
        out[name] = np.asarray(col, float).tolist()
    with open(path, "w") as fh:
        json.dump(out, fh, indent=1)


PP_COMPONENTS = ("SE", "ESA", "GSB")


@dataclass
class PumpProbeSignal:
    """Pump-probe signal with per-pathway components on a waiting-time grid."""

    t_grid: np.ndarray
    se: np.ndarray
    esa: np.ndarray
    gsb: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def total(self):
        return self.se + self.esa + self.gsb

    def component(self, tag: str) -> np.ndarray:
        return {"SE": self.se, "ESA": self.esa, "GSB": self.gsb,
                "total": self.total}[tag]

    def trace(self, tag: str = "total") -> SignalTrace:
        md = dict(self.metadata)
        md["component"] = tag
        return SignalTrace(self.t_grid, self.component(tag), "T_fs",
                           "S_pp", md)


@dataclass
class Spectrum2D:
    """Complex rephasing 2D spectrum at one waiting time."""

    omega_tau: np.ndarray     # cm^-1, relative to the carrier
    omega_t: np.ndarray       # cm^-1, relative to the carrier
    waiting_time: float       # fs
    values: np.ndarray        # shape (omega_tau, omega_t), complex
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.omega_tau.size, self.omega_t.size):
            raise TraceError("2D grid does not match its axes")

    def to_json(self, path):
        out = {
            "omega_tau_cm": self.omega_tau.tolist(),
            "omega_t_cm": self.omega_t.tolist(),
            "waiting_time_fs": self.waiting_time,
            "real": self.values.real.tolist(),
            "imag": self.values.imag.tolist(),
            "metadata": self.metadata,
        }
        with open(path, "w") as fh:
            json.dump(out, fh)

    def to_csv(self, path):
        with open(path, "w") as fh:
            for key in sorted(self.metadata):
                fh.write(f"# {key} = {_meta_str(self.metadata[key])}\n")
            fh.write(f"# waiting_time_fs = {self.waiting_time}\n")
            fh.write("omega_tau_cm,omega_t_cm,re,im\n")
            for i, wt in enumerate(self.omega_tau):
                block = np.column_stack([
                    np.full(self.omega_t.size, wt), self.omega_t,
                    self.values[i].real, self.values[i].imag,
                ])
                np.savetxt(fh, block, delimiter=",", fmt="%.10g")
