"""Disorder sampling, orientational averaging and trace averaging.

Disorder follows the static-ensemble protocol: correlated Gaussian shifts
of the site energies, one independent molecule per sample, signals
averaged after simulation.  Orientational averaging for the collinear
zzzz pulse setting uses the closed-form fourth-rank isotropic tensor
identity rather than numerical orientation sampling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import DimerModel
from .traces import SignalTrace, TraceError

#: RNG algorithm used for disorder sampling (echoed in output metadata)
RNG_ALGORITHM = "numpy-PCG64"


@dataclass(frozen=True)
class DisorderSpec:
    """Gaussian site-energy disorder for a molecular ensemble.

    correlation is the Pearson coefficient between the two site shifts of
    a dimer; ignored (with a warning) for monomers.
    """

    samples: int = 500
    std: float = 40.0             # cm^-1
    correlation: float = 0.8
    seed: int = 2024

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be >= 1")
        if self.std < 0:
            raise ValueError("disorder std must be >= 0")
        if abs(self.correlation) > 1:
            raise ValueError("correlation must lie in [-1, 1]")

    def metadata(self):
        return {"disorder_samples": self.samples, "disorder_std_cm": self.std,
                "disorder_correlation": self.correlation, "seed": self.seed,
                "rng": RNG_ALGORITHM}


def disorder_shifts(spec: DisorderSpec, site_count: int) -> np.ndarray:
    """Site-energy shifts, shape (samples, site_count); deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    if site_count == 1:
        return spec.std * rng.standard_normal((spec.samples, 1))
    cov = spec.std ** 2 * np.array([[1.0, spec.correlation],
                                    [spec.correlation, 1.0]])
    ell = np.linalg.cholesky(cov + 1e-30 * np.eye(2))
    return rng.standard_normal((spec.samples, 2)) @ ell.T


def sample_disorder(spec: DisorderSpec, base: DimerModel):
    """Sequence of disordered copies of the base model."""
    if base.site_count == 1 and spec.correlation != 0.0:
        warnings.warn("site-energy correlation is ignored for a monomer",
                      stacklevel=2)
    return [base.with_site_shifts(s) for s in disorder_shifts(spec, base.site_count)]


# ---------------------------------------------------------------------------
# Orientational averaging
# ---------------------------------------------------------------------------

def zzzz_average(dipole_quadruple) -> complex:
    """Isotropic average of (mu_a.z)(mu_b.z)(mu_c.z)(mu_d.z).

    Closed form from the fourth-rank isotropic tensor:
    (1/15) [(a.b)(c.d) + (a.c)(b.d) + (a.d)(b.c)].  Bilinear in each
    vector (no implicit conjugation), so complex dipoles from a rotated
    electronic basis pass through unchanged.
    """
    a, b, c, d = (np.asarray(v) for v in dipole_quadruple)
    val = (np.dot(a, b) * np.dot(c, d) + np.dot(a, c) * np.dot(b, d)
           + np.dot(a, d) * np.dot(b, c)) / 15.0
    return val


def isotropic_pair_average(mu_a, mu_b) -> complex:
    """Isotropic average of (mu_a.e)(mu_b.e) over orientations: (a.b)/3."""
    return np.dot(np.asarray(mu_a), np.asarray(mu_b)) / 3.0


def pathway_weight(dipole_quadruple, polarization) -> complex:
    """Orientation weight of one four-dipole pathway.

    polarization is either the string 'zzzz' (isotropic average of the
    collinear setting) or a pair of lab-frame unit vectors (e_pump,
    e_probe) applied to the four dipoles in pathway order (probe, pump,
    pump, probe) for a single fixed molecular orientation.
    """
    if isinstance(polarization, str):
        if polarization != "zzzz":
            raise ValueError(f"unknown polarization setting '{polarization}'")
        return zzzz_average(dipole_quadruple)
    e_pump, e_probe = (np.asarray(e, dtype=float) for e in polarization)
    order = (e_probe, e_pump, e_pump, e_probe)
    out = 1.0
    for mu, e in zip(dipole_quadruple, order):
        out = out * np.dot(np.asarray(mu), e)
    return out


# ---------------------------------------------------------------------------
# Trace averaging
# ---------------------------------------------------------------------------

def ensemble_average(traces, weights=None) -> SignalTrace:
    """Weighted mean of aligned traces (deterministic reduction order)."""
    traces = list(traces)
    if not traces:
        raise TraceError("nothing to average")
    axis = traces[0].axis
    for tr in traces[1:]:
        if tr.axis.shape != axis.shape or not np.allclose(tr.axis, axis,
                                                          rtol=0, atol=1e-9):
            raise TraceError("trace axes do not match")
    stack = np.stack([tr.values for tr in traces])
    if weights is None:
        w = np.full(len(traces), 1.0 / len(traces))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(traces),):
            raise TraceError("one weight per trace required")
        w = w / np.sum(w)
    mean = np.tensordot(w, stack, axes=(0, 0))
    md = dict(traces[0].metadata)
    md["ensemble_size"] = len(traces)
    return SignalTrace(axis.copy(), mean, traces[0].axis_label,
                       traces[0].value_label, md)
