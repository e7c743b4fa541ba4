"""Witness decision protocol: oscillation extraction from waiting-time
traces and extrapolation of peak amplitudes to vanishing pulse width.

Pipeline: collect pump-probe traces at several pulse widths (all roughly
in the broadband regime), Fourier transform each over the waiting time
after dc subtraction, locate spectral peaks above a robust noise floor,
fit each peak's amplitude linearly in the pulse width, and declare the
witness positive iff some nonzero-frequency intercept at sigma -> 0 is
significant.  All thresholds are relative, so the verdict is invariant
under an overall rescaling of the input traces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C_CM_FS
from .traces import SignalTrace, TraceError

#: default significance: intercept > 3 standard errors AND > 1% of dc
SIGNIFICANCE_SE = 3.0
SIGNIFICANCE_REL_DC = 0.01

#: default peak threshold: median + 5 * MAD of the magnitude spectrum
PEAK_MAD_FACTOR = 5.0


class WitnessError(ValueError):
    """Raised for protocol misuse (bad grids, too few widths, ...)."""


def _window(name: str, n: int) -> np.ndarray:
    if name == "hann":
        return np.hanning(n)
    if name in (None, "none", "rect"):
        return np.ones(n)
    raise WitnessError(f"unknown window '{name}'")


def transform_trace(trace: SignalTrace, window: str = "hann",
                    pad_factor: int = 4, subtract_mean: bool = True) -> SignalTrace:
    """One-sided transform S~(w) = (1/2pi) sum dT e^{+i w T} S(T).

    The mean (dc) is subtracted first; a window reduces leakage over the
    finite record.  Frequencies are reported in cm^-1 (>= 0 only; the
    input is real so negative frequencies are redundant).  Metadata
    carries the calibration factor 'amplitude_scale' that converts
    |values| into cosine-amplitude units (a pure A cos(wT) input peaks at
    A/2 after calibration, window-corrected).

    Raises:
        WitnessError: if the waiting-time grid is not uniform.
    """
    t = trace.axis
    if t.size < 8:
        raise WitnessError("trace too short to transform")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=0, atol=1e-9 * dt):
        raise WitnessError("non-uniform waiting-time grid")
    if pad_factor < 1:
        raise WitnessError("pad_factor must be >= 1")
    values = np.asarray(trace.values, dtype=float)
    dc = float(np.mean(values))
    if subtract_mean:
        values = values - dc
    win = _window(window, values.size)
    padded = np.zeros(values.size * pad_factor)
    padded[:values.size] = values * win
    n = padded.size
    # e^{+i w T_k} transform: inverse-FFT convention times n
    spec = np.fft.ifft(padded) * n * dt / (2.0 * math.pi)
    freqs_radfs = 2.0 * math.pi * np.fft.fftfreq(n, d=dt)
    keep = freqs_radfs >= 0
    freqs_cm = freqs_radfs[keep] / (2.0 * math.pi * C_CM_FS)
    md = dict(trace.metadata)
    md.update({
        "window": window, "pad_factor": pad_factor, "dt_fs": dt,
        "n_samples": int(values.size), "dc_value": dc,
        "bin_width_cm": 1.0 / (values.size * dt * C_CM_FS),
        "amplitude_scale": 2.0 * math.pi / (dt * float(np.sum(win))),
    })
    return SignalTrace(freqs_cm, spec[keep], "omega_T_cm", "S_tilde", md)


def calibrated_magnitude(spectrum: SignalTrace) -> np.ndarray:
    """|S~| scaled so a cosine of amplitude A peaks at A/2."""
    scale = spectrum.metadata.get("amplitude_scale", 1.0)
    return np.abs(spectrum.values) * scale


def noise_floor(spectrum: SignalTrace, mad_factor: float = PEAK_MAD_FACTOR) -> float:
    """Robust floor of the calibrated magnitude: median + k * MAD."""
    mag = calibrated_magnitude(spectrum)
    med = float(np.median(mag))
    mad = float(np.median(np.abs(mag - med)))
    return med + mad_factor * mad


def locate_peaks(spectrum: SignalTrace, mad_factor: float = PEAK_MAD_FACTOR,
                 dc_exclude_cm: float | None = None):
    """Local maxima of the calibrated magnitude above the noise floor.

    The dc region is excluded (default: 1.5 unpadded bin widths).
    Sub-bin frequencies come from a three-point quadratic fit on the
    log magnitude.  Returns a list of (frequency_cm, amplitude) sorted
    by descending amplitude.

    Raises:
        WitnessError: on an empty spectrum.
    """
    if spectrum.axis.size == 0:
        raise WitnessError("empty spectrum")
    mag = calibrated_magnitude(spectrum)
    freqs = spectrum.axis
    floor = noise_floor(spectrum, mad_factor)
    if dc_exclude_cm is None:
        dc_exclude_cm = 1.5 * spectrum.metadata.get(
            "bin_width_cm", freqs[1] - freqs[0] if freqs.size > 1 else 0.0)
    peaks = []
    for k in range(1, mag.size - 1):
        if freqs[k] <= dc_exclude_cm:
            continue
        if mag[k] > mag[k - 1] and mag[k] >= mag[k + 1] and mag[k] > floor:
            freq, amp = _quadratic_peak(freqs, mag, k)
            peaks.append((freq, amp))
    peaks.sort(key=lambda p: -p[1])
    return peaks


def _quadratic_peak(freqs, mag, k):
    """Three-point quadratic interpolation on log magnitude around bin k."""
    y0, y1, y2 = mag[k - 1], mag[k], mag[k + 1]
    if y0 <= 0 or y2 <= 0:
        return float(freqs[k]), float(y1)
    l0, l1, l2 = math.log(y0), math.log(y1), math.log(y2)
    denom = l0 - 2.0 * l1 + l2
    if denom >= 0:
        return float(freqs[k]), float(y1)
    shift = 0.5 * (l0 - l2) / denom
    shift = max(-0.5, min(0.5, shift))
    df = freqs[k + 1] - freqs[k]
    amp = math.exp(l1 - 0.25 * (l0 - l2) * shift)
    return float(freqs[k] + shift * df), float(amp)


def magnitude_at(spectrum: SignalTrace, frequency_cm: float) -> float:
    """Calibrated magnitude at an arbitrary frequency (local quadratic)."""
    mag = calibrated_magnitude(spectrum)
    freqs = spectrum.axis
    k = int(np.clip(np.searchsorted(freqs, frequency_cm), 1, freqs.size - 2))
    if abs(freqs[k - 1] - frequency_cm) < abs(freqs[k] - frequency_cm):
        k -= 1
    k = int(np.clip(k, 1, freqs.size - 2))
    y0, y1, y2 = mag[k - 1], mag[k], mag[k + 1]
    if y0 <= 0 or y1 <= 0 or y2 <= 0:
        return float(y1)
    x = (frequency_cm - freqs[k]) / (freqs[k + 1] - freqs[k])
    l0, l1, l2 = math.log(y0), math.log(y1), math.log(y2)
    val = l1 + 0.5 * x * (l2 - l0) + 0.5 * x * x * (l0 - 2 * l1 + l2)
    return float(math.exp(val))


# ---------------------------------------------------------------------------
# Linear extrapolation in the pulse width
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearFit:
    """Least-squares line amplitude(sigma) = intercept + slope * sigma."""

    intercept: float
    slope: float
    intercept_se: float
    slope_se: float
    r_squared: float
    n_points: int

    def to_dict(self):
        return {"intercept": self.intercept, "slope": self.slope,
                "intercept_se": self.intercept_se, "slope_se": self.slope_se,
                "r_squared": self.r_squared, "n_points": self.n_points}


def sigma_extrapolate(sigmas, amplitudes) -> LinearFit:
    """Fit amplitude(sigma) by ordinary least squares and extrapolate to 0.

    Requires at least three distinct widths.  Standard errors follow from
    the residual variance with n - 2 degrees of freedom; for a perfectly
    linear input they are zero and the intercept is exact.
    """
    s = np.asarray(sigmas, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    if s.shape != a.shape or s.ndim != 1:
        raise WitnessError("sigma and amplitude arrays must align")
    if np.unique(s).size < 3:
        raise WitnessError("need at least three distinct pulse widths")
    n = s.size
    sxx = float(np.sum((s - s.mean()) ** 2))
    if sxx == 0:
        raise WitnessError("degenerate pulse widths")
    slope = float(np.sum((s - s.mean()) * (a - a.mean())) / sxx)
    intercept = float(a.mean() - slope * s.mean())
    resid = a - (intercept + slope * s)
    ssr = float(np.sum(resid ** 2))
    sst = float(np.sum((a - a.mean()) ** 2))
    s2 = ssr / (n - 2) if n > 2 else 0.0
    slope_se = math.sqrt(s2 / sxx)
    intercept_se = math.sqrt(s2 * (1.0 / n + s.mean() ** 2 / sxx))
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return LinearFit(intercept=intercept, slope=slope,
                     intercept_se=intercept_se, slope_se=slope_se,
                     r_squared=r2, n_points=n)


# ---------------------------------------------------------------------------
# Report and decision
# ---------------------------------------------------------------------------

@dataclass
class PeakRecord:
    frequency_cm: float
    amplitudes: dict            # sigma -> calibrated amplitude
    fit: LinearFit
    significant: bool

    def to_dict(self):
        return {"frequency_cm": self.frequency_cm,
                "amplitudes": {repr(k): v for k, v in self.amplitudes.items()},
                "fit": self.fit.to_dict(), "significant": self.significant}


@dataclass
class WitnessReport:
    """Full record of one witness run: peaks, fits, verdict, provenance."""

    positive: bool
    peaks: list
    sigmas: list
    dc_magnitude: float
    noise_floors: dict          # sigma -> floor
    threshold_se: float = SIGNIFICANCE_SE
    threshold_rel_dc: float = SIGNIFICANCE_REL_DC
    metadata: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "positive" if self.positive else "negative"

    def dominant_frequency(self):
        """Frequency of the most significant surviving peak, or None."""
        sig = [p for p in self.peaks if p.significant]
        if not sig:
            return None
        best = max(sig, key=lambda p: p.fit.intercept)
        return best.frequency_cm

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "positive": self.positive,
            "sigmas_fs": list(self.sigmas),
            "dc_magnitude": self.dc_magnitude,
            "noise_floors": {repr(k): v for k, v in self.noise_floors.items()},
            "threshold_se": self.threshold_se,
            "threshold_rel_dc": self.threshold_rel_dc,
            "peaks": [p.to_dict() for p in self.peaks],
            "metadata": self.metadata,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    def summary(self) -> str:
        lines = [f"witness verdict: {self.verdict}",
                 f"pulse widths (fs): {', '.join(f'{s:g}' for s in self.sigmas)}",
                 f"dc magnitude: {self.dc_magnitude:.6g}",
                 f"threshold: intercept > {self.threshold_se:g} SE and "
                 f"> {self.threshold_rel_dc:.2%} of dc"]
        if not self.peaks:
            lines.append("no peaks above the noise floor")
        for p in self.peaks:
            f = p.fit
            lines.append(
                f"  peak {p.frequency_cm:8.2f} cm^-1: intercept "
                f"{f.intercept:+.4g} +- {f.intercept_se:.2g}, slope "
                f"{f.slope:+.4g} +- {f.slope_se:.2g}, R^2 {f.r_squared:.4f}"
                f"{'  [significant]' if p.significant else ''}")
        return "\n".join(lines)


def decide(sigmas, peak_table, dc_magnitude, noise_floors=None,
           threshold_se: float = SIGNIFICANCE_SE,
           threshold_rel_dc: float = SIGNIFICANCE_REL_DC,
           metadata=None) -> WitnessReport:
    """Assemble fits and verdict from a peak-amplitude table.

    peak_table maps frequency (cm^-1) -> amplitude list aligned with
    sigmas.  A peak is significant iff its sigma -> 0 intercept exceeds
    threshold_se standard errors AND threshold_rel_dc of |dc|.  The
    verdict is positive iff any peak is significant.
    """
    sigmas = [float(s) for s in sigmas]
    peaks = []
    for freq in sorted(peak_table):
        amps = np.asarray(peak_table[freq], dtype=float)
        fit = sigma_extrapolate(sigmas, amps)
        significant = (fit.intercept > threshold_se * fit.intercept_se
                       and fit.intercept > threshold_rel_dc * abs(dc_magnitude))
        peaks.append(PeakRecord(frequency_cm=float(freq),
                                amplitudes=dict(zip(sigmas, amps.tolist())),
                                fit=fit, significant=significant))
    peaks.sort(key=lambda p: -(p.fit.intercept))
    return WitnessReport(positive=any(p.significant for p in peaks),
                         peaks=peaks, sigmas=sigmas,
                         dc_magnitude=float(dc_magnitude),
                         noise_floors=dict(noise_floors or {}),
                         threshold_se=threshold_se,
                         threshold_rel_dc=threshold_rel_dc,
                         metadata=dict(metadata or {}))


def analyze_traces(traces, window: str = "hann", pad_factor: int = 4,
                   mad_factor: float = PEAK_MAD_FACTOR,
                   threshold_se: float = SIGNIFICANCE_SE,
                   threshold_rel_dc: float = SIGNIFICANCE_REL_DC,
                   metadata=None) -> WitnessReport:
    """Run the decision protocol on waiting-time traces at several widths.

    Each trace's metadata must carry its pulse width under
    'sigma_pump_fs' or 'sigma_fs'.  Peaks found in any trace are grouped
    across widths (within one unpadded bin) and every group's amplitude
    is then read from all spectra at the common frequency, so the fit
    table is complete even where a peak dips below its local floor.
    """
    traces = list(traces)
    if len(traces) < 3:
        raise WitnessError("need traces for at least three pulse widths")
    sig_traces = []
    for tr in traces:
        md = tr.metadata
        sigma = md.get("sigma_pump_fs", md.get("sigma_fs"))
        if sigma is None:
            raise WitnessError("trace missing pulse width metadata "
                               "(sigma_pump_fs)")
        sig_traces.append((float(sigma), tr))
    sig_traces.sort(key=lambda p: p[0])
    sigmas = [s for s, _ in sig_traces]
    if len(set(sigmas)) != len(sigmas):
        raise WitnessError("duplicate pulse widths")
    spectra = {s: transform_trace(tr, window=window, pad_factor=pad_factor)
               for s, tr in sig_traces}
    floors = {s: noise_floor(sp, mad_factor) for s, sp in spectra.items()}
    dc = abs(float(np.mean(sig_traces[0][1].values)))

    bin_cm = spectra[sigmas[0]].metadata["bin_width_cm"]
    found = []
    for s in sigmas:
        found.extend(f for f, _ in locate_peaks(spectra[s], mad_factor))
    clusters = _cluster(sorted(found), tol=bin_cm)
    table = {}
    for freq in clusters:
        table[freq] = [magnitude_at(spectra[s], freq) for s in sigmas]
    md = dict(metadata or {})
    md.update({"window": window, "pad_factor": pad_factor,
               "mad_factor": mad_factor})
    return decide(sigmas, table, dc, noise_floors=floors,
                  threshold_se=threshold_se, threshold_rel_dc=threshold_rel_dc,
                  metadata=md)


def _cluster(sorted_values, tol):
    """Group sorted scalars closer than tol; return group means."""
    out = []
    group = []
    for v in sorted_values:
        if group and v - group[-1] > tol:
            out.append(float(np.mean(group)))
            group = []
        group.append(v)
    if group:
        out.append(float(np.mean(group)))
    return out
