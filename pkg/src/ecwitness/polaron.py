"""Full-polaron transformation diagnostics for the coupled dimer.

Dressing the site excitations by their phonon displacements renormalizes
the site-site coupling to J <w>, with

    <w> = exp( -(1/2) sum_n (g10_n - g01_n)^2 coth(beta w_n / 2) ),

and leaves a residual perturbation of magnitude J sqrt(1 - <w>^2), the
figure of merit for trusting the zeroth-order (polaron-basis) picture.
Diagnostics only: no polaron-transformed dynamics are propagated here.
Couplings g are dimensionless per-mode displacement parameters supplied
directly (they are not derived from model presets).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import KB_CM


class PolaronError(ValueError):
    """Raised for invalid polaron specifications."""


@dataclass(frozen=True)
class PolaronSpec:
    """Mode frequencies, per-site couplings and thermal state for a dimer.

    Attributes:
        mode_frequencies: w_n in cm^-1, all > 0.
        couplings_10, couplings_01: dimensionless g_{e,n}, one per mode.
        temperature: K, > 0 (sets beta = 1 / (k_B T) in 1/cm^-1).
        coupling: bare J in cm^-1.
    """

    mode_frequencies: tuple
    couplings_10: tuple
    couplings_01: tuple
    temperature: float
    coupling: float

    def __post_init__(self):
        nm = len(self.mode_frequencies)
        if len(self.couplings_10) != nm or len(self.couplings_01) != nm:
            raise PolaronError("one coupling per mode and site required")
        if any(w <= 0 for w in self.mode_frequencies):
            raise PolaronError("mode frequencies must be positive")
        if self.temperature <= 0:
            raise PolaronError("temperature must be positive")

    @property
    def beta(self) -> float:
        """Inverse temperature in 1/cm^-1."""
        return 1.0 / (KB_CM * self.temperature)


def renormalized_coupling(spec: PolaronSpec) -> tuple[float, float]:
    """Thermal dressing factor <w> in (0, 1] and the renormalized J <w>."""
    beta = spec.beta
    acc = 0.0
    for w, g10, g01 in zip(spec.mode_frequencies, spec.couplings_10,
                           spec.couplings_01):
        dg = g10 - g01
        acc += dg * dg / math.tanh(beta * w / 2.0)
    w_avg = math.exp(-0.5 * acc)
    return w_avg, spec.coupling * w_avg


def perturbation_magnitude(spec: PolaronSpec) -> float:
    """Residual coupling J sqrt(1 - <w>^2) in cm^-1.

    Zero iff both sites couple identically to every mode; values of the
    order of J itself flag the zeroth-order polaron picture as
    unreliable.
    """
    w_avg, _ = renormalized_coupling(spec)
    return abs(spec.coupling) * math.sqrt(max(0.0, 1.0 - w_avg * w_avg))


def reorganization_shifts(spec: PolaronSpec) -> tuple[float, float]:
    """Polaron stabilization sum_n w_n g_{e,n}^2 per site (cm^-1)."""
    s10 = sum(w * g * g for w, g in zip(spec.mode_frequencies,
                                        spec.couplings_10))
    s01 = sum(w * g * g for w, g in zip(spec.mode_frequencies,
                                        spec.couplings_01))
    return s10, s01


def polaron_basis(spec: PolaronSpec, site_energies) -> np.ndarray:
    """2x2 unitary of the polaronic electronic states (columns, site basis).

    Diagonalizes [[E10 - r10, J<w>], [J<w>, E01 - r01]] with r_e the
    reorganization shifts; feeds the process-matrix basis argument.
    site_energies are the bare (unshifted) offsets in cm^-1.
    """
    site_energies = np.asarray(site_energies, dtype=float)
    if site_energies.shape != (2,):
        raise PolaronError("polaron basis needs the two dimer site energies")
    r10, r01 = reorganization_shifts(spec)
    _, j_tilde = renormalized_coupling(spec)
    h = np.array([[site_energies[0] - r10, j_tilde],
                  [j_tilde, site_energies[1] - r01]])
    if h[0, 0] == h[1, 1] and j_tilde == 0.0:
        return np.eye(2)
    _, vectors = np.linalg.eigh(h)
    for k in range(2):
        j = int(np.argmax(np.abs(vectors[:, k])))
        if vectors[j, k] < 0:
            vectors[:, k] = -vectors[:, k]
    return vectors


def displacement_thermal_average(delta_g: float, omega: float,
                                 temperature: float, n_levels: int = 40) -> float:
    """Brute-force Tr[exp(dg (b+ - b)) rho_th] in a truncated oscillator.

    Independent oracle for the closed form exp(-dg^2 coth(beta w/2) / 2);
    exact as n_levels grows (keep beta * omega away from 0).
    """
    from scipy.linalg import expm

    beta = 1.0 / (KB_CM * temperature)
    n = np.arange(n_levels)
    ladder = np.diag(np.sqrt(n[1:]), 1)
    gen = delta_g * (ladder.T - ladder)
    disp = expm(gen)
    occ = np.exp(-beta * omega * n)
    occ = occ / occ.sum()
    return float(np.sum(np.diag(disp) * occ))
