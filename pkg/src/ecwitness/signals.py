"""Finite-bandwidth pump-probe signals, linear absorption and rephasing
2D electronic spectra, by explicit sums over vibronic eigenstates.

Conventions (see also model.py): energies in cm^-1 in the rotating frame
of the model carrier; pulse detunings are converted to rad/fs before any
Gaussian or error-function evaluation.  Signals are reported in the
arbitrary units fixed by the pulse strengths (1 by default).

Stimulated emission and excited-state absorption carry only the Gaussian
spectral amplitudes of the pulses.  The ground-state-bleach pathways add
complex-argument error functions from the time ordering of the two
interactions within one pulse:

    K(d1, d2; sigma) = (1/2) E(d1) E(d2) [1 - erf(i sigma (d1 + d2)/2)]

with E the Gaussian spectral amplitude at detuning d.  Both bleach
families (pump pair against probe pair, and the four-interaction
correction to the unperturbed ground state) are kept; at sigma = 0 they
collapse to the stationary broadband background exactly.  Pump-probe
pulse overlap is not modelled: waiting times are assumed large against
the pulse widths, while the overlap of a pulse with itself is exact.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import erfi

from .constants import CM_TO_RADFS, KB_CM
from .ensemble import isotropic_pair_average, pathway_weight, zzzz_average
from .model import DOUBLE, DimerModel, ModelError, PulseSpec, exciton_transform
from .traces import PumpProbeSignal, SignalTrace, Spectrum2D, coerce_real
from .vibronic import ModelEigensystems, ThermalWeights, fc_overlap_table

#: erfi argument beyond which the exp-combined asymptotic form is used
_ERFI_GUARD = 25.0


class NumericalError(RuntimeError):
    """Raised when a numerical guard cannot rescue an evaluation."""


def _detunings_radfs(upper_energies, lower_energies, pulse: PulseSpec,
                     carrier_frequency: float) -> np.ndarray:
    """Detunings (upper - lower - pulse offset) in rad/fs, shape (nu, nl)."""
    offset = pulse.carrier - carrier_frequency
    d = upper_energies[:, None] - lower_energies[None, :] - offset
    return d * CM_TO_RADFS


def gaussian_amplitude(detuning_radfs, sigma: float, strength: float = 1.0):
    """Pulse spectral amplitude at a rad/fs detuning; sigma = 0 is flat."""
    detuning_radfs = np.asarray(detuning_radfs, dtype=float)
    if sigma == 0.0:
        return strength * np.ones_like(detuning_radfs)
    return strength * np.exp(-(detuning_radfs * sigma) ** 2 / 2.0)


def time_ordered_overlap(delta1, delta2, sigma: float, strength: float = 1.0):
    """K(d1, d2; sigma) of the module docstring, overflow-guarded.

    erfi grows like exp(y^2); past the guard threshold the product with
    the Gaussian prefactors is assembled in combined-exponent form using
    erfi(y) ~ e^{y^2}/(sqrt(pi) y) (1 + 1/(2y^2) + 3/(4y^4)), which stays
    finite wherever the product mathematically is.
    """
    d1 = np.asarray(delta1, dtype=float)
    d2 = np.asarray(delta2, dtype=float)
    shape = np.broadcast_shapes(d1.shape, d2.shape)
    if sigma == 0.0:
        return np.full(shape, 0.5 * strength * strength, dtype=complex)
    y = np.broadcast_to(sigma * (d1 + d2) / 2.0, shape)
    gauss = np.broadcast_to(
        strength * strength * np.exp(-(d1 * d1 + d2 * d2) * sigma * sigma / 2.0),
        shape)
    small = np.abs(y) <= _ERFI_GUARD
    out = gauss * (1.0 - 1j * erfi(np.where(small, y, 0.0)))
    if not np.all(small):
        warnings.warn("erfi overflow guard triggered; asymptotic expansion used",
                      stacklevel=2)
        yb = np.where(small, 1.0, y)
        # exp(-(d1^2+d2^2) s^2/2) * e^{y^2} = exp(-s^2 (d1-d2)^2 / 4)
        diff = np.broadcast_to(sigma * (d1 - d2) / 2.0, shape)
        tail = np.exp(-diff * diff) / (math.sqrt(math.pi) * yb)
        # erfi(y) ~ e^{y^2}/(sqrt(pi) y) sum_k (2k-1)!!/(2 y^2)^k; seven
        # terms give < 1e-12 relative down to the guard threshold
        inv2 = 1.0 / (2.0 * yb * yb)
        series = np.zeros_like(yb)
        coeff = 1.0
        for k in range(7):
            series = series + coeff * inv2 ** k
            coeff *= (2 * k + 1)
        tail = tail * series
        out = np.where(small, out,
                       gauss - 1j * (strength * strength) * tail)
        if not np.all(np.isfinite(out)):
            raise NumericalError("pulse-overlap factor overflowed past the guard")
    return 0.5 * out


def _site_components(eig: ModelEigensystems) -> np.ndarray:
    """C[m][zeta, n] = <m, nu_n^(g)|zeta> stacked per site label."""
    return np.stack([eig.component_in_ground_eigenbasis(lab)
                     for lab in eig.model.site_labels])


def _se_weight_table(dip, pol):
    """w[i, j, q, p] for emission quadruples (mu_gi, mu_qg, mu_gp, mu_jg)."""
    ne = len(dip)
    w = np.empty((ne,) * 4, dtype=complex)
    for i in range(ne):
        for j in range(ne):
            for q in range(ne):
                for p in range(ne):
                    w[i, j, q, p] = pathway_weight(
                        (dip[i], np.conj(dip[q]), dip[p], np.conj(dip[j])), pol)
    return w


def _esa_weight_table(dip, fdip, pol):
    ne = len(dip)
    w = np.empty((ne,) * 4, dtype=complex)
    for i in range(ne):
        for j in range(ne):
            for q in range(ne):
                for p in range(ne):
                    w[i, j, q, p] = pathway_weight(
                        (fdip[i], np.conj(dip[q]), dip[p], np.conj(fdip[j])), pol)
    return w


def _gsb_weight_table(dip, pol):
    """w[i1, q1, i2, q2]: pump pair (i1, q1), probe pair (i2, q2)."""
    ne = len(dip)
    w = np.empty((ne,) * 4, dtype=complex)
    for i1 in range(ne):
        for q1 in range(ne):
            for i2 in range(ne):
                for q2 in range(ne):
                    w[i1, q1, i2, q2] = pathway_weight(
                        (dip[i2], np.conj(dip[q1]), dip[i1], np.conj(dip[q2])),
                        pol)
    return w


def finite_pulse_pp(model: DimerModel, eigensystems: ModelEigensystems,
                    weights: ThermalWeights, pump: PulseSpec, probe: PulseSpec,
                    t_grid, polarization="zzzz") -> PumpProbeSignal:
    """Pump-probe signal with Gaussian pulses of finite spectral width.

    Args:
        model, eigensystems, weights: a diagonalized model and its thermal
            ground-state occupation at a common truncation.
        pump, probe: PulseSpec with carriers in absolute cm^-1 (use
            resonant_pulse() for the carrier-resonant preset setting) and
            widths sigma in fs; sigma = 0 is the exact broadband limit.
        t_grid: waiting times (fs), all >= 0.
        polarization: 'zzzz' (isotropic average of the collinear setting)
            or 'fixed' (use the pulses' polarization vectors, single
            orientation).

    Returns:
        PumpProbeSignal with SE, ESA and GSB components on t_grid.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise ModelError("waiting times must be >= 0")
    if polarization not in ("zzzz", "fixed"):
        raise ModelError("polarization must be 'zzzz' or 'fixed'")
    pol = "zzzz" if polarization == "zzzz" else (pump.polarization,
                                                 probe.polarization)
    comp = _site_components(eigensystems)                 # (ne, nz, nn)
    dip = model.dipole_matrix()
    ez = eigensystems.single.energies
    en = eigensystems.ground.energies
    p_n = weights.weights
    d_pump = _detunings_radfs(ez, en, pump, model.carrier_frequency)
    d_probe = _detunings_radfs(ez, en, probe, model.carrier_frequency)
    e_pump = gaussian_amplitude(d_pump, pump.sigma, pump.strength)
    e_probe = gaussian_amplitude(d_probe, probe.sigma, probe.strength)

    phases = np.exp(-1j * np.outer(t_grid, ez * CM_TO_RADFS))   # (nT, nz)

    def beat_trace(r):
        """sum_{zz'} e^{-i(w_z - w_z')T} r[z, z']."""
        return np.einsum("tz,zy,ty->t", phases, r, np.conj(phases),
                         optimize=True)

    # --- stimulated emission -------------------------------------------
    g_pump = e_pump[None, :, :] * comp                    # (ne, nz, nn)
    g_probe = e_probe[None, :, :] * comp
    m_pump = np.einsum("qzn,n,pyn->qpzy", np.conj(g_pump), p_n, g_pump,
                       optimize=True)
    w_probe = np.einsum("izn,jyn->ijzy", g_probe, np.conj(g_probe),
                        optimize=True)
    r_se = np.einsum("ijqp,ijzy,qpzy->zy", _se_weight_table(dip, pol),
                     w_probe, m_pump, optimize=True)
    se = beat_trace(r_se)

    # --- excited-state absorption --------------------------------------
    if model.site_count == 2:
        fdip = model.f_dipole_matrix()
        fcomp = eigensystems.component_in_ground_eigenbasis(DOUBLE)  # (nf, nn)
        ef = eigensystems.double.energies
        d_f = _detunings_radfs(ef, ez, probe, model.carrier_frequency)
        e_f = gaussian_amplitude(d_f, probe.sigma, probe.strength)
        y = np.einsum("fn,izn->ifz", fcomp, comp, optimize=True)
        y = e_f[None, :, :] * y                            # (ne, nf, nz)
        probe_esa = np.einsum("ifz,jfy->ijzy", y, np.conj(y), optimize=True)
        r_esa = np.einsum("ijqp,ijzy,qpzy->zy",
                          _esa_weight_table(dip, fdip, pol), probe_esa,
                          m_pump, optimize=True)
        esa = -beat_trace(r_esa)
    else:
        esa = np.zeros(t_grid.size, dtype=complex)

    # --- ground-state bleach --------------------------------------------
    k_pump = time_ordered_overlap(d_pump[:, :, None], d_pump[:, None, :],
                                  pump.sigma, pump.strength)
    k_probe = time_ordered_overlap(d_probe[:, :, None], d_probe[:, None, :],
                                   probe.sigma, probe.strength)
    # D^{(a,b)}[n', n] = sum_z C_a[z,n'] conj(C_b[z,n]) K[z,n',n]
    d_pump_m = np.einsum("azp,bzq,zpq->abpq", comp, np.conj(comp), k_pump,
                         optimize=True)
    d_probe_m = np.einsum("azp,bzq,zpq->abpq", comp, np.conj(comp), k_probe,
                          optimize=True)
    gsb = _gsb_trace(_gsb_weight_table(dip, pol), d_pump_m, d_probe_m,
                     p_n, en, t_grid)

    md = {"model": model.name, "sigma_pump_fs": pump.sigma,
          "sigma_probe_fs": probe.sigma,
          "polarization": "zzzz" if pol == "zzzz" else "fixed",
          "n_levels": eigensystems.basis.n_levels,
          "temperature_K": weights.temperature}
    return PumpProbeSignal(t_grid=t_grid, se=coerce_real(se),
                           esa=coerce_real(esa), gsb=coerce_real(gsb),
                           metadata=md)


def _gsb_trace(w4, d_pump, d_probe, p_n, ground_energies, t_grid):
    """Both bleach families, electronic pathway weights folded in.

    With D[n', n] the pulse-pair kernels (final row, initial column) and
    E_n the ground vibrational energies:

      family 1: 2 Re sum p_n e^{+i(E_n' - E_n)T} conj(Dpump[n',n]) Dprobe[n',n]
      family 2: 2 Re sum p_n e^{-i(E_n' - E_n)T} Dprobe[n,n'] Dpump[n',n]
    """
    path1 = np.einsum("IQJP,IQab,JPab->ab", w4, np.conj(d_pump), d_probe,
                      optimize=True)
    path2 = np.einsum("IQJP,JPba,IQab->ab", w4, d_probe, d_pump,
                      optimize=True)
    d_e = (ground_energies[:, None] - ground_energies[None, :]) * CM_TO_RADFS
    ph = np.exp(1j * t_grid[:, None, None] * d_e[None, :, :])
    t1 = np.einsum("tab,b,ab->t", ph, p_n, path1, optimize=True)
    t2 = np.einsum("tab,b,ab->t", np.conj(ph), p_n, path2, optimize=True)
    return 2.0 * np.real(t1 + t2)


def resonant_pulse(model: DimerModel, sigma: float = 0.0, strength: float = 1.0,
                   polarization=(0.0, 0.0, 1.0)) -> PulseSpec:
    """Pulse at the model carrier frequency (the preset setting)."""
    return PulseSpec(strength=strength, carrier=model.carrier_frequency,
                     sigma=sigma, polarization=polarization)


# ---------------------------------------------------------------------------
# Leading pulse-width correction of the bleach
# ---------------------------------------------------------------------------

def gsb_first_order(model: DimerModel, eigensystems: ModelEigensystems,
                    weights: ThermalWeights, carrier_frequency=None,
                    t_grid=None, polarization="zzzz") -> SignalTrace:
    """Analytic first-order-in-sigma coefficient of the bleach signal.

    Expands the error-function overlap factors of both bleach families to
    linear order at flat spectral amplitudes and sums the resulting
    pathway terms.  The pump-side linear terms cancel between the two
    families, and the probe-side terms vanish under the completeness sum
    over the singly-excited eigenstates, so the coefficient is identically
    zero for any model of this class.  The full pathway sum is evaluated
    anyway and the (numerically zero) trace returned: it documents the
    cancellation and pins the bleach deviation from broadband at second
    order in the pulse width.
    """
    if t_grid is None:
        t_grid = np.linspace(0.0, 900.0, 512)
    t_grid = np.asarray(t_grid, dtype=float)
    ref_carrier = (model.carrier_frequency if carrier_frequency is None
                   else carrier_frequency)
    ref = PulseSpec(carrier=ref_carrier, sigma=0.0)
    pol = "zzzz" if polarization == "zzzz" else polarization
    comp = _site_components(eigensystems)
    dip = model.dipole_matrix()
    ez = eigensystems.single.energies
    en = eigensystems.ground.energies
    p_n = weights.weights
    delta = _detunings_radfs(ez, en, ref, model.carrier_frequency)  # (nz, nn)

    # A^{(ab)}[n',n] = sum_z C_a C_b*          (the sigma^0 kernel)
    # X^{(ab)}[n',n] = sum_z C_a C_b* (delta[z,n'] + delta[z,n])
    a_m = np.einsum("azp,bzq->abpq", comp, np.conj(comp), optimize=True)
    x_m = np.einsum("azp,bzq,zpq->abpq", comp, np.conj(comp),
                    delta[:, :, None] + delta[:, None, :], optimize=True)
    w4 = _gsb_weight_table(dip, pol)
    # linear term of K is -i (d1+d2) sigma / sqrt(pi) on top of K0 = 1/2;
    # family 1 carries conj() on the pump kernel, family 2 does not
    f1 = (np.einsum("IQJP,IQab,JPab->ab", w4, x_m, a_m, optimize=True)
          - np.einsum("IQJP,IQab,JPab->ab", w4, a_m, x_m, optimize=True))
    f2 = (np.einsum("IQJP,JPba,IQab->ab", w4, x_m, a_m, optimize=True)
          + np.einsum("IQJP,JPba,IQab->ab", w4, a_m, x_m, optimize=True))
    d_e = (en[:, None] - en[None, :]) * CM_TO_RADFS
    ph = np.exp(1j * t_grid[:, None, None] * d_e[None, :, :])
    pref = 0.25 / math.sqrt(math.pi)        # (1/2 kernel)^2 expansion weight
    t1 = np.einsum("tab,b,ab->t", ph, p_n, 1j * pref * f1, optimize=True)
    t2 = np.einsum("tab,b,ab->t", np.conj(ph), p_n, -1j * pref * f2,
                   optimize=True)
    coeff = 2.0 * np.real(t1 + t2)
    md = {"model": model.name, "component": "GSB_first_order",
          "polarization": "zzzz" if pol == "zzzz" else "fixed"}
    return SignalTrace(t_grid, coeff, "T_fs", "dS_gsb_dsigma", md)


# ---------------------------------------------------------------------------
# Linear absorption
# ---------------------------------------------------------------------------

def absorption_spectrum(model: DimerModel, eigensystems: ModelEigensystems,
                        weights: ThermalWeights, omega_grid=None,
                        line_width: float = 30.0) -> SignalTrace:
    """Isotropically averaged linear absorption spectrum.

    Stick intensities p_n |<zeta|mu . e|g, nu_n>|^2 at absolute energies
    carrier + (w_zeta - w_gn), orientation-averaged in closed form and
    convolved with a unit-area Gaussian of standard deviation line_width
    (cm^-1).  omega_grid is absolute (cm^-1); by default it spans the
    sticks with a margin of five line widths.
    """
    if line_width <= 0:
        raise ModelError("line width must be positive")
    comp = _site_components(eigensystems)
    dip = model.dipole_matrix()
    ne = len(dip)
    pair = np.array([[isotropic_pair_average(dip[m], dip[mp])
                      for mp in range(ne)] for m in range(ne)])
    # intensity[z, n] = sum_{m m'} (mu_m . mu_m')/3 C_m[z,n] C_m'[z,n]
    intensity = np.einsum("mM,mzn,Mzn->zn", pair, comp, np.conj(comp),
                          optimize=True).real
    intensity = intensity * weights.weights[None, :]
    position = (model.carrier_frequency
                + eigensystems.single.energies[:, None]
                - eigensystems.ground.energies[None, :]).ravel()
    intensity = intensity.ravel()
    if omega_grid is None:
        omega_grid = np.linspace(position.min() - 5 * line_width,
                                 position.max() + 5 * line_width, 1200)
    omega_grid = np.asarray(omega_grid, dtype=float)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * line_width)
    spec = norm * np.sum(
        intensity[None, :]
        * np.exp(-(omega_grid[:, None] - position[None, :]) ** 2
                 / (2.0 * line_width ** 2)), axis=1)
    md = {"model": model.name, "line_width_cm": line_width,
          "carrier_frequency_cm": model.carrier_frequency,
          "temperature_K": weights.temperature, "component": "absorption"}
    return SignalTrace(omega_grid, spec, "omega_cm", "absorption", md)


# ---------------------------------------------------------------------------
# Impulsive rephasing 2D electronic spectra
# ---------------------------------------------------------------------------

def rephasing_2des(model: DimerModel, eigensystems: ModelEigensystems,
                   weights: ThermalWeights, waiting_time: float,
                   tau_grid, t_grid, dephasing: float = 30.0) -> Spectrum2D:
    """Impulsive-limit rephasing 2D spectrum at one waiting time.

    The response S(tau, T, t) sums the rephasing SE, ESA and GSB pathways
    over vibronic eigenstates in the isotropically averaged collinear
    setting, damped by exp(-(g tau)^2/2 - (g t)^2/2) with g = dephasing
    (cm^-1), and is transformed as

        S~(w_tau, T, w_t) = dtau dt sum_{k,l} e^{-i w_tau tau_k}
                            e^{+i w_t t_l} S(tau_k, T, t_l)

    over the full discrete frequency band of each axis (rectangle rule;
    this makes the two-axis integral identity with the broadband
    pump-probe signal exact up to roundoff).  Output axes are cm^-1
    relative to the carrier.

    Raises:
        NumericalError: if a grid cannot resolve the bright transitions
            (Nyquist check).
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if dephasing <= 0:
        raise ModelError("dephasing must be positive (display regularizer)")
    comp = _site_components(eigensystems)
    dip = model.dipole_matrix()
    ez = eigensystems.single.energies * CM_TO_RADFS
    en = eigensystems.ground.energies * CM_TO_RADFS
    gamma = dephasing * CM_TO_RADFS
    p_n = weights.weights
    ne = comp.shape[0]

    # bright-band Nyquist guard: only transitions with appreciable strength
    # matter (aliased zero-amplitude lines cannot distort the spectrum, and
    # the two-axis integral identity is exact for any sampling)
    strength_eg = p_n[None, :] * np.sum(np.abs(comp), axis=0) ** 2
    bright = strength_eg > 1e-8 * strength_eg.max()
    eg_band = np.abs(ez[:, None] - en[None, :])[bright].max()
    _nyquist_check(tau_grid, eg_band, "tau")
    t_band = eg_band
    if model.site_count == 2:
        fcomp_band = eigensystems.component_in_ground_eigenbasis(DOUBLE)
        ef = eigensystems.double.energies * CM_TO_RADFS
        fe_strength = np.abs(fcomp_band @ np.sum(np.abs(comp), axis=0).T) ** 2
        fe_bright = fe_strength > 1e-8 * fe_strength.max()
        if fe_bright.any():
            t_band = max(t_band,
                         np.abs(ef[:, None] - ez[None, :])[fe_bright].max())
    _nyquist_check(t_grid, t_band, "t")

    ph_tau_e = np.exp(1j * np.outer(tau_grid, ez))     # e^{+i w_a tau}
    ph_tau_g = np.exp(-1j * np.outer(tau_grid, en))    # e^{-i E_n tau}
    ph_t_e = np.exp(-1j * np.outer(t_grid, ez))        # e^{-i w_b t}
    ph_t_g = np.exp(1j * np.outer(t_grid, en))         # e^{+i E_n' t}
    tphase_e = np.exp(-1j * ez * waiting_time)
    tphase_ee = np.conj(tphase_e)[:, None] * tphase_e[None, :]  # e^{-i(w_b - w_a)T}, [a,b]

    signal = np.zeros((tau_grid.size, t_grid.size), dtype=complex)

    # interaction-ordered electronic slots (m1: bra up, m2: ket up,
    # m3: probe, m4: close); zzzz weight is permutation symmetric
    for m1 in range(ne):
        for m2 in range(ne):
            # pump-side tensors shared by SE and ESA
            # xa[k, a, b] = e^{+i w_a tau_k} sum_n p_n e^{-iE_n tau_k} C1[a,n] C2*[b,n]
            xa = np.einsum("kn,an,bn->kab", ph_tau_g, p_n * comp[m1],
                           np.conj(comp[m2]), optimize=True)
            xa = xa * ph_tau_e[:, :, None]
            for m3 in range(ne):
                for m4 in range(ne):
                    w_se = zzzz_average((dip[m1], dip[m2], dip[m3], dip[m4]))
                    # SE: yb[l, a, b] = e^{-i w_b t} sum_n' C3[b,n'] C4*[a,n'] e^{+iE_n' t}
                    yb = np.einsum("ln,bn,an->lab", ph_t_g, comp[m3],
                                   np.conj(comp[m4]), optimize=True)
                    yb = yb * ph_t_e[:, None, :]
                    signal += w_se * np.einsum("kab,ab,lab->kl", xa, tphase_ee,
                                               yb, optimize=True)
                    # GSB: a-pair closes at interaction 2, b-pair opens at 3
                    ga = np.einsum("ka,an,aN->knN", ph_tau_e, comp[m1],
                                   np.conj(comp[m2]), optimize=True)
                    gb = np.einsum("lb,bn,bN->lnN", ph_t_e, np.conj(comp[m3]),
                                   comp[m4], optimize=True)
                    tph_g = np.exp(-1j * waiting_time
                                   * (en[:, None] - en[None, :]))
                    signal += w_se * np.einsum("kn,knN,n,nN,lnN,lN->kl",
                                               ph_tau_g, ga, p_n, tph_g, gb,
                                               ph_t_g, optimize=True)

    if model.site_count == 2:
        fdip = model.f_dipole_matrix()
        fcomp = eigensystems.component_in_ground_eigenbasis(DOUBLE)
        ef = eigensystems.double.energies * CM_TO_RADFS
        ph_t_f = np.exp(-1j * np.outer(t_grid, ef))
        for m1 in range(ne):
            for m2 in range(ne):
                xa = np.einsum("kn,an,bn->kab", ph_tau_g, p_n * comp[m1],
                               np.conj(comp[m2]), optimize=True)
                xa = xa * ph_tau_e[:, :, None]
                for m3 in range(ne):
                    for m4 in range(ne):
                        w_esa = zzzz_average((dip[m1], dip[m2], fdip[m3],
                                              fdip[m4]))
                        g3 = fcomp @ comp[m3].T            # (nf, nb)
                        g4 = fcomp @ comp[m4].T            # (nf, na)
                        # zb[l, a, b] = e^{+i w_a t} sum_f e^{-i w_f t} G3[f,b] G4*[f,a]
                        zb = np.einsum("lf,fb,fa->lab", ph_t_f, g3,
                                       np.conj(g4), optimize=True)
                        zb = zb * np.exp(1j * np.outer(t_grid, ez))[:, :, None]
                        signal -= w_esa * np.einsum("kab,ab,lab->kl", xa,
                                                    tphase_ee, zb,
                                                    optimize=True)

    signal = signal * (np.exp(-(gamma * tau_grid) ** 2 / 2.0)[:, None]
                       * np.exp(-(gamma * t_grid) ** 2 / 2.0)[None, :])

    dtau = tau_grid[1] - tau_grid[0]
    dt = t_grid[1] - t_grid[0]
    w_tau = 2.0 * np.pi * np.fft.fftfreq(tau_grid.size, d=dtau)
    w_t = 2.0 * np.pi * np.fft.fftfreq(t_grid.size, d=dt)
    order_tau = np.argsort(w_tau)
    order_t = np.argsort(w_t)
    spec = np.fft.fft(signal, axis=0) * dtau               # e^{-i w_tau tau}
    spec = np.fft.ifft(spec, axis=1) * t_grid.size * dt    # e^{+i w_t t}
    spec = spec[np.ix_(order_tau, order_t)]
    md = {"model": model.name, "waiting_time_fs": waiting_time,
          "dephasing_cm": dephasing, "polarization": "zzzz",
          "n_levels": eigensystems.basis.n_levels,
          "temperature_K": weights.temperature}
    return Spectrum2D(omega_tau=w_tau[order_tau] / CM_TO_RADFS,
                      omega_t=w_t[order_t] / CM_TO_RADFS,
                      waiting_time=waiting_time, values=spec, metadata=md)


def _nyquist_check(grid, max_freq_radfs, name):
    if grid.size < 2:
        raise ModelError(f"{name} grid needs at least two points")
    step = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), step, rtol=0, atol=1e-9):
        raise ModelError(f"{name} grid must be uniform")
    if max_freq_radfs >= math.pi / step:
        raise NumericalError(
            f"{name} grid too coarse: step {step:.3f} fs cannot resolve "
            f"{max_freq_radfs / CM_TO_RADFS:.0f} cm^-1")


def pp_from_2des(spectrum: Spectrum2D) -> complex:
    """Two-axis integral (1/(2 pi)^2) of the 2D spectrum.

    Equals the time-domain response at tau = t = 0, i.e. the broadband
    pump-probe signal at the spectrum's waiting time, up to roundoff for
    rectangle-rule grids.
    """
    dw1 = (spectrum.omega_tau[1] - spectrum.omega_tau[0]) * CM_TO_RADFS
    dw2 = (spectrum.omega_t[1] - spectrum.omega_t[0]) * CM_TO_RADFS
    return complex(np.sum(spectrum.values) * dw1 * dw2 / (2.0 * np.pi) ** 2)


# ---------------------------------------------------------------------------
# Narrowband-probe check for same-shape dimers
# ---------------------------------------------------------------------------

def _require_same_shape(model: DimerModel):
    if model.site_count != 2:
        raise ModelError("same-shape check needs a dimer")
    s10, s01 = model.surfaces["10"], model.surfaces["01"]
    if (s10.frequencies != s01.frequencies
            or s10.displacements != s01.displacements):
        raise ModelError("model is not in the same-shape-surfaces class")


def narrowband_se_check(model: DimerModel, pump: PulseSpec, probe: PulseSpec,
                        temperature: float, t_grid, n_levels: int = 8,
                        m_levels: int | None = None,
                        polarization="zzzz") -> SignalTrace:
    """Stimulated emission of a same-shape dimer from closed-form overlaps.

    Independent route: uses the 2x2 exciton decomposition and per-mode
    Franck-Condon tables instead of a vibronic diagonalization, exact when
    both singly-excited surfaces share their shape (then the excitons are
    adiabatic and no eigenvector mixing occurs).  Thermal average over
    initial ground levels included.

    n_levels is the thermal window per mode (match the truncation of the
    route being checked); m_levels the excited-surface ladder per mode
    (default n_levels + 2).  The internal ground-state projection sum runs
    over a deeper, automatically sized ladder: with exact eigenfunctions
    it must resolve every kept excited level, unlike a product-basis
    truncation whose completeness is exact within itself.
    """
    _require_same_shape(model)
    t_grid = np.asarray(t_grid, dtype=float)
    exc = exciton_transform(model)
    s10 = model.surfaces["10"]
    wg = model.ground_frequencies()
    we = s10.frequencies
    disp = s10.displacements
    dip_ex = np.einsum("ma,mk->ak", exc.rotation, model.dipole_matrix())

    n0 = n_levels
    m = n_levels + 2 if m_levels is None else m_levels
    # projection ladder: cover the kept excited band with margin
    reach = max(we) * (m + 0.5) + sum(s10.reorganization_energies(wg))
    k = int(math.ceil(reach / min(wg))) + 6
    fx = fc_overlap_table(wg[0], we[0], disp[0], k - 1, m - 1)
    fy = fc_overlap_table(wg[1], we[1], disp[1], k - 1, m - 1)
    fc = np.kron(fx, fy)                                   # (k^2, m^2)
    kidx, midx = np.arange(k), np.arange(m)
    e_proj = np.add.outer(wg[0] * (kidx + 0.5), wg[1] * (kidx + 0.5)).ravel()
    e_vib = np.add.outer(we[0] * (midx + 0.5), we[1] * (midx + 0.5)).ravel()
    # thermal window: first n0 quanta per mode of the same ladder
    win = (np.add.outer(kidx, np.zeros(k, dtype=int)) < n0) \
        & (np.add.outer(np.zeros(k, dtype=int), kidx) < n0)
    win = win.ravel()
    e_th = e_proj[win]
    p_n = np.exp(-(e_th - e_th.min()) / (KB_CM * temperature))
    p_n = p_n / p_n.sum()
    fc_th = fc[win, :]

    carrier = model.carrier_frequency
    phi = []
    for i, w_el in enumerate(exc.energies):
        omega_im = (w_el + e_vib) * CM_TO_RADFS            # rad/fs, rot frame
        det_pump = (omega_im[None, :] - e_th[:, None] * CM_TO_RADFS
                    - (pump.carrier - carrier) * CM_TO_RADFS)
        det_probe = (omega_im[None, :] - e_proj[:, None] * CM_TO_RADFS
                     - (probe.carrier - carrier) * CM_TO_RADFS)
        g = fc_th * gaussian_amplitude(det_pump, pump.sigma, pump.strength)
        h = fc * gaussian_amplitude(det_probe, probe.sigma, probe.strength)
        ph = np.exp(-1j * np.outer(t_grid, omega_im))      # (T, m)
        # Phi_i[T, n, n0] = sum_m h[n, m] e^{-i w_im T} g[n0, m]
        phi_i = np.empty((t_grid.size, fc.shape[0], fc_th.shape[0]),
                         dtype=complex)
        for it in range(t_grid.size):
            phi_i[it] = (h * ph[it][None, :]) @ g.T
        phi.append(phi_i)
    signal = np.zeros(t_grid.size, dtype=complex)
    pol = "zzzz" if polarization == "zzzz" else (pump.polarization,
                                                 probe.polarization)
    for i in range(2):
        for j in range(2):
            w = pathway_weight((dip_ex[i], dip_ex[i], dip_ex[j], dip_ex[j]),
                               pol)
            signal += w * np.einsum("tnk,k,tnk->t", phi[i], p_n,
                                    np.conj(phi[j]), optimize=True)
    md = {"model": model.name, "component": "SE",
          "sigma_pump_fs": pump.sigma, "sigma_probe_fs": probe.sigma,
          "method": "same-shape-closed-form"}
    return SignalTrace(t_grid, coerce_real(signal), "T_fs", "S_se", md)
