"""Molecular model: harmonic diabatic surfaces, dipoles, pulses, exciton basis.

Conventions
-----------
* Electronic states are labelled 'g' (ground), '10'/'01' (site excitations)
  and 'f' (double excitation).  A monomer has only 'g' and '10'.
* Electronic energy offsets are stored relative to the carrier frequency
  omega_L, i.e. the model lives in the rotating frame of the laser.  A
  singly-excited surface carries one unit of omega_L, the doubly-excited
  surface two; transition detunings are then plain differences of the
  stored (rotating-frame) energies.
* Nuclear coordinates are mass-scaled; each mode of a surface is
  V(x) = offset_share + omega^2 (x - Delta)^2 / 2 with kinetic term p^2/2.
  Displacements are stored dimensionless, in units of the natural length
  1/sqrt(omega_ground) of the corresponding ground-surface mode:
  Delta = d / sqrt(omega_ground).
* Two modes per molecule (x, y) throughout; surfaces are separable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import CM_TO_RADFS

#: number of nuclear modes per model
N_MODES = 2

GROUND = "g"
SITE_LABELS = ("10", "01")
DOUBLE = "f"


class ModelError(ValueError):
    """Raised for invalid model configurations."""


@dataclass(frozen=True)
class HarmonicSurface:
    """One diabatic surface: energy offset plus two displaced harmonic modes.

    Attributes:
        energy_offset: electronic offset in cm^-1 relative to the carrier
            (times the excitation number of the manifold).
        frequencies: (omega_x, omega_y) in cm^-1, both > 0.
        displacements: (d_x, d_y), dimensionless origin shifts in units of
            the ground-surface natural length of each mode.
    """

    energy_offset: float
    frequencies: tuple[float, float]
    displacements: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if len(self.frequencies) != N_MODES or len(self.displacements) != N_MODES:
            raise ModelError("surfaces carry exactly two modes (x, y)")
        if any(w <= 0 for w in self.frequencies):
            raise ModelError("non-positive frequency")
        if not all(math.isfinite(d) for d in self.displacements):
            raise ModelError("displacements must be finite")

    def reorganization_energies(self, ground_frequencies):
        """Vertical offsets omega^2 Delta^2 / 2 per mode, in cm^-1."""
        return tuple(
            w * w * (d / math.sqrt(wg)) ** 2 / 2.0
            for w, d, wg in zip(self.frequencies, self.displacements, ground_frequencies)
        )


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse: amplitude, carrier, center, width and polarization.

    The spectral amplitude at transition energy omega (cm^-1) is
    strength * exp(-(omega - carrier)^2 sigma^2 / 2) with the cm^-1 ->
    rad/fs conversion applied internally.  sigma = 0 is the exact
    broadband (impulsive) limit.
    """

    strength: float = 1.0
    carrier: float = 0.0          # cm^-1 (absolute)
    center: float = 0.0           # fs
    sigma: float = 0.0            # fs; 0 = broadband limit
    polarization: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.sigma < 0:
            raise ModelError("pulse width sigma must be >= 0")
        norm = math.sqrt(sum(c * c for c in self.polarization))
        if abs(norm - 1.0) > 1e-9:
            raise ModelError("pulse polarization must be a unit vector")

    @staticmethod
    def sigma_from_fwhm(fwhm):
        """Intensity FWHM (fs) -> Gaussian sigma (fs): FWHM = 2 sqrt(2 ln 2) sigma."""
        return fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def pulse_spectral_amplitude(pulse: PulseSpec, omega_cm):
    """Spectral amplitude of a pulse at transition energy omega (cm^-1).

    Returns strength * exp(-(omega - carrier)^2 sigma^2 / 2); sigma = 0
    gives the flat broadband envelope.
    """
    if pulse.sigma == 0.0:
        return pulse.strength * np.ones_like(np.asarray(omega_cm, dtype=float))
    detuning = (np.asarray(omega_cm, dtype=float) - pulse.carrier) * CM_TO_RADFS
    return pulse.strength * np.exp(-(detuning * pulse.sigma) ** 2 / 2.0)


@dataclass(frozen=True)
class DimerModel:
    """Monomer or coupled dimer with harmonic diabatic surfaces.

    Attributes:
        site_count: 1 (monomer) or 2 (dimer).
        surfaces: map electronic label -> HarmonicSurface.  Offsets are
            relative to the carrier (see module docstring).
        coupling: site-site coupling J in cm^-1 (0 for a monomer).
        dipoles: map site label -> 3-vector transition dipole from 'g'.
        carrier_frequency: omega_L in cm^-1 (absolute; fixes display axes).
        f_dipole_rule: dipole to 'f' from a singly-excited site equals the
            complementary site's ground-state dipole.
        f_surface_rule: the 'f' surface is the x-part of V_10 combined with
            the y-part of V_01, offsets summed.
        name: optional preset name for provenance.
    """

    site_count: int
    surfaces: dict
    coupling: float
    dipoles: dict
    carrier_frequency: float = 16000.0
    f_dipole_rule: bool = True
    f_surface_rule: bool = True
    name: str = ""

    def __post_init__(self):
        if self.site_count not in (1, 2):
            raise ModelError("site_count must be 1 or 2")
        required = {GROUND, "10"} if self.site_count == 1 else {GROUND, "10", "01", DOUBLE}
        missing = required - set(self.surfaces)
        if missing:
            raise ModelError(f"missing surfaces: {sorted(missing)}")
        if self.site_count == 1:
            if self.coupling != 0.0:
                raise ModelError("monomer cannot carry a site-site coupling")
            if "01" in self.surfaces or DOUBLE in self.surfaces:
                raise ModelError("monomer has no '01' or 'f' surface")
            if set(self.dipoles) != {"10"}:
                raise ModelError("monomer carries exactly the '10' dipole")
        else:
            if set(self.dipoles) != set(SITE_LABELS):
                raise ModelError("dimer carries '10' and '01' dipoles")
            if self.f_surface_rule:
                self._check_f_surface()

    def _check_f_surface(self):
        """Verify field-by-field that V_f combines V_10 (x) and V_01 (y)."""
        f, s10, s01 = self.surfaces[DOUBLE], self.surfaces["10"], self.surfaces["01"]
        expect_offset = s10.energy_offset + s01.energy_offset
        ok = (
            abs(f.energy_offset - expect_offset) < 1e-9
            and abs(f.frequencies[0] - s10.frequencies[0]) < 1e-12
            and abs(f.frequencies[1] - s01.frequencies[1]) < 1e-12
            and abs(f.displacements[0] - s10.displacements[0]) < 1e-12
            and abs(f.displacements[1] - s01.displacements[1]) < 1e-12
        )
        if not ok:
            raise ModelError("f surface violates V_f = V_10(x) + V_01(y) with summed offsets")

    @property
    def site_labels(self):
        """Singly-excited electronic labels present in this model."""
        return ("10",) if self.site_count == 1 else SITE_LABELS

    def site_energies(self):
        """Rotating-frame electronic offsets of the singly-excited sites."""
        return np.array([self.surfaces[s].energy_offset for s in self.site_labels])

    def ground_frequencies(self):
        return self.surfaces[GROUND].frequencies

    def dipole_matrix(self):
        """Site dipoles stacked as rows, ordered like site_labels."""
        return np.array([self.dipoles[s] for s in self.site_labels], dtype=float)

    def f_dipole_matrix(self):
        """Dipoles mu_{f,e}: row per site label e (complementary-site rule)."""
        if self.site_count == 1:
            raise ModelError("monomer has no doubly-excited state")
        comp = {"10": "01", "01": "10"}
        return np.array([self.dipoles[comp[s]] for s in self.site_labels], dtype=float)

    def with_site_shifts(self, shifts):
        """New model with site offsets shifted (disorder); V_f rule reapplied."""
        shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
        surfaces = dict(self.surfaces)
        for label, dE in zip(self.site_labels, shifts):
            s = surfaces[label]
            surfaces[label] = replace(s, energy_offset=s.energy_offset + float(dE))
        if self.site_count == 2 and self.f_surface_rule:
            surfaces[DOUBLE] = _combine_f_surface(surfaces["10"], surfaces["01"])
        return replace(self, surfaces=surfaces)


def _combine_f_surface(s10: HarmonicSurface, s01: HarmonicSurface) -> HarmonicSurface:
    """V_f = V_10 + V_01 for surfaces displaced along complementary modes."""
    return HarmonicSurface(
        energy_offset=s10.energy_offset + s01.energy_offset,
        frequencies=(s10.frequencies[0], s01.frequencies[1]),
        displacements=(s10.displacements[0], s01.displacements[1]),
    )


@dataclass(frozen=True)
class ExcitonBasis:
    """Electronic eigenbasis at the ground-state nuclear configuration.

    ``rotation`` is the 2x2 unitary with columns holding the exciton states
    in the site basis: |exciton a> = sum_m rotation[m, a] |site m>.
    """

    energies: np.ndarray          # (omega_alpha, omega_beta), ascending, cm^-1
    rotation: np.ndarray          # 2x2
    labels: tuple = ("alpha", "beta")

    @property
    def gap(self):
        return float(self.energies[1] - self.energies[0])


def exciton_transform(model: DimerModel) -> ExcitonBasis:
    """Diagonalize the 2x2 electronic Hamiltonian at R = 0.

    Eigenvalues ascend; the gap is sqrt((E_10 - E_01)^2 + 4 J^2).  For the
    degenerate J = 0 case the mapping is the identity.
    """
    if model.site_count != 2:
        raise ModelError("no exciton basis for monomer")
    e10, e01 = model.site_energies()
    h = np.array([[e10, model.coupling], [model.coupling, e01]])
    if model.coupling == 0.0 and e10 == e01:
        return ExcitonBasis(energies=np.array([e10, e01]), rotation=np.eye(2))
    energies, vectors = np.linalg.eigh(h)
    for k in range(2):
        j = np.argmax(np.abs(vectors[:, k]))
        if vectors[j, k] < 0:
            vectors[:, k] = -vectors[:, k]
    return ExcitonBasis(energies=energies, rotation=vectors)


# ---------------------------------------------------------------------------
# Presets (rotating-frame offsets; displacements dimensionless, see module
# docstring).  Dimer dipoles are orthogonal with norm ratio 1:3; the
# lower-energy site ('10') carries the larger norm.  Carrier frequency is an
# arbitrary visible-range value; only display axes depend on it.
# ---------------------------------------------------------------------------

_COMMON = dict(
    ground_freq=(100.0, 100.0),
    excited_freq=(200.0, 150.0),
)

PRESETS = {
    "monomer": dict(
        site_count=1,
        e10=-125.0,
        coupling=0.0,
        disp10=(0.8, 0.0),
        fwhm=10.0,
        **_COMMON,
    ),
    "coherent-dimer": dict(
        site_count=2,
        e10=-300.0,
        e01=-200.0,
        coupling=100.0,
        disp10=(0.4, 0.0),
        disp01=(0.0, 0.4),
        fwhm=18.7,
        **_COMMON,
    ),
    "incoherent-dimer": dict(
        site_count=2,
        e10=-200.0,
        e01=-200.0,
        coupling=10.0,
        disp10=(0.8, 0.0),
        disp01=(0.0, 0.8),
        fwhm=12.5,
        **_COMMON,
    ),
}

#: preset dipole geometry: orthogonal pair, norms 3 and 1
PRESET_DIPOLES = {
    "10": (3.0, 0.0, 0.0),
    "01": (0.0, 1.0, 0.0),
}
PRESET_MONOMER_DIPOLE = (1.0, 0.0, 0.0)


def preset_fwhm(name: str) -> float:
    """Pulse intensity FWHM (fs) associated with a preset."""
    if name not in PRESETS:
        raise ModelError(f"unknown preset '{name}'")
    return PRESETS[name]["fwhm"]


def build_model(config) -> DimerModel:
    """Build a validated DimerModel from a preset name or a config mapping.

    Accepts either a preset name ('monomer', 'coherent-dimer',
    'incoherent-dimer'), or a flat mapping with keys mirroring the preset
    fields: site_count, e10 (cm^-1, relative to the carrier), e01, coupling,
    ground_freq_x/y, excited_freq_x/y (optionally per site), disp10_x/y,
    disp01_x/y, carrier_frequency, dipole10/dipole01 (3-vectors).
    Displacements may instead be given as reorganization energies via
    reorg10_x etc. (cm^-1), converted through  d = sqrt(2 E_r w_g) / w_e.
    """
    if isinstance(config, str):
        if config not in PRESETS:
            raise ModelError(f"unknown preset '{config}'")
        return _model_from_preset(config)
    cfg = dict(config)
    if "preset" in cfg and cfg.get("preset"):
        base = cfg.pop("preset")
        if cfg:
            raise ModelError("give either a preset or inline model keys, not both")
        return build_model(base)
    return _model_from_mapping(cfg)


def _model_from_preset(name: str) -> DimerModel:
    p = PRESETS[name]
    wg = p["ground_freq"]
    we = p["excited_freq"]
    ground = HarmonicSurface(0.0, wg)
    if p["site_count"] == 1:
        surfaces = {
            GROUND: ground,
            "10": HarmonicSurface(p["e10"], we, p["disp10"]),
        }
        dipoles = {"10": PRESET_MONOMER_DIPOLE}
        return DimerModel(1, surfaces, 0.0, dipoles, name=name)
    s10 = HarmonicSurface(p["e10"], we, p["disp10"])
    s01 = HarmonicSurface(p["e01"], we, p["disp01"])
    surfaces = {GROUND: ground, "10": s10, "01": s01, DOUBLE: _combine_f_surface(s10, s01)}
    return DimerModel(2, surfaces, p["coupling"], dict(PRESET_DIPOLES), name=name)


def _get(cfg, key, default=None, required=False):
    if key in cfg:
        return cfg.pop(key)
    if required:
        raise ModelError(f"missing key '{key}'")
    return default


def _mode_pair(cfg, stem, default):
    x = _get(cfg, f"{stem}_x", default[0])
    y = _get(cfg, f"{stem}_y", default[1])
    return (x if x is None else float(x), y if y is None else float(y))


def _displacements(cfg, site, wg, we):
    d = _mode_pair(cfg, f"disp{site}", (None, None))
    out = []
    for k, axis in enumerate("xy"):
        dk = d[k]
        reorg = cfg.pop(f"reorg{site}_{axis}", None)
        if dk is not None and reorg is not None:
            raise ModelError(f"give disp{site}_{axis} or reorg{site}_{axis}, not both")
        if reorg is not None:
            # E_r = we^2 d^2 / (2 wg)  =>  d = sqrt(2 E_r wg) / we
            dk = math.sqrt(2.0 * float(reorg) * wg[k]) / we[k]
        out.append(float(dk) if dk is not None else 0.0)
    return tuple(out)


def _model_from_mapping(cfg) -> DimerModel:
    site_count = int(_get(cfg, "site_count", required=True))
    carrier = float(_get(cfg, "carrier_frequency", 16000.0))
    wg = _mode_pair(cfg, "ground_freq", (100.0, 100.0))
    ground = HarmonicSurface(0.0, wg)

    we_shared = _mode_pair(cfg, "excited_freq", (200.0, 150.0))
    we10 = _mode_pair(cfg, "excited_freq10", we_shared)
    e10 = float(_get(cfg, "e10", required=True))
    d10 = _displacements(cfg, "10", wg, we10)

    if site_count == 1:
        coupling = float(_get(cfg, "coupling", 0.0))
        if coupling != 0.0:
            raise ModelError("monomer cannot carry a site-site coupling")
        dip10 = tuple(_get(cfg, "dipole10", PRESET_MONOMER_DIPOLE))
        _reject_leftovers(cfg)
        surfaces = {GROUND: ground, "10": HarmonicSurface(e10, we10, d10)}
        return DimerModel(1, surfaces, 0.0, {"10": dip10}, carrier_frequency=carrier)

    we01 = _mode_pair(cfg, "excited_freq01", we10)
    e01 = float(_get(cfg, "e01", required=True))
    d01 = _displacements(cfg, "01", wg, we01)
    coupling = float(_get(cfg, "coupling", required=True))
    dip10 = tuple(_get(cfg, "dipole10", PRESET_DIPOLES["10"]))
    dip01 = tuple(_get(cfg, "dipole01", PRESET_DIPOLES["01"]))
    _reject_leftovers(cfg)
    s10 = HarmonicSurface(e10, we10, d10)
    s01 = HarmonicSurface(e01, we01, d01)
    surfaces = {GROUND: ground, "10": s10, "01": s01, DOUBLE: _combine_f_surface(s10, s01)}
    return DimerModel(2, surfaces, coupling, {"10": dip10, "01": dip01},
                      carrier_frequency=carrier)


def _reject_leftovers(cfg):
    if cfg:
        raise ModelError(f"unknown model keys: {sorted(cfg)}")


def make_same_shape_dimer(offset_difference=-100.0, coupling=100.0,
                          displacement=0.7, base_offset=-250.0) -> DimerModel:
    """Dimer whose singly-excited surfaces differ only by a constant.

    Both sites share frequencies and displacements, so the excitons are
    exact adiabatic states and the process matrix is purely oscillatory.
    Uses the preset dipole geometry.  The f surface follows its own rule
    (x from V_10, y from V_01), which keeps ground and doubly-excited
    surfaces genuinely different from the singly-excited ones.
    """
    wg = (100.0, 100.0)
    we = (200.0, 150.0)
    disp = (displacement, displacement)
    s10 = HarmonicSurface(base_offset + offset_difference / 2.0, we, disp)
    s01 = HarmonicSurface(base_offset - offset_difference / 2.0, we, disp)
    surfaces = {
        GROUND: HarmonicSurface(0.0, wg),
        "10": s10,
        "01": s01,
        DOUBLE: _combine_f_surface(s10, s01),
    }
    return DimerModel(2, surfaces, coupling, dict(PRESET_DIPOLES),
                      name="same-shape-dimer")
