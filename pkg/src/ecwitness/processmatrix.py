"""Process matrix of the singly-excited electronic subspace and the exact
broadband pump-probe signal built from it.

The process matrix propagates the reduced electronic state over the
waiting time T for a bath prepared thermal in the ground surface:

    chi[i,j,q,p](T) = Tr_nuc{ <i| e^{-i H T} (|q><p| x rho_B) e^{+i H T} |j> }

evaluated in the vibronic eigenbasis as a double sum over eigenstates of
the singly-excited manifold and thermally weighted ground levels.  The
electronic indices may be expressed in the site, exciton or any custom
unitary basis; the broadband signal contracted from chi is invariant
under that choice when the dipoles are rotated consistently.

Broadband pump-probe components (field strength set to 1, signals in
arbitrary units):

    S_SE  = + sum_{ijqp} w(mu_gi, mu_qg, mu_gp, mu_jg) chi[i,j,q,p](T)
    S_ESA = - sum_{ijqp} w(mu_fi, mu_qg, mu_gp, mu_jf) chi[i,j,q,p](T)
    S_GSB = + sum_{ip}   w(mu_gp, mu_pg, mu_gi, mu_ig)        (constant)

with w the orientation weight of the four-dipole pathway.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .constants import CM_TO_RADFS
from .ensemble import pathway_weight
from .model import GROUND, DimerModel, ModelError, exciton_transform
from .traces import PumpProbeSignal, coerce_real
from .vibronic import ModelEigensystems, ThermalWeights, assemble_manifold_hamiltonian


def default_t_grid(t_max: float = 900.0, points: int = 512) -> np.ndarray:
    """Waiting-time grid in fs (0 to ~900 fs by default)."""
    return np.linspace(0.0, t_max, points)


def resolve_electronic_basis(model: DimerModel, basis) -> tuple[str, np.ndarray]:
    """Return (name, unitary) mapping site states to the requested basis.

    basis may be 'site', 'exciton', or an explicit unitary matrix whose
    columns hold the new states in the site basis.
    """
    n = len(model.site_labels)
    if isinstance(basis, str):
        if basis == "site":
            return "site", np.eye(n)
        if basis == "exciton":
            if model.site_count == 1:
                return "site", np.eye(n)
            return "exciton", exciton_transform(model).rotation
        raise ModelError(f"unknown electronic basis '{basis}'")
    u = np.asarray(basis)
    if u.shape != (n, n):
        raise ModelError("electronic basis rotation has the wrong shape")
    if np.max(np.abs(u.conj().T @ u - np.eye(n))) > 1e-10:
        raise ModelError("electronic basis rotation is not unitary")
    return "custom", u


@dataclass(frozen=True)
class ProcessMatrix:
    """chi[i,j,q,p] on a waiting-time grid, in a tagged electronic basis."""

    t_grid: np.ndarray
    tensor: np.ndarray            # (nT, ne, ne, ne, ne) complex
    basis_name: str
    rotation: np.ndarray          # site -> basis unitary (columns = new states)
    labels: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def n_electronic(self):
        return self.tensor.shape[1]

    def invariant_report(self) -> dict:
        """Max deviations of the defining invariants over the whole grid."""
        ne = self.n_electronic
        eye = np.eye(ne)
        identity0 = np.max(np.abs(
            self.tensor[0] - np.einsum("iq,jp->ijqp", eye, eye)))
        herm = np.max(np.abs(
            self.tensor - np.conj(np.transpose(self.tensor, (0, 2, 1, 4, 3)))))
        trace = np.max(np.abs(
            np.einsum("tiiqp->tqp", self.tensor) - eye[None, :, :]))
        return {"identity_at_t0": float(identity0), "hermiticity": float(herm),
                "trace_preservation": float(trace)}


def _rotated_components(eig: ModelEigensystems, rotation: np.ndarray) -> np.ndarray:
    """<a, nu_n^(g) | zeta> for each rotated electronic label a.

    Stacked shape (ne, n_single, n_ground); new states |a> = sum_m U[m,a]|m>
    give components sum_m conj(U[m,a]) <m,nu_n|zeta>.
    """
    site = np.stack([eig.component_in_ground_eigenbasis(lab)
                     for lab in eig.model.site_labels])
    return np.einsum("ma,mzn->azn", np.conj(rotation), site)


def rotated_site_dipoles(model: DimerModel, rotation: np.ndarray) -> np.ndarray:
    """mu_{g,a} = <g|mu|a> rows for the rotated basis."""
    return np.einsum("ma,mk->ak", rotation, model.dipole_matrix())


def rotated_f_dipoles(model: DimerModel, rotation: np.ndarray) -> np.ndarray:
    """mu_{f,a} = <f|mu|a> rows for the rotated basis."""
    return np.einsum("ma,mk->ak", rotation, model.f_dipole_matrix())


def compute_chi(model: DimerModel, eigensystems: ModelEigensystems,
                weights: ThermalWeights, t_grid, basis="site") -> ProcessMatrix:
    """Evaluate the process matrix on a waiting-time grid.

    Contraction in the vibronic eigenbasis:

        chi[i,j,q,p](T) = sum_{zz'} e^{-i(w_z - w_z')T}
                          [sum_n  p_n conj(C_q[z,n]) C_p[z',n]]
                          [sum_n' C_i[z,n'] conj(C_j[z',n'])]

    with C_m[z,n] = <m, nu_n^(g) | z>.
    """
    if eigensystems.model is not model and eigensystems.model != model:
        raise ModelError("eigensystems were built for a different model")
    if weights.weights.size != eigensystems.ground.size:
        raise ModelError("thermal weights do not match the truncation")
    t_grid = np.asarray(t_grid, dtype=float)
    name, rotation = resolve_electronic_basis(model, basis)
    comp = _rotated_components(eigensystems, rotation)          # (ne, nz, nn)
    ne = comp.shape[0]
    pump = np.einsum("qzn,n,pyn->qpzy", np.conj(comp), weights.weights, comp)
    probe = np.einsum("izn,jyn->ijzy", comp, np.conj(comp))
    omega = eigensystems.single.energies * CM_TO_RADFS
    phases = np.exp(-1j * np.outer(t_grid, omega))               # (nT, nz)
    tensor = np.empty((t_grid.size, ne, ne, ne, ne), dtype=complex)
    for i in range(ne):
        for j in range(ne):
            for q in range(ne):
                for p in range(ne):
                    r = probe[i, j] * pump[q, p]
                    v = r @ np.conj(phases.T)                    # (nz, nT)
                    tensor[:, i, j, q, p] = np.einsum("tz,zt->t", phases, v)
    labels = (tuple(model.site_labels) if name == "site"
              else ("alpha", "beta") if name == "exciton"
              else tuple(f"u{k}" for k in range(ne)))
    meta = {"basis": name, "n_levels": eigensystems.basis.n_levels,
            "temperature_K": weights.temperature}
    return ProcessMatrix(t_grid=t_grid, tensor=tensor, basis_name=name,
                         rotation=rotation, labels=labels, metadata=meta)


def compute_chi_direct(model: DimerModel, eigensystems: ModelEigensystems,
                       weights: ThermalWeights, t_grid, basis="site") -> ProcessMatrix:
    """Brute-force process matrix by matrix exponentials of the truncated
    singly-excited Hamiltonian; independent of the eigenbasis contraction.

    Cost grows as (2 N^2)^3 per grid point; intended for small truncations.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    name, rotation = resolve_electronic_basis(model, basis)
    basis_v = eigensystems.basis
    nv = basis_v.n_vib
    ne = len(model.site_labels)
    h1e = assemble_manifold_hamiltonian(model, basis_v, "single") * CM_TO_RADFS
    vg = eigensystems.ground.component(GROUND).T                # product x eigen
    rho_b = (vg * weights.weights) @ vg.conj().T
    tensor = np.empty((t_grid.size, ne, ne, ne, ne), dtype=complex)
    for it, t in enumerate(t_grid):
        u = expm(-1j * h1e * t)
        for q in range(ne):
            for p in range(ne):
                block = np.zeros((ne * nv, ne * nv), dtype=complex)
                block[q * nv:(q + 1) * nv, p * nv:(p + 1) * nv] = rho_b
                a = u @ block @ u.conj().T
                for i in range(ne):
                    for j in range(ne):
                        tensor[it, i, j, q, p] = np.trace(
                            a[i * nv:(i + 1) * nv, j * nv:(j + 1) * nv])
    if name != "site":
        # chi'_{i'j'q'p'} = sum U*[i,i'] U[j,j'] U[q,q'] U*[p,p'] chi_{ijqp}
        tensor = np.einsum("tijqp,ia,jb,qc,pd->tabcd", tensor,
                           np.conj(rotation), rotation, rotation,
                           np.conj(rotation))
    labels = (tuple(model.site_labels) if name == "site"
              else ("alpha", "beta") if name == "exciton"
              else tuple(f"u{k}" for k in range(ne)))
    return ProcessMatrix(t_grid=t_grid, tensor=tensor, basis_name=name,
                         rotation=rotation, labels=labels,
                         metadata={"basis": name, "method": "direct"})


def propagate(chi: ProcessMatrix, rho0: np.ndarray) -> np.ndarray:
    """rho_el(T) = chi(T) rho(0) on the grid (impulsive-preparation caveat
    applies: only meaningful when the bath starts thermal for every rho0)."""
    rho0 = np.asarray(rho0, dtype=complex)
    return np.einsum("tijqp,qp->tij", chi.tensor, rho0)


def broadband_signal(model: DimerModel, chi: ProcessMatrix,
                     pump_polarization=None, probe_polarization=None) -> PumpProbeSignal:
    """Exact broadband (impulsive) pump-probe signal contracted from chi.

    With both polarizations None the isotropically averaged collinear
    zzzz setting is used; otherwise pass lab-frame unit vectors for a
    fixed molecular orientation.
    """
    if (pump_polarization is None) != (probe_polarization is None):
        raise ModelError("give both pulse polarizations or neither")
    setting = "zzzz" if pump_polarization is None else (
        pump_polarization, probe_polarization)
    dip = rotated_site_dipoles(model, chi.rotation)
    ne = chi.n_electronic
    w_se = np.empty((ne,) * 4, dtype=complex)
    for i in range(ne):
        for j in range(ne):
            for q in range(ne):
                for p in range(ne):
                    w_se[i, j, q, p] = pathway_weight(
                        (dip[i], np.conj(dip[q]), dip[p], np.conj(dip[j])),
                        setting)
    se = np.einsum("tijqp,ijqp->t", chi.tensor, w_se)

    if model.site_count == 2:
        fdip = rotated_f_dipoles(model, chi.rotation)
        w_esa = np.empty((ne,) * 4, dtype=complex)
        for i in range(ne):
            for j in range(ne):
                for q in range(ne):
                    for p in range(ne):
                        w_esa[i, j, q, p] = pathway_weight(
                            (fdip[i], np.conj(dip[q]), dip[p], np.conj(fdip[j])),
                            setting)
        esa = -np.einsum("tijqp,ijqp->t", chi.tensor, w_esa)
    else:
        esa = np.zeros(chi.t_grid.size, dtype=complex)

    gsb_val = 0.0
    for i in range(ne):
        for p in range(ne):
            # probe pair carries i, pump pair carries p
            gsb_val = gsb_val + pathway_weight(
                (dip[i], np.conj(dip[p]), dip[p], np.conj(dip[i])), setting)
    gsb = np.full(chi.t_grid.size, complex(gsb_val))

    md = dict(chi.metadata)
    md.update({"sigma_fs": 0.0, "polarization": "zzzz" if setting == "zzzz"
               else "fixed", "model": model.name})
    return PumpProbeSignal(t_grid=chi.t_grid, se=coerce_real(se),
                           esa=coerce_real(esa), gsb=coerce_real(gsb),
                           metadata=md)
