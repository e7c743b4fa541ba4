"""Vibronic Hamiltonians in a truncated oscillator product basis.

Every electronic manifold (ground / singly-excited / doubly-excited) is
represented in the tensor-product basis of the *ground-surface* harmonic
oscillator eigenstates, two modes per molecule.  Matrix elements of the
displaced, distorted excited surfaces follow from the ladder expressions
for x, x^2 and p^2 in that fixed basis, so a manifold Hamiltonian is

    H_m = T + V_m(x, y) + offset,     [cm^-1, rotating frame]

with the site-site coupling J joining the two electronic blocks of the
singly-excited manifold (configuration independent, Condon-like).

The flat basis index is m * N^2 + n_x * N + n_y for electronic label m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import KB_CM
from .model import DOUBLE, GROUND, DimerModel, HarmonicSurface, ModelError

MANIFOLDS = ("ground", "single", "double")

#: electronic labels per manifold for a dimer / monomer
def manifold_labels(model: DimerModel, manifold: str):
    if manifold == "ground":
        return (GROUND,)
    if manifold == "single":
        return model.site_labels
    if manifold == "double":
        if model.site_count == 1:
            raise ModelError("monomer has no doubly-excited manifold")
        return (DOUBLE,)
    raise ModelError(f"unknown manifold '{manifold}'")


@dataclass(frozen=True)
class VibronicBasis:
    """Truncated product basis built on the ground-surface oscillators."""

    n_levels: int
    mode_frequencies: tuple[float, float]   # ground-surface (omega_x, omega_y)

    def __post_init__(self):
        if self.n_levels < 2:
            raise ModelError("need at least two levels per mode")

    @property
    def n_vib(self):
        """Vibrational states per electronic label: N^2."""
        return self.n_levels ** 2

    def flat_index(self, electronic_position: int, nx: int, ny: int) -> int:
        n = self.n_levels
        if not (0 <= nx < n and 0 <= ny < n):
            raise IndexError("vibrational quanta outside basis")
        return electronic_position * self.n_vib + nx * n + ny

    def quanta(self, flat_vib_index: int):
        """Inverse of the vibrational part of flat_index: -> (nx, ny)."""
        return divmod(flat_vib_index, self.n_levels)

    @classmethod
    def for_model(cls, model: DimerModel, n_levels: int) -> "VibronicBasis":
        return cls(n_levels=n_levels, mode_frequencies=model.ground_frequencies())


def _ladder(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def mode_hamiltonian(basis_frequency: float, surface_frequency: float,
                     displacement: float, n_levels: int) -> np.ndarray:
    """Single-mode  p^2/2 + w_s^2 (x - Delta)^2 / 2  in the basis oscillator.

    displacement is dimensionless (units of 1/sqrt(basis_frequency)); output
    in cm^-1.  Exact in the untruncated limit; x couples +-1, x^2 and p^2
    couple 0, +-2 quanta.
    """
    wb, ws = float(basis_frequency), float(surface_frequency)
    if wb <= 0 or ws <= 0:
        raise ModelError("non-positive frequency")
    n = np.arange(n_levels)
    a = _ladder(n_levels)
    diag2n1 = np.diag(2 * n + 1.0)
    aa = a @ a
    x2 = (diag2n1 + aa + aa.T) / (2.0 * wb)
    p2 = (wb / 2.0) * (diag2n1 - aa - aa.T)
    x1 = (a + a.T) / math.sqrt(2.0 * wb)
    delta = displacement / math.sqrt(wb)
    return p2 / 2.0 + (ws * ws / 2.0) * (
        x2 - 2.0 * delta * x1 + delta * delta * np.eye(n_levels)
    )


def _surface_hamiltonian(surface: HarmonicSurface, basis: VibronicBasis) -> np.ndarray:
    """Two-mode vibronic block of one surface, offset included."""
    hx = mode_hamiltonian(basis.mode_frequencies[0], surface.frequencies[0],
                          surface.displacements[0], basis.n_levels)
    hy = mode_hamiltonian(basis.mode_frequencies[1], surface.frequencies[1],
                          surface.displacements[1], basis.n_levels)
    eye = np.eye(basis.n_levels)
    h = np.kron(hx, eye) + np.kron(eye, hy)
    return h + surface.energy_offset * np.eye(basis.n_vib)


def assemble_manifold_hamiltonian(model: DimerModel, basis: VibronicBasis,
                                  manifold: str) -> np.ndarray:
    """Hermitian vibronic Hamiltonian of one electronic manifold (cm^-1).

    The singly-excited manifold of a dimer stacks the '10' and '01' blocks
    and couples them by J * identity (Condon-like coupling).
    """
    labels = manifold_labels(model, manifold)
    blocks = [_surface_hamiltonian(model.surfaces[lab], basis) for lab in labels]
    if len(blocks) == 1:
        return blocks[0]
    nv = basis.n_vib
    h = np.zeros((2 * nv, 2 * nv))
    h[:nv, :nv] = blocks[0]
    h[nv:, nv:] = blocks[1]
    h[:nv, nv:] = model.coupling * np.eye(nv)
    h[nv:, :nv] = model.coupling * np.eye(nv)
    return h


@dataclass(frozen=True)
class ManifoldEigensystem:
    """Eigenpairs of one manifold in the product basis.

    vectors[:, k] is the k-th eigenvector over the flat basis index;
    energies ascend and live in the rotating frame (cm^-1).
    """

    manifold: str
    labels: tuple
    energies: np.ndarray
    vectors: np.ndarray
    basis: VibronicBasis

    def component(self, label: str) -> np.ndarray:
        """Block <label, nu_k | zeta> with shape (n_eigenstates, n_vib)."""
        pos = self.labels.index(label)
        nv = self.basis.n_vib
        return self.vectors[pos * nv:(pos + 1) * nv, :].T

    @property
    def size(self):
        return self.energies.size


def diagonalize_manifold(h: np.ndarray, manifold: str, labels, basis: VibronicBasis,
                         hermiticity_tol: float = 1e-9) -> ManifoldEigensystem:
    """Full eigendecomposition with a deterministic phase convention.

    Raises if the input is non-Hermitian beyond tolerance.  Each
    eigenvector's largest-magnitude component is made real-positive so
    degenerate subspaces come out reproducibly.
    """
    h = np.asarray(h)
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > hermiticity_tol * scale:
        raise ValueError("manifold Hamiltonian is not Hermitian within tolerance")
    energies, vectors = np.linalg.eigh(h)
    for k in range(vectors.shape[1]):
        j = int(np.argmax(np.abs(vectors[:, k])))
        piv = vectors[j, k]
        if np.iscomplexobj(vectors):
            if piv != 0:
                vectors[:, k] *= np.conj(piv) / abs(piv)
        elif piv < 0:
            vectors[:, k] = -vectors[:, k]
    return ManifoldEigensystem(manifold=manifold, labels=tuple(labels),
                               energies=energies, vectors=vectors, basis=basis)


@dataclass(frozen=True)
class ModelEigensystems:
    """Eigensystems of all manifolds of one model at a common truncation."""

    model: DimerModel
    basis: VibronicBasis
    ground: ManifoldEigensystem
    single: ManifoldEigensystem
    double: ManifoldEigensystem | None

    def component_in_ground_eigenbasis(self, label: str) -> np.ndarray:
        """C[zeta, n] = <label, nu_n^(g) | zeta> against ground *eigenstates*.

        The product basis is the ground-surface oscillator basis, so the
        ground rotation is the identity up to roundoff; kept general.
        """
        source = self.double if label == DOUBLE else self.single
        return source.component(label) @ self.ground.component(GROUND).T


def truncation_shift(model: DimerModel, n_levels: int, count: int = 10) -> float:
    """Convergence gate: max shift of the lowest `count` singly-excited
    eigenvalues when the truncation grows from n_levels to n_levels + 2
    (cm^-1).  Small values certify the truncation for those levels."""
    basis_a = VibronicBasis.for_model(model, n_levels)
    basis_b = VibronicBasis.for_model(model, n_levels + 2)
    e_a = np.linalg.eigvalsh(
        assemble_manifold_hamiltonian(model, basis_a, "single"))[:count]
    e_b = np.linalg.eigvalsh(
        assemble_manifold_hamiltonian(model, basis_b, "single"))[:count]
    return float(np.max(np.abs(e_a - e_b)))


def diagonalize_model(model: DimerModel, n_levels: int = 10) -> ModelEigensystems:
    """Assemble and diagonalize every manifold of the model."""
    basis = VibronicBasis.for_model(model, n_levels)
    systems = {}
    for manifold in MANIFOLDS:
        if manifold == "double" and model.site_count == 1:
            systems[manifold] = None
            continue
        labels = manifold_labels(model, manifold)
        h = assemble_manifold_hamiltonian(model, basis, manifold)
        systems[manifold] = diagonalize_manifold(h, manifold, labels, basis)
    return ModelEigensystems(model=model, basis=basis, ground=systems["ground"],
                             single=systems["single"], double=systems["double"])


# ---------------------------------------------------------------------------
# Franck-Condon overlaps of two displaced, distorted harmonic oscillators
# ---------------------------------------------------------------------------

def fc_overlap_table(omega_a: float, omega_b: float, displacement: float,
                     n_a: int, n_b: int) -> np.ndarray:
    """Table F[i, j] = <i; omega_a, origin 0 | j; omega_b, origin Delta>.

    displacement is dimensionless in units of 1/sqrt(omega_a), so the
    physical origin shift is Delta = displacement / sqrt(omega_a).  Built
    by the stable recursion that follows from expressing the b-oscillator
    ladder operator in the a-oscillator's:

        b = sp * a + sm * a^dag - t,
        sp = (r + 1/r)/2,  sm = (1/r - r)/2,  r = sqrt(omega_a/omega_b),
        t  = sqrt(omega_b/2) * Delta.

    Matrix elements of b and b^dag between <i_a| and |j_b> then give a
    column-0 upward recursion and a column-raising recursion.  Rows run
    0..n_a, columns 0..n_b.
    """
    if omega_a <= 0 or omega_b <= 0:
        raise ModelError("non-positive frequency")
    alpha, beta = float(omega_a), float(omega_b)
    delta = displacement / math.sqrt(alpha)
    r = math.sqrt(alpha / beta)
    sp = (r + 1.0 / r) / 2.0
    sm = (1.0 / r - r) / 2.0
    t = math.sqrt(beta / 2.0) * delta

    # pad rows by the number of column raises: each raise consumes F[i+1, j],
    # so the undefined top row must stay ahead of the returned block
    rows, cols = n_a + n_b + 2, n_b + 1
    F = np.zeros((rows, cols))
    F[0, 0] = math.sqrt(2.0 * math.sqrt(alpha * beta) / (alpha + beta)) * math.exp(
        -alpha * beta * delta * delta / (2.0 * (alpha + beta))
    )
    # column 0 from <i_a|b|0_b> = 0:
    #   0 = sp sqrt(i+1) F[i+1,0] + sm sqrt(i) F[i-1,0] - t F[i,0]
    for i in range(rows - 1):
        acc = t * F[i, 0]
        if i > 0:
            acc -= sm * math.sqrt(i) * F[i - 1, 0]
        F[i + 1, 0] = acc / (sp * math.sqrt(i + 1))
    # column raise from <i_a|b^dag|j_b> = sqrt(j+1) F[i, j+1]:
    #   sqrt(j+1) F[i,j+1] = sp sqrt(i) F[i-1,j] + sm sqrt(i+1) F[i+1,j] - t F[i,j]
    for j in range(cols - 1):
        for i in range(rows - 1):
            acc = sm * math.sqrt(i + 1) * F[i + 1, j] - t * F[i, j]
            if i > 0:
                acc += sp * math.sqrt(i) * F[i - 1, j]
            F[i, j + 1] = acc / math.sqrt(j + 1)
        # the top row of each new column misses its F[i+1, j] source; it is
        # discarded by the final slice and never feeds rows <= n_a
    return F[:n_a + 1, :n_b + 1]


def fc_overlap_1d(omega_a: float, omega_b: float, displacement: float,
                  n_a: int, n_b: int) -> float:
    """Single Franck-Condon overlap; see fc_overlap_table."""
    return float(fc_overlap_table(omega_a, omega_b, displacement, n_a, n_b)[n_a, n_b])


# ---------------------------------------------------------------------------
# Thermal occupation of the ground manifold
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThermalWeights:
    """Boltzmann weights over ground-manifold vibrational eigenstates.

    tail_mass estimates the Boltzmann weight lost to truncation (exact for
    the separable harmonic ground surface).
    """

    temperature: float
    weights: np.ndarray
    tail_mass: float


def thermal_weights(ground: ManifoldEigensystem, temperature: float) -> ThermalWeights:
    """Normalized p_n = exp(-(E_n - E_0)/kT) over the ground eigensystem."""
    if temperature <= 0:
        raise ModelError("temperature must be positive")
    e = ground.energies - ground.energies[0]
    w = np.exp(-e / (KB_CM * temperature))
    z_trunc = float(np.sum(w))
    # separable harmonic ground surface: per-mode geometric partition sums
    nlev = ground.basis.n_levels
    tail = 0.0
    try:
        zs_full, zs_part = 1.0, 1.0
        for wmode in ground.basis.mode_frequencies:
            q = math.exp(-wmode / (KB_CM * temperature))
            zs_full *= 1.0 / (1.0 - q)
            zs_part *= (1.0 - q ** nlev) / (1.0 - q)
        tail = max(0.0, 1.0 - zs_part / zs_full)
    except OverflowError:
        tail = 0.0
    return ThermalWeights(temperature=float(temperature), weights=w / z_trunc,
                          tail_mass=tail)
