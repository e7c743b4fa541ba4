import numpy as np
import pytest

from ecwitness.model import ModelError, build_model
from ecwitness.vibronic import (VibronicBasis, assemble_manifold_hamiltonian,
                                diagonalize_manifold, diagonalize_model,
                                fc_overlap_1d, fc_overlap_table,
                                manifold_labels, thermal_weights,
                                truncation_shift)

from oracles import fc_overlap_quadrature


def test_ground_manifold_is_diagonal(monomer):
    basis = VibronicBasis.for_model(monomer, 4)
    h = assemble_manifold_hamiltonian(monomer, basis, "ground")
    off = h - np.diag(np.diag(h))
    assert np.max(np.abs(off)) < 1e-10
    n = np.arange(4)
    expect = np.add.outer(100.0 * (n + 0.5), 100.0 * (n + 0.5)).ravel()
    assert np.allclose(np.diag(h), expect, atol=1e-10)


def test_undistorted_excited_manifold_is_offset_diagonal():
    m = build_model({"site_count": 1, "e10": -125.0,
                     "excited_freq_x": 100.0, "excited_freq_y": 100.0})
    basis = VibronicBasis.for_model(m, 5)
    h = assemble_manifold_hamiltonian(m, basis, "single")
    n = np.arange(5)
    expect = np.add.outer(100.0 * (n + 0.5), 100.0 * (n + 0.5)).ravel() - 125.0
    assert np.allclose(h, np.diag(expect), atol=1e-10)


def test_single_manifold_hermitian_and_coupling_block(coherent_dimer):
    basis = VibronicBasis.for_model(coherent_dimer, 8)
    h = assemble_manifold_hamiltonian(coherent_dimer, basis, "single")
    assert h.shape == (128, 128)
    assert np.max(np.abs(h - h.T)) < 1e-12
    nv = basis.n_vib
    assert np.allclose(h[:nv, nv:], 100.0 * np.eye(nv), atol=1e-12)


def test_unknown_manifold_label(coherent_dimer):
    with pytest.raises(ModelError):
        manifold_labels(coherent_dimer, "triple")


def test_diagonalize_manifold_basics(coherent_dimer):
    basis = VibronicBasis.for_model(coherent_dimer, 6)
    h = assemble_manifold_hamiltonian(coherent_dimer, basis, "single")
    eig = diagonalize_manifold(h, "single", coherent_dimer.site_labels, basis)
    assert np.all(np.diff(eig.energies) >= -1e-10)
    v = eig.vectors
    assert np.max(np.abs(v.T @ v - np.eye(v.shape[1]))) < 1e-10
    resid = h @ v - v * eig.energies[None, :]
    assert np.max(np.abs(resid)) < 1e-8 * np.max(np.abs(h))


def test_diagonalize_manifold_rejects_non_hermitian():
    basis = VibronicBasis(4, (100.0, 100.0))
    bad = np.arange(16.0).reshape(4, 4)
    with pytest.raises(ValueError, match="Hermitian"):
        diagonalize_manifold(bad, "ground", ("g",), basis)


def test_two_level_off_diagonal():
    basis = VibronicBasis(2, (100.0, 100.0))
    h = np.array([[0.0, 5.0], [5.0, 0.0]])
    eig = diagonalize_manifold(h, "single", ("10", "01"), basis)
    assert np.allclose(eig.energies, [-5.0, 5.0])


def test_truncation_convergence_gate(coherent_dimer):
    """The 0.1 cm^-1 gate on the lowest ten levels holds from N = 14 for
    every preset; N = 8-10 runs trade cm-level eigenvalue shifts for the
    desk-scale runtime budget (verdict-level results are insensitive)."""
    assert truncation_shift(coherent_dimer, 14) < 0.1
    assert truncation_shift(coherent_dimer, 8) > 0.1  # why 14 is the gate


def test_completeness_per_basis_vector(cd_eig):
    v = cd_eig.single.vectors
    norms = np.sum(v * v, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-10


def test_fc_overlap_trivial_cases():
    assert fc_overlap_1d(1.3, 1.3, 0.0, 2, 2) == pytest.approx(1.0, abs=1e-12)
    assert fc_overlap_1d(1.3, 1.3, 0.0, 2, 4) == pytest.approx(0.0, abs=1e-12)
    assert fc_overlap_1d(1.0, 1.0, 1.0, 0, 0) == pytest.approx(
        np.exp(-0.25), abs=1e-12)
    assert fc_overlap_1d(1.0, 2.0, 0.0, 0, 0) == pytest.approx(
        np.sqrt(2.0 * np.sqrt(2.0) / 3.0), abs=1e-12)


def test_fc_overlap_against_quadrature():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(25):
        wa = rng.uniform(0.5, 2.0)
        wb = wa * rng.uniform(0.5, 2.0)
        d = rng.uniform(-2.0, 2.0)
        na = int(rng.integers(0, 11))
        nb = int(rng.integers(0, 11))
        got = fc_overlap_1d(wa, wb, d, na, nb)
        want = fc_overlap_quadrature(wa, wb, d, na, nb)
        worst = max(worst, abs(got - want))
    assert worst < 1e-8


def test_fc_overlap_rejects_bad_frequency():
    with pytest.raises(ModelError):
        fc_overlap_1d(-1.0, 1.0, 0.0, 0, 0)


def test_eigenvector_overlaps_match_fc_products(coherent_dimer):
    """Doubly-excited manifold of a preset: eigenvector-derived overlaps
    with the ground states must reproduce products of one-dimensional
    Franck-Condon integrals.  The ground ladder is massively degenerate
    (equal mode frequencies), so the invariant compared is the summed
    overlap weight per degenerate ground shell."""
    n = 28
    f = coherent_dimer.surfaces["f"]
    wg = coherent_dimer.ground_frequencies()
    basis = VibronicBasis.for_model(coherent_dimer, n)
    h = assemble_manifold_hamiltonian(coherent_dimer, basis, "double")
    eig = diagonalize_manifold(h, "double", ("f",), basis)
    ffx = fc_overlap_table(wg[0], f.frequencies[0], f.displacements[0],
                           n - 1, n - 1)
    ffy = fc_overlap_table(wg[1], f.frequencies[1], f.displacements[1],
                           n - 1, n - 1)
    kron = np.kron(ffx, ffy)
    idx = np.arange(n)
    shells = np.add.outer(idx, idx).ravel()          # ground quanta nx+ny
    exact_e = (np.add.outer(f.frequencies[0] * (idx + 0.5),
                            f.frequencies[1] * (idx + 0.5)).ravel()
               + f.energy_offset)
    order = np.argsort(exact_e)
    fcomp = eig.component("f")                       # ground basis diagonal
    worst = 0.0
    for k in range(8):
        m = order[k]
        assert eig.energies[k] == pytest.approx(exact_e[m], abs=1e-5)
        for shell in range(10):
            got = np.sum(np.abs(fcomp[k][shells == shell]) ** 2)
            want = np.sum(np.abs(kron[shells == shell, m]) ** 2)
            worst = max(worst, abs(got - want))
    assert worst < 1e-8


def test_thermal_weights_basic(monomer_eig):
    w0 = thermal_weights(monomer_eig.ground, 0.1)
    assert w0.weights[0] == pytest.approx(1.0, abs=1e-12)
    w = thermal_weights(monomer_eig.ground, 273.0)
    assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(w.weights >= 0)
    assert 0.0 <= w.tail_mass < 0.1


def test_thermal_weight_ratio_and_factorization(monomer_eig):
    w = thermal_weights(monomer_eig.ground, 273.0)
    e = monomer_eig.ground.energies
    # one quantum of the 100 cm^-1 mode
    k1 = int(np.argmin(np.abs(e - e[0] - 100.0)))
    ratio = w.weights[k1] / w.weights[0]
    assert ratio == pytest.approx(np.exp(-100.0 / (273.0 * 0.6950348)),
                                  abs=1e-6)
    assert ratio == pytest.approx(0.5902, abs=2e-4)
    # separable spectrum: the weight multiset equals the outer product of
    # per-mode Boltzmann factors (stated on sorted arrays because the
    # degenerate ground shells diagonalize in an arbitrary internal basis)
    n = monomer_eig.basis.n_levels
    per_mode = np.exp(-100.0 * np.arange(n) / (0.6950348 * 273.0))
    flat = np.outer(per_mode, per_mode).ravel()
    flat /= flat.sum()
    assert np.allclose(np.sort(w.weights), np.sort(flat), atol=1e-12)


def test_thermal_weights_requires_positive_temperature(monomer_eig):
    with pytest.raises(ModelError):
        thermal_weights(monomer_eig.ground, 0.0)
