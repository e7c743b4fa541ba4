"""Physical constants and unit conventions.

All energies are wavenumbers (cm^-1), all times femtoseconds, hbar = 1.
Angular frequencies follow

    omega[rad/fs] = 2*pi * c[cm/fs] * energy[cm^-1]

so a single constant converts between the two unit systems everywhere.
"""

import numpy as np

#: speed of light in cm/fs
C_CM_FS = 2.99792458e-5

#: multiply cm^-1 by this to get rad/fs
CM_TO_RADFS = 2.0 * np.pi * C_CM_FS

#: Boltzmann constant in cm^-1 / K
KB_CM = 0.6950348


def cm_to_radfs(energy_cm):
    """Convert wavenumbers (cm^-1) to angular frequency (rad/fs)."""
    return CM_TO_RADFS * np.asarray(energy_cm)


def radfs_to_cm(omega_radfs):
    """Convert angular frequency (rad/fs) back to wavenumbers (cm^-1)."""
    return np.asarray(omega_radfs) / CM_TO_RADFS
