"""Vibronic-dimer pump-probe simulator and witness for coherent
electronic oscillations in ultrafast spectra."""

__version__ = "0.1.0"

from .ensemble import DisorderSpec, ensemble_average, sample_disorder, zzzz_average
from .model import (DimerModel, ExcitonBasis, HarmonicSurface, ModelError,
                    PulseSpec, build_model, exciton_transform,
                    make_same_shape_dimer, pulse_spectral_amplitude)
from .pipeline import ensemble_absorption, pump_probe_scan, run_witness
from .polaron import (PolaronSpec, perturbation_magnitude, polaron_basis,
                      renormalized_coupling)
from .processmatrix import (ProcessMatrix, broadband_signal, compute_chi,
                            compute_chi_direct, default_t_grid, propagate)
from .signals import (NumericalError, absorption_spectrum, finite_pulse_pp,
                      gsb_first_order, narrowband_se_check, pp_from_2des,
                      rephasing_2des, resonant_pulse, time_ordered_overlap)
from .traces import PumpProbeSignal, SignalTrace, Spectrum2D, TraceError
from .vibronic import (ManifoldEigensystem, ThermalWeights, VibronicBasis,
                       assemble_manifold_hamiltonian, diagonalize_manifold,
                       diagonalize_model, fc_overlap_1d, fc_overlap_table,
                       thermal_weights)
from .witness import (LinearFit, WitnessError, WitnessReport, analyze_traces,
                      decide, locate_peaks, sigma_extrapolate, transform_trace)
