"""Simulator of measurement-induced spin squeezing in a double-well BEC.

Two coherent light beams pass through the two arms of an interferometer,
pick up an atom-number-dependent phase from the condensate, and are
recombined on a beamsplitter and photon-counted.  Conditioning on the
counts squeezes the atomic spin distribution.  The package provides the
exact zero-tunneling conditional-state model, the hybrid master equation
with tunneling and dephasing, Husimi Q diagnostics, and independent
validation oracles.
"""

__version__ = "0.1.0"

from .spin_core import (
    AtomState,
    BlochAngles,
    GroundExcitedAmplitudes,
    SpinMoments,
    analytic_precession,
    bloch_to_ge,
    build_spin_coherent,
    ge_to_lr_amplitudes,
    moments_from_density,
    moments_from_state,
    spin_operator_matrices,
)
from .pure_measure import (
    DetectionOutcome,
    GaussianWindow,
    InteractionSetting,
    LightPair,
    conditional_gaussian,
    conditional_state,
    detection_amplitude,
    detection_probability,
    gaussian_window,
    most_probable_outcome,
    outcome_cutoff,
    port_amplitudes,
)
from .master_eq import (
    HybridState,
    ModelParams,
    TimeGrid,
    conditional_density,
    detection_probability_me,
    integrate,
)
from .husimi import QGrid, coherent_overlap_row, q_grid, q_mixed, q_pure

__all__ = [
    "AtomState",
    "BlochAngles",
    "DetectionOutcome",
    "GaussianWindow",
    "GroundExcitedAmplitudes",
    "HybridState",
    "InteractionSetting",
    "LightPair",
    "ModelParams",
    "QGrid",
    "SpinMoments",
    "TimeGrid",
    "analytic_precession",
    "bloch_to_ge",
    "build_spin_coherent",
    "coherent_overlap_row",
    "conditional_density",
    "conditional_gaussian",
    "conditional_state",
    "detection_amplitude",
    "detection_probability",
    "detection_probability_me",
    "ge_to_lr_amplitudes",
    "integrate",
    "moments_from_density",
    "moments_from_state",
    "most_probable_outcome",
    "outcome_cutoff",
    "port_amplitudes",
    "q_grid",
    "q_mixed",
    "q_pure",
    "spin_operator_matrices",
]
