"""Monitored quantum dynamics on the fully-connected lattice.

A particle hops with uniform amplitude between all pairs of ``N`` sites
while a detector repeatedly probes the block of sites ``m+1..N`` at random
times.  This package simulates the resulting piecewise-unitary collapse
dynamics trajectory by trajectory and evaluates the exact closed forms for
the survival probability, the first-detection density, the mean first
detection time, and the optimal measurement rate, so that each side can
cross-validate the other.
"""

from .analytic import (
    ConsistencyError,
    CubicRoots,
    FirstDetectionCurve,
    StateCoefficients,
    bright_overlap_sums,
    coefficients,
    cubic_roots,
    decay_timescale,
    first_detection_density,
    first_detection_laplace,
    mfdt,
    optimal_rate,
    short_time_class,
    survival_laplace,
)
from .darkbright import (
    DarkBrightDecomposition,
    bright_basis_all_to_all,
    decompose,
    eventual_detection_probability,
    is_bright,
    random_bright_state,
    special_state,
)
from .protocol import (
    DetectionEnsemble,
    ExponentialIntervals,
    LaplaceEstimate,
    ProtocolConfig,
    ProtocolCorruptionError,
    SharpIntervals,
    TrajectoryRecord,
    conditional_survival,
    measurement_step,
    monte_carlo,
    numeric_laplace_of_survival,
    run_trajectory,
    trajectory_stream,
)
from .spectral import (
    AllToAllModel,
    Spectrum,
    all_ones_eigenvectors,
    b_coefficient,
    closed_form_eigenbasis,
    generic_eigenbasis,
    propagator,
)
from .states import (
    Projector,
    SiteWindow,
    StateVector,
    site_state,
    uniform_state,
    window_projectors,
    window_sums,
)

__version__ = "0.1.0"

__all__ = [
    "AllToAllModel",
    "ConsistencyError",
    "CubicRoots",
    "DarkBrightDecomposition",
    "DetectionEnsemble",
    "ExponentialIntervals",
    "FirstDetectionCurve",
    "LaplaceEstimate",
    "Projector",
    "ProtocolConfig",
    "ProtocolCorruptionError",
    "SharpIntervals",
    "SiteWindow",
    "Spectrum",
    "StateCoefficients",
    "StateVector",
    "TrajectoryRecord",
    "all_ones_eigenvectors",
    "b_coefficient",
    "bright_basis_all_to_all",
    "bright_overlap_sums",
    "closed_form_eigenbasis",
    "coefficients",
    "conditional_survival",
    "cubic_roots",
    "decay_timescale",
    "decompose",
    "eventual_detection_probability",
    "first_detection_density",
    "first_detection_laplace",
    "generic_eigenbasis",
    "is_bright",
    "measurement_step",
    "mfdt",
    "monte_carlo",
    "numeric_laplace_of_survival",
    "optimal_rate",
    "propagator",
    "random_bright_state",
    "run_trajectory",
    "short_time_class",
    "site_state",
    "special_state",
    "survival_laplace",
    "trajectory_stream",
    "uniform_state",
    "window_projectors",
    "window_sums",
]
