"""Nonautonomous neural networks with infinite distributed delay.

Sigmoidal equations, their Heaviside inclusion limit, pullback attractors
and eps-convergence diagnostics.
"""

from .attractor import AttractorEstimate, Grid, Mode, attractor_convergence_sweep, attractor_distance, pullback_estimate
from .dynamics import (
    IntegratorConfig,
    Method,
    NumericalError,
    PolicyKind,
    SelectorPolicy,
    TrajectoryRecord,
    integrate_inclusion,
    integrate_sigmoidal,
    residual_membership,
    sigmoidal_convergence_sweep,
)
from .measures import DIVERGENT, DelayMeasure, Path, gamma_moment, integrate, partition_masses
from .model import (
    AbsorbingConstants,
    DecayFn,
    NetworkParams,
    StimulusFn,
    absorbing_radius,
    check_hypotheses,
    rhs_inclusion_box,
    rhs_sigmoidal,
    solution_bound_constants,
)
from .phase_space import History, default_window, distance_gamma, evaluate, gamma_norm, shift_append
from .set_valued import (
    Box,
    Interval,
    aumann_chi_integral,
    b_of,
    chi,
    hausdorff,
    hausdorff_box,
    hausdorff_cloud,
    hausdorff_sym,
    sigmoid,
)

__version__ = "0.1.0"
