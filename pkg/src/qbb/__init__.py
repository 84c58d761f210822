"""Bounds on the Bayesian mean square loss of multiparameter quantum estimation."""

__version__ = "0.1.0"

from .bounds import (
    BoundsReport, MetricChoice, ReportOptions, SpmResult, assemble_report, check_hierarchy,
    monotone_metric_bound, pgm_bound, pgm_star_bound, prior_loss, spm,
)
from .errors import *  # noqa: F401,F403
from .model import (
    GridModel, Model, ModelMoments, PriorAxis, ProductModel, imaging_model, load_grid_model,
    moments_imaging, moments_numeric, moments_phase_dephasing, moments_planar,
    phase_dephasing_model, planar_model, random_grid_model, save_grid_model,
)
from .povm import (
    OptimalityCertificate, Povm, identity_povm, load_povm, msl_of_povm, pauli_tomography_povm,
    pgm_povm, save_povm, spm_projective, verify_optimality,
)
from .sdp import holevo_bound, nagaoka_two_param, nh_bound, solve_sdp, SdpProblem
from .tolerances import DEFAULT_TOL, ToleranceConfig
