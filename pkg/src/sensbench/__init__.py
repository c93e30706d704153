"""Global sensitivity analysis of polynomial test models with four methods.

Standard Sobol' sampling, Kriging emulation, adaptive Kriging (AK-MCS) and
Bayesian adaptive spline surfaces (BASS), plus a harness that prices each
method under a virtual per-evaluation cost.
"""

from .akmcs import AkmcsReport, LearningFunction, LearningKind, run_akmcs, score_pool
from .bass import (
    BasisFunction, BassPosterior, BassSample, BassSobol, HingeFactor, McmcConfig, PriorConfig, bass_emulation_loop,
    bass_predict, bass_sobol, fit_bass, hinge_cross_moment_e, hinge_moment_c1,
)
from .errors import (
    DegenerateVariance, DomainError, IllConditioned, IncompleteCell, InvalidDimension, InvalidPair,
    InvalidReplicates, SensBenchError, TooFewPoints, UnsupportedDimension,
)
from .harness import (
    CostLedger, GridConfig, GridResult, Method, MethodResult, RunConfig, Scenario, fastest_map, load_grid,
    magnitude_grid, run_grid, run_method, speed_gain_grid, total_time,
)
from .kriging import EmulationLoopReport, KrigingModel, fit_kriging, kriging_emulation_loop, predict
from .models import AnalyticIndices, TestModel, analytic_indices, build_model, evaluate
from .sampling import SampleMatrix, SobolDesign, lhs, sobol_design, sobol_sequence
from .sobol_analysis import (
    BootstrapCI, ConvergenceReport, SobolIndices, bootstrap_ci, estimate_indices, estimate_second_order,
    run_to_convergence, sobol_indices,
)

__version__ = "0.1.0"
