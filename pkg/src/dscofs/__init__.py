"""Unsupervised feature selection by PCA with row and element sparsity.

The transform ``X`` (``d x m``, orthonormal columns) is coupled to an
element-sparse copy ``Y`` and a row-sparse copy ``Z``; features are ranked by
the row norms of ``Z``. See :func:`dscofs.solver.run` for the solver and
:mod:`dscofs.cli` for the command-line interface.
"""
__version__ = "0.1.0"

from ._backend import available_backends, backend_name, get_backend
from .core import (
    PenaltyBound,
    SolverConfig,
    approx_grad_D,
    beta_lower_bound,
    center_columns,
    grad_f,
    grad_l,
    lambda_matrix,
    merit_h,
    objective_f,
    orthogonality_residual,
)
from .data_io import load_csv, load_report, save_csv, save_report
from .errors import ConfigError, DataFormatError, NumericalError, ShapeError
from .evaluation import EvaluationReport, acc, derive_seed, evaluate, hungarian_match, kmeans, nmi
from .penalty import InnerResult, bb_step, project_ball, solve_x_subproblem
from .prox import hard_threshold_elements, hard_threshold_rows, y_update, z_update
from .selection import FeatureRanking, fsr, rank_features, reduce_data, select_features
from .solver import SolveResult, check_stop, convergence_diagnostics, init_orthogonal, run
from .stats import ScoreTable, friedman, nemenyi_cd, pairwise_significance
from .synth import PlantedDataset, embed_with_noise, gen_2spiral, gen_banana, gen_dartboard, make_planted
