"""kan-heatlab: Kolmogorov-Arnold networks with symbolic formula
extraction, analytical building heat-transfer oracles, and reproducible
KAN-vs-MLP benchmark protocols."""

from .baselines import MlpNetwork
from .datasets import (
    Dataset,
    NormalizationSpec,
    gen_case1,
    gen_case2,
    gen_case3,
    generate_case4_surrogate,
    load_case4,
    normalize_by_task1,
    split_tasks,
    subsample,
)
from .gp import GpConfig, gp_search
from .kan import (
    KanNetwork,
    SplineEdge,
    SymbolicLock,
    edge_eval,
    grid_refit,
    l2_penalty,
    load_checkpoint,
    lock_edge_symbolic,
    prune,
    save_checkpoint,
)
from .metrics import Metrics, compute_metrics, mape, mse, pearson, r2, smape
from .numerics import KnotGrid, bspline_basis, erf, erfc, solve_least_squares
from .operators import DEFAULT_LIBRARY, Operator
from .physics import (
    HarmonicSpec,
    ResponseFactorSet,
    WallSpec,
    concrete_wall,
    fd_reference_solve,
    fourier_decompose,
    harmonic_heat_flow,
    response_factor_heat_flow,
    response_factors,
    sol_air_profile,
    steady_temp,
    transient_temp,
    wall_harmonic_response,
)
from .symbolic import SymbolicFormula, complexity, extract_formula, snap_edge
from .training import (
    Cosine,
    DataSplits,
    ExpDecay,
    TrainConfig,
    TrainHistory,
    adam_step,
    gradients,
    lbfgs_fit,
    minimize_lbfgs,
    train,
)

__version__ = "0.1.0"
