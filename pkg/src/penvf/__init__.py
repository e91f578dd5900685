"""V-fold cross-validation and V-fold penalisation for CART and RBF-kernel SVR."""

from .cart import PruneSequence, RegressionTree, best_split, grow, predict, prune_sequence, select_by_size
from .data import (
    Dataset,
    FoldPartition,
    Realisation,
    Subsample,
    load_csv,
    make_realisations,
    partition_folds,
    standardize,
    subsample,
)
from .errors import (
    ConfigError,
    FoldCountError,
    ParseError,
    PenvfError,
    ResolutionError,
    SelectionError,
    ShapeError,
    SizeError,
)
from .learners import CartLearner, SvrLearner, make_learner
from .metrics import mean_absolute_error, paired_t_test
from .penalty import (
    FoldLosses,
    cv_constant,
    estimate_beta,
    fit_learning_rate,
    fold_losses,
    ideal_penalty,
    pen_vf,
    penalised_criterion,
    vfcv_criterion,
)
from .selection import METHODS, HyperGrid, SelectionResult, SubsampleEvaluation, build_grid, select
from .svr import SvrModel, SvrParams, fit_svr, gram_matrix, predict_svr, rbf_kernel, weight_norm

__version__ = "0.1.0"
