"""Similarity-based stratified K-fold splitting with a KNN evaluation harness."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    DataError,
    Dataset,
    LabelCounts,
    MinMaxNormalizer,
    dataset_summary,
    imbalance,
    load_csv,
    normalize_minmax,
    write_csv,
)
from .evaluation import (  # noqa: E402
    EvaluationReport,
    KNeighborsMajorityClassifier,
    KnnConfig,
    accuracy,
    cross_validate,
    knn_fit,
    knn_predict,
    run_experiment,
)
from .similarity import DistanceMatrix, SimilarityError, SimilarityKind, distance, pairwise_matrix  # noqa: E402
from .splitter import (  # noqa: E402
    FoldAssignment,
    SeededStratifiedKFold,
    SimilarityGroup,
    SimilarityStratifiedKFold,
    SplitConfig,
    SplitError,
    sbss_split,
    select_group,
    select_pivot,
    stratified_kfold_split,
)
from .stats import ComparisonVerdict, PairedSeries, score_comparisons, wilcoxon_signed_rank  # noqa: E402
