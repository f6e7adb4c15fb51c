"""KNN classifier, per-fold cross-validation and the repeated K-fold experiment."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_features, check_labels, check_positive_int
from .similarity import SimilarityKind, _resolve_threads, pairwise_matrix
from .splitter import SplitConfig, SplitError, expected_fold_sizes, sbss_split, stratified_kfold_split


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class KnnConfig:
    n_neighbors: int = 5

    def __post_init__(self):
        check_positive_int(self.n_neighbors, "n_neighbors")


def vote(neighbor_labels):
    """Majority label among neighbors ordered nearest first.

    A tied vote goes to the tied label that owns the nearest neighbor.
    """
    counts = {}
    for label in neighbor_labels:
        counts[label] = counts.get(label, 0) + 1
    best = max(counts.values())
    for label in neighbor_labels:
        if counts[label] == best:
            return label


def predict_from_distances(distances, train_labels, n_neighbors):
    """Predict one label per row of a (queries x training) distance matrix.

    Neighbors at equal distance are ranked by training index.
    """
    order = np.argsort(distances, axis=1, kind="stable")[:, :n_neighbors]
    neighbor_labels = train_labels[order]
    if n_neighbors == 1:
        return neighbor_labels[:, 0].copy()
    return np.asarray([vote(row.tolist()) for row in neighbor_labels], dtype=train_labels.dtype)


class KNeighborsMajorityClassifier(ClassifierMixin, BaseEstimator):
    """Euclidean k-nearest-neighbors with frozen tie rules.

    Parameters
    ----------
    n_neighbors : int, default=5
    """

    def __init__(self, n_neighbors=5):
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        X = check_features(X)
        y = check_labels(y, X.shape[0])
        k = check_positive_int(self.n_neighbors, "n_neighbors")
        if k > X.shape[0]:
            raise EvaluationError(
                f"n_neighbors={k} exceeds the {X.shape[0]} available training samples"
            )
        self.X_train_ = X.copy()
        self.y_train_ = np.asarray(y).copy()
        self.classes_ = np.unique(self.y_train_)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "X_train_")
        X = check_features(X)
        if X.shape[1] != self.n_features_in_:
            raise EvaluationError(
                f"query has {X.shape[1]} features, model was fitted on {self.n_features_in_}"
            )
        distances = cdist(X, self.X_train_, metric="euclidean")
        return predict_from_distances(distances, self.y_train_, self.n_neighbors)


def knn_fit(train_features, train_labels, cfg=KnnConfig()):
    if len(train_labels) == 0:
        raise EvaluationError("empty training set")
    return KNeighborsMajorityClassifier(cfg.n_neighbors).fit(train_features, train_labels)


def knn_predict(model, query):
    """Label for a single query vector."""
    query = np.asarray(query, dtype=np.float64)
    if query.ndim != 1:
        raise EvaluationError("query must be a single vector")
    return model.predict(query.reshape(1, -1))[0]


def accuracy(predicted, truth):
    """Percentage of positions where ``predicted`` equals ``truth``."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise EvaluationError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise EvaluationError("accuracy of empty sequences is undefined")
    return 100.0 * float(np.count_nonzero(predicted == truth)) / predicted.size


def cross_validate(d, fa, cfg=KnnConfig(), distances=None):
    """Train/test accuracy for every fold of ``fa``.

    ``distances`` is an optional precomputed euclidean matrix over all of
    ``d``; predictions are identical with or without it.

    Returns
    -------
    list of (train_accuracy, test_accuracy)
    """
    if fa.n != d.n:
        raise EvaluationError(f"fold assignment covers {fa.n} samples, dataset has {d.n}")
    empty = [f for f, fold in enumerate(fa.folds) if not fold]
    if empty:
        raise EvaluationError(f"fold {empty[0]} is empty")
    if distances is None:
        distances = pairwise_matrix(SimilarityKind.EUCLIDEAN, d, n_jobs=1).values
    labels = d.labels
    results = []
    for f in range(fa.k):
        train, test = fa.train_test(f)
        if cfg.n_neighbors > train.size:
            raise EvaluationError(
                f"n_neighbors={cfg.n_neighbors} exceeds training partition of fold {f} ({train.size})"
            )
        train_labels = labels[train]
        sub = distances[train]
        pred_train = predict_from_distances(sub[:, train], train_labels, cfg.n_neighbors)
        pred_test = predict_from_distances(distances[np.ix_(test, train)], train_labels, cfg.n_neighbors)
        results.append((accuracy(pred_train, train_labels), accuracy(pred_test, labels[test])))
    return results


@dataclass
class EvaluationReport:
    dataset: str
    strategy: str
    kind: object
    k: int
    repetitions: int
    n_neighbors: int
    seeds: list
    train_acc: np.ndarray  # (repetitions, k)
    test_acc: np.ndarray  # (repetitions, k)
    dataset_fingerprint: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def rep_mean_train(self):
        return self.train_acc.mean(axis=1)

    @property
    def rep_mean_test(self):
        return self.test_acc.mean(axis=1)

    @property
    def mean_train(self):
        return float(np.mean(self.rep_mean_train))

    @property
    def std_train(self):
        return float(np.std(self.rep_mean_train))

    @property
    def mean_test(self):
        return float(np.mean(self.rep_mean_test))

    @property
    def std_test(self):
        """Population std of the per-repetition mean test accuracies."""
        return float(np.std(self.rep_mean_test))

    @property
    def fold_std_test(self):
        """Within-repetition (population) std of fold test accuracies, averaged over repetitions."""
        return float(np.mean(np.std(self.test_acc, axis=1)))

    @property
    def fold_std_train(self):
        return float(np.mean(np.std(self.train_acc, axis=1)))

    def to_json(self):
        doc = {
            "dataset": self.dataset,
            "dataset_fingerprint": self.dataset_fingerprint,
            "model": "knn",
            "strategy": self.strategy,
            "kind": None if self.kind is None else str(self.kind),
            "k": self.k,
            "repetitions": self.repetitions,
            "knn": {"n_neighbors": self.n_neighbors},
            "per_rep": [
                {
                    "seed": seed,
                    "folds": [
                        {"train_acc": float(tr), "test_acc": float(te)}
                        for tr, te in zip(self.train_acc[r], self.test_acc[r])
                    ],
                    "mean_train": float(self.rep_mean_train[r]),
                    "mean_test": float(self.rep_mean_test[r]),
                    "fold_std_test": float(np.std(self.test_acc[r])),
                }
                for r, seed in enumerate(self.seeds)
            ],
            "mean_train": self.mean_train,
            "std_train": self.std_train,
            "mean_test": self.mean_test,
            "std_test": self.std_test,
            "fold_std_train": self.fold_std_train,
            "fold_std_test": self.fold_std_test,
        }
        doc.update(self.extra)
        return doc

    @classmethod
    def from_json(cls, doc):
        try:
            per_rep = doc["per_rep"]
            train = np.asarray([[f["train_acc"] for f in rep["folds"]] for rep in per_rep], dtype=float)
            test = np.asarray([[f["test_acc"] for f in rep["folds"]] for rep in per_rep], dtype=float)
            known = {
                "dataset", "dataset_fingerprint", "model", "strategy", "kind", "k", "repetitions",
                "knn", "per_rep", "mean_train", "std_train", "mean_test", "std_test",
                "fold_std_train", "fold_std_test",
            }
            return cls(
                dataset=doc["dataset"],
                strategy=doc["strategy"],
                kind=doc.get("kind"),
                k=int(doc["k"]),
                repetitions=int(doc["repetitions"]),
                n_neighbors=int(doc["knn"]["n_neighbors"]),
                seeds=[rep["seed"] for rep in per_rep],
                train_acc=train,
                test_acc=test,
                dataset_fingerprint=doc.get("dataset_fingerprint", ""),
                extra={k: v for k, v in doc.items() if k not in known},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise EvaluationError(f"malformed evaluation report: {exc}") from None


def check_knn_feasible(d, k, n_neighbors, strategy):
    """Fail before any distance computation if some training partition is too small."""
    sizes = expected_fold_sizes(d.label_counts().counts, k, strategy)
    smallest_train = d.n - max(sizes)
    if n_neighbors > smallest_train:
        raise EvaluationError(
            f"n_neighbors={n_neighbors} exceeds the smallest training partition ({smallest_train})"
        )


def run_experiment(
    d,
    strategy="sbss",
    kind="correlation",
    k=10,
    repetitions=10,
    base_seed=0,
    knn=KnnConfig(),
    n_jobs=1,
    similarity_matrix=None,
    group_criterion="pivot",
    fingerprint=None,
):
    """Repeat split-and-evaluate with seeds ``base_seed + r``.

    The similarity matrix is computed once and shared by every repetition.
    Aggregates are the mean and population std of the per-repetition means.
    """
    check_positive_int(repetitions, "repetitions")
    if k > d.n:
        raise SplitError(f"k={k} folds requested but the dataset has only {d.n} samples")
    check_knn_feasible(d, k, knn.n_neighbors, strategy)
    seeds = [int(base_seed) + r for r in range(repetitions)]
    configs = [
        SplitConfig(k=k, kind=kind, seed=s, strategy=strategy, group_criterion=group_criterion)
        for s in seeds
    ]
    euclid = pairwise_matrix(SimilarityKind.EUCLIDEAN, d, n_jobs=n_jobs)
    if strategy == "sbss":
        if similarity_matrix is None:
            same = SimilarityKind.parse(kind) is SimilarityKind.EUCLIDEAN
            similarity_matrix = euclid if same else pairwise_matrix(kind, d, n_jobs=n_jobs)
        split = lambda cfg: sbss_split(d, similarity_matrix, cfg)  # noqa: E731
    else:
        split = lambda cfg: stratified_kfold_split(d, cfg)  # noqa: E731

    def one(cfg):
        return cross_validate(d, split(cfg), knn, distances=euclid.values)

    threads = _resolve_threads(n_jobs)
    if threads == 1:
        results = [one(cfg) for cfg in configs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, configs))

    arr = np.asarray(results, dtype=np.float64)  # (repetitions, k, 2)
    return EvaluationReport(
        dataset=d.name,
        strategy=strategy,
        kind=SimilarityKind.parse(kind) if strategy == "sbss" else None,
        k=k,
        repetitions=repetitions,
        n_neighbors=knn.n_neighbors,
        seeds=seeds,
        train_acc=arr[:, :, 0],
        test_acc=arr[:, :, 1],
        dataset_fingerprint=fingerprint or d.fingerprint(),
    )


def evaluate_assignments(d, assignments, knn=KnnConfig(), fingerprint=None):
    """Report over externally supplied fold assignments, one per repetition."""
    if not assignments:
        raise EvaluationError("no fold assignments given")
    ks = {fa.k for fa in assignments}
    if len(ks) != 1:
        raise EvaluationError(f"fold assignments disagree on k: {sorted(ks)}")
    euclid = pairwise_matrix(SimilarityKind.EUCLIDEAN, d, n_jobs=1).values
    arr = np.asarray([cross_validate(d, fa, knn, distances=euclid) for fa in assignments])
    first = assignments[0]
    return EvaluationReport(
        dataset=d.name,
        strategy=first.strategy,
        kind=first.kind,
        k=first.k,
        repetitions=len(assignments),
        n_neighbors=knn.n_neighbors,
        seeds=[fa.seed for fa in assignments],
        train_acc=arr[:, :, 0],
        test_acc=arr[:, :, 1],
        dataset_fingerprint=fingerprint or d.fingerprint(),
    )
