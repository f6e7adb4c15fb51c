"""Fold assignment: similarity-based stratified K-fold and the ordinary
stratified K-fold baseline.

Both strategies draw all randomness from one :class:`~sbss._random.Xoshiro256`
seeded per split. Consumption order: labels in canonical (lexicographic)
order; within a label, groups in extraction order (similarity strategy) or the
label's index list (baseline); one Fisher-Yates shuffle per group/list.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import BaseCrossValidator

from ._random import Xoshiro256
from ._validation import check_features, check_labels, check_positive_int
from .data import Dataset, canonical_labels
from .similarity import DistanceMatrix, SimilarityKind, pairwise_matrix

STRATEGIES = ("sbss", "stratified")
GROUP_CRITERIA = ("pivot", "picked-set")


class SplitError(ValueError):
    """The requested fold layout is impossible for the data."""


@dataclass(frozen=True)
class SplitConfig:
    k: int = 10
    kind: SimilarityKind = SimilarityKind.CORRELATION
    seed: int = 0
    strategy: str = "sbss"
    group_criterion: str = "pivot"

    def __post_init__(self):
        check_positive_int(self.k, "k", minimum=2)
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.group_criterion not in GROUP_CRITERIA:
            raise ValueError(f"group_criterion must be one of {GROUP_CRITERIA}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "kind", SimilarityKind.parse(self.kind))


@dataclass(frozen=True)
class SimilarityGroup:
    label: str
    members: tuple
    pivot: int


@dataclass(frozen=True)
class FoldAssignment:
    """``folds[f]`` lists the sample indices of fold ``f`` in insertion order."""

    folds: tuple
    fold_of: np.ndarray = field(compare=False, repr=False)
    strategy: str = "sbss"
    kind: object = None
    seed: int = 0
    groups: tuple = field(default=(), compare=False, repr=False)

    @classmethod
    def from_folds(cls, folds, n=None, **provenance):
        folds = tuple(tuple(int(i) for i in fold) for fold in folds)
        flat = [i for fold in folds for i in fold]
        if n is None:
            n = len(flat)
        fold_of = np.full(n, -1, dtype=np.int64)
        for f, fold in enumerate(folds):
            for i in fold:
                if not 0 <= i < n:
                    raise SplitError(f"sample index {i} out of range for {n} samples")
                if fold_of[i] != -1:
                    raise SplitError(f"sample {i} appears in more than one fold")
                fold_of[i] = f
        missing = np.flatnonzero(fold_of == -1)
        if missing.size:
            raise SplitError(f"samples not assigned to any fold: {missing[:10].tolist()}")
        fold_of.flags.writeable = False
        return cls(folds=folds, fold_of=fold_of, **provenance)

    @property
    def k(self):
        return len(self.folds)

    @property
    def n(self):
        return self.fold_of.shape[0]

    def train_test(self, f):
        test = np.asarray(sorted(self.folds[f]), dtype=np.int64)
        train = np.flatnonzero(self.fold_of != f)
        return train, test

    def to_json(self, dataset_name, extra=None):
        doc = {
            "dataset": dataset_name,
            "strategy": self.strategy,
            "kind": None if self.kind is None else str(self.kind),
            "k": self.k,
            "seed": self.seed,
            "folds": [list(fold) for fold in self.folds],
        }
        if extra:
            doc.update(extra)
        return doc


def load_fold_file(path, n=None):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in ("strategy", "k", "seed", "folds"):
        if key not in doc:
            raise SplitError(f"{path}: fold file missing field {key!r}")
    if len(doc["folds"]) != doc["k"]:
        raise SplitError(f"{path}: k={doc['k']} but {len(doc['folds'])} folds listed")
    fa = FoldAssignment.from_folds(
        doc["folds"], n=n, strategy=doc["strategy"], kind=doc.get("kind"), seed=doc["seed"]
    )
    return fa, doc


def select_pivot(m, candidates):
    """Candidate with the smallest summed distance to the other candidates.

    Ties go to the lowest sample index.
    """
    values = m.values if isinstance(m, DistanceMatrix) else np.asarray(m)
    cand = np.asarray(sorted(int(c) for c in candidates), dtype=np.int64)
    if cand.size == 0:
        raise SplitError("cannot select a pivot from an empty candidate set")
    if cand.size == 1:
        return int(cand[0])
    # the diagonal is zero, so including j == i does not change the sum
    sums = values[np.ix_(cand, cand)].sum(axis=1)
    return int(cand[int(np.argmin(sums))])


def select_group(m, pivot, candidates, group_size, criterion="pivot"):
    """The pivot plus its ``group_size - 1`` nearest candidates.

    With ``criterion="picked-set"`` each further member instead minimizes the
    summed distance to everything picked so far.
    """
    values = m.values if isinstance(m, DistanceMatrix) else np.asarray(m)
    cand = np.asarray(sorted(int(c) for c in candidates), dtype=np.int64)
    pivot = int(pivot)
    if pivot not in set(cand.tolist()):
        raise SplitError(f"pivot {pivot} is not among the candidates")
    if not 1 <= group_size <= cand.size:
        raise SplitError(f"group size {group_size} outside [1, {cand.size}]")
    others = cand[cand != pivot]
    need = group_size - 1
    if criterion == "pivot":
        order = np.argsort(values[pivot, others], kind="stable")
        return (pivot, *(int(i) for i in others[order[:need]]))

    picked = [pivot]
    remaining = others
    score = values[pivot, remaining].copy()
    for _ in range(need):
        j = int(np.argmin(score))
        picked.append(int(remaining[j]))
        keep = np.arange(remaining.size) != j
        remaining, score = remaining[keep], score[keep]
        score = score + values[picked[-1], remaining]
    return tuple(picked)


def similarity_groups(labels, m, k, criterion="pivot"):
    """Partition every label's samples into similarity groups of size <= k.

    Depends only on the labels and the distance matrix, never on a seed.
    """
    labels = np.asarray([str(y) for y in labels])
    groups = []
    for label in canonical_labels(labels):
        pool = np.flatnonzero(labels == label)
        while pool.size:
            size = min(k, pool.size)
            pivot = select_pivot(m, pool)
            members = select_group(m, pivot, pool, size, criterion=criterion)
            groups.append(SimilarityGroup(label, members, pivot))
            pool = np.setdiff1d(pool, members, assume_unique=True)
    return groups


def _check_k(k, n):
    check_positive_int(k, "k", minimum=2)
    if k > n:
        raise SplitError(f"k={k} folds requested but the dataset has only {n} samples")


def sbss_split(d, m, cfg):
    """Similarity-based stratified K-fold assignment.

    For each label, groups of ``k`` mutually similar samples are extracted
    around a pivot, shuffled, and dealt one per fold. A final short group goes
    to the folds currently holding the fewest samples of that label.
    """
    labels = d.labels if isinstance(d, Dataset) else np.asarray([str(y) for y in d])
    n = labels.shape[0]
    _check_k(cfg.k, n)
    if m.n != n:
        raise SplitError(f"distance matrix is {m.n}x{m.n} but the dataset has {n} samples")

    rng = Xoshiro256(cfg.seed)
    folds = [[] for _ in range(cfg.k)]
    groups = similarity_groups(labels, m, cfg.k, criterion=cfg.group_criterion)
    per_label = {}
    for group in groups:
        counts = per_label.setdefault(group.label, [0] * cfg.k)
        members = rng.shuffle(list(group.members))
        if len(members) == cfg.k:
            targets = range(cfg.k)
        else:
            targets = sorted(range(cfg.k), key=lambda f: (counts[f], f))[: len(members)]
        for sample, f in zip(members, targets):
            folds[f].append(sample)
            counts[f] += 1
    return FoldAssignment.from_folds(
        folds, n=n, strategy="sbss", kind=m.kind, seed=int(cfg.seed), groups=tuple(groups)
    )


def stratified_kfold_split(d, cfg):
    """Baseline: shuffle each label's indices, then deal them round-robin.

    The dealing position carries over from one label to the next so that
    fold sizes stay as even as possible.
    """
    labels = d.labels if isinstance(d, Dataset) else np.asarray([str(y) for y in d])
    n = labels.shape[0]
    _check_k(cfg.k, n)
    rng = Xoshiro256(cfg.seed)
    folds = [[] for _ in range(cfg.k)]
    position = 0
    for label in canonical_labels(labels):
        members = rng.shuffle(np.flatnonzero(labels == label).tolist())
        for sample in members:
            folds[position].append(sample)
            position = (position + 1) % cfg.k
    return FoldAssignment.from_folds(folds, n=n, strategy="stratified", kind=None, seed=int(cfg.seed))


def expected_fold_sizes(label_counts, k, strategy):
    """Fold sizes either strategy will produce; they never depend on the seed."""
    sizes = [0] * k
    if strategy == "stratified":
        position = 0
        for c in label_counts:
            for _ in range(c):
                sizes[position] += 1
                position = (position + 1) % k
        return sizes
    for c in label_counts:
        full, rest = divmod(c, k)
        for f in range(k):
            sizes[f] += full + (1 if f < rest else 0)
    return sizes


def split_dataset(d, cfg, m=None):
    """Dispatch on ``cfg.strategy``; computes the distance matrix if needed."""
    if cfg.strategy == "stratified":
        return stratified_kfold_split(d, cfg)
    if m is None:
        _check_k(cfg.k, d.n)
        m = pairwise_matrix(cfg.kind, d)
    return sbss_split(d, m, cfg)


class SimilarityStratifiedKFold(BaseCrossValidator):
    """Cross-validator placing mutually similar same-label samples in different folds.

    Parameters
    ----------
    n_splits : int, default=10
    similarity : str, default="correlation"
        One of chebyshev, cityblock, euclidean, cosine, correlation.
    random_state : int, default=0
        Unsigned 64-bit seed for the within-group shuffle.
    group_criterion : {"pivot", "picked-set"}, default="pivot"

    Notes
    -----
    ``X`` should already be normalized; the distance matrix is computed on
    ``X`` as given.
    """

    def __init__(self, n_splits=10, similarity="correlation", random_state=0, group_criterion="pivot"):
        self.n_splits = n_splits
        self.similarity = similarity
        self.random_state = random_state
        self.group_criterion = group_criterion

    def get_n_splits(self, X=None, y=None, groups=None):
        return self.n_splits

    def assign(self, X, y, distances=None):
        """Return the :class:`FoldAssignment` behind :meth:`split`."""
        X = check_features(X)
        y = check_labels(y, X.shape[0])
        cfg = SplitConfig(
            k=self.n_splits,
            kind=self.similarity,
            seed=self.random_state,
            strategy="sbss",
            group_criterion=self.group_criterion,
        )
        _check_k(cfg.k, X.shape[0])
        if distances is None:
            distances = pairwise_matrix(cfg.kind, X)
        return sbss_split(np.asarray([str(v) for v in y]), distances, cfg)

    def split(self, X, y, groups=None):
        fa = self.assign(X, y)
        for f in range(fa.k):
            yield fa.train_test(f)

    def _iter_test_indices(self, X=None, y=None, groups=None):
        fa = self.assign(X, y)
        for f in range(fa.k):
            yield fa.train_test(f)[1]


class SeededStratifiedKFold(BaseCrossValidator):
    """Stratified K-fold driven by the same frozen generator as the SBSS splitter."""

    def __init__(self, n_splits=10, random_state=0):
        self.n_splits = n_splits
        self.random_state = random_state

    def get_n_splits(self, X=None, y=None, groups=None):
        return self.n_splits

    def assign(self, X, y):
        y = check_labels(y, len(y))
        cfg = SplitConfig(k=self.n_splits, seed=self.random_state, strategy="stratified")
        return stratified_kfold_split(np.asarray([str(v) for v in y]), cfg)

    def split(self, X, y, groups=None):
        fa = self.assign(X, y)
        for f in range(fa.k):
            yield fa.train_test(f)

    def _iter_test_indices(self, X=None, y=None, groups=None):
        fa = self.assign(X, y)
        for f in range(fa.k):
            yield fa.train_test(f)[1]
