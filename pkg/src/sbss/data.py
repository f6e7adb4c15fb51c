"""Tabular classification datasets: CSV ingestion, min-max scaling and the
class imbalance measure."""

import csv
import hashlib
import math
import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_features


class DataError(ValueError):
    """Raised for unreadable, malformed or inconsistent input data."""


def canonical_labels(labels):
    """Distinct labels in the order every deterministic loop uses (lexicographic)."""
    return sorted({str(label) for label in labels})


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus one categorical label per row.

    Arrays are stored read-only; build a new ``Dataset`` instead of mutating.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    feature_names: tuple = ()
    label_name: str = "label"

    def __post_init__(self):
        try:
            features = check_features(self.features, name="features")
        except ValueError as exc:
            raise DataError(str(exc)) from None
        labels = np.asarray([str(label) for label in np.asarray(self.labels).ravel()], dtype=str)
        if labels.shape[0] != features.shape[0]:
            raise DataError(
                f"features have {features.shape[0]} rows but there are {labels.shape[0]} labels"
            )
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise DataError(f"expected {features.shape[1]} feature names, got {len(names)}")
        features = features.copy()
        features.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def label_set(self):
        return canonical_labels(self.labels)

    def label_counts(self):
        return LabelCounts.from_labels(self.labels)

    def fingerprint(self):
        """SHA-256 over the feature bytes and labels; stable across runs."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features, dtype="<f8").tobytes())
        h.update("\x1f".join(self.labels.tolist()).encode("utf-8"))
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.feature_names == other.feature_names
            and self.label_name == other.label_name
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


@dataclass(frozen=True)
class LabelCounts:
    """Per-label sample counts, in canonical label order."""

    labels: tuple
    counts: tuple = field(default=())

    def __post_init__(self):
        if len(self.labels) != len(self.counts):
            raise DataError("labels and counts differ in length")
        if not self.counts:
            raise DataError("at least one label is required")
        if any(int(c) < 1 for c in self.counts):
            raise DataError("every label count must be a positive integer")

    @classmethod
    def from_labels(cls, labels):
        counter = Counter(str(label) for label in labels)
        order = canonical_labels(counter)
        return cls(tuple(order), tuple(counter[label] for label in order))

    @classmethod
    def from_counts(cls, counts):
        return cls(tuple(str(i) for i in range(len(counts))), tuple(int(c) for c in counts))

    @property
    def n(self):
        return sum(self.counts)

    @property
    def k_labels(self):
        return len(self.counts)

    def as_dict(self):
        return dict(zip(self.labels, self.counts))


def load_csv(path, label_column=-1, has_header=True, name=None):
    """Read a numeric classification table.

    Parameters
    ----------
    path : str or path-like
        Comma separated UTF-8 file.
    label_column : str or int
        Header name, or zero-based column index (negative counts from the end).
        A string of digits is treated as an index unless it matches a header name.
    has_header : bool
        Whether the first row holds column names.
    name : str, optional
        Dataset tag for reports; defaults to the file stem.

    Returns
    -------
    Dataset
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None

    header = None
    if has_header:
        if not rows:
            raise DataError(f"{path}: empty file")
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")

    width = len(header) if header is not None else len(rows[0])
    label_idx = _resolve_column(label_column, header, width)
    if width < 2:
        raise DataError(f"{path}: need at least one feature column besides the label")

    features, labels = [], []
    first_line = 2 if has_header else 1
    for r, row in enumerate(rows):
        line = first_line + r
        if len(row) != width:
            raise DataError(f"{path}: row {line} has {len(row)} columns, expected {width}")
        values = []
        for c, cell in enumerate(row):
            if c == label_idx:
                continue
            text = cell.strip()
            try:
                value = float(text)
            except ValueError:
                col = header[c] if header else str(c)
                raise DataError(
                    f"{path}: row {line}, column {c} ({col}): cannot parse {cell!r} as a number"
                ) from None
            if not math.isfinite(value):
                col = header[c] if header else str(c)
                raise DataError(f"{path}: row {line}, column {c} ({col}): non-finite value {cell!r}")
            values.append(value)
        features.append(values)
        labels.append(row[label_idx].strip())

    if header is not None:
        feature_names = tuple(h for c, h in enumerate(header) if c != label_idx)
        label_name = header[label_idx]
    else:
        feature_names = tuple(f"x{c}" for c in range(width) if c != label_idx)
        label_name = f"x{label_idx}"
    if name is None:
        name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return Dataset(
        np.asarray(features, dtype=np.float64),
        np.asarray(labels, dtype=str),
        name=name,
        feature_names=feature_names,
        label_name=label_name,
    )


def _resolve_column(label_column, header, width):
    if isinstance(label_column, str):
        if header is not None and label_column in header:
            return header.index(label_column)
        try:
            label_column = int(label_column)
        except ValueError:
            raise DataError(f"label column {label_column!r} not found in header") from None
    idx = int(label_column)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise DataError(f"label column index {label_column} out of range for {width} columns")
    return idx


def write_csv(dataset, path):
    """Write ``dataset`` with a header row; floats use ``repr`` so reads are exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*dataset.feature_names, dataset.label_name])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [label])


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Scale each column affinely onto [0, 1] using the fitted min and max.

    Constant columns map to 0.
    """

    def fit(self, X, y=None):
        X = check_features(X)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_features(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        span = self.data_max_ - self.data_min_
        constant = span == 0
        out = (X - self.data_min_) / np.where(constant, 1.0, span)
        out[:, constant] = 0.0
        return out


def normalize_minmax(dataset):
    """Return a copy of ``dataset`` with every feature column min-max scaled."""
    scaled = MinMaxNormalizer().fit_transform(dataset.features)
    return Dataset(
        scaled,
        dataset.labels,
        name=dataset.name,
        feature_names=dataset.feature_names,
        label_name=dataset.label_name,
    )


def imbalance(counts):
    """One minus the normalized Shannon entropy of the class proportions.

    0 for perfectly balanced classes, approaching 1 as one class dominates.

    Parameters
    ----------
    counts : LabelCounts or sequence of int

    Raises
    ------
    DataError
        With fewer than two labels, where the measure is undefined.
    """
    if not isinstance(counts, LabelCounts):
        counts = LabelCounts.from_counts(counts)
    if counts.k_labels < 2:
        raise DataError("imbalance undefined for a single label")
    n = counts.n
    if len(set(counts.counts)) == 1:
        return 0.0
    entropy = -math.fsum((c / n) * math.log(c / n) for c in counts.counts)
    return min(1.0, max(0.0, 1.0 - entropy / math.log(counts.k_labels)))


def dataset_summary(dataset):
    """JSON-ready summary: name, shape, per-label counts and imbalance."""
    counts = dataset.label_counts()
    return {
        "name": dataset.name,
        "n": dataset.n,
        "d": dataset.d,
        "labels": [{"label": lab, "count": c} for lab, c in zip(counts.labels, counts.counts)],
        "imbalance": imbalance(counts),
    }
