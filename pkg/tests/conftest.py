import itertools
import math
import sys
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA_DIR


def naive_distance(kind, u, v):
    """Textbook formulas over Python floats; independent of the package."""
    u = [float(x) for x in u]
    v = [float(x) for x in v]
    if kind == "chebyshev":
        return max(abs(a - b) for a, b in zip(u, v))
    if kind == "cityblock":
        return sum(abs(a - b) for a, b in zip(u, v))
    if kind == "euclidean":
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))
    if kind == "correlation":
        mu, mv = sum(u) / len(u), sum(v) / len(v)
        u = [a - mu for a in u]
        v = [b - mv for b in v]
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return 1.0 - dot / (nu * nv)


def average_ranks(values):
    """1-based ranks with ties sharing the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def brute_force_wilcoxon(diffs):
    """(W, two-sided p) by listing every sign assignment of the non-zero |differences|."""
    d = [x for x in diffs if x != 0]
    if not d:
        return 0.0, 1.0
    ranks = average_ranks([abs(x) for x in d])
    w_plus = sum(r for r, x in zip(ranks, d) if x > 0)
    w_minus = sum(r for r, x in zip(ranks, d) if x < 0)
    w = min(w_plus, w_minus)
    total = sum(ranks)
    hits = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        s = sum(r for r, bit in zip(ranks, signs) if bit)
        if min(s, total - s) <= w + 1e-9:
            hits += 1
    return w, hits / 2 ** len(d)


def brute_force_knn(train_X, train_y, query, n_neighbors):
    """Sort every training point by (distance, index); majority vote, nearest label breaks ties."""
    dists = sorted(
        (math.sqrt(sum((a - b) ** 2 for a, b in zip(row, query))), i)
        for i, row in enumerate(train_X)
    )
    labels = [train_y[i] for _, i in dists[:n_neighbors]]
    counts = {lab: labels.count(lab) for lab in labels}
    best = max(counts.values())
    return next(lab for lab in labels if counts[lab] == best)


def random_dataset(rng, n, d, n_labels):
    X = rng.uniform(0.05, 1.0, size=(n, d))
    y = np.array([f"c{i % n_labels}" for i in range(n)])
    rng.shuffle(y)
    return X, y


def twin_cells(n_cells=20, d=8, seed=0):
    """Cells each holding a tight label-a twin pair next to a label-b twin pair.

    A test twin is classified correctly by 1-NN only if its twin is in training.
    """
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for _ in range(n_cells):
        base = rng.uniform(0, 10, size=d)
        for label in ("a", "b"):
            centre = base + rng.normal(scale=0.3, size=d)
            for _ in range(2):
                rows.append(centre + rng.normal(scale=0.005, size=d))
                labels.append(label)
    return np.asarray(rows), np.asarray(labels)


def write_csv_rows(path, X, y, header=True):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join([f"f{j}" for j in range(X.shape[1])] + ["class"]) + "\n")
        for row, label in zip(X, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{label}\n")
    return path


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(module.RESULTS):
            terminalreporter.write_line(line)
