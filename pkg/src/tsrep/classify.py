"""Classifier heads trained on embeddings: Random Forest, gradient-trained
linear head, and cosine k-nearest-neighbor.

All heads are deterministic given their seed, independent of thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

# ---------------------------------------------------------------------------
# Random Forest
# ---------------------------------------------------------------------------

FOREST_DEFAULT_TREES = 300


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    label: int = -1  # leaf payload

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def _gini(counts: np.ndarray, total: int) -> float:
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float(np.dot(p, p))


def _majority(counts: np.ndarray) -> int:
    # ties broken by smallest class index (argmax returns the first maximum)
    return int(np.argmax(counts))


def _build_tree(X: np.ndarray, y: np.ndarray, idx: np.ndarray, n_classes: int, n_feat_split: int, rng) -> _TreeNode:
    counts = np.bincount(y[idx], minlength=n_classes)
    node = _TreeNode(label=_majority(counts))
    if np.count_nonzero(counts) <= 1:
        return node
    n = idx.size
    features = rng.choice(X.shape[1], size=n_feat_split, replace=False)
    best = (np.inf, -1, 0.0)
    for f in features:
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        sc = col[order]
        sy = y[idx][order]
        # candidate thresholds: midpoints between distinct consecutive values
        distinct = np.nonzero(sc[1:] > sc[:-1])[0]
        if distinct.size == 0:
            continue
        left_counts = np.zeros(n_classes, dtype=np.int64)
        right_counts = counts.copy()
        pos = 0
        for cut in distinct:
            while pos <= cut:
                left_counts[sy[pos]] += 1
                right_counts[sy[pos]] -= 1
                pos += 1
            nl = pos
            nr = n - pos
            cost = (nl * _gini(left_counts, nl) + nr * _gini(right_counts, nr)) / n
            if cost < best[0] - 1e-15:
                thr = 0.5 * (sc[cut] + sc[cut + 1])
                best = (cost, f, thr)
    if best[1] < 0:
        return node
    _, f, thr = best
    mask = X[idx, f] <= thr
    left_idx = idx[mask]
    right_idx = idx[~mask]
    if left_idx.size == 0 or right_idx.size == 0:
        return node
    node.feature = int(f)
    node.threshold = float(thr)
    node.left = _build_tree(X, y, left_idx, n_classes, n_feat_split, rng)
    node.right = _build_tree(X, y, right_idx, n_classes, n_feat_split, rng)
    return node


def _tree_predict(node: _TreeNode, x: np.ndarray) -> int:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


@dataclass
class TrainedClassifier:
    kind: str
    n_features: int
    n_classes: int
    trees: list = field(default_factory=list, repr=False)
    W: np.ndarray | None = None
    b: np.ndarray | None = None
    feat_mean: np.ndarray | None = None
    feat_std: np.ndarray | None = None
    train_X: np.ndarray | None = None
    train_y: np.ndarray | None = None
    knn_k: int = 1

    def predict(self, X: np.ndarray, n_jobs: int = 1) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"query width {X.shape[1]} != trained width {self.n_features}")
        if self.kind == "forest":
            return _forest_predict(self.trees, X, self.n_classes, n_jobs)
        if self.kind == "linear":
            Z = (X - self.feat_mean) / self.feat_std
            logits = Z @ self.W.T + self.b
            return np.argmax(logits, axis=1)
        if self.kind == "knn":
            return knn_predict(self.train_X, self.train_y, X, k=self.knn_k, n_classes=self.n_classes)
        raise ValueError(f"unknown classifier kind {self.kind!r}")


def _forest_votes(trees, X: np.ndarray, n_classes: int) -> np.ndarray:
    votes = np.zeros((X.shape[0], n_classes), dtype=np.int64)
    for tree in trees:
        for i in range(X.shape[0]):
            votes[i, _tree_predict(tree, X[i])] += 1
    return votes


def _forest_predict(trees, X: np.ndarray, n_classes: int, n_jobs: int) -> np.ndarray:
    if n_jobs <= 1 or len(trees) < 2:
        votes = _forest_votes(trees, X, n_classes)
    else:
        chunks = [trees[i::n_jobs] for i in range(n_jobs)]
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda ts: _forest_votes(ts, X, n_classes), chunks))
        votes = np.sum(parts, axis=0)
    return np.argmax(votes, axis=1)  # tie -> smallest class index


def _tree_seed(seed: int, tree_index: int):
    return np.random.SeedSequence((seed, tree_index))


def train_forest(
    X: np.ndarray, y: np.ndarray, n_trees: int = FOREST_DEFAULT_TREES, seed: int = 0, n_jobs: int = 1
) -> TrainedClassifier:
    """Bagged CART trees: Gini splits, ceil(sqrt(F)) features per split, grown
    to purity, bootstrap of size N. Per-tree seeds depend only on (seed, index)
    so the forest is identical for any worker count."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be N x F with matching labels")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training samples")
    n_classes = int(y.max()) + 1
    if np.unique(y).size < 2:
        raise ValueError("training data contains a single class")
    n, f = X.shape
    n_feat_split = int(math.ceil(math.sqrt(f)))

    def build(tree_index: int) -> _TreeNode:
        rng = np.random.default_rng(_tree_seed(seed, tree_index))
        boot = rng.integers(0, n, size=n)
        return _build_tree(X, y, boot, n_classes, n_feat_split, rng)

    if n_jobs <= 1:
        trees = [build(i) for i in range(n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, range(n_trees)))
    return TrainedClassifier(kind="forest", n_features=f, n_classes=n_classes, trees=trees)


# ---------------------------------------------------------------------------
# Linear head (softmax cross-entropy, AdamW, early stopping)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearTrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 1e-2
    val_fraction: float = 0.2
    patience: int = 100
    max_epochs: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must be in (0, 1)")


def softmax_xent_grad(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray, weight_decay: float = 0.0
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean softmax cross-entropy plus (wd/2)*||W||^2; returns loss, dW, db."""
    n = X.shape[0]
    logits = X @ W.T + b
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    probs = expl / expl.sum(axis=1, keepdims=True)
    loss = -np.mean(np.log(probs[np.arange(n), y] + 1e-300))
    loss += 0.5 * weight_decay * float(np.sum(W * W))
    err = probs
    err[np.arange(n), y] -= 1.0
    err /= n
    dW = err.T @ X + weight_decay * W
    db = err.sum(axis=0)
    return float(loss), dW, db


def _stratified_split(y: np.ndarray, val_fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Seeded validation split, stratified per class where a class has >= 2 samples."""
    val_idx = []
    for cls in np.unique(y):
        members = np.nonzero(y == cls)[0]
        members = members[rng.permutation(members.size)]
        n_val = int(round(members.size * val_fraction))
        if members.size >= 2:
            n_val = min(max(n_val, 1), members.size - 1)
        else:
            n_val = 0
        val_idx.extend(members[:n_val])
    val = np.sort(np.array(val_idx, dtype=np.int64))
    train = np.setdiff1d(np.arange(y.size), val)
    return train, val


def train_linear(X: np.ndarray, y: np.ndarray, config: LinearTrainConfig = LinearTrainConfig()) -> TrainedClassifier:
    """Single linear layer trained full-batch with decoupled weight-decay Adam.

    Features are standardized with training-split statistics (stored in the
    model and re-applied at prediction time). Early stopping monitors the
    validation loss; the best-epoch parameters are returned.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] < 5:
        raise ValueError("need at least 5 samples for a non-empty validation split")
    n_classes = int(y.max()) + 1
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(config.seed)
    tr, va = _stratified_split(y, config.val_fraction, rng)
    if va.size == 0 or tr.size == 0:
        raise ValueError("validation split is empty")

    mean = X[tr].mean(axis=0)
    std = X[tr].std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    Z = (X - mean) / std
    Ztr, ytr = Z[tr], y[tr]
    Zva, yva = Z[va], y[va]

    f = X.shape[1]
    W = rng.standard_normal((n_classes, f)) * 0.01
    b = np.zeros(n_classes)
    mW = np.zeros_like(W)
    vW = np.zeros_like(W)
    mb = np.zeros_like(b)
    vb = np.zeros_like(b)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    lr, wd = config.learning_rate, config.weight_decay

    best = (np.inf, W.copy(), b.copy())
    since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        _, dW, db = softmax_xent_grad(W, b, Ztr, ytr, weight_decay=0.0)
        mW = beta1 * mW + (1 - beta1) * dW
        vW = beta2 * vW + (1 - beta2) * dW * dW
        mb = beta1 * mb + (1 - beta1) * db
        vb = beta2 * vb + (1 - beta2) * db * db
        c1 = 1 - beta1**epoch
        c2 = 1 - beta2**epoch
        W -= lr * ((mW / c1) / (np.sqrt(vW / c2) + eps) + wd * W)
        b -= lr * (mb / c1) / (np.sqrt(vb / c2) + eps)
        val_loss, _, _ = softmax_xent_grad(W, b, Zva, yva, weight_decay=0.0)
        if val_loss < best[0] - 1e-12:
            best = (val_loss, W.copy(), b.copy())
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break
    _, W, b = best
    return TrainedClassifier(
        kind="linear", n_features=f, n_classes=n_classes, W=W, b=b, feat_mean=mean, feat_std=std
    )


# ---------------------------------------------------------------------------
# kNN with cosine distance
# ---------------------------------------------------------------------------

def cosine_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """1 - cos(a, b); zero-norm vectors are at distance 1 from everything except
    other zero-norm vectors (distance 0)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    za = na < 1e-300
    zb = nb < 1e-300
    dots = A @ B.T
    denom = np.outer(np.where(za, 1.0, na), np.where(zb, 1.0, nb))
    dist = 1.0 - dots / denom
    dist[np.ix_(za, ~zb)] = 1.0
    dist[np.ix_(~za, zb)] = 1.0
    dist[np.ix_(za, zb)] = 0.0
    return dist


def knn_predict(
    train_X: np.ndarray,
    train_y: np.ndarray,
    queries: np.ndarray,
    k: int = 1,
    n_classes: int | None = None,
) -> np.ndarray:
    """k nearest under cosine distance; distance ties resolved by lowest training
    index, vote ties by smallest class index."""
    train_X = np.asarray(train_X, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim == 1:
        queries = queries[None, :]
    if k > train_X.shape[0]:
        raise ValueError(f"k={k} exceeds training size {train_X.shape[0]}")
    if n_classes is None:
        n_classes = int(train_y.max()) + 1
    dist = cosine_distances(queries, train_X)
    out = np.empty(queries.shape[0], dtype=np.int64)
    for i in range(queries.shape[0]):
        order = np.argsort(dist[i], kind="stable")[:k]  # stable sort -> lowest index on ties
        counts = np.bincount(train_y[order], minlength=n_classes)
        out[i] = int(np.argmax(counts))
    return out


def train_knn(X: np.ndarray, y: np.ndarray, k: int = 1) -> TrainedClassifier:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    return TrainedClassifier(
        kind="knn",
        n_features=X.shape[1],
        n_classes=int(y.max()) + 1,
        train_X=X.copy(),
        train_y=y.copy(),
        knn_k=k,
    )
