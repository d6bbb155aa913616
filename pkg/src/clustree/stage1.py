"""Group-membership classifiers whose class probabilities become ensemble weights."""

from __future__ import annotations

import warnings

import numpy as np

from .data import Dataset

LOGISTIC = "logistic"
NAIVE_BAYES = "nb"
KINDS = (LOGISTIC, NAIVE_BAYES)

PENALTY = 1.0
GRAD_TOL = 1e-6
MAX_ITER = 1000
LINE_SEARCH_MEMORY = 10
NB_VAR_SMOOTHING = 1e-9


class ClassifierError(ValueError):
    pass


def _normalize_kind(kind: str) -> str:
    aliases = {
        "logistic": LOGISTIC, "multinomial-logistic": LOGISTIC, "lr": LOGISTIC,
        "nb": NAIVE_BAYES, "naive-bayes": NAIVE_BAYES, "gaussian-naive-bayes": NAIVE_BAYES,
    }
    try:
        return aliases[kind]
    except KeyError:
        raise ClassifierError(f"unknown classifier kind {kind!r}; expected one of {KINDS}") from None


def softmax(scores):
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(scores):
    z = scores - scores.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


class GroupClassifier:
    kind: str
    class_labels: list

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return softmax(self._scores(X))

    def predict(self, X) -> np.ndarray:
        return np.asarray(self.class_labels, dtype=object)[np.argmax(self.predict_proba(X), axis=1)]


# ---------------------------------------------------------------------------
# multinomial logistic regression
# ---------------------------------------------------------------------------

def penalized_loss(W, D, Y, lam=PENALTY):
    """Summed multinomial cross-entropy plus ``lam/2`` times squared slopes.

    ``D`` is the design matrix with a leading column of ones, ``Y`` the
    one-hot class matrix and ``W`` the (J x (p+1)) coefficient matrix whose
    first column holds the intercepts (unpenalized).
    """
    logp = _log_softmax(D @ W.T)
    return -np.sum(logp * Y) + 0.5 * lam * np.sum(W[:, 1:] ** 2)


def penalized_loss_grad(W, D, Y, lam=PENALTY):
    return _grad_from_probs(softmax(D @ W.T), W, D, Y, lam)


def _grad_from_probs(P, W, D, Y, lam):
    G = (P - Y).T @ D
    G[:, 1:] += lam * W[:, 1:]
    return G


def _loss_and_probs(W, D, Y, lam):
    z = D @ W.T
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    tot = e.sum(axis=1, keepdims=True)
    loss = -np.sum((z - np.log(tot)) * Y) + 0.5 * lam * np.sum(W[:, 1:] ** 2)
    return loss, e / tot


def fit_logistic_weights(D, Y, lam=PENALTY, tol=GRAD_TOL, max_iter=MAX_ITER, memory=LINE_SEARCH_MEMORY):
    """Full-batch gradient descent with Armijo backtracking.

    Each line search starts from the Barzilai-Borwein step of the previous
    iterate pair and halves until the loss falls sufficiently below the
    largest of the last ``memory`` losses (``memory=1`` is plain Armijo).
    Returns ``(W, n_iter, converged)``.
    """
    J, q = Y.shape[1], D.shape[1]
    W = np.zeros((J, q))
    loss, P = _loss_and_probs(W, D, Y, lam)
    G = _grad_from_probs(P, W, D, Y, lam)
    step = 1.0 / (0.5 * np.sum(D * D) + lam)
    recent = [loss]
    for it in range(max_iter):
        if np.max(np.abs(G)) < tol:
            return W, it, True
        g2 = np.sum(G * G)
        ref = max(recent[-memory:])
        while True:
            W_new = W - step * G
            loss_new, P = _loss_and_probs(W_new, D, Y, lam)
            if loss_new <= ref - 1e-4 * step * g2 or step < 1e-20:
                break
            step *= 0.5
        G_new = _grad_from_probs(P, W_new, D, Y, lam)
        s, r = W_new - W, G_new - G
        sr = np.sum(s * r)
        step = np.sum(s * s) / sr if sr > 0 else 2.0 * step
        W, loss, G = W_new, loss_new, G_new
        recent.append(loss)
    return W, max_iter, bool(np.max(np.abs(G)) < tol)


class LogisticGroupClassifier(GroupClassifier):
    kind = LOGISTIC

    def __init__(self, class_labels, coef, mean, scale, dropped=(), n_iter=0, converged=True):
        self.class_labels = list(class_labels)
        self.coef = np.asarray(coef, dtype=float)
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)
        self.dropped = [int(j) for j in dropped]
        self.n_iter = n_iter
        self.converged = converged

    @property
    def n_features(self):
        return len(self.mean)

    def design(self, X):
        Z = (X - self.mean) / self.scale
        return np.column_stack([np.ones(len(Z)), Z])

    def _scores(self, X):
        return self.design(X) @ self.coef.T

    @classmethod
    def fit(cls, X, labels, class_labels, lam=PENALTY):
        idx = {g: j for j, g in enumerate(class_labels)}
        Y = np.zeros((len(labels), len(class_labels)))
        Y[np.arange(len(labels)), [idx[g] for g in labels]] = 1.0
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        dropped = np.flatnonzero(scale <= 1e-12 * np.maximum(1.0, np.abs(mean)))
        if len(dropped):
            warnings.warn(f"dropping zero-variance features {dropped.tolist()} from the logistic stage")
        mean[dropped] = 0.0
        scale[dropped] = 1.0
        keep = np.setdiff1d(np.arange(X.shape[1]), dropped)
        D = np.column_stack([np.ones(len(X)), ((X - mean) / scale)[:, keep]])
        Wk, n_iter, converged = fit_logistic_weights(D, Y, lam)
        coef = np.zeros((len(class_labels), X.shape[1] + 1))
        coef[:, 0] = Wk[:, 0]
        coef[:, 1 + keep] = Wk[:, 1:]
        return cls(class_labels, coef, mean, scale, dropped, n_iter, converged)

    def serialize(self):
        return {
            "kind": self.kind,
            "class_labels": self.class_labels,
            "coef": self.coef.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "dropped": self.dropped,
            "n_iter": self.n_iter,
            "converged": self.converged,
        }


# ---------------------------------------------------------------------------
# gaussian naive bayes
# ---------------------------------------------------------------------------

class NaiveBayesGroupClassifier(GroupClassifier):
    kind = NAIVE_BAYES

    def __init__(self, class_labels, means, variances, priors):
        self.class_labels = list(class_labels)
        self.means = np.asarray(means, dtype=float)
        self.variances = np.asarray(variances, dtype=float)
        self.priors = np.asarray(priors, dtype=float)

    @property
    def n_features(self):
        return self.means.shape[1]

    def _scores(self, X):
        v = self.variances
        log_norm = -0.5 * np.sum(np.log(2 * np.pi * v), axis=1)
        quad = ((X[:, None, :] - self.means[None]) ** 2 / v[None]).sum(axis=2)
        return np.log(self.priors) + log_norm - 0.5 * quad

    @classmethod
    def fit(cls, X, labels, class_labels):
        labels = np.asarray(labels, dtype=object)
        max_var = float(np.max(X.var(axis=0)))
        eps = NB_VAR_SMOOTHING * (max_var if max_var > 0 else 1.0)
        means, variances, priors = [], [], []
        for g in class_labels:
            Xg = X[labels == g]
            means.append(Xg.mean(axis=0))
            variances.append(Xg.var(axis=0) + eps)
            priors.append(len(Xg) / len(X))
        return cls(class_labels, means, variances, priors)

    def serialize(self):
        return {
            "kind": self.kind,
            "class_labels": self.class_labels,
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "priors": self.priors.tolist(),
        }


def deserialize_classifier(doc: dict) -> GroupClassifier:
    kind = _normalize_kind(doc["kind"])
    if kind == LOGISTIC:
        return LogisticGroupClassifier(
            doc["class_labels"], doc["coef"], doc["mean"], doc["scale"],
            doc.get("dropped", ()), doc.get("n_iter", 0), doc.get("converged", True),
        )
    return NaiveBayesGroupClassifier(doc["class_labels"], doc["means"], doc["variances"], doc["priors"])


def fit_classifier(data: Dataset, kind: str = LOGISTIC) -> GroupClassifier:
    """Fit a classifier mapping feature rows to their training group."""
    kind = _normalize_kind(kind)
    labels = data.group_labels()
    if len(labels) < 2:
        raise ClassifierError(f"need at least 2 groups to fit a classifier, got {len(labels)}")
    if kind == LOGISTIC:
        return LogisticGroupClassifier.fit(data.X, data.groups, labels)
    return NaiveBayesGroupClassifier.fit(data.X, data.groups, labels)


def predict_weights(clf: GroupClassifier, x) -> np.ndarray:
    """Similarity weights of one feature vector over the training groups."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict_weights expects a single feature vector")
    return clf.predict_proba(x)[0]


def group_averaged_weights(clf: GroupClassifier, rows) -> np.ndarray:
    """Mean of the per-row weight vectors of one test group."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[0] == 0:
        raise ValueError("cannot average weights over an empty group")
    return clf.predict_proba(rows).mean(axis=0)
