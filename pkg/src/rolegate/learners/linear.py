"""Linear classifiers and k-nearest neighbours on sparse rows."""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .base import Model, as_csr


def _targets(codes: np.ndarray, n_classes: int, neg: float) -> np.ndarray:
    """One column per class (one-vs-rest); binary problems use a single column for class 1."""
    cols = [1] if n_classes == 2 else range(n_classes)
    return np.stack([np.where(codes == c, 1.0, neg) for c in cols], axis=1)


def _decide(scores: np.ndarray) -> np.ndarray:
    # Binary: strictly positive score -> class 1, so a zero score picks class 0.
    if scores.shape[1] == 1:
        return (scores[:, 0] > 0).astype(np.int64)
    return np.argmax(scores, axis=1)


class Logistic(Model):
    """L2-regularised logistic regression (one-vs-rest) fitted by batch gradient descent.

    Minimises mean log-loss + lam / (2n) * ||w||^2 with step ``step / sqrt(t)``;
    the intercept is not penalised.
    """

    family = "logistic"
    defaults = {"lam": 1.0, "n_iter": 500, "step": 0.1}

    def _fit(self, X, codes):
        X = as_csr(X)
        n, d = X.shape
        Y = _targets(codes, self.n_classes, 0.0)
        W = np.zeros((d, Y.shape[1]))
        b = np.zeros(Y.shape[1])
        lam = float(self.params["lam"])
        XT = X.T.tocsr()
        for t in range(1, int(self.params["n_iter"]) + 1):
            Z = X @ W + b
            P = 0.5 * (1.0 + np.tanh(0.5 * Z))  # numerically stable sigmoid
            G = P - Y
            eta = float(self.params["step"]) / np.sqrt(t)
            W -= eta * ((XT @ G) / n + lam / n * W)
            b -= eta * G.mean(axis=0)
        self.W, self.b = W, b

    def decision_function(self, X) -> np.ndarray:
        return as_csr(X) @ self.W + self.b

    def _predict(self, X):
        return _decide(self.decision_function(X))

    def state(self):
        return {"W": self.W, "b": self.b}

    def load_state(self, arrays):
        self.W, self.b = arrays["W"], arrays["b"]


class Ridge(Model):
    """Least squares on +/-1 targets with an L2 penalty and unpenalised intercept.

    Solved in closed form, in the primal when n > d and the dual otherwise;
    centering is folded into the Gram matrices so X is never densified.
    """

    family = "ridge"
    defaults = {"lam": 1.0}

    def _fit(self, X, codes):
        X = as_csr(X)
        n, d = X.shape
        lam = float(self.params["lam"])
        Y = _targets(codes, self.n_classes, -1.0)
        y_mean = Y.mean(axis=0)
        Yc = Y - y_mean
        mu = np.asarray(X.mean(axis=0)).ravel()
        if n > d:
            A = (X.T @ X).toarray() - n * np.outer(mu, mu) + lam * np.eye(d)
            W = scipy.linalg.solve(A, X.T @ Yc, assume_a="pos")
        else:
            Xmu = X @ mu
            K = (X @ X.T).toarray() - Xmu[:, None] - Xmu[None, :] + mu @ mu + lam * np.eye(n)
            alpha = scipy.linalg.solve(K, Yc, assume_a="pos")
            W = X.T @ alpha - np.outer(mu, alpha.sum(axis=0))
        self.W = np.asarray(W)
        self.b = y_mean - mu @ self.W

    def decision_function(self, X) -> np.ndarray:
        return as_csr(X) @ self.W + self.b

    def _predict(self, X):
        return _decide(self.decision_function(X))

    def state(self):
        return {"W": self.W, "b": self.b}

    def load_state(self, arrays):
        self.W, self.b = arrays["W"], arrays["b"]


class KNN(Model):
    """Majority vote of the k nearest training rows under Euclidean distance.

    Equal distances are broken by lower training row index. A tied vote goes
    to the class with the smaller summed neighbour distance, then the lower
    class code.
    """

    family = "knn"
    defaults = {"k": 5}

    def _fit(self, X, codes):
        self.X = as_csr(X)
        self.codes = codes
        self.sq_norms = np.asarray(self.X.multiply(self.X).sum(axis=1)).ravel()

    def distances(self, X) -> np.ndarray:
        Q = as_csr(X)
        q = np.asarray(Q.multiply(Q).sum(axis=1)).ravel()
        D2 = q[:, None] + self.sq_norms[None, :] - 2.0 * (Q @ self.X.T).toarray()
        return np.sqrt(np.maximum(D2, 0.0))

    def _predict(self, X):
        D = self.distances(X)
        n_train = D.shape[1]
        k = min(int(self.params["k"]), n_train)
        ids = np.arange(n_train)
        out = np.empty(D.shape[0], dtype=np.int64)
        for i, row in enumerate(D):
            nn = np.lexsort((ids, row))[:k]
            votes = np.bincount(self.codes[nn], minlength=self.n_classes)
            tied = np.flatnonzero(votes == votes.max())
            if len(tied) > 1:
                dist = np.array([row[nn][self.codes[nn] == c].sum() for c in tied])
                tied = tied[dist == dist.min()]
            out[i] = tied[0]
        return out

    def state(self):
        X = self.X
        return {"data": X.data, "indices": X.indices, "indptr": X.indptr,
                "shape": np.array(X.shape), "codes": self.codes}

    def load_state(self, arrays):
        self.X = sp.csr_matrix((arrays["data"], arrays["indices"], arrays["indptr"]),
                               shape=tuple(arrays["shape"]))
        self.codes = arrays["codes"]
        self.sq_norms = np.asarray(self.X.multiply(self.X).sum(axis=1)).ravel()
