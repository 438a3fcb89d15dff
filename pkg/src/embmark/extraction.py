"""Model extraction: regress stealer-side text features onto provided embeddings.

The stealer never sees the victim's internals. It featurizes queries
with its own hashed bag-of-words map (own seed, own bucket count) and
fits either a closed-form ridge regression or a small two-layer network
to reproduce the embeddings the service returned.

Training MSE throughout this module is the mean over samples of the
squared L2 residual (summed over output dimensions).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .embedder import hashed_count_matrix
from .exceptions import DivergedError, SingularSystemError
from .validation import as_matrix, check_positive_int, check_texts


@dataclass(frozen=True)
class StealerFeaturizer:
    """Hashed count features with a constant bias bucket, L2-normalized."""

    feature_dim: int = 2048
    hash_seed: int = 97

    def featurize_batch(self, texts) -> sparse.csr_matrix:
        """Sparse (n, feature_dim + 1) matrix of unit-norm feature rows."""
        counts = hashed_count_matrix(texts, self.feature_dim, self.hash_seed)
        norms = np.sqrt(np.asarray(counts.multiply(counts).sum(axis=1)).ravel())
        # bias bucket guarantees every row has norm >= 1
        inv = sparse.diags(1.0 / norms)
        return inv @ counts

    def featurize(self, text: str) -> np.ndarray:
        return np.asarray(self.featurize_batch([text]).todense()).ravel()


def _check_training_batch(stealer, texts, responses):
    texts = check_texts(texts, "queries")
    if len(texts) == 0:
        raise ValueError("need at least one (query, response) pair")
    y = as_matrix(responses, name="responses")
    if y.shape[0] != len(texts):
        raise ValueError(
            f"{len(texts)} queries but {y.shape[0]} responses"
        )
    return texts, y


class LinearStealer(BaseEstimator, RegressorMixin):
    """Closed-form ridge regression from hashed features to embeddings.

    Parameters
    ----------
    feature_dim : int
        Stealer-side hash bucket count F_a.
    hash_seed : int
        Stealer-side hash seed (independent of the victim's).
    ridge_lambda : float
        L2 penalty on the weight matrix; 0 demands a nonsingular system.

    Attributes (after fit)
    ----------------------
    weights_ : ndarray of shape (feature_dim + 1, dim)
    train_mse_ : float
    """

    def __init__(self, feature_dim: int = 2048, hash_seed: int = 97,
                 ridge_lambda: float = 1e-4):
        self.feature_dim = feature_dim
        self.hash_seed = hash_seed
        self.ridge_lambda = ridge_lambda

    @property
    def featurizer(self) -> StealerFeaturizer:
        return StealerFeaturizer(self.feature_dim, self.hash_seed)

    def fit(self, X, y):
        """Solve min_W sum ||W phi(x) - y||^2 + lambda ||W||_F^2 exactly."""
        texts, targets = _check_training_batch(self, X, y)
        lam = float(self.ridge_lambda)
        if lam < 0:
            raise ValueError(f"ridge_lambda must be >= 0, got {lam}")
        phi = self.featurizer.featurize_batch(texts)
        gram = (phi.T @ phi).toarray()
        gram[np.diag_indices_from(gram)] += lam
        rhs = np.asarray(phi.T @ targets)
        try:
            self.weights_ = cho_solve(cho_factor(gram), rhs)
        except LinAlgError as exc:
            raise SingularSystemError(
                "normal equations are singular; set ridge_lambda > 0"
            ) from exc
        residual = phi @ self.weights_ - targets
        self.train_mse_ = float(np.mean(np.einsum("ij,ij->i", residual, residual)))
        return self

    def predict(self, X) -> np.ndarray:
        """Raw (unnormalized) embeddings for a batch of texts."""
        if not hasattr(self, "weights_"):
            raise NotFittedError("LinearStealer is not fitted yet")
        phi = self.featurizer.featurize_batch(check_texts(X))
        return np.asarray(phi @ self.weights_)

    def embed(self, text: str) -> np.ndarray:
        return self.predict([text])[0]


# ---- two-layer network internals, shared by training and gradient tests ----

def mlp_forward(params: dict, phi) -> np.ndarray:
    hidden = np.tanh(np.asarray(phi @ params["W1"]) + params["b1"])
    return hidden @ params["W2"] + params["b2"]


def mlp_loss_and_grad(params: dict, phi, targets: np.ndarray):
    """Training loss and analytic gradients for one batch.

    Loss is mean-per-sample squared L2 residual. Returns (loss, grads)
    with grads keyed like params.
    """
    n = targets.shape[0]
    hidden = np.tanh(np.asarray(phi @ params["W1"]) + params["b1"])
    out = hidden @ params["W2"] + params["b2"]
    resid = out - targets
    loss = float(np.mean(np.einsum("ij,ij->i", resid, resid)))
    d_out = (2.0 / n) * resid
    d_hidden = d_out @ params["W2"].T
    d_z = d_hidden * (1.0 - hidden * hidden)
    grads = {
        "W1": np.asarray(phi.T @ d_z),
        "b1": d_z.sum(axis=0),
        "W2": hidden.T @ d_out,
        "b2": d_out.sum(axis=0),
    }
    return loss, grads


class MLPStealer(BaseEstimator, RegressorMixin):
    """Two-layer network (tanh hidden layer) trained by mini-batch
    gradient descent on MSE.

    Attributes (after fit)
    ----------------------
    params_ : dict with W1, b1, W2, b2
    loss_history_ : list of full-train MSE, entry 0 before training,
        one entry per epoch after it
    train_mse_ : float
    """

    def __init__(self, feature_dim: int = 2048, hash_seed: int = 97,
                 hidden_dim: int = 64, epochs: int = 20,
                 learning_rate: float = 0.2, batch_size: int = 128,
                 seed: int = 0):
        self.feature_dim = feature_dim
        self.hash_seed = hash_seed
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed

    @property
    def featurizer(self) -> StealerFeaturizer:
        return StealerFeaturizer(self.feature_dim, self.hash_seed)

    def fit(self, X, y):
        texts, targets = _check_training_batch(self, X, y)
        check_positive_int(self.hidden_dim, "hidden_dim")
        check_positive_int(self.epochs, "epochs")
        check_positive_int(self.batch_size, "batch_size")
        phi = self.featurizer.featurize_batch(texts)
        n, d = targets.shape
        rng = np.random.default_rng(self.seed)
        # Zero output layer: the first epoch then fits a linear readout of the
        # random hidden features, which keeps early gradients bounded at wide
        # hidden_dim where a random readout makes plain GD diverge.
        params = {
            "W1": 0.5 * rng.standard_normal((self.feature_dim + 1, self.hidden_dim)),
            "b1": np.zeros(self.hidden_dim),
            "W2": np.zeros((self.hidden_dim, d)),
            "b2": np.zeros(d),
        }
        lr = float(self.learning_rate)

        def full_loss():
            resid = mlp_forward(params, phi) - targets
            return float(np.mean(np.einsum("ij,ij->i", resid, resid)))

        history = [full_loss()]
        for epoch in range(1, self.epochs + 1):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                _, grads = mlp_loss_and_grad(params, phi[idx], targets[idx])
                for key in params:
                    params[key] -= lr * grads[key]
            loss = full_loss()
            if not np.isfinite(loss):
                raise DivergedError(
                    f"training loss became non-finite at epoch {epoch}; "
                    "lower the learning rate", epoch=epoch,
                )
            history.append(loss)
        self.params_ = params
        self.loss_history_ = history
        self.train_mse_ = history[-1]
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise NotFittedError("MLPStealer is not fitted yet")
        phi = self.featurizer.featurize_batch(check_texts(X))
        return mlp_forward(self.params_, phi)

    def embed(self, text: str) -> np.ndarray:
        return self.predict([text])[0]


def stealer_embed(model, text: str) -> np.ndarray:
    """Raw stealer output for one text (normalization is the verifier's job)."""
    return model.predict([text])[0]


# ---- persistence ----

def save_stealer(path, model) -> None:
    """Write a fitted stealer as versioned JSON (matrices as nested lists)."""
    if isinstance(model, LinearStealer):
        payload = {
            "version": 1,
            "kind": "linear",
            "feature_dim": model.feature_dim,
            "hash_seed": model.hash_seed,
            "ridge_lambda": model.ridge_lambda,
            "weights": model.weights_.tolist(),
        }
    elif isinstance(model, MLPStealer):
        payload = {
            "version": 1,
            "kind": "mlp",
            "feature_dim": model.feature_dim,
            "hash_seed": model.hash_seed,
            "hidden_dim": model.hidden_dim,
            "params": {k: v.tolist() for k, v in model.params_.items()},
        }
    else:
        raise TypeError(f"cannot persist {type(model).__name__}")
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_stealer(path):
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("version") != 1:
        raise ValueError(f"unsupported stealer file version {obj.get('version')!r}")
    if obj["kind"] == "linear":
        model = LinearStealer(
            feature_dim=int(obj["feature_dim"]),
            hash_seed=int(obj["hash_seed"]),
            ridge_lambda=float(obj["ridge_lambda"]),
        )
        model.weights_ = np.asarray(obj["weights"], dtype=np.float64)
        return model
    if obj["kind"] == "mlp":
        model = MLPStealer(
            feature_dim=int(obj["feature_dim"]),
            hash_seed=int(obj["hash_seed"]),
            hidden_dim=int(obj["hidden_dim"]),
        )
        model.params_ = {
            k: np.asarray(v, dtype=np.float64) for k, v in obj["params"].items()
        }
        return model
    raise ValueError(f"unknown stealer kind {obj['kind']!r}")
