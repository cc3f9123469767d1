"""Objective predictors trained on (genotype features, measured value) pairs.

Three kinds: ridge regression solved in closed form, an epsilon-insensitive
SVR with an RBF kernel solved by SMO-style two-coordinate ascent, and a
stacked combination whose ridge meta-model is trained on out-of-fold base
predictions. Features are the unit-interval coordinates of canonical
genotypes, so masked positions contribute 0 and every feature lies in [0,1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .space import Genotype, SearchSpace

DEFAULT_RIDGE_ALPHA = 1.0
DEFAULT_SVR_C = 10.0
DEFAULT_SVR_EPSILON = 0.01
DEFAULT_SVR_TOL = 1e-3
DEFAULT_SVR_MAX_ITER = 10_000
DEFAULT_STACK_FOLDS = 5
# The meta-model combines two near-collinear prediction columns; the useful
# signal lives in their tiny difference directions, so a unit penalty would
# drag the weights toward an even split regardless of base quality.
DEFAULT_META_ALPHA = 1e-6

_FOLD_TAG = 0xF01D
_TRIAL_TAG = 0x7B1A1


class RankDeficientError(ValueError):
    """Raised when an unregularised ridge system cannot be solved."""


class UndefinedMetricError(ValueError):
    """Raised when MAPE or Kendall tau has a zero denominator."""


def featurize(space: SearchSpace, genotype: Genotype) -> np.ndarray:
    """Feature vector of one genotype: canonical unit-interval coordinates."""
    return space.unit_coordinates(genotype)


def featurize_batch(space: SearchSpace, genotypes) -> np.ndarray:
    """Feature matrix ``(B, n_variables)`` for many genotypes."""
    return space.unit_coordinates_batch(genotypes)


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y shape {y.shape} does not match {X.shape[0]} rows")
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty dataset")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("features and targets must be finite")
    return X, y


class RidgeModel:
    """L2-regularised linear regression, intercept unpenalised.

    Fitting centers features and targets and solves the normal equations
    ``(Xc' Xc + alpha I) w = Xc' yc`` directly.
    """

    def __init__(self, alpha: float = DEFAULT_RIDGE_ALPHA):
        if alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha}")
        self.alpha = float(alpha)
        self.coef_: np.ndarray | None = None
        self.intercept_: float | None = None

    def fit(self, X, y) -> "RidgeModel":
        X, y = _check_xy(X, y)
        x_mean = X.mean(axis=0)
        y_mean = float(y.mean())
        Xc = X - x_mean
        d = X.shape[1]
        if self.alpha == 0.0:
            rank = int(np.linalg.matrix_rank(Xc))
            if rank < d:
                raise RankDeficientError(
                    f"alpha=0 with centered feature rank {rank} < {d} columns"
                )
        gram = Xc.T @ Xc + self.alpha * np.eye(d)
        try:
            self.coef_ = np.linalg.solve(gram, Xc.T @ (y - y_mean))
        except np.linalg.LinAlgError as exc:
            raise RankDeficientError(f"normal equations are singular: {exc}") from exc
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        return self

    def predict(self, X) -> np.ndarray:
        if self.coef_ is None:
            raise RuntimeError("predict before fit")
        X = np.asarray(X, dtype=np.float64)
        return X @ self.coef_ + self.intercept_


def _rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class SvrRbfModel:
    """Epsilon-insensitive SVR with an RBF kernel.

    The dual is solved by SMO over the doubled variable vector
    ``(alpha, alpha*)`` with maximal-violating-pair working-set selection,
    stopping at a KKT gap of ``tol`` or after ``max_iter`` pair updates,
    whichever comes first. The full kernel matrix is materialised, so memory
    is O(n^2); intended for the few-thousand-sample regime.

    Attributes after fit: ``dual_coef_`` (beta = alpha - alpha*, one per
    training point, |beta| <= C), ``intercept_``, ``kkt_gap_``,
    ``n_iter_``, ``converged_``.
    """

    def __init__(
        self,
        C: float = DEFAULT_SVR_C,
        epsilon: float = DEFAULT_SVR_EPSILON,
        gamma: float | None = None,
        tol: float = DEFAULT_SVR_TOL,
        max_iter: int = DEFAULT_SVR_MAX_ITER,
    ):
        if C <= 0:
            raise ValueError(f"C must be positive, got {C}")
        if epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {epsilon}")
        if gamma is not None and gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.C = float(C)
        self.epsilon = float(epsilon)
        self.gamma = gamma
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.dual_coef_: np.ndarray | None = None
        self.intercept_: float | None = None
        self.gamma_: float | None = None
        self.kkt_gap_: float | None = None
        self.n_iter_: int = 0
        self.converged_: bool = False
        self._X: np.ndarray | None = None

    def fit(self, X, y) -> "SvrRbfModel":
        X, z = _check_xy(X, y)
        n = X.shape[0]
        self.gamma_ = self.gamma if self.gamma is not None else 1.0 / X.shape[1]
        K = _rbf_kernel(X, X, self.gamma_)
        # Contiguous kernel columns: row t of Kc is K[:, t], so the hot loop
        # reads views instead of strided copies.
        Kc = np.ascontiguousarray(K.T)
        del K

        # Doubled formulation: lam = (alpha, alpha*), sign = (+1, -1),
        # p = (eps - z, eps + z); minimise 0.5 lam' Qhat lam + p' lam with
        # sign' lam = 0 and 0 <= lam <= C. beta = alpha - alpha*.
        # Qhat has the block form [[K, -K], [-K, K]], so every update works
        # on plain kernel columns: Qhat[s, t] = sign[s] sign[t] K[s%n, t%n].
        sign = np.concatenate([np.ones(n), -np.ones(n)])
        p = np.concatenate([self.epsilon - z, self.epsilon + z])
        lam = np.zeros(2 * n)
        grad = p.copy()
        C = self.C

        neg_sg = -sign * grad
        up = ((sign > 0) & (lam < C)) | ((sign < 0) & (lam > 0))
        low = ((sign > 0) & (lam > 0)) | ((sign < 0) & (lam < C))
        it = 0
        gap = math.inf
        for it in range(1, self.max_iter + 1):
            if not (up.any() and low.any()):
                self.converged_ = True
                gap = 0.0
                break
            up_vals = np.where(up, neg_sg, -np.inf)
            low_vals = np.where(low, neg_sg, np.inf)
            i = int(np.argmax(up_vals))
            j = int(np.argmin(low_vals))
            gap = float(up_vals[i] - low_vals[j])
            if gap <= self.tol:
                self.converged_ = True
                break

            im, jm = i % n, j % n
            si, sj = sign[i], sign[j]
            col_i, col_j = Kc[im], Kc[jm]
            Qii, Qjj = col_i[im], col_j[jm]
            Qij = si * sj * col_i[jm]
            old_i, old_j = lam[i], lam[j]
            if si != sj:
                quad = Qii + Qjj + 2.0 * Qij
                if quad <= 0:
                    quad = 1e-12
                delta = (-grad[i] - grad[j]) / quad
                diff = old_i - old_j
                ni, nj = old_i + delta, old_j + delta
                if diff > 0:
                    if nj < 0:
                        nj, ni = 0.0, diff
                    if ni > C:
                        ni, nj = C, C - diff
                else:
                    if ni < 0:
                        ni, nj = 0.0, -diff
                    if nj > C:
                        nj, ni = C, C + diff
            else:
                quad = Qii + Qjj - 2.0 * Qij
                if quad <= 0:
                    quad = 1e-12
                delta = (grad[i] - grad[j]) / quad
                total = old_i + old_j
                ni, nj = old_i - delta, old_j + delta
                if total > C:
                    if ni > C:
                        ni, nj = C, total - C
                    if nj > C:
                        nj, ni = C, total - C
                else:
                    if nj < 0:
                        nj, ni = 0.0, total
                    if ni < 0:
                        ni, nj = 0.0, total
            lam[i], lam[j] = ni, nj
            half = col_i * (si * (ni - old_i)) + col_j * (sj * (nj - old_j))
            grad[:n] += half
            grad[n:] -= half
            neg_sg[:n] -= half
            neg_sg[n:] -= half
            for t, lt in ((i, ni), (j, nj)):
                if sign[t] > 0:
                    up[t] = lt < C
                    low[t] = lt > 0
                else:
                    up[t] = lt > 0
                    low[t] = lt < C

        self.n_iter_ = it
        self.kkt_gap_ = gap
        # Bias from free duals when available, else the KKT interval midpoint.
        free = (lam > 0) & (lam < C)
        if np.any(free):
            b = float(np.mean(neg_sg[free]))
        else:
            up = ((sign > 0) & (lam < C)) | ((sign < 0) & (lam > 0))
            low = ((sign > 0) & (lam > 0)) | ((sign < 0) & (lam < C))
            if up.any() and low.any():
                b = float((np.max(neg_sg[up]) + np.min(neg_sg[low])) / 2.0)
            else:
                b = float(np.mean(z))
        self.dual_coef_ = lam[:n] - lam[n:]
        self.intercept_ = b
        self._X = X
        return self

    def predict(self, X) -> np.ndarray:
        if self.dual_coef_ is None or self._X is None:
            raise RuntimeError("predict before fit")
        X = np.asarray(X, dtype=np.float64)
        support = np.nonzero(self.dual_coef_)[0]
        if support.size == 0:
            return np.full(X.shape[0], self.intercept_)
        K = _rbf_kernel(X, self._X[support], self.gamma_)
        return K @ self.dual_coef_[support] + self.intercept_


class StackedModel:
    """Ridge-over-(ridge, SVR) stack with out-of-fold meta training.

    Base models are fitted per fold to produce out-of-fold predictions, the
    ridge meta-model is fitted on those, and the bases are refitted on the
    full data for inference. Fold assignment is a seeded shuffle followed by
    round-robin so every fold is non-empty whenever ``n >= n_folds``.
    """

    def __init__(
        self,
        alpha: float = DEFAULT_RIDGE_ALPHA,
        C: float = DEFAULT_SVR_C,
        epsilon: float = DEFAULT_SVR_EPSILON,
        gamma: float | None = None,
        meta_alpha: float = DEFAULT_META_ALPHA,
        n_folds: int = DEFAULT_STACK_FOLDS,
        seed: int = 0,
    ):
        if n_folds < 2:
            raise ValueError(f"need at least 2 folds, got {n_folds}")
        self.alpha = alpha
        self.C = C
        self.epsilon = epsilon
        self.gamma = gamma
        self.meta_alpha = meta_alpha
        self.n_folds = int(n_folds)
        self.seed = int(seed)
        self.base_ridge_: RidgeModel | None = None
        self.base_svr_: SvrRbfModel | None = None
        self.meta_: RidgeModel | None = None
        self.fold_assignments_: np.ndarray | None = None
        self.oof_predictions_: np.ndarray | None = None

    def _make_bases(self) -> tuple[RidgeModel, SvrRbfModel]:
        return (
            RidgeModel(alpha=self.alpha),
            SvrRbfModel(C=self.C, epsilon=self.epsilon, gamma=self.gamma),
        )

    def fit(self, X, y) -> "StackedModel":
        X, y = _check_xy(X, y)
        n = X.shape[0]
        if n < self.n_folds:
            raise ValueError(f"{n} samples cannot fill {self.n_folds} folds")
        rng = np.random.default_rng(np.random.SeedSequence([_FOLD_TAG, self.seed]))
        folds = np.empty(n, dtype=np.int64)
        folds[rng.permutation(n)] = np.arange(n) % self.n_folds
        oof = np.empty((n, 2))
        for f in range(self.n_folds):
            test = folds == f
            train = ~test
            ridge, svr = self._make_bases()
            ridge.fit(X[train], y[train])
            svr.fit(X[train], y[train])
            oof[test, 0] = ridge.predict(X[test])
            oof[test, 1] = svr.predict(X[test])
        self.meta_ = RidgeModel(alpha=self.meta_alpha).fit(oof, y)
        self.base_ridge_, self.base_svr_ = self._make_bases()
        self.base_ridge_.fit(X, y)
        self.base_svr_.fit(X, y)
        self.fold_assignments_ = folds
        self.oof_predictions_ = oof
        return self

    def predict(self, X) -> np.ndarray:
        if self.meta_ is None:
            raise RuntimeError("predict before fit")
        X = np.asarray(X, dtype=np.float64)
        stacked = np.column_stack(
            [self.base_ridge_.predict(X), self.base_svr_.predict(X)]
        )
        return self.meta_.predict(stacked)


PREDICTOR_KINDS = ("ridge", "svr_rbf", "stacked")


def make_predictor(kind: str, seed: int = 0, **params):
    """Factory over :data:`PREDICTOR_KINDS`; ``seed`` only affects stacking folds."""
    if kind == "ridge":
        return RidgeModel(**params)
    if kind == "svr_rbf":
        return SvrRbfModel(**params)
    if kind == "stacked":
        return StackedModel(seed=seed, **params)
    raise ValueError(f"unknown predictor kind {kind!r}; known: {PREDICTOR_KINDS}")


def mape(predicted, actual) -> float:
    """Mean absolute percentage error, in percent.

    Raises:
        UndefinedMetricError: if any actual value is 0.
    """
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape or p.ndim != 1 or p.size == 0:
        raise ValueError("predicted and actual must be equal-length non-empty vectors")
    if np.any(a == 0):
        raise UndefinedMetricError("MAPE undefined: actual contains 0")
    return float(100.0 * np.mean(np.abs(p - a) / np.abs(a)))


def kendall_tau(x, y) -> float:
    """Kendall rank correlation, tie-adjusted (the tau-b variant).

    Counts concordant, discordant, and tied pairs over all n(n-1)/2 pairs:
    ``(C - D) / sqrt((C + D + Tx) (C + D + Ty))`` with Tx the pairs tied in
    x only and Ty the pairs tied in y only.

    Raises:
        UndefinedMetricError: if either vector is fully tied.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need two equal-length vectors with at least 2 entries")
    iu, ju = np.triu_indices(x.size, k=1)
    sx = np.sign(x[iu] - x[ju]).astype(np.int8)
    sy = np.sign(y[iu] - y[ju]).astype(np.int8)
    prod = sx * sy
    conc = int(np.count_nonzero(prod > 0))
    disc = int(np.count_nonzero(prod < 0))
    tx = int(np.count_nonzero((sx == 0) & (sy != 0)))
    ty = int(np.count_nonzero((sy == 0) & (sx != 0)))
    denom = math.sqrt((conc + disc + tx) * (conc + disc + ty))
    if denom == 0:
        raise UndefinedMetricError("Kendall tau undefined: a vector is fully tied")
    return (conc - disc) / denom


@dataclass(frozen=True, eq=False)
class PredictorReport:
    """Aggregated MAPE and Kendall tau per (kind, train size).

    ``mape_trials`` and ``tau_trials`` map kind -> array of shape
    ``(len(train_sizes), trials)``.
    """

    kinds: tuple[str, ...]
    train_sizes: tuple[int, ...]
    trials: int
    test_size: int
    mape_trials: dict[str, np.ndarray]
    tau_trials: dict[str, np.ndarray]

    def mape_mean(self, kind: str) -> np.ndarray:
        return self.mape_trials[kind].mean(axis=1)

    def tau_mean(self, kind: str) -> np.ndarray:
        return self.tau_trials[kind].mean(axis=1)

    def rows(self) -> list[dict]:
        """Flat rows for CSV export, one per (train size, kind)."""
        out = []
        for si, size in enumerate(self.train_sizes):
            for kind in self.kinds:
                m = self.mape_trials[kind][si]
                t = self.tau_trials[kind][si]
                out.append(
                    {
                        "train_size": size,
                        "kind": kind,
                        "mape_mean": float(m.mean()),
                        "mape_stderr": float(m.std(ddof=1) / math.sqrt(len(m))) if len(m) > 1 else 0.0,
                        "tau_mean": float(t.mean()),
                        "tau_stderr": float(t.std(ddof=1) / math.sqrt(len(t))) if len(t) > 1 else 0.0,
                    }
                )
        return out


def analyze_predictors(
    features,
    targets,
    train_sizes: Sequence[int] = tuple(range(100, 1001, 100)),
    trials: int = 100,
    test_size: int = 500,
    kinds: Sequence[str] = PREDICTOR_KINDS,
    seed: int = 0,
    params: dict | None = None,
) -> PredictorReport:
    """Measure predictor quality as a function of training set size.

    Each trial shuffles the dataset with its own derived seed, holds out one
    test set of ``test_size`` examples, and reuses that same test set for
    every train size within the trial; train sets are nested prefixes of the
    remaining pool. Reported MAPE and tau are per-trial values on the held
    out set.

    Args:
        features: Dataset feature matrix ``(N, d)``.
        targets: Dataset target vector ``(N,)``.
        params: Optional per-kind constructor overrides,
            e.g. ``{"ridge": {"alpha": 0.1}}``.

    Raises:
        ValueError: if the dataset is smaller than ``max(train_sizes) + test_size``.
    """
    X, z = _check_xy(features, targets)
    sizes = tuple(int(s) for s in train_sizes)
    if not sizes or min(sizes) < 1:
        raise ValueError("train_sizes must be positive")
    if trials < 1 or test_size < 1:
        raise ValueError("trials and test_size must be positive")
    needed = max(sizes) + test_size
    if X.shape[0] < needed:
        raise ValueError(
            f"dataset has {X.shape[0]} examples but needs {needed} "
            f"(max train size {max(sizes)} + test size {test_size})"
        )
    kinds = tuple(kinds)
    for kind in kinds:
        if kind not in PREDICTOR_KINDS:
            raise ValueError(f"unknown predictor kind {kind!r}")
    params = params or {}

    mape_trials = {k: np.empty((len(sizes), trials)) for k in kinds}
    tau_trials = {k: np.empty((len(sizes), trials)) for k in kinds}
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([_TRIAL_TAG, seed, t]))
        perm = rng.permutation(X.shape[0])
        test_idx = perm[:test_size]
        pool = perm[test_size:]
        X_test, z_test = X[test_idx], z[test_idx]
        for si, size in enumerate(sizes):
            train = pool[:size]
            for kind in kinds:
                model = make_predictor(kind, seed=seed * 100_003 + t, **params.get(kind, {}))
                model.fit(X[train], z[train])
                pred = model.predict(X_test)
                mape_trials[kind][si, t] = mape(pred, z_test)
                tau_trials[kind][si, t] = kendall_tau(pred, z_test)
    return PredictorReport(
        kinds=kinds,
        train_sizes=sizes,
        trials=trials,
        test_size=test_size,
        mape_trials=mape_trials,
        tau_trials=tau_trials,
    )
