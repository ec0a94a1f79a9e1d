"""Scikit-learn style estimators wrapping the smoothing descent solver."""

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .manifolds import qr_positive
from .problems import truncated_nnz
from .smoothing import fsv_objective, odl_objective
from .solver import SolverConfig, rssd_run, rssd_grid, SCHEDULE_GRID


def _solver_config(est, record_history=False):
    return SolverConfig(
        mu0=est.mu0, delta0=est.delta0,
        theta_mu=est.theta_mu, theta_delta=est.theta_delta,
        sigma=est.sigma, beta=est.beta, alpha_bar=est.alpha_bar,
        mu_stop=est.mu_stop, delta_stop=est.delta_stop,
        max_iters=est.max_iter, record_history=record_history,
    )


class SparseVectorRecovery(BaseEstimator):
    """Find the sparsest unit vector in the span of a basis matrix.

    fit(X) treats the columns of X as a basis of a subspace of R^m,
    orthonormalizes them, and minimizes the smoothed ||Q x||_p^p over
    unit coefficient vectors x.

    Parameters
    ----------
    p : float, default 1.0
        Sparsity exponent in (0, 1].
    tau : float, default 1e-8
        Truncation threshold below which entries count as zero.
    schedule_grid : bool, default False
        Try all shrink-factor pairs and keep the sparsest result.
    max_iter : int, default 1000
    random_state : int, Generator or None
        Seed of the random initial point.

    Attributes
    ----------
    basis_ : ndarray, shape (m, n)
        Orthonormalized basis actually used.
    coef_ : ndarray, shape (n,)
        Recovered unit coefficient vector.
    sparse_vector_ : ndarray, shape (m,)
        The recovered vector basis_ @ coef_ in the ambient space.
    n_nonzero_ : int
        Entries of sparse_vector_ at or above tau in magnitude.
    n_iter_ : int
    result_ : SolveResult
    """

    def __init__(self, p=1.0, tau=1e-8, schedule_grid=False,
                 mu0=1.0, delta0=0.1, theta_mu=0.5, theta_delta=0.5,
                 sigma=1e-4, beta=0.5, alpha_bar=1.0,
                 mu_stop=1e-6, delta_stop=1e-4, max_iter=1000,
                 random_state=None):
        self.p = p
        self.tau = tau
        self.schedule_grid = schedule_grid
        self.mu0 = mu0
        self.delta0 = delta0
        self.theta_mu = theta_mu
        self.theta_delta = theta_delta
        self.sigma = sigma
        self.beta = beta
        self.alpha_bar = alpha_bar
        self.mu_stop = mu_stop
        self.delta_stop = delta_stop
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        m, n = X.shape
        if m <= n:
            raise ValueError(f"basis must be tall, got shape {(m, n)}")
        q, _ = qr_positive(X)
        obj = fsv_objective(q, self.p)
        rng = np.random.default_rng(self.random_state)
        x0 = obj.manifold.random_point(rng)
        config = _solver_config(self)
        if self.schedule_grid:
            metric = lambda res: (truncated_nnz(q @ res.x, self.tau), res.f)
            result = rssd_grid(obj, x0, config, SCHEDULE_GRID, metric)
        else:
            result = rssd_run(obj, x0, config)
        self.basis_ = q
        self.coef_ = result.x
        self.sparse_vector_ = q @ result.x
        self.n_nonzero_ = truncated_nnz(self.sparse_vector_, self.tau)
        self.n_iter_ = result.iterations
        self.result_ = result
        return self


class OrthogonalDictionaryLearning(TransformerMixin, BaseEstimator):
    """Learn an orthogonal dictionary under which data codes are sparse.

    fit(X) takes samples as rows of X, shape (m, n) with m >= n, and
    minimizes the smoothed mean ||x_i^T D||_p^p over orthogonal
    dictionaries D; transform maps samples to their codes X @ D.

    Parameters
    ----------
    p : float, default 0.001
        Sparsity exponent in (0, 1].
    tau : float, default 1e-4
        Truncation threshold for reporting sparsity.
    init : {"gaussian", "uniform"}
        Distribution of the random orthogonal starting point.
    schedule_grid : bool, default False
    scale_by_p : bool, default True
        Rescale alpha_bar, delta0 and delta_stop by p. The gradient of
        the p-th-power penalty is proportional to p, so for tiny
        exponents the unscaled thresholds would classify the starting
        point as stationary and the run would end without moving. No
        effect at p = 1.
    max_iter : int, default 2000
    random_state : int, Generator or None

    Attributes
    ----------
    components_ : ndarray, shape (n, n)
        Learned dictionary, one atom per row: data ~ codes @ components_.
    sparsity_ : float
        Fraction of code entries truncated to zero on the training data.
    n_iter_ : int
    result_ : SolveResult
    """

    def __init__(self, p=0.001, tau=1e-4, init="gaussian", schedule_grid=False,
                 scale_by_p=True,
                 mu0=1.0, delta0=0.1, theta_mu=0.5, theta_delta=0.5,
                 sigma=1e-4, beta=0.5, alpha_bar=1.0,
                 mu_stop=1e-6, delta_stop=1e-4, max_iter=2000,
                 random_state=None):
        self.p = p
        self.tau = tau
        self.init = init
        self.schedule_grid = schedule_grid
        self.scale_by_p = scale_by_p
        self.mu0 = mu0
        self.delta0 = delta0
        self.theta_mu = theta_mu
        self.theta_delta = theta_delta
        self.sigma = sigma
        self.beta = beta
        self.alpha_bar = alpha_bar
        self.mu_stop = mu_stop
        self.delta_stop = delta_stop
        self.max_iter = max_iter
        self.random_state = random_state

    def _sparsity(self, y, x):
        codes = y.T @ x
        return 1.0 - truncated_nnz(codes, self.tau) / codes.size

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        m, n = X.shape
        if m < n:
            raise ValueError(f"need at least as many samples as features, got {(m, n)}")
        data = X.T  # columns are observations
        obj = odl_objective(data, self.p)
        rng = np.random.default_rng(self.random_state)
        x0 = obj.manifold.random_point(rng, dist=self.init)
        config = _solver_config(self)
        if self.scale_by_p and self.p != 1.0:
            config = replace(config,
                             alpha_bar=config.alpha_bar / self.p,
                             delta0=config.delta0 * self.p,
                             delta_stop=config.delta_stop * self.p)
        if self.schedule_grid:
            metric = lambda res: (-self._sparsity(data, res.x), res.f)
            result = rssd_grid(obj, x0, config, SCHEDULE_GRID, metric)
        else:
            result = rssd_run(obj, x0, config)
        self.components_ = result.x.T
        self.sparsity_ = self._sparsity(data, result.x)
        self.n_iter_ = result.iterations
        self.result_ = result
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=float)
        return X @ self.components_.T
