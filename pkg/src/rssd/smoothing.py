"""Uniform smoothing of |t| and |t|^p, and smoothed composite objectives.

The smoothing of the absolute value is

    s_mu(t) = |t|                 if |t| >= mu/2,
              t^2/mu + mu/4       if |t| <  mu/2,

which is C^1, satisfies |t| <= s_mu(t) <= |t| + mu/4, and has derivative
sign(t) outside the seam and 2t/mu inside. Powers s_mu(t)^p with
p in (0, 1] smooth |t|^p with gap at most (mu/4)^p; both the gaps are
attained at t = 0.

A :class:`SmoothedObjective` bundles a manifold, an optional smooth term
f_hat, and a sparsity term lam * sum_i s_mu((B x)_i)^p where B is a linear
operator given by a matvec/adjoint pair. Riemannian gradients are tangent
projections of Euclidean gradients.
"""

import numpy as np

__all__ = [
    "smooth_abs",
    "smooth_abs_deriv",
    "smooth_abs_pow",
    "smooth_abs_pow_deriv",
    "SmoothedObjective",
    "fsv_objective",
    "odl_objective",
]


def _check_mu(mu):
    if not np.isfinite(mu) or mu <= 0.0:
        raise ValueError(f"smoothing parameter mu must be positive, got {mu}")


def _check_p(p):
    if not (0.0 < p <= 1.0):
        raise ValueError(f"exponent p must lie in (0, 1], got {p}")


def _as_input(t):
    t = np.asarray(t, dtype=float)
    return t, t.ndim == 0


def _ret(out, scalar):
    return float(out) if scalar else out


def smooth_abs(t, mu):
    """Smoothed absolute value s_mu(t). Accepts scalars or arrays."""
    _check_mu(mu)
    t, scalar = _as_input(t)
    a = np.abs(t)
    return _ret(np.where(a >= 0.5 * mu, a, t * t / mu + 0.25 * mu), scalar)


def smooth_abs_deriv(t, mu):
    """Derivative of s_mu: sign(t) outside the seam, 2t/mu inside."""
    _check_mu(mu)
    t, scalar = _as_input(t)
    return _ret(np.where(np.abs(t) >= 0.5 * mu, np.sign(t), 2.0 * t / mu), scalar)


def smooth_abs_pow(t, mu, p):
    """s_mu(t)^p, the smoothing of |t|^p for p in (0, 1]."""
    _check_p(p)
    s = smooth_abs(t, mu)
    if p == 1.0:
        return s
    return _ret(np.power(s, p), np.ndim(s) == 0)


def smooth_abs_pow_deriv(t, mu, p):
    """Derivative of s_mu(t)^p, i.e. p * s_mu(t)^(p-1) * s_mu'(t).

    s_mu is bounded below by mu/4 > 0, so the power is well defined for
    every t even though |t|^p itself has unbounded slope at the origin.
    """
    _check_p(p)
    d = smooth_abs_deriv(t, mu)
    if p == 1.0:
        return d
    s = smooth_abs(t, mu)
    return _ret(p * np.power(s, p - 1.0) * d, np.ndim(d) == 0)


class SmoothedObjective:
    """Smoothed composite objective on a manifold.

        f_tilde(x, mu) = f_hat(x) + lam * sum_i s_mu((B x)_i)^p

    where B is linear and the sum runs over all entries of B x (which may
    be a vector or a matrix).

    Parameters
    ----------
    manifold : UnitSphere or OrthogonalGroup
        Domain of the minimization; supplies tangent projections.
    apply_op : callable
        x -> B x. The output may have any shape; entries are smoothed
        elementwise.
    adjoint_op : callable
        g -> B^T g, mapping arrays shaped like B x back to the ambient
        space of x.
    p : float
        Exponent in (0, 1]. p = 1 gives the smoothed l1 penalty.
    weight : float
        Nonnegative multiplier lam of the sparsity term.
    smooth_value, smooth_gradient : callable, optional
        Value and Euclidean gradient of the smooth term f_hat. Both or
        neither must be given; omitted means f_hat = 0.
    n_terms : int
        Number of smoothed entries, used for the approximation bound
        |f_tilde - f| <= lam * n_terms * (mu/4)^p.
    """

    def __init__(self, manifold, apply_op, adjoint_op, p, weight=1.0,
                 smooth_value=None, smooth_gradient=None, n_terms=None):
        _check_p(p)
        if not np.isfinite(weight) or weight < 0.0:
            raise ValueError(f"weight must be a nonnegative real, got {weight}")
        if (smooth_value is None) != (smooth_gradient is None):
            raise ValueError("smooth_value and smooth_gradient must be given together")
        self.manifold = manifold
        self.apply_op = apply_op
        self.adjoint_op = adjoint_op
        self.p = float(p)
        self.weight = float(weight)
        self.smooth_value = smooth_value
        self.smooth_gradient = smooth_gradient
        self.n_terms = n_terms

    def value(self, x, mu):
        """Smoothed objective f_tilde(x, mu)."""
        _check_mu(mu)
        out = 0.0
        if self.smooth_value is not None:
            out += float(self.smooth_value(x))
        if self.weight != 0.0:
            out += self.weight * float(np.sum(smooth_abs_pow(self.apply_op(x), mu, self.p)))
        return out

    def value_nonsmooth(self, x):
        """Underlying nonsmooth objective f(x) = f_hat(x) + lam * ||B x||_p^p."""
        out = 0.0
        if self.smooth_value is not None:
            out += float(self.smooth_value(x))
        if self.weight != 0.0:
            out += self.weight * float(np.sum(np.abs(self.apply_op(x)) ** self.p))
        return out

    def gap_bound(self, mu):
        """Upper bound on f_tilde(x, mu) - f(x), valid for every x."""
        _check_mu(mu)
        if self.n_terms is None:
            raise ValueError("n_terms not set, approximation bound unavailable")
        return self.weight * self.n_terms * (0.25 * mu) ** self.p

    def euclidean_gradient(self, x, mu):
        """Gradient of f_tilde(., mu) in the ambient space."""
        _check_mu(mu)
        if self.weight != 0.0:
            g = smooth_abs_pow_deriv(self.apply_op(x), mu, self.p)
            out = self.weight * self.adjoint_op(g)
        else:
            out = np.zeros_like(np.asarray(x, dtype=float))
        if self.smooth_gradient is not None:
            out = out + np.asarray(self.smooth_gradient(x), dtype=float)
        return out

    def riemannian_gradient(self, x, mu):
        """Tangent projection of the Euclidean gradient at x."""
        return self.manifold.project(x, self.euclidean_gradient(x, mu))


def fsv_objective(q, p):
    """Objective ||Q x||_p^p (smoothed) on the sphere, for a basis Q of a subspace.

    Parameters
    ----------
    q : ndarray, shape (m, n)
        Matrix with orthonormal columns spanning the subspace.
    p : float
        Exponent in (0, 1]; p = 1 is the l1 relaxation.
    """
    from .manifolds import UnitSphere

    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] <= q.shape[1]:
        raise ValueError(f"expected a tall basis matrix, got shape {q.shape}")
    m, n = q.shape
    return SmoothedObjective(
        UnitSphere(n),
        apply_op=lambda x: q @ x,
        adjoint_op=lambda g: q.T @ g,
        p=p,
        weight=1.0,
        n_terms=m,
    )


def odl_objective(y, p):
    """Objective (1/m) sum_i ||y_i^T X||_p^p (smoothed) on the orthogonal group.

    Parameters
    ----------
    y : ndarray, shape (n, m)
        Data matrix whose columns are the m observations.
    p : float
        Exponent in (0, 1].
    """
    from .manifolds import OrthogonalGroup

    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[0] > y.shape[1]:
        raise ValueError(f"expected an n x m data matrix with m >= n, got shape {y.shape}")
    n, m = y.shape
    return SmoothedObjective(
        OrthogonalGroup(n),
        apply_op=lambda x: y.T @ x,
        adjoint_op=lambda g: y @ g,
        p=p,
        weight=1.0 / m,
        n_terms=m * n,
    )
