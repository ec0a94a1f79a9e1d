"""Embedded manifolds used by the solver: the unit sphere and the orthogonal group.

Both are given the metric inherited from the ambient Euclidean space, so
Riemannian gradients are tangent-space projections of Euclidean gradients.
Retractions are the metric projection onto the sphere and the QR-based
retraction on the orthogonal group St(n, n).
"""

import numpy as np

__all__ = ["UnitSphere", "OrthogonalGroup", "qr_positive"]


def qr_positive(a):
    """Thin QR factorization with the sign convention diag(R) > 0.

    Parameters
    ----------
    a : ndarray, shape (m, k)
        Matrix with m >= k and full column rank.

    Returns
    -------
    q : ndarray, shape (m, k)
        Orthonormal columns.
    r : ndarray, shape (k, k)
        Upper triangular with strictly positive diagonal.

    Raises
    ------
    numpy.linalg.LinAlgError
        If a diagonal entry of R vanishes (rank-deficient input), in which
        case the sign convention is undefined.
    """
    q, r = np.linalg.qr(np.asarray(a, dtype=float))
    d = np.sign(np.diagonal(r))
    if np.any(d == 0.0):
        raise np.linalg.LinAlgError("rank-deficient input: QR sign convention undefined")
    q = q * d
    r = r * d[:, None]
    return q, r


class UnitSphere:
    """The sphere S^{n-1} = {x in R^n : ||x||_2 = 1}.

    Tangent vectors at x are the vectors orthogonal to x. The retraction is
    R_x(v) = (x + v) / ||x + v||.
    """

    def __init__(self, n):
        n = int(n)
        if n < 1:
            raise ValueError(f"sphere dimension must be a positive integer, got {n}")
        self.n = n
        self.point_shape = (n,)

    def __repr__(self):
        return f"UnitSphere({self.n})"

    def _check_shape(self, a, what):
        a = np.asarray(a, dtype=float)
        if a.shape != self.point_shape:
            raise ValueError(f"{what} has shape {a.shape}, expected {self.point_shape}")
        return a

    def check_point(self, x, tol=1e-12):
        """Validate that x lies on the sphere; returns x as a float array."""
        x = self._check_shape(x, "point")
        err = abs(np.linalg.norm(x) - 1.0)
        if err > tol:
            raise ValueError(f"point is off the sphere: | ||x|| - 1 | = {err:.3e} > {tol:.1e}")
        return x

    def tangency_error(self, x, v):
        """Absolute inner product |x^T v|, zero for exact tangent vectors."""
        return abs(float(np.dot(x, v)))

    def project(self, x, v):
        """Orthogonal projection of an ambient vector onto the tangent space at x.

        Computes (I - x x^T) v.
        """
        x = self._check_shape(x, "point")
        v = self._check_shape(v, "vector")
        return v - np.dot(x, v) * x

    def retract(self, x, v):
        """Metric-projection retraction R_x(v) = (x + v) / ||x + v||."""
        x = self._check_shape(x, "point")
        v = self._check_shape(v, "tangent vector")
        w = x + v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise ValueError("x + v is the zero vector, retraction undefined")
        return w / nw

    def random_point(self, rng):
        """Uniform random point: a normalized standard Gaussian vector."""
        x = rng.standard_normal(self.n)
        nx = np.linalg.norm(x)
        while nx == 0.0:  # probability-zero draw
            x = rng.standard_normal(self.n)
            nx = np.linalg.norm(x)
        return x / nx


class OrthogonalGroup:
    """The orthogonal group St(n, n) = {X in R^{n x n} : X^T X = I}.

    Tangent vectors at X are matrices V with X^T V skew-symmetric. The
    retraction is the Q factor of the QR factorization of X + V with the
    positive-diagonal sign convention.
    """

    def __init__(self, n):
        n = int(n)
        if n < 1:
            raise ValueError(f"matrix order must be a positive integer, got {n}")
        self.n = n
        self.point_shape = (n, n)

    def __repr__(self):
        return f"OrthogonalGroup({self.n})"

    def _check_shape(self, a, what):
        a = np.asarray(a, dtype=float)
        if a.shape != self.point_shape:
            raise ValueError(f"{what} has shape {a.shape}, expected {self.point_shape}")
        return a

    def check_point(self, x, tol=1e-10):
        """Validate orthonormality ||X^T X - I||_F <= tol; returns X as a float array."""
        x = self._check_shape(x, "point")
        err = np.linalg.norm(x.T @ x - np.eye(self.n))
        if err > tol:
            raise ValueError(f"point is not orthonormal: ||X^T X - I||_F = {err:.3e} > {tol:.1e}")
        return x

    def tangency_error(self, x, v):
        """Frobenius norm of the symmetric part of X^T V, zero for exact tangents."""
        a = x.T @ v
        return float(np.linalg.norm(a + a.T)) / 2.0

    def project(self, x, v):
        """Projection onto the tangent space at X: V - X sym(X^T V)."""
        x = self._check_shape(x, "point")
        v = self._check_shape(v, "vector")
        a = x.T @ v
        return v - x @ ((a + a.T) / 2.0)

    def retract(self, x, v):
        """QR retraction: the Q factor of X + V with diag(R) > 0."""
        x = self._check_shape(x, "point")
        v = self._check_shape(v, "tangent vector")
        q, _ = qr_positive(x + v)
        return q

    def random_point(self, rng, dist="gaussian"):
        """Random orthogonal matrix.

        Parameters
        ----------
        rng : numpy.random.Generator
        dist : {"gaussian", "uniform"}
            Distribution of the raw matrix orthonormalized by QR. "gaussian"
            gives Haar-distributed points; "uniform" draws entries from
            U(0, 1) first.
        """
        if dist == "gaussian":
            a = rng.standard_normal((self.n, self.n))
        elif dist == "uniform":
            a = rng.random((self.n, self.n))
        else:
            raise ValueError(f"unknown distribution {dist!r}, expected 'gaussian' or 'uniform'")
        q, _ = qr_positive(a)
        return q
