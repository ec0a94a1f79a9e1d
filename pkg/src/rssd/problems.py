"""Benchmark problem instances and their success metrics.

Two families are generated:

* sparse vector in a subspace: an m x n orthonormal basis Q of a subspace
  of R^m constructed to contain a vector with exactly n nonzero entries
  (the first n coordinates equal). Recovery succeeds when the minimizer
  x of ||Q x||_p^p on the sphere reproduces that sparsity pattern.

* orthogonal dictionary learning: data Y = X* S* with X* a random
  orthogonal dictionary and S* a Bernoulli-Gaussian sparse code matrix
  with m = floor(10 n^1.5) columns. Quality is the fraction of entries of
  Y^T X driven (numerically) to zero.

Counting a coordinate as zero truncates strictly below a threshold tau,
i.e. entries with |v_i| < tau are treated as zeros.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .manifolds import qr_positive

__all__ = [
    "FsvInstance",
    "OdlInstance",
    "gen_fsv",
    "gen_odl",
    "truncated_nnz",
    "fsv_success",
    "sparsity_level",
    "save_instance",
    "load_instance",
    "DEFAULT_TAU_FSV",
    "DEFAULT_TAU_ODL",
]

DEFAULT_TAU_FSV = 1e-8
DEFAULT_TAU_ODL = 1e-4

_FORMAT_VERSION = 1


def _rng_from(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class FsvInstance:
    """Subspace basis hiding a sparse vector.

    q has orthonormal columns; the vector e with ones in the first n
    coordinates lies in its column span, so x_star = Q^T e / ||Q^T e||
    maps to the planted sparse vector Q x_star = e / sqrt(n).
    """

    q: np.ndarray
    n: int
    m: int
    seed: Optional[int] = None
    tau: float = DEFAULT_TAU_FSV

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != (self.m, self.n):
            raise ValueError(f"basis has shape {q.shape}, expected {(self.m, self.n)}")
        if self.m <= self.n:
            raise ValueError(f"need m > n, got m={self.m}, n={self.n}")
        err = np.linalg.norm(q.T @ q - np.eye(self.n))
        if err > 1e-10:
            raise ValueError(f"basis columns not orthonormal: error {err:.3e}")
        e = self.planted_vector()
        if np.linalg.norm(q @ (q.T @ e) - e) > 1e-8:
            raise ValueError("planted vector is not in the span of the basis")
        object.__setattr__(self, "q", q)

    def planted_vector(self):
        e = np.zeros(self.m)
        e[: self.n] = 1.0
        return e

    @property
    def x_star(self):
        """Coefficient vector of the planted sparse direction, unit norm."""
        v = self.q.T @ self.planted_vector()
        return v / np.linalg.norm(v)


@dataclass(frozen=True)
class OdlInstance:
    """Observations Y = X* S* from an orthogonal dictionary X*.

    s_star holds the Bernoulli(theta)-Gaussian codes; its exact zero
    pattern is the ground truth against which recovered sparsity levels
    are compared.
    """

    x_star: np.ndarray
    s_star: np.ndarray
    y: np.ndarray
    n: int
    m: int
    seed: Optional[int] = None
    theta: float = 0.5
    tau: float = DEFAULT_TAU_ODL

    def __post_init__(self):
        x = np.asarray(self.x_star, dtype=float)
        s = np.asarray(self.s_star, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != (self.n, self.n):
            raise ValueError(f"dictionary has shape {x.shape}, expected {(self.n, self.n)}")
        if s.shape != (self.n, self.m) or y.shape != (self.n, self.m):
            raise ValueError(
                f"codes/data have shapes {s.shape}/{y.shape}, expected {(self.n, self.m)}")
        if np.linalg.norm(x.T @ x - np.eye(self.n)) > 1e-10:
            raise ValueError("dictionary is not orthonormal")

    @property
    def true_sparsity(self):
        """Fraction of exact zeros in the code matrix."""
        return 1.0 - np.count_nonzero(self.s_star) / self.s_star.size


def gen_fsv(n, m, seed, max_retries=5):
    """Generate a sparse-vector-in-subspace instance.

    The basis is the positive-diagonal thin QR factor of [e | G] where e
    is the planted all-ones-then-zeros vector and G has i.i.d. standard
    Gaussian entries. Rank-deficient draws (a probability-zero event) are
    regenerated from the continuing stream, at most max_retries times.

    Parameters
    ----------
    n : int
        Subspace dimension, at least 1.
    m : int
        Ambient dimension, strictly larger than n.
    seed : int or numpy.random.Generator
        Instance stream. Integer seeds are recorded on the instance.
    """
    n, m = int(n), int(m)
    if n < 1 or m <= n:
        raise ValueError(f"need m > n >= 1, got n={n}, m={m}")
    rng = _rng_from(seed)
    e = np.zeros(m)
    e[:n] = 1.0
    for _ in range(max_retries + 1):
        a = np.empty((m, n))
        a[:, 0] = e
        a[:, 1:] = rng.standard_normal((m, n - 1))
        try:
            q, _ = qr_positive(a)
        except np.linalg.LinAlgError:
            continue
        return FsvInstance(q=q, n=n, m=m, seed=seed if isinstance(seed, int) else None)
    raise np.linalg.LinAlgError(f"no full-rank draw in {max_retries + 1} attempts")


def gen_odl(n, seed, theta=0.5):
    """Generate an orthogonal dictionary learning instance.

    The dictionary is the positive-diagonal Q factor of a Gaussian n x n
    matrix; codes are Bernoulli(theta) masks times standard Gaussians;
    the number of observations is m = floor(10 * n^1.5).
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"need n >= 2, got n={n}")
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    m = int(np.floor(10.0 * n ** 1.5))
    rng = _rng_from(seed)
    x_star, _ = qr_positive(rng.standard_normal((n, n)))
    mask = rng.random((n, m)) < theta
    s_star = np.where(mask, rng.standard_normal((n, m)), 0.0)
    y = x_star @ s_star
    return OdlInstance(x_star=x_star, s_star=s_star, y=y, n=n, m=m,
                       seed=seed if isinstance(seed, int) else None, theta=theta)


def truncated_nnz(v, tau):
    """Number of entries with |v_i| >= tau; entries strictly below count as zero."""
    if not (tau > 0.0):
        raise ValueError(f"truncation threshold tau must be positive, got {tau}")
    return int(np.count_nonzero(np.abs(np.asarray(v)) >= tau))


def fsv_success(instance, x, tau=None):
    """Whether Q x matches the planted sparsity: truncated ||Q x||_0 == n."""
    tau = instance.tau if tau is None else tau
    return truncated_nnz(instance.q @ np.asarray(x, dtype=float), tau) == instance.n


def sparsity_level(instance, x, tau=None):
    """Fraction of entries of Y^T X truncated to zero, in [0, 1]."""
    tau = instance.tau if tau is None else tau
    c = instance.y.T @ np.asarray(x, dtype=float)
    return 1.0 - truncated_nnz(c, tau) / c.size


def save_instance(instance, path):
    """Write an instance to an .npz file with a JSON header.

    The header records the family, sizes, generator seed and default
    truncation threshold, so files are self-describing.
    """
    if isinstance(instance, FsvInstance):
        header = {"format_version": _FORMAT_VERSION, "kind": "fsv",
                  "n": instance.n, "m": instance.m,
                  "seed": instance.seed, "tau": instance.tau}
        np.savez(path, header=json.dumps(header), q=instance.q)
    elif isinstance(instance, OdlInstance):
        header = {"format_version": _FORMAT_VERSION, "kind": "odl",
                  "n": instance.n, "m": instance.m,
                  "seed": instance.seed, "tau": instance.tau,
                  "theta": instance.theta}
        np.savez(path, header=json.dumps(header),
                 x_star=instance.x_star, s_star=instance.s_star, y=instance.y)
    else:
        raise TypeError(f"cannot serialize object of type {type(instance).__name__}")


def load_instance(path):
    """Read an instance written by save_instance."""
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format_version") != _FORMAT_VERSION:
            raise ValueError(f"unsupported format version {header.get('format_version')}")
        kind = header.get("kind")
        if kind == "fsv":
            return FsvInstance(q=data["q"], n=header["n"], m=header["m"],
                               seed=header["seed"], tau=header["tau"])
        if kind == "odl":
            return OdlInstance(x_star=data["x_star"], s_star=data["s_star"],
                               y=data["y"], n=header["n"], m=header["m"],
                               seed=header["seed"], theta=header["theta"],
                               tau=header["tau"])
        raise ValueError(f"unknown instance kind {kind!r}")
