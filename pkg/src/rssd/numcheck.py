"""Independent numerical checks of gradients, smoothing bounds and limits.

The finite-difference gradient oracle deliberately calls only the
objective's value method, never its gradient code, so it cannot inherit a
bug from the implementation it is checking. Central differences are exact
(up to rounding) on each branch of the smoothing, so components whose
perturbed arguments straddle the seam at |t| = mu/2 are flagged and
checked against a widened tolerance instead.
"""

from dataclasses import dataclass

import numpy as np

from .smoothing import smooth_abs, smooth_abs_pow, smooth_abs_pow_deriv

__all__ = [
    "CheckReport",
    "fd_gradient_check",
    "smoothing_bound_audit",
    "consistency_probe",
    "default_checks",
]


@dataclass(frozen=True)
class CheckReport:
    """Result of one numerical check.

    max_rel_err is the check's decision quantity; the check passes if and
    only if it does not exceed tol. worst_input describes where the
    maximum occurred.
    """

    name: str
    max_abs_err: float
    max_rel_err: float
    worst_input: str
    tol: float

    @property
    def passed(self):
        return bool(self.max_rel_err <= self.tol)

    def summary_line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}  {self.name}: max_rel_err={self.max_rel_err:.3e} "
                f"(tol {self.tol:.1e}) abs={self.max_abs_err:.3e} at {self.worst_input}")


def fd_gradient_check(obj, x, mu, h=None, tol=1e-5, seam_tol=1e-3):
    """Compare the analytic Euclidean gradient against central differences.

    Parameters
    ----------
    obj : SmoothedObjective
        Only obj.value and obj.apply_op are consulted for the reference
        side; obj.euclidean_gradient supplies the claim under test.
    x : ndarray
        Evaluation point (any point of the ambient space).
    mu : float
        Smoothing parameter.
    h : float, optional
        Step; defaults to 1e-6 * (1 + ||x||).
    tol, seam_tol : float
        Allowed relative error away from and next to the C^1 seam. Errors
        of seam-adjacent components are rescaled by tol/seam_tol so that
        a single pass criterion (max_rel_err <= tol) applies.

    Relative errors use the denominator max(1, ||analytic gradient||).
    """
    # owned contiguous copy: the loop perturbs entries in place
    x = np.array(x, dtype=float, copy=True, order="C")
    if h is None:
        h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    analytic = np.asarray(obj.euclidean_gradient(x, mu), dtype=float)
    denom = max(1.0, float(np.linalg.norm(analytic)))
    half_mu = 0.5 * mu

    fd = np.zeros_like(x)
    seam = np.zeros(x.size, dtype=bool)
    flat = x.ravel()
    for j in range(x.size):
        orig = flat[j]
        flat[j] = orig + h
        f_plus = obj.value(x, mu)
        t_plus = np.asarray(obj.apply_op(x))
        flat[j] = orig - h
        f_minus = obj.value(x, mu)
        t_minus = np.asarray(obj.apply_op(x))
        flat[j] = orig
        fd.ravel()[j] = (f_plus - f_minus) / (2.0 * h)
        # seam-adjacent if any smoothed argument changes branch between
        # the two evaluation points
        seam[j] = bool(np.any((np.abs(t_plus) >= half_mu) != (np.abs(t_minus) >= half_mu)))

    rel = np.abs(fd - analytic).ravel() / denom
    scaled = np.where(seam, rel * (tol / seam_tol), rel)
    worst = int(np.argmax(scaled))
    worst_desc = (f"component {worst} ({'seam' if seam[worst] else 'smooth'}), "
                  f"mu={mu:g}, h={h:g}")
    return CheckReport(
        name="fd-gradient",
        max_abs_err=float(np.max(np.abs(fd - analytic))),
        max_rel_err=float(scaled[worst]),
        worst_input=worst_desc,
        tol=tol,
    )


def smoothing_bound_audit(mus=(1.0, 0.5, 0.1, 0.01), ps=(1.0, 0.8, 0.5, 0.1),
                          t_grid=None, tol=1e-14):
    """Audit the approximation bounds of the smoothing over a grid.

    Checks, for every mu and every t in the grid,

        0 <= s_mu(t) - |t| <= mu/4,

    that the gap equals mu/4 exactly at t = 0, and for every p that

        0 <= s_mu(t)^p - |t|^p <= (mu/4)^p

    with equality at t = 0. The reported error is the largest violation
    relative to the respective bound.
    """
    if t_grid is None:
        t_grid = np.arange(-5.0, 5.0 + 1e-9, 1e-3)
    t_grid = np.asarray(t_grid, dtype=float)
    worst = ("", -np.inf)

    def consider(excess, where):
        nonlocal worst
        if excess > worst[1]:
            worst = (where, excess)

    for mu in mus:
        bound = 0.25 * mu
        gap = smooth_abs(t_grid, mu) - np.abs(t_grid)
        j = int(np.argmax(gap))
        consider(float((gap[j] - bound) / bound), f"mu={mu:g}, t={t_grid[j]:g}, p=1 bound")
        neg = float(np.min(gap))
        consider(-neg / bound, f"mu={mu:g}, lower bound")
        gap0 = smooth_abs(0.0, mu) - 0.0
        consider(abs(gap0 - bound) / bound, f"mu={mu:g}, t=0 equality")
        for p in ps:
            pbound = bound ** p
            pgap = smooth_abs_pow(t_grid, mu, p) - np.abs(t_grid) ** p
            j = int(np.argmax(pgap))
            consider(float((pgap[j] - pbound) / pbound), f"mu={mu:g}, t={t_grid[j]:g}, p={p:g}")
            consider(-float(np.min(pgap)) / pbound, f"mu={mu:g}, p={p:g} lower bound")
            pgap0 = smooth_abs_pow(0.0, mu, p)
            consider(abs(pgap0 - pbound) / pbound, f"mu={mu:g}, p={p:g}, t=0 equality")

    excess = max(worst[1], 0.0)
    return CheckReport(
        name="smoothing-bound",
        max_abs_err=excess,
        max_rel_err=excess,
        worst_input=worst[0],
        tol=tol,
    )


def consistency_probe(p, v, mus=None, tol=1e-3):
    """Probe gradient consistency of the smoothed |t|^p at the origin.

    Along the scaled path t_k = a * mu_k^(2-p) with a = 4^(p-1) v / (2 p),
    the derivative of s_mu(t)^p converges to v as mu_k decreases to zero,
    demonstrating that every target value is attainable in the limit even
    though |t|^p is not Lipschitz at 0. The check compares the final
    derivative against v (absolute difference).

    Parameters
    ----------
    p : float
        Exponent in (0, 1).
    v : float
        Target limit value.
    mus : array-like, optional
        Strictly decreasing positive sequence; defaults to 10^-k for
        k = 1..30.

    Returns
    -------
    estimates : ndarray
        Derivative values along the path.
    report : CheckReport
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"probe requires p in (0, 1), got {p}")
    if not np.isfinite(v):
        raise ValueError(f"target v must be finite, got {v}")
    if mus is None:
        mus = 10.0 ** -np.arange(1, 31, dtype=float)
    mus = np.asarray(mus, dtype=float)
    if mus.ndim != 1 or len(mus) < 2:
        raise ValueError("mu sequence must contain at least two values")
    if np.any(mus <= 0.0) or np.any(np.diff(mus) >= 0.0):
        raise ValueError("mu sequence must be positive and strictly decreasing")

    a = 4.0 ** (p - 1.0) * v / (2.0 * p)
    estimates = np.array([smooth_abs_pow_deriv(a * mu ** (2.0 - p), mu, p) for mu in mus])
    err = abs(float(estimates[-1]) - v)
    return estimates, CheckReport(
        name=f"consistency-probe(p={p:g}, v={v:g})",
        max_abs_err=err,
        max_rel_err=err,
        worst_input=f"mu={mus[-1]:g}",
        tol=tol,
    )


def default_checks(seed=0):
    """Standard battery used by the command line: returns a list of CheckReports."""
    from .problems import gen_fsv, gen_odl
    from .smoothing import fsv_objective, odl_objective

    rng = np.random.Generator(np.random.Philox(seed))
    reports = [smoothing_bound_audit()]
    for p, v in ((0.5, 1.0), (0.5, -3.0), (0.9, 10.0)):
        reports.append(consistency_probe(p, v)[1])
    for p in (1.0, 0.5):
        for mu in (1.0, 1e-2):
            inst = gen_fsv(5, 20, seed)
            obj = fsv_objective(inst.q, p)
            x = obj.manifold.random_point(rng)
            reports.append(fd_gradient_check(obj, x, mu))
    inst = gen_odl(5, seed)
    obj = odl_objective(inst.y, 0.5)
    x = obj.manifold.random_point(rng)
    reports.append(fd_gradient_check(obj, x, 0.1))
    return reports
