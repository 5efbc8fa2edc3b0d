"""Maximum-entropy reconstruction of the size distribution from its moments.

For a moment vector in the interior of the moment space there is a unique
density on (0,1) maximizing Shannon entropy under the moment constraints,
of the form n(S) = exp(-lambda_0 - sum_i lambda_i S^beta_i).  The
multipliers are found by Newton iteration on the strictly convex potential
G(lambda) = integral exp(-sum lambda_i S^beta_i) dS + sum_k lambda_k m_k,
whose gradient is the moment residual and whose Hessian is the Hankel-type
matrix H_ij = integral S^(beta_i+beta_j) n dS.

All integrals use 24-point Gauss-Legendre rules.  For the fractional basis
they are evaluated in the radius variable r = sqrt(S) (the integrands are
then smooth exponentials of polynomials, and the quadrature is exact to
roundoff for polynomial moments); the integer basis integrates in S
directly.  The solver is vectorized over batches of moment vectors, one
reconstruction per grid cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature
from .moment_space import (
    FRACTIONAL,
    ExponentBasis,
    MomentVector,
    RealizabilityError,
    is_realizable,
)

DEFAULT_EPS = 1e-10
DEFAULT_MAX_ITER = 100
_MAX_HALVINGS = 40
_EXP_CLIP = 700.0


class NonConvergenceError(RuntimeError):
    """Newton iteration exhausted max_iter; carries the solver report."""

    def __init__(self, report):
        self.report = report
        super().__init__(
            f"maximum-entropy solve did not converge: residual "
            f"{report.final_residual:.3e} after {report.iterations} iterations"
        )


class ConditioningError(RuntimeError):
    """Hessian factorization failed even after regularization."""


class SingularIntegralError(ValueError):
    """Negative-order moment requested on an interval touching S = 0."""


@dataclass(frozen=True)
class MaxEntDensity:
    """Multiplier vector defining n(S) = exp(-sum_i lambda_i S^beta_i)."""

    basis: ExponentBasis
    lambdas: np.ndarray
    support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        lam = np.ascontiguousarray(self.lambdas, dtype=float)
        if lam.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} multipliers, got {lam.shape}")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)


@dataclass(frozen=True)
class SolverReport:
    iterations: int
    final_residual: float
    converged: bool


def size_quadrature(basis: ExponentBasis, lo: float, hi: float,
                    n: int = quadrature.DEFAULT_ORDER) -> quadrature.QuadratureRule:
    """n-point rule for integrals of smooth-in-S^step functions over [lo, hi].

    Fractional basis: Gauss-Legendre in r = sqrt(S) mapped back to size
    nodes (S = r^2, weight 2r w_r).  Integer basis: plain Gauss-Legendre.
    Either way the result is a valid positive rule on [lo, hi] whose weights
    sum to hi - lo.
    """
    if basis.is_fractional:
        r = quadrature.gauss_legendre(n, np.sqrt(lo), np.sqrt(hi))
        return quadrature.QuadratureRule(
            r.nodes ** 2, 2.0 * r.nodes * r.weights, (float(lo), float(hi))
        )
    return quadrature.gauss_legendre(n, lo, hi)


def _density_at(lambdas, exponents, s):
    """exp(-sum_i lambda_i s^beta_i), batched over leading axes of lambdas."""
    s = np.asarray(s, dtype=float)
    powers = s[..., None, :] ** np.asarray(exponents)[:, None]
    a = np.einsum("...i,...in->...n", lambdas, powers)
    return np.exp(-np.clip(a, -_EXP_CLIP, _EXP_CLIP))


def moments_from_lambdas(lambdas, basis: ExponentBasis, orders,
                         lo: float = 0.0, hi: float = 1.0,
                         n: int = quadrature.DEFAULT_ORDER):
    """Moments of the exponential-family density for the given orders.

    ``lambdas`` may carry leading batch axes; returns shape
    ``lambdas.shape[:-1] + (len(orders),)``.
    """
    rule = size_quadrature(basis, lo, hi, n)
    dens = _density_at(np.asarray(lambdas, dtype=float), basis.exponents, rule.nodes)
    weighted = rule.weights * rule.nodes[None, :] ** np.asarray(orders)[:, None]
    return np.einsum("...n,kn->...k", dens, weighted)


def solve_batch(values, basis: ExponentBasis, eps: float = DEFAULT_EPS,
                max_iter: int = DEFAULT_MAX_ITER, warm_lambdas=None,
                quad_order: int = quadrature.DEFAULT_ORDER):
    """Newton solve of the moment constraints for a batch of moment vectors.

    ``values`` has shape (C, N+1) with positive zeroth moments; the solve
    runs on moments normalized by m0 (multipliers are shifted back by
    ln m0 on output).  Globalized by backtracking line search on the convex
    potential, with trace regularization of the Hessian on factorization
    failure.  Returns ``(lambdas, iterations, residuals, converged)``; the
    residual is the max-norm moment defect relative to m0.
    """
    values = np.asarray(values, dtype=float)
    nmom = values.shape[-1]
    exps = np.asarray(basis.exponents)
    scale = values[:, 0]
    target = values / scale[:, None]
    rule = size_quadrature(basis, 0.0, 1.0, quad_order)
    pw = rule.nodes[None, :] ** exps[:, None]            # (N+1, nq)
    wpw = rule.weights * pw                              # (N+1, nq)

    lam = np.zeros_like(values)
    if warm_lambdas is not None:
        lam = np.array(warm_lambdas, dtype=float, copy=True)
        lam[:, 0] += np.log(scale)

    def density_at_nodes(l):
        return np.exp(-np.clip(l @ pw, -_EXP_CLIP, _EXP_CLIP))

    def potential(l, tgt, dens):
        return dens @ rule.weights + np.einsum("ck,ck->c", l, tgt)

    iters = np.zeros(len(values), dtype=int)
    residual = np.full(len(values), np.inf)
    active = np.ones(len(values), dtype=bool)

    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        lam_act, tgt = lam[idx], target[idx]
        dens = density_at_nodes(lam_act)
        defect = tgt - dens @ wpw.T
        res = np.abs(defect).max(axis=1)
        residual[idx] = res
        keep = (res > eps) & (iters[idx] < max_iter)
        active[idx[~keep]] = False
        idx = idx[keep]
        if idx.size == 0:
            break
        lam_act, tgt, dens, defect = lam_act[keep], tgt[keep], dens[keep], defect[keep]
        hess = np.einsum("cn,kn,jn->ckj", dens, wpw, pw)
        step = _solve_regularized(hess, defect)
        pot0 = potential(lam_act, tgt, dens)
        t = np.ones(len(idx))
        reject = np.ones(len(idx), dtype=bool)
        trial = lam_act.copy()
        for _ in range(_MAX_HALVINGS):
            trial[reject] = lam_act[reject] - t[reject, None] * step[reject]
            pot1 = potential(trial, tgt, density_at_nodes(trial))
            reject = ~(pot1 <= pot0 + 1e-15 * np.abs(pot0))
            if not reject.any():
                break
            t[reject] *= 0.5
        # a cell whose line search cannot decrease the potential has stalled
        active[idx[reject]] = False
        ok = ~reject
        lam[idx[ok]] = trial[ok]
        iters[idx[ok]] += 1

    converged = residual <= eps
    lam[:, 0] -= np.log(scale)
    return lam, iters, residual, converged


def _solve_regularized(hess, rhs):
    b = rhs[..., None]
    try:
        return np.linalg.solve(hess, b)[..., 0]
    except np.linalg.LinAlgError:
        pass
    tr = np.trace(hess, axis1=-2, axis2=-1)
    eye = np.eye(hess.shape[-1])
    reg = hess + (1e-12 * tr)[..., None, None] * eye
    try:
        return np.linalg.solve(reg, b)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            "Hessian solve failed after diagonal regularization"
        ) from exc


def maxent_reconstruct(m: MomentVector, eps: float = DEFAULT_EPS,
                       max_iter: int = DEFAULT_MAX_ITER,
                       initial: MaxEntDensity | None = None):
    """Reconstruct the entropy-maximizing density matching a moment vector.

    The moment vector must be interior (strictly realizable).  Returns the
    density and a report; on convergence every moment of the density matches
    the input within ``eps * m0``.  Warm starts reuse ``initial.lambdas``.
    """
    if eps <= 0.0:
        raise ValueError(f"tolerance must be positive, got {eps}")
    status = is_realizable(m)
    if status != "interior":
        raise RealizabilityError(
            f"maximum-entropy reconstruction needs an interior moment "
            f"vector, got a(n) {status} one: {m.values}"
        )
    warm = None
    if initial is not None:
        warm = initial.lambdas[None, :]
    lam, iters, res, conv = solve_batch(
        m.values[None, :], m.basis, eps=eps, max_iter=max_iter, warm_lambdas=warm
    )
    report = SolverReport(int(iters[0]), float(res[0]), bool(conv[0]))
    density = MaxEntDensity(m.basis, lam[0])
    if not report.converged:
        raise NonConvergenceError(report)
    return density, report


def evaluate_density(d: MaxEntDensity, s):
    """Pointwise density value; at S = 0 only the constant multiplier acts."""
    s_arr = np.asarray(s, dtype=float)
    out = _density_at(d.lambdas, d.basis.exponents, np.atleast_1d(s_arr))
    return float(out[0]) if np.isscalar(s) or s_arr.ndim == 0 else out


def moments_of_density(d: MaxEntDensity, orders, interval=(0.0, 1.0),
                       n: int = quadrature.DEFAULT_ORDER):
    """Moments of the reconstructed density over [lo, hi] for given orders.

    Negative orders are allowed only when lo > 0 (the integral is singular
    otherwise).
    """
    lo, hi = interval
    orders = np.asarray(orders, dtype=float)
    if lo < 0.0:
        raise ValueError(f"interval must lie in [0, inf), got lo={lo}")
    if lo == 0.0 and np.any(orders < 0.0):
        raise SingularIntegralError(
            f"negative-order moment on [0, {hi}] is singular"
        )
    return moments_from_lambdas(d.lambdas, d.basis, orders, lo, hi, n)


def entropy(d: MaxEntDensity, n: int = quadrature.DEFAULT_ORDER) -> float:
    """Shannon entropy -integral n ln n of the reconstructed density."""
    rule = size_quadrature(d.basis, *d.support, n)
    dens = _density_at(d.lambdas, d.basis.exponents, rule.nodes)
    return float(-np.dot(rule.weights, dens * np.log(np.maximum(dens, 1e-300))))
