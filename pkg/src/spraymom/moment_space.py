"""Moment vectors on [0,1] over fractional or integer exponent bases.

The geometric spray model transports four size moments.  Realizability (does
a nonnegative measure with these moments exist?) is tested through canonical
moments, which map the curved moment space onto the cube [0,1]^3.  The
product-difference (PD) algorithm inverts a moment sequence into its lower
principal representation, a minimal Gauss quadrature; the fractional variant
works in the radius variable r = sqrt(S) and supports negative-order moments,
which the evaporation solver needs to translate abscissas accurately.
"""

from __future__ import annotations

import warnings
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .quadrature import QuadratureRule

# Tolerance on PD continued-fraction coefficients: at or below this the
# moment vector sits on the boundary of the moment space (Dirac-sum measure).
ZETA_TOL = 1e-13
DENOM_TOL = 1e-14
REALIZABILITY_TOL = 1e-10


class RealizabilityError(ValueError):
    """Input moments do not correspond to any nonnegative measure."""


class MomentBoundarySignal(ArithmeticError):
    """Moment vector lies on the boundary of the moment space.

    The distribution degenerates to a sum of at most 1-2 Dirac atoms; the
    canonical moments computed before the degenerate one are in ``partial``.
    """

    def __init__(self, index: int, partial: tuple):
        self.index = index
        self.partial = partial
        super().__init__(
            f"canonical moment p{index} is degenerate (boundary of moment "
            f"space); p computed so far: {partial}"
        )


class UnsupportedBasisError(TypeError):
    """Operation is not defined for this exponent basis."""


class DegenerateMomentWarning(UserWarning):
    """PD inversion fell back to fewer nodes near the moment-space boundary."""


@dataclass(frozen=True)
class ExponentBasis:
    """Strictly increasing exponents starting at 0, uniform step 1/2 or 1."""

    exponents: tuple

    def __post_init__(self):
        exps = tuple(float(e) for e in self.exponents)
        if not exps or exps[0] != 0.0:
            raise ValueError("first exponent must be 0")
        steps = np.diff(exps)
        if len(steps) == 0 or not np.allclose(steps, steps[0]) or steps[0] <= 0:
            raise ValueError("exponents must be uniformly spaced and increasing")
        if steps[0] not in (0.5, 1.0):
            raise ValueError(f"unsupported exponent step {steps[0]}")
        object.__setattr__(self, "exponents", exps)

    @property
    def step(self) -> float:
        return self.exponents[1] - self.exponents[0]

    @property
    def is_fractional(self) -> bool:
        return self.step == 0.5

    def __len__(self):
        return len(self.exponents)


FRACTIONAL = ExponentBasis((0.0, 0.5, 1.0, 1.5))
INTEGER = ExponentBasis((0.0, 1.0, 2.0, 3.0))


@dataclass(frozen=True)
class MomentVector:
    """Values of N+1 moments over an exponent basis, with support metadata."""

    basis: ExponentBasis
    values: np.ndarray
    support: tuple[float, float] = field(default=(0.0, 1.0))

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.shape != (len(self.basis),):
            raise ValueError(
                f"expected {len(self.basis)} moment values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError(f"moment values must be finite, got {values}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m0(self) -> float:
        return float(self.values[0])

    def is_vacuum(self, threshold: float = 0.0) -> bool:
        return self.m0 <= threshold


@dataclass(frozen=True)
class PrincipalRepresentation:
    """Dirac-sum measure matching a (possibly negative-order) moment list."""

    nodes: np.ndarray
    weights: np.ndarray
    matched_orders: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    def moment(self, order: float) -> float:
        return float(np.sum(self.weights * self.nodes ** order))


GeometricOutputs = namedtuple(
    "GeometricOutputs",
    ["gauss_curvature_density", "mean_curvature_density",
     "surface_density", "volume_fraction"],
)


# ---------------------------------------------------------------------------
# canonical moments
# ---------------------------------------------------------------------------

def canonical_moments_from_values(values, denom_tol=DENOM_TOL):
    """Canonical moments p1, p2, p3 of a batched 4-moment sequence.

    ``values[..., k]`` is the k-th moment of the underlying measure (for the
    fractional basis that measure is 2r*n(r^2) in the radius variable, for
    the integer basis n itself; the closed forms are identical).

    Returns ``(p, degenerate)`` where ``p`` has shape ``(..., 3)`` and
    ``degenerate[..., k]`` flags a vanishing denominator for p_{k+1} (moment
    vector on the boundary of the moment space).  Degenerate entries of ``p``
    are set to 0 and must not be used.
    """
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = v[..., 1] / v[..., 0]
        c2 = v[..., 2] / v[..., 0]
        c3 = v[..., 3] / v[..., 0]
        p1 = c1
        den2 = (1.0 - c1) * c1
        p2 = (c2 - c1 * c1) / den2
        den3 = (c2 - c1 * c1) * (c1 - c2)
        p3 = (1.0 - c1) * (c1 * c3 - c2 * c2) / den3
    degenerate = np.stack(
        [
            ~(np.abs(v[..., 0]) > 0),
            np.abs(den2) < denom_tol,
            np.abs(den3) < denom_tol,
        ],
        axis=-1,
    )
    p = np.stack([p1, p2, p3], axis=-1)
    p = np.where(degenerate | ~np.isfinite(p), 0.0, p)
    return p, degenerate


def canonical_moments(m: MomentVector):
    """Canonical moments (p1, p2, p3) of a 4-moment vector.

    Values within 1e-12 of the [0,1] boundary are clamped onto it (roundoff);
    otherwise they are returned raw, so non-realizable inputs show up as
    p outside [0,1].  Raises :class:`MomentBoundarySignal` when a denominator
    degenerates (measure is a sum of <= 1-2 Dirac atoms).
    """
    if m.m0 <= 0.0:
        raise MomentBoundarySignal(0, ())
    p, degenerate = canonical_moments_from_values(m.values / m.m0)
    out = []
    for k in range(3):
        if degenerate[k]:
            raise MomentBoundarySignal(k + 1, tuple(out))
        pk = float(p[k])
        if -1e-12 < pk < 0.0:
            pk = 0.0
        elif 1.0 < pk < 1.0 + 1e-12:
            pk = 1.0
        out.append(pk)
    return tuple(out)


def is_realizable(m: MomentVector, tol: float = REALIZABILITY_TOL) -> str:
    """Classify a moment vector: ``'interior'``, ``'boundary'`` or ``'outside'``."""
    v = m.values
    if v[0] < 0.0:
        return "outside"
    if v[0] == 0.0:
        return "boundary" if np.all(v == 0.0) else "outside"
    p, degenerate = canonical_moments_from_values(v / v[0])
    for k in range(3):
        if degenerate[k]:
            return "boundary"
        pk = p[k]
        if pk < -tol or pk > 1.0 + tol:
            return "outside"
        if pk <= tol or pk >= 1.0 - tol:
            return "boundary"
    return "interior"


# ---------------------------------------------------------------------------
# product-difference algorithm
# ---------------------------------------------------------------------------

def pd_zetas(c):
    """Continued-fraction coefficients zeta_2..zeta_2n of the PD table.

    ``c`` holds 2n moments (batched over leading axes) normalized to
    ``c[..., 0] == 1``.  A measure with >= n support points on (0, inf) has
    all zetas positive; a zero (within roundoff) marks the moment-space
    boundary and a negative value a non-realizable sequence.
    """
    c = np.asarray(c, dtype=float)
    two_n = c.shape[-1]
    lead = c.shape[:-1]
    col_prev2 = np.zeros(lead + (two_n + 1,))
    col_prev2[..., 0] = 1.0
    sign = (-1.0) ** np.arange(two_n)
    col_prev = sign * c
    zetas = np.empty(lead + (two_n - 1,))
    # zeta_k = P[1,k+1] / (P[1,k] * P[1,k-1]); columns shrink by one row each
    for j in range(3, two_n + 2):
        rows = two_n + 2 - j
        col = (col_prev[..., :1] * col_prev2[..., 1:rows + 1]
               - col_prev2[..., :1] * col_prev[..., 1:rows + 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            zetas[..., j - 3] = col[..., 0] / (col_prev[..., 0] * col_prev2[..., 0])
        col_prev2, col_prev = col_prev, col
    return zetas


def _jacobi_nodes_weights(zetas, n):
    """Gauss nodes/weights of the normalized measure from its PD zetas."""
    lead = zetas.shape[:-1]
    alpha = np.empty(lead + (n,))
    alpha[..., 0] = zetas[..., 0]
    for j in range(2, n + 1):
        alpha[..., j - 1] = zetas[..., 2 * j - 3] + zetas[..., 2 * j - 2]
    jac = np.zeros(lead + (n, n))
    idx = np.arange(n)
    jac[..., idx, idx] = alpha
    if n > 1:
        beta = np.empty(lead + (n - 1,))
        for j in range(1, n):
            beta[..., j - 1] = zetas[..., 2 * j - 2] * zetas[..., 2 * j - 1]
        off = np.sqrt(beta)
        jac[..., idx[:-1], idx[:-1] + 1] = off
        jac[..., idx[:-1] + 1, idx[:-1]] = off
    nodes, vecs = np.linalg.eigh(jac)
    weights = vecs[..., 0, :] ** 2
    return nodes, weights


def pd_nodes_weights_batch(c):
    """Batched PD inversion of 2n-moment sequences into n-node quadratures.

    Returns ``(nodes, weights, degenerate)``; rows flagged degenerate have a
    zeta at or below :data:`ZETA_TOL` and need the scalar fallback path.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[-1] // 2
    scale = c[..., :1]
    zetas = pd_zetas(c / scale)
    degenerate = ~np.all(zetas > ZETA_TOL, axis=-1)
    safe = np.where(degenerate[..., None], np.nan, zetas)
    with np.errstate(invalid="ignore"):
        nodes, weights = _jacobi_nodes_weights(safe, n)
    return nodes, weights * scale, degenerate


def pd_inversion(integer_moments, interval, *, _warn=True) -> QuadratureRule:
    """Invert 2n moments of a measure on ``interval`` into an n-node Gauss rule.

    The rule reproduces every input moment (relative accuracy ~1e-9 or
    better for interior inputs).  Near the moment-space boundary the
    inversion falls back to fewer nodes matching correspondingly fewer
    moments and emits a :class:`DegenerateMomentWarning`; clearly negative
    zeta coefficients raise :class:`RealizabilityError`.
    """
    c = np.asarray(integer_moments, dtype=float)
    if c.ndim != 1 or c.size < 2 or c.size % 2:
        raise ValueError(f"need an even number (>= 2) of moments, got {c.size}")
    if c[0] <= 0.0:
        raise RealizabilityError(f"zeroth moment must be positive, got {c[0]}")
    lo, hi = interval
    n = c.size // 2
    zetas = pd_zetas(c / c[0])
    n_eff = n
    for k in range(2, 2 * n + 1):
        z = zetas[k - 2]
        if not z > ZETA_TOL:
            if np.isfinite(z) and z < -ZETA_TOL:
                raise RealizabilityError(
                    f"moment sequence not realizable (zeta_{k} = {z:.3e} < 0)"
                )
            n_eff = (k - 1) // 2
            break
    if n_eff == 0:
        raise RealizabilityError("degenerate moment sequence (no support points)")
    if n_eff < n:
        if _warn:
            warnings.warn(
                f"near-boundary moment sequence: using {n_eff} nodes instead "
                f"of {n}", DegenerateMomentWarning, stacklevel=2,
            )
        return pd_inversion(c[: 2 * n_eff], interval, _warn=False)
    nodes, weights = _jacobi_nodes_weights(zetas, n)
    weights = weights * c[0]
    # Gauss nodes of a measure on [lo,hi] lie inside the support hull; allow
    # only roundoff excursions.
    excursion = max(lo - nodes.min(), nodes.max() - hi, 0.0)
    if excursion > 1e-9 * (hi - lo):
        raise RealizabilityError(
            f"nodes {nodes} leave the interval [{lo}, {hi}]; moments are not "
            "realizable on it"
        )
    return QuadratureRule(np.clip(nodes, lo, hi), weights, (float(lo), float(hi)))


def lower_principal_rep_fractional(
    m_pos, m_neg, nq_minus: int, s_min: float = 0.0, s_max: float = 1.0
) -> PrincipalRepresentation:
    """Lower principal representation of fractional moments with negative orders.

    ``m_pos`` holds the four moments of order 0, 1/2, 1, 3/2 of a measure on
    [s_min, s_max]; ``m_neg[i]`` is the moment of order -(i+1)/2 (so
    ``2 * nq_minus`` entries).  Works in the radius variable: the combined
    sequence, read lowest order first, is the integer moment sequence of the
    measure 2r*n(r^2)/r^(2*nq_minus) on [sqrt(s_min), sqrt(s_max)].  After PD
    inversion of that sequence the size nodes and weights are recovered as
    S_j = r_j^2 and w_j = w'_j * r_j^(2*nq_minus), the unique mapping under
    which sum_j w_j S_j^(l/2) reproduces every matched moment, l = -2*nq_minus..3.
    """
    m_pos = np.asarray(m_pos, dtype=float)
    m_neg = np.asarray(m_neg, dtype=float)
    if m_pos.shape != (4,):
        raise ValueError(f"expected 4 positive-order moments, got {m_pos.shape}")
    if m_neg.shape != (2 * nq_minus,):
        raise ValueError(
            f"expected {2 * nq_minus} negative-order moments, got {m_neg.shape}"
        )
    if nq_minus > 0 and not s_min > 0.0:
        raise ValueError("negative-order moments require s_min > 0")
    c = np.concatenate([m_neg[::-1], m_pos])
    r_lo = np.sqrt(s_min)
    r_hi = np.sqrt(s_max)
    rule = pd_inversion(c, (r_lo, r_hi))
    r = rule.nodes
    weights = rule.weights * r ** (2 * nq_minus)
    orders = tuple(l / 2.0 for l in range(-2 * nq_minus, 4))
    return PrincipalRepresentation(r ** 2, weights, orders)


# ---------------------------------------------------------------------------
# geometric interface variables
# ---------------------------------------------------------------------------

def geometric_outputs(m: MomentVector) -> GeometricOutputs:
    """Interface-geometry variables carried by the fractional moments.

    Gauss-curvature density 4*pi*m0, mean-curvature density
    2*sqrt(pi)*m_{1/2}, interface-area density m_1 and volume fraction
    m_{3/2}/(6*sqrt(pi)).
    """
    if not m.basis.is_fractional:
        raise UnsupportedBasisError(
            "geometric outputs are defined on the fractional basis only; "
            "the integer-basis volume fraction goes through the maximum-"
            "entropy reconstruction"
        )
    v = m.values
    return GeometricOutputs(
        gauss_curvature_density=4.0 * np.pi * v[0],
        mean_curvature_density=2.0 * np.sqrt(np.pi) * v[1],
        surface_density=v[2],
        volume_fraction=v[3] / (6.0 * np.sqrt(np.pi)),
    )
