"""Exact construction of the bordered mixed-Hessian matrix of the sphere's
defining function, its factorization through the one-variable matrix N(Psi),
the structured-inverse formula, and automated verification of the rank
dichotomy (full rank for alpha in {2, 4}; rank drop by exactly one on the
equator for alpha >= 6).

Throughout, Phi(x, y) = phi_alpha(x, y)^alpha and Psi(z) = ||z||_alpha^alpha,
so Phi(x, y) = Psi(theta(x, y)) with theta the group translation map.  All
exact paths work over Fractions; A denotes the gauge constant C_alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    GaugeParams,
    HPoint,
    dilate,
    group_inv,
    group_mul,
    norm_alpha,
    phi_alpha,
)
from .exactlinalg import det_exact, identity, mat_mul, mat_vec, rank_exact, rank_tolerant

__all__ = [
    "MAMatrix",
    "StructuredMatrixParams",
    "RankReport",
    "theta",
    "grad_Phi",
    "n_psi_matrix",
    "n_psi_submatrix",
    "monge_ampere_matrix",
    "matrix_rank",
    "structured_inverse",
    "structured_inverse_apply_w",
    "x_functional",
    "verify_rank_proposition",
]


@dataclass(frozen=True)
class MAMatrix:
    """Square exact-rational matrix with a provenance tag."""

    order: int
    entries: Tuple[Tuple[Fraction, ...], ...]
    provenance: str

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], provenance: str) -> "MAMatrix":
        ent = tuple(tuple(Fraction(v) for v in row) for row in rows)
        order = len(ent)
        if any(len(r) != order for r in ent):
            raise ValueError("matrix must be square")
        return cls(order, ent, provenance)

    def rows(self) -> List[List[Fraction]]:
        return [list(r) for r in self.entries]

    def det(self) -> Fraction:
        return det_exact(self.entries)


@dataclass(frozen=True)
class StructuredMatrixParams:
    """Parameters of sigma*I + lambda*w*w^T + kappa*J on R^2n."""

    sigma: Fraction
    lam: Fraction
    kappa: Fraction
    w: Tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma", Fraction(self.sigma))
        object.__setattr__(self, "lam", Fraction(self.lam))
        object.__setattr__(self, "kappa", Fraction(self.kappa))
        object.__setattr__(self, "w", tuple(Fraction(v) for v in self.w))
        if len(self.w) % 2 != 0 or len(self.w) == 0:
            raise ValueError("w must have even positive length 2n")

    @property
    def d(self) -> int:
        return len(self.w)

    def wsq(self) -> Fraction:
        return sum((v * v for v in self.w), Fraction(0))

    def matrix(self) -> List[List[Fraction]]:
        d = self.d
        n = d // 2
        m = [[Fraction(0)] * d for _ in range(d)]
        for i in range(d):
            m[i][i] = self.sigma
        for i in range(d):
            for j in range(d):
                m[i][j] += self.lam * self.w[i] * self.w[j]
        for i in range(n):
            m[i][n + i] += self.kappa
            m[n + i][i] -= self.kappa
        return m


@dataclass(frozen=True)
class RankReport:
    alpha: int
    n: int
    t: Fraction
    seed: int
    off_equator_count: int
    off_equator_all_nonzero: bool
    off_equator_min_abs_det: float
    equator_count: int
    equator_ranks: Tuple[int, ...]
    gradient_nonzero: bool

    @property
    def passed(self) -> bool:
        D = 2 * self.n + 1
        ok = self.gradient_nonzero and self.off_equator_all_nonzero
        if self.equator_count:
            ok = ok and all(r == D for r in self.equator_ranks)
        return ok

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "n": self.n,
            "t": str(self.t),
            "seed": self.seed,
            "off_equator": {
                "count": self.off_equator_count,
                "all_determinants_nonzero": self.off_equator_all_nonzero,
                "min_abs_det": self.off_equator_min_abs_det,
            },
            "equator": {
                "count": self.equator_count,
                "ranks": sorted(set(self.equator_ranks)),
            },
            "gradient_nonzero": self.gradient_nonzero,
            "passed": self.passed,
        }


def theta(x: HPoint, y: HPoint) -> HPoint:
    """Group translation map x * y^-1; Psi(theta(x, y)) = Phi(x, y)."""
    return group_mul(x, group_inv(y))


def _sym_mat(n: int) -> List[List[Fraction]]:
    """The standard 2n x 2n symplectic matrix J."""
    d = 2 * n
    m = [[Fraction(0)] * d for _ in range(d)]
    for i in range(n):
        m[i][n + i] = Fraction(1)
        m[n + i][i] = Fraction(-1)
    return m


def _jvec(v: Sequence) -> List:
    """J v for the standard symplectic J."""
    n = len(v) // 2
    return [v[n + i] for i in range(n)] + [-v[i] for i in range(n)]


def _powq(base, e: int):
    """base**e with the 0**0 = 1 convention; rejects 0**negative."""
    if e == 0:
        return base * 0 + 1
    if base == 0 and e < 0:
        raise ZeroDivisionError("0 raised to a negative power")
    return base**e


def _psi_derivs(z: HPoint, g: GaugeParams):
    """(grad_2n Psi, Psi'_D, Hess_2n Psi, Psi''_DD) at z, exact.

    The vertical part A|zbar|^(alpha/2) is differentiated with an explicit
    sign factor; for alpha >= 4 the values continue through zbar = 0, while
    alpha = 2 has a jump in Psi'_D there and is rejected exactly at 0.
    """
    alpha, A = g.alpha, g.C_alpha
    zb = Fraction(z.vert)
    s = 1 if zb >= 0 else -1
    az = abs(zb)
    if alpha == 2 and zb == 0:
        raise ValueError("alpha = 2 has a non-differentiable vertical part at zbar = 0")
    hsq = sum((Fraction(c) * Fraction(c) for c in z.horiz), Fraction(0))
    d = 2 * g.n

    grad = [alpha * _powq(hsq, (alpha - 2) // 2) * Fraction(c) for c in z.horiz]
    psi_d = Fraction(A * alpha, 2) * s * _powq(az, (alpha - 2) // 2)

    hess = [[Fraction(0)] * d for _ in range(d)]
    c1 = alpha * (alpha - 2)
    c1pow = _powq(hsq, (alpha - 4) // 2) if c1 != 0 else Fraction(0)
    c2 = alpha * _powq(hsq, (alpha - 2) // 2)
    for i in range(d):
        for j in range(d):
            hess[i][j] = c1 * c1pow * Fraction(z.horiz[i]) * Fraction(z.horiz[j])
        hess[i][i] += c2
    if alpha == 2:
        psi_dd = Fraction(0)
    else:
        psi_dd = Fraction(A * alpha * (alpha - 2), 4) * _powq(az, (alpha - 4) // 2)
    return grad, psi_d, hess, psi_dd


def grad_Phi(x: HPoint, y: HPoint, g: GaugeParams):
    """Closed-form gradients (grad_x Phi, grad_y Phi) via the chain rule
    through Psi at z = theta(x, y)."""
    z = theta(x, y)
    grad, psi_d, _, _ = _psi_derivs(z, g)
    jy = _jvec([Fraction(c) for c in y.horiz])
    jx = _jvec([Fraction(c) for c in x.horiz])
    half = Fraction(1, 2)
    gx = [grad[i] - half * psi_d * jy[i] for i in range(len(grad))] + [psi_d]
    gy = [-grad[i] + half * psi_d * jx[i] for i in range(len(grad))] + [-psi_d]
    return gx, gy


def n_psi_matrix(z: HPoint, g: GaugeParams) -> MAMatrix:
    """The (D+1) x (D+1) matrix N(Psi)(z): bordered Hessian of Psi with the
    symplectic correction (1/2) Psi'_D J added to the horizontal block."""
    grad, psi_d, hess, psi_dd = _psi_derivs(z, g)
    d = 2 * g.n
    P = [row[:] for row in hess]
    half = Fraction(1, 2)
    jm = _sym_mat(g.n)
    for i in range(d):
        for j in range(d):
            P[i][j] += half * psi_d * jm[i][j]
    rows = [[Fraction(0)] + grad + [psi_d]]
    for i in range(d):
        rows.append([grad[i]] + P[i] + [Fraction(0)])
    rows.append([psi_d] + [Fraction(0)] * d + [psi_dd])
    return MAMatrix.from_rows(rows, "direct")


def n_psi_submatrix(zh: Sequence, g: GaugeParams) -> MAMatrix:
    """The order-D minor used on the equator (zbar = 0): bordered Hessian of
    |z_|^alpha in the horizontal variables only."""
    z = HPoint(tuple(Fraction(c) for c in zh), Fraction(0))
    if g.alpha < 4:
        raise ValueError("equator submatrix is used for alpha >= 4")
    grad, _, hess, _ = _psi_derivs(z, g)
    d = 2 * g.n
    rows = [[Fraction(0)] + grad]
    for i in range(d):
        rows.append([grad[i]] + hess[i])
    return MAMatrix.from_rows(rows, "submatrix")


def _seam_check(z: HPoint, g: GaugeParams):
    if g.alpha >= 6 and g.alpha % 4 == 2 and Fraction(z.vert) == 0:
        raise ValueError(
            "second derivatives sit on the piecewise seam zbar = 0 for "
            "alpha = 2 mod 4; use the equator submatrix instead"
        )


def monge_ampere_matrix(x: HPoint, y: HPoint, g: GaugeParams, mode: str = "direct") -> MAMatrix:
    """The (D+1) x (D+1) bordered mixed-Hessian matrix of Phi at (x, y).

    'direct' differentiates Phi(x, y) = |x_ - y_|^alpha + A|v|^(alpha/2)
    (v the twisted vertical difference) entry by entry; 'factorized'
    computes L . N(Psi)(theta(x, y)) . R with unit-triangular-type factors.
    The two paths agree entrywise.
    """
    if mode not in ("direct", "factorized"):
        raise ValueError("mode must be 'direct' or 'factorized'")
    z = theta(x, y)
    _seam_check(z, g)
    d = 2 * g.n
    half = Fraction(1, 2)
    xh = [Fraction(c) for c in x.horiz]
    yh = [Fraction(c) for c in y.horiz]
    jx, jy = _jvec(xh), _jvec(yh)

    if mode == "factorized":
        N = n_psi_matrix(z, g).rows()
        L = identity(d + 2)
        R = identity(d + 2)
        for i in range(d):
            L[1 + i][d + 1] = -half * jy[i]
            R[1 + i][1 + i] = Fraction(-1)
            R[d + 1][1 + i] = half * jx[i]
        R[d + 1][d + 1] = Fraction(-1)
        return MAMatrix.from_rows(mat_mul(mat_mul(L, N), R), "factorized")

    # direct differentiation of the explicit two-term formula
    grad, psi_d, hess, psi_dd = _psi_derivs(z, g)
    gx = [grad[i] - half * psi_d * jy[i] for i in range(d)] + [psi_d]
    gy = [-grad[i] + half * psi_d * jx[i] for i in range(d)] + [-psi_d]
    jm = _sym_mat(g.n)
    rows = [[Fraction(0)] + gy]
    for i in range(d):
        row = [gx[i]]
        for j in range(d):
            row.append(
                -hess[i][j]
                - Fraction(1, 4) * psi_dd * jy[i] * jx[j]
                - half * psi_d * jm[i][j]
            )
        row.append(half * psi_dd * jy[i])
        rows.append(row)
    last = [gx[d]] + [half * psi_dd * jx[j] for j in range(d)] + [-psi_dd]
    rows.append(last)
    return MAMatrix.from_rows(rows, "direct")


def matrix_rank(m: MAMatrix, mode: str = "exact", eps_rel: float = 1e-9) -> int:
    if mode == "exact":
        return rank_exact(m.entries)
    if mode == "tolerant":
        return rank_tolerant(m.entries, eps_rel)
    raise ValueError("mode must be 'exact' or 'tolerant'")


def _structured_denoms(p: StructuredMatrixParams) -> Tuple[Fraction, Fraction]:
    d1 = p.sigma * p.sigma + p.kappa * p.kappa
    d2 = d1 + p.sigma * p.lam * p.wsq()
    if d1 == 0 or d2 == 0:
        raise ZeroDivisionError("singular parameters: sigma^2 + kappa^2 or sigma^2 + kappa^2 + sigma lambda |w|^2 vanishes")
    return d1, d2


def structured_inverse(p: StructuredMatrixParams) -> MAMatrix:
    """Closed-form exact inverse of sigma*I + lambda*w*w^T + kappa*J."""
    d1, d2 = _structured_denoms(p)
    d = p.d
    n = d // 2
    sigma, lam, kappa, w = p.sigma, p.lam, p.kappa, list(p.w)
    jw = _jvec(w)
    m = [[Fraction(0)] * d for _ in range(d)]
    for i in range(d):
        m[i][i] = sigma
    for i in range(n):
        m[i][n + i] -= kappa
        m[n + i][i] += kappa
    cA = -sigma * lam / d2
    cB = lam * kappa / d2
    for i in range(d):
        for j in range(d):
            m[i][j] += cA * (sigma * w[i] * w[j] - kappa * jw[i] * w[j])
            m[i][j] += cB * (-sigma * w[i] * jw[j] + kappa * jw[i] * jw[j])
    for i in range(d):
        for j in range(d):
            m[i][j] /= d1
    return MAMatrix.from_rows(m, "direct")


def structured_inverse_apply_w(p: StructuredMatrixParams) -> List[Fraction]:
    """(sigma*I + lambda*w*w^T + kappa*J)^-1 w in closed form:
    (sigma*I - kappa*J) w / (sigma^2 + sigma lambda |w|^2 + kappa^2)."""
    _, d2 = _structured_denoms(p)
    w = list(p.w)
    jw = _jvec(w)
    return [(p.sigma * w[i] - p.kappa * jw[i]) / d2 for i in range(p.d)]


def _structured_params_at(z: HPoint, g: GaugeParams) -> StructuredMatrixParams:
    """The (sigma, lambda, kappa, w) instantiation making the horizontal
    block of N(Psi)(z) equal sigma*I + lambda*w*w^T + kappa*J."""
    alpha, A = g.alpha, g.C_alpha
    zb = abs(Fraction(z.vert))
    hsq = sum((Fraction(c) * Fraction(c) for c in z.horiz), Fraction(0))
    sigma = alpha * _powq(hsq, (alpha - 2) // 2)
    if alpha == 2:
        lam = Fraction(0)
    else:
        lam = alpha * (alpha - 2) * _powq(hsq, (alpha - 4) // 2)
    kappa = Fraction(A * alpha, 4) * _powq(zb, (alpha - 2) // 2)
    return StructuredMatrixParams(sigma, lam, kappa, tuple(Fraction(c) for c in z.horiz))


def x_functional(z: HPoint, g: GaugeParams) -> Fraction:
    """The strictly positive scalar controlling det N(Psi):

    off the equator, alpha^3 |z_|^(3 alpha - 4) / (sigma^2 + sigma lambda
    |z_|^2 + kappa^2) + A alpha/(alpha - 2) * |zbar|^(alpha/2); on the
    equator (zbar = 0) only the first term with kappa = 0 survives.
    """
    alpha, A = g.alpha, g.C_alpha
    if alpha < 4:
        raise ValueError("the functional is defined for alpha >= 4")
    zb = abs(Fraction(z.vert))
    hsq = sum((Fraction(c) * Fraction(c) for c in z.horiz), Fraction(0))
    if hsq == 0 and zb == 0:
        raise ValueError("z must be nonzero")
    sigma = alpha * _powq(hsq, (alpha - 2) // 2)
    lam = alpha * (alpha - 2) * _powq(hsq, (alpha - 4) // 2) if hsq > 0 else Fraction(0)
    kappa = Fraction(0) if zb == 0 else Fraction(A * alpha, 4) * _powq(zb, (alpha - 2) // 2)
    first = Fraction(0)
    if hsq > 0:
        denom = sigma * sigma + sigma * lam * hsq + kappa * kappa
        first = alpha**3 * _powq(hsq, (3 * alpha - 4) // 2) / denom
    second = Fraction(A * alpha, alpha - 2) * _powq(zb, alpha // 2) if zb > 0 else Fraction(0)
    return first + second


def _rand_fraction(rng, lo=-9, hi=9, max_den=9) -> Fraction:
    return Fraction(int(rng.integers(lo, hi + 1)), int(rng.integers(1, max_den + 1)))


def _rand_point(rng, n: int) -> HPoint:
    return HPoint(tuple(_rand_fraction(rng) for _ in range(2 * n)), _rand_fraction(rng))


def _level_set_point(rng, g: GaugeParams, t: Fraction) -> HPoint:
    """Random rational z near the level set ||z||_alpha = t, off the equator.

    Degree-one homogeneity lets us rescale a random seed point by dilation;
    the scale is a rational approximation of t/||w||, so the level is hit to
    ~1e-12 relative while all coordinates stay exact rationals.
    """
    while True:
        w = _rand_point(rng, g.n)
        if any(c != 0 for c in w.horiz) and w.vert != 0:
            break
    s = float(t) / norm_alpha(w, g)
    return dilate(Fraction(s).limit_denominator(10**12), w)


def _equator_point(rng, g: GaugeParams, t: Fraction) -> HPoint:
    """Exact rational point with zbar = 0 and |z_| = t exactly, via the
    stereographic parameterization of the unit sphere."""
    d = 2 * g.n
    while True:
        a = [_rand_fraction(rng) for _ in range(d - 1)]
        asq = sum((v * v for v in a), Fraction(0))
        u = [2 * v / (asq + 1) for v in a] + [(asq - 1) / (asq + 1)]
        if any(v != 0 for v in u):
            break
    return HPoint(tuple(Fraction(t) * v for v in u), Fraction(0))


def verify_rank_proposition(
    g: GaugeParams,
    t: Fraction,
    samples: int,
    seed: int = 0,
    equator_samples: Optional[int] = None,
) -> RankReport:
    """Sample point pairs on the level set phi_alpha(x, y) = t and check the
    rank dichotomy exactly.

    For alpha in {2, 4}: det M(Phi) != 0 at every sample.  For alpha >= 6:
    det != 0 off the equator, and on the equator (vertical component of
    theta(x, y) exactly zero) rank M(Phi) = D with det of the order-D
    equator minor nonzero.
    """
    t = Fraction(t)
    if t <= 0:
        raise ValueError("t must be positive")
    if equator_samples is None:
        equator_samples = samples if g.alpha >= 6 else 0
    if g.alpha < 6:
        equator_samples = 0

    grad_ok = True
    off_ok = True
    min_abs = math.inf
    for i in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        z = _level_set_point(rng, g, t)
        y = _rand_point(rng, g.n)
        x = group_mul(z, y)
        rel = abs(phi_alpha(x, y, g) - float(t)) / float(t)
        if rel > 1e-10:
            raise RuntimeError(f"sample {i} missed the level set (relative error {rel})")
        gx, gy = grad_Phi(x, y, g)
        if all(v == 0 for v in gx) or all(v == 0 for v in gy):
            grad_ok = False
        det = monge_ampere_matrix(x, y, g, mode="factorized").det()
        if det == 0:
            off_ok = False
        else:
            min_abs = min(min_abs, abs(float(det)))

    ranks = []
    D = g.D
    for i in range(equator_samples):
        rng = np.random.default_rng(np.random.SeedSequence((seed, samples + i, 1)))
        z = _equator_point(rng, g, t)
        sub = n_psi_submatrix(z.horiz, g)
        full = n_psi_matrix(z, g)
        if det_exact(sub.entries) == 0:
            ranks.append(-1)
        else:
            ranks.append(rank_exact(full.entries))
        gz, psi_d, _, _ = _psi_derivs(z, g)
        if all(v == 0 for v in gz) and psi_d == 0:
            grad_ok = False

    return RankReport(
        alpha=g.alpha,
        n=g.n,
        t=t,
        seed=seed,
        off_equator_count=samples,
        off_equator_all_nonzero=off_ok,
        off_equator_min_abs_det=(min_abs if min_abs is not math.inf else 0.0),
        equator_count=equator_samples,
        equator_ranks=tuple(ranks),
        gradient_nonzero=grad_ok,
    )
