"""Exact counting of lattice points in delta-shells of gauge spheres.

Two counters are provided: a brute-force oracle that tests every lattice
point, and a fast slice counter that enumerates horizontal coordinates and
solves for the admissible vertical range in closed form.  Both decide shell
membership |phi_alpha(u, v) - Q| <= delta bit-exactly via the 2^alpha-scaled
integer form of phi_alpha^alpha, so they must agree point for point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .core import GaugeParams, HPoint, scaled_gauge_constant, symplectic_form

__all__ = [
    "LatticeSpec",
    "ShellQuery",
    "ShellCount",
    "Sampling",
    "naive_shell_count",
    "fast_shell_count",
    "averaged_shell_count",
    "theorem_bound",
    "counting_lemma_bound",
    "fit_scaling_exponent",
    "unit_ball_volume",
    "ball_lattice_count",
    "fixed_center_error_term",
    "exact_rational_power",
]

NAIVE_SIZE_GUARD = 10**8
_INT64_SAFE = 2**62


def _ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _iroot(m: int, k: int) -> Optional[int]:
    """Exact k-th root of a nonnegative integer, or None."""
    if m < 0:
        return None
    if m in (0, 1) or k == 1:
        return m
    r = round(m ** (1.0 / k))
    for cand in range(max(r - 2, 0), r + 3):
        if cand**k == m:
            return cand
    return None


def exact_rational_power(x: Fraction, e: Fraction) -> Optional[Fraction]:
    """x**e as an exact Fraction when it is rational, else None (x > 0)."""
    x = Fraction(x)
    e = Fraction(e)
    if x <= 0:
        raise ValueError("base must be positive")
    if e < 0:
        x, e = 1 / x, -e
    num, den = e.numerator, e.denominator
    p, q = x.numerator**num, x.denominator**num
    rp, rq = _iroot(p, den), _iroot(q, den)
    if rp is None or rq is None:
        return None
    return Fraction(rp, rq)


@dataclass(frozen=True)
class LatticeSpec:
    """Truncated lattice: |b_i| <= ceil(cQ) horizontally and
    |b_D| <= ceil(cQ^2) vertically (signed mode), or the one-sided
    0 <= b_i variant (unsigned mode)."""

    n: int
    Q: Fraction
    c: Fraction = Fraction(1)
    signed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "Q", Fraction(self.Q))
        object.__setattr__(self, "c", Fraction(self.c))
        if self.n < 1 or self.Q <= 0 or self.c <= 0:
            raise ValueError("n, Q, c must be positive")

    @property
    def D(self) -> int:
        return 2 * self.n + 1

    @property
    def horiz_bound(self) -> int:
        return _ceil_frac(self.c * self.Q)

    @property
    def vert_bound(self) -> int:
        return _ceil_frac(self.c * self.Q * self.Q)

    @property
    def size(self) -> int:
        if self.signed:
            return (2 * self.horiz_bound + 1) ** (2 * self.n) * (2 * self.vert_bound + 1)
        return (self.horiz_bound + 1) ** (2 * self.n) * (self.vert_bound + 1)

    def axis_sizes(self) -> List[int]:
        if self.signed:
            return [2 * self.horiz_bound + 1] * (2 * self.n) + [2 * self.vert_bound + 1]
        return [self.horiz_bound + 1] * (2 * self.n) + [self.vert_bound + 1]

    def point_at(self, index: int) -> HPoint:
        """Mixed-radix unranking of the lattice point with the given index."""
        sizes = self.axis_sizes()
        digits = []
        for s in reversed(sizes):
            index, d = divmod(index, s)
            digits.append(d)
        digits.reverse()
        off_h = self.horiz_bound if self.signed else 0
        off_v = self.vert_bound if self.signed else 0
        coords = [d - off_h for d in digits[:-1]] + [digits[-1] - off_v]
        return HPoint(tuple(coords[:-1]), coords[-1])

    def contains(self, x: HPoint) -> bool:
        hb, vb = self.horiz_bound, self.vert_bound
        if self.signed:
            return all(abs(c) <= hb for c in x.horiz) and abs(x.vert) <= vb
        return all(0 <= c <= hb for c in x.horiz) and 0 <= x.vert <= vb


@dataclass(frozen=True)
class ShellQuery:
    """A shell-counting request: gauge, truncated lattice, radius Q and
    thickness delta (both exact rationals)."""

    gauge: GaugeParams
    lattice: LatticeSpec
    Q: Fraction
    delta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "Q", Fraction(self.Q))
        object.__setattr__(self, "delta", Fraction(self.delta))
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.delta >= self.Q:
            raise ValueError("delta must be smaller than Q")
        if self.gauge.n != self.lattice.n:
            raise ValueError("gauge and lattice disagree on n")

    @classmethod
    def standard(cls, n, alpha, Q, delta, C_alpha=Fraction(16), c=Fraction(1), signed=True):
        g = GaugeParams(n=n, alpha=alpha, C_alpha=Fraction(C_alpha))
        lat = LatticeSpec(n=n, Q=Fraction(Q), c=Fraction(c), signed=signed)
        return cls(g, lat, Fraction(Q), Fraction(delta))

    @classmethod
    def counting_lemma(cls, n, alpha, q, tau, C_alpha=Fraction(16), c=Fraction(1)):
        """(q, tau) parameterization: a = D/(D+1), Q = q^a, delta = q^(a-tau).

        Q and delta must come out rational (e.g. q a power of 2^(D+1) with
        tau a multiple of 1/(D+1)); the exact counters refuse irrational
        shell endpoints.
        """
        D = 2 * n + 1
        a = Fraction(D, D + 1)
        q = Fraction(q)
        tau = Fraction(tau)
        if q < 2:
            raise ValueError("q must be >= 2")
        if tau <= a:
            raise ValueError("counting-lemma mode requires tau > a = D/(D+1)")
        Q = exact_rational_power(q, a)
        delta = exact_rational_power(q, a - tau)
        if Q is None or delta is None:
            raise ValueError(
                "q^a or q^(a-tau) is irrational; pick q, tau making both "
                "rational so shell membership stays exact"
            )
        g = GaugeParams(n=n, alpha=alpha, C_alpha=Fraction(C_alpha))
        lat = LatticeSpec(n=n, Q=Q, c=Fraction(c), signed=False)
        return cls(g, lat, Q, delta)


@dataclass(frozen=True)
class Sampling:
    """Center sampling mode for the averaged count."""

    mode: str = "exhaustive"
    N: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "random"):
            raise ValueError("mode must be 'exhaustive' or 'random'")
        if self.mode == "random" and self.N < 30:
            raise ValueError("random sampling needs N >= 30")

    @classmethod
    def random(cls, N: int, seed: int = 0) -> "Sampling":
        return cls("random", N, seed)


@dataclass(frozen=True)
class ShellCount:
    raw_count: int
    normalized: float
    centers_used: int
    sampling: Sampling
    stderr: float = 0.0


class _QueryContext:
    """Precomputed exact bounds and lattice grids for one query."""

    def __init__(self, query: ShellQuery):
        g, lat = query.gauge, query.lattice
        self.query = query
        self.alpha = g.alpha
        self.h = g.alpha // 2
        self.cscaled = scaled_gauge_constant(g)
        self.n = g.n
        self.M1 = lat.horiz_bound
        self.M2 = lat.vert_bound
        self.signed = lat.signed
        up = query.Q + query.delta
        lo = query.Q - query.delta
        self.U = Fraction(2) ** g.alpha * up**g.alpha
        self.L = Fraction(2) ** g.alpha * lo**g.alpha if lo > 0 else Fraction(0)
        self.hsq_max = up * up  # horizontal prefilter: |u_ - v_|^2 <= (Q+delta)^2

        # largest |m| that can ever satisfy the upper bound (at S = 0)
        self.kcap = self._max_k(self.U.numerator, self.U.denominator) + 1

        axes = []
        for _ in range(2 * self.n):
            axes.append(np.arange(-self.M1, self.M1 + 1) if self.signed else np.arange(self.M1 + 1))
        grids = np.meshgrid(*axes, indexing="ij")
        self.vh = [a.ravel() for a in grids]  # horizontal lattice columns

    def _max_k(self, rnum: int, rden: int) -> int:
        """max k >= 0 with cscaled * k^h * rden <= rnum (or -1 if none)."""
        if rnum < 0:
            return -1
        est = int((rnum / (self.cscaled * rden)) ** (1.0 / self.h)) if rnum > 0 else 0
        k = max(est, 0)
        while self.cscaled * k**self.h * rden > rnum:
            k -= 1
            if k < 0:
                return -1
        while self.cscaled * (k + 1) ** self.h * rden <= rnum:
            k += 1
        return k

    def _min_k(self, rnum: int, rden: int) -> int:
        """min k >= 0 with cscaled * k^h * rden >= rnum."""
        if rnum <= 0:
            return 0
        est = int((rnum / (self.cscaled * rden)) ** (1.0 / self.h)) + 1
        k = max(est, 0)
        while k > 0 and self.cscaled * (k - 1) ** self.h * rden >= rnum:
            k -= 1
        while self.cscaled * k**self.h * rden < rnum:
            k += 1
        return k

    def int64_safe(self, u: HPoint) -> bool:
        smax = sum((abs(int(c)) + self.M1) ** 2 for c in u.horiz)
        mmax = 2 * (abs(int(u.vert)) + self.M2) + 2 * sum(abs(int(c)) for c in u.horiz) * self.M1
        kbig = max(self.kcap + 2, mmax + 2)
        worst = max(
            self.U.numerator + 2**self.alpha * smax**self.h * self.U.denominator,
            (self.L.numerator if self.L else 0) + 2**self.alpha * smax**self.h * self.L.denominator,
            self.cscaled * kbig**self.h * max(self.U.denominator, self.L.denominator, 1),
            self.hsq_max.numerator + smax * self.hsq_max.denominator,
        )
        return worst < _INT64_SAFE


def _count_parity(a, b, r):
    """Number of integers m in [a, b] with m % 2 == r (vectorized)."""
    cnt = (b - r) // 2 + (r - a) // 2 + 1
    return np.maximum(cnt, 0)


@lru_cache(maxsize=32)
def _context(query: ShellQuery) -> _QueryContext:
    return _QueryContext(query)


def _require_integer_center(u: HPoint, query: ShellQuery):
    if u.n != query.gauge.n:
        raise ValueError("center dimension mismatch")
    for c in u.coords():
        if isinstance(c, float) or Fraction(c).denominator != 1:
            raise TypeError("shell counting requires an integer center")


def fast_shell_count(u: HPoint, query: ShellQuery) -> int:
    """Exact #{v in L : |phi_alpha(u, v) - Q| <= delta} via slice counting.

    For each horizontal v_ the admissible vertical coordinates form at most
    two integer intervals in m = 2(uvert - v_D) + v_^T J u_; interval
    endpoints are estimated in floating point and corrected by exact integer
    boundary checks.
    """
    _require_integer_center(u, query)
    ctx = _context(query)
    dt = np.int64 if ctx.int64_safe(u) else object
    n, h, C = ctx.n, ctx.h, ctx.cscaled
    uh = [int(c) for c in u.horiz]
    uv = int(u.vert)

    vh = [col.astype(dt) for col in ctx.vh]
    S = vh[0] * 0
    for i in range(2 * n):
        d = uh[i] - vh[i]
        S = S + d * d
    # horizontal prefilter |u_ - v_|^2 <= (Q + delta)^2
    keep = S * ctx.hsq_max.denominator <= ctx.hsq_max.numerator
    if not np.any(keep):
        return 0
    S = S[keep]
    vh = [col[keep] for col in vh]

    # m0 = 2*uvert + v_^T J u_
    m0 = S * 0 + 2 * uv
    for i in range(n):
        m0 = m0 + vh[i] * uh[n + i] - vh[n + i] * uh[i]

    Sh = S**h
    two_a = 2**ctx.alpha
    RU = ctx.U.numerator - two_a * Sh * ctx.U.denominator
    RL = ctx.L.numerator - two_a * Sh * ctx.L.denominator

    # hi = max k >= 0 with C k^h <= RU / Uden  (hi = -1: no solution)
    est = np.floor(np.power(np.maximum(RU, 0).astype(float) / (C * ctx.U.denominator), 1.0 / h))
    hi = np.minimum(est, float(ctx.kcap + 1)).astype(np.int64).astype(dt)
    hi = np.where(RU < 0, -1 + 0 * hi, hi)
    while True:
        bad = (hi >= 0) & (C * hi**h * ctx.U.denominator > RU)
        if not np.any(bad):
            break
        hi = hi - bad.astype(dt)
    while True:
        grow = (C * (hi + 1) ** h * ctx.U.denominator <= RU) & (hi < ctx.kcap + 1)
        if not np.any(grow):
            break
        hi = hi + grow.astype(dt)

    # lo = min k >= 0 with C k^h >= RL / Lden
    if ctx.L == 0:
        lo = 0 * hi
    else:
        estl = np.ceil(np.power(np.maximum(RL, 0).astype(float) / (C * ctx.L.denominator), 1.0 / h))
        lo = np.minimum(np.maximum(estl, 0.0), float(ctx.kcap + 2)).astype(np.int64).astype(dt)
        lo = np.where(RL <= 0, 0 * lo, lo)
        while True:
            bad = (lo > 0) & (C * (lo - 1) ** h * ctx.L.denominator >= RL)
            if not np.any(bad):
                break
            lo = lo - bad.astype(dt)
        while True:
            grow = (C * lo**h * ctx.L.denominator < RL) & (RL > 0)
            if not np.any(grow):
                break
            lo = lo + grow.astype(dt)

    # v_D in [-M2, M2] (signed) or [0, M2]  <->  m in [mA, mB]
    if ctx.signed:
        mA = m0 - 2 * ctx.M2
        mB = m0 + 2 * ctx.M2
    else:
        mA = m0 - 2 * ctx.M2
        mB = m0
    r = m0 % 2

    c_pos = _count_parity(np.maximum(lo, mA), np.minimum(hi, mB), r)
    c_neg = _count_parity(np.maximum(-hi, mA), np.minimum(-lo, mB), r)
    c_one = _count_parity(np.maximum(-hi, mA), np.minimum(hi, mB), r)
    total = np.where(lo > 0, c_pos + c_neg, c_one)
    return int(np.sum(total))


def naive_shell_count(u: HPoint, query: ShellQuery) -> int:
    """Brute-force oracle: test every lattice point with the exact scaled
    form of phi_alpha^alpha against rational shell endpoints."""
    _require_integer_center(u, query)
    ctx = _context(query)
    if query.lattice.size > NAIVE_SIZE_GUARD:
        raise ValueError(f"lattice size {query.lattice.size} exceeds naive guard {NAIVE_SIZE_GUARD}")
    dt = np.int64 if ctx.int64_safe(u) else object
    n, h = ctx.n, ctx.h
    uh = [int(c) for c in u.horiz]
    uv = int(u.vert)

    vh = [col.astype(dt) for col in ctx.vh]
    S = vh[0] * 0
    for i in range(2 * n):
        d = uh[i] - vh[i]
        S = S + d * d
    m0h = S * 0 + 2 * uv
    for i in range(n):
        m0h = m0h + vh[i] * uh[n + i] - vh[n + i] * uh[i]
    base = 2**ctx.alpha * S**h

    vD = np.arange(-ctx.M2, ctx.M2 + 1) if ctx.signed else np.arange(ctx.M2 + 1)
    vD = vD.astype(dt)
    total = 0
    chunk = max(1, int(4e6) // max(len(S), 1))
    for start in range(0, len(vD), chunk):
        vd = vD[start : start + chunk]
        m = m0h[:, None] - 2 * vd[None, :]
        P = base[:, None] + ctx.cscaled * np.abs(m) ** h
        ok = P * ctx.U.denominator <= ctx.U.numerator
        if ctx.L > 0:
            ok &= P * ctx.L.denominator >= ctx.L.numerator
        total += int(np.sum(ok))
    return total


def _center_counts(query: ShellQuery, indices: Sequence[int], threads: int) -> List[int]:
    lat = query.lattice

    def work(chunk):
        return [fast_shell_count(lat.point_at(i), query) for i in chunk]

    if threads <= 1 or len(indices) < 2:
        return work(indices)
    chunks = np.array_split(np.asarray(indices, dtype=np.int64), threads * 4)
    out: List[List[int]] = [None] * len(chunks)  # type: ignore
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for i, res in enumerate(pool.map(work, [c.tolist() for c in chunks])):
            out[i] = res
    return [c for sub in out for c in sub]


def averaged_shell_count(query: ShellQuery, sampling: Sampling, threads: int = 1) -> ShellCount:
    """Average of fast_shell_count over lattice centers, normalized by
    Q^-(2n+2).  Random mode samples centers uniformly with replacement using
    a per-index RNG stream, so results are seed-deterministic at any thread
    count."""
    lat = query.lattice
    size = lat.size
    norm = float(query.Q) ** (-(2 * query.gauge.n + 2))
    if sampling.mode == "exhaustive":
        counts = _center_counts(query, range(size), threads)
        raw = sum(counts)
        return ShellCount(raw, raw * norm, size, sampling, 0.0)

    idx = []
    for i in range(sampling.N):
        rng = np.random.default_rng(np.random.SeedSequence((sampling.seed, i)))
        idx.append(int(rng.integers(size)))
    counts = _center_counts(query, idx, threads)
    raw = sum(counts)
    mean = raw / sampling.N
    arr = np.array(counts, dtype=float)
    std = float(arr.std(ddof=1)) if sampling.N > 1 else 0.0
    return ShellCount(
        raw,
        size * mean * norm,
        sampling.N,
        sampling,
        size * norm * std / math.sqrt(sampling.N),
    )


def theorem_bound(n: int, alpha: int, Q: float, delta: float) -> float:
    """Right-hand side of the averaged-count upper bound:
    max{Q^2n, Q^(2n+1) delta} for alpha in {2, 4} and
    max{Q^(2n+2/D), Q^(2n+1) delta} for alpha >= 6."""
    if alpha % 2 != 0 or alpha < 2:
        raise ValueError("alpha must be an even integer >= 2")
    Q, delta = float(Q), float(delta)
    if alpha in (2, 4):
        lead = Q ** (2 * n)
    else:
        lead = Q ** (2 * n + 2.0 / (2 * n + 1))
    return max(lead, Q ** (2 * n + 1) * delta)


def counting_lemma_bound(D: int, q: float, tau: float) -> float:
    """q^(D - tau), the counting-lemma form of the bound."""
    return float(q) ** (D - float(tau))


def fit_scaling_exponent(series: Iterable[Tuple[float, float]]):
    """Least-squares fit of log(count) against log(Q).

    Returns (slope, intercept, residual) with residual the RMS of the
    log-scale fit residuals.
    """
    pts = [(float(q), float(v)) for q, v in series]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(q <= 0 or v <= 0 for q, v in pts):
        raise ValueError("all entries must be positive")
    lx = np.log([q for q, _ in pts])
    ly = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((slope * lx + intercept - ly) ** 2)))
    return float(slope), float(intercept), resid


def unit_ball_volume(g: GaugeParams, epsrel: float = 1e-9) -> float:
    """Euclidean volume of the unit gauge ball by 1-D radial quadrature:
    |B_1| = omega_2n * int_0^1 r^(2n-1) * 2((1 - r^alpha)/C_alpha)^(2/alpha) dr.
    """
    n, alpha, C = g.n, g.alpha, float(g.C_alpha)
    omega = 2.0 * math.pi**n / math.factorial(n - 1)

    def integrand(r):
        return r ** (2 * n - 1) * 2.0 * ((1.0 - r**alpha) / C) ** (2.0 / alpha)

    val, err = quad(integrand, 0.0, 1.0, epsrel=epsrel, limit=200)
    if val <= 0 or err > 10 * epsrel * val + 1e-12:
        raise RuntimeError(f"quadrature did not converge (value {val}, error {err})")
    return omega * val


def ball_lattice_count(g: GaugeParams, Q: Fraction) -> int:
    """Exact #{m in Z^D : ||m||_alpha <= Q} by vertical slice counting."""
    Q = Fraction(Q)
    if Q <= 0:
        raise ValueError("Q must be positive")
    h = g.alpha // 2
    T = Q**g.alpha
    Cn, Cd = g.C_alpha.numerator, g.C_alpha.denominator
    hb = int(Q)  # |m_| <= Q
    axes = [np.arange(-hb, hb + 1)] * (2 * g.n)
    grids = np.meshgrid(*axes, indexing="ij")
    total = 0
    flat = [a.ravel() for a in grids]
    for j in range(len(flat[0])):
        S = sum(int(col[j]) ** 2 for col in flat)
        rem_num = T.numerator - S**h * T.denominator  # (T - S^h) * Tden
        if rem_num < 0:
            continue
        # max k >= 0 with Cn k^h Td <= rem_num * Cd
        rhs = rem_num * Cd
        scale = Cn * T.denominator
        est = int((rhs / scale) ** (1.0 / h)) if rhs > 0 else 0
        k = max(est, 0)
        while scale * k**h > rhs:
            k -= 1
        while scale * (k + 1) ** h <= rhs:
            k += 1
        total += 2 * k + 1
    return total


def fixed_center_error_term(g: GaugeParams, Q: Fraction) -> float:
    """|vol(B_Q) - #(B_Q cap Z^D)| for the origin-centered gauge ball."""
    count = ball_lattice_count(g, Q)
    vol = float(Fraction(Q)) ** (2 * g.n + 2) * unit_ball_volume(g)
    return abs(vol - count)
