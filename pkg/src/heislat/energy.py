"""Thickened scaled lattice, the smoothed probability measure supported on
it, and Monte-Carlo estimation of the energy integrals  iint |x-y|^{-t} dmu dmu.

The measure lives on the union of small boxes of size q^{-tau} x ... x
q^{-tau} x q^{-a-tau} centered at the scaled lattice points
(b_1/q^a, ..., b_{2n}/q^a, b_D/q^{2a}), b in the unsigned truncated lattice,
with a = D/(D+1).  The density is a weighted sum of product bumps; all the
normalization is folded into a single constant so the total mass is 1.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad

__all__ = [
    "ThickLattice",
    "SmoothedMeasure",
    "EnergyEstimate",
    "psi0",
    "build_thick_lattice",
    "build_smoothed_measure",
    "mu_density",
    "energy_integral_mc",
    "energy_all_pairs",
]

_BATCH = 1 << 16
_PSI0_MAX = math.exp(-1.0)


def psi0(t):
    """The standard mollifier exp(-1/(1-t^2)) on (-1, 1), zero outside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out if out.ndim else float(out)


_PSI0_INT = quad(lambda t: math.exp(-1.0 / (1.0 - t * t)), -1.0, 1.0, epsrel=1e-12)[0]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HEISLAT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ThickLattice:
    """The union of ~q^D congruent boxes around the scaled lattice points."""

    q: float
    n: int
    tau: float
    centers: np.ndarray = field(repr=False, compare=False)  # (M, D)

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("q must be >= 2")
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.tau <= self.a:
            raise ValueError(f"tau must exceed a = D/(D+1) = {self.a}")

    @property
    def D(self) -> int:
        return 2 * self.n + 1

    @property
    def a(self) -> float:
        D = 2 * self.n + 1
        return D / (D + 1)

    @property
    def cell_count(self) -> int:
        return self.centers.shape[0]

    @property
    def cell_dims(self) -> np.ndarray:
        """Half-widths of the bump supports: q^-tau horizontally, q^-(a+tau)
        vertically."""
        h = self.q**-self.tau
        return np.array([h] * (2 * self.n) + [self.q ** -(self.a + self.tau)])

    @property
    def cell_volume(self) -> float:
        return self.q ** (-self.D * self.tau - self.a)


def build_thick_lattice(q: float, tau: float, n: int) -> ThickLattice:
    """Enumerate all scaled cell centers (b_1/q^a, ..., b_D/q^{2a}) with
    0 <= b_i <= ceil(q^a) and 0 <= b_D <= ceil(q^{2a})."""
    D = 2 * n + 1
    a = D / (D + 1)
    hmax = math.ceil(q**a)
    vmax = math.ceil(q ** (2 * a))
    axes = [np.arange(hmax + 1) / q**a] * (2 * n) + [np.arange(vmax + 1) / q ** (2 * a)]
    grids = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([gr.ravel() for gr in grids], axis=1)
    return ThickLattice(q=float(q), n=n, tau=float(tau), centers=centers)


@dataclass(frozen=True)
class SmoothedMeasure:
    """Probability measure with density proportional to a weighted sum of
    product bumps over the lattice cells."""

    lattice: ThickLattice
    weights: np.ndarray = field(repr=False, compare=False)  # per-cell, sum 1
    norm_const: float = 0.0  # scales the raw bump sum to a probability density

    @property
    def D(self) -> int:
        return self.lattice.D


def build_smoothed_measure(q: float, tau: float, n: int) -> SmoothedMeasure:
    lat = build_thick_lattice(q, tau, n)
    # center bumps psi0(b_i/q^a), psi0(b_D/q^{2a}) evaluated at the scaled
    # coordinates, which are exactly the stored centers
    w = np.prod(psi0(lat.centers), axis=1)
    total = w.sum()
    if total <= 0:
        raise ValueError("all cell weights vanish")
    # each normalized offset bump integrates to _PSI0_INT times its width
    widths = lat.cell_dims
    cell_mass = _PSI0_INT ** lat.D * float(np.prod(widths))
    norm_const = 1.0 / (total * cell_mass)
    return SmoothedMeasure(lattice=lat, weights=w / total, norm_const=norm_const * total)


def mu_density(x, m: SmoothedMeasure) -> float:
    """Evaluate the probability density of the smoothed measure at a point."""
    x = np.asarray(x, dtype=float)
    lat = m.lattice
    if x.shape != (lat.D,):
        raise ValueError(f"point must have dimension {lat.D}")
    inv = 1.0 / lat.cell_dims
    rel = (x[None, :] - lat.centers) * inv[None, :]
    near = np.all(np.abs(rel) < 1.0, axis=1)
    if not near.any():
        return 0.0
    vals = np.prod(psi0(rel[near]), axis=1)
    return float(m.norm_const * (m.weights[near] * vals).sum())


def _sample_bump(rng, size: int) -> np.ndarray:
    """Draw from the density psi0/int(psi0) on (-1, 1) by rejection."""
    out = np.empty(size)
    have = 0
    while have < size:
        need = size - have
        # acceptance rate is int(psi0) / (2/e) ~ 0.6; oversample a bit
        prop = rng.uniform(-1.0, 1.0, int(need * 1.8) + 16)
        u = rng.uniform(0.0, _PSI0_MAX, prop.size)
        acc = prop[u < psi0(prop)]
        take = min(need, acc.size)
        out[have : have + take] = acc[:take]
        have += take
    return out


def _sample_points(rng, m: SmoothedMeasure, count: int) -> np.ndarray:
    lat = m.lattice
    idx = rng.choice(lat.cell_count, size=count, p=m.weights)
    pts = lat.centers[idx].copy()
    for j in range(lat.D):
        pts[:, j] += lat.cell_dims[j] * _sample_bump(rng, count)
    return pts


@dataclass(frozen=True)
class EnergyEstimate:
    t: float
    value: float
    stderr: float
    N: int
    seed: int

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("energy estimate must be positive")


def _energy_batch(m: SmoothedMeasure, t: float, count: int, seed: int, index: int):
    rng = np.random.default_rng(np.random.SeedSequence((seed, index)))
    x = _sample_points(rng, m, count)
    y = _sample_points(rng, m, count)
    d = np.linalg.norm(x - y, axis=1)
    d = d[d > 0.0]  # exact coincidences have probability zero
    vals = d**-t if t != 0 else np.ones_like(d)
    return float(vals.sum()), float((vals * vals).sum()), vals.size


def energy_integral_mc(m: SmoothedMeasure, t: float, N: int, seed: int = 0) -> EnergyEstimate:
    """Monte-Carlo estimate of  iint |x-y|^{-t} dmu(x) dmu(y)  from N
    independent pairs.  Deterministic for a given seed at any thread count:
    fixed-size batches with per-batch RNG streams, combined in index order.
    """
    if not 0 <= t < m.D:
        raise ValueError(f"need 0 <= t < D = {m.D} for an integrable singularity")
    if N < 1000:
        raise ValueError("N must be at least 1000")
    sizes = [_BATCH] * (N // _BATCH)
    if N % _BATCH:
        sizes.append(N % _BATCH)
    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda i: _energy_batch(m, t, sizes[i], seed, i), range(len(sizes))))
    else:
        parts = [_energy_batch(m, t, sizes[i], seed, i) for i in range(len(sizes))]
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    used = sum(p[2] for p in parts)
    mean = total / used
    var = max(total_sq / used - mean * mean, 0.0) * used / max(used - 1, 1)
    stderr = math.sqrt(var / used)
    return EnergyEstimate(t=t, value=mean, stderr=stderr, N=used, seed=seed)


def energy_all_pairs(
    m: SmoothedMeasure,
    t: float,
    near_samples: int = 20000,
    seed: int = 0,
    max_cells: int = 2000,
    near_cut_mult: float = 6.0,
) -> EnergyEstimate:
    """Direct all-pairs evaluation for small q: far cell pairs contribute
    w_b w_b' |c_b - c_b'|^{-t} at the centers, while near pairs (center
    distance within a few cell widths, where the integrand varies or is
    singular) are refined by per-pair Monte Carlo over the bump offsets.
    """
    lat = m.lattice
    keep = m.weights > 0
    centers = lat.centers[keep]
    w = m.weights[keep]
    M = centers.shape[0]
    if M > max_cells:
        raise ValueError(f"{M} occupied cells; all-pairs path is meant for small q")
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    near_cut = near_cut_mult * float(np.linalg.norm(lat.cell_dims))
    near = dist < near_cut
    ww = w[:, None] * w[None, :]

    far = ~near
    far_sum = float((ww[far] * dist[far] ** -t).sum()) if far.any() else 0.0

    ii, jj = np.nonzero(near)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x9E3779B9)))
    offs_x = np.stack([lat.cell_dims[k] * _sample_bump(rng, near_samples) for k in range(lat.D)], axis=1)
    offs_y = np.stack([lat.cell_dims[k] * _sample_bump(rng, near_samples) for k in range(lat.D)], axis=1)
    delta = offs_x - offs_y  # shared offset draws across pairs (common random numbers)
    near_sum = 0.0
    near_var = 0.0
    for i, j in zip(ii.tolist(), jj.tolist()):
        d = np.linalg.norm(centers[i] - centers[j] + delta, axis=1)
        d = d[d > 0.0]
        vals = d**-t if t != 0 else np.ones_like(d)
        mu = float(vals.mean())
        near_sum += ww[i, j] * mu
        near_var += (ww[i, j] ** 2) * float(vals.var(ddof=1)) / vals.size
    return EnergyEstimate(
        t=t, value=far_sum + near_sum, stderr=math.sqrt(near_var), N=near_samples, seed=seed
    )
