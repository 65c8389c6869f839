import math
import os

import numpy as np
import pytest

from heislat.energy import (
    build_smoothed_measure,
    build_thick_lattice,
    energy_all_pairs,
    energy_integral_mc,
    mu_density,
    psi0,
)


def test_psi0_shape():
    assert psi0(0.0) == pytest.approx(math.exp(-1.0))
    assert psi0(1.0) == 0.0
    assert psi0(-2.0) == 0.0
    t = np.linspace(-2, 2, 101)
    v = psi0(t)
    assert (v >= 0).all() and v.max() == pytest.approx(math.exp(-1.0))


def test_thick_lattice_geometry():
    lat = build_thick_lattice(2, 1.0, 1)
    assert lat.a == 0.75 and lat.D == 3
    # cell count = (ceil(q^a)+1)^2 (ceil(q^2a)+1)
    assert lat.cell_count == (math.ceil(2**0.75) + 1) ** 2 * (math.ceil(2**1.5) + 1)
    assert lat.cell_volume == pytest.approx(2 ** (-3 * 1.0 - 0.75))
    assert lat.centers[:, :2].max() <= 1 + 2**-1.0
    lat4 = build_thick_lattice(4, 1.0, 1)
    assert lat4.cell_volume == pytest.approx(4**-3.75)


def test_thick_lattice_validation():
    with pytest.raises(ValueError):
        build_thick_lattice(1.5, 1.0, 1)
    with pytest.raises(ValueError):
        build_thick_lattice(4, 0.5, 1)  # tau <= a


def test_density_support_and_positivity():
    m = build_smoothed_measure(4, 1.2, 1)
    assert mu_density([10.0, 10.0, 10.0], m) == 0.0
    assert mu_density(m.lattice.centers[0], m) > 0.0
    # farther than one cell width from every center in some coordinate
    far = m.lattice.centers[0].copy()
    far[0] = m.lattice.centers[:, 0].max() + 1.01 * m.lattice.cell_dims[0]
    assert mu_density(far, m) == 0.0


def test_total_mass_one_mc():
    m = build_smoothed_measure(4, 1.2, 1)
    rng = np.random.default_rng(0)
    lo = m.lattice.centers.min(0) - m.lattice.cell_dims
    hi = m.lattice.centers.max(0) + m.lattice.cell_dims
    vol = float(np.prod(hi - lo))
    pts = rng.uniform(lo, hi, size=(8000, 3))
    vals = np.array([mu_density(p, m) for p in pts])
    est = vals.mean() * vol
    se = vals.std(ddof=1) / math.sqrt(vals.size) * vol
    assert abs(est - 1.0) <= 3 * se


def test_energy_t0_is_one():
    m = build_smoothed_measure(4, 1.2, 1)
    e = energy_integral_mc(m, 0.0, 2000, seed=1)
    assert e.value == 1.0 and e.stderr == 0.0


def test_energy_validation():
    m = build_smoothed_measure(4, 1.2, 1)
    with pytest.raises(ValueError):
        energy_integral_mc(m, 3.0, 10000)  # t >= D
    with pytest.raises(ValueError):
        energy_integral_mc(m, 2.0, 100)  # N too small


def test_energy_monotone_in_t():
    m = build_smoothed_measure(4, 1.2, 1)
    e1 = energy_integral_mc(m, 1.0, 200000, seed=3)
    e2 = energy_integral_mc(m, 2.0, 200000, seed=3)
    comb = math.hypot(e1.stderr, e2.stderr)
    assert e1.value <= e2.value * (1 + 5 * comb)


def test_energy_deterministic_across_threads():
    m = build_smoothed_measure(4, 1.2, 1)
    old = os.environ.get("HEISLAT_THREADS")
    try:
        os.environ["HEISLAT_THREADS"] = "1"
        e1 = energy_integral_mc(m, 2.0, 150000, seed=9)
        os.environ["HEISLAT_THREADS"] = "8"
        e8 = energy_integral_mc(m, 2.0, 150000, seed=9)
    finally:
        if old is None:
            os.environ.pop("HEISLAT_THREADS", None)
        else:
            os.environ["HEISLAT_THREADS"] = old
    assert e1 == e8


def test_all_pairs_agrees_with_mc():
    m = build_smoothed_measure(4, 1.2, 1)
    mc = energy_integral_mc(m, 2.0, 400000, seed=5)
    ap = energy_all_pairs(m, 2.0, near_samples=20000, seed=5)
    comb = math.hypot(mc.stderr, ap.stderr)
    assert abs(mc.value - ap.value) <= 3 * comb


def test_all_pairs_guards_large_q():
    m = build_smoothed_measure(32, 1.5, 1)
    with pytest.raises(ValueError):
        energy_all_pairs(m, 2.0, max_cells=100)
