import math
from fractions import Fraction

import numpy as np
import pytest

from heislat.core import GaugeParams, HPoint, group_mul, phi_alpha
from heislat.exactlinalg import det_exact, identity, mat_mul, mat_vec
from heislat.mongeampere import (
    MAMatrix,
    StructuredMatrixParams,
    _psi_derivs,
    grad_Phi,
    matrix_rank,
    monge_ampere_matrix,
    n_psi_matrix,
    n_psi_submatrix,
    structured_inverse,
    structured_inverse_apply_w,
    theta,
    verify_rank_proposition,
    x_functional,
)


def rand_frac(rng, lo=-9, hi=9, max_den=7):
    return Fraction(int(rng.integers(lo, hi + 1)), int(rng.integers(1, max_den + 1)))


def rand_point(rng, n):
    return HPoint(tuple(rand_frac(rng) for _ in range(2 * n)), rand_frac(rng))


def test_n_psi_alpha2_determinant():
    # independent cofactor expansion gives -A^2 (4 + A^2/4) = -17408 at A = 16,
    # independent of the vertical coordinate
    g = GaugeParams(1, 2)
    for zbar in (Fraction(1), Fraction(-3, 7), Fraction(100)):
        N = n_psi_matrix(HPoint((Fraction(1), Fraction(0)), zbar), g)
        assert N.det() == -17408


def test_n_psi_alpha2_rejects_equator():
    g = GaugeParams(1, 2)
    with pytest.raises(ValueError):
        n_psi_matrix(HPoint((Fraction(1), Fraction(0)), Fraction(0)), g)


def test_n_psi_vertical_axis_alpha4():
    # |z_| = 0 kills the Hessian terms; only the symplectic block and the
    # vertical second derivative survive
    g = GaugeParams(1, 4)
    zb = Fraction(3)
    N = n_psi_matrix(HPoint((Fraction(0), Fraction(0)), zb), g)
    A = g.C_alpha
    kappa = A * 4 / 4 * zb  # (A alpha / 4) zbar^((alpha-2)/2)
    expect = [
        [0, 0, 0, 2 * A * zb],
        [0, 0, kappa, 0],
        [0, -kappa, 0, 0],
        [2 * A * zb, 0, 0, 2 * A],
    ]
    assert N.rows() == [[Fraction(v) for v in row] for row in expect]


def test_n_psi_antisymmetric_part_is_symplectic_only():
    rng = np.random.default_rng(0)
    g = GaugeParams(2, 4)
    for _ in range(10):
        z = rand_point(rng, 2)
        N = n_psi_matrix(z, g).rows()
        # N - N^T vanishes outside the horizontal block, and the horizontal
        # block's antisymmetric part is a multiple of J
        d = 2 * g.n
        for i in range(d + 2):
            for j in range(d + 2):
                anti = N[i][j] - N[j][i]
                inside = 1 <= i <= d and 1 <= j <= d
                if not inside:
                    assert anti == 0


def test_direct_equals_factorized():
    rng = np.random.default_rng(1)
    for alpha in (2, 4):
        for n in (1, 2):
            g = GaugeParams(n, alpha)
            done = 0
            while done < 15:
                x, y = rand_point(rng, n), rand_point(rng, n)
                if alpha == 2 and theta(x, y).vert == 0:
                    continue
                A = monge_ampere_matrix(x, y, g, "direct")
                B = monge_ampere_matrix(x, y, g, "factorized")
                assert A.entries == B.entries
                assert abs(A.det()) == abs(n_psi_matrix(theta(x, y), g).det())
                done += 1


def test_alpha6_seam_rejected():
    g = GaugeParams(1, 6)
    x = HPoint.of(Fraction(1), Fraction(0), Fraction(0))
    y = HPoint.origin(1)
    with pytest.raises(ValueError):
        monge_ampere_matrix(x, y, g, "direct")
    # same pair off the seam is fine
    x2 = HPoint.of(Fraction(1), Fraction(0), Fraction(1))
    assert monge_ampere_matrix(x2, y, g, "direct").det() != 0


def test_known_nondegenerate_pair():
    g = GaugeParams(1, 4)
    x = HPoint.of(Fraction(1), Fraction(0), Fraction(0))
    y = HPoint.origin(1)
    assert monge_ampere_matrix(x, y, g).det() != 0


def test_matrix_rank_modes_agree():
    rng = np.random.default_rng(2)
    g = GaugeParams(1, 4)
    for _ in range(10):
        z = rand_point(rng, 1)
        N = n_psi_matrix(z, g)
        assert matrix_rank(N, "exact") == matrix_rank(N, "tolerant")
    with pytest.raises(ValueError):
        matrix_rank(N, "bogus")


def test_structured_inverse_exact():
    rng = np.random.default_rng(3)
    for n in (1, 2, 3):
        for _ in range(15):
            p = StructuredMatrixParams(
                sigma=rand_frac(rng) + 11,
                lam=rand_frac(rng),
                kappa=rand_frac(rng),
                w=tuple(rand_frac(rng) for _ in range(2 * n)),
            )
            inv = structured_inverse(p)
            assert mat_mul(inv.rows(), p.matrix()) == identity(2 * n)
            assert structured_inverse_apply_w(p) == mat_vec(inv.rows(), list(p.w))


def test_structured_inverse_singular_rejected():
    with pytest.raises(ZeroDivisionError):
        structured_inverse(StructuredMatrixParams(0, 1, 0, (1, 0)))


def test_det_sigma_kappa_specialization():
    # det(sigma I + kappa J) = (sigma^2 + kappa^2)^n
    rng = np.random.default_rng(4)
    for n in (1, 2, 3):
        sigma, kappa = rand_frac(rng) + 10, rand_frac(rng)
        p = StructuredMatrixParams(sigma, Fraction(0), kappa, (Fraction(1),) * (2 * n))
        assert det_exact(p.matrix()) == (sigma**2 + kappa**2) ** n


def test_x_functional_positive_and_block_identity():
    rng = np.random.default_rng(5)
    g = GaugeParams(1, 4)
    checked = 0
    while checked < 50:
        z = rand_point(rng, 1)
        if z.vert == 0 or all(c == 0 for c in z.horiz):
            continue
        X = x_functional(z, g)
        assert X > 0
        N = n_psi_matrix(z, g)
        d = 2 * g.n
        P = [[N.entries[1 + i][1 + j] for j in range(d)] for i in range(d)]
        _, _, _, psi_dd = _psi_derivs(z, g)
        # det of the bordered matrix factors through the horizontal block
        assert N.det() == -X * det_exact(P) * psi_dd
        checked += 1


def test_x_functional_special_values():
    g = GaugeParams(1, 4)
    zb = Fraction(5, 2)
    z = HPoint((Fraction(0), Fraction(0)), zb)
    assert x_functional(z, g) == 2 * g.C_alpha * zb**2
    g6 = GaugeParams(1, 6)
    z_eq = HPoint((Fraction(2), Fraction(0)), Fraction(0))
    val = x_functional(z_eq, g6)
    hsq = Fraction(4)
    sigma = 6 * hsq**2
    lam = 24 * hsq
    assert val == 6**3 * hsq**7 / (sigma**2 + sigma * lam * hsq)
    with pytest.raises(ValueError):
        x_functional(HPoint.origin(1), g)


def test_grad_phi_matches_finite_differences():
    rng = np.random.default_rng(6)
    for alpha in (4, 6):
        g = GaugeParams(1, alpha)
        checked = 0
        while checked < 20:
            x, y = rand_point(rng, 1), rand_point(rng, 1)
            if theta(x, y).vert == 0:
                continue
            gx, gy = grad_Phi(x, y, g)
            h = 1e-5
            xf = [float(c) for c in x.coords()]
            yf = [float(c) for c in y.coords()]

            def Phi(xc, yc):
                return phi_alpha(HPoint(tuple(xc[:2]), xc[2]), HPoint(tuple(yc[:2]), yc[2]), g) ** alpha

            fdx, fdy = [], []
            for k in range(3):
                xp, xm = xf[:], xf[:]
                xp[k] += h
                xm[k] -= h
                fdx.append((Phi(xp, yf) - Phi(xm, yf)) / (2 * h))
                yp, ym = yf[:], yf[:]
                yp[k] += h
                ym[k] -= h
                fdy.append((Phi(xf, yp) - Phi(xf, ym)) / (2 * h))
            ex = np.array([float(v) for v in gx])
            ey = np.array([float(v) for v in gy])
            scale = max(np.linalg.norm(ex), np.linalg.norm(ey))
            assert np.linalg.norm(np.array(fdx) - ex) < 1e-6 * scale
            assert np.linalg.norm(np.array(fdy) - ey) < 1e-6 * scale
            checked += 1


def test_verify_rank_proposition_small():
    r4 = verify_rank_proposition(GaugeParams(1, 4), Fraction(1), 40, seed=2)
    assert r4.passed and r4.equator_count == 0
    r2 = verify_rank_proposition(GaugeParams(2, 2), Fraction(2), 30, seed=2)
    assert r2.passed
    r6 = verify_rank_proposition(GaugeParams(1, 6), Fraction(1), 30, seed=2)
    assert r6.passed
    assert set(r6.equator_ranks) == {3}
    d = r6.to_dict()
    assert d["passed"] and d["equator"]["ranks"] == [3]
    with pytest.raises(ValueError):
        verify_rank_proposition(GaugeParams(1, 4), Fraction(-1), 10)


def test_equator_submatrix_full_rank_alpha6():
    g = GaugeParams(1, 6)
    sub = n_psi_submatrix((Fraction(3, 5), Fraction(4, 5)), g)
    assert det_exact(sub.entries) != 0
    full = n_psi_matrix(HPoint((Fraction(3, 5), Fraction(4, 5)), Fraction(0)), g)
    assert matrix_rank(full) == 3  # rank drops by one on the equator


def test_mamatrix_from_rows_validation():
    with pytest.raises(ValueError):
        MAMatrix.from_rows([[1, 2], [3]], "direct")
