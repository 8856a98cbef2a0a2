from fractions import Fraction

import numpy as np
import pytest

from junctionflow.complementing import (LinearizedSystem,
                                        boundary_matrix_full,
                                        build_linearization,
                                        cauchy_schwarz_terms,
                                        check_complementing, decay_exponents,
                                        delta_bound, determinant_bruteforce,
                                        determinant_closed_form,
                                        equal_slope_system,
                                        principal_coefficient, reduced_matrix)
from junctionflow.errors import (BranchFailure, DegenerateConfig,
                                 EmptySamples)
from junctionflow.geometry import JunctionConfig
from conftest import random_normalized_config

SQ3 = np.sqrt(3.0)


def y_system(mode="elliptic"):
    cfg = JunctionConfig(n=2, m=1, q=3, s=2, theta=(1, 1, 1),
                         slopes=((SQ3,), (-SQ3,), (0.0,)))
    return build_linearization(cfg, mode=mode)


def flat_system(gap=2.0, c_times_gap=2.0, q=4, s=2, mode="elliptic"):
    """Sheet 1 flat, sheet 2 at -gap along e_1, all minus sheets flat."""
    slopes = [(0.0,), (-gap,)] + [(0.0,)] * (q - 2)
    cfg = JunctionConfig(n=2, m=1, q=q, s=s, theta=(1,) * q,
                         slopes=tuple(slopes))
    return build_linearization(cfg, C=c_times_gap / gap, mode=mode)


class TestDecayExponents:
    def test_flat_plus_side_value(self):
        # flat sheet on the plus side, gap 2, |xi'| = 1: lambda = 1/2
        sys_ = flat_system(gap=2.0)
        tab = decay_exponents(sys_, np.array([1.0]))
        assert tab.lam[0, 0] == pytest.approx(0.5)

    def test_parabolic_rho_zero_matches_elliptic(self, rng):
        cfg = random_normalized_config(rng)
        e = build_linearization(cfg, mode="elliptic")
        p = build_linearization(cfg, mode="parabolic")
        xi = np.array([1.0])
        le = decay_exponents(e, xi).lam
        lp = decay_exponents(p, xi, rho=0.0).lam
        assert np.allclose(le, lp)

    def test_minus_side_carries_shear_factor(self):
        # C gap = 3, flat minus sheet, gap 1, |xi'| = 1: lambda = 2
        sys_ = flat_system(gap=1.0, c_times_gap=3.0)
        tab = decay_exponents(sys_, np.array([1.0]))
        assert tab.lam[2, 0] == pytest.approx(2.0)
        assert tab.lam[3, 0] == pytest.approx(2.0)

    def test_positive_real_part_over_admissible_samples(self, rng):
        for _ in range(20):
            cfg = random_normalized_config(rng)
            sys_ = build_linearization(cfg, mode="parabolic")
            d1 = delta_bound(sys_) / 2
            for rho in (0.0, 1j, 1.0 + 1j, -d1 / 2):
                lam = decay_exponents(sys_, np.array([1.0]), rho=rho).lam
                assert np.all(lam.real > 0)

    def test_branch_failure_on_negative_axis(self):
        sys_ = flat_system(mode="parabolic")
        with pytest.raises((BranchFailure, ValueError)):
            decay_exponents(sys_, np.array([0.0]), rho=-1.0)

    def test_elliptic_needs_nonzero_frequency(self):
        sys_ = flat_system()
        with pytest.raises(ValueError):
            decay_exponents(sys_, np.array([0.0]))


class TestDeltaBound:
    def test_direct_formula(self):
        # gap 1, C gap = 2: coefficients are 1/(1+|a_k|^2) on both sides,
        # so the min runs over {1, 1, 1/2, 1, 1} here
        sys_ = flat_system(gap=1.0, c_times_gap=2.0)
        assert delta_bound(sys_) == pytest.approx(0.25)

    def test_small_gap_dominated_by_steepest_sheet(self):
        gap = 0.01
        slopes = ((gap / 2, 0.0), (-gap / 2, 0.0), (1.5, 0.5), (0.2, 0.1))
        cfg = JunctionConfig(n=2, m=2, q=4, s=2, theta=(1, 1, 1, 1),
                             slopes=slopes)
        sys_ = build_linearization(cfg, C=2.0 / gap)
        worst = max(float(np.sum(np.asarray(a) ** 2)) for a in slopes[:2])
        expected = 0.5 * gap ** 2 / (1.0 + worst)
        # the minus-side sheets carry (C gap - 1)^2 = 1, so the min runs
        # over gap^2/(1+|a_k|^2) for every sheet
        worst_all = max(float(np.sum(np.asarray(a) ** 2)) for a in slopes)
        assert delta_bound(sys_) == pytest.approx(
            0.5 * gap ** 2 / (1.0 + worst_all))

    def test_diagonal_symbol_roots_below_parabolic_line(self, rng):
        # every diagonal root satisfies Re rho <= -2 delta |xi|^2
        for _ in range(20):
            cfg = random_normalized_config(rng)
            sys_ = build_linearization(cfg, mode="parabolic")
            delta = delta_bound(sys_)
            for xi_t in (0.0, 0.7, 1.3):
                for xi_n in (0.5, 1.0, 2.0):
                    xi2 = xi_t ** 2 + xi_n ** 2
                    for k in range(1, cfg.q + 1):
                        rho = -xi_t ** 2 - principal_coefficient(sys_, k) * xi_n ** 2
                        assert rho <= -2 * delta * xi2 + 1e-12


class TestPrincipalCoefficients:
    def test_plus_side_formula(self, rng):
        cfg = random_normalized_config(rng)
        sys_ = build_linearization(cfg)
        a = sys_.config.slope_array
        for k in range(1, cfg.s + 1):
            want = sys_.gap ** 2 / (1.0 + a[k - 1] @ a[k - 1])
            assert principal_coefficient(sys_, k) == pytest.approx(want)

    def test_minus_side_formula(self, rng):
        cfg = random_normalized_config(rng)
        sys_ = build_linearization(cfg)
        a = sys_.config.slope_array
        for k in range(cfg.s + 1, cfg.q + 1):
            want = sys_.gap ** 2 / ((1.0 - sys_.C * sys_.gap) ** 2
                                    * (1.0 + a[k - 1] @ a[k - 1]))
            assert principal_coefficient(sys_, k) == pytest.approx(want)

    def test_build_passthrough_when_normalized(self, rng):
        cfg = random_normalized_config(rng)
        sys_ = build_linearization(cfg)
        assert np.allclose(sys_.config.slope_array, cfg.slope_array)
        assert sys_.gap == pytest.approx(cfg.gap)
        assert sys_.C * sys_.gap > 1.0


def reduced_matrix_exact(theta, slopes, gap) -> list:
    """Exact-rational re-derivation of the reduced boundary matrix: carry
    out the amplitude elimination symbolically and substitute it into the
    two balance equations, all over Fraction."""
    q = len(slopes)
    m = len(slopes[0])
    a = [[Fraction(x) for x in row] for row in slopes]
    g = Fraction(gap)
    tt = [Fraction(theta[k], 1) / (1 + sum(x * x for x in a[k]))
          for k in range(q)]

    def elim(k):
        # c_k as columns over (c_1^1, c_2^1, c_1^2 .. c_1^m)
        E = [[Fraction(0)] * (m + 1) for _ in range(m)]
        for mu in range(m):
            E[mu][0] = (a[k][mu] - a[1][mu]) / g
            E[mu][1] = (a[0][mu] - a[k][mu]) / g
        for kappa in range(1, m):
            E[kappa][kappa + 1] += 1
        return E

    rows = [[Fraction(0)] * (m + 1) for _ in range(m + 1)]
    for k in range(q):
        E = elim(k)
        norm2 = 1 + sum(x * x for x in a[k])
        for col in range(m + 1):
            rows[0][col] += tt[k] * sum(a[k][mu] * E[mu][col] for mu in range(m))
            for mu in range(m):
                acc = norm2 * E[mu][col]
                acc -= a[k][mu] * sum(a[k][nu] * E[nu][col] for nu in range(m))
                rows[1 + mu][col] += tt[k] * acc
    return rows


class TestReducedMatrix:
    def test_equal_slopes_rank_deficient(self):
        cfg = JunctionConfig(n=2, m=2, q=3, s=2, theta=(1, 1, 1),
                             slopes=((0.4, 0.0),) * 3)
        sys_ = equal_slope_system(cfg)
        M = reduced_matrix(sys_).reduced
        sv = np.linalg.svd(M, compute_uv=False)
        assert sv[-1] < 1e-14 * sv[0]

    def test_m1_matrix_is_two_by_two(self):
        sys_ = y_system()
        M = reduced_matrix(sys_).reduced
        assert M.shape == (2, 2)

    def test_matches_exact_rational_oracle(self, rng):
        for _ in range(25):
            q = int(rng.integers(3, 6))
            m = int(rng.integers(1, 4))
            s = int(rng.integers(2, q))
            theta = [int(t) for t in rng.integers(1, 4, q)]
            # rational slopes in the normalized frame
            slopes = [[Fraction(int(rng.integers(-8, 9)), 4) for _ in range(m)]
                      for _ in range(q)]
            for row in slopes[:2]:
                for j in range(1, m):
                    row[j] = Fraction(0)
            if slopes[0][0] <= slopes[1][0]:
                slopes[0][0] = slopes[1][0] + 1
            gap = slopes[0][0] - slopes[1][0]
            cfg = JunctionConfig(
                n=2, m=m, q=q, s=s, theta=tuple(theta),
                slopes=tuple(tuple(float(x) for x in row) for row in slopes))
            sys_ = build_linearization(cfg)
            got = reduced_matrix(sys_).reduced
            want = reduced_matrix_exact(theta, slopes, gap)
            for i in range(m + 1):
                for j in range(m + 1):
                    assert got[i, j] == pytest.approx(float(want[i][j]),
                                                      abs=1e-12)


class TestDeterminants:
    def test_equal_slopes_vanish(self):
        cfg = JunctionConfig(n=2, m=2, q=4, s=2, theta=(1, 2, 1, 3),
                             slopes=((0.7, 0.0),) * 4)
        sys_ = equal_slope_system(cfg)
        assert determinant_closed_form(sys_) == pytest.approx(0.0, abs=1e-14)
        assert determinant_bruteforce(sys_) == pytest.approx(0.0, abs=1e-14)

    def test_distinct_slopes_positive(self, rng):
        for _ in range(50):
            sys_ = build_linearization(random_normalized_config(rng))
            assert determinant_closed_form(sys_) > 0

    def test_oracle_equivalence(self, rng):
        for _ in range(100):
            sys_ = build_linearization(random_normalized_config(rng))
            Dc = determinant_closed_form(sys_)
            Db = determinant_bruteforce(sys_)
            assert abs(Dc - Db) <= 1e-10 * (1.0 + abs(Dc))

    def test_y_junction_value(self):
        # theta-tilde = (1/4, 1/4, 1); defect = (3/2)^2; gap = 2 sqrt(3)
        D = determinant_closed_form(y_system())
        assert D == pytest.approx(9.0 / (8.0 * SQ3), rel=1e-14)
        assert determinant_bruteforce(y_system()) == pytest.approx(D)

    def test_multiplicity_scaling(self, rng):
        for _ in range(10):
            cfg = random_normalized_config(rng, m=2)
            scaled = JunctionConfig(
                n=cfg.n, m=cfg.m, q=cfg.q, s=cfg.s,
                theta=tuple(3 * t for t in cfg.theta), slopes=cfg.slopes)
            D1 = determinant_closed_form(build_linearization(cfg))
            D3 = determinant_closed_form(build_linearization(scaled))
            assert D3 == pytest.approx(27.0 * D1, rel=1e-10)

    def test_multiplicity_scaling_m1_is_quadratic(self, rng):
        cfg = random_normalized_config(rng, m=1)
        scaled = JunctionConfig(n=cfg.n, m=1, q=cfg.q, s=cfg.s,
                                theta=tuple(2 * t for t in cfg.theta),
                                slopes=cfg.slopes)
        D1 = determinant_closed_form(build_linearization(cfg))
        D2 = determinant_closed_form(build_linearization(scaled))
        assert D2 == pytest.approx(4.0 * D1, rel=1e-10)

    def test_requires_normalized_frame(self):
        cfg = JunctionConfig(n=2, m=2, q=3, s=2, theta=(1, 1, 1),
                             slopes=((1.0, 0.5), (-1.0, 0.5), (0.0, 0.0)))
        sys_ = LinearizedSystem(config=cfg, C=1.0, gap=2.0)
        with pytest.raises(DegenerateConfig):
            determinant_closed_form(sys_)


class TestCauchySchwarzTerms:
    def test_equal_slopes_all_zero(self):
        cfg = JunctionConfig(n=2, m=3, q=3, s=2, theta=(1, 1, 1),
                             slopes=((0.5, 0.0, 0.0),) * 3)
        terms = cauchy_schwarz_terms(equal_slope_system(cfg))
        assert all(abs(t) < 1e-14 for t in terms)

    def test_fifth_term_zero_without_extra_components(self, rng):
        cfg = random_normalized_config(rng, m=2)
        terms = cauchy_schwarz_terms(build_linearization(cfg))
        assert len(terms) == 5
        assert terms[4] == 0.0

    def test_nonnegative_and_recombine(self, rng):
        for _ in range(50):
            sys_ = build_linearization(random_normalized_config(rng))
            terms = cauchy_schwarz_terms(sys_)
            assert all(t >= -1e-12 for t in terms)
            D = determinant_closed_form(sys_)
            assert sum(terms) == pytest.approx(sys_.gap * D,
                                               abs=1e-10 * (1 + abs(D)))


class TestCheckComplementing:
    def test_y_junction_holds(self):
        v = check_complementing(y_system())
        assert v.elliptic_ok and v.kernel_dim == 0 and v.D > 0

    def test_equal_slope_fails(self):
        cfg = JunctionConfig(n=2, m=1, q=3, s=2, theta=(1, 1, 1),
                             slopes=((0.3,),) * 3)
        v = check_complementing(equal_slope_system(cfg))
        assert not v.elliptic_ok and v.kernel_dim >= 1

    def test_parabolic_matches_elliptic(self, rng):
        for _ in range(20):
            cfg = random_normalized_config(rng)
            ve = check_complementing(build_linearization(cfg, mode="elliptic"))
            vp = check_complementing(build_linearization(cfg, mode="parabolic"))
            assert ve.elliptic_ok == vp.parabolic_ok
            assert ve.kernel_dim == vp.kernel_dim
            assert vp.delta is not None and vp.delta > 0

    def test_custom_parabolic_samples(self, rng):
        cfg = random_normalized_config(rng)
        sys_ = build_linearization(cfg, mode="parabolic")
        xi = np.array([1.0])
        v = check_complementing(sys_, [(xi, 0.0), (xi, 1j), (xi, 1.0 + 1j)])
        assert v.parabolic_ok

    def test_verdict_invariant_under_frequency_choice(self, rng):
        cfg = random_normalized_config(rng, n=3)
        sys_ = build_linearization(cfg)
        samples = [(np.array([1.0, 0.0]), None), (np.array([0.3, -2.0]), None),
                   (np.array([5.0, 1.0]), None)]
        v = check_complementing(sys_, samples)
        assert v.elliptic_ok

    def test_verdict_invariant_under_premixing_rotation(self, rng):
        # rotating slope space before normalization must not change the
        # verdict (normalize restores the aligned frame when it can)
        for _ in range(10):
            cfg = random_normalized_config(rng, m=2)
            th = rng.uniform(0, 2 * np.pi)
            R = np.array([[np.cos(th), -np.sin(th)],
                          [np.sin(th), np.cos(th)]])
            rotated = cfg.with_slopes((R @ cfg.slope_array.T).T)
            v1 = check_complementing(build_linearization(cfg))
            v2 = check_complementing(build_linearization(rotated))
            assert v1.elliptic_ok == v2.elliptic_ok

    def test_verdict_invariant_under_theta_scaling(self, rng):
        cfg = random_normalized_config(rng)
        scaled = JunctionConfig(n=cfg.n, m=cfg.m, q=cfg.q, s=cfg.s,
                                theta=tuple(5 * t for t in cfg.theta),
                                slopes=cfg.slopes)
        v1 = check_complementing(build_linearization(cfg))
        v2 = check_complementing(build_linearization(scaled))
        assert v1.elliptic_ok == v2.elliptic_ok

    def test_empty_samples_rejected(self):
        with pytest.raises(EmptySamples):
            check_complementing(y_system(), [])

    def test_full_matrix_rows_scale_with_frequency(self, rng):
        # the balance rows scale by one common factor, so the kernel is
        # sample-independent
        cfg = random_normalized_config(rng)
        sys_ = build_linearization(cfg)
        M1 = boundary_matrix_full(sys_, np.array([1.0]))
        M2 = boundary_matrix_full(sys_, np.array([2.0]))
        qm = cfg.q * cfg.m
        top = slice(0, 1 + cfg.m)
        assert np.allclose(M2[top], 2.0 * M1[top])
        assert np.allclose(M2[1 + cfg.m:], M1[1 + cfg.m:])


class TestBuildLinearization:
    def test_rejects_tangent_configs(self):
        cfg = JunctionConfig(n=2, m=1, q=3, s=2, theta=(1, 1, 1),
                             slopes=((0.1,),) * 3)
        with pytest.raises(DegenerateConfig):
            build_linearization(cfg)

    def test_rejects_unreachable_frame(self):
        # independent first slopes cannot be aligned by a slope rotation
        cfg = JunctionConfig(n=2, m=2, q=3, s=2, theta=(1, 1, 1),
                             slopes=((1.0, 0.0), (0.0, 1.0), (0.2, 0.1)))
        sys_ = build_linearization(cfg)
        with pytest.raises(DegenerateConfig):
            determinant_closed_form(sys_)

    def test_shear_constraint_validated(self):
        cfg = JunctionConfig(n=2, m=1, q=3, s=2, theta=(1, 1, 1),
                             slopes=((1.0,), (-1.0,), (0.0,)))
        with pytest.raises(ValueError):
            build_linearization(cfg, C=0.4)   # C * gap = 0.8 < 1
