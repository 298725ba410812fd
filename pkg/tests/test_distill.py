import numpy as np
import pytest
from hypothesis import given, strategies as st

from bentlab.canonical import (CanonicalParams, EpsParams, build_rho_bc, build_werner,
                               region_points)
from bentlab.distill import (OptimizerOptions, RankTwoState, VerdictKind, eps_threshold,
                             explicit_witnesses, f_value, maxent_overlap_max, min_rank2,
                             minimize_rank_k, n_copy_pt, null_space_margin, one_copy_verdict,
                             rank2_expectation, regroup_copies, ungroup_copies, witness_scan)
from bentlab.errors import BracketError, InvalidInput, SizeLimit
from bentlab.oracles import grid_rank2_min
from bentlab.qmat import PureState, max_entangled, partial_transpose, random_density
from sampling import polygon_points

FAST = OptimizerOptions(restarts=16, seed=1)


def werner_pt(d, lam):
    return partial_transpose(build_werner(d, lam)).mat


def pt_of(b, c, d=3):
    return partial_transpose(build_rho_bc(CanonicalParams(d, b, c))).mat


def in_triangle(rng, *verts):
    w = rng.dirichlet(np.ones(len(verts)))
    return tuple(np.asarray(verts).T @ w)


class TestRankTwoState:
    def test_vector(self):
        v = RankTwoState([0.5, 0.5], np.eye(3)[:, :2], np.eye(3)[:, :2])
        assert np.allclose(v.vector(), explicit_witnesses(3)["w1"])

    def test_rejects_bad_weights(self):
        with pytest.raises(InvalidInput):
            RankTwoState([0.7, 0.7], np.eye(3)[:, :2], np.eye(3)[:, :2])

    def test_rejects_non_orthonormal(self):
        a = np.array([[1, 1], [0, 0], [0, 0]])
        with pytest.raises(InvalidInput):
            RankTwoState([0.5, 0.5], a, np.eye(3)[:, :2])

    def test_from_product_vector(self):
        v = RankTwoState.from_vector(np.kron([0, 1, 0], [1, 0, 0]), 3, 3)
        assert v.mu == pytest.approx([1, 0])


class TestExpectation:
    def test_identity(self):
        v = RankTwoState([0.3, 0.7], np.eye(3)[:, :2], np.eye(3)[:, 1:])
        assert rank2_expectation(np.eye(9), v) == pytest.approx(1)

    def test_werner_witness(self):
        # <v|(I - 2 Phi0)|v> with |<Phi0|v>|^2 = 2/3
        v = RankTwoState.from_vector(explicit_witnesses(3)["w1"], 3, 3)
        assert rank2_expectation(werner_pt(3, 1.0), v) == pytest.approx(-1 / 3, abs=1e-14)

    def test_K_nonnegative(self, rng):
        M = pt_of(1 / 6, 1 / 6)
        for _ in range(50):
            z = rng.standard_normal(9) + 1j * rng.standard_normal(9)
            v = RankTwoState.from_vector(z, 3, 3)
            assert rank2_expectation(M, v) >= -1e-14

    def test_dimension_mismatch(self):
        v = RankTwoState([0.5, 0.5], np.eye(3)[:, :2], np.eye(3)[:, :2])
        with pytest.raises(InvalidInput):
            rank2_expectation(np.eye(16), v)


class TestMinRank2:
    def test_transition_point(self):
        assert min_rank2(werner_pt(3, 2.0), options=FAST).min_value == pytest.approx(0, abs=1e-8)

    def test_werner_one(self):
        rep = min_rank2(werner_pt(3, 1.0), options=FAST)
        assert rep.min_value == pytest.approx(-1 / 3, abs=1e-8)
        # the Euler-angle plane grid agrees
        assert grid_rank2_min(werner_pt(3, 1.0), phases=False) == pytest.approx(-1 / 3, abs=1e-8)

    def test_G(self):
        assert min_rank2(pt_of(1 / 5, 1 / 15), options=FAST).min_value >= -1e-8

    def test_report_consistent(self):
        M = pt_of(0.25, 0.02)
        rep = min_rank2(M, options=FAST)
        assert abs(rank2_expectation(M, rep.argmin) - rep.min_value) <= 1e-10
        assert rep.converged and rep.restarts == 16 and len(rep.iterations_per_restart) == 16
        assert rep.to_dict()["heuristic"] is False

    def test_non_hermitian(self):
        with pytest.raises(InvalidInput):
            min_rank2(np.triu(np.ones((9, 9))))

    def test_needs_two_per_side(self):
        with pytest.raises(InvalidInput):
            min_rank2(np.eye(3), 1, 3)

    def test_reproducible_and_worker_independent(self):
        M = pt_of(0.21, 0.04)
        a = minimize_rank_k(M, 3, 3, 2, OptimizerOptions(restarts=8, seed=3))
        b = minimize_rank_k(M, 3, 3, 2, OptimizerOptions(restarts=8, seed=3, workers=4))
        assert np.array_equal(a.restart_values, b.restart_values)
        assert a.best_restart == b.best_restart

    def test_histories_monotone(self):
        res = minimize_rank_k(werner_pt(3, 1.3), 3, 3, 2, FAST, keep_histories=True)
        for h in res.histories:
            assert np.all(np.diff(h) <= 1e-12)

    @pytest.mark.parametrize("DB", [2, 3, 5])
    def test_two_by_n_is_exact(self, DB, rng):
        for _ in range(5):
            M = partial_transpose(random_density(2, DB, rng)).mat
            exact = np.linalg.eigvalsh(M)[0]
            assert min_rank2(M, 2, DB, FAST).min_value == pytest.approx(exact, abs=1e-9)

    @given(st.floats(0.1, 10), st.integers(0, 2**16))
    def test_scaling_equivariance(self, alpha, seed):
        M = partial_transpose(random_density(3, 3, np.random.default_rng(seed))).mat
        opts = OptimizerOptions(restarts=4, seed=seed)
        a = minimize_rank_k(M, 3, 3, 2, opts)
        b = minimize_rank_k(alpha * M, 3, 3, 2, opts)
        assert b.value == pytest.approx(alpha * a.value, abs=1e-9 * max(1, alpha))

    def test_grid_oracle(self, rng):
        top = 1 / 3
        count = 0
        while count < 20:
            b, c = rng.uniform(0, top, 2)
            if b + c > top:
                continue
            count += 1
            M = pt_of(b, c)
            fast = min_rank2(M, options=FAST).min_value
            # rho_bc^PT commutes with D (x) conj(D), so real normals suffice
            slow = grid_rank2_min(M, phases=False)
            assert abs(fast - slow) <= 5e-4

    def test_grid_oracle_with_phases(self, rng):
        M = partial_transpose(random_density(3, 3, rng)).mat
        fast = min_rank2(M, options=OptimizerOptions(restarts=32, seed=2)).min_value
        slow = grid_rank2_min(M, step=np.pi / 12)
        assert abs(fast - slow) <= 5e-4


class TestCopies:
    @given(st.integers(2, 3), st.integers(2, 3), st.integers(1, 3), st.integers(0, 2**16))
    def test_round_trip(self, dA, dB, n, seed):
        D = (dA * dB) ** n
        if D > 81:
            return
        X = np.random.default_rng(seed).standard_normal((D, D))
        assert np.array_equal(ungroup_copies(regroup_copies(X, dA, dB, n), dA, dB, n), X)

    def test_regroup_matches_kron_of_sides(self, rng):
        a1, b1, a2, b2 = (rng.standard_normal((3, 3)) for _ in range(4))
        X = np.kron(np.kron(a1, b1), np.kron(a2, b2))
        assert np.allclose(regroup_copies(X, 3, 3, 2), np.kron(np.kron(a1, a2), np.kron(b1, b2)))

    def test_size_limit(self):
        pt = pt_of(0.2, 0.0)
        with pytest.raises(SizeLimit):
            n_copy_pt(pt, 3, 3)
        assert n_copy_pt(pt, 3, 3, stress=True).shape == (729, 729)
        with pytest.raises(SizeLimit):
            f_value(EpsParams(3, 0, 0.01), n=3)


class TestFValue:
    def test_one_copy_positive_at_B(self):
        assert f_value(EpsParams(3, 0, 0), 1, FAST).min_value > 1e-6

    def test_C_boundary(self):
        assert f_value(EpsParams(3, 0, 1 / 42), 1, FAST).min_value == pytest.approx(0, abs=1e-7)

    def test_two_copy_positive_at_B(self):
        assert f_value(EpsParams(3, 0, 0), 2, OptimizerOptions(restarts=32, seed=1)).min_value > 1e-6

    def test_two_copy_witness_inside_BCGK(self):
        # ||psi|| = 1 rank-two vector on the regrouped two-copy PT at b = 1/6 + 0.02, c = 0
        p = EpsParams(3, 0, 0.02)
        rep = f_value(p, 2, OptimizerOptions(restarts=64, seed=1))
        assert rep.min_value == pytest.approx(-1 / 2250, abs=1e-9)
        v = rep.argmin
        assert v.mu == pytest.approx([0.5, 0.5], abs=1e-6)
        # check on the plain kron, undoing the regrouping on the vector
        pt = partial_transpose(build_rho_bc(p.to_canonical())).mat
        psi = v.vector().reshape(3, 3, 3, 3).transpose(0, 2, 1, 3).reshape(-1)
        assert np.vdot(psi, np.kron(pt, pt) @ psi).real == pytest.approx(-1 / 2250, abs=1e-10)


class TestThreshold:
    def test_c0(self):
        r = eps_threshold(3, 0.0, 1, FAST)
        assert r.eps0 == pytest.approx(1 / 42, abs=2e-4)
        assert r.hi - r.lo <= 1e-5

    def test_c_one_fifteenth(self):
        assert eps_threshold(3, 1 / 15, 1, FAST).eps0 == pytest.approx(1 / 30, abs=2e-4)

    def test_bracket_error(self):
        with pytest.raises(BracketError):
            eps_threshold(3, 0.0, 1, FAST, lo=0.05)
        with pytest.raises(BracketError):
            eps_threshold(3, 0.0, 1, FAST, hi=0.01)

    def test_c_range(self):
        with pytest.raises(InvalidInput):
            eps_threshold(3, 1 / 6, 1, FAST)


class TestWitnesses:
    def test_F(self):
        v = witness_scan(CanonicalParams(3, 1 / 3, 0))
        assert v.kind is VerdictKind.WITNESS_FOUND and v.source == "w1"
        assert rank2_expectation(pt_of(1 / 3, 0), v.witness) == pytest.approx(v.margin, abs=1e-12)

    def test_near_C(self):
        v = witness_scan(CanonicalParams(3, 0.193, 0.005))
        assert v.kind is VerdictKind.WITNESS_FOUND and v.source == "w2"
        assert rank2_expectation(pt_of(0.193, 0.005), v.witness) == pytest.approx(v.margin, abs=1e-12)

    def test_G(self):
        v = witness_scan(CanonicalParams(3, 1 / 5, 1 / 15))
        assert v.kind is VerdictKind.NO_VIOLATION and v.heuristic

    def test_one_copy_verdict_falls_back_to_optimizer(self):
        v = one_copy_verdict(CanonicalParams(3, 0.19, 0.01), FAST)
        assert v.kind is VerdictKind.NO_VIOLATION and v.source == "optimizer"
        assert v.to_dict()["heuristic"] is True

    def test_witness_rank(self):
        for w in explicit_witnesses(4).values():
            assert np.linalg.matrix_rank(w.reshape(4, 4), tol=1e-12) == 2


class TestOverlap:
    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_bound(self, d):
        r = maxent_overlap_max(d, max_entangled(d), FAST)
        assert r.overlap == pytest.approx(np.sqrt(2 / d), abs=1e-6)
        assert np.all(r.restart_overlaps <= np.sqrt(2 / d) + 1e-8)

    def test_other_phase(self):
        r = maxent_overlap_max(4, max_entangled(4, 3), FAST)
        assert r.overlap == pytest.approx(np.sqrt(0.5), abs=1e-6)

    def test_rejects_non_maximal(self):
        with pytest.raises(InvalidInput):
            maxent_overlap_max(3, PureState(np.kron([1, 0, 0], [1, 0, 0]), 3, 3))


class TestNullSpace:
    def test_one_copy(self):
        r = null_space_margin(EpsParams(3, 0, 0), 1, FAST)
        assert r.null_dim == 1 and r.min_value > 1e-6

    def test_two_copies(self):
        r = null_space_margin(EpsParams(3, 0, 0), 2, OptimizerOptions(restarts=16, seed=2))
        assert r.null_dim == 17 and r.min_value > 1e-6

    def test_requires_eps_zero(self):
        with pytest.raises(InvalidInput):
            null_space_margin(EpsParams(3, 0, 0.01))


class TestRegionProperties:
    def test_bcgk_one_copy_nonnegative(self):
        for b, c in polygon_points("BCGK", 200, np.random.default_rng(100)):
            assert min_rank2(pt_of(b, c), options=OptimizerOptions(restarts=8, seed=0)).min_value >= -1e-8

    def test_bgk_two_copy_structure(self):
        # points of BGK are G's PT plus positive multiples of the PTs of PPT corners
        pts = region_points(3)
        opts = OptimizerOptions(restarts=16, seed=4)
        g = f_value(EpsParams(3, pts["G"][1], pts["G"][0] - 1 / 6), 2, opts).min_value
        assert g >= -1e-7
        rng = np.random.default_rng(44)
        for _ in range(4):
            b, c = in_triangle(rng, pts["B"], pts["G"], pts["K"])
            p = EpsParams(3, c, max(b - 1 / 6, 0.0))
            assert f_value(p, 2, opts).min_value >= -1e-7
