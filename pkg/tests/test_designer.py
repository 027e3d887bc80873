import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from olaz import kernel
from olaz.afcore import AmbiguityZone, ds, isl_oaf, oaf, random_unimodular
from olaz.designer import (DesignConfig, block, design, lift, project_gamma, synthesize,
                           top_singular_pair, zone_lags)
from olaz.errors import DegenerateError, DimensionError, DomainError

import oracles


@pytest.fixture
def rng():
    return np.random.default_rng(99)


class TestLift:
    def test_single_block(self, rng):
        a = random_unimodular(6, rng)
        p = lift(a, AmbiguityZone(2, 0.0, 0.2))
        assert_allclose(p.x, a)
        assert_allclose(p.y, a)

    def test_modulated_block(self, rng):
        a = random_unimodular(4, rng)
        p = lift(a, AmbiguityZone(1, 0.5, 0.5))
        z = np.exp(2j * np.pi / 4)
        assert_allclose(p.x[4:], a * z ** (0.5 * np.arange(4)), atol=1e-15)
        assert_allclose(p.y[4:], a / z ** (0.5 * np.arange(4)), atol=1e-15)

    def test_matrix_matches_blockwise_oracle(self, rng):
        a = random_unimodular(5, rng)
        p = lift(a, AmbiguityZone(2, 0.4, 0.2))
        assert_allclose(p.matrix(), oracles.dense_lift(a, 5, 3, 0.2), atol=1e-13)

    def test_block_diagonal_sums_are_oaf(self, rng):
        a = random_unimodular(8, rng)
        zone = AmbiguityZone(3, 0.4, 0.2)
        X = lift(a, zone).matrix()
        for m in range(zone.M):
            for tau in range(8):
                f = m * zone.f_delta
                assert abs(ds(block(X, m, 0, 8), tau)) == pytest.approx(abs(oaf(a, a, tau, f)), abs=1e-12)
                assert abs(ds(block(X, 0, m, 8), tau)) == pytest.approx(abs(oaf(a, a, -tau, -f)), abs=1e-12)

    def test_rejects_non_unimodular(self):
        with pytest.raises(DomainError):
            lift(np.array([1, 2, 1, 1]), AmbiguityZone(1, 0.2, 0.2))


class TestProjectGamma:
    def test_empty_zone_is_identity(self, rng):
        X = rng.standard_normal((8, 8)) + 0j
        assert np.array_equal(project_gamma(X, 4, 0), X)

    def test_zero_sums_after_projection(self, rng):
        a = random_unimodular(8, rng)
        X = lift(a, AmbiguityZone(2, 0.2, 0.2)).matrix()
        Y = project_gamma(X, 8, 2)
        for m in range(2):
            for tau in (1, 2, 6, 7):
                assert abs(ds(block(Y, m, 0, 8), tau)) < 1e-12
                assert abs(ds(block(Y, 0, m, 8), tau)) < 1e-12

    def test_matches_loop_oracle(self, rng):
        X = rng.standard_normal((15, 15)) + 1j * rng.standard_normal((15, 15))
        assert_allclose(project_gamma(X, 5, 2), oracles.loop_project(X, 5, 2), atol=1e-14)

    def test_untouched_parts(self, rng):
        X = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        Y = project_gamma(X, 6, 2)
        assert np.array_equal(block(Y, 1, 1, 6), block(X, 1, 1, 6))
        i = np.arange(6)
        for tau in (0, 3):
            assert np.array_equal(block(Y, 1, 0, 6)[i, (i + tau) % 6], block(X, 1, 0, 6)[i, (i + tau) % 6])

    def test_idempotent(self, rng):
        X = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        Y = project_gamma(X, 8, 3)
        assert_allclose(project_gamma(Y, 8, 3), Y, atol=1e-15)

    def test_errors(self):
        with pytest.raises(DomainError):
            project_gamma(np.zeros((8, 8)), 8, 4)
        with pytest.raises(DimensionError):
            project_gamma(np.zeros((8, 9)), 8, 1)

    def test_zone_lags(self):
        assert zone_lags(8, 2).tolist() == [1, 2, 6, 7]


class TestTopSingularPair:
    def test_diagonal(self):
        sp = top_singular_pair(np.diag([3.0, 1.0]))
        assert sp.sigma == pytest.approx(3.0)
        assert abs(sp.s[0]) == pytest.approx(1.0)
        assert abs(sp.v[0]) == pytest.approx(1.0)

    def test_rank_one(self, rng):
        u = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        w = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        sp = top_singular_pair(np.outer(u, np.conj(w)))
        assert sp.sigma == pytest.approx(np.linalg.norm(u) * np.linalg.norm(w), rel=1e-12)
        assert abs(np.vdot(sp.s, u)) == pytest.approx(np.linalg.norm(u), rel=1e-12)
        assert abs(np.vdot(sp.v, w)) == pytest.approx(np.linalg.norm(w), rel=1e-12)

    def test_against_jacobi_oracle(self, rng):
        A = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        U, s, V = oracles.jacobi_svd(A)
        sp = top_singular_pair(A, power_iters=20000, power_tol=1e-15)
        assert sp.sigma == pytest.approx(s[0], rel=1e-8)
        assert abs(np.vdot(sp.s, U[:, 0])) == pytest.approx(1.0, abs=1e-6)

    def test_zero_matrix(self):
        with pytest.raises(DegenerateError):
            top_singular_pair(np.zeros((3, 3)))

    def test_nonconvergence_warns(self, rng):
        A = rng.standard_normal((10, 10))
        with pytest.warns(RuntimeWarning):
            sp = top_singular_pair(A, power_iters=2, power_tol=1e-15)
        assert not sp.converged

    def test_linear_operator_input(self, rng):
        from scipy.sparse.linalg import aslinearoperator
        A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        dense = top_singular_pair(A, power_iters=5000, power_tol=1e-14)
        op = top_singular_pair(aslinearoperator(A), power_iters=5000, power_tol=1e-14)
        assert op.sigma == pytest.approx(dense.sigma, rel=1e-10)


class TestSynthesize:
    def test_fixed_point(self, rng):
        a = random_unimodular(8, rng)
        zone = AmbiguityZone(2, 0.2, 0.2)
        p = lift(a, zone)
        root = np.sqrt(zone.M * 8)
        assert_allclose(synthesize(p.x / root, p.y / root, 8, zone), a, atol=1e-14)

    def test_single_block(self, rng):
        s = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        got = synthesize(s, v, 6, AmbiguityZone(1, 0.0, 0.2))
        assert_allclose(got, np.exp(1j * np.angle(s + v)), atol=1e-14)

    def test_matches_per_k_oracle(self, rng):
        s = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        got = synthesize(s, v, 8, AmbiguityZone(1, 0.2, 0.2))
        assert_allclose(got, oracles.per_k_synthesis(s, v, 8, 2, 0.2), atol=1e-12)

    def test_zero_average_tie(self):
        with pytest.warns(RuntimeWarning):
            out = synthesize(np.zeros(4), np.zeros(4), 4, AmbiguityZone(1, 0.0, 0.2))
        assert_allclose(out, 1.0)

    def test_wrong_length(self):
        with pytest.raises(DimensionError):
            synthesize(np.ones(5), np.ones(5), 4, AmbiguityZone(1, 0.0, 0.2))


def dense_iteration(a, zone):
    """One OA-ITROX step with every matrix materialized and a full SVD."""
    N = a.size
    Y = project_gamma(lift(a, zone).matrix(), N, zone.Z)
    U, s, Vh = np.linalg.svd(Y)
    return synthesize(U[:, 0], np.conj(Vh[0]), N, zone)


class TestDesign:
    @pytest.mark.parametrize("backend", sorted(kernel.LOOPS))
    def test_matches_dense_iterations(self, backend):
        zone = AmbiguityZone(2, 0.4, 0.2)
        cfg = DesignConfig(10, zone, max_iters=5, seed=3, power_tol=1e-14, power_iters=5000)
        rep = design(cfg, backend=backend)
        a = rep.initial_sequence
        for _ in range(5):
            a = dense_iteration(a, zone)
        # singular vectors carry an arbitrary common phase; compare up to it
        c = np.vdot(a, rep.sequence)
        assert_allclose(rep.sequence, a * c / abs(c), atol=1e-8)

    def test_backends_agree(self):
        if "compiled" not in kernel.LOOPS:
            pytest.skip("compiled kernel not built")
        cfg = DesignConfig(16, AmbiguityZone(4, 0.2, 0.1), max_iters=200, seed=5)
        c = design(cfg, backend="compiled")
        p = design(cfg, backend="python")
        assert_allclose(c.sequence, p.sequence, atol=1e-9)
        assert_allclose(c.isl_trace, p.isl_trace, rtol=1e-8)

    def test_trace_is_isl(self):
        zone = AmbiguityZone(4, 0.2, 0.2)
        rep = design(DesignConfig(16, zone, max_iters=20, seed=1))
        assert rep.initial_isl == pytest.approx(isl_oaf(rep.initial_sequence, zone), rel=1e-10)
        assert rep.final_isl == pytest.approx(isl_oaf(rep.sequence, zone), rel=1e-10)
        assert len(rep.isl_trace) == rep.iters_run == 20
        assert rep.trace_iters.tolist() == list(range(1, 21))

    def test_sparse_trace(self):
        rep = design(DesignConfig(16, AmbiguityZone(4, 0.2, 0.2), max_iters=25, seed=1, record_every=10))
        assert rep.trace_iters.tolist() == [10, 20, 25]

    def test_infinite_eps_single_iteration(self):
        rep = design(DesignConfig(16, AmbiguityZone(4, 0.2, 0.2), eps=float("inf")))
        assert rep.iters_run == 1 and len(rep.isl_trace) == 1 and rep.converged

    def test_iterates_unimodular_and_decreasing(self):
        rep = design(DesignConfig(32, AmbiguityZone(8, 0.2, 0.2), max_iters=300, seed=2))
        assert_allclose(np.abs(rep.sequence), 1.0, atol=1e-12)
        assert rep.final_isl < 0.5 * rep.initial_isl

    def test_seed_reproducible(self):
        cfg = DesignConfig(16, AmbiguityZone(4, 0.2, 0.2), max_iters=30, seed=11)
        assert np.array_equal(design(cfg).sequence, design(cfg).sequence)

    def test_custom_initial(self, rng):
        a0 = random_unimodular(16, rng)
        rep = design(DesignConfig(16, AmbiguityZone(4, 0.2, 0.2), max_iters=3), initial=a0)
        assert_allclose(rep.initial_sequence, a0, atol=1e-15)
        with pytest.raises(DimensionError):
            design(DesignConfig(8, AmbiguityZone(2, 0.2, 0.2)), initial=a0)

    @pytest.mark.parametrize("kw", [dict(max_iters=0), dict(eps=0.0), dict(zone=AmbiguityZone(8, 0.2, 0.2)),
                                    dict(zone=AmbiguityZone(2, 2.4, 1.2)), dict(record_every=0)])
    def test_config_validation(self, kw):
        args = dict(N=16, zone=AmbiguityZone(2, 0.2, 0.2))
        args.update(kw)
        with pytest.raises(DomainError):
            DesignConfig(**args)

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            design(DesignConfig(8, AmbiguityZone(1, 0.2, 0.2), max_iters=1), backend="gpu")

    def test_no_warnings_in_normal_run(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            design(DesignConfig(16, AmbiguityZone(4, 0.2, 0.2), max_iters=10))
