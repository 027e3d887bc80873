import numpy as np
import pytest
from numpy.testing import assert_allclose

from olaz.afcore import AmbiguityZone, isl_oaf
from olaz.baselines import (MseqParams, ZcParams, is_primitive, list_primitive_polys, mseq,
                            mseq_bits, mseq_extended, mseq_family, poly_str, rank_family, zc,
                            zc_family, zc_roots)
from olaz.errors import DomainError

import oracles


class TestZadoffChu:
    @pytest.mark.parametrize("N,mu", [(7, 1), (7, 3), (13, 5), (128, 1), (128, 125), (63, 2)])
    def test_perfect_autocorrelation(self, N, mu):
        a = zc(ZcParams(N, mu))
        pacf = oracles.brute_pacf_values(a)
        assert abs(pacf[0]) == pytest.approx(N)
        assert np.max(np.abs(pacf[1:])) < 1e-9

    def test_even_length_formula(self):
        k = np.arange(128)
        assert_allclose(zc(ZcParams(128, 3)), np.exp(-1j * np.pi * 3 * k ** 2 / 128), atol=1e-12)

    def test_unimodular(self):
        assert_allclose(np.abs(zc(ZcParams(64, 7))), 1.0, atol=1e-15)

    def test_family_size(self):
        assert len(zc_roots(128)) == 64
        assert all(mu % 2 for mu in zc_roots(128))
        fam, roots = zc_family(16)
        assert len(fam) == len(roots) == 8

    @pytest.mark.parametrize("N,mu", [(8, 2), (8, 0), (8, 16), (1, 1)])
    def test_invalid(self, N, mu):
        with pytest.raises(DomainError):
            ZcParams(N, mu)

    def test_upper_root_range_allowed(self):
        assert_allclose(zc(ZcParams(8, 9)), zc(ZcParams(8, 1)) ** 9, atol=1e-12)


class TestPrimitivePolynomials:
    def test_degree2(self):
        assert list_primitive_polys(2) == [0b111]

    def test_degree3(self):
        assert [poly_str(p) for p in list_primitive_polys(3)] == ["x^3+x+1", "x^3+x^2+1"]

    def test_degree7_count(self):
        assert len(list_primitive_polys(7)) == 18

    @pytest.mark.parametrize("d,count", [(4, 2), (5, 6), (6, 6), (8, 16)])
    def test_known_counts(self, d, count):
        # phi(2^d - 1) / d
        assert len(list_primitive_polys(d)) == count

    def test_irreducible_but_not_primitive(self):
        # x^4+x^3+x^2+x+1 divides x^5 - 1, so x has order 5
        assert not is_primitive(0b11111, 4)

    @pytest.mark.parametrize("d", [1, 17])
    def test_degree_range(self, d):
        with pytest.raises(DomainError):
            list_primitive_polys(d)


class TestMSequence:
    @pytest.mark.parametrize("d", [3, 4, 5, 6, 7])
    def test_two_valued_pacf(self, d):
        for p in list_primitive_polys(d):
            s = mseq(MseqParams(d, p))
            pacf = oracles.brute_pacf_values(s)
            assert pacf[0] == pytest.approx(len(s))
            assert_allclose(pacf[1:], -1.0, atol=1e-9)

    def test_is_shift_of_trace_form(self):
        for d in (3, 5, 7):
            for p in list_primitive_polys(d):
                b = mseq_bits(MseqParams(d, p))
                t = np.array(oracles.lfsr_trace_bits(p, d))
                assert any(np.array_equal(np.roll(t, -k), b) for k in range(t.size))

    def test_extension(self):
        s = mseq_extended(MseqParams(7, list_primitive_polys(7)[0]))
        assert s.size == 128
        assert s[-1] == 1
        assert set(np.unique(s.real)) <= {-1.0, 1.0}
        assert np.all(s.imag == 0)

    def test_degree3_sequence(self):
        # x^3 + x + 1, all-ones state: s[k+3] = s[k] + s[k+1]
        assert mseq_bits(MseqParams(3, 0b1011)).tolist() == [1, 1, 1, 0, 0, 1, 0]

    def test_rejects_non_primitive(self):
        with pytest.raises(DomainError):
            MseqParams(4, 0b11111)

    def test_family(self):
        fam, polys = mseq_family(5)
        assert len(fam) == 6 and all(a.size == 32 for a in fam)


class TestRankFamily:
    def test_singleton(self):
        a = zc(ZcParams(16, 1))
        r = rank_family([a], AmbiguityZone(2, 0.2, 0.2))
        assert r.best is r.worst
        assert r.best_index == r.worst_index == 0

    def test_table_matches_metric(self):
        fam, _ = zc_family(32)
        zone = AmbiguityZone(8, 0.2, 0.2)
        r = rank_family(fam, zone)
        assert [i for i, _ in r.table] == list(range(len(fam)))
        isl = [isl_oaf(a, zone) for a in fam]
        assert_allclose([v for _, v in r.table], isl, rtol=1e-12)
        isl = np.array(isl)
        assert r.best_index == np.flatnonzero(np.isclose(isl, isl.min(), rtol=1e-9, atol=0))[0]
        assert r.worst_index == np.flatnonzero(np.isclose(isl, isl.max(), rtol=1e-9, atol=0))[0]

    def test_ties_go_to_lowest_index(self):
        a = zc(ZcParams(16, 3))
        r = rank_family([a, a.copy(), a * 1j], AmbiguityZone(2, 0.2, 0.2))
        assert r.best_index == 0 and r.worst_index == 0

    def test_phase_invariance(self):
        fam, _ = zc_family(32)
        zone = AmbiguityZone(8, 0.2, 0.2)
        base = rank_family(fam, zone)
        moved = rank_family([a * np.exp(0.3j * i) for i, a in enumerate(fam)], zone)
        assert (moved.best_index, moved.worst_index) == (base.best_index, base.worst_index)

    def test_shift_invariance_on_integer_grid(self):
        fam = [np.exp(2j * np.pi * np.random.default_rng(s).random(16)) for s in range(6)]
        zone = AmbiguityZone(4, 2, 1)
        base = rank_family(fam, zone)
        moved = rank_family([np.roll(a, 3 + i) for i, a in enumerate(fam)], zone)
        assert (moved.best_index, moved.worst_index) == (base.best_index, base.worst_index)

    def test_errors(self):
        with pytest.raises(DomainError):
            rank_family([], AmbiguityZone(2, 0.2, 0.2))
        with pytest.raises(DomainError):
            rank_family([np.ones(4), np.ones(8)], AmbiguityZone(1, 0.2, 0.2))

    def test_csv(self, tmp_path):
        fam, roots = zc_family(8)
        r = rank_family(fam, AmbiguityZone(2, 0.2, 0.2))
        r.to_csv(tmp_path / "r.csv", roots)
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "index,param,isl"
        assert len(lines) == 5
        assert lines[1].startswith("0,1,")
