"""Property-based checks of the algebraic identities the package relies on."""

import numpy as np
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from olaz.afcore import (AmbiguityZone, ds, isl_oaf, oaf, oaf_all_delays, pcaf,
                         zero_delay_magnitude)
from olaz.baselines import rank_family
from olaz.channel import qpsk_demap, qpsk_map
from olaz.designer import block, lift, project_gamma, synthesize
from olaz.estimator import LsEstimator, crlb

import oracles

lengths = st.integers(min_value=2, max_value=24)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def unimodular(N, seed):
    return np.exp(2j * np.pi * np.random.default_rng(seed).random(N))


@st.composite
def zones(draw, N):
    Z = draw(st.integers(min_value=0, max_value=(N - 1) // 2))
    f_delta = draw(st.sampled_from([0.1, 0.2, 0.25, 0.5, 1.0]))
    m = draw(st.integers(min_value=0, max_value=3))
    return AmbiguityZone(Z, m * f_delta, f_delta)


@given(lengths, seeds, st.integers(-40, 40), st.integers(-40, 40))
def test_oaf_equals_pcaf_at_integer_doppler(N, seed, tau, f):
    a = unimodular(N, seed)
    assert abs(oaf(a, a, tau, f) - pcaf(a, a, tau, f)) < 1e-12 * N


@given(lengths, seeds, st.floats(-50, 50, allow_nan=False))
def test_zero_delay_closed_form(N, seed, f):
    a = unimodular(N, seed)
    assert abs(abs(oaf(a, a, 0, f)) - zero_delay_magnitude(f, N)) < 1e-9 * N


@given(lengths, seeds)
def test_constant_volume(N, seed):
    a = unimodular(N, seed)
    vol = sum(np.sum(np.abs(oaf_all_delays(a, f)) ** 2) for f in range(N))
    assert abs(vol - N ** 3) <= 1e-10 * N ** 3


@given(lengths, seeds, st.integers(-30, 30), st.floats(-3, 3, allow_nan=False))
def test_delay_periodicity(N, seed, tau, f):
    a = unimodular(N, seed)
    assert oaf(a, a, tau + N, f) == oaf(a, a, tau, f)


@given(st.integers(2, 16), seeds, st.data())
def test_block_diagonal_sums_reproduce_oaf(N, seed, data):
    a = unimodular(N, seed)
    zone = data.draw(zones(N))
    X = lift(a, zone).matrix()
    for m in range(zone.M):
        f = m * zone.f_delta
        col = [abs(ds(block(X, m, 0, N), t)) for t in range(N)]
        row = [abs(ds(block(X, 0, m, N), t)) for t in range(N)]
        assert_allclose(col, [abs(oaf(a, a, t, f)) for t in range(N)], atol=1e-10)
        assert_allclose(row, [abs(oaf(a, a, -t, -f)) for t in range(N)], atol=1e-10)


@settings(max_examples=40)
@given(st.integers(3, 10), seeds, st.data())
def test_projection_constraints_and_idempotence(N, seed, data):
    zone = data.draw(zones(N))
    rng = np.random.default_rng(seed)
    X = lift(unimodular(N, seed), zone).matrix() + 0.1 * rng.standard_normal((zone.M * N,) * 2)
    Y = project_gamma(X, N, zone.Z)
    lags = list(range(1, zone.Z + 1)) + list(range(N - zone.Z, N))
    for m in range(zone.M):
        for t in lags:
            assert abs(ds(block(Y, m, 0, N), t)) < 1e-12
            assert abs(ds(block(Y, 0, m, N), t)) < 1e-12
    assert_allclose(project_gamma(Y, N, zone.Z), Y, atol=1e-14)
    assert_allclose(project_gamma(X, N, zone.Z), oracles.loop_project(X, N, zone.Z), atol=1e-13)


@given(st.integers(2, 16), seeds, st.data())
def test_synthesis_fixed_point(N, seed, data):
    zone = data.draw(zones(N))
    a = unimodular(N, seed)
    p = lift(a, zone)
    root = np.sqrt(zone.M * N)
    assert_allclose(synthesize(p.x / root, p.y / root, N, zone), a, atol=1e-12)


@given(st.integers(8, 20), seeds, st.floats(0, 2 * np.pi))
def test_isl_phase_invariant(N, seed, phase):
    a = unimodular(N, seed)
    zone = AmbiguityZone(min(3, N // 2 - 1), 0.4, 0.2)
    assert abs(isl_oaf(a * np.exp(1j * phase), zone) - isl_oaf(a, zone)) <= 1e-9 * isl_oaf(a, zone)


@given(st.integers(8, 20), seeds, st.integers(0, 19))
def test_isl_shift_invariant_on_integer_grid(N, seed, shift):
    # zeta_N**(f N) = 1 only for integer f, so cyclic shifts leave |AF| unchanged
    # on the integer Doppler grid but not on a fractional one
    a = unimodular(N, seed)
    zone = AmbiguityZone(min(3, N // 2 - 1), 2, 1)
    assert abs(isl_oaf(np.roll(a, shift), zone) - isl_oaf(a, zone)) <= 1e-9 * isl_oaf(a, zone)


def test_shift_changes_fractional_isl():
    a = unimodular(8, 0)
    zone = AmbiguityZone(3, 0.4, 0.2)
    assert abs(isl_oaf(np.roll(a, 1), zone) - isl_oaf(a, zone)) > 1e-3


@settings(max_examples=25)
@given(st.lists(seeds, min_size=1, max_size=5), st.floats(0, 2 * np.pi))
def test_ranking_phase_invariant(family_seeds, phase):
    fam = [unimodular(12, s) for s in family_seeds]
    zone = AmbiguityZone(3, 0.2, 0.2)
    a, b = rank_family(fam, zone), rank_family([x * np.exp(1j * phase) for x in fam], zone)
    assert (a.best_index, a.worst_index) == (b.best_index, b.worst_index)


@settings(max_examples=30)
@given(st.integers(8, 32), seeds, st.integers(1, 6))
def test_ls_recovers_static_channel(N, seed, L):
    a = unimodular(N, seed)
    rng = np.random.default_rng(seed + 1)
    try:
        est = LsEstimator(a, L)
    except ArithmeticError:
        return
    h = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    assert_allclose(est(oracles.circulant_convolve(a, h)), h, atol=1e-8)


@given(st.lists(st.integers(0, 1), min_size=2, max_size=64).filter(lambda b: len(b) % 2 == 0))
def test_qpsk_round_trip(bits):
    assert qpsk_demap(qpsk_map(bits)).tolist() == bits


@given(st.integers(1, 64), st.integers(2, 256), st.floats(0, 10), st.floats(0, 10))
def test_crlb_linear(n_cp, N, s1, s2):
    assert abs(crlb(n_cp, N, s1 + s2) - crlb(n_cp, N, s1) - crlb(n_cp, N, s2)) < 1e-12
