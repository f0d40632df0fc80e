import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphceps.errors import ContractError, EmptyInputError
from graphceps.features import (
    FeatureSequence,
    basis_similarity,
    cepstrum,
    fit_pca_basis,
    graph_cepstrum,
    similarity_table,
    spatial_cepstrum,
)
from graphceps.fixtures import fixture_graph, mic_groups
from graphceps.graph import MicGraph, eigenspace_projectors, graph_basis, ring_graph, ring_idft_basis

seeds = st.integers(0, 2**31 - 1)


def test_gc_two_mics():
    b = graph_basis(MicGraph(2, ((0, 1),)))
    e = graph_cepstrum([2.0, 0.0], b, order=2)
    assert e.kind == "GC"
    np.testing.assert_allclose(e.values[0], [math.sqrt(2), math.sqrt(2)], atol=1e-14)


def test_gc_constant_vector():
    b = graph_basis(fixture_graph())
    e = graph_cepstrum(np.full(13, -2.5), b, order=13).values[0]
    assert e[0] == pytest.approx(-2.5 * math.sqrt(13), abs=1e-12)
    assert np.max(np.abs(e[1:])) < 1e-12


def test_gc_is_linear_combination_of_log_amplitudes():
    b = graph_basis(fixture_graph())
    q = np.random.default_rng(1).standard_normal((5, 13))
    e = graph_cepstrum(q, b, order=7).values
    for k in range(7):
        np.testing.assert_allclose(e[:, k], [sum(b.u[k, n] * row[n] for n in range(13)) for row in q])


def test_gc_contract_errors():
    b = graph_basis(fixture_graph())
    with pytest.raises(ContractError):
        graph_cepstrum(np.zeros(12), b)
    with pytest.raises(ContractError):
        graph_cepstrum(np.zeros(13), b, order=14)


@given(seeds, st.floats(1e-3, 1e3))
@settings(max_examples=50, deadline=None)
def test_common_gain_shifts_only_coefficient_zero(seed, g):
    b = graph_basis(fixture_graph(0.01))
    q = np.random.default_rng(seed).standard_normal((4, 13))
    e0 = graph_cepstrum(q, b, 13).values
    e1 = graph_cepstrum(q + math.log(g), b, 13).values
    np.testing.assert_allclose(e1[:, 0] - e0[:, 0], math.log(g) * math.sqrt(13), atol=1e-10)
    np.testing.assert_allclose(e1[:, 1:], e0[:, 1:], atol=1e-10)


@pytest.mark.parametrize("alpha", [0.0, 0.001, 0.01, 0.1])
@pytest.mark.parametrize("group", range(5))
def test_far_source_nulling(alpha, group):
    b = graph_basis(fixture_graph(alpha))
    members = list(mic_groups()[group])
    q = np.random.default_rng(group).standard_normal(13)
    q[members] = 0.7
    e = graph_cepstrum(q, b, 13).values[0]
    outside = np.setdiff1d(np.arange(13), members)
    local = [
        k
        for k in range(13)
        if np.max(np.abs(b.u[k, outside])) < 1e-9 and abs(b.u[k, members].sum()) < 1e-9
    ]
    assert len(local) == len(members) - 1
    for k in local:
        assert abs(e[k]) <= 1e-9


@pytest.mark.parametrize("n", [4, 5, 8, 13])
def test_ring_gc_matches_idft_energy(n):
    rng = np.random.default_rng(n)
    half = rng.standard_normal(n)
    q = np.array([half[min(i, n - i)] for i in range(n)])  # q[i] == q[n - i]
    b = graph_basis(ring_graph(n))
    e = graph_cepstrum(q, b, n).values[0]
    c = ring_idft_basis(n) @ q
    assert np.max(np.abs(c.imag)) < 1e-10
    lam_idft = 2 - 2 * np.cos(2 * np.pi * np.arange(n) / n)
    for proj in eigenspace_projectors(b):
        members = [k for k in range(n) if abs(np.trace(proj @ np.outer(b.u[k], b.u[k])) - 1) < 1e-6]
        lam = b.lam[members[0]]
        idft_members = np.flatnonzero(np.abs(lam_idft - lam) < 1e-8)
        gc_energy = float(np.sum(e[members] ** 2))
        assert gc_energy == pytest.approx(float(q @ proj @ q), abs=1e-8)
        assert gc_energy == pytest.approx(float(np.sum(np.abs(c[idft_members]) ** 2)), abs=1e-8)


def test_pca_rank_one():
    t = np.linspace(-3, 3, 50)
    q = np.zeros((50, 4))
    q[:, 2] = t
    p = fit_pca_basis(q)
    np.testing.assert_allclose(p.e_t[0], [0, 0, 1, 0], atol=1e-12)
    assert p.eigvals[0] == pytest.approx(np.mean(t * t))
    assert p.frames_used == 50


@given(seeds, st.integers(2, 9))
@settings(max_examples=30, deadline=None)
def test_pca_invariants(seed, n):
    q = np.random.default_rng(seed).standard_normal((3 * n, n)) + 1.5
    p = fit_pca_basis(q)
    r = q.T @ q / q.shape[0]
    assert np.max(np.abs(p.e_t @ p.e_t.T - np.eye(n))) <= 1e-10
    assert np.all(np.diff(p.eigvals) <= 0) and p.eigvals[-1] >= -1e-10
    assert np.max(np.abs(p.e_t.T @ np.diag(p.eigvals) @ p.e_t - r)) <= 1e-9
    np.testing.assert_allclose(np.sort(p.eigvals), np.linalg.eigvalsh(r), atol=1e-9)


def test_pca_no_mean_subtraction_versus_centered():
    rng = np.random.default_rng(4)
    q = rng.standard_normal((400, 3)) * [0.1, 1.0, 0.1] + [5.0, 0.0, 0.0]
    raw = fit_pca_basis(q)
    centered = fit_pca_basis(q, centered=True)
    assert abs(raw.e_t[0, 0]) > 0.99  # dominated by the mean offset
    assert abs(centered.e_t[0, 1]) > 0.99  # dominated by the variance
    d = spatial_cepstrum(q, centered, 3).values
    np.testing.assert_allclose(d.mean(axis=0), 0, atol=1e-12)


def test_pca_errors_and_warning():
    with pytest.raises(EmptyInputError):
        fit_pca_basis(np.zeros((0, 3)))
    with pytest.warns(UserWarning):
        fit_pca_basis(np.random.default_rng(0).standard_normal((2, 5)))


def test_sc_examples():
    q = np.random.default_rng(2).standard_normal((40, 5))
    p = fit_pca_basis(q)
    for j in range(5):
        d = spatial_cepstrum(p.e_t[j], p, 5).values[0]
        np.testing.assert_allclose(d, np.eye(5)[j], atol=1e-12)
    d = spatial_cepstrum(q, p, 5).values
    np.testing.assert_allclose(d @ p.e_t, q, atol=1e-10)
    np.testing.assert_array_equal(spatial_cepstrum(np.zeros(5), p, 3).values, np.zeros((1, 3)))
    with pytest.raises(ContractError):
        spatial_cepstrum(np.zeros(4), p)


def _explicit_idft(omega):
    j, k = np.meshgrid(np.arange(omega), np.arange(omega), indexing="ij")
    return np.exp(2j * np.pi * j * k / omega) / math.sqrt(omega)


@given(seeds, st.integers(2, 64), st.integers(1, 64))
@settings(max_examples=40, deadline=None)
def test_cepstrum_matches_explicit_matrix(seed, omega, order):
    order = min(order, omega)
    p = np.random.default_rng(seed).standard_normal((3, omega))
    expected = (p @ _explicit_idft(omega).T).real[:, :order]
    np.testing.assert_allclose(cepstrum(p, order).values, expected, atol=1e-10)


def test_cepstrum_examples():
    c = cepstrum(np.full(33, 1.7), 13).values[0]
    assert c[0] == pytest.approx(1.7 * math.sqrt(33))
    assert np.max(np.abs(c[1:])) < 1e-12
    half = np.random.default_rng(5).standard_normal(17)
    even = np.array([half[min(i, 32 - i)] for i in range(32)])
    full = _explicit_idft(32) @ even
    assert np.max(np.abs(full.imag)) < 1e-10
    p1, p2 = np.random.default_rng(6).standard_normal((2, 20))
    np.testing.assert_allclose(
        cepstrum(p1 + p2, 20).values, cepstrum(p1, 20).values + cepstrum(p2, 20).values, atol=1e-10
    )
    with pytest.raises(ContractError):
        cepstrum(np.zeros(5), 6)


def test_similarity_examples():
    m = np.random.default_rng(0).standard_normal((4, 4))
    assert basis_similarity(m, m) == 0.0
    assert basis_similarity(m, -m) == 0.0
    assert basis_similarity(m, np.zeros((4, 4))) == pytest.approx(np.sum(m * m))
    with pytest.raises(ContractError):
        basis_similarity(m, m[:3])


@given(seeds, st.lists(st.booleans(), min_size=5, max_size=5), st.lists(st.booleans(), min_size=5, max_size=5))
@settings(max_examples=40, deadline=None)
def test_similarity_row_sign_flip_invariance(seed, f1, f2):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 5, 5))
    s1 = np.where(f1, -1.0, 1.0)[:, None]
    s2 = np.where(f2, -1.0, 1.0)[:, None]
    assert basis_similarity(a * s1, b * s2) == basis_similarity(a, b)
    assert basis_similarity(a, b) == basis_similarity(b, a)


def test_similarity_table_structure():
    rng = np.random.default_rng(1)
    named = {k: rng.standard_normal((3, 3)) for k in "abc"}
    names, table = similarity_table(named)
    assert names == ["a", "b", "c"]
    np.testing.assert_array_equal(table, table.T)
    np.testing.assert_array_equal(np.diag(table), 0)


def test_feature_sequence_validation():
    with pytest.raises(ContractError):
        FeatureSequence(np.zeros((2, 2)), "MFCC")
    seq = FeatureSequence(np.zeros((5, 3)), "SC")
    assert (seq.n_frames, seq.order) == (5, 3)
