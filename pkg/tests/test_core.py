import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypervsa import core
from hypervsa.core import BinaryHypervector, CyclicHypervector, CyclicSimilaritySpec
from hypervsa.rng import SeededRng


@st.composite
def sign_vectors(draw, count=1, min_dim=1, max_dim=300):
    dim = draw(st.integers(min_dim, max_dim))
    seed = draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed)
    return [BinaryHypervector.from_signs(g.choice([-1, 1], size=dim)) for _ in range(count)]


@st.composite
def cyclic_vectors(draw, count=1, max_dim=300, orders=(2, 3, 4, 5, 8, 16, 255)):
    dim = draw(st.integers(1, max_dim))
    n = draw(st.sampled_from(orders))
    seed = draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed)
    return [CyclicHypervector(n, g.integers(0, n, size=dim)) for _ in range(count)]


def naive_similarity(u, v):
    return float(np.mean(u.signs().astype(float) * v.signs()))


# --- binary -------------------------------------------------------------------


def test_similarity_examples():
    u = BinaryHypervector.from_signs([1, 1, -1, -1])
    v = BinaryHypervector.from_signs([1, -1, -1, 1])
    assert core.similarity_binary(u, v) == 0.0
    assert core.similarity_binary(u, u) == 1.0
    assert core.similarity_binary(u, -u) == -1.0


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        core.similarity_binary(BinaryHypervector.ones(4), BinaryHypervector.ones(5))
    with pytest.raises(ValueError):
        core.bind_binary(BinaryHypervector.ones(4), BinaryHypervector.ones(5))


@given(sign_vectors(count=2))
def test_similarity_matches_naive_sum(vs):
    u, v = vs
    assert core.similarity_binary(u, v) == naive_similarity(u, v)


@given(sign_vectors(count=1))
def test_padding_bits_are_zero(vs):
    (u,) = vs
    mask = core.tail_mask(u.dim)
    assert (u.words[-1] & ~mask) == 0
    assert ((-u).words[-1] & ~mask) == 0
    assert (core.bind_binary(u, -u).words[-1] & ~mask) == 0


def test_padding_bits_rejected():
    with pytest.raises(ValueError):
        BinaryHypervector(3, np.array([0xFF], dtype=np.uint64))


@given(sign_vectors(count=3))
def test_binding_preserves_similarity_exactly(vs):
    u, v, w = vs
    assert core.similarity(core.bind(u, w), core.bind(v, w)) == core.similarity(u, v)


@given(sign_vectors(count=2))
def test_binding_identity_and_self_inverse(vs):
    u, _ = vs
    one = BinaryHypervector.ones(u.dim)
    assert core.bind(u, u) == one
    assert core.bind(u, one) == u
    assert np.array_equal(core.bind(*vs).signs(), vs[0].signs() * vs[1].signs())


def test_bundle_examples():
    g = np.random.default_rng(0)
    u, w = (BinaryHypervector.from_signs(g.choice([-1, 1], 257)) for _ in range(2))
    assert core.bundle_binary([u], rng=1) == u
    assert core.bundle_binary([u, u, w], rng=1) == u
    with pytest.raises(ValueError):
        core.bundle_binary([])


def test_bundle_ties_use_rng_and_are_reproducible():
    u = BinaryHypervector.from_signs(np.ones(4000))
    a = core.bundle_binary([u, -u], rng=SeededRng(5))
    b = core.bundle_binary([u, -u], rng=SeededRng(5))
    c = core.bundle_binary([u, -u], rng=SeededRng(6))
    assert a == b and a != c
    assert abs(a.signs().mean()) < 0.1  # fair coin per tied coordinate


def test_bundle_of_three_has_similarity_one_half():
    vs = [core.random_binary(100_000, rng=SeededRng(1, (i,))) for i in range(3)]
    b = core.bundle_binary(vs, rng=0)
    assert np.mean([core.similarity(b, v) for v in vs]) == pytest.approx(0.5, abs=0.01)


def test_random_binary():
    assert core.random_binary(50, p_plus=1.0, rng=0) == BinaryHypervector.ones(50)
    a, b = core.random_binary(100_000, rng=1), core.random_binary(100_000, rng=2)
    assert abs(core.similarity(a, b)) < 0.02
    with pytest.raises(ValueError):
        core.random_binary(10, p_plus=1.5)


# --- permutation ----------------------------------------------------------------


def test_permute_examples():
    v = CyclicHypervector(5, [0, 1, 2, 3])
    assert list(core.permute(v, 1).elems) == [3, 0, 1, 2]
    assert core.permute(v, 0) == v
    assert core.permute(v, 4) == v


@given(sign_vectors(count=2), st.integers(-1000, 1000))
def test_permutation_preserves_similarity_binary(vs, j):
    u, v = vs
    assert core.similarity(core.permute(u, j), core.permute(v, j)) == core.similarity(u, v)
    assert core.permute(core.permute(u, j), -j) == u


@given(cyclic_vectors(count=2), st.integers(-1000, 1000))
def test_permutation_preserves_similarity_cyclic(vs, j):
    u, v = vs
    assert core.similarity(core.permute(u, j), core.permute(v, j)) == core.similarity(u, v)
    assert core.permute(core.permute(u, j), -j) == u


# --- cyclic ----------------------------------------------------------------------


def test_cyclic_similarity_examples():
    u = CyclicHypervector(4, [0, 1, 2, 3])
    v = CyclicHypervector(4, [2, 3, 0, 1])
    assert core.similarity(u, v) == -1.0
    a = CyclicHypervector(3, [0, 1, 2, 0])
    b = CyclicHypervector(3, [1, 2, 0, 1])
    assert core.similarity(a, b) == -0.5
    assert core.similarity(a, a) == 1.0


def test_cyclic_mismatch_rejected():
    with pytest.raises(ValueError):
        core.similarity(CyclicHypervector(3, [0, 1]), CyclicHypervector(4, [0, 1]))
    with pytest.raises(ValueError):
        core.bind(CyclicHypervector(3, [0, 1]), CyclicHypervector(3, [0, 1, 2]))
    with pytest.raises(ValueError):
        CyclicHypervector(3, [0, 3])


def test_bind_cyclic_examples():
    assert list(core.bind(CyclicHypervector(5, [3]), CyclicHypervector(5, [4])).elems) == [2]
    u = core.random_cyclic(64, 7, rng=0)
    assert core.bind(u, CyclicHypervector.zeros(64, 7)) == u
    assert core.bind(u, core.invert_cyclic(u)) == CyclicHypervector.zeros(64, 7)


@given(cyclic_vectors(count=3))
def test_cyclic_binding_preserves_similarity_exactly(vs):
    g, x, y = vs
    assert core.similarity(core.bind(g, x), core.bind(g, y)) == core.similarity(x, y)


@given(st.integers(2, 64), st.data())
def test_similarity_table_invariants(n, data):
    half = [data.draw(st.floats(0, 5)) for _ in range(n // 2)]
    alpha = np.zeros(n - 1)
    for k in range(1, n // 2 + 1):
        alpha[k - 1] = alpha[n - k - 1] = half[k - 1]
    if alpha.sum() == 0:
        alpha[0] = alpha[-1] = 1.0
    spec = CyclicSimilaritySpec(n, tuple(alpha))
    t = spec.table
    assert t[0] == 1.0
    assert np.all(t[1:] == t[1:][::-1])
    assert np.all(np.abs(t) <= 1 + 1e-12)
    d = np.arange(n)
    ref = (alpha[None, :] * np.cos(2 * np.pi * np.outer(d, np.arange(1, n)) / n)).sum(1) / alpha.sum()
    assert np.allclose(t, ref, atol=1e-12)
    for x in range(n):
        assert abs(t[(d - x) % n].mean()) <= 1e-12


def test_alpha_validation():
    with pytest.raises(ValueError):
        CyclicSimilaritySpec(4, (1.0, 0.0, 0.0))  # not symmetric
    with pytest.raises(ValueError):
        CyclicSimilaritySpec(4, (0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        CyclicSimilaritySpec(1)


def test_bundle_cyclic_examples():
    g = np.random.default_rng(1)
    u = CyclicHypervector(3, g.integers(0, 3, 500))
    w = CyclicHypervector(3, g.integers(0, 3, 500))
    assert core.bundle_cyclic([u], rng=0) == u
    assert core.bundle_cyclic([u, u, w], rng=0) == u


@given(cyclic_vectors(count=5, max_dim=80, orders=(3, 4, 5, 8)), st.integers(0, 2**32 - 1))
def test_bundle_cyclic_is_maximal(vs, seed):
    spec = core.standard_spec(vs[0].order)
    b = core.bundle_cyclic(vs, spec, rng=seed)
    n = vs[0].order
    elems = np.stack([v.elems for v in vs]).astype(int)
    for i in range(vs[0].dim):
        scores = [spec.table[(g - elems[:, i]) % n].sum() for g in range(n)]
        assert scores[b.elems[i]] >= max(scores) - 1e-9


def test_random_cyclic_is_dissimilar():
    a, b = core.random_cyclic(100_000, 8, rng=1), core.random_cyclic(100_000, 8, rng=2)
    assert abs(core.similarity(a, b)) < 0.02


# --- n = 2 against binary -----------------------------------------------------------


@given(sign_vectors(count=3), st.integers(-50, 50), st.integers(0, 2**32 - 1))
def test_order_two_matches_binary(vs, j, seed):
    u, v, w = vs
    cu, cv, cw = (core.binary_to_cyclic(x) for x in vs)
    assert core.cyclic_to_binary(cu) == u
    assert core.similarity(cu, cv) == core.similarity(u, v)
    assert core.cyclic_to_binary(core.bind(cu, cv)) == core.bind(u, v)
    assert core.cyclic_to_binary(core.permute(cu, j)) == core.permute(u, j)
    assert core.cyclic_to_binary(core.invert_cyclic(cu)) == u
    # odd bundle: no ties, so the rules must agree coordinate by coordinate
    assert core.cyclic_to_binary(core.bundle_cyclic([cu, cv, cw], rng=seed)) == core.bundle_binary([u, v, w], rng=seed)


def test_order_two_tie_breaking_matches_binary():
    u = core.random_binary(777, rng=3)
    cu = core.binary_to_cyclic(u)
    for seed in range(5):
        b = core.bundle_binary([u, -u], rng=seed)
        c = core.bundle_cyclic([cu, core.binary_to_cyclic(-u)], rng=seed)
        assert core.cyclic_to_binary(c) == b


# --- records ------------------------------------------------------------------------


@given(sign_vectors(count=1))
def test_binary_record_round_trip(vs):
    (u,) = vs
    rec = core.to_record(u)
    assert rec[:4] == b"HV01" and rec[4] == 0 and rec[5] == 0
    v, end = core.from_record(rec)
    assert v == u and end == len(rec)
    assert core.to_record(v) == rec


@given(cyclic_vectors(count=1))
def test_cyclic_record_round_trip(vs):
    (u,) = vs
    rec = core.to_record(u)
    v, end = core.from_record(rec)
    assert v == u and end == len(rec) and core.to_record(v) == rec


def test_record_errors():
    rec = core.to_record(core.random_binary(100, rng=0))
    with pytest.raises(ValueError):
        core.from_record(rec[:-1])
    with pytest.raises(ValueError):
        core.from_record(b"XXXX" + rec[4:])


# --- rng ------------------------------------------------------------------------------


def test_rng_streams():
    a = SeededRng(7).child(3).generator().random(4)
    b = SeededRng(7).child(3).generator().random(4)
    c = SeededRng(7).child(4).generator().random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    with pytest.raises(ValueError):
        SeededRng(-1)


def test_threads_env_override(monkeypatch):
    from hypervsa.rng import resolve_threads

    monkeypatch.setenv("HYPERVSA_THREADS", "3")
    assert resolve_threads(1) == 3
    monkeypatch.delenv("HYPERVSA_THREADS")
    assert resolve_threads(2) == 2
