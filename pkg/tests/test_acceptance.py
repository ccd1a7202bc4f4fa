"""Acceptance criteria, one test per line of the summary printed at the end of the run.

Each test records its measured values; the terminal summary shows one
PASS/FAIL/SKIP line per criterion. Dataset-backed criteria read
``$HYPERVSA_DATA/<name>`` and skip when the directory is absent.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from hypervsa import analysis, core, expressivity, learn, rff
from hypervsa.cli import main
from hypervsa.core import BINARY, Family
from hypervsa.encoding import EncodedSet, Encoder, build_basis, quantize_features
from hypervsa.harness import synth
from hypervsa.harness.data import load_directory
from hypervsa.learn import TrainConfig
from hypervsa.rff import SimilarityTarget
from hypervsa.rng import SeededRng

from conftest import data_dir

acceptance = pytest.mark.acceptance


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


# --- 1 ------------------------------------------------------------------------------------


@acceptance("01 expressivity gate")
def test_expressivity_gate(tmp_path, capsys, record_property):
    half = tmp_path / "half.txt"
    third = tmp_path / "third.txt"
    SimilarityTarget.constant(3, -0.5).write(half)
    SimilarityTarget.constant(3, -1 / 3).write(third)
    with Timer() as t:
        rc1 = main(["expressivity", "check", "--target", str(half), "--eps", "0.01"])
        out1 = capsys.readouterr().out
        rc2 = main(["expressivity", "check", "--target", str(third), "--eps", "1e-9"])
        out2 = capsys.readouterr().out
    record_property("seconds", round(t.seconds, 3))
    assert rc1 == 0 and out1.splitlines()[0] == "INFEASIBLE"
    assert rc2 == 0 and out2.splitlines()[0] == "FEASIBLE"
    report = json.loads(out2.split("\n", 1)[1])
    weights = dict(zip(map(tuple, report["atoms"]), report["weights"]))
    record_property("weights", [round(w, 12) for w in report["weights"]])
    assert weights[(1, 1, 1)] == pytest.approx(0.0, abs=1e-8)
    for atom in ((1, 1, -1), (1, -1, 1), (1, -1, -1)):
        assert weights[atom] == pytest.approx(1 / 3, abs=1e-8)
    assert t.seconds < 1.0


# --- 2 ------------------------------------------------------------------------------------


@acceptance("02 sign-correlation Monte Carlo")
def test_sign_correlation_monte_carlo(record_property):
    worst = 0.0
    with Timer() as t:
        for i, rho in enumerate((-0.9, -0.5, 0.0, 0.5, 0.9)):
            cov = np.array([[1.0, rho], [rho, 1.0]])
            g = SeededRng(2, (i,)).generator().multivariate_normal(np.zeros(2), cov, size=200_000)
            emp = float(np.mean(np.sign(g[:, 0]) * np.sign(g[:, 1])))
            worst = max(worst, abs(emp - 2 / math.pi * math.asin(rho)))
    record_property("max_abs_error", round(worst, 5))
    record_property("seconds", round(t.seconds, 3))
    assert worst <= 0.01
    assert rff.arcsine_moment(0.5) == 1 / 3
    assert t.seconds < 5.0


# --- 3 ------------------------------------------------------------------------------------


@acceptance("03a correlated sampling: off-diagonal -1/3")
def test_sampling_minus_one_third(record_property):
    with Timer() as t:
        basis = rff.sample_correlated_binary(SimilarityTarget.constant(3, -1 / 3), 100_000, SeededRng(3))
        s = rff.empirical_similarity(basis)
    err = float(np.abs(s[~np.eye(3, dtype=bool)] + 1 / 3).max())
    record_property("max_abs_error", round(err, 5))
    record_property("seconds", round(t.seconds, 3))
    assert err <= 0.02
    assert t.seconds < 30.0


@acceptance("03b correlated sampling: RBF sigma=16 over 256 levels")
def test_sampling_rbf(record_property):
    target = rff.rbf_target(np.arange(256, dtype=np.float64), 16.0)
    with Timer() as t:
        basis = rff.sample_correlated_binary(target, 100_000, SeededRng(4))
    idx = np.arange(0, 256, 16)
    emp = rff.empirical_similarity(basis)[np.ix_(idx, idx)]
    err = float(np.abs(emp - target.entries[np.ix_(idx, idx)]).max())
    record_property("max_abs_error", round(err, 5))
    record_property("seconds", round(t.seconds, 3))
    assert err <= 0.03
    assert t.seconds < 30.0


# --- 4 ------------------------------------------------------------------------------------


@acceptance("04 bundling angle")
def test_bundling_angle(record_property):
    assert round(expressivity.bundling_angle_theory(1), 3) == 60.0
    worst = 0.0
    with Timer() as t:
        for k in (1, 2, 4, 16):
            theory = math.degrees(math.acos(math.comb(2 * k, k) / 4**k))
            emp = expressivity.bundling_angle_empirical(k, 100_000, 200, SeededRng(5, (k,)))
            worst = max(worst, abs(emp - theory))
    record_property("max_abs_degrees", round(worst, 4))
    record_property("seconds", round(t.seconds, 2))
    assert worst <= 0.5
    assert expressivity.pk_monotone_check(64)
    for k in range(65):
        cos = math.cos(math.radians(expressivity.bundling_angle_theory(k)))
        assert abs(cos - (2 * expressivity.pk(k) - 1)) <= 1e-12
    assert t.seconds < 60.0


# --- 5 ------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def three_symbol_task():
    spec = synth.SyntheticTaskSpec(0.05, 100_000, seed=0)
    with Timer() as t:
        result = synth.simulate(spec, 20_000, 10_000, ("binary", "g3"))
    result["seconds"] = t.seconds
    return result


@acceptance("05a three-symbol task: binary bundling near chance")
def test_three_symbol_binary(three_symbol_task, record_property):
    acc = three_symbol_task["binary"]["accuracy"]
    record_property("accuracy", round(acc, 4))
    record_property("prototypes_equal", three_symbol_task["binary"]["prototypes_equal"])
    record_property("seconds", round(three_symbol_task["seconds"], 1))
    assert 0.30 <= acc <= 0.37
    assert three_symbol_task["seconds"] < 120.0


@acceptance("05b three-symbol task: order-3 bundling near Bayes")
def test_three_symbol_cyclic(three_symbol_task, record_property):
    acc = three_symbol_task["g3"]["accuracy"]
    record_property("accuracy", round(acc, 4))
    record_property("bayes", round(three_symbol_task["bayes_accuracy"], 4))
    assert acc >= 0.60
    assert three_symbol_task["seconds"] < 120.0


# --- 6 ------------------------------------------------------------------------------------


@acceptance("06 circuit depth")
def test_circuit_depth(record_property):
    with Timer() as t:
        binary, group, perceptron = analysis.cdc_all(analysis.CdcQuery(784, 10_000, 3))
    record_property("depths", [binary.rounded, group.rounded, perceptron.rounded])
    assert (binary.rounded, group.rounded, perceptron.rounded) == (295, 405, 1299)
    assert abs(perceptron.real / binary.real - 4.4) <= 0.1
    assert abs(perceptron.real / group.real - 3.2) <= 0.1
    assert t.seconds < 1.0


# --- 7 ------------------------------------------------------------------------------------


def _encode_splits(directory, family, dim, seed=0):
    train = load_directory(directory, "train")
    test = load_directory(directory, "test", reference=train)
    basis = build_basis(family, dim, "rff", None, train.n_features, SeededRng(seed, (10,)))
    enc = Encoder(basis, train.n_features)
    return (
        enc.encode_batch(quantize_features(train.features)),
        train.labels,
        enc.encode_batch(quantize_features(test.features)),
        test.labels,
        train.n_classes,
    )


@pytest.mark.parametrize("family,low,high", [
    pytest.param(BINARY, 0.61, 0.70, marks=acceptance("07a MNIST D=1000 binary SGD")),
    pytest.param(Family(8), 0.85, 0.91, marks=acceptance("07b MNIST D=1000 g8 SGD")),
    pytest.param(Family(16), 0.89, 0.95, marks=acceptance("07c MNIST D=1000 g16 SGD")),
])
def test_mnist_desk_scale(family, low, high, record_property):
    directory = data_dir("mnist")
    if directory is None:
        pytest.skip("dataset not available: set HYPERVSA_DATA with a mnist/ folder of IDX files")
    tr, ytr, te, yte, n_classes = _encode_splits(directory, family, 1000)
    cfg = TrainConfig(epochs=10, seed=0)
    with Timer() as t:
        if family.binary:
            model = learn.sgd_train_binary(tr, ytr, n_classes, cfg)
        else:
            model = learn.sgd_train_cyclic(tr, ytr, n_classes, cfg)
    acc = learn.evaluate(te, yte, model)
    record_property("accuracy", round(acc, 4))
    record_property("train_seconds", round(t.seconds, 1))
    assert low <= acc <= high


@acceptance("07d ISOLET D=10000 binary SGD vs perceptron")
def test_isolet_desk_scale(record_property):
    directory = data_dir("isolet")
    if directory is None:
        pytest.skip("dataset not available: set HYPERVSA_DATA with an isolet/ folder")
    tr, ytr, te, yte, n_classes = _encode_splits(directory, BINARY, 10_000)
    cfg = TrainConfig(epochs=1, seed=0)
    sgd = learn.evaluate(te, yte, learn.sgd_train_binary(tr, ytr, n_classes, cfg))
    perceptron = learn.evaluate(te, yte, learn.perceptron_train(tr, ytr, n_classes, cfg))
    record_property("sgd", round(sgd, 4))
    record_property("perceptron", round(perceptron, 4))
    assert sgd >= 0.87
    assert sgd >= perceptron + 0.04


# --- 8 ------------------------------------------------------------------------------------


@acceptance("08a binding and permutation preserve similarity exactly")
def test_similarity_preservation(record_property):
    g = np.random.default_rng(80)
    for trial in range(50):
        dim = int(g.integers(1, 400))
        for family in (BINARY, Family(int(g.integers(3, 17)))):
            u, v, w = (
                core.random_binary(dim, rng=SeededRng(trial, (i,))) if family.binary
                else core.random_cyclic(dim, family.order, rng=SeededRng(trial, (i,)))
                for i in range(3)
            )
            j = int(g.integers(-dim, 2 * dim))
            s = core.similarity(u, v)
            assert core.similarity(core.bind(u, w), core.bind(v, w)) == s
            assert core.similarity(core.permute(u, j), core.permute(v, j)) == s


@acceptance("08b order-2 cyclic equals binary on every primitive")
def test_order_two_equivalence(record_property):
    for trial in range(50):
        dim = 1 + trial * 7
        vs = [core.random_binary(dim, rng=SeededRng(trial, (i,))) for i in range(5)]
        cs = [core.binary_to_cyclic(v) for v in vs]
        assert core.similarity(cs[0], cs[1]) == core.similarity(vs[0], vs[1])
        assert core.cyclic_to_binary(core.bind(cs[0], cs[1])) == core.bind(vs[0], vs[1])
        assert core.cyclic_to_binary(core.permute(cs[2], trial)) == core.permute(vs[2], trial)
        # an odd count has no ties, so both bundles are fully determined
        assert core.cyclic_to_binary(core.bundle_cyclic(cs)) == core.bundle_binary(vs)
    enc = EncodedSet(BINARY, 96, core.pack_bits(np.random.default_rng(1).integers(0, 2, (40, 96)).astype(np.uint8)))
    w = np.random.default_rng(2).choice([-1.0, 1.0], size=(3, 96))
    binary = learn.SgdModel(BINARY, learn.SGD_BINARY, w).scores(enc)
    cyclic = learn.SgdModel(Family(2), learn.SGD_CYCLIC, (w < 0).astype(float)).scores(
        EncodedSet(Family(2), 96, enc.elements()))
    assert np.allclose(binary, cyclic, atol=1e-12)


def _worst_fd_error(loss_fn, w, g, k=64, h=1e-6):
    _, grad = loss_fn(w)
    worst = 0.0
    for flat in g.choice(w.size, size=k, replace=False):
        c, d = divmod(int(flat), w.shape[1])
        wp, wm = w.copy(), w.copy()
        wp[c, d] += h
        wm[c, d] -= h
        fd = (loss_fn(wp)[0] - loss_fn(wm)[0]) / (2 * h)
        worst = max(worst, abs(fd - grad[c, d]) / max(abs(fd), abs(grad[c, d]), 1e-12))
    return worst


@acceptance("08c gradients match central finite differences")
def test_gradients(record_property):
    g = np.random.default_rng(81)
    x = g.choice([-1.0, 1.0], size=(32, 300))
    y = g.integers(0, 6, size=32)
    w = g.uniform(-0.9, 0.9, size=(6, 300))
    binary = _worst_fd_error(lambda v: learn.binary_relaxed_loss_grad(v, x, y, 10.0), w, g)
    spec = core.standard_spec(8)
    e = g.integers(0, 8, size=(32, 300))
    wc = g.uniform(0, 8, size=(6, 300))
    cyclic = _worst_fd_error(lambda v: learn.cyclic_loss_grad(v, e, y, 10.0, spec), wc, g)
    record_property("binary_rel_err", f"{binary:.2e}")
    record_property("cyclic_rel_err", f"{cyclic:.2e}")
    assert binary <= 1e-4 and cyclic <= 1e-4


@acceptance("08d parallel and serial runs are bitwise equal")
def test_parallel_equals_serial(monkeypatch, record_property):
    target = rff.rbf_target(np.arange(64, dtype=np.float64), 8.0)
    for family in (BINARY, Family(8)):
        a = rff.sample_correlated(target, 3000, family, SeededRng(7), threads=1)
        b = rff.sample_correlated(target, 3000, family, SeededRng(7), threads=4)
        assert a.to_bytes() == b.to_bytes()
        enc = Encoder(a, 20)
        idx = np.random.default_rng(3).integers(0, 64, size=(700, 20))
        ea, eb = enc.encode_batch(idx, threads=1), enc.encode_batch(idx, threads=4)
        assert np.array_equal(ea.data, eb.data)
        labels = np.arange(700) % 5
        pa = learn.bundle_train(ea, labels, 5, SeededRng(1), threads=1)
        pb = learn.bundle_train(eb, labels, 5, SeededRng(1), threads=4)
        assert np.array_equal(pa.data, pb.data)
        train = learn.sgd_train_binary if family.binary else learn.sgd_train_cyclic
        monkeypatch.setenv("HYPERVSA_THREADS", "1")
        wa = train(ea, labels, 5, TrainConfig(epochs=1, seed=2)).weights
        monkeypatch.setenv("HYPERVSA_THREADS", "4")
        wb = train(eb, labels, 5, TrainConfig(epochs=1, seed=2)).weights
        assert wa.tobytes() == wb.tobytes()


@acceptance("08e serialization round-trips are byte-identical")
def test_serialization(record_property):
    for family in (BINARY, Family(3), Family(16)):
        basis = rff.random_basis(9, 131, family, rng=4)
        raw = basis.to_bytes()
        assert rff.CorrelatedBasis.from_bytes(raw).to_bytes() == raw
        for v in basis.vectors:
            rec = core.to_record(v)
            back, end = core.from_record(rec)
            assert back == v and end == len(rec) and core.to_record(back) == rec
        enc = Encoder(basis, 3).encode_batch(np.random.default_rng(0).integers(0, 9, size=(30, 3)))
        model = learn.bundle_train(enc, np.arange(30) % 3, 3, SeededRng(5))
        raw = learn.model_to_bytes(model)
        assert learn.model_to_bytes(learn.model_from_bytes(raw)) == raw
    for paradigm, family in ((learn.SGD_BINARY, BINARY), (learn.SGD_CYCLIC, Family(4)), (learn.PERCEPTRON, BINARY)):
        model = learn.SgdModel(family, paradigm, np.random.default_rng(1).normal(size=(3, 50)), seed=11)
        raw = learn.model_to_bytes(model)
        assert learn.model_to_bytes(learn.model_from_bytes(raw)) == raw


@acceptance("08f LP agrees with the analytic hull on the 3x3 grid")
def test_lp_grid(record_property):
    grid = np.round(np.arange(-1.0, 1.0001, 0.1), 10)
    mismatches = 0
    for a, b, c in itertools.product(grid, repeat=3):
        m = np.array([[1, a, b], [a, 1, c], [b, c, 1]])
        lam = np.array([1 + a + b + c, 1 + a - b - c, 1 - a + b - c, 1 - a - b + c]) / 4
        inside = bool(np.all(lam >= -1e-9))
        mismatches += expressivity.check_binary_expressible(m, 1e-9).feasible != inside
    record_property("grid_points", len(grid) ** 3)
    record_property("mismatches", mismatches)
    assert mismatches == 0
