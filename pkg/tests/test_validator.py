import struct
import subprocess

import numpy as np
import pytest

from nn2c.codegen import emit_c
from nn2c.errors import CompileFailure, ShapeMismatch
from nn2c.fixtures import build_fixture
from nn2c.graph import Dense, Graph, TensorShape, infer_shapes
from nn2c.interpreter import run_batch
from nn2c.validator import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    compile_sources,
    cross_validate,
    generate_driver_c,
    generate_vectors,
    run_compiled,
    validate_generated,
)
from nn2c.vectorfile import read_vectors, write_vectors
from graphgen import tame_weights

F32 = np.float32


def _tiny_model(seed=0):
    g = infer_shapes(
        Graph(name="tiny", input_shape=TensorShape((4,)), layers=(Dense(units=3, activation="tanh"),))
    )
    return g, tame_weights(g, np.random.default_rng(seed))


class TestVectors:
    def test_deterministic_by_seed(self):
        g, _ = _tiny_model()
        a = generate_vectors(g, 10, seed=7)
        b = generate_vectors(g, 10, seed=7)
        c = generate_vectors(g, 10, seed=8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_shape_and_range(self):
        g, _ = _tiny_model()
        v = generate_vectors(g, 25, seed=1)
        assert v.shape == (25, 4)
        assert v.dtype == np.float32
        assert np.all(v >= -1.0) and np.all(v <= 1.0)


class TestCrossValidate:
    def test_self_comparison_is_perfect(self):
        g, ws = _tiny_model()
        inputs = generate_vectors(g, 20, seed=3)
        ref = run_batch(g, ws, inputs)
        report = cross_validate(g, ws, ref, inputs, DEFAULT_ATOL, DEFAULT_RTOL)
        assert report.cross_accuracy == 1.0
        assert report.passed
        assert report.matches == report.elements == 60
        assert report.max_abs_err == 0.0

    def test_single_perturbed_element_costs_exactly_one(self):
        g, ws = _tiny_model()
        inputs = generate_vectors(g, 20, seed=3)
        got = run_batch(g, ws, inputs).copy()
        got[4, 1] += 1.0
        report = cross_validate(g, ws, got, inputs, DEFAULT_ATOL, DEFAULT_RTOL)
        assert report.cross_accuracy == 1.0 - 1.0 / report.elements
        assert not report.passed
        assert 4 in report.mismatched_vectors

    def test_nan_output_is_a_mismatch(self):
        g, ws = _tiny_model()
        inputs = generate_vectors(g, 5, seed=3)
        got = run_batch(g, ws, inputs).copy()
        got[0, 0] = np.nan
        report = cross_validate(g, ws, got, inputs, DEFAULT_ATOL, DEFAULT_RTOL)
        assert report.matches == report.elements - 1

    def test_widening_tolerance_is_monotone(self):
        g, ws = _tiny_model()
        inputs = generate_vectors(g, 30, seed=5)
        rng = np.random.default_rng(9)
        got = run_batch(g, ws, inputs) + rng.normal(0, 1e-5, (30, 3)).astype(F32)
        last = -1.0
        for atol in (1e-7, 1e-6, 1e-5, 1e-4, 1e-2):
            acc = cross_validate(g, ws, got, inputs, atol, 0.0).cross_accuracy
            assert acc >= last
            last = acc

    def test_zero_vectors_trivially_pass(self):
        g, ws = _tiny_model()
        empty = np.zeros((0, 4), dtype=F32)
        report = cross_validate(g, ws, np.zeros((0, 3), dtype=F32), empty, 1e-5, 1e-4)
        assert report.cross_accuracy == 1.0

    def test_shape_mismatch_rejected(self):
        g, ws = _tiny_model()
        inputs = generate_vectors(g, 4, seed=1)
        with pytest.raises(ShapeMismatch):
            cross_validate(g, ws, np.zeros((4, 5), dtype=F32), inputs, 1e-5, 1e-4)

    def test_report_dict_names_reference(self):
        g, ws = _tiny_model()
        inputs = generate_vectors(g, 2, seed=1)
        ref = run_batch(g, ws, inputs)
        doc = cross_validate(g, ws, ref, inputs, 1e-5, 1e-4).to_dict()
        assert doc["reference"] == "interpreter"
        assert doc["model"] == "tiny"
        assert set(doc) >= {"vectors", "elements", "matches", "cross_accuracy", "atol", "rtol"}


class TestEndToEnd:
    def test_tiny_model_validates_bit_exact(self, tmp_path):
        g, ws = _tiny_model()
        vectors = generate_vectors(g, 64, seed=11)
        report = validate_generated(g, ws, vectors, workdir=tmp_path)
        assert report.passed
        assert report.cross_accuracy == 1.0
        assert report.compile_s > 0
        assert report.run_s > 0
        # workdir keeps the build around for inspection
        assert (tmp_path / "tiny_model.c").exists()

    def test_missing_compiler_raises(self, tmp_path):
        g, ws = _tiny_model()
        vectors = generate_vectors(g, 2, seed=1)
        with pytest.raises(CompileFailure):
            run_compiled(g, ws, vectors, cc="definitely-not-a-compiler", workdir=tmp_path)


@pytest.fixture(scope="module")
def driver(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("driver")
    g, ws = _tiny_model()
    paths = emit_c(g, ws, tmp)
    driver_c = tmp / "tiny_driver.c"
    driver_c.write_text(generate_driver_c(g))
    exe = tmp / "tiny_driver"
    compile_sources([paths["model"], paths["weights"], driver_c], exe, include_dirs=[tmp])
    return g, ws, exe, tmp


class TestDriverProtocol:

    def test_happy_path_writes_outputs(self, driver):
        g, ws, exe, tmp = driver
        vectors = generate_vectors(g, 8, seed=2)
        vin = tmp / "in.tnnv"
        vout = tmp / "out.tnnv"
        write_vectors(vin, vectors)
        proc = subprocess.run([str(exe), str(vin), str(vout)], capture_output=True)
        assert proc.returncode == 0
        got, _ = read_vectors(vout)
        assert np.array_equal(got, run_batch(g, ws, vectors))

    def test_bad_magic_exits_1(self, driver):
        _, _, exe, tmp = driver
        bad = tmp / "bad.tnnv"
        bad.write_bytes(b"XXXX" + struct.pack("<II", 1, 4) + b"\x00" * 16)
        proc = subprocess.run([str(exe), str(bad), str(tmp / "o.tnnv")], capture_output=True)
        assert proc.returncode == 1

    def test_wrong_vector_length_exits_2(self, driver):
        g, _, exe, tmp = driver
        wrong = tmp / "wrong.tnnv"
        write_vectors(wrong, np.zeros((3, 7), dtype=F32))
        proc = subprocess.run([str(exe), str(wrong), str(tmp / "o.tnnv")], capture_output=True)
        assert proc.returncode == 2

    def test_missing_file_exits_1(self, driver):
        _, _, exe, tmp = driver
        proc = subprocess.run(
            [str(exe), str(tmp / "absent.tnnv"), str(tmp / "o.tnnv")], capture_output=True
        )
        assert proc.returncode == 1


class TestFixtureModels:
    @pytest.mark.parametrize("name", ["autoencoder", "cnnlstm"])
    def test_bundled_models_pass_small_batches(self, name, tmp_path):
        graph, weights = build_fixture(name)
        vectors = generate_vectors(graph, 16, seed=21)
        report = validate_generated(graph, weights, vectors, workdir=tmp_path)
        assert report.cross_accuracy == 1.0
