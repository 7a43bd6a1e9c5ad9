import re

import numpy as np
import pytest

from graphgen import tame_weights
from nn2c.codegen import emit_c, float_literal, generate_header, generate_weights_c
from nn2c.fixtures import build_fixture
from nn2c.graph import (
    Dense,
    Graph,
    MaxPool1D,
    TensorShape,
    WeightStore,
    infer_shapes,
)
from nn2c.memory_planner import plan_memory
from nn2c.validator import compile_sources

F32 = np.float32

# Anything that could smuggle heap or runtime-sized storage into the output.
FORBIDDEN = re.compile(r"\b(malloc|calloc|realloc|free|alloca|posix_memalign|strdup)\b")


@pytest.fixture(scope="module")
def emitted(tmp_path_factory):
    out = {}
    for name in ("autoencoder", "cnnlstm"):
        graph, weights = build_fixture(name)
        outdir = tmp_path_factory.mktemp(f"gen_{name}")
        paths = emit_c(graph, weights, outdir)
        out[name] = (graph, weights, paths)
    return out


class TestFloatLiteral:
    def test_exact_hex_forms(self):
        assert float_literal(1.0) == "0x1.0000000000000p+0F"
        assert float_literal(-2.0) == "-0x1.0000000000000p+1F"
        assert float_literal(0.0) == "0x0.0p+0F"

    def test_negative_zero_keeps_sign(self):
        assert float_literal(-0.0).startswith("-")

    def test_round_trips_through_float32(self):
        rng = np.random.default_rng(0)
        for v in rng.uniform(-100, 100, 200).astype(F32):
            lit = float_literal(float(v))
            assert float.fromhex(lit[:-1]) == float(v)


class TestWeightTable:
    def test_known_bit_patterns(self):
        g = infer_shapes(
            Graph(name="tiny", input_shape=TensorShape((2,)), layers=(Dense(units=1),))
        )
        ws = WeightStore(
            {
                (0, "W"): np.array([[1.0, -0.0]], dtype=F32),
                (0, "b"): np.array([-2.0], dtype=F32),
            }
        )
        text = generate_weights_c(g, ws)
        assert "0x3f800000u" in text  # 1.0f
        assert "0x80000000u" in text  # -0.0f
        assert "0xc0000000u" in text  # -2.0f

    def test_zero_param_model_still_links(self):
        g = infer_shapes(
            Graph(name="p", input_shape=TensorShape((4, 2)), layers=(MaxPool1D(),))
        )
        text = generate_weights_c(g, WeightStore({}))
        assert "p_weight_table" in text

    def test_table_is_exposed_as_single_pointer(self, emitted):
        _, _, paths = emitted["autoencoder"]
        text = paths["weights"].read_text()
        assert "const float *const autoencoder_weights" in text
        # one definition, nothing else extern
        assert text.count("const float *const") == 1


class TestEmittedSources:
    def test_no_dynamic_allocation_tokens(self, emitted):
        for name, (_, _, paths) in emitted.items():
            for p in paths.values():
                hits = FORBIDDEN.findall(p.read_text())
                assert hits == [], (name, p.name, hits)

    def test_arena_macro_matches_plan(self, emitted):
        for name, (graph, _, paths) in emitted.items():
            plan = plan_memory(graph)
            header = paths["header"].read_text()
            m = re.search(rf"#define {name.upper()}_ARENA_BYTES (\d+)", header)
            assert m and int(m.group(1)) == plan.arena_bytes

    def test_io_macros_match_shapes(self, emitted):
        graph, _, paths = emitted["cnnlstm"]
        header = paths["header"].read_text()
        assert f"#define CNNLSTM_IN_SIZE {20 * 4}" in header
        assert "#define CNNLSTM_OUT_SIZE 1" in header

    def test_api_surface_is_two_functions(self, emitted):
        for name, (_, _, paths) in emitted.items():
            header = paths["header"].read_text()
            protos = re.findall(r"^int (\w+)\(.*\);$", header, re.M)
            assert protos == [f"{name}_init", f"{name}_run"]
            model = paths["model"].read_text()
            # every other function in the translation unit stays static
            externs = re.findall(r"^(?!static\b)(?:\w+ )*?(\w+)\s*\(", model, re.M)
            assert set(externs) <= {f"{name}_init", f"{name}_run", "int"}

    def test_emission_is_deterministic(self, tmp_path):
        graph, weights = build_fixture("cnnlstm")
        a = emit_c(graph, weights, tmp_path / "a")
        b = emit_c(graph, weights, tmp_path / "b")
        for key in a:
            assert a[key].read_bytes() == b[key].read_bytes()

    def test_reemission_overwrites_identically(self, tmp_path):
        graph, weights = build_fixture("autoencoder")
        first = emit_c(graph, weights, tmp_path)
        before = {k: p.read_bytes() for k, p in first.items()}
        second = emit_c(graph, weights, tmp_path)
        for k, p in second.items():
            assert p.read_bytes() == before[k]

    def test_header_has_include_guard(self, emitted):
        _, _, paths = emitted["autoencoder"]
        text = paths["header"].read_text()
        assert "#ifndef AUTOENCODER_MODEL_H" in text
        assert "#define AUTOENCODER_MODEL_H" in text
        assert text.rstrip().endswith("#endif /* AUTOENCODER_MODEL_H */")


class TestStrictCompilation:
    def test_fixtures_compile_under_strict_c99(self, emitted, tmp_path):
        for name, (_, _, paths) in emitted.items():
            exe = tmp_path / f"{name}_check"
            wrapper = tmp_path / f"{name}_main.c"
            wrapper.write_text(
                f'#include "{name}_model.h"\n'
                "int main(void) { return "
                f"{name}_init(); }}\n".replace("}}", "}")
            )
            compile_sources(
                [paths["model"], paths["weights"], wrapper],
                exe,
                include_dirs=[paths["header"].parent],
            )
            assert exe.exists()

    def test_random_small_model_compiles(self, tmp_path):
        rng = np.random.default_rng(12)
        from graphgen import random_chain

        graph = random_chain(rng)
        weights = tame_weights(graph, rng)
        paths = emit_c(graph, weights, tmp_path)
        wrapper = tmp_path / "main.c"
        wrapper.write_text(
            f'#include "{graph.name}_model.h"\n'
            f"int main(void) {{ return {graph.name}_init(); }}\n"
        )
        compile_sources(
            [paths["model"], paths["weights"], wrapper],
            tmp_path / "check",
            include_dirs=[tmp_path],
        )
