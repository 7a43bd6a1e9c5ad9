"""ANSI C code generation.

Emits three files per model: `<name>_model.h` (public API), `<name>_model.c`
(straight-line kernels over one static arena), `<name>_weights.c` (the packed
float32 table as IEEE-754 bit patterns). The output compiles warning-free
under `gcc -std=c99 -pedantic -Wall -Wextra -Werror` and allocates nothing at
runtime: no malloc, no VLAs, stack use bounded by a handful of scalars.

Loop nests mirror the reference interpreter exactly: accumulators start from
the bias and fold products in ascending index order, so host and target
disagree only through libm, inside the validation tolerance.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .graph import (
    BatchNorm,
    Conv1D,
    Dense,
    Graph,
    Lstm,
    MaxPool1D,
    WeightStore,
    infer_shapes,
)
from .memory_planner import MemoryPlan, layer_io_names, plan_memory
from .model_format import check_name, pack_blob, tensor_table

GENERATED_NOTE = "Generated by nn2c. Edit the model bundle, not this file."


def float_literal(value: float) -> str:
    """Hex float literal of the float32-rounded value; exact under C99."""
    return float(np.float32(value)).hex() + "F"


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = []
        self.depth = 0

    def line(self, text: str = "") -> None:
        self.lines.append("    " * self.depth + text if text else "")

    def open(self, text: str) -> None:
        self.line(text + " {")
        self.depth += 1

    def close(self, suffix: str = "") -> None:
        self.depth -= 1
        self.line("}" + suffix)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def generate_header(graph: Graph, plan: MemoryPlan) -> str:
    graph = graph if graph.resolved else infer_shapes(graph)
    name = check_name(graph.name)
    tag = name.upper()
    w = _Writer()
    w.line(f"/* {GENERATED_NOTE} */")
    w.line(f"#ifndef {tag}_MODEL_H")
    w.line(f"#define {tag}_MODEL_H")
    w.line()
    w.line(f"#define {tag}_IN_SIZE {graph.input_shape.element_count}")
    w.line(f"#define {tag}_OUT_SIZE {graph.output_shape.element_count}")
    w.line(f"#define {tag}_ARENA_BYTES {plan.arena_bytes}")
    w.line()
    w.line(f"int {name}_init(void);")
    w.line(f"int {name}_run(const float *in, float *out);")
    w.line()
    w.line(f"#endif /* {tag}_MODEL_H */")
    return w.text()


def generate_weights_c(graph: Graph, weights: WeightStore) -> str:
    graph = graph if graph.resolved else infer_shapes(graph)
    name = check_name(graph.name)
    blob = pack_blob(graph, weights)
    words = np.frombuffer(blob, dtype="<u4")
    if words.size == 0:
        words = np.zeros(1, dtype="<u4")
    w = _Writer()
    w.line(f"/* {GENERATED_NOTE} */")
    w.line("#include <stdint.h>")
    w.line()
    w.line("typedef char nn2c_assert_float32[(sizeof(float) == 4) ? 1 : -1];")
    w.line()
    w.line(f"static const union {{ uint32_t bits[{words.size}]; float f[{words.size}]; }}")
    w.open(f"{name}_weight_table = {{")
    for start in range(0, words.size, 8):
        chunk = words[start : start + 8]
        tail = "," if start + 8 < words.size else ""
        w.line(", ".join(f"0x{v:08x}u" for v in chunk) + tail)
    w.close("};")
    w.line()
    w.line(f"const float *const {name}_weights = {name}_weight_table.f;")
    return w.text()


def _acts_used(graph: Graph) -> set[str]:
    used: set[str] = set()
    for layer in graph.layers:
        if isinstance(layer, (Dense, Conv1D)):
            used.add(layer.activation)
        elif isinstance(layer, Lstm):
            used.update(("sigmoid", "tanh"))
    used.discard("linear")
    return used


_HELPERS = {
    "sigmoid": [
        "static float nn2c_sigmoid(float v)",
        "{",
        "    return (float)(1.0 / (1.0 + exp(-(double)v)));",
        "}",
    ],
    "tanh": [
        "static float nn2c_tanh(float v)",
        "{",
        "    return (float)tanh((double)v);",
        "}",
    ],
    "relu": [
        "static float nn2c_relu(float v)",
        "{",
        "    return (v > 0.0f) ? v : 0.0f;",
        "}",
    ],
}


def _wrap(activation: str, expr: str) -> str:
    if activation == "linear":
        return expr
    return f"nn2c_{activation}({expr})"


def _dense_block(w: _Writer, layer: Dense, t_in: int | None, n_in: int) -> None:
    u, i = layer.units, n_in
    if t_in is None:
        w.open(f"for (u = 0; u < {u}; ++u)")
        w.line("float acc = b[u];")
        w.open(f"for (i = 0; i < {i}; ++i)")
        w.line(f"acc += w[u * {i} + i] * x[i];")
        w.close()
        w.line(f"y[u] = {_wrap(layer.activation, 'acc')};")
        w.close()
        return
    w.open(f"for (t = 0; t < {t_in}; ++t)")
    w.open(f"for (u = 0; u < {u}; ++u)")
    w.line("float acc = b[u];")
    w.open(f"for (i = 0; i < {i}; ++i)")
    w.line(f"acc += w[u * {i} + i] * x[t * {i} + i];")
    w.close()
    w.line(f"y[t * {u} + u] = {_wrap(layer.activation, 'acc')};")
    w.close()
    w.close()


def _conv_block(w: _Writer, layer: Conv1D, t_out: int, channels: int) -> None:
    f_n, k_n, s_n = layer.filters, layer.kernel, layer.stride
    w.open(f"for (t = 0; t < {t_out}; ++t)")
    w.open(f"for (f = 0; f < {f_n}; ++f)")
    w.line("float acc = b[f];")
    w.open(f"for (k = 0; k < {k_n}; ++k)")
    w.open(f"for (c = 0; c < {channels}; ++c)")
    w.line(f"acc += w[(f * {k_n} + k) * {channels} + c] * x[(t * {s_n} + k) * {channels} + c];")
    w.close()
    w.close()
    w.line(f"y[t * {f_n} + f] = {_wrap(layer.activation, 'acc')};")
    w.close()
    w.close()


def _pool_block(w: _Writer, layer: MaxPool1D, t_out: int, channels: int) -> None:
    # In place: output row t never passes its own source window (t <= t*stride).
    w.open(f"for (t = 0; t < {t_out}; ++t)")
    w.open(f"for (c = 0; c < {channels}; ++c)")
    w.line(f"float m = x[(t * {layer.stride}) * {channels} + c];")
    w.open(f"for (p = 1; p < {layer.pool}; ++p)")
    w.line(f"float v = x[(t * {layer.stride} + p) * {channels} + c];")
    w.line("if (v > m) m = v;")
    w.close()
    w.line(f"y[t * {channels} + c] = m;")
    w.close()
    w.close()


def _batchnorm_block(w: _Writer, layer: BatchNorm, t_in: int, channels: int) -> None:
    w.open(f"for (c = 0; c < {channels}; ++c)")
    w.line(f"float scale = g[c] / sqrtf(v[c] + {float_literal(layer.epsilon)});")
    w.line("float shift = be[c] - mn[c] * scale;")
    w.open(f"for (t = 0; t < {t_in}; ++t)")
    w.line(f"y[t * {channels} + c] = x[t * {channels} + c] * scale + shift;")
    w.close()
    w.close()


def _lstm_block(w: _Writer, layer: Lstm, t_in: int, n_in: int) -> None:
    u_n, i_n = layer.units, n_in
    w.open(f"for (u = 0; u < {u_n}; ++u)")
    w.line("h[u] = 0.0f;")
    w.line("cs[u] = 0.0f;")
    w.close()
    w.open(f"for (t = 0; t < {t_in}; ++t)")
    w.open(f"for (u = 0; u < {u_n}; ++u)")
    w.line("float gi, gf, gg, go, acc, c1, c2, cn;")
    for slot, (gate, row) in enumerate(
        (("gi", "u"), ("gf", f"{u_n} + u"), ("gg", f"{2 * u_n} + u"), ("go", f"{3 * u_n} + u"))
    ):
        w.line(f"acc = b[{row}];")
        w.open(f"for (i = 0; i < {i_n}; ++i)")
        w.line(f"acc += w[({row}) * {i_n} + i] * x[t * {i_n} + i];")
        w.close()
        w.open(f"for (i = 0; i < {u_n}; ++i)")
        w.line(f"acc += r[({row}) * {u_n} + i] * h[i];")
        w.close()
        fn = "nn2c_tanh" if gate == "gg" else "nn2c_sigmoid"
        w.line(f"{gate} = {fn}(acc);")
    w.line("c1 = gf * cs[u];")
    w.line("c2 = gi * gg;")
    w.line("cn = c1 + c2;")
    w.line("cs[u] = cn;")
    w.line("hs[u] = go * nn2c_tanh(cn);")
    w.close()
    w.open(f"for (u = 0; u < {u_n}; ++u)")
    w.line("h[u] = hs[u];")
    if layer.return_sequences:
        w.line(f"y[t * {u_n} + u] = hs[u];")
    w.close()
    w.close()
    if not layer.return_sequences:
        w.open(f"for (u = 0; u < {u_n}; ++u)")
        w.line("y[u] = h[u];")
        w.close()


def _block_loop_vars(layer, t_in: int | None) -> list[str]:
    if isinstance(layer, Dense):
        return ["u", "i"] if t_in is None else ["t", "u", "i"]
    if isinstance(layer, Conv1D):
        return ["t", "f", "k", "c"]
    if isinstance(layer, MaxPool1D):
        return ["t", "c", "p"]
    if isinstance(layer, BatchNorm):
        return ["c", "t"]
    if isinstance(layer, Lstm):
        return ["t", "u", "i"]
    raise AssertionError(layer)


def generate_model_c(graph: Graph, plan: MemoryPlan | None = None) -> str:
    graph = graph if graph.resolved else infer_shapes(graph)
    name = check_name(graph.name)
    tag = name.upper()
    plan = plan or plan_memory(graph)
    io_names = layer_io_names(graph)
    table = tensor_table(graph)
    tensor_offset = {(e["layer"], e["role"]): e["offset"] for e in table}
    has_weights = bool(table)

    w = _Writer()
    w.line(f"/* {GENERATED_NOTE} */")
    w.line("#include <math.h>")
    w.line("#include <string.h>")
    w.line()
    w.line(f'#include "{name}_model.h"')
    w.line()
    if has_weights:
        w.line(f"extern const float *const {name}_weights;")
        w.line()
    w.line(f"static float {name}_arena[{tag}_ARENA_BYTES / 4];")
    w.line()
    for act in sorted(_acts_used(graph)):
        w.lines.extend(_HELPERS[act])
        w.line()
    w.open(f"int {name}_init(void)")
    w.line(f"memset({name}_arena, 0, sizeof {name}_arena);")
    w.line("return 0;")
    w.close()
    w.line()
    w.open(f"int {name}_run(const float *in, float *out)")
    w.open("if (in == NULL || out == NULL)")
    w.line("return -1;")
    w.close()
    w.line(
        f"memcpy({name}_arena + {plan.offset_of('input') // 4}, in, "
        f"sizeof(float) * {tag}_IN_SIZE);"
    )

    in_shapes = graph.layer_input_shapes()
    for idx, layer in enumerate(graph.layers):
        x_shape = in_shapes[idx]
        in_name, out_name = io_names[idx]
        w.line(f"{{ /* layer {idx}: {layer.kind} */")
        w.depth += 1
        x_off = plan.offset_of(in_name) // 4
        y_off = plan.offset_of(out_name) // 4
        w.line(f"const float *x = {name}_arena + {x_off};")
        if out_name == in_name:
            w.line(f"float *y = {name}_arena + {y_off}; /* in place */")
        else:
            w.line(f"float *y = {name}_arena + {y_off};")
        if isinstance(layer, (Dense, Conv1D)):
            w.line(f"const float *w = {name}_weights + {tensor_offset[(idx, 'W')]};")
            w.line(f"const float *b = {name}_weights + {tensor_offset[(idx, 'b')]};")
        elif isinstance(layer, BatchNorm):
            w.line(f"const float *g = {name}_weights + {tensor_offset[(idx, 'gamma')]};")
            w.line(f"const float *be = {name}_weights + {tensor_offset[(idx, 'beta')]};")
            w.line(f"const float *mn = {name}_weights + {tensor_offset[(idx, 'mean')]};")
            w.line(f"const float *v = {name}_weights + {tensor_offset[(idx, 'var')]};")
        elif isinstance(layer, Lstm):
            w.line(f"const float *w = {name}_weights + {tensor_offset[(idx, 'W')]};")
            w.line(f"const float *r = {name}_weights + {tensor_offset[(idx, 'U_rec')]};")
            w.line(f"const float *b = {name}_weights + {tensor_offset[(idx, 'b')]};")
            w.line(f"float *h = {name}_arena + {plan.offset_of(f'h{idx}') // 4};")
            w.line(f"float *cs = {name}_arena + {plan.offset_of(f'c{idx}') // 4};")
            w.line(f"float *hs = {name}_arena + {plan.offset_of(f'stage{idx}') // 4};")
        t_in = x_shape.dims[0] if x_shape.rank == 2 else None
        loop_vars = _block_loop_vars(layer, t_in)
        w.line("int " + ", ".join(loop_vars) + ";")
        if isinstance(layer, Dense):
            _dense_block(w, layer, t_in, x_shape.dims[-1])
        elif isinstance(layer, Conv1D):
            t_out = (x_shape.dims[0] - layer.kernel) // layer.stride + 1
            _conv_block(w, layer, t_out, x_shape.dims[-1])
        elif isinstance(layer, MaxPool1D):
            t_out = (x_shape.dims[0] - layer.pool) // layer.stride + 1
            _pool_block(w, layer, t_out, x_shape.dims[-1])
        elif isinstance(layer, BatchNorm):
            _batchnorm_block(w, layer, x_shape.dims[0], x_shape.dims[-1])
        elif isinstance(layer, Lstm):
            _lstm_block(w, layer, x_shape.dims[0], x_shape.dims[-1])
        w.close()

    final_off = plan.offset_of(io_names[-1][1]) // 4
    w.line(f"memcpy(out, {name}_arena + {final_off}, sizeof(float) * {tag}_OUT_SIZE);")
    w.line("return 0;")
    w.close()
    return w.text()


def emit_c(graph: Graph, weights: WeightStore, out_dir: str | Path) -> dict[str, Path]:
    """Write the three C files; returns their paths keyed header/model/weights."""
    graph = graph if graph.resolved else infer_shapes(graph)
    weights.validate_for(graph)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan = plan_memory(graph)
    name = graph.name
    paths = {
        "header": out_dir / f"{name}_model.h",
        "model": out_dir / f"{name}_model.c",
        "weights": out_dir / f"{name}_weights.c",
    }
    paths["header"].write_text(generate_header(graph, plan))
    paths["model"].write_text(generate_model_c(graph, plan))
    paths["weights"].write_text(generate_weights_c(graph, weights))
    return paths
