"""Cross-validation of generated C against the reference interpreter.

An element of a C output matches the reference when
|c - ref| <= atol + rtol * |ref|; the reference is ground truth, so the
predicate is deliberately one-sided. Cross-accuracy is matched elements over
all compared elements (1.0 means every element of every vector passed).

`cross_validate` is the pure comparison. `validate_generated` is the full
loop: emit C, compile it with strict C99 flags, run the compiled driver on a
vector file, and compare. The driver assumes a little-endian host, same as
the vector file format.
"""
from __future__ import annotations

import subprocess
import time
from dataclasses import dataclass, replace
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from .codegen import emit_c
from .errors import CompileFailure, ShapeMismatch
from .graph import Graph, WeightStore, infer_shapes
from .interpreter import run_batch
from .model_format import check_name
from .vectorfile import read_vectors, write_vectors

DEFAULT_ATOL = 1e-5
DEFAULT_RTOL = 1e-4

CFLAGS = ("-std=c99", "-pedantic", "-Wall", "-Wextra", "-Werror", "-O2")

_DRIVER_TEMPLATE = """\
/* Validation driver; reads and writes "TNNV" vector files.
 * Exit codes: 0 ok, 1 unreadable or malformed file, 2 vector length
 * mismatch against the model, 3 init or run failure.
 */
#include <stdio.h>

#include "{name}_model.h"

static float in_vec[{tag}_IN_SIZE];
static float out_vec[{tag}_OUT_SIZE];

static unsigned long u32le(const unsigned char *p)
{{
    return (unsigned long)p[0] | ((unsigned long)p[1] << 8)
        | ((unsigned long)p[2] << 16) | ((unsigned long)p[3] << 24);
}}

static void put_u32le(unsigned char *p, unsigned long v)
{{
    p[0] = (unsigned char)(v & 0xff);
    p[1] = (unsigned char)((v >> 8) & 0xff);
    p[2] = (unsigned char)((v >> 16) & 0xff);
    p[3] = (unsigned char)((v >> 24) & 0xff);
}}

int main(int argc, char **argv)
{{
    FILE *fi, *fo;
    unsigned char header[12];
    unsigned long count, length, n;

    if (argc != 3) {{
        fprintf(stderr, "usage: %s input.tnnv output.tnnv\\n", argv[0]);
        return 1;
    }}
    fi = fopen(argv[1], "rb");
    if (fi == NULL) {{
        return 1;
    }}
    if (fread(header, 1, 12, fi) != 12 || header[0] != 'T' || header[1] != 'N'
        || header[2] != 'N' || header[3] != 'V') {{
        fclose(fi);
        return 1;
    }}
    count = u32le(header + 4);
    length = u32le(header + 8);
    if (length != (unsigned long){tag}_IN_SIZE) {{
        fclose(fi);
        return 2;
    }}
    fo = fopen(argv[2], "wb");
    if (fo == NULL) {{
        fclose(fi);
        return 1;
    }}
    put_u32le(header + 4, count);
    put_u32le(header + 8, (unsigned long){tag}_OUT_SIZE);
    if (fwrite(header, 1, 12, fo) != 12) {{
        fclose(fi);
        fclose(fo);
        return 1;
    }}
    if ({name}_init() != 0) {{
        fclose(fi);
        fclose(fo);
        return 3;
    }}
    for (n = 0; n < count; ++n) {{
        if (fread(in_vec, sizeof(float), {tag}_IN_SIZE, fi) != {tag}_IN_SIZE) {{
            fclose(fi);
            fclose(fo);
            return 1;
        }}
        if ({name}_run(in_vec, out_vec) != 0) {{
            fclose(fi);
            fclose(fo);
            return 3;
        }}
        if (fwrite(out_vec, sizeof(float), {tag}_OUT_SIZE, fo) != {tag}_OUT_SIZE) {{
            fclose(fi);
            fclose(fo);
            return 1;
        }}
    }}
    fclose(fi);
    if (fclose(fo) != 0) {{
        return 1;
    }}
    return 0;
}}
"""


def generate_driver_c(graph: Graph) -> str:
    name = check_name(graph.name)
    return _DRIVER_TEMPLATE.format(name=name, tag=name.upper())


def generate_vectors(
    graph: Graph, count: int, seed: int, low: float = -1.0, high: float = 1.0
) -> np.ndarray:
    """Seeded test inputs shaped (count, flat input size); PCG64 uniform [low, high)."""
    graph = graph if graph.resolved else infer_shapes(graph)
    if count < 0:
        raise ValueError("vector count must be >= 0")
    rng = np.random.default_rng(seed)
    size = graph.input_shape.element_count
    return rng.uniform(low, high, size=(count, size)).astype(np.float32)


def compile_sources(
    sources: list[Path],
    out_exe: Path,
    cc: str = "gcc",
    timeout_s: float = 120.0,
    include_dirs: list[Path] | None = None,
) -> float:
    """Compile and link; returns elapsed seconds, raises CompileFailure."""
    includes = [f"-I{d}" for d in include_dirs or ()]
    cmd = [cc, *CFLAGS, *includes, "-o", str(out_exe), *[str(s) for s in sources], "-lm"]
    start = time.monotonic()
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout_s)
    except FileNotFoundError:
        raise CompileFailure(f"compiler {cc!r} not found") from None
    except subprocess.TimeoutExpired:
        raise CompileFailure(f"compilation exceeded {timeout_s}s") from None
    elapsed = time.monotonic() - start
    if proc.returncode != 0:
        raise CompileFailure(
            f"{cc} failed ({proc.returncode}):\n{proc.stderr.strip() or proc.stdout.strip()}"
        )
    return elapsed


@dataclass(frozen=True)
class CrossAccuracyReport:
    model: str
    vectors: int
    elements: int
    matches: int
    cross_accuracy: float
    atol: float
    rtol: float
    max_abs_err: float
    max_rel_err: float
    mismatched_vectors: tuple[int, ...] = ()
    compile_s: float | None = None
    run_s: float | None = None

    @property
    def passed(self) -> bool:
        return self.cross_accuracy == 1.0

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "vectors": self.vectors,
            "elements": self.elements,
            "matches": self.matches,
            "cross_accuracy": self.cross_accuracy,
            "atol": self.atol,
            "rtol": self.rtol,
            "max_abs_err": self.max_abs_err,
            "max_rel_err": self.max_rel_err,
            "reference": "interpreter",
            "mismatched_vectors": list(self.mismatched_vectors[:32]),
        }
        if self.compile_s is not None:
            out["compile_s"] = round(self.compile_s, 3)
        if self.run_s is not None:
            out["run_s"] = round(self.run_s, 3)
        return out


def cross_validate(
    graph: Graph,
    weights: WeightStore,
    c_outputs: np.ndarray,
    inputs: np.ndarray,
    atol: float = DEFAULT_ATOL,
    rtol: float = DEFAULT_RTOL,
) -> CrossAccuracyReport:
    """Compare C outputs against interpreter outputs on the same inputs."""
    graph = graph if graph.resolved else infer_shapes(graph)
    inputs = np.asarray(inputs, dtype=np.float32)
    c_outputs = np.asarray(c_outputs, dtype=np.float32)
    in_size = graph.input_shape.element_count
    out_size = graph.output_shape.element_count
    if inputs.ndim != 2 or inputs.shape[1] != in_size:
        raise ShapeMismatch(f"inputs shaped {inputs.shape}, need (n, {in_size})")
    if c_outputs.ndim != 2 or c_outputs.shape[1] != out_size:
        raise ShapeMismatch(f"outputs shaped {c_outputs.shape}, need (n, {out_size})")
    if inputs.shape[0] != c_outputs.shape[0]:
        raise ShapeMismatch(
            f"{inputs.shape[0]} input vectors but {c_outputs.shape[0]} output vectors"
        )

    n = inputs.shape[0]
    if n == 0:
        return CrossAccuracyReport(graph.name, 0, 0, 0, 1.0, atol, rtol, 0.0, 0.0)

    batch = inputs.reshape((n,) + graph.input_shape.dims)
    ref = run_batch(graph, weights, batch).reshape(n, -1).astype(np.float64)
    got = c_outputs.astype(np.float64)

    abs_err = np.abs(got - ref)
    ok = (abs_err <= atol + rtol * np.abs(ref)) & np.isfinite(got)
    matches = int(ok.sum())
    elements = int(ok.size)
    denom = np.abs(ref)
    rel = np.where(denom > 0, abs_err / np.where(denom > 0, denom, 1.0), 0.0)
    bad_vectors = tuple(int(i) for i in np.nonzero(~ok.all(axis=1))[0])
    return CrossAccuracyReport(
        model=graph.name,
        vectors=n,
        elements=elements,
        matches=matches,
        cross_accuracy=matches / elements,
        atol=atol,
        rtol=rtol,
        max_abs_err=float(abs_err.max(initial=0.0)),
        max_rel_err=float(rel.max(initial=0.0)),
        mismatched_vectors=bad_vectors,
    )


def run_compiled(
    graph: Graph,
    weights: WeightStore,
    vectors: np.ndarray,
    cc: str = "gcc",
    workdir: str | Path | None = None,
) -> tuple[np.ndarray, float, float]:
    """Emit, compile, and execute the model; returns (outputs, compile_s, run_s)."""
    graph = graph if graph.resolved else infer_shapes(graph)
    ctx = TemporaryDirectory(prefix="nn2c_validate_") if workdir is None else None
    base = Path(ctx.name) if ctx is not None else Path(workdir)
    try:
        base.mkdir(parents=True, exist_ok=True)
        paths = emit_c(graph, weights, base)
        driver = base / f"{graph.name}_driver.c"
        driver.write_text(generate_driver_c(graph))
        exe = base / f"{graph.name}_driver"
        compile_s = compile_sources([paths["model"], paths["weights"], driver], exe, cc=cc)

        in_file = base / "validate_in.tnnv"
        out_file = base / "validate_out.tnnv"
        write_vectors(in_file, vectors)
        start = time.monotonic()
        proc = subprocess.run(
            [str(exe), str(in_file), str(out_file)], capture_output=True, text=True, timeout=600
        )
        run_s = time.monotonic() - start
        if proc.returncode != 0:
            raise CompileFailure(
                f"compiled driver exited {proc.returncode}: {proc.stderr.strip()}"
            )
        outputs, _ = read_vectors(out_file)
    finally:
        if ctx is not None:
            ctx.cleanup()
    return outputs, compile_s, run_s


def validate_generated(
    graph: Graph,
    weights: WeightStore,
    vectors: np.ndarray,
    atol: float = DEFAULT_ATOL,
    rtol: float = DEFAULT_RTOL,
    cc: str = "gcc",
    workdir: str | Path | None = None,
) -> CrossAccuracyReport:
    """Full round trip: emit C, compile, run on vectors, compare to reference."""
    graph = graph if graph.resolved else infer_shapes(graph)
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[1] != graph.input_shape.element_count:
        raise ShapeMismatch(
            f"vectors shaped {vectors.shape}, need (n, {graph.input_shape.element_count})"
        )
    outputs, compile_s, run_s = run_compiled(graph, weights, vectors, cc=cc, workdir=workdir)
    report = cross_validate(graph, weights, outputs, vectors, atol=atol, rtol=rtol)
    return replace(report, compile_s=compile_s, run_s=run_s)
