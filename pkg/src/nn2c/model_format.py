"""Model bundle reader/writer.

A model on disk is a pair of files sharing a stem: `<name>.tnnf.json`, a
canonical JSON manifest (sorted keys, two-space indent, trailing newline),
and `<name>.weights.bin`, a headerless little-endian float32 blob. Tensors
pack into the blob in layer order, each layer's roles in their canonical
layout order, arrays flattened row-major. Offsets are in elements and must
tile the blob exactly. The manifest's optional `sha256` field is the hex
digest of the blob; the writer always fills it in.
"""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .errors import BlobMismatch, InvalidIdentifier, ParseError, UnsupportedLayer
from .graph import (
    LAYER_KINDS,
    Graph,
    TensorShape,
    WeightStore,
    infer_shapes,
    layer_attrs,
    weight_layout,
)

FORMAT_TAG = "tnnf-v1"

_NAME_RE = re.compile(r"^[a-z][a-z0-9_]{0,31}$")


def check_name(name: str) -> str:
    """Model names become C identifier prefixes, so keep them boring."""
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise InvalidIdentifier(
            f"model name must match [a-z][a-z0-9_]* and stay under 33 chars, got {name!r}"
        )
    return name


def tensor_table(graph: Graph) -> list[dict]:
    """Canonical blob layout: one entry per tensor with its element offset."""
    entries = []
    offset = 0
    for idx, layout in enumerate(weight_layout(graph)):
        for role, shape in layout.items():
            size = int(np.prod(shape))
            entries.append(
                {"layer": idx, "role": role, "shape": list(shape), "offset": offset}
            )
            offset += size
    return entries


def pack_blob(graph: Graph, weights: WeightStore) -> bytes:
    graph = graph if graph.resolved else infer_shapes(graph)
    weights.validate_for(graph)
    parts = []
    for idx, layout in enumerate(weight_layout(graph)):
        for role in layout:
            arr = weights.get(idx, role)
            parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(parts)


def dumps_model(graph: Graph, weights: WeightStore) -> tuple[str, bytes]:
    """Serialize to (manifest text, blob bytes) without touching the disk."""
    graph = graph if graph.resolved else infer_shapes(graph)
    blob = pack_blob(graph, weights)
    entries = tensor_table(graph)
    manifest = {
        "format": FORMAT_TAG,
        "name": check_name(graph.name),
        "input_shape": list(graph.input_shape.dims),
        "layers": [{"kind": layer.kind, **layer_attrs(layer)} for layer in graph.layers],
        "tensors": entries,
        "blob_elements": sum(int(np.prod(e["shape"])) for e in entries),
        "sha256": hashlib.sha256(blob).hexdigest(),
    }
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n", blob


def save_model(graph: Graph, weights: WeightStore, out_dir: str | Path) -> tuple[Path, Path]:
    """Write `<name>.tnnf.json` and `<name>.weights.bin`; returns both paths."""
    graph = graph if graph.resolved else infer_shapes(graph)
    text, blob = dumps_model(graph, weights)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{graph.name}.tnnf.json"
    bin_path = out_dir / f"{graph.name}.weights.bin"
    json_path.write_text(text)
    bin_path.write_bytes(blob)
    return json_path, bin_path


def _require(manifest: dict, key: str, types) -> object:
    if key not in manifest:
        raise ParseError(f"manifest missing key {key!r}")
    value = manifest[key]
    if not isinstance(value, types):
        raise ParseError(f"manifest key {key!r} has wrong type {type(value).__name__}")
    return value


def _parse_layer(entry: dict, index: int):
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ParseError(f"layer {index} entry must be an object with a 'kind'")
    kind = entry["kind"]
    if kind not in LAYER_KINDS:
        raise UnsupportedLayer(f"layer {index}: unsupported kind {kind!r}")
    attrs = {k: v for k, v in entry.items() if k != "kind"}
    try:
        return LAYER_KINDS[kind](**attrs)
    except TypeError as exc:
        raise ParseError(f"layer {index} ({kind}): {exc}") from None


def parse_manifest(text: str) -> dict:
    """Parse manifest text and validate its whole structure, graph included."""
    try:
        manifest = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed manifest: {exc}") from None
    if not isinstance(manifest, dict):
        raise ParseError("manifest root must be a JSON object")
    tag = _require(manifest, "format", str)
    if tag != FORMAT_TAG:
        raise ParseError(f"unknown format tag {tag!r}, expected {FORMAT_TAG!r}")
    graph_from_manifest(manifest)
    declared = _require(manifest, "blob_elements", int)
    if isinstance(declared, bool) or declared < 0:
        raise ParseError(f"blob_elements must be a non-negative integer, got {declared!r}")
    _require(manifest, "tensors", list)
    return manifest


def graph_from_manifest(manifest: dict) -> Graph:
    name = check_name(_require(manifest, "name", str))
    dims = _require(manifest, "input_shape", list)
    if not dims or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims):
        raise ParseError("input_shape must be a non-empty list of integers")
    raw_layers = _require(manifest, "layers", list)
    if not raw_layers:
        raise ParseError("layers list is empty")
    layers = tuple(_parse_layer(entry, i) for i, entry in enumerate(raw_layers))
    return infer_shapes(Graph(name, TensorShape(tuple(dims)), layers))


def loads_model(manifest_text: str, blob: bytes) -> tuple[Graph, WeightStore]:
    """Parse and fully validate a model from in-memory text + blob."""
    manifest = parse_manifest(manifest_text)
    graph = graph_from_manifest(manifest)

    declared = _require(manifest, "blob_elements", int)
    if len(blob) != 4 * declared:
        raise BlobMismatch(
            f"blob is {len(blob)} bytes, manifest declares {declared} float32 elements"
        )
    digest = manifest.get("sha256")
    if digest is not None and hashlib.sha256(blob).hexdigest() != digest:
        raise BlobMismatch("blob sha256 does not match manifest")

    entries = _require(manifest, "tensors", list)
    expected = tensor_table(graph)
    normalized = []
    for e in entries:
        if not isinstance(e, dict):
            raise ParseError("tensor entries must be objects")
        try:
            normalized.append(
                {
                    "layer": e["layer"],
                    "role": e["role"],
                    "shape": list(e["shape"]),
                    "offset": e["offset"],
                }
            )
        except KeyError as exc:
            raise ParseError(f"tensor entry missing key {exc}") from None
    if normalized != expected:
        raise BlobMismatch("tensor table does not tile the blob in canonical order")

    flat = np.frombuffer(blob, dtype="<f4")
    arrays: dict[tuple[int, str], np.ndarray] = {}
    for e in expected:
        size = int(np.prod(e["shape"]))
        chunk = flat[e["offset"] : e["offset"] + size]
        arrays[(e["layer"], e["role"])] = chunk.reshape(e["shape"]).copy()
    weights = WeightStore(arrays)
    weights.validate_for(graph)
    return graph, weights


def load_model(json_path: str | Path) -> tuple[Graph, WeightStore]:
    """Load a bundle from disk; the blob path derives from the manifest's name."""
    json_path = Path(json_path)
    try:
        text = json_path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read manifest {json_path}: {exc}") from None
    manifest = parse_manifest(text)
    graph = graph_from_manifest(manifest)
    bin_path = json_path.with_name(f"{graph.name}.weights.bin")
    try:
        blob = bin_path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read weight blob {bin_path}: {exc}") from None
    return loads_model(text, blob)
