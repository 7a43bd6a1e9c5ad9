import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphgen import random_chain, tame_weights
from nn2c.errors import (
    BlobMismatch,
    InvalidIdentifier,
    ParseError,
    UnsupportedLayer,
)
from nn2c.fixtures import build_fixture
from nn2c.graph import Graph, TensorShape
from nn2c.model_format import (
    check_name,
    dumps_model,
    load_model,
    loads_model,
    parse_manifest,
    save_model,
    tensor_table,
)


@pytest.fixture(scope="module")
def bundle():
    graph, weights = build_fixture("cnnlstm")
    manifest, blob = dumps_model(graph, weights)
    return graph, weights, manifest, blob


class TestNames:
    @pytest.mark.parametrize("name", ["a", "model_3", "x" * 32, "can_ids"])
    def test_accepts(self, name):
        check_name(name)

    @pytest.mark.parametrize("name", ["", "3abc", "Upper", "has-dash", "x" * 33, "a b"])
    def test_rejects(self, name):
        with pytest.raises(InvalidIdentifier):
            check_name(name)


class TestRoundTrip:
    def test_bitwise_weight_round_trip(self, bundle):
        graph, weights, manifest, blob = bundle
        g2, w2 = loads_model(manifest, blob)
        assert g2.name == graph.name
        assert [l.kind for l in g2.layers] == [l.kind for l in graph.layers]
        assert w2 == weights

    def test_manifest_is_canonical(self, bundle):
        graph, weights, manifest, blob = bundle
        again, blob2 = dumps_model(graph, weights)
        assert again == manifest
        assert blob2 == blob
        assert manifest.endswith("\n")
        doc = json.loads(manifest)
        assert json.dumps(doc, sort_keys=True, indent=2) + "\n" == manifest

    def test_blob_is_headerless_le_float32(self, bundle):
        graph, weights, manifest, blob = bundle
        doc = json.loads(manifest)
        assert len(blob) == 4 * doc["blob_elements"]
        first = next(iter(weights.items()))[1].reshape(-1)[0]
        assert np.frombuffer(blob[:4], dtype="<f4")[0] == first

    def test_tensor_offsets_tile_blob_exactly(self, bundle):
        graph, _, manifest, _ = bundle
        doc = json.loads(manifest)
        offset = 0
        for entry in tensor_table(graph):
            assert entry["offset"] == offset
            offset += int(np.prod(entry["shape"]))
        assert offset == doc["blob_elements"]

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_random_graphs_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        graph = random_chain(rng)
        weights = tame_weights(graph, rng)
        g2, w2 = loads_model(*dumps_model(graph, weights))
        assert w2 == weights
        assert g2.input_shape.dims == graph.input_shape.dims
        assert [l for l in g2.layers] == [l for l in graph.layers]


class TestFilePair:
    def test_save_then_load(self, tmp_path, bundle):
        graph, weights, _, _ = bundle
        json_path, bin_path = save_model(graph, weights, tmp_path)
        assert json_path.name == "cnnlstm.tnnf.json"
        assert bin_path.name == "cnnlstm.weights.bin"
        g2, w2 = load_model(json_path)
        assert w2 == weights
        assert g2.output_shape.dims == graph.output_shape.dims

    def test_missing_file_is_parse_error(self, tmp_path):
        with pytest.raises(ParseError):
            load_model(tmp_path / "nope.tnnf.json")

    def test_missing_blob_is_parse_error(self, tmp_path, bundle):
        graph, weights, _, _ = bundle
        json_path, bin_path = save_model(graph, weights, tmp_path)
        bin_path.unlink()
        with pytest.raises(ParseError):
            load_model(json_path)


class TestRejection:
    def test_truncated_blob(self, bundle):
        _, _, manifest, blob = bundle
        with pytest.raises(BlobMismatch):
            loads_model(manifest, blob[:-4])

    def test_tampered_blob_fails_digest(self, bundle):
        _, _, manifest, blob = bundle
        raw = bytearray(blob)
        raw[0] ^= 0xFF
        with pytest.raises(BlobMismatch):
            loads_model(manifest, bytes(raw))

    def test_unknown_layer_kind(self, bundle):
        _, _, manifest, blob = bundle
        doc = json.loads(manifest)
        doc["layers"][0]["kind"] = "gru"
        with pytest.raises(UnsupportedLayer):
            parse_manifest(json.dumps(doc))

    def test_bad_model_name(self, bundle):
        _, _, manifest, blob = bundle
        doc = json.loads(manifest)
        doc["name"] = "Bad Name"
        with pytest.raises(InvalidIdentifier):
            parse_manifest(json.dumps(doc))

    @pytest.mark.parametrize("drop", ["format", "name", "input_shape", "layers", "blob_elements"])
    def test_missing_required_key(self, bundle, drop):
        _, _, manifest, _ = bundle
        doc = json.loads(manifest)
        del doc[drop]
        with pytest.raises(ParseError):
            parse_manifest(json.dumps(doc))

    def test_wrong_format_tag(self, bundle):
        _, _, manifest, _ = bundle
        doc = json.loads(manifest)
        doc["format"] = "tnnf-v2"
        with pytest.raises(ParseError):
            parse_manifest(json.dumps(doc))

    def test_bool_dims_rejected(self, bundle):
        _, _, manifest, _ = bundle
        doc = json.loads(manifest)
        doc["input_shape"] = [True, 4]
        with pytest.raises(ParseError):
            parse_manifest(json.dumps(doc))

    def test_not_json_at_all(self):
        with pytest.raises(ParseError):
            parse_manifest("]{")

    def test_layer_attr_of_wrong_kind(self, bundle):
        _, _, manifest, _ = bundle
        doc = json.loads(manifest)
        doc["layers"][0]["bogus_attr"] = 3
        with pytest.raises(ParseError):
            parse_manifest(json.dumps(doc))

    def test_tensor_table_mismatch(self, bundle):
        _, _, manifest, blob = bundle
        doc = json.loads(manifest)
        doc["tensors"][0]["offset"] = 1
        with pytest.raises(BlobMismatch):
            loads_model(json.dumps(doc, sort_keys=True, indent=2) + "\n", blob)
