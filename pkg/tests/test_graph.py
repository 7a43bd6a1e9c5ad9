import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nn2c.errors import (
    IncompleteWeights,
    InvalidLayer,
    NegativeVariance,
    NonFiniteWeight,
    ShapeMismatch,
)
from nn2c.fixtures import autoencoder_graph, cnnlstm_graph, random_weights
from nn2c.graph import (
    BatchNorm,
    Conv1D,
    Dense,
    Graph,
    Lstm,
    MaxPool1D,
    TensorShape,
    WeightStore,
    infer_shapes,
    layer_maccs,
    layer_param_counts,
    layer_stored_param_counts,
    macc_count,
    param_count,
    weight_layout,
)


class TestTensorShape:
    def test_rank_and_elements(self):
        assert TensorShape((24, 20)).rank == 2
        assert TensorShape((24, 20)).element_count == 480
        assert TensorShape((7,)).element_count == 7

    @pytest.mark.parametrize("dims", [(), (1, 2, 3), (0,), (4, -1)])
    def test_rejects_bad_dims(self, dims):
        with pytest.raises(ShapeMismatch):
            TensorShape(dims)


class TestLayerValidation:
    @pytest.mark.parametrize(
        "build",
        [
            lambda: Dense(units=0),
            lambda: Dense(units=3, activation="swish"),
            lambda: Conv1D(filters=0, kernel=3),
            lambda: Conv1D(filters=2, kernel=0),
            lambda: Conv1D(filters=2, kernel=3, stride=0),
            lambda: Conv1D(filters=2, kernel=3, padding="same"),
            lambda: MaxPool1D(pool=0),
            lambda: MaxPool1D(pool=2, stride=0),
            lambda: BatchNorm(epsilon=-1e-3),
            lambda: Lstm(units=0),
        ],
    )
    def test_rejects_bad_layers(self, build):
        with pytest.raises(InvalidLayer):
            build()

    def test_graph_needs_layers(self):
        with pytest.raises(InvalidLayer):
            Graph(name="m", input_shape=TensorShape((4,)), layers=())


class TestShapeInference:
    def test_autoencoder_chain(self):
        g = infer_shapes(autoencoder_graph())
        assert [s.dims for s in g.output_shapes] == [
            (24, 20),
            (24, 18),
            (24, 18),
            (24, 20),
        ]

    def test_cnnlstm_chain(self):
        g = infer_shapes(cnnlstm_graph())
        assert [s.dims for s in g.output_shapes] == [
            (17, 32),
            (17, 32),
            (8, 32),
            (32,),
            (1,),
        ]

    def test_idempotent(self):
        g = infer_shapes(autoencoder_graph())
        assert infer_shapes(g).output_shapes == g.output_shapes

    @pytest.mark.parametrize(
        "shape,layer",
        [
            ((8,), Conv1D(filters=2, kernel=3)),
            ((8,), MaxPool1D()),
            ((8,), BatchNorm()),
            ((8,), Lstm(units=2)),
            ((2, 4), Conv1D(filters=2, kernel=3)),
            ((1, 4), MaxPool1D(pool=2)),
        ],
    )
    def test_rejects_infeasible(self, shape, layer):
        g = Graph(name="m", input_shape=TensorShape(shape), layers=(layer,))
        with pytest.raises(ShapeMismatch):
            infer_shapes(g)

    @given(
        t=st.integers(1, 40),
        k=st.integers(1, 8),
        s=st.integers(1, 4),
        c=st.integers(1, 6),
        f=st.integers(1, 6),
    )
    @settings(max_examples=60, deadline=None)
    def test_conv_length_law(self, t, k, s, c, f):
        g = Graph(
            name="m",
            input_shape=TensorShape((t, c)),
            layers=(Conv1D(filters=f, kernel=k, stride=s),),
        )
        if k > t:
            with pytest.raises(ShapeMismatch):
                infer_shapes(g)
        else:
            out = infer_shapes(g).output_shape
            assert out.dims == ((t - k) // s + 1, f)


class TestCounts:
    def test_autoencoder_params_by_hand(self):
        # dense: (in+1)*units; lstm: 4*(units*(in+units)+units)
        want = [
            (20 + 1) * 20,
            4 * (18 * (20 + 18) + 18),
            4 * (18 * (18 + 18) + 18),
            (18 + 1) * 20,
        ]
        g = autoencoder_graph()
        assert layer_param_counts(g) == want
        assert param_count(g) == 6272

    def test_cnnlstm_params_by_hand(self):
        want = [
            (4 * 4 + 1) * 32,
            2 * 32,
            0,
            4 * (32 * (32 + 32) + 32),
            (32 + 1) * 1,
        ]
        g = cnnlstm_graph()
        assert layer_param_counts(g) == want
        assert param_count(g) == 8961

    def test_stored_counts_add_bn_stats(self):
        g = cnnlstm_graph()
        trainable = layer_param_counts(g)
        stored = layer_stored_param_counts(g)
        assert stored[1] == 4 * 32
        for i in (0, 2, 3, 4):
            assert stored[i] == trainable[i]

    def test_maccs_by_hand(self):
        per, total = macc_count(autoencoder_graph())
        assert per == [
            24 * 20 * 20,
            24 * 4 * 18 * (20 + 18),
            24 * 4 * 18 * (18 + 18),
            24 * 18 * 20,
        ]
        assert total == 146112
        per2, total2 = macc_count(cnnlstm_graph())
        assert per2 == [17 * 4 * 4 * 32, 17 * 32, 0, 8 * 4 * 32 * (32 + 32), 32]
        assert total2 == 74816

    def test_layer_maccs_matches_macc_count(self):
        g = cnnlstm_graph()
        assert layer_maccs(g) == macc_count(g)[0]

    @given(n_in=st.integers(1, 40), units=st.integers(1, 40))
    @settings(max_examples=40, deadline=None)
    def test_dense_param_law(self, n_in, units):
        g = Graph(
            name="m",
            input_shape=TensorShape((n_in,)),
            layers=(Dense(units=units),),
        )
        assert param_count(g) == (n_in + 1) * units


class TestWeightStore:
    def test_layout_roles(self):
        g = infer_shapes(cnnlstm_graph())
        roles = [sorted(d) for d in weight_layout(g)]
        assert roles == [
            ["W", "b"],
            ["beta", "gamma", "mean", "var"],
            [],
            ["U_rec", "W", "b"],
            ["W", "b"],
        ]

    def test_validate_accepts_fixture_weights(self):
        g = autoencoder_graph()
        random_weights(g).validate_for(g)

    def test_missing_tensor_rejected(self):
        g = infer_shapes(autoencoder_graph())
        ws = random_weights(g)
        partial = WeightStore(dict(list(ws.items())[:-1]))
        with pytest.raises(IncompleteWeights):
            partial.validate_for(g)

    def test_nan_weight_rejected(self):
        g = infer_shapes(autoencoder_graph())
        arrays = dict(random_weights(g).items())
        bad = arrays[(0, "W")].copy()
        bad[0, 0] = np.nan
        arrays[(0, "W")] = bad
        with pytest.raises(NonFiniteWeight):
            WeightStore(arrays).validate_for(g)

    def test_negative_variance_rejected(self):
        g = infer_shapes(cnnlstm_graph())
        arrays = dict(random_weights(g).items())
        bad = arrays[(1, "var")].copy()
        bad[0] = -0.5
        arrays[(1, "var")] = bad
        with pytest.raises(NegativeVariance):
            WeightStore(arrays).validate_for(g)

    def test_arrays_are_immutable(self):
        ws = random_weights(autoencoder_graph())
        with pytest.raises(ValueError):
            ws.get(0, "W")[0, 0] = 1.0

    def test_total_elements_matches_stored_count(self):
        g = cnnlstm_graph()
        ws = random_weights(g)
        assert ws.total_elements() == sum(layer_stored_param_counts(g))
