import numpy as np
import pytest

import sweeps
from graphgen import random_chain
from nn2c.fixtures import autoencoder_graph, cnnlstm_graph
from nn2c.graph import Dense, Graph, Lstm, MaxPool1D, TensorShape, infer_shapes
from nn2c.memory_planner import (
    ALIGNMENT,
    check_plan,
    layer_io_names,
    plan_flash,
    plan_memory,
)


def test_single_dense_arena_is_one_aligned_slot_pair():
    g = Graph(name="m", input_shape=TensorShape((3,)), layers=(Dense(units=1),))
    plan = plan_memory(infer_shapes(g))
    # Input (12 B) and output (4 B) are both live while the layer runs, so
    # the output lands at the next aligned offset: 16 + 4, rounded up to 24.
    assert plan.arena_bytes == 24


def test_fixture_arena_sizes_pinned():
    assert plan_memory(autoencoder_graph()).arena_bytes == 3912
    assert plan_memory(cnnlstm_graph()).arena_bytes == 2688


def test_flash_per_layer_and_total():
    flash = plan_flash(autoencoder_graph())
    assert list(flash.per_layer_bytes) == [1680, 11232, 10656, 1520]
    assert flash.total_bytes == 25088
    flash2 = plan_flash(cnnlstm_graph())
    assert list(flash2.per_layer_bytes) == [2176, 4 * (4 * 32), 0, 33280, 132]
    assert flash2.total_bytes == 36100


def test_plans_are_deterministic():
    a = plan_memory(autoencoder_graph())
    b = plan_memory(autoencoder_graph())
    assert a == b


def test_offsets_are_aligned_and_inside_arena():
    plan = plan_memory(cnnlstm_graph())
    for buf in plan.buffers:
        assert buf.offset % ALIGNMENT == 0
        assert buf.end <= plan.arena_bytes
    assert plan.arena_bytes % ALIGNMENT == 0


def test_live_buffers_never_collide():
    plan = plan_memory(autoencoder_graph())
    check_plan(plan)
    bufs = plan.buffers
    for i in range(len(bufs)):
        for j in range(i + 1, len(bufs)):
            a, b = bufs[i], bufs[j]
            if a.overlaps_time(b):
                assert not a.overlaps_space(b), (a.name, b.name)


def test_in_place_layers_add_no_buffer():
    g = infer_shapes(
        Graph(name="m", input_shape=TensorShape((8, 4)), layers=(MaxPool1D(),))
    )
    plan = plan_memory(g)
    assert [b.name for b in plan.buffers] == ["input"]
    assert plan.arena_bytes == 8 * 4 * 4


def test_lstm_gets_state_and_stage_scratch():
    g = infer_shapes(
        Graph(name="m", input_shape=TensorShape((4, 3)), layers=(Lstm(units=5),))
    )
    names = {b.name for b in plan_memory(g).buffers}
    assert names == {"input", "act0", "h0", "c0", "stage0"}


def test_scratch_lifetime_is_single_instant():
    g = infer_shapes(
        Graph(name="m", input_shape=TensorShape((4, 3)), layers=(Lstm(units=5),))
    )
    plan = plan_memory(g)
    for buf in plan.buffers:
        if buf.name.startswith(("h", "c", "stage")):
            assert buf.first == buf.last == 0


def test_layer_io_names_track_plan_buffers():
    g = infer_shapes(cnnlstm_graph())
    plan = plan_memory(g)
    names = {b.name for b in plan.buffers}
    pairs = layer_io_names(g)
    assert len(pairs) == len(g.layers)
    assert pairs[0][0] == "input"
    for src, dst in pairs:
        assert src in names and dst in names
    # batchnorm and maxpool run in place
    assert pairs[1][0] == pairs[1][1]
    assert pairs[2][0] == pairs[2][1]
    # chained: each layer reads what the previous one wrote
    for (_, prev_out), (cur_in, _) in zip(pairs, pairs[1:]):
        assert cur_in == prev_out


def test_arena_between_brute_force_bounds_on_fixtures():
    for g in (autoencoder_graph(), cnnlstm_graph()):
        lower, arena, upper = sweeps.plan_bounds(infer_shapes(g))
        assert lower <= arena <= upper


def test_peak_live_bytes_never_exceeds_arena():
    rng = np.random.default_rng(77)
    for _ in range(40):
        plan = plan_memory(random_chain(rng))
        assert plan.peak_live_bytes() <= plan.arena_bytes


def test_random_chain_sweep():
    assert sweeps.planner_sweep(200, seed=501) == 200
