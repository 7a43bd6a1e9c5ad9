"""Static Flash and RAM planning.

Flash is the packed float32 weight blob. RAM is a single arena shared by all
activation buffers, placed by greedy first-fit over buffer lifetimes so that
buffers alive at the same layer instant never overlap.

Batchnorm and maxpool run in place. Elementwise scale-shift is trivially
safe; for maxpool, output row t lands at or before its source window
(t <= t*stride), and rows needed by later windows all sit strictly beyond t,
so the forward overwrite never destroys unread input.

Each LSTM adds three single-instant scratch buffers: cell state, hidden
state, and a staging row so the new hidden vector never clobbers the one
still feeding the remaining gate rows of the same timestep.
"""
from __future__ import annotations

from dataclasses import dataclass

from .graph import Graph, Lstm, infer_shapes, layer_stored_param_counts

ALIGNMENT = 8
IN_PLACE_KINDS = ("batchnorm", "maxpool1d")

BYTES_PER_ELEMENT = 4


def _align_up(n: int, a: int = ALIGNMENT) -> int:
    return (n + a - 1) // a * a


@dataclass(frozen=True)
class PlannedBuffer:
    name: str
    size_bytes: int
    first: int
    last: int
    offset: int

    @property
    def end(self) -> int:
        return self.offset + self.size_bytes

    def overlaps_time(self, other: "PlannedBuffer") -> bool:
        return self.first <= other.last and other.first <= self.last

    def overlaps_space(self, other: "PlannedBuffer") -> bool:
        return self.offset < other.end and other.offset < self.end


@dataclass(frozen=True)
class MemoryPlan:
    model: str
    arena_bytes: int
    alignment: int
    buffers: tuple[PlannedBuffer, ...]
    instants: int

    def offset_of(self, name: str) -> int:
        for buf in self.buffers:
            if buf.name == name:
                return buf.offset
        raise KeyError(name)

    def live_bytes(self, instant: int) -> int:
        """Working-set size while the given layer runs."""
        return sum(b.size_bytes for b in self.buffers if b.first <= instant <= b.last)

    def peak_live_bytes(self) -> int:
        return max(self.live_bytes(i) for i in range(self.instants))


@dataclass
class _Request:
    name: str
    size_bytes: int
    first: int
    last: int
    creation: int


def _collect_requests(graph: Graph) -> tuple[list[_Request], int]:
    """Walk the chain once, producing lifetime requests over layer instants."""
    graph = graph if graph.resolved else infer_shapes(graph)
    requests: list[_Request] = []

    def add(name: str, size_bytes: int, instant: int) -> _Request:
        req = _Request(name, size_bytes, instant, instant, len(requests))
        requests.append(req)
        return req

    current = add("input", graph.input_shape.element_count * BYTES_PER_ELEMENT, 0)
    for idx, (layer, out_shape) in enumerate(zip(graph.layers, graph.output_shapes)):
        current.last = idx
        if layer.kind in IN_PLACE_KINDS:
            continue
        out = add(f"act{idx}", out_shape.element_count * BYTES_PER_ELEMENT, idx)
        if isinstance(layer, Lstm):
            state = layer.units * BYTES_PER_ELEMENT
            add(f"h{idx}", state, idx)
            add(f"c{idx}", state, idx)
            add(f"stage{idx}", state, idx)
        current = out
    return requests, len(graph.layers)


def _first_fit(req: _Request, placed: list[PlannedBuffer]) -> int:
    blocking = sorted(
        (b for b in placed if req.first <= b.last and b.first <= req.last),
        key=lambda b: b.offset,
    )
    candidate = 0
    for b in blocking:
        if candidate + req.size_bytes <= b.offset:
            break
        candidate = max(candidate, _align_up(b.end))
    return candidate


def plan_memory(graph: Graph) -> MemoryPlan:
    """Place every buffer in the arena; deterministic for a given graph."""
    graph = graph if graph.resolved else infer_shapes(graph)
    requests, instants = _collect_requests(graph)
    order = sorted(requests, key=lambda r: (-r.size_bytes, r.first, r.creation))
    placed: list[PlannedBuffer] = []
    for req in order:
        offset = _first_fit(req, placed)
        placed.append(PlannedBuffer(req.name, req.size_bytes, req.first, req.last, offset))
    placed.sort(key=lambda b: next(r.creation for r in requests if r.name == b.name))
    arena = _align_up(max((b.end for b in placed), default=0))
    return MemoryPlan(graph.name, arena, ALIGNMENT, tuple(placed), instants)


def layer_io_names(graph: Graph) -> list[tuple[str, str]]:
    """(input buffer, output buffer) per layer; equal names mean in place.

    Must stay in lockstep with _collect_requests so code generation reads
    and writes exactly the buffers the planner placed.
    """
    graph = graph if graph.resolved else infer_shapes(graph)
    names: list[tuple[str, str]] = []
    current = "input"
    for idx, layer in enumerate(graph.layers):
        if layer.kind in IN_PLACE_KINDS:
            names.append((current, current))
        else:
            names.append((current, f"act{idx}"))
            current = f"act{idx}"
    return names


@dataclass(frozen=True)
class FlashPlan:
    model: str
    per_layer_bytes: tuple[int, ...]
    total_bytes: int


def plan_flash(graph: Graph) -> FlashPlan:
    """Read-only bytes per layer: every stored weight element, 4 bytes each."""
    graph = graph if graph.resolved else infer_shapes(graph)
    per_layer = tuple(n * BYTES_PER_ELEMENT for n in layer_stored_param_counts(graph))
    return FlashPlan(graph.name, per_layer, sum(per_layer))


def check_plan(plan: MemoryPlan) -> None:
    """Raise AssertionError on any soundness violation; used by tests and CLI."""
    for buf in plan.buffers:
        assert buf.offset % plan.alignment == 0, f"{buf.name} offset {buf.offset} misaligned"
        assert buf.end <= plan.arena_bytes, f"{buf.name} spills past the arena"
        assert 0 <= buf.first <= buf.last < plan.instants, f"{buf.name} lifetime out of range"
    for i, a in enumerate(plan.buffers):
        for b in plan.buffers[i + 1 :]:
            if a.overlaps_time(b):
                assert not a.overlaps_space(b), f"{a.name} and {b.name} collide"
    assert plan.arena_bytes % plan.alignment == 0
    assert plan.arena_bytes >= plan.peak_live_bytes() or not plan.buffers
