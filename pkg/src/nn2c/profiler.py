"""Complexity profiling and deployment budgeting.

Per layer: multiply-accumulate count, read-only (Flash) bytes, and working-set
(RAM) bytes, each with its share of the model total. RAM per layer is the sum
of arena buffers alive while that layer runs, so a layer is charged for the
inputs it reads, the outputs it writes, and its scratch.

Latency model: time_ms = maccs * cycles_per_macc / (clock_mhz * 1000). One
fitted constant, linear in MACCs and inversely linear in clock.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ParseError, UnknownMcu
from .graph import Graph, infer_shapes, layer_maccs
from .memory_planner import plan_flash, plan_memory

CYCLES_PER_MACC = 9.6


@dataclass(frozen=True)
class Mcu:
    name: str
    flash_kib: int
    ram_kib: int
    clock_mhz: float
    run_current_ma: float

    @property
    def flash_bytes(self) -> int:
        return self.flash_kib * 1024

    @property
    def ram_bytes(self) -> int:
        return self.ram_kib * 1024


def load_mcus(path: str | Path | None = None) -> tuple[Mcu, ...]:
    """Catalog from a JSON file; default is the packaged mcus.json."""
    if path is None:
        text = resources.files("nn2c").joinpath("data/mcus.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        raw = json.loads(text)
        mcus = tuple(Mcu(**entry) for entry in raw["mcus"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad MCU catalog: {exc}") from None
    for m in mcus:
        if m.flash_kib <= 0 or m.ram_kib <= 0 or m.clock_mhz <= 0 or m.run_current_ma <= 0:
            raise ParseError(f"MCU {m.name}: all figures must be positive")
    return mcus


MCUS = load_mcus()


def find_mcu(name: str, catalog: tuple[Mcu, ...] = MCUS) -> Mcu:
    for mcu in catalog:
        if mcu.name.lower() == name.lower():
            return mcu
    known = ", ".join(m.name for m in catalog)
    raise UnknownMcu(f"unknown MCU {name!r}; catalog has {known}")


def estimate_time_ms(maccs: int, clock_mhz: float, cycles_per_macc: float = CYCLES_PER_MACC) -> float:
    if clock_mhz <= 0 or cycles_per_macc <= 0:
        raise ValueError("clock and cycles-per-MACC must be positive")
    return maccs * cycles_per_macc / (clock_mhz * 1000.0)


@dataclass(frozen=True)
class LayerProfile:
    index: int
    kind: str
    maccs: int
    flash_bytes: int
    ram_bytes: int
    macc_pct: float
    flash_pct: float
    ram_pct: float
    time_pct: float
    host_ns: int | None = None

    def to_dict(self) -> dict:
        out = {
            "index": self.index,
            "kind": self.kind,
            "maccs": self.maccs,
            "flash_bytes": self.flash_bytes,
            "ram_bytes": self.ram_bytes,
            "macc_pct": round(self.macc_pct, 2),
            "flash_pct": round(self.flash_pct, 2),
            "ram_pct": round(self.ram_pct, 2),
            "time_pct": round(self.time_pct, 2),
        }
        if self.host_ns is not None:
            out["host_ns"] = self.host_ns
        return out


@dataclass(frozen=True)
class McuEstimate:
    mcu: str
    clock_mhz: float
    time_ms: float
    flash_fits: bool
    ram_fits: bool

    def to_dict(self) -> dict:
        return {
            "mcu": self.mcu,
            "clock_mhz": self.clock_mhz,
            "time_ms": round(self.time_ms, 4),
            "flash_fits": self.flash_fits,
            "ram_fits": self.ram_fits,
        }


@dataclass(frozen=True)
class ModelProfile:
    model: str
    layers: tuple[LayerProfile, ...]
    total_maccs: int
    flash_bytes: int
    arena_bytes: int
    cycles_per_macc: float
    estimates: tuple[McuEstimate, ...]

    def share_by_kind(self, measure: str) -> dict[str, float]:
        """Sum of a percentage column grouped over layer kinds."""
        shares: dict[str, float] = {}
        for lp in self.layers:
            shares[lp.kind] = shares.get(lp.kind, 0.0) + getattr(lp, measure)
        return shares

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "total_maccs": self.total_maccs,
            "flash_bytes": self.flash_bytes,
            "arena_bytes": self.arena_bytes,
            "cycles_per_macc": self.cycles_per_macc,
            "layers": [lp.to_dict() for lp in self.layers],
            "estimates": [e.to_dict() for e in self.estimates],
        }


def profile_graph(
    graph: Graph,
    cycles_per_macc: float = CYCLES_PER_MACC,
    catalog: tuple[Mcu, ...] = MCUS,
    host_ns: list[int] | None = None,
) -> ModelProfile:
    graph = graph if graph.resolved else infer_shapes(graph)
    maccs = layer_maccs(graph)
    flash = plan_flash(graph)
    plan = plan_memory(graph)
    ram = [plan.live_bytes(i) for i in range(len(graph.layers))]
    if host_ns is not None and len(host_ns) != len(graph.layers):
        raise ValueError("host_ns must supply one figure per layer")

    total_maccs = sum(maccs)
    total_flash = flash.total_bytes
    total_ram = sum(ram)
    time_basis = host_ns if host_ns is not None else maccs
    total_time = sum(time_basis)

    def pct(part: float, whole: float) -> float:
        return 100.0 * part / whole if whole else 0.0

    layers = tuple(
        LayerProfile(
            index=i,
            kind=layer.kind,
            maccs=maccs[i],
            flash_bytes=flash.per_layer_bytes[i],
            ram_bytes=ram[i],
            macc_pct=pct(maccs[i], total_maccs),
            flash_pct=pct(flash.per_layer_bytes[i], total_flash),
            ram_pct=pct(ram[i], total_ram),
            time_pct=pct(time_basis[i], total_time),
            host_ns=None if host_ns is None else host_ns[i],
        )
        for i, layer in enumerate(graph.layers)
    )
    estimates = tuple(
        McuEstimate(
            mcu=m.name,
            clock_mhz=m.clock_mhz,
            time_ms=estimate_time_ms(total_maccs, m.clock_mhz, cycles_per_macc),
            flash_fits=total_flash <= m.flash_bytes,
            ram_fits=plan.arena_bytes <= m.ram_bytes,
        )
        for m in catalog
    )
    return ModelProfile(
        model=graph.name,
        layers=layers,
        total_maccs=total_maccs,
        flash_bytes=total_flash,
        arena_bytes=plan.arena_bytes,
        cycles_per_macc=cycles_per_macc,
        estimates=estimates,
    )
