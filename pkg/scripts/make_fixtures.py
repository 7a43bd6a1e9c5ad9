#!/usr/bin/env python3
"""Regenerate the bundled model data files under src/nn2c/data/."""
from pathlib import Path

from nn2c.fixtures import BUNDLED, build_fixture
from nn2c.model_format import save_model

OUT = Path(__file__).resolve().parent.parent / "src" / "nn2c" / "data"


def main() -> None:
    for name in BUNDLED:
        graph, weights = build_fixture(name)
        json_path, bin_path = save_model(graph, weights, OUT)
        print(f"{json_path} ({bin_path.stat().st_size} blob bytes)")


if __name__ == "__main__":
    main()
