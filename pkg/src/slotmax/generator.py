"""Synthetic trajectory/billboard instance generator.

Stands in for the non-redistributable city datasets: users visit named
locations with Zipf-weighted popularity and uniform dwell intervals inside
the horizon. Output files load through the catalog module unchanged, and a
fixed seed reproduces them byte for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["SyntheticSpec", "generate"]


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a generated instance.

    ``zipf_skew`` controls location popularity (0 means uniform); dwell
    times and panel sizes are drawn uniformly from their inclusive ranges.
    """

    n_billboards: int
    n_locations: int
    n_users: int
    n_tuples: int
    horizon: tuple[int, int]
    delta: int
    zipf_skew: float = 1.0
    dwell_range: tuple[int, int] = (300, 3600)
    panel_range: tuple[int, int] = (100, 1000)
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("n_billboards", "n_locations", "n_users", "n_tuples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        t1, t2 = self.horizon
        if t2 <= t1:
            raise ValueError(f"horizon must be non-empty, got [{t1}, {t2})")
        if self.delta <= 0 or (t2 - t1) % self.delta != 0:
            raise ValueError(
                f"horizon length {t2 - t1} must be a positive multiple of delta"
            )
        lo, hi = self.dwell_range
        if not 0 < lo <= hi:
            raise ValueError(f"dwell_range must be 0 < lo <= hi, got {self.dwell_range}")
        if hi > t2 - t1:
            raise ValueError("max dwell time cannot exceed the horizon length")
        lo, hi = self.panel_range
        if not 0 < lo <= hi:
            raise ValueError(f"panel_range must be 0 < lo <= hi, got {self.panel_range}")
        if self.zipf_skew < 0:
            raise ValueError(f"zipf_skew must be non-negative, got {self.zipf_skew}")

    @classmethod
    def from_json(cls, path: str | Path) -> "SyntheticSpec":
        with Path(path).open(encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            n_billboards=raw["billboards"],
            n_locations=raw["locations"],
            n_users=raw["users"],
            n_tuples=raw["tuples"],
            horizon=(raw["t_start"], raw["t_end"]),
            delta=raw["slot_seconds"],
            zipf_skew=raw.get("zipf_skew", 1.0),
            dwell_range=(raw.get("dwell_min", 300), raw.get("dwell_max", 3600)),
            panel_range=(raw.get("panel_min", 100), raw.get("panel_max", 1000)),
            seed=raw.get("seed", 0),
        )


def generate(spec: SyntheticSpec, out_dir: str | Path) -> tuple[Path, Path]:
    """Write trajectories.csv and billboards.csv; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    t1, t2 = spec.horizon

    locations = [f"loc{i:04d}" for i in range(spec.n_locations)]
    ranks = np.arange(1, spec.n_locations + 1, dtype=np.float64)
    weights = ranks ** -spec.zipf_skew
    weights /= weights.sum()

    billboards_path = out_dir / "billboards.csv"
    with billboards_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["billboard_id", "loc", "cost", "panel_size"])
        panels = rng.integers(spec.panel_range[0], spec.panel_range[1] + 1, spec.n_billboards)
        costs = rng.integers(1, 21, spec.n_billboards)
        for i in range(spec.n_billboards):
            writer.writerow(
                [f"b{i:04d}", locations[i % spec.n_locations], int(costs[i]), int(panels[i])]
            )

    trajectories_path = out_dir / "trajectories.csv"
    with trajectories_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user_id", "loc", "t_start", "t_end"])
        users = rng.integers(0, spec.n_users, spec.n_tuples)
        visit_locs = rng.choice(spec.n_locations, size=spec.n_tuples, p=weights)
        dwells = rng.integers(spec.dwell_range[0], spec.dwell_range[1] + 1, spec.n_tuples)
        for j in range(spec.n_tuples):
            dwell = int(dwells[j])
            start = int(rng.integers(t1, t2 - dwell + 1))
            writer.writerow(
                [f"u{users[j]:05d}", locations[visit_locs[j]], start, start + dwell]
            )

    return trajectories_path, billboards_path
