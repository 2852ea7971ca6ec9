"""Trajectory/billboard ingestion and the slot-by-user exposure matrix.

Input CSVs:
  trajectories.csv : header ``user_id,loc,t_start,t_end``
  billboards.csv   : header ``billboard_id,loc,cost,panel_size``
  probs.csv        : header ``slot_id,user_id,prob`` (explicit model only)

All time intervals are half-open ``[start, end)`` over integer seconds; an
exposure requires an overlap of positive length and an exact location-key
match between the trajectory tuple and the slot's billboard.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "TrajectoryTuple",
    "BillboardRecord",
    "Slot",
    "SlotCatalog",
    "ExposureMatrix",
    "PanelRatio",
    "Explicit",
    "load_trajectories",
    "load_billboards",
    "load_probabilities",
    "build_catalog",
    "build_exposure",
]


@dataclass(frozen=True)
class TrajectoryTuple:
    """One stay of a user at a location over ``[t_start, t_end)``."""

    user_id: str
    loc: str
    t_start: int
    t_end: int

    def __post_init__(self) -> None:
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if not self.loc:
            raise ValueError("loc must be non-empty")
        if self.t_start >= self.t_end:
            raise ValueError(
                f"t_start must be < t_end, got [{self.t_start}, {self.t_end})"
            )


@dataclass(frozen=True)
class BillboardRecord:
    """A physical billboard with its location, rental cost, and panel size."""

    billboard_id: str
    loc: str
    cost: float
    panel_size: float

    def __post_init__(self) -> None:
        if not self.billboard_id:
            raise ValueError("billboard_id must be non-empty")
        if self.cost < 0:
            raise ValueError(f"cost must be non-negative, got {self.cost}")
        if self.panel_size <= 0:
            raise ValueError(f"panel_size must be positive, got {self.panel_size}")


@dataclass(frozen=True)
class Slot:
    """One sellable (billboard, time window) pair; window is ``[start, end)``."""

    slot_id: int
    billboard_id: str
    start: int
    end: int


@dataclass(frozen=True)
class SlotCatalog:
    """The ground set of slots: every billboard crossed with every window.

    Slot ids are dense ``0..n-1``, ordered by billboard input order and then
    by window start, so two builds from the same inputs are identical.
    """

    slots: tuple[Slot, ...]
    billboards: tuple[BillboardRecord, ...]
    horizon: tuple[int, int]
    delta: int
    _by_billboard_id: dict[str, BillboardRecord] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_by_billboard_id", {b.billboard_id: b for b in self.billboards}
        )

    def __len__(self) -> int:
        return len(self.slots)

    def billboard_of(self, slot: Slot) -> BillboardRecord:
        return self._by_billboard_id[slot.billboard_id]

    def slot_location(self, slot_id: int) -> str:
        return self.billboard_of(self.slots[slot_id]).loc


class ExposureMatrix:
    """Sparse slot-by-user matrix of influence probabilities in (0, 1].

    Stored slot-major (CSR style): row ``s`` holds the users exposed to slot
    ``s`` and their probabilities, sorted by user index. Absent entries mean
    probability zero. The user index covers every distinct user_id in the
    trajectory database, sorted, so it is reproducible across loads.
    """

    def __init__(
        self,
        n_slots: int,
        users: Sequence[str],
        indptr: np.ndarray,
        user_index: np.ndarray,
        prob: np.ndarray,
    ) -> None:
        if len(indptr) != n_slots + 1:
            raise ValueError("indptr length must be n_slots + 1")
        if len(user_index) != len(prob):
            raise ValueError("user_index and prob must have the same length")
        if len(prob) and not (np.all(prob > 0.0) and np.all(prob <= 1.0)):
            raise ValueError("all stored probabilities must lie in (0, 1]")
        self.n_slots = n_slots
        self.users = tuple(users)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.user_index = np.asarray(user_index, dtype=np.int64)
        self.prob = np.asarray(prob, dtype=np.float64)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def nnz(self) -> int:
        return len(self.prob)

    def slot_entries(self, slot_id: int) -> tuple[np.ndarray, np.ndarray]:
        """(user indices, probabilities) for one slot, user-sorted views."""
        if not 0 <= slot_id < self.n_slots:
            raise ValueError(f"unknown slot_id {slot_id}")
        lo, hi = self.indptr[slot_id], self.indptr[slot_id + 1]
        return self.user_index[lo:hi], self.prob[lo:hi]

    def entries(self) -> Iterator[tuple[int, int, float]]:
        """Yield (slot_id, user_index, prob) in canonical storage order."""
        for s in range(self.n_slots):
            uix, p = self.slot_entries(s)
            for u, q in zip(uix.tolist(), p.tolist()):
                yield s, u, q

    @classmethod
    def from_entries(
        cls,
        n_slots: int,
        users: Sequence[str],
        entries: Sequence[tuple[int, int, float]],
    ) -> "ExposureMatrix":
        """Build from (slot_id, user_index, prob) triples in any order."""
        n_users = len(users)
        for s, u, p in entries:
            if not 0 <= s < n_slots:
                raise ValueError(f"slot_id {s} out of range")
            if not 0 <= u < n_users:
                raise ValueError(f"user index {u} out of range")
        order = sorted(range(len(entries)), key=lambda i: (entries[i][0], entries[i][1]))
        slot_ids = np.array([entries[i][0] for i in order], dtype=np.int64)
        uix = np.array([entries[i][1] for i in order], dtype=np.int64)
        probs = np.array([entries[i][2] for i in order], dtype=np.float64)
        indptr = np.zeros(n_slots + 1, dtype=np.int64)
        np.add.at(indptr, slot_ids + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(n_slots, users, indptr, uix, probs)


class PanelRatio:
    """Probability model: a billboard's panel size over the largest panel.

    Every user exposed to a slot of the same billboard gets the same value.
    """

    def __init__(self, billboards: Sequence[BillboardRecord]) -> None:
        if not billboards:
            raise ValueError("PanelRatio needs at least one billboard")
        self._max_panel = max(b.panel_size for b in billboards)

    def prob(self, slot: Slot, billboard: BillboardRecord, user_id: str) -> float:
        return billboard.panel_size / self._max_panel


class Explicit:
    """Probability model backed by side-loaded (slot_id, user_id) -> prob."""

    def __init__(self, table: dict[tuple[int, str], float]) -> None:
        for key, p in table.items():
            if not 0.0 < p <= 1.0:
                raise ValueError(
                    f"explicit probability for {key} outside (0, 1]: {p}"
                )
        self._table = dict(table)

    def prob(self, slot: Slot, billboard: BillboardRecord, user_id: str) -> float:
        # Absent pairs mean probability zero: no matrix entry is stored.
        return self._table.get((slot.slot_id, user_id), 0.0)


def _read_csv_rows(path: str | Path, header: list[str]) -> Iterator[tuple[int, list[str]]]:
    """Yield (line_number, row) after validating the header line."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header {header}") from None
        if [c.strip() for c in first] != header:
            raise ValueError(f"{path}: expected header {header}, got {first}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            yield lineno, [c.strip() for c in row]


def _parse_int(value: str, path: Path, lineno: int, name: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: {name} must be an integer, got {value!r}") from None


def _parse_float(value: str, path: Path, lineno: int, name: str) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: {name} must be a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ValueError(f"{path}:{lineno}: {name} must be finite, got {value!r}")
    return out


def load_trajectories(path: str | Path) -> list[TrajectoryTuple]:
    """Parse trajectories.csv, rejecting malformed rows with their line number."""
    path = Path(path)
    out: list[TrajectoryTuple] = []
    for lineno, row in _read_csv_rows(path, ["user_id", "loc", "t_start", "t_end"]):
        t0 = _parse_int(row[2], path, lineno, "t_start")
        t1 = _parse_int(row[3], path, lineno, "t_end")
        try:
            out.append(TrajectoryTuple(row[0], row[1], t0, t1))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def load_billboards(path: str | Path) -> list[BillboardRecord]:
    """Parse billboards.csv, enforcing unique ids and positive panel sizes."""
    path = Path(path)
    out: list[BillboardRecord] = []
    seen: set[str] = set()
    for lineno, row in _read_csv_rows(path, ["billboard_id", "loc", "cost", "panel_size"]):
        cost = _parse_float(row[2], path, lineno, "cost")
        panel = _parse_float(row[3], path, lineno, "panel_size")
        try:
            rec = BillboardRecord(row[0], row[1], cost, panel)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if rec.billboard_id in seen:
            raise ValueError(f"{path}:{lineno}: duplicate billboard_id {rec.billboard_id!r}")
        seen.add(rec.billboard_id)
        out.append(rec)
    return out


def load_probabilities(path: str | Path) -> dict[tuple[int, str], float]:
    """Parse probs.csv for the explicit model; every prob must lie in (0, 1]."""
    path = Path(path)
    table: dict[tuple[int, str], float] = {}
    for lineno, row in _read_csv_rows(path, ["slot_id", "user_id", "prob"]):
        slot_id = _parse_int(row[0], path, lineno, "slot_id")
        p = _parse_float(row[2], path, lineno, "prob")
        if not 0.0 < p <= 1.0:
            raise ValueError(f"{path}:{lineno}: prob must lie in (0, 1], got {p}")
        table[(slot_id, row[1])] = p
    return table


def build_catalog(
    billboards: Sequence[BillboardRecord],
    horizon: tuple[int, int],
    delta: int,
) -> SlotCatalog:
    """Cross billboards with fixed-length windows covering the horizon.

    Produces exactly ``len(billboards) * (T2 - T1) / delta`` slots with dense
    deterministic ids (billboard input order, then window start order).
    """
    t1, t2 = horizon
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if t2 <= t1:
        raise ValueError(f"horizon must be non-empty, got [{t1}, {t2})")
    if (t2 - t1) % delta != 0:
        raise ValueError(
            f"horizon length {t2 - t1} is not divisible by delta {delta}"
        )
    slots: list[Slot] = []
    for rec in billboards:
        for start in range(t1, t2, delta):
            slots.append(Slot(len(slots), rec.billboard_id, start, start + delta))
    return SlotCatalog(tuple(slots), tuple(billboards), (t1, t2), delta)


def build_exposure(
    catalog: SlotCatalog,
    trajectories: Sequence[TrajectoryTuple],
    model: PanelRatio | Explicit,
) -> ExposureMatrix:
    """Match trajectory tuples against slots and attach model probabilities.

    An entry (s, u) exists iff user u has a tuple at the slot's billboard
    location whose interval overlaps the slot window with positive length.
    Repeat qualifying tuples for the same pair store one probability, and a
    model probability of zero stores nothing.
    """
    users = sorted({t.user_id for t in trajectories})
    user_ix = {u: i for i, u in enumerate(users)}

    by_loc: dict[str, list[TrajectoryTuple]] = {}
    for t in trajectories:
        by_loc.setdefault(t.loc, []).append(t)

    entries: list[tuple[int, int, float]] = []
    for slot in catalog.slots:
        billboard = catalog.billboard_of(slot)
        exposed: set[str] = set()
        for t in by_loc.get(billboard.loc, ()):
            # Half-open intervals: contact at a boundary is not an overlap.
            if max(t.t_start, slot.start) < min(t.t_end, slot.end):
                exposed.add(t.user_id)
        for user_id in exposed:
            p = model.prob(slot, billboard, user_id)
            if p == 0.0:
                continue
            if not 0.0 < p <= 1.0:
                raise ValueError(
                    f"model probability for slot {slot.slot_id}, user {user_id!r} "
                    f"outside (0, 1]: {p}"
                )
            entries.append((slot.slot_id, user_ix[user_id], p))
    return ExposureMatrix.from_entries(len(catalog), users, entries)
