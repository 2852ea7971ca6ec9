"""Ground-set reduction: preprocessing plus submodularity-graph pruning.

Preprocessing drops slots whose singleton influence is zero; submodularity
guarantees their marginal gain against any set is also zero, so greedy
output is unchanged. Pruning then repeatedly samples a small batch of slots
into a kept pool and discards the slots that look most redundant relative
to the batch, scored by the divergence

    div(v | U) = min over u in U of [I(v | {u}) - I(u | ground \\ {u})].

Edge weights are produced on demand, one sampled source at a time, so the
full quadratic adjacency is never materialized; an eager mode precomputes
every source row for desk-scale cross-checking and yields identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .catalog import ExposureMatrix, SlotCatalog
from .influence import InfluenceEvaluator

__all__ = [
    "PruneState",
    "preprocess",
    "tail_influences",
    "edge_weight",
    "divergence",
    "edge_weight_matrix",
    "prune",
]


def preprocess(catalog: SlotCatalog, singleton: np.ndarray) -> np.ndarray:
    """Slot ids with positive singleton influence, ascending."""
    singleton = np.asarray(singleton, dtype=np.float64)
    if len(singleton) != len(catalog):
        raise ValueError(
            f"singleton influences cover {len(singleton)} slots, "
            f"catalog has {len(catalog)}"
        )
    return np.flatnonzero(singleton > 0.0).astype(np.int64)


def tail_influences(exposure: ExposureMatrix, ground: Iterable[int]) -> dict[int, float]:
    """I(b | ground \\ {b}) for every slot b in the ground set.

    Computed in two passes: accumulate each user's product of nonzero
    survival factors together with a count of exact-zero factors (entries
    with probability 1), then divide one factor back out per slot. Slots
    whose own factor is zero fall back to the zero count instead of a
    division, so probability-1 entries stay exact.
    """
    ground = np.unique(np.asarray(list(ground), dtype=np.int64))
    prod_nonzero = np.ones(exposure.n_users, dtype=np.float64)
    count_zero = np.zeros(exposure.n_users, dtype=np.int64)
    for b in ground.tolist():
        uix, p = exposure.slot_entries(b)
        one = p == 1.0
        prod_nonzero[uix[~one]] *= 1.0 - p[~one]
        count_zero[uix[one]] += 1

    tails: dict[int, float] = {}
    for b in ground.tolist():
        uix, p = exposure.slot_entries(b)
        one = p == 1.0
        r_excl = np.empty(len(p), dtype=np.float64)
        zeros = count_zero[uix]
        r_excl[one] = np.where(zeros[one] >= 2, 0.0, prod_nonzero[uix[one]])
        r_excl[~one] = np.where(
            zeros[~one] >= 1, 0.0, prod_nonzero[uix[~one]] / (1.0 - p[~one])
        )
        tails[b] = float(np.dot(p, r_excl))
    return tails


def edge_weight(
    evaluator: InfluenceEvaluator,
    b_i: int,
    b_j: int,
    tails: Mapping[int, float],
) -> float:
    """Directed redundancy score from b_i to b_j; may be negative."""
    if b_i == b_j:
        raise ValueError(f"edge weight needs distinct slots, got {b_i} twice")
    return evaluator.marginal_gain(b_j, {b_i}) - tails[b_i]


def divergence(
    evaluator: InfluenceEvaluator,
    v: int,
    sampled: Iterable[int],
    tails: Mapping[int, float],
) -> float:
    """Minimum edge weight from any sampled slot into v."""
    sampled = set(sampled)
    if not sampled:
        raise ValueError("divergence needs a non-empty sampled set")
    if v in sampled:
        raise ValueError(f"slot {v} is in the sampled set")
    return min(edge_weight(evaluator, u, v, tails) for u in sorted(sampled))


def _single_source_gains(exposure: ExposureMatrix, source: int) -> np.ndarray:
    """I(v | {source}) for every slot v in one vectorized pass."""
    residual = np.ones(exposure.n_users, dtype=np.float64)
    uix, p = exposure.slot_entries(source)
    residual[uix] = 1.0 - p
    weighted = exposure.prob * residual[exposure.user_index]
    cs = np.concatenate(([0.0], np.cumsum(weighted)))
    return cs[exposure.indptr[1:]] - cs[exposure.indptr[:-1]]


def edge_weight_matrix(
    exposure: ExposureMatrix,
    ground: Iterable[int],
    tails: Mapping[int, float],
) -> np.ndarray:
    """Dense weight matrix over the ground set; W[i, j] is the edge from
    ground[i] to ground[j], NaN on the diagonal. Desk-scale only."""
    ground = np.unique(np.asarray(list(ground), dtype=np.int64))
    tails_row = np.array([tails[b] for b in ground.tolist()], dtype=np.float64)
    rows = [_single_source_gains(exposure, b)[ground] for b in ground.tolist()]
    W = np.stack(rows) - tails_row[:, None]
    np.fill_diagonal(W, np.nan)
    return W


@dataclass
class PruneState:
    """Loop state left behind by :func:`prune` for inspection."""

    remaining: np.ndarray
    sampled_union: np.ndarray
    rng: np.random.Generator
    n0: int
    r: float
    c: float
    iterations: int


def prune(
    exposure: ExposureMatrix,
    ground: Iterable[int],
    r: float = 8.0,
    c: float = 8.0,
    seed: int | np.random.Generator = 0,
    *,
    tails: Mapping[int, float] | None = None,
    log_base: float = math.e,
    eager: bool = False,
) -> tuple[np.ndarray, PruneState]:
    """Shrink the ground set by iterative sampling and removal.

    While more than ``r * log(n0)`` slots remain (n0 is the initial size,
    natural log by default), a batch of ``ceil(r * log(n0))`` slots is
    sampled uniformly without replacement and set aside; of the slots still
    standing, the ``floor((1 - 1/sqrt(c)))`` fraction with the smallest
    divergence from the batch is dropped (ties broken by lower slot id,
    and at least one slot is dropped per iteration so the loop terminates).
    The result is the union of survivors and every sampled batch.

    Randomness comes from numpy's seeded PCG64 generator, so a fixed seed
    reproduces the same output everywhere. ``seed`` may also be an existing
    ``numpy.random.Generator`` to continue an outer stream.
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    if c <= 1:
        raise ValueError(f"c must be greater than 1, got {c}")
    rng = np.random.default_rng(seed)
    remaining = np.unique(np.asarray(list(ground), dtype=np.int64))
    n0 = len(remaining)
    if tails is None:
        tails = tail_influences(exposure, remaining)
    tails_arr = np.full(exposure.n_slots, np.nan, dtype=np.float64)
    for b, t in tails.items():
        tails_arr[b] = t

    state = PruneState(
        remaining=remaining,
        sampled_union=np.empty(0, dtype=np.int64),
        rng=rng,
        n0=n0,
        r=float(r),
        c=float(c),
        iterations=0,
    )
    if n0 == 0:
        return remaining, state

    threshold = r * (math.log(n0) / math.log(log_base)) if n0 > 1 else 0.0
    # Degenerate n0=1 gives a zero sample size; force progress.
    batch_size = max(1, math.ceil(threshold))
    gains_cache: dict[int, np.ndarray] = {}
    if eager:
        gains_cache = {b: _single_source_gains(exposure, b) for b in remaining.tolist()}

    sampled_batches: list[np.ndarray] = []
    removal_fraction = 1.0 - 1.0 / math.sqrt(c)
    while len(remaining) > threshold:
        size = min(batch_size, len(remaining))
        batch = np.sort(rng.choice(remaining, size=size, replace=False))
        sampled_batches.append(batch)
        remaining = np.setdiff1d(remaining, batch, assume_unique=True)
        state.iterations += 1
        if len(remaining) == 0:
            break
        div = np.full(len(remaining), np.inf, dtype=np.float64)
        for u in batch.tolist():
            gains = gains_cache[u] if eager else _single_source_gains(exposure, u)
            np.minimum(div, gains[remaining] - tails_arr[u], out=div)
        drop = int(removal_fraction * len(remaining))
        if drop == 0 and len(remaining) > threshold:
            drop = 1
        if drop > 0:
            order = np.lexsort((remaining, div))
            keep = np.sort(order[drop:])
            remaining = remaining[keep]

    sampled_union = (
        np.unique(np.concatenate(sampled_batches))
        if sampled_batches
        else np.empty(0, dtype=np.int64)
    )
    state.remaining = remaining
    state.sampled_union = sampled_union
    reduced = np.union1d(remaining, sampled_union)
    return reduced, state
