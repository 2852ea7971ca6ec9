"""Selection algorithms: incremental greedy (eager or lazy) and baselines.

Every selector returns a :class:`Selection` whose ``chosen`` field preserves
selection order, so the prefix of length k' is the selector's answer for a
smaller budget. Reported influence is always the full influence of the
chosen set, never a sum of per-slot values. Ties are broken by lower slot
id throughout.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .catalog import ExposureMatrix, SlotCatalog, TrajectoryTuple
from .influence import InfluenceEvaluator
from .pruning import prune

__all__ = [
    "Selection",
    "greedy",
    "top_k",
    "max_cov",
    "random_k",
    "psg_random",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Selection:
    """Chosen slot ids in selection order, their joint influence, and the
    number of marginal-gain evaluations spent finding them."""

    chosen: tuple[int, ...]
    influence: float
    evaluations: int


def _clean_ground(ground: Iterable[int], k: int) -> tuple[np.ndarray, int]:
    ground_arr = np.unique(np.asarray(list(ground), dtype=np.int64))
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k > len(ground_arr):
        logger.warning(
            "k=%d exceeds ground set size %d; returning every slot",
            k,
            len(ground_arr),
        )
        k = len(ground_arr)
    return ground_arr, k


def greedy(
    exposure: ExposureMatrix,
    ground: Iterable[int],
    k: int,
    *,
    lazy: bool = False,
) -> Selection:
    """Pick k slots by repeatedly committing the best marginal gain.

    The lazy variant keeps stale gains in a max-heap and re-evaluates only
    entries that surface at the top; submodularity makes the first
    up-to-date entry the true argmax, so eager and lazy selections are
    identical while lazy never evaluates more gains than eager.
    """
    ground_arr, k = _clean_ground(ground, k)
    evaluator = InfluenceEvaluator(exposure)
    if lazy:
        return _greedy_lazy(evaluator, ground_arr, k)
    return _greedy_eager(evaluator, ground_arr, k)


def _greedy_eager(
    evaluator: InfluenceEvaluator, ground: np.ndarray, k: int
) -> Selection:
    candidates = ground.tolist()
    chosen: list[int] = []
    evaluations = 0
    for _ in range(k):
        best = None
        best_gain = -np.inf
        for b in candidates:
            gain = evaluator.marginal_gain(b)
            evaluations += 1
            if gain > best_gain:
                best, best_gain = b, gain
        assert best is not None
        evaluator.commit(best)
        chosen.append(best)
        candidates.remove(best)
    return Selection(tuple(chosen), evaluator.cached_influence, evaluations)


def _greedy_lazy(
    evaluator: InfluenceEvaluator, ground: np.ndarray, k: int
) -> Selection:
    # Heap entries are (-gain, slot_id, commits_when_evaluated); a stale
    # gain is an upper bound, so the first up-to-date pop is the argmax.
    evaluations = 0
    heap: list[tuple[float, int, int]] = []
    for b in ground.tolist():
        gain = evaluator.marginal_gain(b)
        evaluations += 1
        heap.append((-gain, b, 0))
    heapq.heapify(heap)

    chosen: list[int] = []
    for _ in range(k):
        while True:
            neg_gain, b, when = heapq.heappop(heap)
            if when == len(chosen):
                break
            gain = evaluator.marginal_gain(b)
            evaluations += 1
            heapq.heappush(heap, (-gain, b, len(chosen)))
        evaluator.commit(b)
        chosen.append(b)
    return Selection(tuple(chosen), evaluator.cached_influence, evaluations)


def top_k(exposure: ExposureMatrix, ground: Iterable[int], k: int) -> Selection:
    """Take the k slots with the highest singleton influence.

    The reported influence is the joint influence of the union, which is
    generally below the sum of singletons whenever audiences overlap.
    """
    ground_arr, k = _clean_ground(ground, k)
    evaluator = InfluenceEvaluator(exposure)
    singles = evaluator.singleton_influences()[ground_arr]
    order = np.lexsort((ground_arr, -singles))
    chosen = tuple(int(b) for b in ground_arr[order[:k]])
    return Selection(chosen, evaluator.influence(chosen), len(ground_arr))


def max_cov(
    exposure: ExposureMatrix,
    catalog: SlotCatalog,
    ground: Iterable[int],
    k: int,
    trajectories: Sequence[TrajectoryTuple],
) -> Selection:
    """Take the k slots covering the most trajectory tuples.

    A slot covers a tuple when the tuple's location matches the slot's
    billboard and the intervals overlap; tuples count with multiplicity,
    not per distinct user.
    """
    ground_arr, k = _clean_ground(ground, k)
    by_loc: dict[str, list[TrajectoryTuple]] = {}
    for t in trajectories:
        by_loc.setdefault(t.loc, []).append(t)
    coverage = np.zeros(len(ground_arr), dtype=np.int64)
    for i, b in enumerate(ground_arr.tolist()):
        slot = catalog.slots[b]
        loc = catalog.billboard_of(slot).loc
        coverage[i] = sum(
            1
            for t in by_loc.get(loc, ())
            if max(t.t_start, slot.start) < min(t.t_end, slot.end)
        )
    order = np.lexsort((ground_arr, -coverage))
    chosen = tuple(int(b) for b in ground_arr[order[:k]])
    evaluator = InfluenceEvaluator(exposure)
    return Selection(chosen, evaluator.influence(chosen), 0)


def random_k(
    exposure: ExposureMatrix,
    ground: Iterable[int],
    k: int,
    seed: int | np.random.Generator = 0,
) -> Selection:
    """Sample k slots uniformly without replacement (seeded PCG64)."""
    ground_arr, k = _clean_ground(ground, k)
    rng = np.random.default_rng(seed)
    chosen = tuple(int(b) for b in rng.choice(ground_arr, size=k, replace=False))
    evaluator = InfluenceEvaluator(exposure)
    return Selection(chosen, evaluator.influence(chosen), 0)


def psg_random(
    exposure: ExposureMatrix,
    ground: Iterable[int],
    k: int,
    r: float = 8.0,
    c: float = 8.0,
    seed: int | np.random.Generator = 0,
    *,
    tails: Mapping[int, float] | None = None,
) -> Selection:
    """Prune the ground set, then sample k of the survivors uniformly.

    One generator drives both stages, so a single seed fixes the output.
    """
    rng = np.random.default_rng(seed)
    reduced, _ = prune(exposure, ground, r, c, rng, tails=tails)
    if k > len(reduced):
        logger.warning(
            "k=%d exceeds pruned set size %d; returning every pruned slot",
            k,
            len(reduced),
        )
    return random_k(exposure, reduced, k, rng)
