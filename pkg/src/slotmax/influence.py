"""Closed-form influence evaluation over the exposure matrix.

The influence of a slot set S is the expected number of influenced users,

    I(S) = sum over users u of [1 - prod over b in S of (1 - Pr(b, u))],

which is non-negative, monotone, and submodular. The evaluator keeps one
residual value per user, ``r_u = prod over committed b of (1 - Pr(b, u))``,
so a marginal gain against the committed set touches only the users exposed
to the candidate slot.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .catalog import ExposureMatrix

__all__ = ["InfluenceEvaluator"]


class InfluenceEvaluator:
    """Stateful evaluator supporting both from-scratch and incremental queries.

    ``influence`` and ``marginal_gain`` are read-only and safe for concurrent
    callers; ``commit`` mutates the evaluator and needs exclusive access.
    """

    def __init__(self, exposure: ExposureMatrix) -> None:
        self.exposure = exposure
        self._residual = np.ones(exposure.n_users, dtype=np.float64)
        self._current: set[int] = set()
        self._cached_influence = 0.0

    @property
    def current_set(self) -> frozenset[int]:
        return frozenset(self._current)

    @property
    def cached_influence(self) -> float:
        return self._cached_influence

    @property
    def residual(self) -> np.ndarray:
        """Per-user survival probability against the committed set (read-only)."""
        view = self._residual.view()
        view.flags.writeable = False
        return view

    def reset(self) -> None:
        self._residual.fill(1.0)
        self._current.clear()
        self._cached_influence = 0.0

    def _check_slot(self, slot_id: int) -> int:
        if not 0 <= slot_id < self.exposure.n_slots:
            raise ValueError(f"unknown slot_id {slot_id}")
        return slot_id

    def _residual_for(self, slots: Iterable[int]) -> np.ndarray:
        residual = np.ones(self.exposure.n_users, dtype=np.float64)
        for b in slots:
            uix, p = self.exposure.slot_entries(self._check_slot(b))
            residual[uix] *= 1.0 - p
        return residual

    def influence(self, slots: Iterable[int]) -> float:
        """From-scratch influence of an arbitrary slot set."""
        residual = self._residual_for(set(slots))
        return float(np.sum(1.0 - residual))

    def marginal_gain(self, slot_id: int, base: Iterable[int] | None = None) -> float:
        """Influence gained by adding ``slot_id`` to ``base``.

        With ``base=None`` the committed set is the base and the evaluation
        costs one pass over the users exposed to ``slot_id``. An explicit
        base is evaluated from scratch.
        """
        self._check_slot(slot_id)
        if base is None:
            if slot_id in self._current:
                raise ValueError(f"slot {slot_id} is already committed")
            residual = self._residual
        else:
            base = set(base)
            if slot_id in base:
                raise ValueError(f"slot {slot_id} is already in the base set")
            residual = self._residual_for(base)
        uix, p = self.exposure.slot_entries(slot_id)
        return float(np.dot(p, residual[uix]))

    def commit(self, slot_id: int) -> None:
        """Add a slot to the committed set, updating residuals incrementally."""
        self._check_slot(slot_id)
        if slot_id in self._current:
            raise ValueError(f"slot {slot_id} is already committed")
        uix, p = self.exposure.slot_entries(slot_id)
        self._cached_influence += float(np.dot(p, self._residual[uix]))
        self._residual[uix] *= 1.0 - p
        self._current.add(slot_id)

    def singleton_influences(self) -> np.ndarray:
        """I({b}) for every slot, computed in one pass over the matrix."""
        cs = np.concatenate(([0.0], np.cumsum(self.exposure.prob)))
        return cs[self.exposure.indptr[1:]] - cs[self.exposure.indptr[:-1]]
