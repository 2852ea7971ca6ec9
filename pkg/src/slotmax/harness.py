"""Batch experiment harness: end-to-end runs, sweeps, and the exact oracle.

A run executes ingest -> preprocess -> (prune for psg-* algorithms) ->
select and emits a machine-readable report. Reports serialize to canonical
JSON (sorted keys, 17-significant-digit floats, LF endings) so that two
runs with the same config and seed are byte-identical once timings are
suppressed with ``no_timing``.
"""

from __future__ import annotations

import csv
import itertools
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .catalog import (
    Explicit,
    ExposureMatrix,
    PanelRatio,
    build_catalog,
    build_exposure,
    load_billboards,
    load_probabilities,
    load_trajectories,
)
from .generator import SyntheticSpec, generate
from .influence import InfluenceEvaluator
from .pruning import preprocess, prune, tail_influences
from .selection import Selection, greedy, max_cov, psg_random, random_k, top_k

__all__ = [
    "ALGORITHMS",
    "SWEEP_ALGORITHMS",
    "RunConfig",
    "RunReport",
    "canonical_json",
    "run",
    "write_report",
    "sweep",
    "write_sweep_csv",
    "brute_force_opt",
]

ALGORITHMS = (
    "psg-greedy",
    "greedy",
    "lazy-greedy",
    "top-k",
    "max-cov",
    "random",
    "psg-random",
)

SWEEP_ALGORITHMS = (
    "psg-greedy",
    "greedy",
    "top-k",
    "max-cov",
    "random",
    "psg-random",
)

INFLUENCE_TOL = 1e-9


@dataclass
class RunConfig:
    """Everything a run needs; exactly one input source must be present."""

    horizon: tuple[int, int]
    delta: int
    k: int
    algo: str
    trajectories: Path | None = None
    billboards: Path | None = None
    gen_spec: SyntheticSpec | None = None
    r: float = 8.0
    c: float = 8.0
    seed: int = 42
    prob_model: str = "panel-ratio"
    probs_path: Path | None = None
    out: Path | None = None
    no_timing: bool = False

    def validate(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}, expected one of {ALGORITHMS}")
        has_paths = self.trajectories is not None and self.billboards is not None
        if has_paths == (self.gen_spec is not None):
            raise ValueError(
                "exactly one input source required: either both CSV paths or a generator spec"
            )
        if self.prob_model not in ("panel-ratio", "explicit"):
            raise ValueError(f"unknown probability model {self.prob_model!r}")
        if self.prob_model == "explicit" and self.probs_path is None:
            raise ValueError("explicit probability model requires a probs CSV path")

    def echo(self) -> dict:
        return {
            "algo": self.algo,
            "k": self.k,
            "seed": self.seed,
            "r": self.r,
            "c": self.c,
            "t_start": self.horizon[0],
            "t_end": self.horizon[1],
            "slot_seconds": self.delta,
            "prob_model": self.prob_model,
            "trajectories": str(self.trajectories) if self.trajectories else None,
            "billboards": str(self.billboards) if self.billboards else None,
            "probs": str(self.probs_path) if self.probs_path else None,
            "generated": self.gen_spec is not None,
            "no_timing": self.no_timing,
        }


@dataclass
class RunReport:
    """Counts, reductions, the selection, and per-phase wall times."""

    config: dict
    n_slots: int
    n_preprocessed: int
    n_pruned: int | None
    chosen: tuple[int, ...]
    influence: float
    evaluations: int
    preprocess_s: float
    prune_s: float
    select_s: float
    pruned_size_reference: float | None = None
    _percentages: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pct = {"preprocess_pct": _reduction_pct(self.n_slots, self.n_preprocessed)}
        if self.n_pruned is None:
            pct["prune_pct"] = None
            pct["combined_pct"] = None
        else:
            pct["prune_pct"] = _reduction_pct(self.n_preprocessed, self.n_pruned)
            pct["combined_pct"] = _reduction_pct(self.n_slots, self.n_pruned)
        self._percentages = pct

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "counts": {
                "slots": self.n_slots,
                "preprocessed": self.n_preprocessed,
                "pruned": self.n_pruned,
            },
            "reduction": self._percentages,
            "pruned_size_reference": self.pruned_size_reference,
            "chosen": list(self.chosen),
            "influence": self.influence,
            "evaluations": self.evaluations,
            "timings": {
                "preprocess_s": self.preprocess_s,
                "prune_s": self.prune_s,
                "select_s": self.select_s,
            },
        }

    def csv_row(self) -> tuple[list[str], list[str]]:
        header = [
            "algorithm",
            "k",
            "seed",
            "slots",
            "preprocessed",
            "pruned",
            "influence",
            "evaluations",
            "preprocess_s",
            "prune_s",
            "select_s",
            "chosen",
        ]
        row = [
            self.config["algo"],
            str(self.config["k"]),
            str(self.config["seed"]),
            str(self.n_slots),
            str(self.n_preprocessed),
            "" if self.n_pruned is None else str(self.n_pruned),
            format(self.influence, ".17g"),
            str(self.evaluations),
            format(self.preprocess_s, ".17g"),
            format(self.prune_s, ".17g"),
            format(self.select_s, ".17g"),
            " ".join(str(b) for b in self.chosen),
        ]
        return header, row


def _reduction_pct(before: int, after: int) -> float:
    if before == 0:
        return 0.0
    return (1.0 - after / before) * 100.0


def canonical_json(obj) -> str:
    """Serialize to canonical JSON: sorted keys, floats at 17 significant
    digits, two-space indent, LF endings, trailing newline."""
    parts: list[str] = []
    _write_canonical(obj, parts, 0)
    parts.append("\n")
    return "".join(parts)


def _write_canonical(obj, parts: list[str], depth: int) -> None:
    import json as _json

    pad = "  " * depth
    inner = "  " * (depth + 1)
    if isinstance(obj, (np.integer,)):
        obj = int(obj)
    elif isinstance(obj, (np.floating,)):
        obj = float(obj)
    if obj is None:
        parts.append("null")
    elif isinstance(obj, bool):
        parts.append("true" if obj else "false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite float {obj}")
        parts.append(format(obj, ".17g"))
    elif isinstance(obj, str):
        parts.append(_json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        keys = sorted(obj)
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            parts.append(f"{inner}{_json.dumps(key)}: ")
            _write_canonical(obj[key], parts, depth + 1)
            parts.append(",\n" if i < len(keys) - 1 else "\n")
        parts.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            parts.append("[]")
            return
        parts.append("[\n")
        for i, item in enumerate(obj):
            parts.append(inner)
            _write_canonical(item, parts, depth + 1)
            parts.append(",\n" if i < len(obj) - 1 else "\n")
        parts.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} canonically")


@dataclass
class _Instance:
    trajectories: list
    catalog: object
    exposure: ExposureMatrix


def _ingest(config: RunConfig) -> _Instance:
    if config.gen_spec is not None:
        with tempfile.TemporaryDirectory(prefix="slotmax-gen-") as tmp:
            traj_path, bb_path = generate(config.gen_spec, tmp)
            trajectories = load_trajectories(traj_path)
            billboards = load_billboards(bb_path)
    else:
        trajectories = load_trajectories(config.trajectories)
        billboards = load_billboards(config.billboards)
    catalog = build_catalog(billboards, config.horizon, config.delta)
    if config.prob_model == "explicit":
        model = Explicit(load_probabilities(config.probs_path))
    else:
        model = PanelRatio(billboards)
    exposure = build_exposure(catalog, trajectories, model)
    return _Instance(trajectories, catalog, exposure)


def _pruned_size_reference(n0: int, k: int, r: float, c: float) -> float:
    """Reference size of the reduced set from the sampling analysis; the
    per-iteration sampling fraction stands in for the sampling probability.
    Reported for comparison only, never enforced."""
    if n0 <= 1:
        return float(n0)
    p = min(1.0, r * math.log(n0) / n0)
    return c * p / math.log(math.sqrt(c)) * k * math.log(n0) ** 2


def run(config: RunConfig) -> RunReport:
    """Execute one configured selection end to end."""
    config.validate()
    inst = _ingest(config)
    exposure = inst.exposure
    evaluator = InfluenceEvaluator(exposure)

    t0 = time.perf_counter()
    singles = evaluator.singleton_influences()
    bs_prime = preprocess(inst.catalog, singles)
    preprocess_s = time.perf_counter() - t0

    rng = np.random.default_rng(config.seed)
    bs_second: np.ndarray | None = None
    prune_s = 0.0
    reference = None
    if config.algo in ("psg-greedy", "psg-random"):
        t0 = time.perf_counter()
        tails = tail_influences(exposure, bs_prime)
        bs_second, _ = prune(exposure, bs_prime, config.r, config.c, rng, tails=tails)
        prune_s = time.perf_counter() - t0
        reference = _pruned_size_reference(len(bs_prime), config.k, config.r, config.c)

    t0 = time.perf_counter()
    if config.algo == "psg-greedy":
        sel = greedy(exposure, bs_second, config.k)
    elif config.algo == "greedy":
        sel = greedy(exposure, bs_prime, config.k)
    elif config.algo == "lazy-greedy":
        sel = greedy(exposure, bs_prime, config.k, lazy=True)
    elif config.algo == "top-k":
        sel = top_k(exposure, bs_prime, config.k)
    elif config.algo == "max-cov":
        sel = max_cov(exposure, inst.catalog, bs_prime, config.k, inst.trajectories)
    elif config.algo == "random":
        sel = random_k(exposure, bs_prime, config.k, rng)
    elif config.algo == "psg-random":
        sel = random_k(exposure, bs_second, config.k, rng)
    else:  # pragma: no cover - validate() rejects unknown algorithms
        raise ValueError(f"unknown algorithm {config.algo!r}")
    select_s = time.perf_counter() - t0

    check = evaluator.influence(sel.chosen)
    if abs(check - sel.influence) > INFLUENCE_TOL:
        raise RuntimeError(
            f"reported influence {sel.influence} disagrees with a from-scratch "
            f"evaluation {check}"
        )

    if config.no_timing:
        preprocess_s = prune_s = select_s = 0.0
    return RunReport(
        config=config.echo(),
        n_slots=len(inst.catalog),
        n_preprocessed=len(bs_prime),
        n_pruned=None if bs_second is None else len(bs_second),
        chosen=sel.chosen,
        influence=sel.influence,
        evaluations=sel.evaluations,
        preprocess_s=preprocess_s,
        prune_s=prune_s,
        select_s=select_s,
        pruned_size_reference=reference,
    )


def write_report(report: RunReport, out: Path) -> tuple[Path, Path]:
    """Write canonical JSON plus a single-row CSV next to it."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write(canonical_json(report.to_dict()))
    csv_path = out.with_suffix(".csv")
    header, row = report.csv_row()
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerow(row)
    return out, csv_path


def sweep(
    config: RunConfig,
    k_values: Sequence[int],
    algos: Iterable[str] = SWEEP_ALGORITHMS,
) -> list[dict]:
    """Influence-versus-k table across algorithms on one instance.

    The instance is ingested once. Order-preserving selectors (the greedy
    family, top-k, max-cov) are run once at the largest k and their smaller
    budgets are read off as prefixes, so those rows share one measured time.
    Randomized selectors are re-drawn per k with a generator derived from
    (seed, k).
    """
    k_values = list(k_values)
    if not k_values:
        raise ValueError("k_values must be non-empty")
    if any(k < 1 for k in k_values):
        raise ValueError("every k must be at least 1")
    if k_values != sorted(k_values):
        raise ValueError("k_values must be ascending")
    algos = list(algos)
    for algo in algos:
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algo!r}")
    k_max = k_values[-1]

    inst = _ingest(config)
    exposure = inst.exposure
    evaluator = InfluenceEvaluator(exposure)
    bs_prime = preprocess(inst.catalog, evaluator.singleton_influences())

    bs_second: np.ndarray | None = None
    prune_s = 0.0
    if any(a.startswith("psg-") for a in algos):
        t0 = time.perf_counter()
        tails = tail_influences(exposure, bs_prime)
        bs_second, _ = prune(
            exposure, bs_prime, config.r, config.c, np.random.default_rng(config.seed),
            tails=tails,
        )
        prune_s = time.perf_counter() - t0

    rows: list[dict] = []

    def add_prefix_rows(algo: str, sel: Selection, elapsed: float) -> None:
        for k in k_values:
            prefix = sel.chosen[:k]
            rows.append(
                {
                    "algorithm": algo,
                    "k": k,
                    "influence": evaluator.influence(prefix),
                    "time_s": elapsed,
                }
            )

    for algo in algos:
        if algo in ("greedy", "lazy-greedy", "psg-greedy"):
            ground = bs_second if algo == "psg-greedy" else bs_prime
            t0 = time.perf_counter()
            sel = greedy(exposure, ground, k_max, lazy=algo == "lazy-greedy")
            elapsed = time.perf_counter() - t0
            if algo == "psg-greedy":
                elapsed += prune_s
            add_prefix_rows(algo, sel, elapsed)
        elif algo == "top-k":
            t0 = time.perf_counter()
            sel = top_k(exposure, bs_prime, k_max)
            add_prefix_rows(algo, sel, time.perf_counter() - t0)
        elif algo == "max-cov":
            t0 = time.perf_counter()
            sel = max_cov(exposure, inst.catalog, bs_prime, k_max, inst.trajectories)
            add_prefix_rows(algo, sel, time.perf_counter() - t0)
        elif algo == "random":
            for k in k_values:
                t0 = time.perf_counter()
                sel = random_k(exposure, bs_prime, k, np.random.default_rng([config.seed, k]))
                rows.append(
                    {
                        "algorithm": algo,
                        "k": k,
                        "influence": sel.influence,
                        "time_s": time.perf_counter() - t0,
                    }
                )
        elif algo == "psg-random":
            for k in k_values:
                t0 = time.perf_counter()
                sel = random_k(exposure, bs_second, k, np.random.default_rng([config.seed, k]))
                rows.append(
                    {
                        "algorithm": algo,
                        "k": k,
                        "influence": sel.influence,
                        "time_s": prune_s + (time.perf_counter() - t0),
                    }
                )

    if config.no_timing:
        for row in rows:
            row["time_s"] = 0.0
    return rows


def write_sweep_csv(rows: Sequence[dict], out: Path) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["algorithm", "k", "influence", "time_s"])
        for row in rows:
            writer.writerow(
                [
                    row["algorithm"],
                    str(row["k"]),
                    format(row["influence"], ".17g"),
                    format(row["time_s"], ".17g"),
                ]
            )
    return out


MAX_ORACLE_CANDIDATES = 10**6


def brute_force_opt(
    exposure: ExposureMatrix, ground: Iterable[int], k: int
) -> tuple[tuple[int, ...], float]:
    """Exhaustive cardinality-k maximizer; lexicographically smallest on ties.

    Guarded: refuses instances with more than a million candidate subsets.
    """
    ground_list = sorted(set(int(b) for b in ground))
    if not 1 <= k <= len(ground_list):
        raise ValueError(f"k must be in [1, {len(ground_list)}], got {k}")
    n_candidates = math.comb(len(ground_list), k)
    if n_candidates > MAX_ORACLE_CANDIDATES:
        raise ValueError(
            f"instance too large for exhaustive search: C({len(ground_list)}, {k}) "
            f"= {n_candidates} > {MAX_ORACLE_CANDIDATES}"
        )
    evaluator = InfluenceEvaluator(exposure)
    best: tuple[int, ...] | None = None
    best_influence = -np.inf
    for combo in itertools.combinations(ground_list, k):
        value = evaluator.influence(combo)
        if value > best_influence:
            best, best_influence = combo, value
    assert best is not None
    return best, float(best_influence)
