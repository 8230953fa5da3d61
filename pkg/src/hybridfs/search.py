"""Pieces shared by the swarm and GA wrappers: ordering, traces, parallel evaluation."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

Objective = Callable[[np.ndarray], float]

THREADS_ENV = "HYBRIDFS_THREADS"

TRACE_COLUMNS = (
    "iteration",
    "gbest_fitness",
    "best_ever_fitness",
    "mean_popcount",
    "stagnated",
    "regenerated",
)


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def better(fit_a: float, bits_a: int, fit_b: float, bits_b: int) -> bool:
    """Strictly higher fitness wins; at equal fitness fewer bits wins."""
    return fit_a > fit_b or (fit_a == fit_b and bits_a < bits_b)


def evaluate_all(objective: Objective, masks: Sequence[np.ndarray], threads: int = 1) -> np.ndarray:
    """Evaluate masks in order; results do not depend on ``threads``."""
    if threads <= 1 or len(masks) <= 1:
        return np.array([objective(m) for m in masks], dtype=np.float64)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.fromiter(pool.map(objective, masks), dtype=np.float64, count=len(masks))


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    gbest_fitness: float
    best_ever_fitness: float
    mean_popcount: float
    stagnated: int
    regenerated: bool


@dataclass
class SearchResult:
    best_position: np.ndarray
    best_fitness: float
    trace: list[TraceRow] = field(default_factory=list)
    evaluations: int = 0
    final_population: list[np.ndarray] | None = None

    @property
    def n_regenerations(self) -> int:
        return sum(r.regenerated for r in self.trace)


def write_trace(rows: Iterable[TraceRow], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in rows:
            w.writerow([
                r.iteration,
                f"{r.gbest_fitness:.10g}",
                f"{r.best_ever_fitness:.10g}",
                f"{r.mean_popcount:.6g}",
                r.stagnated,
                int(r.regenerated),
            ])


def read_trace(path: str | Path) -> list[TraceRow]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [
            TraceRow(
                int(r["iteration"]),
                float(r["gbest_fitness"]),
                float(r["best_ever_fitness"]),
                float(r["mean_popcount"]),
                int(r["stagnated"]),
                bool(int(r["regenerated"])),
            )
            for r in csv.DictReader(fh)
        ]
