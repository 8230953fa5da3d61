"""Hybrid filter/wrapper experiments: scale, IG filter, wrapper search, report tables."""

from __future__ import annotations

import csv
import enum
import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import gasearch, swarm
from .classify import Evaluator, FitnessSpec, fitness
from .dataset import DataError, Dataset, apply_mask, lift_mask, load_csv, min_max_scale
from .gasearch import GaParams
from .igfilter import IgRanking, rank_and_filter
from .search import SearchResult, write_trace
from .swarm import SwarmParams, Variant

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised for an invalid experiment configuration."""


class NoSurvivingFeaturesError(DataError):
    """The IG filter kept no features at the configured threshold."""


class ExperimentError(RuntimeError):
    def __init__(self, dataset: str, method: str, seed: int, cause: Exception):
        super().__init__(f"{dataset} / {method} / seed {seed}: {cause}")
        self.cause = cause


class Method(str, enum.Enum):
    NONE = "none"
    IG = "ig"
    GA = "ga"
    BPSO = "bpso"
    IBPSO = "ibpso"
    IG_GA = "ig+ga"
    IG_BPSO = "ig+bpso"
    IG_IBPSO = "ig+ibpso"

    @classmethod
    def parse(cls, text: str) -> Method:
        key = text.strip().lower().replace("_", "+").replace(" ", "")
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown method {text!r}") from None

    @property
    def filtered(self) -> bool:
        return self.value.startswith("ig")

    @property
    def wrapper(self) -> str | None:
        tail = self.value.split("+")[-1]
        return tail if tail in ("ga", "bpso", "ibpso") else None

    @property
    def label(self) -> str:
        return " + ".join(part.upper() for part in self.value.split("+"))


# --------------------------------------------------------------------------
# synthetic data


class SyntheticData(NamedTuple):
    dataset: Dataset
    informative: np.ndarray


def generate_synthetic(
    n_samples: int,
    n_noise_features: int,
    n_informative: int,
    k_classes: int,
    separation: float,
    seed: int,
) -> SyntheticData:
    """Planted-feature test bed.

    Each informative feature splits [0, 1] into ``k_classes`` equal slots and
    draws every class uniformly from a centred sub-range of its own slot. The
    gap between neighbouring sub-ranges is ``separation / 2`` of a slot, so
    at ``separation=1`` the gap equals the sub-range width and a single
    feature sorts 1-NN perfectly. Noise features are i.i.d. Uniform(0, 1).
    """
    if n_samples < 2 or k_classes < 2 or n_samples < k_classes:
        raise ValueError("need n_samples >= k_classes >= 2")
    if n_noise_features < 0 or n_informative < 0 or n_noise_features + n_informative < 1:
        raise ValueError("need at least one feature and non-negative feature counts")
    if not 0.0 < separation <= 1.0:
        raise ValueError(f"separation must lie in (0, 1] (got {separation})")
    rng = np.random.default_rng(seed)
    n_features = n_noise_features + n_informative
    labels = rng.permutation(np.arange(n_samples) % k_classes)
    informative = np.sort(rng.choice(n_features, size=n_informative, replace=False))
    X = rng.random((n_samples, n_features))
    slot = 1.0 / k_classes
    half = slot * (1.0 - separation / 2.0) / 2.0
    for j in informative:
        centre = (rng.permutation(k_classes)[labels] + 0.5) * slot
        X[:, j] = centre + rng.uniform(-half, half, n_samples)
    width = len(str(n_features - 1))
    names = tuple(f"f{j:0{width}d}" for j in range(n_features))
    classes = tuple(f"c{c}" for c in range(k_classes))
    return SyntheticData(Dataset(X, labels, names, classes), informative)


# --------------------------------------------------------------------------
# stages


@dataclass(frozen=True)
class FilterResult:
    reduced: Dataset
    ranking: IgRanking
    kept: np.ndarray  # mask over the original columns

    @property
    def original_indices(self) -> np.ndarray:
        return np.flatnonzero(self.kept)


def run_filter_stage(
    d: Dataset,
    bins: int = 10,
    threshold: float = 0.0,
    ranking: IgRanking | None = None,
) -> FilterResult:
    """Keep the features whose gain exceeds ``threshold``, in original column order."""
    if ranking is None:
        ranking = rank_and_filter(d, bins, threshold)
    if not ranking.selected:
        raise NoSurvivingFeaturesError(
            f"no feature has information gain > {threshold} (bins={bins})"
        )
    kept = ranking.selected_mask()
    return FilterResult(apply_mask(d, kept), ranking, kept)


def fallback_filter(d: Dataset, ranking: IgRanking, top_m: int) -> FilterResult:
    kept = ranking.top(min(top_m, d.n_features))
    return FilterResult(apply_mask(d, kept), ranking, kept)


def run_wrapper_stage(
    reduced: Dataset,
    method: Method | str,
    fit: FitnessSpec,
    swarm_params: SwarmParams = SwarmParams(),
    ga_params: GaParams = GaParams(),
    seed: int = 0,
    threads: int = 1,
) -> tuple[np.ndarray, float, SearchResult | None]:
    """Search the reduced space; returns (mask over ``reduced``, fitness, search result)."""
    method = Method.parse(method) if isinstance(method, str) else method
    if reduced.n_features == 0:
        raise DataError("wrapper stage needs at least one feature")
    wrapper = method.wrapper
    if wrapper is None:
        mask = np.ones(reduced.n_features, dtype=bool)
        return mask, fitness(reduced, mask, fit), None
    if wrapper == "ga":
        result = gasearch.run_ga(reduced, fit, replace(ga_params, rng_seed=seed), threads=threads)
    else:
        params = replace(swarm_params, variant=Variant(wrapper))
        result = swarm.run(reduced, fit, params, seed, threads=threads)
    return result.best_position, result.best_fitness, result


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[str, ...]
    methods: tuple[Method, ...] = (Method.IG_IBPSO,)
    label_column: str = "class"
    fitness: FitnessSpec = FitnessSpec()
    ig_bins: int = 10
    ig_threshold: float = 0.0
    fallback_top_m: int = 50
    swarm: SwarmParams = SwarmParams()
    ga: GaParams = GaParams()
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "results"
    threads: int = 1
    write_traces: bool = True

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.ig_bins < 1:
            raise ConfigError("ig_bins must be >= 1")
        if self.fallback_top_m < 0:
            raise ConfigError("fallback_top_m must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _as_bool(value: str) -> bool:
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


_SWARM_KEYS = {
    "particles": ("n_particles", int),
    "w": ("w", float),
    "c1": ("c1", float),
    "c2": ("c2", float),
    "vmax": ("vmax", float),
    "iterations": ("max_iter", int),
    "stagnation_limit": ("stagnation_limit", int),
}
_GA_KEYS = {
    "ga_population": ("population", int),
    "crossover_rate": ("crossover_rate", float),
    "mutation_rate": ("mutation_rate", float),
    "ga_generations": ("max_generations", int),
    "elitism": ("elitism", int),
    "mutation_mode": ("mutation_mode", str),
}
_FITNESS_KEYS = {
    "evaluator": ("evaluator", str),
    "folds": ("K", int),
    "svm_c": ("svm_C", float),
    "svm_tol": ("svm_tol", float),
}
_TOP_KEYS = {
    "dataset": ("datasets", lambda v: tuple(_split_list(v))),
    "datasets": ("datasets", lambda v: tuple(_split_list(v))),
    "method": ("methods", lambda v: tuple(Method.parse(m) for m in _split_list(v))),
    "methods": ("methods", lambda v: tuple(Method.parse(m) for m in _split_list(v))),
    "label_column": ("label_column", str),
    "bins": ("ig_bins", int),
    "threshold": ("ig_threshold", float),
    "fallback_top_m": ("fallback_top_m", int),
    "seeds": ("seeds", lambda v: tuple(int(s) for s in _split_list(v))),
    "output_dir": ("output_dir", str),
    "threads": ("threads", int),
    "write_traces": ("write_traces", _as_bool),
}


def parse_config_text(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` comments, comma-separated lists)."""
    top, sw, ga, fit = {}, {}, {}, {}
    tables = ((_TOP_KEYS, top), (_SWARM_KEYS, sw), (_GA_KEYS, ga), (_FITNESS_KEYS, fit))
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key = key.strip().lower()
        for keys, target in tables:
            if key in keys:
                name, conv = keys[key]
                try:
                    target[name] = conv(value.strip())
                except ConfigError:
                    raise
                except ValueError as exc:
                    raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
                break
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if "datasets" not in top:
        raise ConfigError("config must name a dataset")
    if base_dir is not None:
        top["datasets"] = tuple(
            str(p if Path(p).is_absolute() else base_dir / p) for p in top["datasets"]
        )
        if "output_dir" in top and not Path(top["output_dir"]).is_absolute():
            top["output_dir"] = str(base_dir / top["output_dir"])
    try:
        return ExperimentConfig(
            **top,
            fitness=FitnessSpec(**fit),
            swarm=SwarmParams(**sw),
            ga=GaParams(**ga),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, base_dir=path.parent)


# --------------------------------------------------------------------------
# experiments


@dataclass
class ReportRow:
    dataset: str
    method: Method
    seed: int | str
    accuracy: float
    n_selected: float
    runtime_seconds: float
    selected: tuple[str, ...] = ()
    trace: list = field(default_factory=list, repr=False)


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    aggregates: list[ReportRow]
    datasets: tuple[str, ...]
    methods: tuple[Method, ...]

    def aggregate(self, dataset: str, method: Method, kind: str) -> ReportRow:
        for r in self.aggregates:
            if r.dataset == dataset and r.method == method and r.seed == kind:
                return r
        raise KeyError((dataset, method, kind))


def _derive_seeds(seed: int) -> tuple[int, int]:
    fold_seed, search_seed = np.random.SeedSequence(seed).generate_state(2)
    return int(fold_seed), int(search_seed)


@dataclass(frozen=True)
class _Prepared:
    name: str
    data: Dataset
    ranking: IgRanking | None


def _prepare(path: str, cfg: ExperimentConfig) -> _Prepared:
    d = min_max_scale(load_csv(path, cfg.label_column))
    ranking = None
    if any(m.filtered for m in cfg.methods):
        ranking = rank_and_filter(d, cfg.ig_bins, cfg.ig_threshold)
    return _Prepared(Path(path).stem, d, ranking)


def run_cell(
    prep: _Prepared, method: Method, seed: int, cfg: ExperimentConfig, threads: int = 1
) -> ReportRow:
    start = time.perf_counter()
    d = prep.data
    fold_seed, search_seed = _derive_seeds(seed)
    fit = replace(cfg.fitness, rng_seed=fold_seed)
    if method is Method.NONE:
        mask = np.ones(d.n_features, dtype=bool)
        acc, result = fitness(d, mask, fit), None
    else:
        if method.filtered:
            try:
                stage = run_filter_stage(d, cfg.ig_bins, cfg.ig_threshold, prep.ranking)
            except NoSurvivingFeaturesError:
                if cfg.fallback_top_m == 0:
                    raise
                log.warning(
                    "%s: no feature passed the IG threshold; using the top %d by gain",
                    prep.name, cfg.fallback_top_m,
                )
                stage = fallback_filter(d, prep.ranking, cfg.fallback_top_m)
            space, kept = stage.reduced, stage.kept
        else:
            space, kept = d, np.ones(d.n_features, dtype=bool)
        reduced_mask, acc, result = run_wrapper_stage(
            space, method, fit, cfg.swarm, cfg.ga, search_seed, threads
        )
        mask = lift_mask(reduced_mask, kept)
    names = tuple(n for n, keep in zip(d.feature_names, mask) if keep)
    return ReportRow(
        prep.name, method, seed, float(acc), int(mask.sum()),
        time.perf_counter() - start, names, result.trace if result else [],
    )


def _aggregate(rows: list[ReportRow]) -> list[ReportRow]:
    accs = [r.accuracy for r in rows]
    counts = [r.n_selected for r in rows]
    times = [r.runtime_seconds for r in rows]
    best = rows[min(range(len(rows)), key=lambda i: (-accs[i], counts[i], i))]
    first = rows[0]
    return [
        ReportRow(first.dataset, first.method, "mean", statistics.fmean(accs),
                  statistics.fmean(counts), statistics.fmean(times)),
        ReportRow(first.dataset, first.method, "median", statistics.median(accs),
                  statistics.median(counts), statistics.median(times)),
        ReportRow(first.dataset, first.method, "best", best.accuracy, best.n_selected,
                  best.runtime_seconds, best.selected),
    ]


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Run every (dataset, method, seed) cell and assemble the report.

    Cells run concurrently when ``cfg.threads > 1``; row order is fixed by
    configuration order, so results are independent of scheduling.
    """
    prepared = [_prepare(p, cfg) for p in cfg.datasets]
    cells = [(prep, m, s) for prep in prepared for m in cfg.methods for s in cfg.seeds]

    def work(cell):
        prep, m, s = cell
        try:
            return run_cell(prep, m, s, cfg)
        except Exception as exc:
            raise ExperimentError(prep.name, m.label, s, exc) from exc

    if cfg.threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(work, cells))
    elif len(cells) == 1:
        prep, m, s = cells[0]
        try:
            rows = [run_cell(prep, m, s, cfg, threads=cfg.threads)]
        except Exception as exc:
            raise ExperimentError(prep.name, m.label, s, exc) from exc
    else:
        rows = [work(c) for c in cells]

    aggregates = []
    n = len(cfg.seeds)
    for start in range(0, len(rows), n):
        aggregates.extend(_aggregate(rows[start:start + n]))
    report = ExperimentReport(rows, aggregates, tuple(p.name for p in prepared), cfg.methods)
    if write:
        write_report(report, cfg.output_dir, traces=cfg.write_traces)
    return report


# --------------------------------------------------------------------------
# output

REPORT_COLUMNS = ("dataset", "method", "seed", "accuracy", "n_selected", "runtime_seconds")


def _fmt_count(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


def write_report(report: ExperimentReport, out_dir: str | Path, traces: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "report.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in [*report.rows, *report.aggregates]:
            w.writerow([
                r.dataset, r.method.value, r.seed, f"{r.accuracy:.6f}",
                _fmt_count(r.n_selected), f"{r.runtime_seconds:.3f}",
            ])
    with (out / "selections.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "method", "seed", "n_selected", "features"])
        for r in report.rows:
            w.writerow([r.dataset, r.method.value, r.seed, r.n_selected, ";".join(r.selected)])
    (out / "report.txt").write_text(format_tables(report), encoding="utf-8")
    if traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for r in report.rows:
            if r.trace:
                tag = r.method.value.replace("+", "_")
                write_trace(r.trace, tdir / f"{r.dataset}__{tag}__seed{r.seed}.csv")
    return out


def _table(title: str, datasets: Sequence[str], methods: Sequence[Method], cell, average: bool) -> str:
    header = ["Data set", *(m.label for m in methods)]
    body = [[ds, *(cell(ds, m) for m in methods)] for ds in datasets]
    if average:
        avg = ["Average"]
        for j in range(len(methods)):
            avg.append(f"{statistics.fmean(float(row[j + 1]) for row in body):.2f}")
        body.append(avg)
    widths = [max(len(str(row[c])) for row in [header, *body]) for c in range(len(header))]
    lines = [title, ""]
    fmt = lambda row: "  ".join(
        str(v).ljust(widths[c]) if c == 0 else str(v).rjust(widths[c]) for c, v in enumerate(row)
    )
    lines.append(fmt(header))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(fmt(row) for row in body)
    return "\n".join(lines) + "\n"


def format_tables(report: ExperimentReport) -> str:
    """Plain-text accuracy and selected-count tables, one row per dataset."""
    ds, ms = report.datasets, report.methods
    parts = [
        _table("Classification accuracy (%), best over seeds", ds, ms,
               lambda d, m: f"{100 * report.aggregate(d, m, 'best').accuracy:.2f}", True),
        _table("Classification accuracy (%), mean over seeds", ds, ms,
               lambda d, m: f"{100 * report.aggregate(d, m, 'mean').accuracy:.2f}", True),
        _table("Selected feature count (best run)", ds, ms,
               lambda d, m: _fmt_count(report.aggregate(d, m, "best").n_selected), False),
    ]
    return "\n".join(parts)
