"""Monte Carlo harness: symmetrized Stein loss of the estimator versus n, per graph family.

For each ``(family, p, trial)`` one ``p x max(n)`` sample is drawn and the
first ``n`` columns are used for every ``n`` in the grid, so loss curves
along ``n`` are nested. Seeds depend on ``(base_seed, family, p)`` and the
trial index only, which makes the two constraint modes see identical data.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from laplace_learn.errors import InvalidParameterError, NonConvergenceError, NonExistenceError
from laplace_learn.estimation import SolverConfig, estimate_cgl, pairwise_distances
from laplace_learn.graph import GRAPH_KINDS, laplacian_from_weights, make_graph
from laplace_learn.io import format_float
from laplace_learn.losses import delta_E, sym_stein_loss
from laplace_learn.sampling import SamplerConfig, sample_lgmrf

CONSTRAINT_MODES = ("unconstrained", "oracle")
THREADS_ENV = "LAPLACE_LEARN_THREADS"

RECORD_COLUMNS = (
    "family", "constraint", "p", "n", "trial", "seed",
    "loss_sym_stein", "delta_E", "sweeps", "failed", "wall_time_ms",
)
SUMMARY_COLUMNS = ("family", "constraint", "p", "n", "trials", "failures", "mean", "std", "median")
PLOT_COLUMNS = ("family", "constraint", "p", "n", "n_over_log_p", "n_over_p", "mean", "std", "median")


@dataclass(frozen=True)
class ExperimentConfig:
    graph_families: tuple[str, ...] = GRAPH_KINDS
    p_values: tuple[int, ...] = (25, 49, 100)
    n_values: tuple[int, ...] = (50, 100, 200, 400)
    trials: int = 20
    base_seed: int = 0
    constraint_mode: str = "unconstrained"
    output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "graph_families", tuple(self.graph_families))
        object.__setattr__(self, "p_values", tuple(int(p) for p in self.p_values))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        bad = [f for f in self.graph_families if f not in GRAPH_KINDS]
        if bad or not self.graph_families:
            raise InvalidParameterError(f"graph_families must be a nonempty subset of {GRAPH_KINDS}")
        if not self.p_values or any(p < 2 for p in self.p_values):
            raise InvalidParameterError("p_values must be nonempty with every p >= 2")
        if "grid" in self.graph_families:
            nonsq = [p for p in self.p_values if math.isqrt(p) ** 2 != p]
            if nonsq:
                raise InvalidParameterError(f"grid needs perfect-square p values, got {nonsq}")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise InvalidParameterError("n_values must be nonempty and positive")
        if list(self.n_values) != sorted(set(self.n_values)):
            raise InvalidParameterError("n_values must be strictly ascending")
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")
        if self.constraint_mode not in CONSTRAINT_MODES:
            raise InvalidParameterError(f"constraint_mode must be one of {CONSTRAINT_MODES}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"{path}: invalid JSON ({exc.msg})") from exc
        if not isinstance(data, dict):
            raise InvalidParameterError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("graph_families", "p_values", "n_values"):
            d[k] = list(d[k])
        return d


@dataclass
class ExperimentRecord:
    family: str
    constraint: str
    p: int
    n: int
    trial: int
    seed: int
    loss_sym_stein: float
    delta_E: float
    sweeps: int
    failed: bool
    wall_time_ms: float

    def row(self) -> list[str]:
        return [
            self.family, self.constraint, str(self.p), str(self.n), str(self.trial), str(self.seed),
            format_float(self.loss_sym_stein), format_float(self.delta_E), str(self.sweeps),
            str(int(self.failed)), f"{self.wall_time_ms:.3f}",
        ]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[ExperimentRecord]
    summary: list[dict] = field(default_factory=list)

    def losses(self, family, p, n) -> np.ndarray:
        return np.array([r.loss_sym_stein for r in self.records
                         if (r.family, r.p, r.n) == (family, p, n) and not r.failed])

    def cell(self, family, p, n) -> dict:
        for row in self.summary:
            if (row["family"], row["p"], row["n"]) == (family, p, n):
                return row
        raise KeyError((family, p, n))


def cell_seed(base_seed: int, family: str, p: int) -> int:
    """64-bit seed for one (family, p) cell; trials are substreams of it."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(GRAPH_KINDS.index(family), int(p)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def population_laplacian(family: str, p: int):
    t = make_graph(family, p)
    return t, laplacian_from_weights(t, np.ones(t.m))


def run_trial(family, p, trial, base_seed, n_values, constraint_mode, solver=None) -> list[ExperimentRecord]:
    """All n-cells of one (family, p, trial) work item."""
    solver = solver or SolverConfig()
    star_t, Lstar = population_laplacian(family, p)
    E = star_t if constraint_mode == "oracle" else make_graph("complete", p)
    seed = cell_seed(base_seed, family, p)
    X = sample_lgmrf(Lstar, max(n_values), SamplerConfig(seed, trial))
    out = []
    for n in n_values:
        t0 = time.perf_counter()
        stats = pairwise_distances(X[:, :n])
        try:
            rep = estimate_cgl(stats, E, solver)
        except (NonExistenceError, NonConvergenceError):
            loss, dlt, sweeps, failed = math.nan, math.nan, 0, True
        else:
            loss = sym_stein_loss(rep.laplacian, Lstar).symmetrized
            dlt = delta_E(stats, Lstar, E)
            sweeps, failed = rep.sweeps, False
        ms = 1000.0 * (time.perf_counter() - t0)
        out.append(ExperimentRecord(family, constraint_mode, p, n, trial, seed, loss, dlt, sweeps, failed, ms))
    return out


def _run_item(args):
    return run_trial(*args)


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        k = int(raw)
    except ValueError as exc:
        raise InvalidParameterError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if k < 1:
        raise InvalidParameterError(f"{THREADS_ENV} must be >= 1")
    return k


def summarize(records, config) -> list[dict]:
    rows = []
    for fam in config.graph_families:
        for p in config.p_values:
            for n in config.n_values:
                cell = [r for r in records if (r.family, r.p, r.n) == (fam, p, n)]
                vals = np.array([r.loss_sym_stein for r in cell if not r.failed])
                k = vals.size
                rows.append({
                    "family": fam, "constraint": config.constraint_mode, "p": p, "n": n,
                    "trials": len(cell), "failures": len(cell) - k,
                    "mean": float(vals.mean()) if k else math.nan,
                    "std": float(vals.std(ddof=1)) if k > 1 else 0.0 if k else math.nan,
                    "median": float(np.median(vals)) if k else math.nan,
                })
    return rows


def run_convergence_experiment(config: ExperimentConfig, out_path=None, workers=None,
                               solver: SolverConfig | None = None) -> ExperimentResult:
    """Run every trial, write the record/summary/plot CSVs, and return the results.

    Output goes to ``out_path`` (or ``config.output_path``); the summary and
    plot tables land next to it as ``<stem>.summary.csv`` and ``<stem>.plot.csv``.
    """
    items = [
        (fam, p, trial, config.base_seed, config.n_values, config.constraint_mode, solver)
        for fam in config.graph_families for p in config.p_values for trial in range(config.trials)
    ]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) == 1:
        chunks = [_run_item(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_item, items))
    fam_rank = {f: k for k, f in enumerate(config.graph_families)}
    records = sorted((r for c in chunks for r in c), key=lambda r: (fam_rank[r.family], r.p, r.n, r.trial))
    result = ExperimentResult(config, records, summarize(records, config))
    out_path = out_path or config.output_path
    if out_path:
        write_outputs(result, out_path)
    return result


def sibling_paths(out_path) -> tuple[Path, Path]:
    out = Path(out_path)
    stem = out.name[: -len(out.suffix)] if out.suffix else out.name
    return out.with_name(stem + ".summary.csv"), out.with_name(stem + ".plot.csv")


def write_outputs(result: ExperimentResult, out_path) -> None:
    out = Path(out_path)
    with out.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(RECORD_COLUMNS)
        for r in result.records:
            wr.writerow(r.row())
    summary_path, plot_path = sibling_paths(out)
    with summary_path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SUMMARY_COLUMNS)
        for row in result.summary:
            wr.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])
    with plot_path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(PLOT_COLUMNS)
        for row in result.summary:
            extra = {"n_over_log_p": row["n"] / math.log(row["p"]), "n_over_p": row["n"] / row["p"]}
            wr.writerow([_fmt({**row, **extra}[c]) for c in PLOT_COLUMNS])


def _fmt(v):
    return format_float(v) if isinstance(v, float) else str(v)


def read_records(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def collapse_ratio(result: ExperimentResult, family: str, points: int = 8) -> float:
    """Worst max/min ratio of mean loss across p at matched ``n / log p``.

    Each p-curve is interpolated linearly in log-log coordinates; abscissae
    are taken on the overlap of all curves' ``n / log p`` ranges.
    """
    cfg = result.config
    curves = []
    for p in cfg.p_values:
        x = np.array([n / math.log(p) for n in cfg.n_values])
        y = np.array([result.cell(family, p, n)["mean"] for n in cfg.n_values])
        curves.append((np.log(x), np.log(y)))
    lo = max(c[0].min() for c in curves)
    hi = min(c[0].max() for c in curves)
    if lo > hi:
        raise InvalidParameterError("n / log p ranges do not overlap across p values")
    grid = np.linspace(lo, hi, points)
    vals = np.array([np.interp(grid, cx, cy) for cx, cy in curves])
    return float(np.exp(vals.max(axis=0) - vals.min(axis=0)).max())
