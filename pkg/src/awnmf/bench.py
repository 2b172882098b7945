"""Experiment harness: restart-averaged clustering tables, sweeps and dumps.

Every trial is (method, hyperparameter, restart) on a fixed noisy copy of
the data: fit a factorization, run k-means on the columns of H, score the
result with ACC and NMI.  Seeds are derived from the base seed and a
purpose key only, so the same restart uses the same NMF initialization and
k-means seed for every method and grid value.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .clustering import accuracy, kmeans, nmi
from .data import LabeledDataset, add_noise, load_csv, synth_planted
from .errors import ConfigError, InsufficientClassesError
from .nmf import Method, SolverOptions, fit

log = logging.getLogger(__name__)

DEFAULT_P_GRID = [1.5 + 0.5 * i for i in range(20)]
DEFAULT_GAMMA_GRID = [10.0 ** i for i in range(-4, 5)]
DEFAULT_NOISE = 0.05
DEFAULT_SYNTHETIC = (20, 2, 30, 3)

# purpose keys for seed derivation
_NOISE, _NMF, _KMEANS, _SUBSET, _SYNTH = range(5)


def derive_seed(base, *key):
    """32-bit seed for ``key``, independent of every other key."""
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1)[0])


def _noise_key(c):
    return int(round(float(c) * 1e9))


@dataclass
class ExperimentConfig:
    data: str | None = None
    label_col: int | str = -1
    drop_cols: list = field(default_factory=list)
    delimiter: str = ","
    synthetic: tuple | None = None
    methods: list = field(default_factory=lambda: [m.value for m in Method])
    restarts: int = 10
    noise: list = field(default_factory=lambda: [DEFAULT_NOISE])
    p_grid: list = field(default_factory=lambda: list(DEFAULT_P_GRID))
    gamma_grid: list = field(default_factory=lambda: list(DEFAULT_GAMMA_GRID))
    rank: int | str = "classes"
    seed: int = 0
    max_iter: int = 500
    tol: float = 1e-6
    kmeans_max_iter: int = 300
    out: str | None = None
    jobs: int = 1

    def __post_init__(self):
        self.methods = [Method.parse(m).value for m in _as_list(self.methods)]
        self.noise = [float(c) for c in _as_list(self.noise)]
        self.p_grid = [float(v) for v in _as_list(self.p_grid)]
        self.gamma_grid = [float(v) for v in _as_list(self.gamma_grid)]
        self.drop_cols = list(_as_list(self.drop_cols))
        if self.synthetic is not None:
            self.synthetic = tuple(int(v) for v in _as_list(self.synthetic))
        self.validate()

    def validate(self):
        if not self.methods:
            raise ConfigError("no methods selected")
        if int(self.restarts) < 1:
            raise ConfigError("restarts must be >= 1")
        if not self.noise or any(c < 0 for c in self.noise):
            raise ConfigError("noise levels must be a nonempty list of values >= 0")
        if Method.FW.value in self.methods and (
                not self.p_grid or any(p <= 1 for p in self.p_grid)):
            raise ConfigError("p grid must be nonempty with every p > 1")
        if Method.EW.value in self.methods and (
                not self.gamma_grid or any(g <= 0 for g in self.gamma_grid)):
            raise ConfigError("gamma grid must be nonempty with every gamma > 0")
        if self.rank != "classes":
            try:
                self.rank = int(self.rank)
            except (TypeError, ValueError):
                raise ConfigError(f"rank must be 'classes' or an integer, got {self.rank!r}")
            if self.rank < 1:
                raise ConfigError("rank must be >= 1")
        if self.data is None and self.synthetic is None:
            self.synthetic = DEFAULT_SYNTHETIC
        if self.data is not None and self.synthetic is not None:
            raise ConfigError("give either a data file or synthetic dimensions, not both")
        if self.synthetic is not None and len(self.synthetic) != 4:
            raise ConfigError("synthetic data needs four values: M,L,N,outliers")

    def grid(self, method):
        method = Method.parse(method)
        if method is Method.FW:
            return [("p", v) for v in self.p_grid]
        if method is Method.EW:
            return [("gamma", v) for v in self.gamma_grid]
        return [("", None)]

    def to_dict(self):
        d = asdict(self)
        if d["synthetic"] is not None:
            d["synthetic"] = list(d["synthetic"])
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        clean = {k.replace("-", "_"): v for k, v in d.items()}
        unknown = set(clean) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**clean)


def _as_list(value):
    if value is None:
        return []
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


@dataclass
class RunRecord:
    method: str
    hyper_name: str
    hyper: float | None
    noise: float
    restart: int
    nmf_seed: int
    kmeans_seed: int
    acc: float
    nmi: float
    final_objective: float
    iterations: int
    converged: bool
    rank: int
    clusters: int
    wall_time: float = 0.0

    def key(self):
        return (self.clusters, self.noise, self.method,
                -1.0 if self.hyper is None else self.hyper, self.restart)


RECORD_COLUMNS = [f.name for f in fields(RunRecord) if f.name != "wall_time"]


def load_dataset(config):
    if config.data is not None:
        return load_csv(config.data, config.label_col, config.delimiter, config.drop_cols)
    M, L, N, outliers = config.synthetic
    return synth_planted(M, L, N, outliers, seed=derive_seed(config.seed, _SYNTH)).dataset


def noisy_matrix(config, X, c):
    """The single noise realization shared by every method at level ``c``."""
    return add_noise(X, c, seed=derive_seed(config.seed, _NOISE, _noise_key(c)))


def resolve_rank(config, dataset):
    L = dataset.class_count if config.rank == "classes" else int(config.rank)
    if L > min(dataset.X.shape):
        raise ConfigError(f"rank {L} exceeds min(M, N) = {min(dataset.X.shape)}")
    return L


@dataclass
class _Trial:
    method: str
    hyper_name: str
    hyper: float | None
    noise: float
    restart: int
    nmf_seed: int
    kmeans_seed: int
    rank: int


def _solver_options(config, trial):
    opts = SolverOptions(max_iterations=config.max_iter, rel_tolerance=config.tol,
                         rng_seed=trial.nmf_seed)
    if trial.hyper_name == "p":
        opts.hyper_p = trial.hyper
    elif trial.hyper_name == "gamma":
        opts.hyper_gamma = trial.hyper
    return opts


def run_trial(config, X, labels, trial):
    """Fit, cluster and score one trial; returns the RunRecord and the factorization."""
    K = int(np.unique(labels).size)
    start = time.perf_counter()
    fac = fit(X, trial.rank, trial.method, _solver_options(config, trial))
    km = kmeans(fac.H.T, K, seed=trial.kmeans_seed, max_iter=config.kmeans_max_iter)
    rec = RunRecord(
        method=trial.method, hyper_name=trial.hyper_name, hyper=trial.hyper,
        noise=trial.noise, restart=trial.restart, nmf_seed=trial.nmf_seed,
        kmeans_seed=trial.kmeans_seed, acc=accuracy(labels, km.assignments),
        nmi=nmi(labels, km.assignments), final_objective=fac.objective_trace[-1],
        iterations=fac.iterations_run, converged=fac.converged, rank=trial.rank,
        clusters=K, wall_time=time.perf_counter() - start)
    return rec, fac, km


def _run_job(args):
    config, X, labels, trial = args
    return run_trial(config, X, labels, trial)[0]


def _execute(config, jobs):
    """Run (X, labels, trial) jobs, serially or in a process pool."""
    payload = [(config, X, y, t) for X, y, t in jobs]
    if int(config.jobs) > 1 and len(payload) > 1:
        with ProcessPoolExecutor(max_workers=int(config.jobs)) as pool:
            records = list(pool.map(_run_job, payload, chunksize=4))
    else:
        records = [_run_job(p) for p in payload]
    return sorted(records, key=RunRecord.key)


def _trials(config, noise, restarts, rank, seed_key=()):
    for method in config.methods:
        for hname, hval in config.grid(method):
            for r in range(restarts):
                yield _Trial(method, hname, hval, noise, r,
                             derive_seed(config.seed, _NMF, r, *seed_key),
                             derive_seed(config.seed, _KMEANS, r, *seed_key), rank)


@dataclass
class GridPoint:
    method: str
    hyper_name: str
    hyper: float | None
    mean_acc: float
    mean_nmi: float
    runs: int


def aggregate(records):
    """Mean ACC / NMI per (method, hyperparameter), in record order."""
    groups = {}
    for r in records:
        groups.setdefault((r.method, r.hyper_name, r.hyper), []).append(r)
    return [GridPoint(m, hn, hv, float(np.mean([r.acc for r in rs])),
                      float(np.mean([r.nmi for r in rs])), len(rs))
            for (m, hn, hv), rs in groups.items()]


def select_best(points, methods):
    """For each method the grid point with the highest mean ACC (first on ties)."""
    best = {}
    for pt in points:
        cur = best.get(pt.method)
        if cur is None or pt.mean_acc > cur.mean_acc:
            best[pt.method] = pt
    return [best[m] for m in methods if m in best]


@dataclass
class TableResult:
    rows: list
    grid: list
    records: list


def run_table(config, dataset=None, noise=None):
    """Restart-averaged ACC / NMI per method at its best grid value."""
    dataset = dataset or load_dataset(config)
    c = config.noise[0] if noise is None else float(noise)
    X = noisy_matrix(config, dataset.X, c)
    L = resolve_rank(config, dataset)
    jobs = [(X, dataset.labels, t) for t in _trials(config, c, int(config.restarts), L)]
    records = _execute(config, jobs)
    grid = aggregate(records)
    result = TableResult(select_best(grid, config.methods), grid, records)
    if config.out:
        write_table(config, result, dataset)
    return result


@dataclass
class CurvePoint:
    axis: str
    value: float
    method: str
    hyper_name: str
    hyper: float | None
    mean_acc: float
    mean_nmi: float
    runs: int


def run_sweep(config, axis, values=None, dataset=None):
    """Mean ACC / NMI curves along ``axis``.

    ``noise``: one table per noise level (best grid value at each level).
    ``clusters``: for each k, ``restarts`` repeats that each draw k random
    classes, refit and recluster; means over repeats, best grid value per k.
    ``hyper``: every grid value of every method at the first noise level.
    """
    dataset = dataset or load_dataset(config)
    axis = {"noise_c": "noise", "cluster_count": "clusters", "k": "clusters"}.get(axis, axis)
    curve, records = [], []
    if axis == "noise":
        values = config.noise if values is None else [float(v) for v in values]
        if not values:
            raise ConfigError("noise sweep needs at least one value")
        for c in values:
            res = run_table(_without_out(config), dataset, noise=c)
            records += res.records
            curve += [CurvePoint("noise", c, p.method, p.hyper_name, p.hyper,
                                 p.mean_acc, p.mean_nmi, p.runs) for p in res.rows]
    elif axis == "clusters":
        values = [int(v) for v in (values or range(2, 11))]
        if not values or min(values) < 1:
            raise ConfigError("cluster sweep needs positive cluster counts")
        if max(values) > dataset.class_count:
            raise InsufficientClassesError(
                f"dataset has {dataset.class_count} classes, sweep needs {max(values)}")
        c = config.noise[0]
        X = noisy_matrix(config, dataset.X, c)
        full = LabeledDataset(X, dataset.labels, dataset.name, dataset.class_names)
        for k in values:
            jobs = []
            for rep in range(int(config.restarts)):
                rng = np.random.default_rng(derive_seed(config.seed, _SUBSET, k, rep))
                classes = sorted(rng.choice(dataset.class_count, size=k, replace=False))
                sub = full.subset(classes)
                L = resolve_rank(config, sub)
                for t in _trials(config, c, 1, L, seed_key=(k, rep)):
                    t.restart = rep
                    jobs.append((sub.X, sub.labels, t))
            recs = _execute(config, jobs)
            records += recs
            curve += [CurvePoint("clusters", k, p.method, p.hyper_name, p.hyper,
                                 p.mean_acc, p.mean_nmi, p.runs)
                      for p in select_best(aggregate(recs), config.methods)]
    elif axis == "hyper":
        res = run_table(_without_out(config), dataset)
        records = res.records
        curve = [CurvePoint("hyper", p.hyper if p.hyper is not None else float("nan"),
                            p.method, p.hyper_name, p.hyper, p.mean_acc, p.mean_nmi, p.runs)
                 for p in res.grid]
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}; use noise, clusters or hyper")
    if config.out:
        write_sweep(config, axis, curve, records, dataset)
    return curve, records


def _without_out(config):
    d = config.to_dict()
    d["out"] = None
    return ExperimentConfig.from_dict(d)


def _best_hypers(config, dataset):
    """Resolve one hyperparameter per method, selecting by mean ACC when a
    grid has more than one value."""
    chosen = {}
    needs_search = [m for m in config.methods if len(config.grid(m)) > 1]
    if needs_search:
        d = config.to_dict()
        d.update(out=None, methods=needs_search)
        res = run_table(ExperimentConfig.from_dict(d), dataset)
        chosen.update({p.method: (p.hyper_name, p.hyper) for p in res.rows})
    return {m: chosen.get(m, config.grid(m)[0]) for m in config.methods}


def _single_runs(config, dataset):
    c = config.noise[0]
    X = noisy_matrix(config, dataset.X, c)
    L = resolve_rank(config, dataset)
    out = []
    for m, (hname, hval) in _best_hypers(config, dataset).items():
        t = _Trial(m, hname, hval, c, 0, derive_seed(config.seed, _NMF, 0),
                   derive_seed(config.seed, _KMEANS, 0), L)
        out.append(run_trial(config, X, dataset.labels, t))
    return out


def dump_representation(config, dataset=None):
    """One restart per method with L = 2; returns {method: rows of (h1, h2, true, pred)}."""
    dataset = dataset or load_dataset(config)
    if resolve_rank(config, dataset) != 2:
        raise ConfigError("representation dumps need rank 2 (use --rank 2 or a 2-class dataset)")
    dumps = {}
    for rec, fac, km in _single_runs(config, dataset):
        dumps[rec.method] = [(float(fac.H[0, j]), float(fac.H[1, j]),
                              int(dataset.labels[j]), int(km.assignments[j]))
                             for j in range(dataset.n_samples)]
    if config.out:
        os.makedirs(config.out, exist_ok=True)
        for method, rows in dumps.items():
            _write_csv(os.path.join(config.out, f"repr_{method}.csv"),
                       ["h1", "h2", "true_label", "pred_label"], rows)
        write_manifest(config, "dump-repr", dataset)
    return dumps


def dump_trace(config, dataset=None):
    """Objective trace of one restart per method; returns {column name: trace}."""
    dataset = dataset or load_dataset(config)
    traces = {}
    for rec, fac, _ in _single_runs(config, dataset):
        name = rec.method if rec.hyper is None else f"{rec.method}({rec.hyper_name}={rec.hyper:g})"
        traces[name] = list(fac.objective_trace)
    if config.out:
        os.makedirs(config.out, exist_ok=True)
        n = max(len(t) for t in traces.values())
        rows = [[i + 1] + [repr(t[i]) if i < len(t) else "" for t in traces.values()]
                for i in range(n)]
        _write_csv(os.path.join(config.out, "trace.csv"), ["iteration"] + list(traces), rows)
        write_manifest(config, "trace", dataset)
    return traces


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_records(path, records):
    _write_csv(path, RECORD_COLUMNS,
               [[getattr(r, c) for c in RECORD_COLUMNS] for r in records])


def read_records(path):
    """Load a records CSV written by :func:`write_records`."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(RunRecord(
                method=row["method"], hyper_name=row["hyper_name"],
                hyper=float(row["hyper"]) if row["hyper"] else None,
                noise=float(row["noise"]), restart=int(row["restart"]),
                nmf_seed=int(row["nmf_seed"]), kmeans_seed=int(row["kmeans_seed"]),
                acc=float(row["acc"]), nmi=float(row["nmi"]),
                final_objective=float(row["final_objective"]),
                iterations=int(row["iterations"]), converged=row["converged"] == "True",
                rank=int(row["rank"]), clusters=int(row["clusters"])))
    return out


def _write_timings(path, records):
    _write_csv(path, ["method", "hyper", "noise", "clusters", "restart", "wall_time"],
               [[r.method, r.hyper, r.noise, r.clusters, r.restart, r.wall_time]
                for r in records])


def write_manifest(config, command, dataset, extra=None):
    manifest = {
        "command": command,
        "config": config.to_dict(),
        "dataset": {"name": dataset.name, "features": int(dataset.X.shape[0]),
                    "samples": int(dataset.n_samples),
                    "classes": int(dataset.class_count)},
        "seeds": {
            "noise": {repr(c): derive_seed(config.seed, _NOISE, _noise_key(c))
                      for c in config.noise},
            "nmf": [derive_seed(config.seed, _NMF, r) for r in range(int(config.restarts))],
            "kmeans": [derive_seed(config.seed, _KMEANS, r)
                       for r in range(int(config.restarts))],
        },
    }
    if config.synthetic is not None:
        manifest["seeds"]["synthetic"] = derive_seed(config.seed, _SYNTH)
    manifest.update(extra or {})
    with open(os.path.join(config.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_table(config, result, dataset):
    os.makedirs(config.out, exist_ok=True)
    head = ["method", "hyper_name", "hyper", "mean_acc", "mean_nmi", "runs"]
    _write_csv(os.path.join(config.out, "table.csv"), head,
               [[getattr(p, h) for h in head] for p in result.rows])
    _write_csv(os.path.join(config.out, "grid.csv"), head,
               [[getattr(p, h) for h in head] for p in result.grid])
    write_records(os.path.join(config.out, "records.csv"), result.records)
    _write_timings(os.path.join(config.out, "timings.csv"), result.records)
    write_manifest(config, "table", dataset)


def write_sweep(config, axis, curve, records, dataset):
    os.makedirs(config.out, exist_ok=True)
    head = ["axis", "value", "method", "hyper_name", "hyper", "mean_acc", "mean_nmi", "runs"]
    _write_csv(os.path.join(config.out, f"sweep_{axis}.csv"), head,
               [[getattr(p, h) for h in head] for p in curve])
    write_records(os.path.join(config.out, "records.csv"), records)
    _write_timings(os.path.join(config.out, "timings.csv"), records)
    write_manifest(config, "sweep", dataset, {"axis": axis})
