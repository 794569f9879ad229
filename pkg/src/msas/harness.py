"""Multi-task surrogate-assisted search driver with optional Bayesian competitive
knowledge transfer, plus run records and their on-disk formats.

A single run is strictly sequential. Parallelism only pays off across runs
(different seeds, suites or modes), each of which returns an independent
:class:`RunRecord`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import bckt
from .benchmarks import ProblemSet, build_suite, evaluate
from .sas import initialize_database, propose
from .surrogate import SurrogateConfig


MODES = ("baseline", "bckt")

# named RNG streams derived from one root seed
STREAM_INIT = 0
STREAM_ACQ = 1
STREAM_TAU = 2

RECORD_RE = re.compile(r"^(?P<suite>[a-z]+\d+)_(?P<mode>baseline|bckt)_(?P<seed>\d+)\.json$")


@dataclass
class MsasConfig:
    n_init: int = 50
    fe_max: int = 200
    delta: int = 10
    sigma_I: float = 0.05
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    mode: str = "bckt"
    seed: int = 0
    runs: int = 30
    acq_pop: int = 40
    acq_generations: int = 60

    def __post_init__(self):
        if isinstance(self.surrogate, dict):
            self.surrogate = SurrogateConfig(**self.surrogate)
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.n_init < 2:
            raise ValueError("n_init must be >= 2")
        if self.fe_max <= self.n_init:
            raise ValueError("fe_max must exceed n_init")
        if not self.sigma_I > 0:
            raise ValueError("sigma_I must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MsasConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunRecord:
    suite: str
    mode: str
    seed: int
    config: MsasConfig
    traces: list[list[float]]
    events: list[list[str]]
    competitions: list[dict] = field(default_factory=list)
    transfers: list[dict] = field(default_factory=list)
    posterior_snapshots: list[dict] = field(default_factory=list)
    final_best: list[float] = field(default_factory=list)
    final_best_x: list[list[float]] = field(default_factory=list)
    fe_counts: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    construction_seed: int = 0

    @property
    def n_tasks(self) -> int:
        return len(self.traces)

    @property
    def run_id(self) -> str:
        return f"{self.suite}_{self.mode}_{self.seed}"

    def to_dict(self, include_timing: bool = True) -> dict:
        d = asdict(self)
        d["config"] = self.config.to_dict()
        if not include_timing:
            d.pop("wall_time")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        d = dict(d)
        d["config"] = MsasConfig.from_dict(d["config"])
        return cls(**d)

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True)


def _stream(seed: int, stream: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream, *extra])


def run(problem_set: ProblemSet, config: MsasConfig, seed: int | None = None) -> RunRecord:
    """Optimize every task of ``problem_set`` concurrently until each used ``fe_max`` evaluations."""
    seed = config.seed if seed is None else seed
    n = problem_set.n_tasks
    if n == 0:
        raise ValueError("problem set has no tasks")
    t0 = time.perf_counter()
    tasks = problem_set.tasks
    acq_rngs = [_stream(seed, STREAM_ACQ, j) for j in range(n)]
    tau_rng = _stream(seed, STREAM_TAU)
    use_bckt = config.mode == "bckt"
    pairs = bckt.new_pair_states(n, config.sigma_I)

    fe_counts = [0] * n

    def real_eval(j: int, u) -> float:
        try:
            value = evaluate(tasks[j], u)
        except Exception as exc:
            raise RuntimeError(f"evaluation failed on task {j} ({tasks[j].task_label}): {exc}") from exc
        fe_counts[j] += 1
        return value

    dbs = []
    traces: list[list[float]] = [[] for _ in range(n)]
    events: list[list[str]] = [[] for _ in range(n)]
    for j in range(n):
        try:
            db = initialize_database(tasks[j], config.n_init, _stream(seed, STREAM_INIT, j))
        except Exception as exc:
            raise RuntimeError(f"initial design failed on task {j} ({tasks[j].task_label}): {exc}") from exc
        fe_counts[j] += len(db)
        best = math.inf
        for v in db.y:
            best = min(best, float(v))
            traces[j].append(best)
            events[j].append("init")
        dbs.append(db)

    competitions: list[dict] = []
    transfers: list[dict] = []
    snapshots: list[dict] = []
    models = {}
    rnd = 0
    while any(len(db) < config.fe_max for db in dbs):
        active = [j for j in range(n) if len(dbs[j]) < config.fe_max]
        proposals = {}
        for j in active:
            try:
                proposals[j] = propose(
                    dbs[j], config.surrogate, acq_rngs[j], pop_size=config.acq_pop, generations=config.acq_generations
                )
            except Exception as exc:
                raise RuntimeError(f"surrogate search failed on task {j} ({tasks[j].task_label}): {exc}") from exc
            models[j] = proposals[j].model
        for j in active:
            prop = proposals[j]
            db = dbs[j]
            x_eva, event = prop.x_p, "internal"
            if use_bckt and len(db) % config.delta == 0:
                row = [None] * n  # None: source not scored
                row[j] = prop.delta_in
                r_row, dp_row, tau_row = [None] * n, [None] * n, [None] * n
                externals, info = [], {}
                for i in range(n):
                    if i == j:
                        continue
                    # a source that already spent its budget keeps its last model
                    R = bckt.rank_correlation(models[i], db)
                    dp = bckt.projected_improvement(models[i], dbs[i], db)
                    r_row[i], dp_row[i] = R, dp
                    if abs(dp) < bckt.DEGENERATE_TOL:
                        row[i] = 0.0
                        continue
                    tau = bckt.sample_tau(pairs[i][j], R, tau_rng)
                    dex = bckt.external_improvement(tau, dp)
                    row[i] = dex
                    tau_row[i] = tau
                    info[i] = (R, dp, tau)
                    externals.append((i, dex, dbs[i].best_x))
                x_win, winner = bckt.compete(prop.delta_in, prop.x_p, externals)
                duplicate = winner is not None and db.contains(x_win)
                if duplicate:
                    winner = None
                comp = dict(
                    round=rnd, target=j, db_size=len(db), winner=winner, duplicate=duplicate, delta_row=row,
                    R=r_row, delta_p=dp_row, tau=tau_row,
                )
                competitions.append(comp)
                if winner is not None:
                    R, dp, tau = info[winner]
                    min_before = db.best_y
                    f_val = real_eval(j, x_win)
                    db.add(x_win, f_val)
                    T = bckt.observation_T(min_before, f_val, dp)
                    state = bckt.update_pair(pairs[winner][j], T, R)
                    post = bckt.posterior_params(state)
                    transfers.append(
                        dict(round=rnd, source=winner, target=j, tau=tau, R=R, delta_p=dp, T=T, f=f_val, delta_row=row)
                    )
                    snapshots.append(
                        dict(round=rnd, i=winner, j=j, k=state.k, mean=post.mean, variance=post.variance)
                    )
                    traces[j].append(min(traces[j][-1], f_val))
                    events[j].append(f"transfer:{winner}")
                    continue
            f_val = real_eval(j, x_eva)
            db.add(x_eva, f_val)
            traces[j].append(min(traces[j][-1], f_val))
            events[j].append(event)
        rnd += 1

    return RunRecord(
        suite=problem_set.name,
        mode=config.mode,
        seed=seed,
        config=config,
        traces=traces,
        events=events,
        competitions=competitions,
        transfers=transfers,
        posterior_snapshots=snapshots,
        final_best=[db.best_y for db in dbs],
        final_best_x=[db.best_x.tolist() for db in dbs],
        fe_counts=fe_counts,
        wall_time=time.perf_counter() - t0,
        construction_seed=problem_set.construction_seed,
    )


def competition_instants(record: RunRecord, target: int) -> list[dict]:
    return [c for c in record.competitions if c["target"] == target]


def transfer_rate_matrix(records: list[RunRecord], tail_fraction: float | None = None) -> np.ndarray:
    """Fraction of competition instants at which each source transferred to each target.

    Entry ``(i, j)`` counts transfers i -> j over all ``(run, instant)`` pairs
    where task j was the target. With ``tail_fraction`` only the last part of
    each run's instants (per target) is used, e.g. ``1/3`` for the final
    third.
    """
    if not records:
        raise ValueError("transfer_rate_matrix needs at least one record")
    n = records[0].n_tasks
    if any(r.n_tasks != n for r in records):
        raise ValueError("records must share one problem shape")
    hits = np.zeros((n, n))
    totals = np.zeros(n)
    for rec in records:
        for j in range(n):
            inst = competition_instants(rec, j)
            if tail_fraction is not None:
                m = len(inst)
                start = math.ceil((1.0 - tail_fraction) * m - 1e-9)
                inst = inst[start:]
            totals[j] += len(inst)
            for c in inst:
                if c["winner"] is not None:
                    hits[c["winner"], j] += 1
    rates = np.divide(hits, totals[None, :], out=np.zeros((n, n)), where=totals[None, :] > 0)
    np.fill_diagonal(rates, 0.0)
    return rates


def transfer_rate_curve(records: list[RunRecord], source: int, target: int) -> np.ndarray:
    """Per-instant transfer rate i -> j averaged over runs (one value per competition instant)."""
    per_run = []
    for rec in records:
        inst = competition_instants(rec, target)
        per_run.append([1.0 if c["winner"] == source else 0.0 for c in inst])
    if not per_run or not per_run[0]:
        return np.zeros(0)
    m = min(len(r) for r in per_run)
    return np.mean([r[:m] for r in per_run], axis=0)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def convergence_csv(record: RunRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run_id", "task", "fe", "best_y", "event"])
    for j, (trace, ev) in enumerate(zip(record.traces, record.events)):
        for fe, (b, e) in enumerate(zip(trace, ev), start=1):
            w.writerow([record.run_id, j, fe, fmt(b), e])
    return buf.getvalue()


def read_convergence_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["task"] = int(r["task"])
        r["fe"] = int(r["fe"])
        r["best_y"] = float(r["best_y"])
    return rows


def write_record(record: RunRecord, out_dir) -> tuple[Path, Path]:
    """Write ``{suite}_{mode}_{seed}.csv`` (convergence) and ``.json`` (full record)."""
    out_dir = Path(out_dir)
    csv_path = out_dir / f"{record.run_id}.csv"
    json_path = out_dir / f"{record.run_id}.json"
    atomic_write(csv_path, convergence_csv(record))
    atomic_write(json_path, record.to_json())
    return csv_path, json_path


def load_records(out_dir) -> list[RunRecord]:
    out_dir = Path(out_dir)
    recs = []
    for p in sorted(out_dir.iterdir()):
        if RECORD_RE.match(p.name):
            with open(p) as fh:
                recs.append(RunRecord.from_dict(json.load(fh)))
    recs.sort(key=lambda r: (r.suite, r.mode, r.seed))
    return recs


def matrix_csv(mat: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = mat.shape[0]
    w.writerow(["source"] + [f"T{j + 1}" for j in range(n)])
    for i in range(n):
        w.writerow([f"T{i + 1}"] + [fmt(v) for v in mat[i]])
    return buf.getvalue()


def summary_rows(records: list[RunRecord]) -> list[dict]:
    groups: dict[tuple[str, str, int], list[float]] = {}
    for rec in records:
        for j, v in enumerate(rec.final_best):
            groups.setdefault((rec.suite, rec.mode, j), []).append(v)
    rows = []
    for (suite, mode, j), vals in sorted(groups.items()):
        a = np.asarray(vals)
        rows.append(
            dict(suite=suite, mode=mode, task=j, runs=a.size, mean=float(a.mean()), std=float(a.std(ddof=1)) if a.size > 1 else 0.0)
        )
    return rows


def summary_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "mode", "task", "runs", "mean", "std"])
    for r in summary_rows(records):
        w.writerow([r["suite"], r["mode"], r["task"], r["runs"], fmt(r["mean"]), fmt(r["std"])])
    return buf.getvalue()


def write_aggregates(records: list[RunRecord], out_dir) -> list[Path]:
    """Summary table, transfer-rate matrix and config echo for each (suite, mode)."""
    out_dir = Path(out_dir)
    written = []
    p = out_dir / "summary.csv"
    atomic_write(p, summary_csv(records))
    written.append(p)
    cells: dict[tuple[str, str], list[RunRecord]] = {}
    for rec in records:
        cells.setdefault((rec.suite, rec.mode), []).append(rec)
    for (suite, mode), recs in sorted(cells.items()):
        p = out_dir / f"transfer_rates_{suite}_{mode}.csv"
        atomic_write(p, matrix_csv(transfer_rate_matrix(recs)))
        written.append(p)
        p = out_dir / f"{suite}_{mode}.config.json"
        atomic_write(p, config_echo(recs))
        written.append(p)
    return written


def config_echo(records: list[RunRecord]) -> str:
    cfg = records[0].config.to_dict()
    cfg.pop("seed")
    echo = dict(
        suite=records[0].suite,
        construction_seed=records[0].construction_seed,
        seeds=[r.seed for r in records],
        config=cfg,
    )
    return json.dumps(echo, indent=2, sort_keys=True)


def read_config_echo(path) -> tuple[MsasConfig, dict]:
    """Parse a config echo back into the :class:`MsasConfig` of its first seed."""
    with open(path) as fh:
        echo = json.load(fh)
    cfg = MsasConfig.from_dict({**echo["config"], "seed": echo["seeds"][0]})
    return cfg, echo


def export(records: list[RunRecord], out_dir) -> list[Path]:
    """Write per-run convergence CSVs and JSON records plus the aggregate files."""
    if not records:
        raise ValueError("nothing to export")
    written = []
    for rec in records:
        written.extend(write_record(rec, out_dir))
    written.extend(write_aggregates(records, out_dir))
    return written


def run_cell(suite: str, mode: str, seed: int, config: MsasConfig, construction_seed: int = 0) -> RunRecord:
    """Build the suite and execute one seeded run; picklable entry point for worker pools."""
    cfg = MsasConfig.from_dict({**config.to_dict(), "mode": mode, "seed": seed})
    return run(build_suite(suite, construction_seed), cfg)
