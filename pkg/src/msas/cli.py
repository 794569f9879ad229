"""Command-line entry point.

    msas run --suite mtop1 --mode baseline,bckt --runs 10 --seed 7
    msas run --spec experiment.txt --jobs 4
    msas compare results/ --alpha 0.05
    msas report results/
    msas suites

Spec files are plain text, one ``key = value`` per line, ``#`` starts a
comment. Command-line flags override values from the file. The output
directory defaults to ``$MSAS_OUTPUT_DIR`` or ``./results``.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .benchmarks import SUITE_IDS, suite_info
from .harness import (
    MODES,
    MsasConfig,
    atomic_write,
    fmt,
    load_records,
    matrix_csv,
    run_cell,
    transfer_rate_matrix,
    write_aggregates,
    write_record,
)
from .stats import compare_samples
from .surrogate import SurrogateConfig


OUTPUT_ENV = "MSAS_OUTPUT_DIR"
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class SpecError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    suites: list[str] = field(default_factory=list)
    modes: list[str] = field(default_factory=lambda: list(MODES))
    runs: int = 30
    seed: int = 0
    n_init: int = 50
    fe_max: int = 200
    delta: int = 10
    sigma_i: float = 0.05
    kappa: float = 2.0
    suite_seed: int = 0
    out: str = ""
    jobs: int = 1

    def validate(self) -> "ExperimentSpec":
        if not self.suites:
            raise SpecError("no suite given (use --suite or 'suite = ...' in the spec file)")
        for s in self.suites:
            if s not in SUITE_IDS:
                raise SpecError(f"unknown suite id {s!r}; known: {', '.join(SUITE_IDS)}")
        for m in self.modes:
            if m not in MODES:
                raise SpecError(f"unknown mode {m!r}; known: {', '.join(MODES)}")
        if not self.modes:
            raise SpecError("no mode given")
        if self.runs < 1 or self.jobs < 1:
            raise SpecError("runs and jobs must be positive")
        try:
            self.msas_config()
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
        return self

    def msas_config(self) -> MsasConfig:
        return MsasConfig(
            n_init=self.n_init,
            fe_max=self.fe_max,
            delta=self.delta,
            sigma_I=self.sigma_i,
            surrogate=SurrogateConfig(kappa=self.kappa),
            seed=self.seed,
            runs=self.runs,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(v)
            key = {"suites": "suite", "modes": "mode"}.get(f.name, f.name)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentSpec":
        spec = cls()
        spec.update(parse_spec_text(text))
        return spec

    def update(self, values: dict) -> None:
        types = {f.name: f.type for f in fields(self)}
        for key, raw in values.items():
            name = {"suite": "suites", "mode": "modes"}.get(key, key)
            if name not in types:
                raise SpecError(f"unknown spec key {key!r}")
            try:
                if name in ("suites", "modes"):
                    val = [p.strip().lower() for p in str(raw).split(",") if p.strip()]
                elif name in ("runs", "seed", "n_init", "fe_max", "delta", "suite_seed", "jobs"):
                    val = int(raw)
                elif name in ("sigma_i", "kappa"):
                    val = float(raw)
                else:
                    val = str(raw)
            except ValueError as exc:
                raise SpecError(f"bad value for {key!r}: {raw!r}") from exc
            setattr(self, name, val)


def parse_spec_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key in values:
            raise SpecError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val
    return values


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _run_one(args):
    suite, mode, seed, cfg, suite_seed = args
    return run_cell(suite, mode, seed, cfg, suite_seed)


def cmd_run(ns) -> int:
    spec = ExperimentSpec()
    try:
        if ns.spec:
            spec.update(parse_spec_text(Path(ns.spec).read_text()))
        overrides = {
            k: v
            for k, v in dict(
                suite=ns.suite,
                mode=ns.mode,
                runs=ns.runs,
                seed=ns.seed,
                n_init=ns.n_init,
                fe_max=ns.fe_max,
                delta=ns.delta,
                sigma_i=ns.sigma_i,
                kappa=ns.kappa,
                suite_seed=ns.suite_seed,
                out=ns.out,
                jobs=ns.jobs,
            ).items()
            if v is not None
        }
        spec.update(overrides)
        spec.validate()
    except (SpecError, OSError) as exc:
        print(f"msas run: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(spec.out or os.environ.get(OUTPUT_ENV) or "results")
    cfg = spec.msas_config()
    cells = [
        (suite, mode, spec.seed + r, cfg, spec.suite_seed)
        for suite in spec.suites
        for mode in spec.modes
        for r in range(spec.runs)
    ]
    records = []
    try:
        if spec.jobs > 1:
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                results = pool.map(_run_one, cells)
                for rec in results:
                    records.append(_finish_cell(rec, out_dir))
        else:
            for cell in cells:
                records.append(_finish_cell(_run_one(cell), out_dir))
        write_aggregates(records, out_dir)
    except Exception as exc:  # noqa: BLE001 - any failure inside a run maps to exit 1
        print(f"msas run: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _finish_cell(rec, out_dir):
    write_record(rec, out_dir)
    finals = " ".join(f"{v:.4g}" for v in rec.final_best)
    print(f"{rec.suite} {rec.mode} seed={rec.seed} final=[{finals}] transfers={len(rec.transfers)} time={rec.wall_time:.1f}s")
    return rec


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def cmd_compare(ns) -> int:
    d = Path(ns.dir)
    if not d.is_dir():
        print(f"msas compare: {d} is not a directory", file=sys.stderr)
        return EXIT_USAGE
    records = load_records(d)
    if not records:
        print(f"msas compare: no run records in {d}", file=sys.stderr)
        return EXIT_USAGE
    by_cell = {(r.suite, r.mode, r.seed): r for r in records}
    suites = sorted({r.suite for r in records}, key=SUITE_IDS.index)
    missing = []
    for suite in suites:
        seeds = {s for (su, _, s) in by_cell if su == suite}
        for seed in sorted(seeds):
            for mode in MODES:
                if (suite, mode, seed) not in by_cell:
                    missing.append(f"{suite}_{mode}_{seed}")
    if missing:
        print("msas compare: unpaired data, missing cells: " + ", ".join(missing), file=sys.stderr)
        return EXIT_USAGE

    labels, cand, base, classes = [], [], [], []
    for suite in suites:
        seeds = sorted({s for (su, _, s) in by_cell if su == suite})
        n_tasks = by_cell[(suite, "bckt", seeds[0])].n_tasks
        for j in range(n_tasks):
            labels.append(f"{suite}-T{j + 1}")
            cand.append([by_cell[(suite, "bckt", s)].final_best[j] for s in seeds])
            base.append([by_cell[(suite, "baseline", s)].final_best[j] for s in seeds])
            classes.append(suite_info(suite)["similarity_class"])
    try:
        summary = compare_samples(labels, cand, base, alpha=ns.alpha, correction=None if ns.no_holm else "holm")
    except ValueError as exc:
        print(f"msas compare: {exc}", file=sys.stderr)
        return EXIT_USAGE

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["task", "class", "baseline_mean", "bckt_mean", "p", "p_adjusted", "verdict"])
    for k, lab in enumerate(labels):
        w.writerow(
            [lab, classes[k], fmt(summary.baseline_means[k]), fmt(summary.candidate_means[k]),
             fmt(summary.pvalues[k]), fmt(summary.adjusted[k]), summary.verdicts[k]]
        )
    atomic_write(d / "comparison.csv", buf.getvalue())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["comparison", "HS", "MS", "LS", "summary"])
    cols = []
    for cls in ("HS", "MS", "LS"):
        v = [summary.verdicts[k] for k in range(len(labels)) if classes[k] == cls]
        cols.append(f"{v.count('win')}/{v.count('tie')}/{v.count('loss')}")
    w.writerow(["bckt vs baseline"] + cols + [summary.wtl()])
    atomic_write(d / "comparison_wtl.csv", buf.getvalue())

    print(f"{'task':<12} {'class':<5} {'baseline':>12} {'bckt':>12} {'p_adj':>9}  verdict")
    for k, lab in enumerate(labels):
        print(
            f"{lab:<12} {classes[k]:<5} {summary.baseline_means[k]:>12.4g} {summary.candidate_means[k]:>12.4g}"
            f" {summary.adjusted[k]:>9.3g}  {summary.verdicts[k]}"
        )
    print(f"w/t/l  HS {cols[0]}  MS {cols[1]}  LS {cols[2]}  total {summary.wtl()}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(ns) -> int:
    d = Path(ns.dir)
    records = load_records(d) if d.is_dir() else []
    if not records:
        print(f"msas report: no run records in {d}", file=sys.stderr)
        return EXIT_USAGE
    cells = {}
    for r in records:
        cells.setdefault((r.suite, r.mode), []).append(r)
    for (suite, mode), recs in sorted(cells.items()):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["task", "fe", "mean_best_y", "std_best_y", "runs"])
        for j in range(recs[0].n_tasks):
            traces = np.array([r.traces[j] for r in recs])
            mean, std = traces.mean(axis=0), traces.std(axis=0)
            for fe in range(traces.shape[1]):
                w.writerow([j, fe + 1, fmt(mean[fe]), fmt(std[fe]), len(recs)])
        atomic_write(d / f"report_convergence_{suite}_{mode}.csv", buf.getvalue())
        atomic_write(d / f"report_transfer_{suite}_{mode}.csv", matrix_csv(transfer_rate_matrix(recs)))
        print(f"{suite} {mode}: {len(recs)} runs reported")
    return EXIT_OK


def cmd_suites(ns) -> int:
    for sid in SUITE_IDS:
        info = suite_info(sid)
        tasks = ", ".join(f"{t['fn_id']} [{t['lower']:g},{t['upper']:g}]^{info['dim']}" for t in info["tasks"])
        groups = " ".join("{" + ",".join(f"T{i + 1}" for i in g) + "}" for g in info["groups"])
        print(f"{sid:<7} {info['similarity_class']} beta={info['beta']:g}  groups {groups}  {tasks}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msas", description="Multi-task surrogate-assisted search experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run (suite x mode x seed) cells and export records")
    r.add_argument("--spec", help="key=value experiment file")
    r.add_argument("--suite", help="comma-separated suite ids, e.g. mtop1,matop2")
    r.add_argument("--mode", help="comma-separated modes: baseline,bckt")
    r.add_argument("--runs", type=int)
    r.add_argument("--seed", type=int, help="seed of the first run; run r uses seed + r")
    r.add_argument("--n-init", dest="n_init", type=int)
    r.add_argument("--fe-max", dest="fe_max", type=int)
    r.add_argument("--delta", type=int, help="transfer interval in real evaluations")
    r.add_argument("--sigma-i", dest="sigma_i", type=float)
    r.add_argument("--kappa", type=float)
    r.add_argument("--suite-seed", dest="suite_seed", type=int, help="benchmark construction seed")
    r.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./results)")
    r.add_argument("--jobs", type=int, help="parallel worker processes (across runs only)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="win/tie/loss of bckt against baseline")
    c.add_argument("dir")
    c.add_argument("--alpha", type=float, default=0.05)
    c.add_argument("--no-holm", action="store_true", help="skip the Holm correction")
    c.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="plot-ready convergence and transfer-rate CSVs")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report)

    s = sub.add_parser("suites", help="list benchmark suites")
    s.set_defaults(func=cmd_suites)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
