import csv
import hashlib

import numpy as np
import pytest

from msas.cli import ExperimentSpec, SpecError, main, parse_spec_text
from msas.harness import MsasConfig, RunRecord, load_records, write_record

TOY_FLAGS = ["--fe-max", "60", "--runs", "3"]


def digest(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())}


@pytest.fixture(scope="module")
def toy_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    rc = main(["run", "--suite", "mtop1", "--mode", "baseline,bckt", "--seed", "7", "--out", str(out)] + TOY_FLAGS)
    assert rc == 0
    return out


def fake_record(suite, mode, seed, finals, n_fe=51):
    traces = [list(np.linspace(f + 5.0, f, n_fe)) for f in finals]
    return RunRecord(
        suite=suite, mode=mode, seed=seed, config=MsasConfig(fe_max=n_fe, mode=mode, seed=seed),
        traces=traces, events=[["init"] * 50 + ["internal"] * (n_fe - 50) for _ in finals],
        final_best=list(finals), fe_counts=[n_fe] * len(finals),
    )


def test_run_writes_every_cell(toy_dir, capsys):
    csvs = sorted(p.name for p in toy_dir.glob("mtop1_*_*.csv"))
    assert csvs == [f"mtop1_{m}_{s}.csv" for m in ("baseline", "bckt") for s in (7, 8, 9)]
    recs = load_records(toy_dir)
    assert len(recs) == 6
    assert all(r.fe_counts == [60, 60] for r in recs)
    assert (toy_dir / "summary.csv").exists()


def test_run_is_deterministic(toy_dir, tmp_path):
    rc = main(["run", "--suite", "mtop1", "--mode", "bckt", "--seed", "8", "--runs", "1", "--fe-max", "60", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "mtop1_bckt_8.csv").read_bytes() == (toy_dir / "mtop1_bckt_8.csv").read_bytes()


def test_run_prints_one_line_per_cell(tmp_path, capsys):
    main(["run", "--suite", "mtop1", "--mode", "baseline", "--runs", "2", "--fe-max", "52", "--out", str(tmp_path)])
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("mtop1")]
    assert len(lines) == 2


def test_run_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["run", "--suite", "mtop1", "--mode", "bckt", "--runs", "2", "--fe-max", "55"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--out", str(b), "--jobs", "2"]) == 0
    for name in ("mtop1_bckt_0.csv", "mtop1_bckt_1.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_matop5_task_count(tmp_path):
    assert main(["run", "--suite", "matop5", "--mode", "baseline", "--runs", "1", "--fe-max", "100", "--out", str(tmp_path)]) == 0
    (rec,) = load_records(tmp_path)
    assert rec.n_tasks == 5 and all(len(t) == 100 for t in rec.traces)


def test_missing_suite_writes_nothing(tmp_path, capsys):
    out = tmp_path / "none"
    assert main(["run", "--mode", "bckt", "--out", str(out)]) == 2
    assert main(["run", "--suite", "mtop42", "--out", str(out)]) == 2
    assert not out.exists()
    assert "unknown suite" in capsys.readouterr().err


def test_bad_overrides_exit_2(tmp_path):
    assert main(["run", "--suite", "mtop1", "--fe-max", "10", "--out", str(tmp_path / "x")]) == 2
    assert main(["run", "--suite", "mtop1", "--mode", "greedy", "--out", str(tmp_path / "x")]) == 2
    assert not (tmp_path / "x").exists()


def test_runtime_failure_exit_1(tmp_path, monkeypatch):
    import msas.cli

    def broken(*a, **k):
        raise RuntimeError("evaluation failed on task 0")

    monkeypatch.setattr(msas.cli, "run_cell", broken)
    assert main(["run", "--suite", "mtop1", "--runs", "1", "--fe-max", "52", "--out", str(tmp_path)]) == 1


def test_spec_file_and_override(tmp_path):
    spec = tmp_path / "exp.txt"
    spec.write_text("# desk run\nsuite = mtop1\nmode = baseline\nruns = 1\nfe_max = 70  # short\nout = " + str(tmp_path / "o") + "\n")
    assert main(["run", "--spec", str(spec), "--fe-max", "52"]) == 0
    (rec,) = load_records(tmp_path / "o")
    assert rec.config.fe_max == 52


def test_spec_unknown_key(tmp_path):
    spec = tmp_path / "exp.txt"
    spec.write_text("suite = mtop1\ncolour = blue\n")
    assert main(["run", "--spec", str(spec)]) == 2
    with pytest.raises(SpecError):
        parse_spec_text("suite mtop1")
    with pytest.raises(SpecError):
        parse_spec_text("runs = 1\nruns = 2")


def test_spec_round_trip():
    spec = ExperimentSpec(suites=["mtop1", "matop6"], modes=["bckt"], runs=4, seed=9, fe_max=120, sigma_i=0.1, kappa=1.5, out="r")
    again = ExperimentSpec.from_text(spec.to_text())
    assert again == spec


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("MSAS_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--suite", "mtop1", "--mode", "baseline", "--runs", "1", "--fe-max", "51"]) == 0
    assert (tmp_path / "env" / "mtop1_baseline_0.csv").exists()


def test_suites_listing(capsys):
    assert main(["suites"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 15
    assert out[0].startswith("mtop1") and "Ackley [-32,32]^10" in out[0]


# --- compare ----------------------------------------------------------------------


def write_pairs(d, shift, seeds=range(10), suite="mtop2"):
    rng = np.random.default_rng(0)
    for s in seeds:
        finals = rng.random(2) * 3
        write_record(fake_record(suite, "bckt", s, finals), d)
        write_record(fake_record(suite, "baseline", s, finals + shift), d)


def read_csv(p):
    with open(p, newline="") as fh:
        return list(csv.DictReader(fh))


def test_compare_self_all_ties(tmp_path):
    write_pairs(tmp_path, 0.0)
    assert main(["compare", str(tmp_path)]) == 0
    assert [r["verdict"] for r in read_csv(tmp_path / "comparison.csv")] == ["tie", "tie"]


def test_compare_shifted_all_wins(tmp_path, capsys):
    write_pairs(tmp_path, 10.0)
    assert main(["compare", str(tmp_path), "--alpha", "0.05"]) == 0
    assert [r["verdict"] for r in read_csv(tmp_path / "comparison.csv")] == ["win", "win"]
    (row,) = read_csv(tmp_path / "comparison_wtl.csv")
    assert row["HS"] == "2/0/0" and row["summary"] == "2/0/0"
    assert "w/t/l" in capsys.readouterr().out


def test_compare_tiny_alpha_ties(toy_dir):
    assert main(["compare", str(toy_dir), "--alpha", "1e-9"]) == 0
    assert {r["verdict"] for r in read_csv(toy_dir / "comparison.csv")} == {"tie"}


def test_compare_unpaired(tmp_path, capsys):
    write_pairs(tmp_path, 1.0, seeds=range(4))
    (tmp_path / "mtop2_bckt_2.json").unlink()
    assert main(["compare", str(tmp_path)]) == 2
    assert "mtop2_bckt_2" in capsys.readouterr().err
    assert not (tmp_path / "comparison.csv").exists()


def test_compare_does_not_touch_inputs(tmp_path):
    write_pairs(tmp_path, 3.0)
    before = digest(tmp_path)
    main(["compare", str(tmp_path)])
    after = digest(tmp_path)
    assert {k: v for k, v in after.items() if k in before} == before


# --- report -----------------------------------------------------------------------


def test_report_means_and_idempotence(toy_dir):
    assert main(["report", str(toy_dir)]) == 0
    first = digest(toy_dir)
    assert main(["report", str(toy_dir)]) == 0
    assert digest(toy_dir) == first

    recs = [r for r in load_records(toy_dir) if r.mode == "bckt"]
    rows = read_csv(toy_dir / "report_convergence_mtop1_bckt.csv")
    for row in rows:
        j, fe = int(row["task"]), int(row["fe"])
        expected = np.mean([r.traces[j][fe - 1] for r in recs])
        assert float(row["mean_best_y"]) == pytest.approx(expected, rel=1e-14, abs=1e-14)
    assert len(rows) == 2 * 60


def test_report_baseline_transfer_zero(toy_dir):
    main(["report", str(toy_dir)])
    rows = read_csv(toy_dir / "report_transfer_mtop1_baseline.csv")
    assert all(float(v) == 0.0 for r in rows for k, v in r.items() if k != "source")


def test_report_empty_dir(tmp_path):
    assert main(["report", str(tmp_path)]) == 2
    assert main(["compare", str(tmp_path)]) == 2
