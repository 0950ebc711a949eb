"""Command line behavior: artifacts, exit codes, config handling."""

import numpy as np
import pytest

from dcfsim import csvio
from dcfsim.cli import main
from dcfsim.deltaq import read_cdf_csv
from dcfsim.engine import TransientResult


def run(*argv):
    return main(list(argv))


def test_transient_writes_expected_files(tmp_path):
    code = run(
        "transient", "--stations", "1,2", "--reps", "50",
        "--seed", "7", "--out", str(tmp_path),
    )
    assert code == 0
    for name in ("tte_samples_n1.csv", "tte_cdf_n1.csv", "tte_samples_n2.csv",
                 "tte_cdf_n2.csv", "transient_summary.csv"):
        assert (tmp_path / name).exists()
    rows = csvio.read_transient_summary_csv(tmp_path / "transient_summary.csv")
    assert [r[0] for r in rows] == [1, 2]
    assert all(r[1] == 50 for r in rows)
    # dump and CDF describe the same samples
    samples = csvio.read_transient_dump(tmp_path / "tte_samples_n1.csv")
    dist = read_cdf_csv(tmp_path / "tte_cdf_n1.csv")
    assert dist.mean_delivered() == pytest.approx(samples.mean())


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(
            "transient", "--stations", "2", "--reps", "40",
            "--seed", "123", "--out", str(out),
        ) == 0
    assert (a / "tte_samples_n2.csv").read_bytes() == (b / "tte_samples_n2.csv").read_bytes()
    assert (a / "transient_summary.csv").read_bytes() == (b / "transient_summary.csv").read_bytes()


def test_ergodic_summary_and_dump(tmp_path):
    code = run(
        "ergodic", "--stations", "2", "--outcomes", "300",
        "--seed", "11", "--out", str(tmp_path),
    )
    assert code == 0
    [row] = csvio.read_ergodic_summary_csv(tmp_path / "ergodic_summary.csv")
    n, observed, delivered, lost, loss_fraction, mean_lat, p90, mbps = row
    assert n == 2 and observed >= 300
    assert delivered + lost == observed
    assert loss_fraction == pytest.approx(lost / observed)
    assert 0.0 < mbps < 1.0
    _, sids, lats = csvio.read_ergodic_dump(tmp_path / "ergodic_samples_n2.csv")
    assert sids.size == observed
    assert np.isnan(lats).sum() == lost


def test_ergodic_window_sweep_mode(tmp_path):
    code = run(
        "ergodic", "--stations", "2", "--outcomes", "400",
        "--windows", "16,64", "--seed", "13", "--out", str(tmp_path),
    )
    assert code == 0
    rows = csvio.read_window_sweep_csv(tmp_path / "ergodic_window_sweep_n2.csv")
    assert [r.initial_window for r in rows] == [16, 64]


def test_bound_command(tmp_path):
    code = run(
        "bound", "--stations", "1..3", "--reps", "60",
        "--seed", "3", "--out", str(tmp_path),
    )
    assert code == 0
    rows = csvio.read_bounds_csv(tmp_path / "bounds.csv")
    assert [b.n_stations for _, b in rows] == [1, 2, 3]
    assert all(size == 1023 for size, _ in rows)


def test_random_seed_is_announced(tmp_path, capsys):
    code = run("transient", "--stations", "1", "--reps", "3", "--out", str(tmp_path))
    assert code == 0
    assert "chosen at random" in capsys.readouterr().out


def test_config_file_supplies_settings(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "experiment = transient\n"
        "stations = 1\n"
        "reps = 20\n"
        "seed = 5\n"
        f"out = {tmp_path}\n"
        "slot_time = 20\n"
    )
    assert run("transient", "--config", str(cfg)) == 0
    rows = csvio.read_transient_summary_csv(tmp_path / "transient_summary.csv")
    assert rows[0][1] == 20


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("reps = 20\nseed = 5\n")
    assert run(
        "transient", "--config", str(cfg), "--stations", "1",
        "--reps", "7", "--out", str(tmp_path),
    ) == 0
    rows = csvio.read_transient_summary_csv(tmp_path / "transient_summary.csv")
    assert rows[0][1] == 7


def test_config_experiment_mismatch(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("experiment = ergodic\n")
    assert run("transient", "--config", str(cfg), "--out", str(tmp_path)) == 1
    assert "experiment" in capsys.readouterr().err


def test_config_unknown_key_names_the_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("stations = 2\nslot_tiem = 20\n")
    assert run("transient", "--config", str(cfg), "--out", str(tmp_path)) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "slot_tiem" in err


def test_missing_config_file(tmp_path, capsys):
    assert run("transient", "--config", str(tmp_path / "absent.cfg")) == 1
    assert "cannot read" in capsys.readouterr().err


def test_usage_errors_exit_one():
    assert run() == 1
    assert run("transient", "--stations", "x") == 1
    assert run("anomaly", "--stations", "2,3") == 1  # single count only


def test_runtime_errors_exit_two(tmp_path):
    # zero stations passes parsing but the engine rejects it
    assert run("transient", "--stations", "0", "--reps", "5",
               "--seed", "1", "--out", str(tmp_path)) == 2
    # invalid parameter combination caught by validation
    assert run("transient", "--stations", "1", "--reps", "5", "--packet-size", "-4",
               "--seed", "1", "--out", str(tmp_path)) == 2


def test_oracle_check_passes(tmp_path):
    code = run(
        "oracle-check", "--reps", "400", "--seed", "19", "--out", str(tmp_path)
    )
    assert code == 0
    rows = csvio.read_oracle_report_csv(tmp_path / "oracle_check.csv")
    assert [r[0] for r in rows] == ["transient-tte-n1", "transient-tte-n2"]
    assert all(r[4] == "pass" for r in rows)
    assert (tmp_path / "oracle_tte_exact_n1.csv").exists()
    assert (tmp_path / "oracle_tte_mc_n2.csv").exists()


def test_oracle_check_detects_divergence(tmp_path, monkeypatch):
    # shift every sampled TTE by a slot so the comparison must fail
    import dcfsim.cli as cli

    original = cli.engine.run_transient

    def skewed(*args, **kwargs):
        res = original(*args, **kwargs)
        return TransientResult(res.time_to_empty_us + 50.0, res.replications)

    monkeypatch.setattr(cli.engine, "run_transient", skewed)
    code = run("oracle-check", "--reps", "400", "--seed", "19", "--out", str(tmp_path))
    assert code == 3
    rows = csvio.read_oracle_report_csv(tmp_path / "oracle_check.csv")
    assert any(r[4] == "fail" for r in rows)


def test_chart_emission(tmp_path):
    code = run(
        "transient", "--stations", "1", "--reps", "20",
        "--seed", "2", "--out", str(tmp_path), "--chart",
    )
    assert code == 0
    assert (tmp_path / "tte_cdf.svg").stat().st_size > 0


def test_anomaly_command(tmp_path):
    code = run(
        "anomaly", "--preset", "baseline-802.11n", "--stations", "3",
        "--reps", "50", "--fast-rates", "11,144", "--seed", "5",
        "--out", str(tmp_path),
    )
    assert code == 0
    rows = csvio.read_anomaly_csv(tmp_path / "anomaly.csv")
    assert len(rows) == 6  # two fast rates, three stations each
    assert {r[0] for r in rows} == {11.0, 144.0}


def test_tte_compare_command(tmp_path):
    code = run(
        "tte-compare", "--stations", "2", "--reps", "30",
        "--seed", "5", "--out", str(tmp_path),
    )
    assert code == 0
    for label in ("baseline", "rts-cts", "amsdu"):
        assert (tmp_path / f"tte_compare_{label}.csv").exists()


def test_convergence_command(tmp_path):
    code = run(
        "convergence", "--stations", "2", "--mode", "transient",
        "--runs", "4", "--sizes", "20,40", "--seed", "5", "--out", str(tmp_path),
    )
    assert code == 0
    summary = csvio.read_convergence_summary_csv(tmp_path / "convergence_summary.csv")
    assert [row[2] for row in summary] == [20, 40]
    raw = csvio.read_convergence_raw_csv(tmp_path / "convergence_raw.csv")
    assert len(raw) == 8


def test_rts_heatmap_command(tmp_path):
    code = run(
        "rts-heatmap", "--stations", "2", "--sizes", "500,2000",
        "--reps", "60", "--seed", "5", "--out", str(tmp_path),
    )
    assert code == 0
    cells = csvio.read_heatmap_csv(tmp_path / "rts_heatmap.csv")
    assert [(n, s) for n, s, _ in cells] == [(2, 500), (2, 2000)]
