import json

import numpy as np
import pytest

from spreadcpm.cli import main
from spreadcpm.reports import read_csv, read_iq

BER_YAML = """
sweep: {rate_n: [3], es_n0_db: [-3.0, 0.0]}
demod: {strategies: [joint-noncoherent, separate-then-majority]}
message_bits: 20
batch: 8
"""


def test_modulate_bits(tmp_path, capsys):
    assert main(["modulate", "--bits", "10110", "--out", str(tmp_path), "--name", "x.iq"]) == 0
    data = read_iq(tmp_path / "x.iq")
    assert data.size == 25
    assert np.allclose(np.abs(data), 1, atol=1e-6)
    side = json.loads((tmp_path / "x.iq.json").read_text())
    assert side["bits"] == "10110" and side["sample_rate"] == 5
    assert str(tmp_path / "x.iq") in capsys.readouterr().out


def test_modulate_spread_random(tmp_path):
    assert main(["modulate", "--random-bits", "12", "--rate-n", "4", "--seed", "3",
                 "--out", str(tmp_path)]) == 0
    assert read_iq(tmp_path / "signal.iq").size == 12 * 4 * 5


def test_distance_scan(tmp_path):
    assert main(["distance-scan", "--n-min", "1", "--n-max", "4", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "distance_all_sequences.csv")
    assert [r["rate_n"] for r in rows] == [1, 2, 3, 4]


def test_bounds(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("sweep: {es_n0_db: [-6.0]}\n")
    assert main(["bounds", "--config", str(cfg), "--n-max", "9", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "bounds.csv")
    assert [r["rate_n"] for r in rows] == [1, 3, 5, 7, 9]


def test_ber_sweep_thread_invariant(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(BER_YAML)
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}"
        assert main(["ber-sweep", "--config", str(cfg), "--trials", "24", "--seed", "11",
                     "--threads", threads, "--out", str(out)]) == 0
        outs.append((out / "ber.csv").read_bytes())
    assert outs[0] == outs[1]
    rows = read_csv(tmp_path / "t1" / "ber.csv")
    assert len(rows) == 4 and all(r["seed"] == 11 and r["trials"] == 24 for r in rows)
    meta = json.loads((tmp_path / "t1" / "ber.meta.json").read_text())
    assert meta["spec"]["master_seed"] == 11
    assert len(meta["es_n0_conversions"]) == 2


def test_ber_sweep_timing_column(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(BER_YAML)
    assert main(["ber-sweep", "--config", str(cfg), "--trials", "8", "--timing",
                 "--out", str(tmp_path)]) == 0
    assert all(r["wall_time"] > 0 for r in read_csv(tmp_path / "ber.csv"))


def test_psd(tmp_path):
    assert main(["psd", "--scheme", "uncoded", "--symbols", "400", "--tapers", "4",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "psd_uncoded.csv")
    assert max(r["density_db"] for r in rows) == 0.0
    assert (tmp_path / "psd_uncoded.meta.json").exists()


def test_bad_config_reports_error(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("demod: {strategies: [nope]}\n")
    assert main(["ber-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "ber.csv").exists()


def test_bad_threads():
    assert main(["bounds", "--threads", "0"]) == 2


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
