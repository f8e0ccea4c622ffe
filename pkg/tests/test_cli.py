import json

import numpy as np
import pytest

from qcorr.cli import main
from qcorr.channels import load_channel
from qcorr.states import load_state, random_ensemble, save_ensemble, save_state, werner_state


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_rank_werner(capsys):
    code, out, _ = run(capsys, "rank", "--state", "werner:1/3")
    data = json.loads(out)
    assert code == 0
    assert data["result"]["rank_l"] == 4 and data["result"]["witness_fired"]
    assert data["config"]["state"] == "werner:1/3"


def test_rank_from_file(capsys, tmp_path):
    path = tmp_path / "w.json"
    save_state(werner_state(0.2), path)
    out_path = tmp_path / "r.json"
    code, out, _ = run(capsys, "rank", "--state", str(path), "--out", str(out_path))
    assert code == 0
    assert json.loads(out_path.read_text()) == json.loads(out)


def test_discord_command(capsys):
    code, out, _ = run(capsys, "discord", "--state", "rho_l")
    res = json.loads(out)["result"]
    assert code == 0 and abs(res["value"] - 0.201752) <= 1e-5
    assert "optimizer_trace" not in res
    code, out, _ = run(capsys, "discord", "--state", "rho_l", "--subsystem", "B", "--trace")
    res = json.loads(out)["result"]
    assert res["value"] <= 1e-6 and "optimizer_trace" in res


def test_input_errors(capsys, tmp_path):
    assert run(capsys, "rank", "--state", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "rank", "--state", "werner:1.5")[0] == 2
    assert run(capsys, "rank", "--state", "werner:abc")[0] == 2
    bad = tmp_path / "bad.json"
    m = np.eye(4) / 4
    bad.write_text(json.dumps({
        "dim_a": 2, "dim_b": 2,
        "matrix": [[[float(m[i, j]), 0.1 if (i, j) == (0, 1) else 0.0] for j in range(4)] for i in range(4)],
    }))
    code, _, err = run(capsys, "rank", "--state", str(bad))
    assert code == 2 and "Hermitian" in err
    assert run(capsys, "classify", "--random", "5")[0] == 2
    assert run(capsys, "classify")[0] == 2
    assert run(capsys, "create-local", "--ensemble", "rho_l")[0] == 2
    assert run(capsys, "sweep", "--step", "0")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["rank"])
    assert exc.value.code == 2


def test_create_local(capsys, tmp_path):
    code, out, _ = run(capsys, "create-local", "--ensemble", "rho_l", "--out", str(tmp_path))
    assert code == 0
    ver = json.loads((tmp_path / "verification.json").read_text())["result"]
    assert ver["reassembly_ok"] and ver["seed_zero_discord_a"] and ver["seed_zero_discord_b"]
    assert not ver["output_zero_discord_a"]
    for name in ver["files"]:
        assert (tmp_path / name).exists()
    assert load_channel(tmp_path / "channel_a.json").completeness_residual <= 1e-10
    assert np.allclose(load_state(tmp_path / "output.json").matrix, load_state(tmp_path / "target.json").matrix)


def test_create_local_domain_violation(capsys, tmp_path):
    path = tmp_path / "e.json"
    save_ensemble(random_ensemble(2, 2, 3, seed=0), path)
    code, _, err = run(capsys, "create-local", "--ensemble", str(path), "--out", str(tmp_path / "o"))
    assert code == 3 and "d_min" in err


def test_classify_single(capsys):
    code, out, _ = run(capsys, "classify", "--state", "rho_l", "--ensemble", "rho_l")
    res = json.loads(out)["result"]
    assert code == 0
    assert res["region"] == "quantum_low_l" and res["locally_producible_hint"] == "yes_constructed"


def test_classify_random(capsys, tmp_path):
    csv_path, summary = tmp_path / "mc.csv", tmp_path / "s.json"
    args = ["classify", "--random", "20", "--dims", "2", "2", "--seed", "9", "--out", str(csv_path)]
    args += ["--summary", str(summary)]
    code, out, _ = run(capsys, *args)
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == "sample_id,rank_l,discord_a,discord_b,region,min_sv_gap"
    assert len(lines) == 22
    assert json.loads(summary.read_text())["result"]["counts"]["quantum_high_l"] == 20
    first = csv_path.read_text()
    run(capsys, *args)
    assert csv_path.read_text() == first


def test_sweep(capsys, tmp_path):
    path = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--family", "werner", "--start", "0", "--stop", "1", "--step", "1/30",
                     "--out", str(path))
    lines = path.read_text().splitlines()
    assert code == 0
    assert lines[1] == "z,discord,rank_l,witness_fired"
    assert len(lines) == 2 + 31
    row = lines[2 + 10].split(",")
    assert abs(float(row[0]) - 1 / 3) < 1e-9 and abs(float(row[1]) - 0.125815) <= 1e-5
    assert row[2:] == ["4", "true"]


def test_monotonicity(capsys):
    code, out, _ = run(capsys, "monotonicity", "--samples", "50", "--dims", "2", "3", "--seed", "1")
    res = json.loads(out)["result"]
    assert code == 0 and res["violations"] == 0 and res["trials"] == 50
    assert res["reference_phi_on_rho_c"] == [2, 2]
    code, out, _ = run(capsys, "monotonicity", "--samples", "5", "--channel", "identity")
    assert code == 0 and json.loads(out)["result"]["unchanged"] == 5
    assert run(capsys, "monotonicity", "--samples", "5", "--dims", "3", "3", "--channel", "phi")[0] == 2


def test_count(capsys):
    code, out, _ = run(capsys, "count", "--dims", "2", "2", "--s", "2", "--check-max-dim", "10")
    res = json.loads(out)["result"]
    assert code == 0
    assert (res["params_class"], res["params_full"], res["f_value"]) == (13, 15, 2)
    assert res["measure_zero"] and res["f_monotone"]
