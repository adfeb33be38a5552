import json
import os

import pytest

from evacnet.cli import compare_profiles, main, SlotMismatch


def write_config(tmp_path, **overrides):
    config = {
        "plan": "tworoute",
        "cell_size": 3.0,
        "modes": {"ideal": True, "shortest": True},
    }
    config.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(config))
    return str(path)


def read(path):
    with open(path, "rb") as handle:
        return handle.read()


def test_validate_bundled_plans(capsys):
    assert main(["validate", "compact4exit"]) == 0
    assert main(["validate", "tworoute"]) == 0
    assert "ok:" in capsys.readouterr().out


def test_validate_bad_plan(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "rooms": [], "doors": []}')
    assert main(["validate", str(bad)]) == 1
    assert "invalid" in capsys.readouterr().out


def test_unknown_plan_path_diagnostic(tmp_path, capsys):
    cfg = write_config(tmp_path, plan="/nope/missing.json")
    assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 1
    assert "/nope/missing.json" in capsys.readouterr().out


def test_config_without_modes_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, modes={})
    assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 1


def test_run_writes_profiles_and_is_deterministic(tmp_path):
    cfg = write_config(tmp_path)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", cfg, "--out", str(out1), "--seed", "3"]) == 0
    assert main(["run", cfg, "--out", str(out2), "--seed", "3"]) == 0
    for name in ("ideal_profile.csv", "shortest_profile.csv"):
        assert read(out1 / name) == read(out2 / name)
    header = read(out1 / "ideal_profile.csv").decode().splitlines()[0]
    assert header == "tau,evacuees,cpu_seconds"


def test_run_unevacuable_exits_two(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        risk={"static": [{"slot": 0, "exit_index": 0},
                          {"slot": 0, "exit_index": 1}]},
    )
    code = main(["run", cfg, "--out", str(tmp_path / "out")])
    assert code == 2
    assert "UNEVACUABLE" in capsys.readouterr().out


def test_run_qn_saturation_exits_two(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        modes={"qn": {"arch": "centralized", "resolution": "HR", "epochs": 100}},
    )
    code = main(["run", cfg, "--out", str(tmp_path / "out")])
    assert code == 2
    out = capsys.readouterr().out
    assert "SATURATION" in out
    rows = read(tmp_path / "out" / "qn.csv").decode().splitlines()
    assert rows[0] == "arch,resolution,mean_response_s,saturated,rho_controller"
    assert rows[1].split(",")[3] == "1"


def test_compare_merges_and_pads(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    main(["run", cfg, "--out", str(out), "--seed", "1"])
    merged = tmp_path / "merged.csv"
    assert main(["compare", str(out / "ideal_profile.csv"),
                 str(out / "shortest_profile.csv"), "--out", str(merged)]) == 0
    lines = read(merged).decode().splitlines()
    assert lines[0] == "tau,ideal_profile,shortest_profile"
    last = lines[-1].split(",")
    assert float(last[1]) == float(last[2])   # both padded to full counts


def test_compare_single_input_passthrough(tmp_path):
    cfg = write_config(tmp_path, modes={"ideal": True})
    out = tmp_path / "out"
    main(["run", cfg, "--out", str(out)])
    merged = tmp_path / "one.csv"
    assert main(["compare", str(out / "ideal_profile.csv"),
                 "--out", str(merged)]) == 0
    assert read(merged).decode().splitlines()[0] == "tau,ideal_profile"


def test_compare_slot_mismatch(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for path, slot in ((a, 2.5), (b, 1.25)):
        path.write_text("tau,evacuees,cpu_seconds\n1,5,0.0\n")
        meta = str(path).rsplit(".", 1)[0] + ".meta.json"
        with open(meta, "w") as handle:
            json.dump({"slot_seconds": slot}, handle)
    assert main(["compare", str(a), str(b), "--out", str(tmp_path / "m.csv")]) == 1
    assert "slot" in capsys.readouterr().out.lower()


def test_compare_profiles_api_raises(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for path, slot in ((a, 2.5), (b, 1.25)):
        path.write_text("tau,evacuees,cpu_seconds\n1,5,0.0\n")
        meta = str(path).rsplit(".", 1)[0] + ".meta.json"
        with open(meta, "w") as handle:
            json.dump({"slot_seconds": slot}, handle)
    with pytest.raises(SlotMismatch):
        compare_profiles([str(a), str(b)], str(tmp_path / "m.csv"))


def test_door_rate_presets(tmp_path):
    cfg = write_config(tmp_path, door_rate_preset="pessimistic",
                       modes={"ideal": True})
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == 0
    meta = json.loads(read(out / "ideal_profile.meta.json"))
    assert meta["slot_seconds"] == 2.5
    cfg_bad = write_config(tmp_path, door_rate_preset="mystery")
    assert main(["run", cfg_bad, "--out", str(tmp_path / "o2")]) == 1


def test_measured_timings_flag(tmp_path):
    cfg = write_config(tmp_path, modes={"ideal": True})
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--timings", "measured"]) == 0
    rows = read(out / "ideal_profile.csv").decode().splitlines()[1:]
    assert any(float(r.split(",")[2]) > 0 for r in rows)
