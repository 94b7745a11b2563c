import json
import subprocess
import sys

import pytest

from svilab.cli import load_config, load_problem, main, run_scenario
from svilab.cli import ConfigError


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


MINIMAL = {
    "problem": {"kind": "builtin", "name": "robust-affine"},
    "base_point": {"p": [0.0], "x": [0.0]},
    "analyses": [],
}


# --- config loading -----------------------------------------------------------

def test_shipped_configs_resolve_by_name():
    for name in ("paper_example.json", "robust_affine.json"):
        cfg = load_config(name)
        assert cfg["schema"] == "svi-lab/1"


def test_missing_config_is_a_config_error():
    with pytest.raises(ConfigError):
        load_config("no-such-config.json")


def test_schema_violation_detected(tmp_path):
    path = write_config(tmp_path, {"problem": {"kind": "builtin"}, "analyses": []})
    with pytest.raises(ConfigError):
        load_config(path)


def test_unknown_analysis_name_rejected(tmp_path):
    payload = dict(MINIMAL, analyses=[{"name": "frobnicate"}])
    path = write_config(tmp_path, payload)
    with pytest.raises(ConfigError):
        load_config(path)


def test_builtin_m_overrides_accepted():
    for m in (1, 2, 3, 4):
        prob = load_problem({"kind": "builtin", "name": "paper-sec3-example", "m": m})
        assert prob.map.m == m


def test_unknown_builtin_exits_2(tmp_path):
    payload = dict(MINIMAL, problem={"kind": "builtin", "name": "mystery"})
    path = write_config(tmp_path, payload)
    assert run_scenario(path, out_dir=str(tmp_path / "out")) == 2


def test_generator_set_literal():
    from svilab import PolyhedralCone
    from svilab.cli import load_generator_set

    cone = PolyhedralCone.orthant(2)
    S = load_generator_set({"points": [[1.0, 2.0]], "recession": "C"}, cone)
    assert S.recession is cone
    S2 = load_generator_set({"points": [[1.0, 2.0], [0.0, 0.0]]}, cone)
    assert S2.recession is None and S2.n_points == 2
    with pytest.raises(ConfigError):
        load_generator_set({"points": [[1.0]], "recession": "other"}, cone)


def test_inline_affine_problem_loads():
    prob = load_problem({
        "kind": "affine", "m": 1, "n_p": 1, "n_x": 1,
        "scenarios": [{"A": [[-1.0]], "B": [[1.0]], "c": [0.0]},
                      {"A": [[-1.0]], "B": [[1.0]], "c": [1.0]}],
        "cone": "orthant", "recession": False,
    })
    assert prob.map.kind == "affine"
    assert len(prob.map.scenarios) == 2


# --- running ---------------------------------------------------------------------

def test_empty_analysis_list_exits_zero(tmp_path):
    path = write_config(tmp_path, MINIMAL)
    out = tmp_path / "out"
    assert run_scenario(path, out_dir=str(out)) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["analyses"] == []
    assert report["violations_total"] == 0


def test_robust_affine_run_is_clean(tmp_path):
    assert run_scenario("robust_affine.json", out_dir=str(tmp_path / "out")) == 0


def test_gder_without_fan_exits_2(tmp_path):
    payload = dict(MINIMAL, analyses=[{"name": "gder"}])
    path = write_config(tmp_path, payload)
    assert run_scenario(path, out_dir=str(tmp_path / "out")) == 2


def test_lip_lsc_without_ell_exits_2(tmp_path):
    payload = dict(MINIMAL, analyses=[{"name": "lip-lsc"}])
    path = write_config(tmp_path, payload)
    assert run_scenario(path, out_dir=str(tmp_path / "out")) == 2


def test_single_analysis_subcommand_emits_record(tmp_path, capsys):
    code = main(["slope", "robust_affine.json"])
    record = json.loads(capsys.readouterr().out)
    assert code == 0
    assert set(record) >= {"value", "witness", "radii", "K", "seed"}
    assert record["value"] == pytest.approx(1.0, abs=0.03)


def test_single_analysis_subcommand_missing_from_config():
    # paper_example.json carries no lip-lsc analysis
    assert main(["lip-lsc", "paper_example.json"]) == 2


def test_gder_csv_columns(tmp_path):
    out = tmp_path / "out"
    run_scenario("robust_affine.json", out_dir=str(out))
    csvs = sorted(out.glob("*_gder.csv"))
    assert csvs
    header = csvs[0].read_text().splitlines()[0]
    assert header == "p_dir,v_dir,inner,sampled,outer,min_ratio"


def test_numeric_failure_exits_3(tmp_path, capsys):
    # schema-valid config whose analysis blows up numerically (sigma <= 0)
    payload = dict(MINIMAL, analyses=[{"name": "errorbound", "sigma": -1.0}])
    path = write_config(tmp_path, payload)
    assert run_scenario(path, out_dir=str(tmp_path / "out")) == 3


def test_threads_produce_identical_report(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_scenario("robust_affine.json", out_dir=str(out1), threads=1)
    run_scenario("robust_affine.json", out_dir=str(out2), threads=4)
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_console_entry_point_lists_builtins():
    proc = subprocess.run([sys.executable, "-m", "svilab.cli", "list"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "paper-sec3-example" in proc.stdout
    assert "robust-affine" in proc.stdout
