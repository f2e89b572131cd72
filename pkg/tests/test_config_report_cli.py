import json
import math
from dataclasses import replace
from pathlib import Path

import pytest
import yaml

from phasegeom import cli
from phasegeom import config as C
from phasegeom import report as R
from phasegeom.runner import NoSamplesError, run

GOLDEN = Path(__file__).parent / "golden"
CONFIGS = Path(__file__).parent.parent / "configs"


def small(**kw) -> C.RunConfig:
    data = {"metric": "minkowski", "sampling": {"count": 3, "seed": 5}, "suites": ["kinematics", "structures"]}
    data.update(kw)
    return C.from_mapping(data)


# -- configuration ---------------------------------------------------------------------------

def test_defaults_and_overrides():
    cfg = C.RunConfig()
    C.validate(cfg)
    over = cfg.with_overrides(metric="schwarzschild", seed=4, samples=7, tol=1e-7, c=2.0, suites=["structures"])
    assert over.metric == "schwarzschild" and over.sampling.seed == 4 and over.sampling.count == 7
    assert over.tolerances == C.Tolerances(1e-7, 1e-7, 1e-7) and over.constants.c == 2.0
    assert over.suites == ("structures",)
    assert cfg.with_overrides() == cfg


@pytest.mark.parametrize("data,error", [
    ({"metric": "kerr"}, C.UnknownIdError),
    ({"connection": {"kind": "torsion"}}, C.UnknownIdError),
    ({"connection": {"kind": "levi_civita_plus", "phi": {"kind": "cubic"}}}, C.UnknownIdError),
    ({"perturbation": {"kind": "em", "field_id": "dipole", "q": 1, "m": 1}}, C.UnknownIdError),
    ({"perturbation": {"kind": "sigma", "sigma": "quartic"}}, C.UnknownIdError),
    ({"suites": ["spacetime", "optics"]}, C.UnknownIdError),
    ({"sampling": {"count": 0}}, C.ConfigError),
    ({"sampling": {"count": 2.5}}, C.ConfigError),
    ({"sampling": {"seed": -1}}, C.ConfigError),
    ({"sampling": {"ranges": [[0, 1]]}}, C.ConfigError),
    ({"sampling": {"colour": 1}}, C.ConfigError),
    ({"tolerances": {"algebraic": 0}}, C.ConfigError),
    ({"constants": {"c": -1}}, C.ConfigError),
    ({"constants": {"c": "fast"}}, C.ConfigError),
    ({"perturbation": {"kind": "em", "field_id": "uniform", "q": 1}}, C.ConfigError),
    ({"perturbation": {"kind": "em", "field_id": "uniform", "q": 1, "m": 0}}, C.ConfigError),
    ({"connection": {"kind": "explicit", "coefficients": [[1, 2]]}}, C.ConfigError),
    ({"expect": {"contact": "yes"}}, C.ConfigError),
    ({"expect": {"symplectic": True}}, C.ConfigError),
    ({"suites": "structures"}, C.ConfigError),
    ({"verbosity": 3}, C.ConfigError),
])
def test_invalid_configurations_are_rejected(data, error):
    with pytest.raises(error):
        C.from_mapping(data)


def test_unknown_ids_are_config_errors_with_their_own_class():
    assert issubclass(C.UnknownIdError, C.ConfigError)
    with pytest.raises(C.ConfigError):
        C.from_mapping(["not", "a", "mapping"])


def test_load_reads_yaml_and_json(tmp_path):
    data = {"metric": "wavy", "sampling": {"count": 2, "seed": 1}}
    (tmp_path / "a.yaml").write_text(yaml.safe_dump(data))
    (tmp_path / "a.json").write_text(json.dumps(data))
    assert C.load(tmp_path / "a.yaml") == C.load(tmp_path / "a.json") == C.from_mapping(data)
    with pytest.raises(C.ConfigError):
        C.load(tmp_path / "missing.yaml")
    (tmp_path / "bad.yaml").write_text("metric: [unclosed\n")
    with pytest.raises(C.ConfigError):
        C.load(tmp_path / "bad.yaml")


def test_digest_tracks_content():
    a, b = small(), small()
    assert a.digest() == b.digest()
    assert a.digest() != replace(a, sampling=replace(a.sampling, seed=6)).digest()


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configurations_are_valid(path):
    cfg = C.load(path)
    assert cfg.expect


# -- runner ------------------------------------------------------------------------------------

def test_run_is_deterministic_to_the_byte():
    cfg = small(perturbation={"kind": "sigma", "sigma": "psi"}, suites=list(C.SUITES))
    first, second = R.to_json(run(cfg)), R.to_json(run(cfg))
    assert first == second
    other = R.to_json(run(replace(cfg, sampling=replace(cfg.sampling, seed=6))))
    assert other != first


def test_worker_threads_do_not_change_the_report():
    cfg = small(metric="schwarzschild")
    threaded = replace(cfg, sampling=replace(cfg.sampling, workers=3))
    serial, parallel = run(cfg), run(threaded)
    # the configuration digest covers the worker count; everything else must agree
    assert serial.environment.pop("config_hash") != parallel.environment.pop("config_hash")
    assert R.to_json(serial) == R.to_json(parallel)


def test_em_run_reports_acc_without_contact():
    cfg = small(metric="schwarzschild", perturbation={"kind": "em", "field_id": "uniform", "q": 0.1, "m": 1.0},
                suites=["structures", "perturbations"], expect={"acc": True, "contact": False})
    rep = run(cfg)
    assert rep.verdict["flags"]["acc"] and not rep.verdict["flags"]["contact"]
    assert rep.passed and rep.expectations_passed
    assert all(r.passed for r in rep.suites["perturbations"].values())


def test_row_pass_matches_tolerance_and_implications_hold():
    rep = run(small(metric="schwarzschild", perturbation={"kind": "sigma", "sigma": "generic"}))
    for rows in rep.suites.values():
        for row in rows.values():
            assert row.passed == (row.max_residual <= row.tolerance)
    f = rep.verdict["flags"]
    assert not f["contact"] or f["acc"]
    assert not f["jacobi"] or f["acpj"]


def test_no_admissible_samples_raise():
    cfg = small(metric="schwarzschild", sampling={"count": 2, "ranges": [[0, 1], [0.2, 0.6], [1, 2], [0, 1]]})
    with pytest.raises(NoSamplesError):
        run(cfg)


# -- report ------------------------------------------------------------------------------------

def test_json_round_trip():
    rep = run(small(expect={"contact": True}))
    text = R.to_json(rep)
    back = R.from_json(text)
    assert back.to_dict() == rep.to_dict()
    assert R.to_json(back) == text


def test_json_keys_sorted_and_seventeen_digits():
    row = R.Row(1.0 / 3.0, [0.1, 2.0], 1e-8, "statement")
    rep = R.Report(suites={"b": {"y": row}, "a": {}})
    text = R.to_json(rep)
    assert "0.33333333333333331" in text
    assert "2.0" in text
    parsed = json.loads(text)
    assert list(parsed) == sorted(parsed)
    assert list(parsed["suites"]) == ["a", "b"]
    inf_text = R.to_json(R.Report(suites={"s": {"r": R.Row(math.inf, [], 1.0, "x")}}))
    assert json.loads(inf_text)["suites"]["s"]["r"]["max_residual"] == math.inf


def test_empty_suite_report_is_valid():
    rep = run(small(suites=[]))
    d = json.loads(R.to_json(rep))
    assert d["suites"] == {} and d["verdict"] is None and d["pass"] is True
    assert R.from_json(R.to_json(rep)).to_dict() == rep.to_dict()
    md = R.to_markdown(rep)
    assert "| suite | identity |" in md and "✓" not in md


def test_markdown_has_one_checked_row_per_identity():
    rep = run(small())
    md = R.to_markdown(rep)
    n_rows = sum(len(rows) for rows in rep.suites.values())
    table = [line for line in md.splitlines() if line.startswith("| kinematics") or line.startswith("| structures")]
    assert len(table) == n_rows
    assert all(line.rstrip().endswith("✓ |") for line in table)
    assert "overall: PASS" in md


def test_unsupported_schema_and_format():
    with pytest.raises(ValueError):
        R.Report.from_dict({"schema_version": 99})
    with pytest.raises(ValueError):
        R.emit(R.Report(), "html")


def _compare(a, b, path="$"):
    assert type(a) is type(b) or {type(a), type(b)} <= {int, float}, path
    if isinstance(a, dict):
        assert sorted(a) == sorted(b), path
        for k in a:
            _compare(a[k], b[k], f"{path}.{k}")
    elif isinstance(a, list):
        assert len(a) == len(b), path
        for i, (x, y) in enumerate(zip(a, b)):
            _compare(x, y, f"{path}[{i}]")
    elif isinstance(a, float):
        assert a == pytest.approx(b, rel=1e-9, abs=1e-13), path
    else:
        assert a == b, path


def test_report_matches_golden_file():
    golden = json.loads((GOLDEN / "minkowski_small.json").read_text())
    fresh = json.loads(R.to_json(run(C.load(GOLDEN / "minkowski_small.yaml"))))
    _compare(fresh, golden)


# -- command line ---------------------------------------------------------------------------------

def write_config(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_cli_exit_zero_and_output_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    cfg = write_config(tmp_path, {"sampling": {"count": 2}, "suites": ["kinematics"]})
    assert cli.main(["verify", "--config", cfg, "--out", str(out)]) == cli.EXIT_OK
    assert json.loads(out.read_text())["pass"] is True
    assert capsys.readouterr().out == ""


def test_cli_verdict_failure_exits_one(tmp_path, capsys):
    cfg = write_config(tmp_path, {"metric": "schwarzschild", "sampling": {"count": 2},
                                  "perturbation": {"kind": "em", "field_id": "uniform", "q": 0.1, "m": 1.0},
                                  "suites": ["structures"], "expect": {"contact": True}})
    assert cli.main(["classify", "--config", cfg]) == cli.EXIT_VERDICT
    report = json.loads(capsys.readouterr().out)
    assert report["expectations"]["contact"] == {"actual": False, "expected": True, "pass": False}


@pytest.mark.parametrize("argv", [
    ["verify", "--metric", "kerr"],
    ["verify", "--samples", "0"],
    ["verify", "--config", "/nonexistent/config.yaml"],
    ["verify", "--format", "html"],
    ["bogus"],
    [],
])
def test_cli_configuration_errors_exit_two(argv, capsys):
    assert cli.main(argv) == cli.EXIT_CONFIG


def test_cli_malformed_file_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("metric: [unclosed\n")
    assert cli.main(["verify", "--config", str(path)]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_no_samples_exits_three(tmp_path, capsys):
    cfg = write_config(tmp_path, {"metric": "schwarzschild",
                                  "sampling": {"count": 2, "ranges": [[0, 1], [0.2, 0.6], [1, 2], [0, 1]]}})
    assert cli.main(["verify", "--config", cfg]) == cli.EXIT_RUNTIME
    assert "runtime error" in capsys.readouterr().err


def test_cli_catalog_listing(capsys):
    assert cli.main(["--list-catalog"]) == cli.EXIT_OK
    listed = capsys.readouterr().out
    for name in ("minkowski", "schwarzschild", "wavy", "tilted", "uniform", "coulomb"):
        assert name in listed
    assert cli.main(["catalog"]) == cli.EXIT_OK
    assert capsys.readouterr().out == listed


def test_cli_subcommands_restrict_suites(capsys):
    assert cli.main(["identities", "--samples", "2", "--seed", "3"]) == cli.EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert list(report["suites"]) == ["kinematics"] and report["verdict"] is None
    assert cli.main(["classify", "--samples", "2", "--format", "markdown", "--c", "2.0"]) == cli.EXIT_OK
    md = capsys.readouterr().out
    assert "## Phase structure verdict" in md and "| kinematics" not in md
