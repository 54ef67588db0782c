import json

import pytest

from critlab import reporting
from critlab.cli import build_parser, main


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


def run(out, *args):
    return main(["--out-dir", str(out), *args])


def test_help_lists_commands(capsys):
    assert main(["--help"]) == 0
    text = capsys.readouterr().out
    for cmd in ("field", "eig", "sweep", "criticality", "verify", "ce1", "ce2", "report"):
        assert cmd in text


def test_every_flag_has_a_default():
    parser = build_parser()
    stack = [parser]
    while stack:
        p = stack.pop()
        for action in p._actions:
            if action.option_strings and action.dest not in ("help",):
                assert action.default is not None or action.dest == "h", action.dest
            if hasattr(action, "choices") and isinstance(action.choices, dict):
                stack.extend(action.choices.values())


def test_field_plot_negative_range(out):
    assert run(out, "field", "plot", "--which", "b", "--range", "-9:9", "--step", "0.01") == 0
    lines = (out / "field_b.csv").read_text().splitlines()
    assert lines[0] == "x,value" and len(lines) == 1802 and lines[1].startswith("-9,")
    assert (out / "field_b.svg").read_text().startswith("<svg")


def test_field_eval_default_panels(out):
    assert run(out, "field", "eval", "--which", "sigma,B", "--range=-3:3", "--step", "0.5") == 0
    assert (out / "field_sigma.csv").read_text().splitlines()[1:4] == ["-3,-2", "-2.5,-2", "-2,0"]


def test_verify_commands(out):
    assert run(out, "verify", "kn-lower", "--nmax", "8") == 0
    assert run(out, "verify", "kn-upper", "--nmax", "8") == 0
    assert run(out, "verify", "global-bound", "--xmax", "243", "--step", "0.05") == 0
    assert run(out, "verify", "limit-averages", "--kmax", "2") == 0
    doc = json.loads((out / "verify_kn-lower.json").read_text())
    reporting.validate(doc, "verification_record")


def test_usage_errors(out, capsys):
    assert run(out, "eig", "--preset", "ce1-sa", "--radius", "0") == 2
    assert run(out, "bogus") == 2
    assert run(out, "eig", "--bogus-flag") == 2
    assert run(out, "verify", "kn-lower", "--nmax", "12") == 2
    assert run(out, "sweep", "--radii", "27,9") == 2
    assert "usage" in capsys.readouterr().err


def test_eig_and_sweep(out):
    assert run(out, "eig", "--preset", "ce2-drift", "--radius", "9") == 0
    reporting.validate(json.loads((out / "eig_ce2-sa.json").read_text()), "eigen_result")
    assert run(out, "sweep", "--preset", "ce1-sa", "--radii", "9,27") == 0
    assert (out / "sweep_ce1-sa.csv").read_text().startswith("R,lambda,residual\n9,")


def test_numerical_error_exit(out, monkeypatch):
    from critlab import cli
    from critlab.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("no")

    monkeypatch.setattr(cli, "classify_preset", boom)
    assert run(out, "criticality", "--preset", "ce1-sa") == 3


def test_criticality(out):
    assert run(out, "criticality", "--preset", "ce2-sa") == 0
    doc = json.loads((out / "criticality_ce2-sa.json").read_text())
    assert doc["classification"] == "subcritical"


def test_report_is_deterministic(out):
    assert run(out, "report", "--out", "a.json") == 0
    assert run(out, "report", "--out", "b.json") == 0
    assert (out / "a.json").read_bytes() == (out / "b.json").read_bytes()
