import json
import subprocess
import sys

import pytest

from identkit.cli import example_names, example_text, load_spec, main, run
from identkit.dsl import parse, render
from identkit.regions import ExplicitSet, Interval, regions_agree
from identkit.values import Value

GOOD = [n for n in example_names() if n != "contradictory"]


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.lstrip().startswith("{") else out


def as_region(r):
    if r["kind"] == "interval":
        return Interval(r["lo"], r["hi"], eps=r.get("eps", 0.0))
    if r["kind"] == "reduced_form":
        return as_region(r["materialized"])
    return ExplicitSet(frozenset(Value(v) for v in r["values"]))


def test_examples_listed(capsys):
    code, out = call(capsys, "examples")
    assert code == 0 and out.split() == example_names()
    assert {"missing_data", "causal", "causal_randomized", "contradictory"} <= set(example_names())


def test_missing_data_region(capsys):
    code, rep = call(capsys, "region", "missing_data")
    assert code == 0
    mean = rep["estimands"]["mean_y"]
    assert (mean["region"]["lo"], mean["region"]["hi"]) == (0.45, 0.7)
    assert mean["reduced_form"]["materialized"] == mean["region"]
    assert rep["estimands"]["p_observed"]["identifiable_at_l0"]
    assert rep["estimands"]["mean_unobserved"]["strong"]
    assert list(rep) == ["command", "problem", "estimands", "assumptions", "diagnostics"]


def test_causal_randomized_singleton(capsys):
    code, rep = call(capsys, "refute", "causal_randomized")
    assert code == 0
    ate = rep["estimands"]["ate"]
    assert ate["identifiable_at_l0"] and ate["region"]["lo"] == ate["region"]["hi"] == 0.5
    assert rep["assumptions"]["randomized(Z)"]["a_priori"] == "irrefutable"


@pytest.mark.parametrize("method", ["lp", "enumerate"])
def test_methods_agree_on_missing_data(capsys, method):
    code, rep = call(capsys, "region", "missing_data", "--method", method)
    assert code == 0 and rep["estimands"]["mean_y"]["method"] == ("lp" if method == "lp" else "enumeration")
    assert regions_agree(as_region(rep["estimands"]["mean_y"]["region"]), Interval(0.45, 0.7))


def test_contradictory_assumptions(capsys):
    code, rep = call(capsys, "analyze", "contradictory")
    assert code == 2
    assert rep["error"]["type"] == "EmptyUniverse"
    assert rep["error"]["assumption"] == "fixed(Z, 1, 0.75)"


def test_refuted_given(tmp_path, capsys):
    text = example_text("missing_data_ternary")
    spec = parse(text)
    lines = render(spec).splitlines()
    idx = next(i for i, line in enumerate(lines) if line.strip().startswith("expect(Y | Z=1) ="))
    lines[idx] = "  expect(Y | Z=1) = -0.5"
    path = tmp_path / "refuted.ident"
    path.write_text("\n".join(lines) + "\n")
    code, rep = call(capsys, "refute", str(path))
    assert code == 2
    verdict = rep["assumptions"]["bounded(Y, 0, 1)"]
    assert verdict == {"a_priori": "refutable", "refuted_at_l0": True, "restricted_regions": {"mean_y": None}}
    assert rep["diagnostics"]["refuted"]
    mean = rep["estimands"]["mean_y"]
    assert mean["region"] is None
    assert mean["unrestricted_region"] == {"kind": "interval", "lo": -0.625, "hi": -0.125}
    code, rep = call(capsys, "region", str(path))
    assert code == 2 and rep["error"]["type"] == "Infeasible"


@pytest.mark.parametrize(
    "argv",
    [
        ["region", "no_such_problem"],
        ["region", "missing_data", "--grid-step", "0.3"],
        ["analyze", "missing_data", "--cap", "10"],
    ],
)
def test_usage_errors(capsys, argv):
    code, rep = call(capsys, *argv)
    assert code == 1 and "error" in rep


def test_parse_error_has_position(tmp_path, capsys):
    path = tmp_path / "bad.ident"
    path.write_text("universe grid {\n  variable Y { support: [0, 1 }\n}\n")
    code, rep = call(capsys, "analyze", str(path))
    assert code == 1 and "line 2" in rep["error"]["message"]


def test_region_needs_given(tmp_path, capsys):
    text = render(parse(example_text("missing_data")))
    path = tmp_path / "nogiven.ident"
    path.write_text(text[: text.index("given {")])
    code, rep = call(capsys, "region", str(path))
    assert code == 1 and rep["error"]["type"] == "UsageError"
    code, rep = call(capsys, "analyze", str(path))
    assert code == 0 and "region" not in rep["estimands"]["mean_y"]


def test_eps_flag(capsys):
    code, rep = call(capsys, "region", "missing_data", "--eps", "0.000001")
    assert code == 0 and rep["estimands"]["mean_y"]["region"]["lo"] == 0.45


@pytest.mark.parametrize("name", example_names())
def test_print_round_trip(capsys, name):
    code, out = call(capsys, "print", name)
    assert code == 0 and parse(out) == load_spec(name)


@pytest.mark.parametrize("name", GOOD)
def test_oracle_agrees_with_region(name):
    spec = load_spec(name)
    region = run(spec, "region")
    oracle = run(spec, "oracle")
    for est, entry in region["estimands"].items():
        o = oracle["estimands"][est]
        assert o["method"] == "enumeration"
        assert regions_agree(as_region(entry["region"]), as_region(o["region"])), est
        assert entry["strong"] == o["strong"], est


@pytest.mark.parametrize(
    "argv, key, expected",
    [
        (["manski", "--p-z1", "0.75", "--mean-z1", "0.6"], "region", {"kind": "interval", "lo": 0.45, "hi": 0.7}),
        (
            ["causal", "--p-z1", "0.5", "--mean-z1", "0.7", "--mean-z0", "0.3"],
            "region",
            {"kind": "interval", "lo": -0.3, "hi": 0.7},
        ),
        (
            ["causal", "--p-z1", "0.5", "--mean-z1", "0.7", "--mean-z0", "0.3", "--randomized"],
            "region",
            {"kind": "interval", "lo": 0.4, "hi": 0.4},
        ),
        (["envelope", "0.4", "0.6"], "region", {"kind": "interval", "lo": -0.6, "hi": 0.6}),
        (["frechet", "0.5", "0.7"], "w", 0.2),
        (["finite-pop", "1:1", "0:0"], "region", {"kind": "set", "values": [0.0, 0.5, 1.0], "hull": [0.0, 1.0]}),
    ],
)
def test_case_commands(capsys, argv, key, expected):
    code, rep = call(capsys, "case", *argv)
    assert code == 0 and rep[key] == expected


def test_case_mixture(capsys):
    code, rep = call(capsys, "case", "mixture", "-0.5", "0.625")
    assert code == 0 and rep["regions"]["pi"]["values"] == [0.25, 0.75]


def test_case_errors(capsys):
    assert call(capsys, "case", "frechet", "1.5", "0.5")[0] == 1
    assert call(capsys, "case", "manski", "--p-z1", "0.5", "--mean-z1", "3")[0] == 2


def cli_bytes(*argv):
    return subprocess.run(
        [sys.executable, "-m", "identkit.cli", *argv], capture_output=True, check=False
    ).stdout


@pytest.mark.parametrize("name", ["missing_data", "causal"])
def test_reports_are_byte_stable(name):
    first, second = cli_bytes("refute", name), cli_bytes("refute", name)
    assert first and first == second
