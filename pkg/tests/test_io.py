import csv
import json
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from seqcpm import cli, files, report
from seqcpm.config import RunConfig
from seqcpm.datagen import GeneratorSpec, generate
from seqcpm.errors import (
    ConfigError,
    DuplicateOrder,
    EmptyFile,
    InsufficientPoints,
    MissingHeader,
    MissingValue,
    NonBinaryOutcome,
)
from seqcpm.sequential import DEFAULT_RULES, IncrementRecord, LearningCurve, StoppingRule, evaluate_rules

HEADER = ("n,apparent_c,optimism_c,corrected_c,corrected_slope,mean_ui_width,ui_width_p2_5,ui_width_p97_5,"
          "mean_delta,delta_p2_5,delta_p97_5,evpi,mean_misclass,misclass_p2_5,misclass_p97_5")


def make_curve(n_points=3, rules=DEFAULT_RULES):
    rng = np.random.default_rng(0)
    records = []
    for i in range(n_points):
        stats = {f: float(rng.uniform(0.001, 0.99)) for f in files.STAT_FIELDS}
        rec = IncrementRecord(n=100 * (i + 1), **stats)
        records.append(rec.__class__(**{**rec.__dict__, "passes": tuple(r.holds(rec.value(r.metric)) for r in rules)}))
    per_rule, overall = evaluate_rules(records, rules)
    return LearningCurve(tuple(records), tuple(rules), per_rule, overall)


def write(tmp_path, text, name="c.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


# --- cohort CSV -------------------------------------------------------------


def test_cohort_round_trip(tmp_path):
    cohort = generate(GeneratorSpec(n=50, seed=1), predictors=("bicarbonate", "creatinine", "a", "b", "c", "d"))
    files.write_cohort_csv(cohort, tmp_path / "c.csv")
    back = files.read_cohort_csv(tmp_path / "c.csv")
    np.testing.assert_array_equal(back.X, cohort.X)
    np.testing.assert_array_equal(back.y, cohort.y)
    np.testing.assert_array_equal(back.order, cohort.order)
    np.testing.assert_array_equal(back.ids, cohort.ids)
    assert back.predictors == cohort.predictors


def test_non_binary_outcome_cites_row(tmp_path):
    rows = ["id,outcome,x"] + [f"{i},0,0.5" for i in range(1, 17)] + ["17,2,0.1", "18,1,0.2"]
    with pytest.raises(NonBinaryOutcome, match="row 17") as info:
        files.read_cohort_csv(write(tmp_path, "\n".join(rows)))
    assert info.value.row == 17 and info.value.value == "2"


def test_header_only_is_empty(tmp_path):
    with pytest.raises(EmptyFile):
        files.read_cohort_csv(write(tmp_path, "id,order,outcome,x\n"))
    with pytest.raises(EmptyFile):
        files.read_cohort_csv(write(tmp_path, ""))


def test_bad_header_missing_value_duplicate_order(tmp_path):
    with pytest.raises(MissingHeader):
        files.read_cohort_csv(write(tmp_path, "patient,outcome,x\n1,0,1\n"))
    with pytest.raises(MissingValue):
        files.read_cohort_csv(write(tmp_path, "id,outcome,x\n1,0,\n"))
    with pytest.raises(DuplicateOrder):
        files.read_cohort_csv(write(tmp_path, "id,order,outcome,x\n1,1,0,1\n2,1,1,2\n"))


def test_missing_order_is_assigned(tmp_path):
    text = "id,outcome,x\n" + "\n".join(f"{i},{i % 2},{i}" for i in range(1, 21))
    a = files.read_cohort_csv(write(tmp_path, text), seed=5)
    b = files.read_cohort_csv(write(tmp_path, text), seed=5)
    assert sorted(a.order) == list(range(1, 21))
    np.testing.assert_array_equal(a.order, b.order)
    assert list(files.read_cohort_csv(write(tmp_path, text)).order) == list(range(1, 21))


# --- learning curve ---------------------------------------------------------


def test_curve_csv_shape_and_columns(tmp_path):
    curve = make_curve(3)
    files.write_learning_curve(curve, tmp_path / "lc.csv")
    lines = (tmp_path / "lc.csv").read_text().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith(HEADER + ",pass_corrected_slope>=0.9_k2,")
    assert lines[0].endswith(",replicate_failures")
    again = tmp_path / "lc2.csv"
    files.write_learning_curve(curve, again)
    assert again.read_bytes() == (tmp_path / "lc.csv").read_bytes()


def test_curve_csv_six_significant_digits(tmp_path):
    curve = make_curve(2)
    files.write_learning_curve(curve, tmp_path / "lc.csv")
    with open(tmp_path / "lc.csv") as fh:
        row = next(iter(list(csv.DictReader(fh))))
    assert row["apparent_c"] == f"{curve.records[0].apparent_c:.6g}"


def test_curve_csv_read_back(tmp_path):
    curve = make_curve(4)
    files.write_learning_curve(curve, tmp_path / "lc.csv")
    back = files.read_learning_curve_csv(tmp_path / "lc.csv")
    assert back.rules == curve.rules
    assert back.n_stop_per_rule == curve.n_stop_per_rule
    for a, b in zip(curve.records, back.records):
        for f in files.STAT_FIELDS:
            assert getattr(b, f) == files.printed(getattr(a, f))
        assert a.passes == b.passes


def test_curve_json_round_trip(tmp_path):
    curve = make_curve(3)
    files.write_learning_curve(curve, tmp_path / "lc.json", "json")
    payload = json.loads((tmp_path / "lc.json").read_text())
    assert payload["columns"] == files.curve_header(curve)
    for rec, orig in zip(payload["records"], curve.records):
        for f in files.STAT_FIELDS:
            assert rec[f] == float(files.fmt(getattr(orig, f)))
    assert payload["n_stop"] == curve.n_stop_per_rule


def test_unusable_record_serialises_blank_flags(tmp_path):
    rules = (StoppingRule("corrected_slope", ">=", 0.9),)
    records = (IncrementRecord(n=100, usable=False, passes=(None,)),
               IncrementRecord(n=200, corrected_slope=0.95, passes=(True,)))
    curve = LearningCurve(records, rules, *evaluate_rules(records, rules))
    files.write_learning_curve(curve, tmp_path / "lc.csv")
    first = (tmp_path / "lc.csv").read_text().splitlines()[1].split(",")
    assert first[1] == "nan" and first[-2] == ""
    assert not files.read_learning_curve_csv(tmp_path / "lc.csv").records[0].usable


# --- SVG --------------------------------------------------------------------


def _ns(tag):
    return "{http://www.w3.org/2000/svg}" + tag


def test_svg_two_points_one_curve_per_metric():
    curve = make_curve(2)
    svg = report.render_learning_curve_svg(curve, ["corrected_slope", "evpi"])
    root = ET.fromstring(svg)
    ids = [g.get("id") for g in root.iter(_ns("g")) if g.get("id")]
    assert ids.count("curve-corrected_slope") == 1
    assert ids.count("curve-evpi") == 1


def test_svg_threshold_line_is_horizontal():
    curve = make_curve(3)
    root = ET.fromstring(report.render_learning_curve_svg(curve, ["corrected_slope"]))
    group = next(g for g in root.iter(_ns("g")) if g.get("id") == "threshold-corrected_slope-0.9")
    path = next(group.iter(_ns("path"))).get("d")
    ys = [float(v) for v in re.findall(r"[ML] [-\d.]+ ([-\d.]+)", path)]
    assert len(ys) == 2 and ys[0] == ys[1]


def test_svg_is_byte_stable(tmp_path):
    curve = make_curve(3)
    a = report.render_learning_curve_svg(curve, path=tmp_path / "a.svg", provenance={"seed": 1})
    b = report.render_learning_curve_svg(curve, provenance={"seed": 1})
    assert a == b == (tmp_path / "a.svg").read_bytes()
    assert b"seed" in a


def test_svg_needs_two_points():
    with pytest.raises(InsufficientPoints):
        report.render_learning_curve_svg(make_curve(1))
    with pytest.raises(ValueError):
        report.render_learning_curve_svg(make_curve(2), ["auc"])


# --- config -----------------------------------------------------------------


def test_config_file_and_overrides(tmp_path):
    path = write(tmp_path, "[run]\nseed = 12  ; inline note\n[sequential]\nn_max = 500\n[rules]\n"
                           "slope = corrected_slope >= 0.9 k=3\n", "run.ini")
    cfg = RunConfig.load(str(path), {"sequential.b": "50"})
    seq = cfg.sequential_config()
    assert (seq.seed, seq.n_max, seq.b) == (12, 500, 50)
    assert seq.rules == (StoppingRule("corrected_slope", ">=", 0.9, 3),)
    assert cfg.resolved()["rules.slope"] == "corrected_slope >= 0.9 k=3"
    assert "run.workers" not in cfg.resolved(execution=False)


def test_config_rejects_unknown_and_missing_seed(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(str(write(tmp_path, "[run]\nseed = 1\nspeed = 3\n", "a.ini")))
    with pytest.raises(ConfigError):
        RunConfig.load(None, {})
    with pytest.raises(ConfigError):
        RunConfig.load(None, {"run.seed": "1", "sequential.b": "many"})
    with pytest.raises(ConfigError):
        RunConfig.load(None, {"run.seed": "1", "rules.bad": "auc >= 3"}).stopping_rules()


# --- CLI --------------------------------------------------------------------


def test_cli_fixed_size(capsys):
    assert cli.main(["fixed-size", "--prevalence", "0.173", "--cstat", "0.78", "--parameters", "6"]) == 0
    out = capsys.readouterr().out
    assert "n=342, events=60" in out
    assert "220" in out


def test_cli_run_without_seed_exits_2(capsys, tmp_path):
    assert cli.main(["run", "--out-dir", str(tmp_path)]) == 2
    assert "seed" in capsys.readouterr().err


def test_cli_generate_twice_identical(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert cli.main(["generate", "--n", "100", "--seed", "7", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len((tmp_path / "a.csv").read_text().splitlines()) == 101


def test_cli_run_and_plot(tmp_path, capsys):
    cohort = tmp_path / "cohort.csv"
    assert cli.main(["generate", "--n", "400", "--seed", "3", "--out", str(cohort)]) == 0
    out = tmp_path / "out"
    code = cli.main(["run", "--seed", "3", "--out-dir", str(out), "--set", f"data.cohort_csv={cohort}",
                     "--set", "sequential.n_max=300", "--set", "sequential.b=10"])
    assert code == 0
    assert "N_stop" in capsys.readouterr().out
    payload = json.loads((out / "learning_curve.json").read_text())
    assert payload["provenance"]["run.seed"] == 3
    assert payload["config"]["b"] == 10
    assert b"sequential.n_max" in (out / "learning_curve.svg").read_bytes()
    assert cli.main(["plot", "--curve", str(out / "learning_curve.csv"), "--out", str(tmp_path / "p.svg")]) == 0
    assert (tmp_path / "p.svg").read_bytes().startswith(b"<?xml")


def test_cli_error_exit_codes(tmp_path):
    bad = write(tmp_path, "id,outcome,x\n1,3,0.2\n")
    assert cli.main(["run", "--seed", "1", "--set", f"data.cohort_csv={bad}",
                     "--out-dir", str(tmp_path)]) == 3
    assert cli.main(["run", "--seed", "1", "--set", "bogus.key=1"]) == 2
    assert cli.main(["fixed-size", "--prevalence", "0.5", "--r2cs", "0.7", "--parameters", "6",
                     "--shrinkage", "0.6"]) == 4
    assert cli.main(["plot", "--curve", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "x.svg")]) == 3
