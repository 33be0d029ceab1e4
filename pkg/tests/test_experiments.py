import json
import math

import pytest

from relcpd.dgp import DGPSpec
from relcpd.experiments import (
    NA,
    ExperimentPlan,
    binomial_se,
    load_plan,
    parse_flat_config,
    plan_from_mapping,
    run_cp_accuracy,
    run_K_sensitivity,
    run_m_distribution,
    run_plan,
    run_rejection,
    run_support,
)

SMALL = DGPSpec(n=60, p=8)


def plan(**kw):
    kw.setdefault("dgp", SMALL)
    kw.setdefault("reps", 6)
    kw.setdefault("qreps", 2000)
    return ExperimentPlan(**kw)


def test_parse_flat_config_and_plan(tmp_path):
    text = """
    # a small sweep
    model = MA(2)
    n = 80
    p = 10
    reps = 5
    delta = 1.5
    sweep.signal = 0, 1.0
    sweep.s_over_p = 0.5
    outputs = rejection, support
    """
    path = tmp_path / "plan.cfg"
    path.write_text(text)
    p = load_plan(path)
    assert p.dgp.model == "MA(2)" and p.dgp.n == 80 and p.reps == 5 and p.delta == 1.5
    assert p.sweep == {"signal": [0, 1.0], "s_over_p": [0.5]}
    assert p.outputs == ("rejection", "support")
    assert len(p.cells()) == 2
    with pytest.raises(ValueError, match="line 1"):
        parse_flat_config("no equals sign")


def test_unknown_keys_are_named():
    with pytest.raises(KeyError, match="bogus"):
        plan_from_mapping({"bogus": "1"})
    with pytest.raises(KeyError, match="sweep.bogus"):
        plan_from_mapping({"sweep.bogus": "1,2"})
    with pytest.raises(KeyError, match="bogus"):
        ExperimentPlan(sweep={"bogus": [1]})
    with pytest.raises(ValueError):
        ExperimentPlan(outputs=("nothing",))


def test_single_rep_has_no_se():
    assert binomial_se(0.5, 1) == NA
    t = run_rejection(plan(reps=1, sweep={"signal": [0.0]}))
    assert t.rows[0]["se"] == NA
    assert t.to_csv().splitlines()[1].endswith(",NA")


def test_empty_sweep_gives_empty_table():
    t = run_rejection(plan(sweep={"signal": []}))
    assert len(t) == 0 and t.to_csv() == "signal,reps,failures,rate,se\n"


def test_deterministic_across_threads():
    p = plan(sweep={"signal": [0.0, 1.0]}, outputs=("rejection", "m_distribution"))
    a = {k: t.to_csv() for k, t in run_plan(p, threads=1).items()}
    b = {k: t.to_csv() for k, t in run_plan(p, threads=4).items()}
    assert a == b


def test_cell_reruns_alone():
    full = run_rejection(plan(sweep={"signal": [0.0, 3.0]}))
    alone = run_rejection(plan(sweep={"signal": [3.0]}))
    assert full.rows[1] == alone.rows[0]


def test_support_recall_undefined_without_signal():
    t = run_support(plan(sweep={"signal": [0.0, 4.0]}, m=0))
    assert math.isnan(t.rows[0]["recall"])
    assert t.to_csv().splitlines()[1].split(",")[4] == NA
    assert t.rows[1]["recall"] == 1.0


def test_m_distribution_columns():
    t = run_m_distribution(plan(sweep={"model": ["IND"]}, thresholds=(1, 2)))
    assert t.columns == ["model", "reps", "failures", "mean_m", "P(m>=1)", "P(m>=2)"]
    row = t.rows[0]
    assert 0 <= row["P(m>=2)"] <= row["P(m>=1)"] <= 1


def test_cp_accuracy_strong_signal():
    t = run_cp_accuracy(plan(dgp=DGPSpec(n=100, p=20), sweep={"signal": [4.0]}))
    assert t.rows[0]["rate"] == 1.0


def test_K_sensitivity_adds_axis():
    t = run_K_sensitivity(plan(sweep={"signal": [0.0]}), Ks=(2, 10))
    assert t.columns[:2] == ["signal", "K"] and t.column("K") == [2, 10]
    assert all(r["reps"] + r["failures"] == 6 for r in t.rows)


def test_s_over_p_and_dense_template():
    t = run_support(plan(sweep={"p": [8, 16], "s_over_p": [0.25]}, m=0, dgp=SMALL.with_(signal=3.0)))
    assert [r["p"] for r in t.rows] == [8, 16]
    # dense template stays dense when only p is swept
    t = run_rejection(plan(sweep={"p": [4, 12]}, dgp=SMALL.with_(signal=3.0), delta=0.5))
    assert t.column("rate") == [1.0, 1.0]


def test_run_plan_writes_files(tmp_path):
    p = plan(sweep={"signal": [0.0]}, outputs=("rejection", "cp_accuracy"), seed=7)
    run_plan(p, out_dir=tmp_path)
    assert (tmp_path / "rejection.csv").exists() and (tmp_path / "cp_accuracy.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["plan"]["sweep"] == {"signal": [0.0]}
    assert manifest["plan"]["dgp"]["n"] == 60 and "version" in manifest
