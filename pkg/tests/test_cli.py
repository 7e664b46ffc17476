import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from gapmech.cli import main
from gapmech.datagen import read_csv
from gapmech.gaussian import GaussMechanism
from gapmech.probability import BinaryMechanism, ValidationError
from gapmech.records import (
    TRADEOFF_FIELDS,
    GridError,
    MechanismFormatError,
    TradeoffPoint,
    mechanism_from_json,
    mechanism_to_json,
    parse_d_grid,
    read_tradeoff_csv,
    write_tradeoff_csv,
)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- records --------------------------------------------------------------------------

def test_parse_d_grid():
    assert parse_d_grid("0:0.6:0.05") == pytest.approx(np.linspace(0, 0.6, 13))
    assert parse_d_grid("0:0.6:0.05")[6] == 0.3
    assert parse_d_grid("1:9:1") == [float(d) for d in range(1, 10)]
    assert parse_d_grid("0.25") == [0.25]
    for bad in ("-1:2:1", "2:1:0.5", "0:1:0", "a:b:c", "0:1", ""):
        with pytest.raises(GridError):
            parse_d_grid(bad)


@pytest.mark.parametrize(
    "mech",
    [BinaryMechanism.pdd(0.1, 0.2, 0.3, 1.0), BinaryMechanism.pdi(0.25, 0.75), GaussMechanism(1.0, 2.5, 0.0, 0.125)],
)
def test_mechanism_json_round_trip(mech):
    text = mechanism_to_json(mech)
    assert json.loads(text)["kind"] in ("binary-pdd", "binary-pdi", "gauss")
    assert mechanism_from_json(text) == mech


@pytest.mark.parametrize(
    "doc, path",
    [
        ('{"kind": "binary-pdi", "s0": 1.2, "s1": 1}', "mechanism.s0"),
        ('{"kind": "binary-pdd", "s00": 1, "s01": 1, "s10": 1}', "mechanism.s11"),
        ('{"kind": "laplace"}', "mechanism.kind"),
        ('{"kind": "gauss", "beta0": -1, "beta1": 0, "gamma0": 0, "gamma1": 0}', "mechanism.beta0"),
        ('{"kind": "gauss", "beta0": "x", "beta1": 0, "gamma0": 0, "gamma1": 0}', "mechanism.beta0"),
        ('{"kind": "binary-pdi", "s0": 1, "s1": 1, "s2": 0}', "mechanism.s2"),
        ("[1, 2]", "mechanism"),
        ("{nope", "mechanism"),
    ],
)
def test_mechanism_json_errors_name_the_field(doc, path):
    with pytest.raises(MechanismFormatError) as info:
        mechanism_from_json(doc)
    assert info.value.path == path


def test_tradeoff_csv_round_trip(tmp_path):
    pts = [
        TradeoffPoint(0.1, "theory", 0.7, BinaryMechanism.pdi(0.9, 0.9), mi_nats=0.08, elapsed_ms=1.5),
        TradeoffPoint(2.0, "trained", 0.92, GaussMechanism(1, 1, 0.5, 0.5), elapsed_ms=10.0, seed=3),
    ]
    path = tmp_path / "t.csv"
    write_tradeoff_csv(pts[:1], path)
    write_tradeoff_csv(pts[1:], path, append=True)
    back = read_tradeoff_csv(path)
    assert back == pts
    with pytest.raises(ValidationError):
        TradeoffPoint(-1.0, "theory", 0.5, GaussMechanism())
    with pytest.raises(ValidationError):
        TradeoffPoint(1.0, "guess", 0.5, GaussMechanism())


# --- commands -----------------------------------------------------------------------------

def test_datagen_command(tmp_path, capsys):
    out = tmp_path / "train.csv"
    assert main(["datagen", "--model", "binary", "--p", "0.75", "--q", "0.25", "--n", "10000", "--seed", "7", "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "10000"
    assert len(read_csv(out)) == 10_000
    out = tmp_path / "g.csv"
    args = ["datagen", "--model", "gauss", "--ptilde", "0.75", "--mu", "3", "--var0", "4", "--var1", "1", "--n", "2000", "--seed", "1"]
    assert main(args + ["--out", str(out)]) == 0
    ds = read_csv(out)
    assert ds.kind == "gaussian" and ds.provenance["source"] == str(out)


def test_usage_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["datagen", "--model", "binary", "--p", "0.5", "--q", "0.2", "--n", "10"])
    assert info.value.code == 2
    assert main(["datagen", "--model", "binary", "--p", "1.5", "--q", "0.2", "--n", "10", "--out", str(tmp_path / "x")]) == 2
    assert main(["theory", "--model", "gauss-full", "--ptilde", "0.5", "--mu", "3", "--D-grid=-1:2:1", "--out", str(tmp_path / "t")]) == 2
    assert main(["sweep", "--model", "binary-pdd", "--p", "0.5", "--q", "0.25", "--D-grid", "0.5:0.1:0.1", "--out", str(tmp_path / "s")]) == 2
    with pytest.raises(SystemExit) as info:
        main(["theory", "--model", "laplace", "--D-grid", "0:1:1", "--out", str(tmp_path / "t")])
    assert info.value.code == 2


def test_theory_binary_pdi_kink(tmp_path):
    out = tmp_path / "pdi.csv"
    assert main(["theory", "--model", "binary-pdi", "--p", "0.5", "--q", "0.25", "--D-grid", "0:0.6:0.05", "--out", str(out)]) == 0
    r = rows(out)
    assert list(r[0]) == list(TRADEOFF_FIELDS)
    D = np.array([float(x["D"]) for x in r])
    acc = np.array([float(x["map_accuracy"]) for x in r])
    lin = D < 0.5 - 1e-12
    assert acc[lin] == pytest.approx(0.75 - 0.5 * D[lin])
    assert acc[~lin] == pytest.approx(0.5)


def test_theory_is_deterministic_and_has_sidecar(tmp_path):
    a, b, side = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "a.json"
    args = ["theory", "--model", "gauss-shift", "--ptilde", "0.75", "--mu", "3", "--D-grid", "0:4:0.5"]
    assert main(args + ["--out", str(a), "--json", str(side)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    strip = lambda rs: [{k: v for k, v in x.items() if k != "elapsed_ms"} for x in rs]  # noqa: E731
    assert strip(rows(a)) == strip(rows(b))
    doc = json.loads(side.read_text())
    assert doc["params"]["ptilde"] == 0.75 and len(doc["points"]) == 9
    assert read_tradeoff_csv(a)[0].mechanism == GaussMechanism()


def test_theory_rejects_unequal_variance_for_closed_forms(tmp_path):
    args = ["theory", "--model", "gauss-pdi", "--ptilde", "0.5", "--mu", "3", "--var0", "4", "--D-grid", "1", "--out", str(tmp_path / "t.csv")]
    assert main(args) == 2


def test_eval_examples(tmp_path, capsys):
    mech = tmp_path / "id.json"
    mech.write_text('{"kind": "binary-pdd", "s00": 1, "s01": 1, "s10": 1, "s11": 1}')
    out = tmp_path / "ev.csv"
    assert main(["eval", "--mechanism", str(mech), "--p", "0.5", "--q", "0.25", "--bits", "--out", str(out)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["map_accuracy"] == pytest.approx(0.75)
    assert res["mi_nats"] == pytest.approx(0.1308, abs=5e-5)
    assert res["mi_bits"] == pytest.approx(res["mi_nats"] / np.log(2))

    g = tmp_path / "g.json"
    g.write_text(json.dumps({"kind": "gauss", "beta0": 2.8284, "beta1": 2.8284, "gamma0": 0, "gamma1": 0}))
    assert main(["eval", "--mechanism", str(g), "--ptilde", "0.5", "--mu", "3", "--D", "8", "--out", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["map_accuracy"] == pytest.approx(0.5681, abs=5e-4)
    pts = read_tradeoff_csv(out)
    assert [p.D for p in pts] == [0.0, 8.0]

    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "binary-pdi", "s0": 1.2, "s1": 1}')
    assert main(["eval", "--mechanism", str(bad), "--p", "0.5", "--q", "0.25"]) == 1
    assert "mechanism.s0" in capsys.readouterr().err


def test_train_command_outputs(tmp_path, capsys):
    data = tmp_path / "d.csv"
    main(["datagen", "--model", "binary", "--p", "0.5", "--q", "0.25", "--n", "10000", "--seed", "1", "--out", str(data)])
    capsys.readouterr()
    out = tmp_path / "run"
    args = ["train", "--dataset", str(data), "--model", "binary-pdd", "--D", "0.3", "--seed", "4", "--iters", "4000",
            "--p", "0.5", "--q", "0.25", "--out", str(out)]
    assert main(args) == 0
    printed = capsys.readouterr().out.split()
    assert len(printed) == 4
    record = json.loads((out / "run.json").read_text())
    assert record["config"]["D"] == 0.3 and record["config"]["seed"] == 4
    assert len(record["dataset"]["sha256"]) == 64
    assert record["evaluation"]["map_accuracy"] <= 0.5 + 0.03
    hist = rows(out / "history.csv")
    assert list(hist[0]) == ["iter", "adv_loss", "distortion", "residual", "lambda", "rho"]
    assert len(hist) == 4000
    (pt,) = read_tradeoff_csv(out / "tradeoff.csv")
    assert pt.source == "trained" and pt.seed == 4
    assert mechanism_from_json((out / "mechanism.json").read_text()) == pt.mechanism


def test_train_errors(tmp_path, capsys):
    data = tmp_path / "d.csv"
    main(["datagen", "--model", "binary", "--p", "0.5", "--q", "0.25", "--n", "100", "--out", str(data)])
    assert main(["train", "--dataset", str(data), "--model", "gauss", "--D", "1", "--out", str(tmp_path / "r")]) == 1
    assert "gaussian" in capsys.readouterr().err
    empty = tmp_path / "e.csv"
    empty.write_text("x,y\n")
    assert main(["train", "--dataset", str(empty), "--model", "binary-pdd", "--D", "0.1", "--out", str(tmp_path / "r")]) == 1
    assert main(["train", "--dataset", str(tmp_path / "missing.csv"), "--model", "binary-pdd", "--D", "0.1", "--out", str(tmp_path / "r")]) == 1


def test_sweep_is_sorted_and_seeded(tmp_path):
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    base = ["sweep", "--model", "binary-pdi", "--p", "0.5", "--q", "0.25", "--D-grid", "0.1:0.3:0.1", "--n", "2000",
            "--iters", "600", "--seed", "5"]
    assert main(base + ["--out", str(out1)]) == 0
    assert main(base + ["--jobs", "2", "--out", str(out2)]) == 0
    pts1, pts2 = read_tradeoff_csv(out1), read_tradeoff_csv(out2)
    assert [(p.D, p.source) for p in pts1] == [(d, s) for d in (0.1, 0.2, 0.3) for s in ("theory", "trained")]
    assert [p.seed for p in pts1 if p.source == "trained"] == [5 ^ 0, 5 ^ 1, 5 ^ 2]
    # concurrency changes completion order only
    assert [(p.D, p.map_accuracy, p.mechanism) for p in pts1] == [(p.D, p.map_accuracy, p.mechanism) for p in pts2]


def test_module_entry_point(tmp_path):
    out = tmp_path / "t.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "gapmech", "theory", "--model", "binary-pdd", "--p", "0.5", "--q", "0.25", "--D-grid", "0:0.5:0.25", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == str(out)
    assert [p.map_accuracy for p in read_tradeoff_csv(out)] == pytest.approx([0.75, 0.5, 0.5])
