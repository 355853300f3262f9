import csv
import io
import json
import math

import pytest

from agrs import cli
from agrs import experiments as ex
from agrs.gaussian import mutual_information_bits


def _rows(text):
    lines = text.split("\n")
    assert lines[0].startswith("# ")
    return list(csv.reader(io.StringIO("\n".join(lines[1:]))))


def test_table_csv_format():
    t = ex.Table(["a", "b", "c"], [[0.1, 3, None], [1 / 3, "x", 2.5e-17]], units="a[x] b[y] c[z]")
    text = t.to_csv()
    assert "\r" not in text
    assert text == "# a[x] b[y] c[z]\na,b,c\n0.1,3,\n0.3333333333333333,x,2.5e-17\n"
    assert float(_rows(text)[2][0]) == 1 / 3


def test_sigma_for_info_inverts_mutual_information():
    for bits in (0.5, 2.0, 7.0, 11.0):
        s = ex.sigma_for_info(bits, 1.3)
        assert mutual_information_bits(1, 1.3 ** 2, s * s) == pytest.approx(bits, rel=1e-12)


def test_plugin_entropy():
    assert ex.plugin_entropy_bits([1, 1, 1]) == 0.0
    assert ex.plugin_entropy_bits([1, 2, 3, 4]) == pytest.approx(2.0)
    assert ex.plugin_entropy_bits([1, 1, 2, 3]) == pytest.approx(1.5)


def test_mean_and_se():
    m, se = ex.mean_and_se([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5 and se == pytest.approx(math.sqrt(5 / 3) / 2)
    assert math.isnan(ex.mean_and_se([7.0])[1])


def test_overdispersion_sweep_marks_optimum():
    t = ex.overdispersion_sweep(4, 1.0, 3.0, s_grid=[3.1, 5.0, 9.0])
    opt = [r for r in t.rows if r[3] == 1]
    assert len(opt) == 1
    assert opt[0][0] == pytest.approx(4.299631726, abs=1e-9)
    assert opt[0][1] == pytest.approx(1441.999, abs=5e-4)
    runtimes = [r[1] for r in t.rows]
    assert min(runtimes) == opt[0][1] and runtimes[0] > runtimes[2]
    assert t.header == ["s", "expected_runtime", "expected_kl", "optimum", "mc_trials", "mc_mean_k", "mc_se_k"]


def test_overdispersion_runtime_diverges_near_sigma():
    t = ex.overdispersion_sweep(4, 1.0, 3.0, s_grid=[3.3, 3.1, 3.01, 3.001])
    below = [r[1] for r in t.rows if r[0] < 4]
    assert below == sorted(below, reverse=True)
    assert below[0] > 1e6


def test_coding_cost_columns_and_range():
    t = ex.coding_cost_sweep("agrs-int", [ex.sigma_for_info(3.0)], trials=400, seed=3)
    assert t.header == ["info", "bound", "index", "sum"]
    info, bound, index, total = t.rows[0]
    assert info == pytest.approx(3.0)
    assert total == bound + index
    assert 0 < index < 4 and bound > 0


@pytest.mark.parametrize("mode", ex.MODES)
def test_runtime_sweep_zero_mean_targets_are_cheap(mode):
    # the one-dimensional prior draw is the quantile of a single uniform; take targets near zero
    t = ex.runtime_sweep(mode, [0.05], targets=3, trials=40, seed=1)
    means = [r[6] for r in t.rows if r[2] != "mean"]
    assert all(r[8] == "ok" for r in t.rows)
    assert all(1.0 <= m <= 2.0 for m in means)
    assert t.rows[-1][2] == "mean" and t.rows[-1][5] == 120


def test_runtime_sweep_reports_se_and_counts():
    t = ex.runtime_sweep("agrs", [1.0, 3.0], targets=2, trials=30, seed=2)
    for r in t.rows:
        assert r[5] in (30, 60) and r[7] >= 0
    assert len(t.rows) == 6


def test_csv_identical_across_runs_and_workers():
    args = ("agrs", [1.0, 4.0])
    a = ex.runtime_sweep(*args, targets=3, trials=20, seed=9, workers=1).to_csv()
    b = ex.runtime_sweep(*args, targets=3, trials=20, seed=9, workers=1).to_csv()
    c = ex.runtime_sweep(*args, targets=3, trials=20, seed=9, workers=2).to_csv()
    assert a == b == c
    d = ex.coding_cost_sweep("agrs-int", [2.0], trials=1200, seed=4, workers=1).to_csv()
    e = ex.coding_cost_sweep("agrs-int", [2.0], trials=1200, seed=4, workers=3).to_csv()
    assert d == e


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        ex.runtime_sweep("fast", [1.0])


def test_verify_suite_small():
    checks = ex.verify_suite(trials=2000, seed=1, equivalence_trials=50)
    names = [c.check_name for c in checks]
    assert len(names) == len(set(names)) == 25
    failed = [c for c in checks if not c.passed]
    assert not failed, failed
    d = checks[0].as_dict()
    assert set(d) == {"check_name", "expected", "observed", "tolerance", "pass"}


def test_cli_coding_cost_to_file(tmp_path):
    out = tmp_path / "cc.csv"
    rc = cli.main(["coding-cost", "--mode", "agrs", "--sigma-grid", "1.5,3", "--trials", "100",
                   "--seed", "2", "--out", str(out)])
    assert rc == 0
    rows = _rows(out.read_text(encoding="utf-8"))
    assert rows[0] == ["info", "bound", "index", "sum"]
    assert len([r for r in rows[1:] if r]) == 2


def test_cli_runtime_stdout(capsys):
    assert cli.main(["runtime", "--info-grid", "2", "--targets", "2", "--trials", "10"]) == 0
    text = capsys.readouterr().out
    assert _rows(text)[0][:5] == ["sigma", "info", "target", "mu", "kld"]


def test_cli_overdispersion(tmp_path):
    out = tmp_path / "od.csv"
    assert cli.main(["overdispersion", "--s-grid", "3.5,6", "--out", str(out)]) == 0
    assert "d=4" in out.read_text().splitlines()[0]


def test_cli_verify_json(tmp_path, capsys):
    out = tmp_path / "v.json"
    rc = cli.main(["verify", "--trials", "500", "--out", str(out)])
    report = json.loads(out.read_text())
    assert rc == (0 if all(r["pass"] for r in report) else 1)
    assert all(set(r) == {"check_name", "expected", "observed", "tolerance", "pass"} for r in report)
    assert "two_point:mean_index" in capsys.readouterr().out


def test_cli_rejects_bad_arguments(capsys):
    assert cli.main(["runtime", "--trials", "0"]) == 2
    assert cli.main(["runtime", "--dim", "3"]) == 2
    with pytest.raises(SystemExit):
        cli.main(["runtime", "--mode", "fast"])
    with pytest.raises(SystemExit):
        cli.main(["coding-cost", "--sigma-grid", "1,x"])
