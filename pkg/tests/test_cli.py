import io
import json
import math

import pandas as pd
import pytest
import yaml

from uqcov import cli, cubature
from uqcov.analysis import c1p_bound, optimal_a
from uqcov.density import Exponential, PolyTail
from uqcov.integrands import get_builtin
from uqcov.transform import PolyGrowth, ScaledInverseCdf, TransformedIntegrand


def _run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _csv_frames(text):
    return [pd.read_csv(io.StringIO(block)) for block in text.split("\n\n") if block]


def test_test1_csv(capsys):
    code, out, _ = _run(capsys, "test1", "--ns", "10,100", "--format", "csv")
    assert code == 0
    (frame,) = _csv_frames(out)
    assert list(frame.columns) == ["n", "a=a*", "a=1.5", "a=1"]
    assert frame["n"].tolist() == [10, 100]

    density = Exponential(1.0)
    linear = get_builtin("linear")
    for label, a in [("a=a*", optimal_a(density, math.inf)[0]), ("a=1", 1.0)]:
        g = TransformedIntegrand.homogeneous(
            linear.f, ScaledInverseCdf(density, a), density, 1
        )
        expected = [abs(cubature.MidpointRule(n).apply(g) - 1.0) for n in (10, 100)]
        assert frame[label].tolist() == pytest.approx(expected, rel=1e-12)

    assert frame["a=a*"][1] < frame["a=1"][1]


def test_table_and_csv_agree(capsys):
    code, table, _ = _run(capsys, "test2", "--ns", "10")
    assert code == 0
    assert table.startswith("midpoint rule, f(x) = |x|, Gaussian density\n")
    assert "a=sqrt2" in table

    code, out, _ = _run(capsys, "test2", "--ns", "10", "--format", "csv")
    assert code == 0
    (frame,) = _csv_frames(out)
    assert f"{frame['a=1'][0]:.6e}" in table


def test_test3(capsys):
    code, out, _ = _run(capsys, "test3", "--ns", "1024", "--dims", "2", "--format", "csv")
    assert code == 0
    (frame,) = _csv_frames(out)
    assert frame["d"].tolist() == [2]
    assert frame["a=a*"][0] < frame["a=1"][0]


def test_astar(capsys):
    code, out, _ = _run(capsys, "astar", "--lambda", "2", "--p", "inf", "--format", "csv")
    assert code == 0
    (frame,) = _csv_frames(out)
    a_star, bound = optimal_a(Exponential(2.0), math.inf)
    assert frame["a_star"][0] == pytest.approx(a_star, rel=1e-12)
    assert frame["c1p_bound"][0] == pytest.approx(bound, rel=1e-12)
    assert frame["bound_per_scale"][0] == pytest.approx(bound / 2.0, rel=1e-12)


def test_norms_polytail(capsys):
    code, out, _ = _run(
        capsys, "norms", "--density", "polytail", "--c", "3", "--format", "csv"
    )
    assert code == 0
    (frame,) = _csv_frames(out)
    report = c1p_bound(PolyTail(3.0), PolyGrowth(2.0, PolyTail(3.0)), math.inf)
    assert frame["c1p_bound"][0] == pytest.approx(report.c1p_bound, rel=1e-10)
    assert frame["method"][0] == report.method.value


def test_dofeps(capsys):
    code, out, _ = _run(capsys, "dofeps", "--betas", "2,3", "--format", "csv")
    assert code == 0
    (frame,) = _csv_frames(out)
    assert frame["beta"].tolist() == [2.0, 3.0]
    assert frame["d_eps"].tolist() == [4, 3]


def test_integrate(capsys, tmp_path):
    dump = tmp_path / "g.csv"
    code, out, _ = _run(
        capsys,
        "integrate",
        "--f",
        "builtin:linear",
        "--n",
        "1024",
        "--rule",
        "lattice",
        "--dump-integrand",
        str(dump),
        "--format",
        "csv",
    )
    assert code == 0
    (frame,) = _csv_frames(out)
    assert frame["n"][0] == 1024
    assert frame["exact"][0] == 1.0
    assert frame["abs_error"][0] < 1e-4

    nodes = pd.read_csv(dump)
    assert list(nodes.columns) == ["t", "g"]
    assert len(nodes) == 1024
    assert nodes["t"][0] == 0.0


def test_mdm(capsys):
    code, out, _ = _run(
        capsys, "mdm", "--f", "builtin:sum", "--beta", "3", "--eps", "0.01", "--format", "csv"
    )
    assert code == 0
    plan, summary = _csv_frames(out)
    assert plan["subset"].tolist()[:2] == ["{}", "{1}"]
    assert summary["exact"][0] == 3.0
    assert summary["value"][0] == pytest.approx(3.0, abs=1e-2)
    assert summary["error_bound"][0] <= summary["target"][0]


def test_settings_file(capsys, tmp_path):
    settings_file = tmp_path / "settings.yml"
    with open(settings_file, "w") as f:
        yaml.dump({"ns": [10, 100], "format": "csv"}, f)

    code, out, _ = _run(capsys, "test1", "--settings", str(settings_file))
    assert code == 0
    assert _csv_frames(out)[0]["n"].tolist() == [10, 100]

    # KEY=VALUE beats the file, flags beat both
    code, out, _ = _run(capsys, "test1", "--settings", str(settings_file), "ns=20")
    assert code == 0
    assert _csv_frames(out)[0]["n"].tolist() == [20]

    code, out, _ = _run(
        capsys, "test1", "--settings", str(settings_file), "ns=20", "--ns", "30"
    )
    assert code == 0
    assert _csv_frames(out)[0]["n"].tolist() == [30]


def test_out_file(capsys, tmp_path):
    out_file = tmp_path / "astar.csv"
    code, out, _ = _run(capsys, "astar", "--format", "csv", "--out", str(out_file))
    assert code == 0
    assert out == ""
    assert pd.read_csv(out_file)["density"][0] == "exp"


@pytest.mark.parametrize(
    ("argv", "message"),
    [
        (["astar", "--n", "10"], "--n: not used by astar"),
        (["astar", "--p", "0.5"], "--p:"),
        (["norms", "--density", "polytail", "--a", "2"], "--a: not used"),
        (["norms", "--b", "2"], "--b: only used with the polytail density"),
        (["norms", "--density", "polytail", "--c", "1.5"], "--c: polytail requires"),
        (["integrate", "--shift", "0.5"], "--shift"),
        (["integrate", "--f", "builtin:nope"], "unknown integrand"),
        (["integrate", "--dims", "1,2"], "--dims: integrate takes a single dimension"),
        (["test1", "--ns", "0"], "--ns: must be >= 1"),
        (["test1", "bogus=1"], "bogus: unknown setting"),
        (["mdm", "--density", "gauss", "--f", "builtin:sum"], "node"),
    ],
)
def test_errors(capsys, argv, message):
    code, out, err = _run(capsys, *argv)
    assert code == 1
    assert out == ""
    assert err.startswith("uqcov: error: ")
    assert message in err


def test_settings_file_errors(capsys, tmp_path):
    settings_file = tmp_path / "settings.json"
    with open(settings_file, "w") as f:
        json.dump({"bogus": 1}, f)
    code, _, err = _run(capsys, "astar", "--settings", str(settings_file))
    assert code == 1
    assert "bogus: unknown setting" in err

    code, _, err = _run(capsys, "astar", "--settings", str(tmp_path / "missing.json"))
    assert code == 1
    assert "failed to read" in err

    code, _, err = _run(capsys, "astar", "--settings", str(tmp_path / "settings.txt"))
    assert code == 1
    assert "not a supported settings file" in err


def test_invalid_choice_exits_via_argparse(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["astar", "--density", "cauchy"])
    assert e.value.code == 2
