import json

import pytest

from walkmax.cli import main

LAZY = {"span": 1, "probs": {"-1": 0.3, "0": 0.5, "1": 0.2}}
SYM = {"span": 1, "probs": {"-1": 0.25, "0": 0.5, "1": 0.25}}


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, doc in [("lazy", LAZY), ("sym", SYM), ("z", {"span": 1, "probs": {"1": 0.5, "2": 0.5}}),
                      ("periodic", {"span": 1, "probs": {"-2": 0.5, "2": 0.5}}),
                      ("sweep", {"base_pmf": SYM, "a_grid": [0.1, 0.05], "c": 1.0}),
                      ("badsweep", {"base_pmf": SYM, "a_grid": [0.05, 0.1]}),
                      ("remainder", {"base_pmf": SYM, "y_grid": [50, 100],
                                     "z_pmf": {"span": 1, "probs": {"1": 0.5, "2": 0.5}}}),
                      ("noroot", {"base_pmf": SYM, "C": 1.9, "y_grid": [2],
                                  "z_pmf": {"span": 1, "probs": {"1": 1.0}}})]:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    return paths


def test_maxdist_lindley(files, capsys):
    assert main(["maxdist", "--dist", files["lazy"], "--ymax", "50", "--method", "lindley"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "y,p,err_bound"
    assert len(lines) == 52
    y, p, _ = lines[3].split(",")
    assert y == "2" and float(p) == pytest.approx(4 / 27, abs=1e-9)


def test_maxdist_out_file(files, tmp_path, capsys):
    out = tmp_path / "pi.csv"
    assert main(["maxdist", "--dist", files["lazy"], "--ymax", "5", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text().startswith("y,p,err_bound\n0,")


def test_maxdist_monte_carlo_seeded(files, capsys):
    args = ["maxdist", "--dist", files["lazy"], "--ymax", "3", "--method", "monte_carlo",
            "--seed", "4", "--paths", "5000"]
    main(args)
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first


def test_sweep(files, capsys):
    assert main(["sweep", "--config", files["sweep"]]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "a,y,c,method,exact,asymptotic,ratio,err_bound"
    assert [l.split(",")[1] for l in lines[1:]] == ["20", "10"]


def test_remainder(files, capsys):
    assert main(["remainder", "--config", files["remainder"]]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


@pytest.mark.parametrize("cmd", ["validate", "ladder", "asymptotic", "renewal"])
def test_other_subcommands(files, capsys, cmd):
    args = [cmd, "--dist", files["z" if cmd == "renewal" else "lazy"]]
    if cmd in ("asymptotic", "renewal"):
        args += ["--ymax", "4"]
    assert main(args) == 0
    assert capsys.readouterr().out.count("\n") >= 5


def test_ladder_output(files, capsys):
    main(["ladder", "--dist", files["lazy"]])
    fields = dict(l.split(",") for l in capsys.readouterr().out.splitlines()[1:])
    assert float(fields["total_A"]) == pytest.approx(2 / 3, abs=1e-10)
    assert float(fields["mean_tau_minus"]) == pytest.approx(3.0, abs=1e-9)


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err


def test_missing_arguments(capsys):
    assert main([]) == 1
    assert main(["maxdist", "--dist", "x.json"]) == 1


def test_config_errors_exit_1(files, capsys):
    assert main(["sweep", "--config", files["badsweep"]]) == 1
    assert main(["validate", "--dist", files["periodic"]]) == 1
    assert main(["maxdist", "--dist", files["sym"], "--ymax", "3"]) == 1
    assert main(["maxdist", "--dist", "/nonexistent.json", "--ymax", "3"]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 4 and all(l.startswith("walkmax: ") for l in err)


def test_numerical_failure_exits_2(files, capsys):
    # A = 1 - 1.9/2 = 0.05 puts the root at z = 20, beyond the bracket cap
    assert main(["remainder", "--config", files["noroot"]]) == 2
    assert "numerical failure" in capsys.readouterr().err
