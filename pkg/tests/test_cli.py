import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from oracles import FROZEN
from sigmafinite import cli
from sigmafinite.exceptions import NotSigmaFinite
from sigmafinite.qvague import lindley_posterior_proper


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def sidecar(out, kind):
    return json.loads(out.with_name(out.name + f".{kind}.json").read_text())


def test_stone_figure_defaults(tmp_path):
    code, out = run(tmp_path, "stone-figure")
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["theta", "dens_xM_x1", "dens_xM_x2", "dens_cross", "dens_DD"]
    data = np.array(rows, dtype=float)
    assert data.shape == (2000, 5)
    assert data[0, 0] > 0 and data[-1, 0] == 10.0
    assert np.max(np.abs(data[:, 1] - data[:, 3])) < 1e-3
    assert np.max(np.abs(data[:, 2] - data[:, 3])) > 1e-2
    t = data[:, 0]
    dd = t * np.exp(-t) / (1 + t) ** 2 / FROZEN["naive_normalizer"]
    assert np.max(np.abs(data[:, 4] - dd)) < 1e-8
    man = sidecar(out, "manifest")
    assert man["subcommand"] == "stone-figure" and man["parameters"]["M"] == 500.0
    assert man["seed"] is None


def test_csv_format_is_exact(tmp_path):
    _, out = run(tmp_path, "lindley", "--x", "0.1", "--n", "3")
    assert b"\r" not in out.read_bytes()
    _, rows = read_csv(out)
    assert float(rows[0][2]) == float(lindley_posterior_proper(0.1, 3.0))


def test_gibbs_flat_and_gaussian(tmp_path):
    code, out = run(tmp_path, "gibbs", "--seed", "7", name="flat.csv")
    assert code == 0
    diag = sidecar(out, "diagnostics")
    assert diag["ks_pvalue"] > 0.01 and diag["drift_flagged"]
    header, rows = read_csv(out)
    assert header == ["t", "theta1", "theta2", "delta"] and len(rows) == 10_000
    code, out = run(tmp_path, "gibbs", "--prior", "gaussian", "--tau2", "1", "--kappa2", "1", name="g.csv")
    assert code == 0 and not sidecar(out, "diagnostics")["drift_flagged"]


def test_gibbs_gaussian_needs_variances(tmp_path):
    code, _ = run(tmp_path, "gibbs", "--prior", "gaussian")
    assert code == 2


def test_lindley_table(tmp_path):
    _, out = run(tmp_path, "lindley", "--x", "0", "2", "--n", "1.7320508075688772", "10000")
    _, rows = read_csv(out)
    table = {(float(r[0]), float(r[1])): (float(r[2]), float(r[3])) for r in rows}
    assert table[(0.0, 10000.0)][1] == pytest.approx(1 / (1 + math.sqrt(2 * math.pi)), rel=1e-14)
    assert round(table[(0.0, 10000.0)][1], 3) == 0.285
    assert table[(2.0, 10000.0)][0] > 0.999
    assert table[(0.0, math.sqrt(3))][0] == pytest.approx(2 / 3, rel=1e-12)
    for x in (0.0, 2.0):
        assert len({v[1] for k, v in table.items() if k[0] == x}) == 1


@pytest.mark.parametrize(
    "case, expected",
    [
        ("hM", {"Lebesgue": True}),
        ("gauss_flat", {"Lebesgue": True}),
        ("lindley_prior", {"delta_0": True, "1/2 delta_0 + Lebesgue": False}),
    ],
)
def test_qvague_demo(tmp_path, capsys, case, expected):
    code, out = run(tmp_path, "qvague-demo", "--case", case)
    assert code == 0
    verdicts = sidecar(out, "diagnostics")["verdicts"]
    assert {k: v["converges"] for k, v in verdicts.items()} == expected
    printed = capsys.readouterr().out
    for label, conv in expected.items():
        assert f"{label}: converges={str(conv).lower()}" in printed
    if case == "hM":
        _, rows = read_csv(out)
        scales = [float(r[2]) / float(r[1]) for r in rows]
        assert np.allclose(scales, 1.0, rtol=1e-9)


def test_qvague_unknown_case(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "qvague-demo", "--case", "nope")
    assert exc.value.code == 2
    with pytest.raises(cli.UnknownCase):
        cli.cmd_qvague_demo("nope")


def test_igmrf(tmp_path):
    code, out = run(tmp_path, "igmrf", "--n", "7", "--mu", "2.5", "--samples", "4", "--seed", "3")
    assert code == 0
    _, rows = read_csv(out)
    data = np.array(rows, dtype=float)
    assert data.shape == (28, 3)
    for s in range(4):
        assert abs(data[data[:, 0] == s, 2].mean() - 2.5) < 1e-12
    assert sidecar(out, "manifest")["seed"] == 3


def test_igmrf_two_points(tmp_path):
    code, out = run(tmp_path, "igmrf", "--n", "2", "--mu", "-1")
    assert code == 0
    data = np.array(read_csv(out)[1], dtype=float)
    pairs = data[:, 2].reshape(-1, 2)
    assert np.allclose(pairs.mean(axis=1), -1.0, atol=1e-12)


def test_igmrf_quadratic_form_summary(tmp_path):
    _, out = run(tmp_path, "igmrf", "--n", "50", "--samples", "10000", "--seed", "1")
    diag = sidecar(out, "diagnostics")
    assert diag["mean_quad_form"] == pytest.approx(49, rel=0.03)
    assert diag["max_abs_mean_minus_mu"] < 1e-12


def test_igmrf_invalid_size_exit_2(tmp_path):
    code, _ = run(tmp_path, "igmrf", "--n", "1")
    assert code == 2


def test_numerical_failure_exit_1(tmp_path, monkeypatch, capsys):
    def boom(**kw):
        raise NotSigmaFinite("marginal is infinite")

    monkeypatch.setitem(cli.COMMANDS, "lindley", (boom, ("x", "n")))
    code, out = run(tmp_path, "lindley")
    assert code == 1
    assert "numerical failure" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["gibbs", "--seed", "5", "--iters", "300"],
        ["igmrf", "--n", "9", "--samples", "3", "--seed", "2"],
        ["lindley"],
        ["stone-figure", "--x", "0.5", "--M", "50"],
    ],
)
def test_manifest_round_trip(tmp_path, argv):
    code, out = run(tmp_path, *argv, name="first.csv")
    assert code == 0
    man = out.with_name(out.name + ".manifest.json")
    replay = tmp_path / "replay.csv"
    assert cli.main(["--manifest", str(man), argv[0], "--out", str(replay)]) == 0
    assert replay.read_bytes() == out.read_bytes()
    # without an --out the manifest's own output path is reused
    original = out.read_bytes()
    out.unlink()
    assert cli.main(["--manifest", str(man)]) == 0
    assert out.read_bytes() == original


def test_seeded_runs_are_bit_identical(tmp_path):
    _, a = run(tmp_path, "gibbs", "--seed", "9", "--iters", "500", name="a.csv")
    _, b = run(tmp_path, "gibbs", "--seed", "9", "--iters", "500", name="b.csv")
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("argv", [[], ["lindley", "--plot"], ["gibbs", "--iters", "x"], ["--manifest", "/nonexistent.json"]])
def test_usage_errors_exit_2(tmp_path, argv):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 2


def test_plot_renders_png(tmp_path):
    pytest.importorskip("matplotlib")
    code, out = run(tmp_path, "gibbs", "--iters", "200", "--plot")
    assert code == 0 and out.with_suffix(".png").exists()


def test_module_entry_point(tmp_path):
    out = tmp_path / "l.csv"
    res = subprocess.run([sys.executable, "-m", "sigmafinite", "lindley", "--out", str(out)], capture_output=True)
    assert res.returncode == 0 and out.exists()
