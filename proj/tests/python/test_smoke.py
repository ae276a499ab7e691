"""Python-facing smoke tests: the bound core plus the CLI entry points.

Runs under plain `python3 test_smoke.py`; the build exports PYTHONPATH,
HETVAR_CLI and HETVAR_CONFIG_DIR.
"""

import json
import math
import os
import subprocess
import sys
import tempfile

import hetvar


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def balanced_records(G, T):
    return [(g, t) for g in range(1, G + 1) for t in range(1, T + 1)]


def test_panel_and_distance():
    p = hetvar.PanelIndex(balanced_records(2, 3))
    assert p.n == 6 and p.num_clusters == 2 and p.num_periods == 3
    assert hetvar.distance(p, 0, 1) == 0  # same cluster
    assert hetvar.distance(p, 1, 4) == 0  # shared period
    assert hetvar.distance(p, 0, 5) == 2  # |1 - 3| across clusters
    approx(hetvar.delta_boundary(p, 0, 1.0), 5.0)
    approx(hetvar.delta_boundary(p, 1, 1.0), 8.0 / 3.0)
    approx(hetvar.delta_window(p, 1, 2, 1.0), 4.0)
    assert hetvar.neighborhood_cost(p, 3, 2, 1.0) == 0.0


def test_estimators_worked_example():
    p = hetvar.PanelIndex([(1, 1), (1, 2), (2, 1), (2, 2)])
    scores = [[1.0], [2.0], [3.0], [4.0]]
    cases = {
        "EHW": 30.0,
        "CRg": 58.0,
        "CRt": 52.0,
        "CGM": 80.0,
    }
    for method, want in cases.items():
        got = hetvar.variance_estimate(p, scores, method)["matrix"][0][0]
        approx(got, want)
    approx(
        hetvar.variance_estimate(p, scores, "CHS", "triangular", 1)["matrix"][0][0], 90.0
    )
    approx(
        hetvar.variance_estimate(
            p, scores, "CHS", "triangular", 1, chs_drop_adjustment=True
        )["matrix"][0][0],
        104.0,
    )
    approx(
        hetvar.variance_estimate(p, scores, "HM", "triangular", 1)["matrix"][0][0], 186.0
    )
    # reference expansion agrees
    bf = hetvar.brute_force_estimate(p, scores, "HM", "triangular", 1)
    approx(bf[0][0], 186.0)
    approx(hetvar.kernel_weight("triangular", 3, 1), 0.75)


def test_oracle():
    d1, d2 = hetvar.example1_gap([0.5, -1.0, 0.5])
    approx(d1, -0.5)
    assert d2 >= 0

    p = hetvar.PanelIndex(balanced_records(4, 4))
    dgp = hetvar.ComponentDgp(p, [], 1.0, 1.0, 0.0, 1.0)
    approx(hetvar.v_true(dgp)[0][0], 2 * 4**3 + 4**2)
    rep = hetvar.psd_gap_report(dgp, "uniform", 2)
    assert rep["psd_gap_min_eig"] >= -1e-8
    assert rep["lambda_n"] > 0


def test_regression_and_monte_carlo():
    records = balanced_records(6, 9)
    rng_state = 12345
    xs, ys = [], []
    for i, (g, t) in enumerate(records):
        rng_state = (rng_state * 6364136223846793005 + 1442695040888963407) % 2**64
        u = ((rng_state >> 11) / 2**53) - 0.5
        x = math.sin(0.7 * g + 1.3 * t) + u
        xs.append([x])
        ys.append(0.2 + 0.5 * x + 0.3 * u + 0.01 * g - 0.01 * t)
    out = hetvar.ols_sandwich(records, ys, xs, method="HM")
    slope = out["coefficients"][1]
    assert slope["name"] == "x1"
    assert slope["se"] > 0

    mc = hetvar.run_monte_carlo(6, 8, 0.25, 30, seed=11, methods=["EHW", "HM"], threads=2)
    again = hetvar.run_monte_carlo(6, 8, 0.25, 30, seed=11, methods=["EHW", "HM"], threads=1)
    assert mc["EHW"]["rate"] == again["EHW"]["rate"]
    assert mc["HM"]["mean_variance"] == again["HM"]["mean_variance"]
    assert 0 <= mc["HM"]["rate"] <= 1
    assert mc["oracle_score_variance"] > 0

    dgp = hetvar.ComponentDgp(hetvar.PanelIndex(balanced_records(10, 10)), [], 1.0, 1.0, 0.5, 1.0)
    assert hetvar.clt_check(dgp, 400, seed=3) < 0.12


def _cli():
    cli = os.environ.get("HETVAR_CLI")
    assert cli and os.path.exists(cli), "HETVAR_CLI must point at the built binary"
    return cli


def test_cli_check_and_diagnose():
    cli = _cli()
    r = subprocess.run([cli, "check", "--examples", "all", "--props"],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stdout + r.stderr
    assert "PASS" in r.stdout and "FAIL" not in r.stdout

    with tempfile.TemporaryDirectory() as tmp:
        csv = os.path.join(tmp, "panel.csv")
        with open(csv, "w") as f:
            f.write("g,t\n")
            for g, t in balanced_records(2, 3):
                f.write(f"{g},{t}\n")
        r = subprocess.run([cli, "diagnose", csv, "--s-max", "2", "--rho-theta", "0.5"],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stdout + r.stderr
        assert "delta" in r.stdout


def test_cli_estimate_matches_library():
    cli = _cli()
    records = balanced_records(5, 7)
    xs, ys = [], []
    for i, (g, t) in enumerate(records):
        x = math.cos(1.1 * g) + 0.3 * math.sin(2.2 * t) + 0.05 * ((i * 2654435761) % 97) / 97
        xs.append([x])
        ys.append(0.1 + 0.4 * x + 0.2 * math.sin(g + t))
    with tempfile.TemporaryDirectory() as tmp:
        csv = os.path.join(tmp, "panel.csv")
        with open(csv, "w") as f:
            f.write("g,t,y,x1\n")
            for (g, t), x, y in zip(records, xs, ys):
                f.write(f"{g},{t},{y!r},{x[0]!r}\n")
        out = os.path.join(tmp, "report.json")
        r = subprocess.run(
            [cli, "estimate", csv, "--methods", "EHW,HM", "--out", out],
            capture_output=True, text=True)
        assert r.returncode == 0, r.stdout + r.stderr
        rep = json.load(open(out))
        lib = hetvar.ols_sandwich(records, ys, xs, method="HM")
        cli_se = rep["coefficients"][1]["se"]["HM"]
        assert cli_se == lib["coefficients"][1]["se"]  # identical code path

    # noiseless linear model: exact coefficients, zero standard errors
    with tempfile.TemporaryDirectory() as tmp:
        csv = os.path.join(tmp, "noiseless.csv")
        with open(csv, "w") as f:
            f.write("g,t,y,x1\n")
            for (g, t), x in zip(records, xs):
                f.write(f"{g},{t},{0.25 + 2.0 * x[0]!r},{x[0]!r}\n")
        r = subprocess.run([cli, "estimate", csv, "--methods", "EHW"],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stdout + r.stderr
        assert "2.000000" in r.stdout


def test_cli_simulate_determinism():
    cli = _cli()
    cfgdir = os.environ.get("HETVAR_CONFIG_DIR", "")
    cfg = os.path.join(cfgdir, "smoke.json")
    assert os.path.exists(cfg), cfg
    with tempfile.TemporaryDirectory() as tmp:
        out1, out2 = os.path.join(tmp, "a.json"), os.path.join(tmp, "b.json")
        r1 = subprocess.run([cli, "simulate", cfg, "--threads", "1", "--out", out1],
                            capture_output=True, text=True)
        r2 = subprocess.run([cli, "simulate", cfg, "--threads", "8", "--out", out2],
                            capture_output=True, text=True)
        assert r1.returncode == 0 and r2.returncode == 0, r1.stderr + r2.stderr
        assert open(out1, "rb").read() == open(out2, "rb").read()
        # reps override produces degenerate rates
        r3 = subprocess.run([cli, "simulate", cfg, "--reps", "1"],
                            capture_output=True, text=True)
        assert r3.returncode == 0

    # schema violations exit with the config code before any compute
    with tempfile.TemporaryDirectory() as tmp:
        bad = os.path.join(tmp, "bad.json")
        with open(bad, "w") as f:
            json.dump({"unknown_key": 1, "rows": [{"clusters": 2, "periods": 2, "rho": 0.1}]}, f)
        r = subprocess.run([cli, "simulate", bad], capture_output=True, text=True)
        assert r.returncode == 1
        assert "unknown key" in r.stderr


def test_simulated_panel_csv_round_trip():
    """A panel dumped from the simulator re-estimates to identical SEs."""
    cli = _cli()
    draw = hetvar.simulate_panel(10, 14, 0.25, rep_index=3, seed=99)
    records, ys, xs = draw["records"], draw["y"], [[x] for x in draw["x"]]
    lib = hetvar.ols_sandwich(records, ys, xs, method="CHS")
    with tempfile.TemporaryDirectory() as tmp:
        csv = os.path.join(tmp, "sim.csv")
        with open(csv, "w") as f:
            f.write("g,t,y,x1\n")
            for (g, t), x, y in zip(records, xs, ys):
                f.write(f"{g},{t},{y!r},{x[0]!r}\n")
        out = os.path.join(tmp, "rep.json")
        r = subprocess.run([cli, "estimate", csv, "--methods", "CHS", "--out", out],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stdout + r.stderr
        rep = json.load(open(out))
        assert rep["coefficients"][1]["se"]["CHS"] == lib["coefficients"][1]["se"]
        # the unforced run reports both CHS variants
        assert rep["methods"] == ["CHS", "CHS-na"]


def test_bundled_table2_config():
    cfgdir = os.environ.get("HETVAR_CONFIG_DIR", "")
    cfg = json.load(open(os.path.join(cfgdir, "table2.json")))
    assert len(cfg["rows"]) == 9
    labels = [r["label"] for r in cfg["rows"]]
    assert labels[0] == "(I)" and labels[-1] == "(IX)"
    sizes = {(r["clusters"], r["periods"]) for r in cfg["rows"]}
    assert sizes == {(50, 100), (75, 75), (100, 50)}
    rhos = sorted({r["rho"] for r in cfg["rows"]})
    assert rhos == [0.25, 0.5, 0.75]


def test_cli_exit_codes():
    cli = _cli()
    with tempfile.TemporaryDirectory() as tmp:
        bad_csv = os.path.join(tmp, "bad.csv")
        with open(bad_csv, "w") as f:
            f.write("g,t,y\n1,1,not_a_number\n")
        r = subprocess.run([cli, "estimate", bad_csv], capture_output=True, text=True)
        assert r.returncode == 2
        assert "line 2" in r.stderr


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"ok {t.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
