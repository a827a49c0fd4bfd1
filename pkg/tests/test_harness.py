import math

import numpy as np
import pytest

from mlbermudan import harness
from mlbermudan.config import ExperimentConfig
from mlbermudan.oracle import binomial_chain, dp_solve, exact_estimator
from mlbermudan.pricing import price_single_level
from mlbermudan.rng import Stream

SMALL = ExperimentConfig(repetitions=3, seed=5)


def _drop_wall(rows):
    return [{k: v for k, v in r.items() if k != "wall_seconds"} for r in rows]


def test_default_grids():
    assert harness.default_grid(ExperimentConfig()) == (0.96, 0.48, 0.24, 0.12)
    ml = ExperimentConfig(mode="ml")
    assert [ml.schedule(e).L for e in harness.default_grid(ml)] == [4, 5, 6, 7]
    assert [ml.schedule(e).L for e in harness.default_grid(ml, paper_scale=True)] == list(range(1, 8))


def test_exact_rule_short_circuit_has_no_bias():
    ch = binomial_chain()
    sol = dp_solve(ch)
    est = exact_estimator(ch, sol)
    eps = 0.05
    recs = [
        harness.Record(eps, r, price_single_level(est, ch.simulate(400, Stream(1, (r,)))).value, 0.0, 0.0, 0.0)
        for r in range(100)
    ]
    row = harness.summarise(recs, sol.V0)
    sd = math.sqrt(row["var_est"])
    assert abs(row["bias_est"]) <= 3 * sd / 10
    # with no bias the MSE is the sampling variance
    assert row["sqrt_mse_over_epsilon"] == pytest.approx(sd / eps, rel=0.2)


def test_mse_study_is_deterministic_and_thread_independent():
    grid = (2.4, 1.2, 0.6)
    a = harness.run_mse_study(SMALL, 25.0, grid)
    b = harness.run_mse_study(SMALL, 25.0, grid)
    c = harness.run_mse_study(SMALL.replace(workers=3), 25.0, grid)
    assert _drop_wall(a) == _drop_wall(b) == _drop_wall(c)
    assert [r["epsilon"] for r in a] == list(grid)
    assert set(harness.MSE_COLUMNS) <= set(a[0])


def test_mse_study_against_stored_reference_object():
    ref = harness.Reference(25.0, 0.01, 10, 10, 2)
    rows = harness.run_mse_study(SMALL, ref, (2.4,))
    assert rows[0]["bias_est"] == pytest.approx(rows[0]["mean"] - 25.0, rel=1e-15)


def test_mse_study_needs_reference():
    with pytest.raises(ValueError):
        harness.run_mse_study(SMALL, None, (1.0,))


def test_single_level_measured_cost_equals_prediction():
    rows, slope = harness.run_complexity_study(SMALL, (0.96, 0.48, 0.24))
    for r in rows:
        assert r["measured_cost"] == r["predicted_cost"]
        assert r["theoretical_exponent"] == 3.0
    assert math.isfinite(slope)


def test_multilevel_measured_cost_includes_coarse_levels():
    cfg = SMALL.replace(mode="ml")
    eps = harness.default_grid(cfg, paper_scale=True)[:3]
    rows, _ = harness.run_complexity_study(cfg, eps)
    for r in rows:
        s = cfg.schedule(r["epsilon"])
        coarse = sum(s.k[l - 1] ** 2 + s.n[l] * s.k[l - 1] for l in range(1, s.L + 1))
        assert r["measured_cost"] == r["predicted_cost"] + coarse
        assert r["theoretical_exponent"] == 2.5


def test_complexity_study_needs_three_points():
    with pytest.raises(ValueError):
        harness.run_complexity_study(SMALL, (0.5, 0.25))


def test_reference_round_trip(tmp_path):
    ref = harness.Reference(25.26, 0.0032, 2000, 20000, 40, "test")
    harness.save_reference(ref, tmp_path / "r.json")
    back = harness.load_reference(tmp_path / "r.json")
    assert back == ref
    lo, hi = back.ci
    assert lo == pytest.approx(25.26 - 1.96 * 0.0032) and hi == pytest.approx(25.26 + 1.96 * 0.0032)


def test_missing_reference_file():
    with pytest.raises(FileNotFoundError, match="missing.json"):
        harness.load_reference("missing.json")


def test_compute_reference_small():
    ref = harness.compute_reference(SMALL, 8, 50, 4)
    assert ref.repetitions == 4 and ref.std_error > 0


def test_csv_has_header_and_full_precision(tmp_path):
    rows = [{"epsilon": 0.1 + 0.2, "L": 3, "value": 1 / 3}]
    path = tmp_path / "x.csv"
    harness.write_csv(path, rows, ["epsilon", "L", "value"], {"method": "mesh"})
    text = path.read_text().splitlines()
    assert text[0] == f"# {harness.SCHEMA} method=mesh"
    assert text[2] == "0.30000000000000004,3,0.33333333333333331"
    back, _ = harness.read_csv(path)
    assert back == rows


def test_read_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / "y.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        harness.read_csv(path)


def test_plot_files(tmp_path):
    mse = [{"epsilon": 0.5, "sqrt_mse_over_epsilon": 0.9}, {"epsilon": 0.25, "sqrt_mse_over_epsilon": 1.1}]
    comp = [{"epsilon": 0.5, "measured_cost": 100.0}, {"epsilon": 0.25, "measured_cost": 800.0}]
    out = harness.plot_files(tmp_path / "fig", mse, comp)
    assert [p.name for p in out] == ["fig_rmse.csv", "fig_cost.csv"]
    rows, _ = harness.read_csv(out[1])
    np.testing.assert_allclose([r["log_cost"] for r in rows], np.log([100.0, 800.0]))
