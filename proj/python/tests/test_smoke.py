import json
import math

import pytest

import mfgswitch as mf


def pair_params(weights):
    return mf.CostParams(2, 1.0, weights, earliness_rate=1.0, miss_penalty=10.0)


def test_parallel_links_exact_and_float():
    assert mf.solve_parallel_links_exact([1, 2, 3]) == ["6/11", "3/11", "2/11"]
    shares = mf.solve_parallel_links([1.0, 2.0, 3.0])
    for got, want in zip(shares, [6 / 11, 3 / 11, 2 / 11]):
        assert abs(got - want) <= 1e-12


def test_example_tree():
    s = mf.solve_example3()
    assert (s["lambda1"], s["lambda2"], s["lambda23"], s["lambda24"]) == ("13/18", "5/18", "2/5", "3/5")
    assert s["path_cost"] == "13/18"


def test_single_target_value():
    params = mf.CostParams(1, 2.0, [1.0, 1.0])
    rho = mf.MassField.constant(2.0, [1.0, 0.0])
    table = mf.solve_value(rho, params, mf.TimeGrid(2.0, 64))
    for i in range(64):
        t = table.grid.time(i)
        assert math.isclose(table.value(0, i), 1.0 / (2.0 - t), rel_tol=1e-13)
    assert table.value(1, 64) == 0.0


def test_equilibrium_symmetric_split():
    initial = mf.MassField.constant(1.0, [1.0, 0.0, 0.0, 0.0])
    rep = mf.find_equilibrium(pair_params([1.0] * 4), initial, mf.EpsPartition(1.0, 8, 32))
    assert rep.certified
    assert rep.residual < 1e-6
    assert abs(rep.rho[1].at(0.9) - 0.5) <= 1e-6
    assert mf.check_conservation(rep.rho, 0.0)
    assert len(rep.trace) == rep.iterations


def test_best_response_and_round_trip():
    initial = mf.MassField.constant(1.0, [1.0, 0.0, 0.0, 0.0])
    part = mf.EpsPartition(1.0, 8, 32)
    br, plan = mf.best_response(initial, pair_params([1.0, 0.6, 1.7, 1.2]), part, initial)
    assert mf.check_conservation(br, 0.0)
    assert plan.entries[0].node.bits() == "00"
    again = mf.MassField.from_json(br.to_json())
    assert mf.field_l2_distance(br, again) == 0.0


def test_refinement_distances():
    initial = mf.MassField.constant(1.0, [1.0, 0.0, 0.0, 0.0])
    rep = mf.refine_epsilon(pair_params([1.0] * 4), initial, [8, 16, 32], 256)
    assert rep.all_certified()
    assert rep.distances_decreasing()


def test_monotonicity_reports():
    par = mf.check_monotonicity(mf.FixedSwitchInstance.parallel_links([1.0, 2.0, 3.0]), 5000, [1.0])
    assert par.passed() and par.min_values[0] > 0
    flat = mf.check_monotonicity(mf.FixedSwitchInstance.parallel_links([1.0, 2.0, 3.0]).with_slope(2, 0.0), 500, [1.0])
    assert not flat.passed()


def test_config_and_execute():
    cfg = mf.parse_config('{"N":1,"T":2,"m":8,"weights":{"0":1,"1":1},"initial":{"0":1.0}}')
    assert cfg.grid_divisor == 32
    status, summary, files = mf.execute(cfg, "verify-appendix-a")
    assert status == 0
    assert json.loads(files["report.json"])["all_match"] is True
    with pytest.raises(mf.Error, match="use m"):
        mf.parse_config('{"N":1,"T":2,"epsilon":0.25,"weights":[1,1],"initial":[1,0]}')
    with pytest.raises(mf.Error):
        mf.CostParams(1, 1.0, [1.0])
