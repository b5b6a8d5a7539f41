import math
from fractions import Fraction

import pytest

import testspace as ts


def test_version():
    assert ts.__version__


def test_diamond_sizes():
    assert ts.diamond(2).num_vertices == 12
    assert ts.diamond(2).num_edges == 16
    assert ts.laakso(1).num_vertices == 6


def test_tree_distances():
    space = ts.apsp(ts.binary_tree(2))
    assert len(space) == 7
    assert space.dist(3, 4) == 2
    assert space.dist(3, 6) == 4
    assert ts.verify_metric(space) == []


def test_metric_from_matrix_detects_triangle_violation():
    space = ts.MetricSpace([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    assert ("triangle", 0, 2, 1) in ts.verify_metric(space)
    assert space.dist(0, 2) == 3


def test_fraction_and_string_entries():
    space = ts.MetricSpace([[0, Fraction(1, 3)], ["1/3", 0]])
    assert space.dist(0, 1) == Fraction(1, 3)


def test_json_round_trip():
    space = ts.apsp(ts.diamond(1))
    again = ts.MetricSpace.from_json(space.to_json())
    assert again.matrix() == space.matrix()


def test_bourgain_distortion_at_most_three():
    for depth in range(1, 5):
        assert ts.bourgain_distortion(depth)["distortion_power"] <= 3


def test_explicit_vectors():
    report = ts.distortion(ts.MetricSpace([[0, 2], [2, 0]]), [[0], [2]], "l1")
    assert report["distortion_power"] == 1


def test_tree_walk_exact_matches_analytic():
    exact = ts.markov_convexity("tree", 3, 2.0, "exact")
    analytic = ts.markov_convexity("tree", 3, 2.0, "analytic")
    assert exact["rhs"] == 8
    assert float(exact["lhs"]) == pytest.approx(float(analytic["lhs"]), rel=1e-9)


def test_monte_carlo_is_deterministic():
    a = ts.markov_convexity("diamond", 2, mode="mc", seed=7, samples=500)
    b = ts.markov_convexity("diamond", 2, mode="mc", seed=7, samples=500)
    assert a == b


def test_errors_map_to_exceptions():
    with pytest.raises(ts.ValidationError):
        ts.markov_convexity(mode="mc")
    with pytest.raises(ts.CapExceeded):
        ts.markov_convexity("tree", 6, mode="exact")
    assert issubclass(ts.ValidationError, ts.Error)


def test_c4_optimum():
    result = ts.min_distortion_l2(ts.cycle(4))
    assert result["lower"] <= math.sqrt(2) + 1e-9
    assert result["upper"] >= math.sqrt(2) - 1e-9
    assert result["c_star"] == pytest.approx(math.sqrt(2), abs=1e-4)


def test_james_and_cycle_oracle():
    infimum, argmin, _ = ts.james_alpha(2)
    assert infimum == Fraction(1, 3)
    assert argmin == [1, -2]
    assert ts.cycle_tree_oracle(8, 6)[0] is None


def test_diamond_martingale():
    result = ts.diamond_martingale(3)
    assert result["ok"]
    assert result["ell"] == Fraction(1, 4)
    assert result["alpha"] == 1
    assert ts.diamond_thickness(2) == 1


def test_rademacher_tree():
    assert ts.rademacher_tree_ok(4)
    assert ts.broken_lines(3)["all_geodesic"]
