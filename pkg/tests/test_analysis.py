import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from khopsim.analysis import (BOUND_GRID_PS, BoundParams, breakpoint_expectation,
                              line_breakpoint_expectation, monte_carlo_waste,
                              ps_from_gpu_prob, bound_grid, waste_ratio_bound, with_ps)

from reference_values import REF_BOUNDS, round_sig


def test_bound_formula_small():
    b = BoundParams(P_s=0.1, K=2, R=4, N_t=32)
    assert waste_ratio_bound(b) == pytest.approx(2 * 28 * 0.01)
    assert b.m == 8


def test_breakpoint_examples():
    assert breakpoint_expectation(BoundParams(0.0, 2, 4)) == 0.0
    assert breakpoint_expectation(BoundParams(1.0, 2, 4)) == 4.0
    b = BoundParams(0.0367, 2, 4)
    assert breakpoint_expectation(b) == pytest.approx(2 * (0.0367**2 + 0.0367**4))
    assert breakpoint_expectation(b) == pytest.approx(2.70e-3, rel=1e-2)
    assert line_breakpoint_expectation(b) == pytest.approx(2000 * breakpoint_expectation(b))


@pytest.mark.parametrize("key", sorted(REF_BOUNDS))
def test_grid_matches_printed(key):
    rows = {(r["R"], r["K"]): r["bound"] for r in bound_grid()}
    printed, sig = REF_BOUNDS[key]
    assert round_sig(rows[key], sig) == pytest.approx(printed, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(P=st.floats(0.0, 0.5), K=st.integers(1, 5), R=st.sampled_from([4, 8]))
def test_bound_monotone(P, K, R):
    b = BoundParams(P, K, R)
    assert waste_ratio_bound(b) >= waste_ratio_bound(BoundParams(P, K + 1, R)) - 1e-15
    assert waste_ratio_bound(with_ps(b, min(1.0, P + 0.01))) >= waste_ratio_bound(b)


def test_ps_from_gpu_prob():
    assert ps_from_gpu_prob(0.0, 4) == 0.0
    assert ps_from_gpu_prob(0.01, 4) == pytest.approx(1 - 0.99**4)


def test_params_validation():
    with pytest.raises(ValueError):
        BoundParams(1.5, 2, 4)
    with pytest.raises(ValueError):
        BoundParams(0.1, 2, 4, N_t=30)
    with pytest.raises(ValueError):
        monte_carlo_waste(BoundParams(0.1, 2, 4), 0, 0)


def test_monte_carlo_zero_faults():
    r = monte_carlo_waste(BoundParams(0.0, 2, 4, N_s=200), trials=5, seed=1)
    assert r.mean == 0.0 and r.excess_mean == 0.0


def test_monte_carlo_deterministic_and_below_bound():
    b = BoundParams(0.03, 2, 4, N_s=500)
    a1 = monte_carlo_waste(b, 20, seed=7)
    a2 = monte_carlo_waste(b, 20, seed=7)
    assert a1 == a2
    assert a1.excess_mean <= a1.mean
    assert a1.excess_upper <= waste_ratio_bound(b)


def test_default_ps_table():
    assert set(BOUND_GRID_PS) == {4, 8}
