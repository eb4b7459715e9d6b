import csv

import numpy as np
import pytest

from vlsf.bounds import feasibility_floor, lower_bound_trajectory, upper_bound_trajectory, ReferenceParams
from vlsf.channel import ChannelParams
from vlsf.errors import DomainError, FeasibilityError
from vlsf.tuner import Objective, TuneGrid, bound_traces, grid_search, mean_bounds_at_n

OPERATING = ChannelParams(rho=0.3, sigma_z2=1.0, p0=100.0)


def tiny_grid(**kw):
    args = dict(r_values=(2.0, 4.0), sigma_h2_values=(1.0, 1.45, 3.0), n_eval=20, trace_count=10) | kw
    return TuneGrid(**args)


def test_single_point_matches_trajectories():
    grid = tiny_grid(r_values=(4.0,), sigma_h2_values=(1.45,))
    res = grid_search(grid, OPERATING)
    (pt,) = res.table
    traces = bound_traces(OPERATING, 20, 10, 0)
    ref = ReferenceParams(4.0, 1.45, 0.3)
    psi = np.mean([lower_bound_trajectory(t.x, t.y, ref, OPERATING).value[-1] for t in traces])
    phi = np.mean([upper_bound_trajectory(t.x, t.y, 1.45, OPERATING).value[-1] for t in traces])
    assert pt.mean_psi == pytest.approx(psi, rel=1e-10)
    assert pt.mean_phi == pytest.approx(phi, rel=1e-10)
    assert res.best is pt


def test_infeasible_points_recorded():
    res = grid_search(tiny_grid(), OPERATING)
    assert len(res.table) == 6
    bad = [(p.r, p.sigma_h2) for p in res.table if not p.feasible]
    assert bad == [(4.0, 1.0)]
    assert all(np.isnan(p.score) for p in res.table if not p.feasible)


def test_all_infeasible_raises():
    with pytest.raises(FeasibilityError, match="sigma_h2 >"):
        grid_search(tiny_grid(sigma_h2_values=(0.5, 0.6)), OPERATING)


def test_matched_reference_wins_without_fading_memory():
    # with rho = 0 and no power the output carries no information, so the
    # penalty alone ranks the points and it vanishes at sigma_h2 = 1
    ch = ChannelParams(0.0, 1.0, 0.0)
    res = grid_search(tiny_grid(sigma_h2_values=(0.9, 1.0, 1.2, 2.0)), ch)
    for r in (2.0, 4.0):
        row = [p for p in res.table if p.r == r and p.feasible]
        assert max(row, key=lambda p: p.score).sigma_h2 == 1.0


def test_common_random_numbers(tmp_path):
    a = grid_search(tiny_grid(), OPERATING)
    b = grid_search(tiny_grid(), OPERATING)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert a.trace_seeds == b.trace_seeds


def test_best_is_table_argmax():
    res = grid_search(tiny_grid(), OPERATING)
    scores = [p.score for p in res.table if p.feasible]
    assert res.best.score == max(scores)
    assert [p.score for p in res.ranked] == sorted(scores, reverse=True)


def test_dominance_at_every_point():
    res = grid_search(tiny_grid(), OPERATING)
    assert all(p.mean_psi <= p.mean_phi for p in res.table if p.feasible)


def test_crossing_time_objective():
    grid = tiny_grid(r_values=(4.0,), sigma_h2_values=(1.45, 3.0), objective="MeanCrossingTime",
                     campaign_trials=5, n_max=200)
    res = grid_search(grid, OPERATING)
    assert res.objective is Objective.MEAN_CROSSING_TIME
    assert all(p.score < 0 for p in res.table)


def test_default_grid_shape():
    grid = TuneGrid.default(0.3)
    assert len(grid.r_values) == 12 and len(grid.sigma_h2_values) == 16
    assert grid.sigma_h2_values[0] > feasibility_floor(grid.r_values[0], 0.3)


@pytest.mark.parametrize("bad", [dict(r_values=()), dict(r_values=(1.0, 2.0)), dict(r_values=(3.0, 2.0)),
                                 dict(sigma_h2_values=(-1.0, 2.0))])
def test_grid_validation(bad):
    with pytest.raises(DomainError):
        tiny_grid(**bad)


def test_mean_bounds_penalty_is_shared():
    traces = bound_traces(OPERATING, 15, 4, 2)
    _, _, pen_a = mean_bounds_at_n(traces[:2], 4.0, 1.45, OPERATING)
    _, _, pen_b = mean_bounds_at_n(traces[2:], 4.0, 1.45, OPERATING)
    assert pen_a == pen_b


def test_csv(tmp_path):
    grid_search(tiny_grid(), OPERATING).to_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["r", "sigma_h2", "feasible", "score", "mean_psi", "mean_phi"]
    assert len(rows) == 7
