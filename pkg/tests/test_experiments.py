import pytest

from adtime import experiments as ex
from adtime.scenario import GenSpec

SMALL = GenSpec(n_followers=3, m_blocks=4)
HEADER = "scenario_seed,algorithm,sweep_param,param_value,revenue,sum_utility,iterations,gap,wall_time_ms"


def test_header_is_exact():
    assert ex.format_csv([]).splitlines()[0] == HEADER


def test_rows_ordered_and_complete():
    rows = ex.sweep_time(SMALL, [0.5, 2.0], [3, 1], workers=1)
    keys = [(r.scenario_seed, r.param_value, r.algorithm) for r in rows]
    # sorted by seed, then parameter, then algorithm, whatever the request order
    assert keys == [(s, t, a) for s in (1, 3) for t in (0.5, 2.0) for a in ("gbd", "heuristic", "random")]


def test_worker_count_does_not_change_bytes():
    one = ex.format_csv(ex.sweep_density(SMALL, [0.05, 0.2], range(4), workers=1))
    two = ex.format_csv(ex.sweep_density(SMALL, [0.05, 0.2], range(4), workers=2))
    assert one == two


def test_timing_column_blank_unless_requested():
    rows = ex.sweep_time(SMALL, [1.0], [0], ["heuristic"], workers=1)
    assert ex.format_csv(rows).splitlines()[1].endswith(",")
    assert not ex.format_csv(rows, include_timing=True).splitlines()[1].endswith(",")


def test_gbd_dominates_in_every_row():
    rows = ex.sweep_time(SMALL, [0.25, 1.0, 4.0], range(3), workers=1)
    by_key = {(r.scenario_seed, r.param_value, r.algorithm): r.revenue for r in rows}
    for (seed, t, alg), revenue in by_key.items():
        assert by_key[(seed, t, "gbd")] >= revenue - 1e-6


def test_summary_means():
    rows = ex.sweep_time(SMALL, [1.0], [0, 1], ["heuristic"], workers=1)
    (s,) = ex.summarize(rows)
    assert s.n_seeds == 2
    assert s.mean_revenue == pytest.approx((rows[0].revenue + rows[1].revenue) / 2)
    assert ex.format_summary_csv([s]).splitlines()[0].startswith("algorithm,sweep_param")


@pytest.mark.parametrize("values", [[], [1.0, 1.0], [2.0, 1.0], [-1.0]])
def test_bad_sweep_values(values):
    with pytest.raises(ValueError):
        ex.sweep_time(SMALL, values, [0], workers=1)


def test_bad_algorithm_and_seeds():
    with pytest.raises(ValueError):
        ex.sweep_time(SMALL, [1.0], [0], ["simplex"], workers=1)
    with pytest.raises(ValueError):
        ex.sweep_time(SMALL, [1.0], [], workers=1)
    with pytest.raises(ValueError):
        ex.compare(SMALL, range(5), workers=1)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv(ex.THREADS_ENV, "3")
    assert ex.worker_count(10) == 3
    assert ex.worker_count(2) == 2
    for bad in ("0", "two"):
        monkeypatch.setenv(ex.THREADS_ENV, bad)
        with pytest.raises(ValueError):
            ex.worker_count(4)


def test_baseline_seed_differs_from_scenario_seed():
    assert ex.baseline_seed(0) != 0
    assert len({ex.baseline_seed(s) for s in range(100)}) == 100


def test_compare_verdict():
    rows = ex.compare(SMALL, range(10), workers=1)
    verdict = ex.compare_verdict(rows)
    assert verdict.n_seeds == 10
    assert verdict.worst_heuristic_excess <= 1e-6
    assert verdict.mean_random_ratio <= 1.0 + 1e-9
    assert any("heuristic/gbd" in line for line in verdict.lines())
