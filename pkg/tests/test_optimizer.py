import numpy as np
import pytest

from nbldpc.ensemble import THRESHOLD_OPTIMIZED_Q4, DegreeDistribution
from nbldpc.exitchart import complexity
from nbldpc.optimizer import (MIN_DV_RATES, InfeasibleStartError, PctConfig, _inf_dist,
                              active_degrees, feasible, min_valid_dv, optimize, scan_ensemble,
                              two_point)

pytestmark = pytest.mark.filterwarnings("ignore:q=2")


def test_config_validation():
    with pytest.raises(ValueError):
        PctConfig(zeta1=0.3)
    with pytest.raises(ValueError):
        PctConfig(R0=1.0)
    with pytest.raises(ValueError):
        PctConfig(p0=1e-7, pt=1e-6)
    with pytest.raises(ValueError):
        PctConfig(q=6)


def test_regular_binary_is_feasible():
    rep = feasible(DegreeDistribution.regular(3, 6), PctConfig(R0=0.5, q=2, p0=0.02))
    assert rep.ok


def test_degree_two_pair_violates_rate():
    rep = feasible(DegreeDistribution.regular(2, 2), PctConfig(R0=0.5, q=2, p0=0.02))
    assert rep.slack["rate"] == pytest.approx(0.5 - 1.0)
    assert not rep.ok


def test_threshold_optimized_start_has_no_open_chart():
    with pytest.raises(InfeasibleStartError):
        optimize(THRESHOLD_OPTIMIZED_Q4, PctConfig(R0=0.5, q=4))


@pytest.fixture(scope="module")
def regular_run():
    return optimize(DegreeDistribution.regular(3, 6), PctConfig(R0=0.5, q=4, max_rounds=8))


def test_complexity_drops_and_trajectory_is_monotone(regular_run):
    K = [row[1] for row in regular_run.trajectory]
    assert K[-1] < K[0]
    assert all(b < a for a, b in zip(K, K[1:]))


def test_result_satisfies_constraints(regular_run):
    assert regular_run.constraint_report.ok
    assert all(v >= -1e-9 for v in regular_run.constraint_report.slack.values())
    dd = regular_run.dd
    assert dd.lam_inv_sum >= dd.rho_inv_sum / 0.5 - 1e-9


def test_trust_region_is_respected(regular_run):
    for a, b in zip(regular_run.centers, regular_run.centers[1:]):
        assert _inf_dist(a.lam, b.lam) <= 0.05 + 1e-12
        assert _inf_dist(a.rho, b.rho) <= 0.05 + 1e-12


def test_reported_K_matches_the_chart(regular_run):
    res = regular_run
    K = complexity(res.dd, 0.5, 4, res.p0, 1e-6)
    assert K == pytest.approx(res.K, rel=1e-2)


def test_deterministic(regular_run):
    again = optimize(DegreeDistribution.regular(3, 6), PctConfig(R0=0.5, q=4, max_rounds=8))
    assert again.dd == regular_run.dd and again.trajectory == regular_run.trajectory


def test_local_minimum_of_synthetic_objective_is_kept():
    start = DegreeDistribution({3: 0.8, 4: 0.2}, {6: 1.0}, 4)
    target = np.array([start.lam.get(d, 0.0) for d in active_degrees(start.lam)])

    def bowl(dd):
        x = np.array([dd.lam.get(d, 0.0) for d in active_degrees(start.lam)])
        return 1.0 + float(np.sum((x - target) ** 2)) + abs(dd.rho.get(6, 0.0) - 1.0)

    res = optimize(start, PctConfig(R0=0.45, q=4, p0=0.02), objective=bowl, with_thresholds=False)
    assert res.accepted_steps == 0 and res.dd == start


def test_binary_start_never_gets_worse():
    res = optimize(DegreeDistribution({3: 0.6, 4: 0.4}, {7: 1.0}), PctConfig(R0=0.5, q=2, p0=0.02,
                                                                            max_rounds=5))
    K = [row[1] for row in res.trajectory]
    assert K[-1] <= K[0]


def test_trajectory_csv(regular_run):
    text = regular_run.trajectory_csv()
    assert text.splitlines()[0] == "round,K,N,threshold"
    assert len(text.splitlines()) == len(regular_run.trajectory) + 1


def test_two_point_mean():
    for mean in (2.0, 2.37, 3.5, 7.9):
        lam = two_point(mean)
        assert 1 / sum(v / d for d, v in lam.items()) == pytest.approx(mean)


def test_scan_ensemble_rate():
    assert scan_ensemble(2.7, 0.5).rate() == pytest.approx(0.5)


def test_min_valid_dv_is_monotone():
    T = [min_valid_dv(R, 4) for R in MIN_DV_RATES]
    assert all(t is not None for t in T)
    assert all(a <= b for a, b in zip(T, T[1:]))


def test_min_valid_dv_not_found():
    assert min_valid_dv(0.9, 4, hi=3.0) is None
