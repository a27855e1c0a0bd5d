import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbldpc.ensemble import (COMPLEXITY_OPTIMIZED_Q4, THRESHOLD_OPTIMIZED_Q4, DegreeDistribution,
                             EnsembleError, NonPositiveRateError, RoundingError, _edge_dev,
                             format_ensemble, mean_degrees, parse_ensemble, rate,
                             realization_error, realize_node_counts, realized_fractions,
                             read_ensemble, write_ensemble)


def test_regular_rate_and_degrees():
    dd = DegreeDistribution.regular(3, 6)
    assert rate(dd) == pytest.approx(0.5)
    assert mean_degrees(dd) == pytest.approx((3.0, 6.0))


def test_irregular_rate_by_hand():
    dd = DegreeDistribution({2: 0.5, 3: 0.5}, {4: 1.0})
    # sum lambda/i = 1/4 + 1/6 = 5/12, sum rho/k = 1/4
    assert rate(dd) == pytest.approx(1 - (1 / 4) / (5 / 12))
    assert dd.mean_degrees()[0] == pytest.approx(12 / 5)


def test_reference_pair_rates():
    assert rate(THRESHOLD_OPTIMIZED_Q4) == pytest.approx(0.5, abs=1e-3)
    assert rate(COMPLEXITY_OPTIMIZED_Q4) == pytest.approx(0.3394, abs=1e-3)


def test_nonpositive_rate():
    with pytest.raises(NonPositiveRateError):
        rate(DegreeDistribution.regular(2, 2))


@pytest.mark.parametrize("lam,rho", [
    ({2: 0.5, 3: 0.4}, {4: 1.0}),        # does not sum to one
    ({1: 1.0}, {4: 1.0}),                 # degree below 2
    ({2: 1.0}, {65: 1.0}),                # degree above the cap
    ({2: 1.2, 3: -0.2}, {4: 1.0}),        # negative mass
])
def test_invalid_distributions(lam, rho):
    with pytest.raises(EnsembleError):
        DegreeDistribution(lam, rho)


def test_small_slack_is_renormalized():
    dd = DegreeDistribution({2: 0.50004, 3: 0.5}, {4: 1.0})
    assert sum(dd.lam.values()) == pytest.approx(1.0, abs=1e-15)


def test_text_round_trip(tmp_path):
    for dd in (THRESHOLD_OPTIMIZED_Q4, COMPLEXITY_OPTIMIZED_Q4, DegreeDistribution.regular(3, 6)):
        assert parse_ensemble(format_ensemble(dd)) == dd
        write_ensemble(dd, tmp_path / "e.txt")
        assert read_ensemble(tmp_path / "e.txt") == dd


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.integers(2, 64), st.floats(0.01, 1.0), min_size=1, max_size=6),
       st.dictionaries(st.integers(2, 64), st.floats(0.01, 1.0), min_size=1, max_size=4),
       st.sampled_from([None, 2, 4, 256]))
def test_text_round_trip_property(lam, rho, q):
    tl, tr = sum(lam.values()), sum(rho.values())
    dd = DegreeDistribution({d: v / tl for d, v in lam.items()}, {d: v / tr for d, v in rho.items()}, q)
    assert parse_ensemble(format_ensemble(dd)) == dd


def test_parse_errors_name_the_line():
    with pytest.raises(EnsembleError, match="line 2"):
        parse_ensemble("lambda 2 1.0\nrho four 1.0\n")
    with pytest.raises(EnsembleError):
        parse_ensemble("# only a comment\n")


@pytest.mark.parametrize("dv,dc,n", [(3, 6, 8), (2, 4, 8), (3, 6, 600), (4, 8, 1000)])
def test_regular_realization_is_exact(dv, dc, n):
    vs, cs = realize_node_counts(DegreeDistribution.regular(dv, dc), n)
    assert len(vs) == n and len(cs) == n * dv // dc
    assert vs.sum() == cs.sum()


def _brute_force(dd, n):
    # exhaustive over variable counts; check counts exhaustive for each edge total
    vdeg = np.array(list(dd.lam))
    vf = np.array(list(dd.lam.values()))
    cdeg = np.array(list(dd.rho))
    cf = np.array(list(dd.rho.values()))
    best = math.inf
    for combo in itertools.product(range(n + 1), repeat=len(vdeg) - 1):
        last = n - sum(combo)
        if last < 0:
            continue
        vc = np.array(list(combo) + [last])
        E = int((vdeg * vc).sum())
        cb = math.inf
        for cc in itertools.product(range(E // cdeg.min() + 1), repeat=len(cdeg) - 1):
            rest = E - int(np.dot(cdeg[:-1], cc))
            if rest >= 0 and rest % cdeg[-1] == 0:
                cb = min(cb, _edge_dev(cdeg, np.array(list(cc) + [rest // cdeg[-1]]), cf))
        best = min(best, max(_edge_dev(vdeg, vc, vf), cb))
    return best


@pytest.mark.parametrize("dd,n", [
    (DegreeDistribution({2: .4, 3: .6}, {5: .5, 6: .5}), 20),
    (DegreeDistribution({2: .3, 3: .3, 5: .4}, {6: .7, 7: .3}), 24),
    (DegreeDistribution({2: .5, 4: .5}, {4: .3, 5: .7}), 30),
    (DegreeDistribution({2: .25, 3: .35, 6: .4}, {5: .5, 7: .5}), 18),
])
def test_realization_matches_brute_force_optimum(dd, n):
    vs, cs = realize_node_counts(dd, n, tol=1.0)
    assert realization_error(dd, vs, cs) == pytest.approx(_brute_force(dd, n), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 3), st.integers(100, 3000))
def test_realized_sequences_are_consistent(dv, extra, n):
    dd = DegreeDistribution({dv: 0.6, dv + 1 + extra: 0.4}, {2 * dv + 2: 0.5, 2 * dv + 3: 0.5})
    vs, cs = realize_node_counts(dd, n, tol=1.0)
    assert len(vs) == n
    assert vs.sum() == cs.sum()
    assert set(np.unique(vs)) <= set(dd.lam) and set(np.unique(cs)) <= set(dd.rho)


def test_reference_pair_realizes_at_desk_scale():
    for dd in (THRESHOLD_OPTIMIZED_Q4, COMPLEXITY_OPTIMIZED_Q4):
        vs, cs = realize_node_counts(dd, 1500, tol=5e-3)
        assert realization_error(dd, vs, cs) < 5e-3


def test_rounding_error_when_tolerance_is_tight():
    with pytest.raises(RoundingError):
        realize_node_counts(THRESHOLD_OPTIMIZED_Q4, 1500)  # default tol 1/n is too tight
    with pytest.raises(RoundingError):
        realize_node_counts(DegreeDistribution.regular(3, 6), 1)


def test_realized_fractions():
    assert realized_fractions([2, 2, 3]) == pytest.approx({2: 4 / 7, 3: 3 / 7})
