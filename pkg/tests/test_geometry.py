import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcorr.geometry import (
    classify,
    classify_batch,
    counting_report,
    f_monotonicity_check,
    f_value,
    monte_carlo_regions,
    trial_seeds,
)
from qcorr.states import (
    classical_state,
    random_state,
    rho_c,
    rho_l,
    rho_l_ensemble,
    state_from_dict,
    state_to_dict,
    werner_state,
)


def test_counting_examples():
    r = counting_report(2, 2, 2)
    # 2 * (3 + 3) + 1 = 13 against 4 * 4 - 1 = 15; f = 16 - 8 - 8 + 2
    assert (r.params_class, r.params_full, r.f_value, r.measure_zero) == (13, 15, 2, True)
    assert counting_report(2, 3, 2).f_value == 12
    assert f_value(3, 3) == 81 - 27 - 27 + 3
    assert not counting_report(2, 2, 16).measure_zero
    with pytest.raises(ValueError):
        counting_report(0, 2, 1)


@given(st.integers(2, 10), st.integers(2, 10))
def test_d_min_ensembles_are_measure_zero(da, db):
    r = counting_report(da, db, min(da, db))
    assert r.measure_zero
    lo, hi = sorted((da, db))
    # the shortfall equals f evaluated with the smaller dimension first
    assert r.params_full - r.params_class == f_value(lo, hi)


def test_f_monotone():
    assert f_monotonicity_check(2)
    assert f_monotonicity_check(10)
    with pytest.raises(ValueError):
        f_monotonicity_check(1)


def test_classify_named_states():
    assert classify(rho_c()).region == "classical"
    low = classify(rho_l(), ensemble=rho_l_ensemble())
    assert low.region == "quantum_low_l"
    assert low.locally_producible_hint == "yes_constructed"
    assert classify(rho_l()).locally_producible_hint == "unknown"
    high = classify(werner_state(1 / 3))
    assert high.region == "quantum_high_l" and high.rank_l == 4
    assert abs(high.discord_a - 0.125815) <= 1e-5


def test_classify_qutrit_sides_use_commutators():
    rng = np.random.default_rng(0)
    p = rng.dirichlet(np.ones(9)).reshape(3, 3)
    rep = classify(classical_state(p))
    assert rep.discord_a is None and rep.discord_b is None
    assert rep.region == "classical"
    assert classify(random_state(3, 3, rng)).region == "quantum_high_l"


def test_classify_round_trip_stable():
    rng = np.random.default_rng(1)
    for rho in [random_state(2, 2, rng), rho_l(), random_state(2, 3, rng)]:
        back = state_from_dict(json.loads(json.dumps(state_to_dict(rho))))
        assert classify(back) == classify(rho)


def test_classify_batch_empty():
    assert classify_batch([]) == []


def test_trial_seeds_are_stable():
    a = [np.random.default_rng(s).random() for s in trial_seeds(5, 3)]
    b = [np.random.default_rng(s).random() for s in trial_seeds(5, 3)]
    assert a == b and len(set(a)) == 3


def test_monte_carlo_reproducible_and_thread_independent(monkeypatch):
    monkeypatch.setenv("QCORR_THREADS", "1")
    one = monte_carlo_regions(2, 2, 60, seed=3, chunk=25)
    monkeypatch.setenv("QCORR_THREADS", "3")
    many = monte_carlo_regions(2, 2, 60, seed=3, chunk=25)
    assert one.to_csv() == many.to_csv()
    assert one.histogram == {"classical": 0, "quantum_low_l": 0, "quantum_high_l": 60}
    s = one.summary()
    assert sum(s["counts"].values()) == 60
    assert s["min_sv_gap"] == one.min_sv_gap > 0


def test_monte_carlo_ensembles_stay_low():
    res = monte_carlo_regions(2, 2, 40, seed=4, ensemble_terms=2)
    assert res.histogram["quantum_high_l"] == 0
    assert all(r.locally_producible_hint == "yes_constructed" for r in res.reports)
    assert res.source == "ensemble:2"


def test_monte_carlo_csv_header():
    text = monte_carlo_regions(2, 3, 3, seed=0).to_csv(["config: {}"])
    lines = text.splitlines()
    assert lines[0] == "# config: {}"
    assert lines[1] == "sample_id,rank_l,discord_a,discord_b,region,min_sv_gap"
    assert lines[2].split(",")[3] == ""
    with pytest.raises(ValueError):
        monte_carlo_regions(2, 2, 0, seed=0)
