import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dicke_detuning import (
    DickeState,
    concurrence_wootters,
    concurrence_xform,
    dicke_to_computational,
    fidelities,
    metric_record,
    negativity,
    purity,
    trajectory_metrics,
)
from dicke_detuning.metrics import (
    MetricRecord,
    NonPhysicalStateError,
    partial_transpose,
    relaxed_concurrence,
)

from .conftest import random_density, random_dicke

BELL = np.array([0, 1, 1, 0]) / np.sqrt(2)


def test_bell_state():
    rho = np.outer(BELL, BELL)
    assert concurrence_wootters(rho) == pytest.approx((1.0, 1.0), abs=1e-12)
    assert negativity(rho) == pytest.approx(0.5)
    assert purity(rho) == pytest.approx(1.0)
    assert fidelities(rho) == pytest.approx((1.0, 0.0))


def test_product_and_mixed_states():
    assert concurrence_wootters(np.diag([1.0, 0, 0, 0]))[0] == 0.0
    c, relaxed = concurrence_wootters(np.eye(4) / 4)
    assert c == 0.0 and relaxed == pytest.approx(-0.5)
    assert purity(np.eye(4) / 4) == pytest.approx(0.25)


def test_werner_threshold():
    for p, expected in [(0.2, 0.0), (0.5, 0.25), (0.9, 0.85)]:
        rho = p * np.outer(BELL, BELL) + (1 - p) * np.eye(4) / 4
        assert concurrence_wootters(rho)[0] == pytest.approx(expected, abs=1e-12)


def test_nonphysical_state_rejected():
    with pytest.raises(NonPhysicalStateError):
        concurrence_wootters(np.diag([1.2, -0.2, 0, 0]))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_xform_matches_wootters_clamped(seed):
    d = random_dicke(np.random.default_rng(seed))
    assert abs(concurrence_xform(d)[0] - concurrence_wootters(dicke_to_computational(d))[0]) < 1e-12


def test_relaxed_forms_can_differ_below_zero():
    # with sqrt(p_up p_down) the largest Wootters root the two relaxed values part ways
    d = DickeState(p_up=0.5, p_down=0.5)
    assert concurrence_xform(d)[1] == pytest.approx(-1.0)
    assert concurrence_wootters(dicke_to_computational(d))[1] == pytest.approx(0.0)
    assert relaxed_concurrence(dicke_to_computational(d)) == pytest.approx(-1.0)


def test_relaxed_falls_back_outside_dicke_form(rng):
    rho = random_density(rng)
    assert relaxed_concurrence(rho) == concurrence_wootters(rho)[1]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_ppt_criterion_consistent_with_concurrence(seed, rank):
    rho = random_density(np.random.default_rng(seed), rank=rank)
    c = concurrence_wootters(rho)[0]
    n = negativity(rho)
    assert (c > 1e-9) == (n > 1e-9) or min(c, n) < 1e-7
    assert np.allclose(partial_transpose(partial_transpose(rho)), rho)


def test_metric_record(rng):
    rho = dicke_to_computational(random_dicke(rng))
    rec = metric_record(rho, tau=1.5)
    assert rec.tau == 1.5
    assert set(MetricRecord.FIELDS) <= set(vars(rec))
    assert rec.concurrence_clamped == concurrence_wootters(rho)[0]
    assert rec.concurrence_relaxed == relaxed_concurrence(rho)
    assert (rec.f_s, rec.f_a) == pytest.approx(fidelities(rho))


def test_trajectory_metrics_walks_samples():
    from dicke_detuning import Heaviside, SystemParams, integrate

    tr = integrate(DickeState.up(), Heaviside(10, 2.5), SystemParams(), 5.0, stride=1000)
    recs = trajectory_metrics(tr)
    assert [r.tau for r in recs] == list(tr.taus)
