import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dicke_detuning import (
    DegeneratePostselectionError,
    DickeState,
    Heaviside,
    SystemParams,
    Zero,
    dicke_to_computational,
    integrate,
    postselect,
    postselect_sweep,
)
from dicke_detuning.metrics import concurrence_series
from dicke_detuning.postselect import PI0, PI1

from .conftest import random_density, random_dicke


def test_projectors():
    assert np.allclose(PI0 + PI1, np.eye(4))
    assert np.allclose(PI1 @ PI1, PI1)


def test_removes_ground_population():
    d = DickeState(p_s=0.3, p_a=0.1, p_down=0.6, c_sa=0.1j)
    res = postselect(dicke_to_computational(d))
    assert res.success_prob == pytest.approx(0.4)
    assert res.state.rho[3, 3] == 0
    assert res.f_s_post == pytest.approx(0.75)
    res.state.check()


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_idempotent(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng) if seed % 2 else dicke_to_computational(random_dicke(rng)).rho
    once = postselect(rho)
    twice = postselect(once.state)
    assert np.abs(once.state.rho - twice.state.rho).max() < 1e-12
    assert twice.success_prob == pytest.approx(1.0, abs=1e-12)


def test_degenerate():
    with pytest.raises(DegeneratePostselectionError):
        postselect(np.diag([0, 0, 0, 1.0]))


def test_sweep_marks_degenerate_samples():
    tr = integrate(DickeState.down(), Zero(), SystemParams(), 1.0, stride=500)
    out = postselect_sweep(tr)
    assert [t for t, _ in out] == list(tr.taus)
    assert all(r is None for _, r in out)


def test_postselection_improves_concurrence_after_switch():
    tr = integrate(DickeState.up(), Heaviside(10, 2.5), SystemParams(gamma=1e-3, nbar=0.06), 30.0, stride=500)
    plain = concurrence_series(tr)
    for (tau, res), c in zip(postselect_sweep(tr), plain):
        if tau > 2.5:
            assert res.concurrence[0] >= c - 1e-12
