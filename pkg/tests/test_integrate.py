import math

import numpy as np
import pytest

from dicke_detuning.integrate import IntegrationError, rk4_piecewise, rk4_propagator, segment_bounds


def test_segment_bounds():
    assert segment_bounds(10, [5, 2.5, 12, 0, 5]) == [0.0, 2.5, 5.0, 10.0]


def test_fourth_order_on_exponential():
    errs = []
    for h in (0.2, 0.1, 0.05):
        _, _, y = rk4_piecewise(lambda t, y: -y, np.array([1.0]), 2.0, h)
        errs.append(abs(y[0] - math.exp(-2.0)))
    assert errs[0] / errs[1] > 14
    assert errs[1] / errs[2] > 14


def test_propagator_matches_stage_form():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(5, 5))
    y0 = rng.normal(size=5)
    _, _, a = rk4_piecewise(lambda t, y: A @ y, y0, 1.0, 0.01)
    _, _, b = rk4_piecewise(lambda t, y: A @ y, y0, 1.0, 0.01, generator=lambda t: A)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
    assert np.allclose(rk4_propagator(np.zeros((2, 2))), np.eye(2))


def test_stages_stay_on_one_side_of_edges():
    seen = []

    def rhs(t, y):
        seen.append(t)
        return np.zeros_like(y) + (1.0 if t >= 1.0 else 0.0)

    taus, _, y = rk4_piecewise(rhs, np.array([0.0]), 2.0, 0.3, edges=(1.0,))
    assert 1.0 in taus
    assert y[0] == pytest.approx(1.0, abs=1e-12)


def test_sampling_stride_and_endpoint():
    taus, ys, _ = rk4_piecewise(lambda t, y: y, np.array([1.0]), 1.0, 0.1, stride=3)
    assert taus[0] == 0.0 and taus[-1] == 1.0
    assert len(taus) == len(ys) == 5


def test_check_hook_can_abort():
    def check(t, y):
        if y[0] > 2:
            raise IntegrationError("too big")

    with pytest.raises(IntegrationError):
        rk4_piecewise(lambda t, y: y, np.array([1.0]), 5.0, 0.1, check=check)


@pytest.mark.parametrize("kw", [{"dtau": 0}, {"tau_end": -1}, {"stride": 0}])
def test_argument_validation(kw):
    args = {"tau_end": 1.0, "dtau": 0.1, "stride": 1, **kw}
    with pytest.raises(ValueError):
        rk4_piecewise(lambda t, y: y, np.array([1.0]), **args)
