"""Closed Bloch equations for the Dicke populations and the s/a coherence.

The state vector is ``[p_up, p_s, p_a, p_down, Re c_sa, Im c_sa]``.  The
detuning enters only through ``cos(delta)`` and ``sin(delta)``; equations for
``p_a`` follow from those for ``p_s`` under ``p_s -> p_a`` and
``delta -> pi - delta``.

Two forms of the ``p_up`` equation are available through ``thermal_pumping``:

``"collective"`` (default)
    Thermal re-excitation of ``|up>`` proceeds through the same collective
    channel as decay, ``2 G00 [(1 + cos d) p_s + (1 - cos d) p_a + 2 sin d Im c_sa]``.
    This is the exact projection of the reduced two-qubit master equation.
``"printed"``
    The simplified pumping term ``2 G00 (p_s + p_a)``.  It agrees with the
    collective form whenever ``nbar = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DICKE_BASIS, DetuningSchedule, DickeState, SystemParams, g_coeff
from .integrate import IntegrationError, rk4_piecewise

PUMPING_FORMS = ("collective", "printed")


@dataclass(frozen=True)
class BlochDerivative:
    d_up: float
    d_s: float
    d_a: float
    d_down: float
    d_csa: complex

    def as_vector(self) -> np.ndarray:
        c = complex(self.d_csa)
        return np.array([self.d_up, self.d_s, self.d_a, self.d_down, c.real, c.imag])

    @classmethod
    def from_vector(cls, v) -> BlochDerivative:
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]), complex(v[4], v[5]))


@dataclass(frozen=True)
class _Rates:
    g11_1: float  # G^1_1(nbar)
    g11_2: float  # G^1_1(2 nbar)
    g01_1: float  # G^0_1(nbar)
    g01_2: float  # G^0_1(2 nbar)
    g00_1: float  # G^0_0(nbar)
    collective: bool

    @classmethod
    def of(cls, params: SystemParams, thermal_pumping: str = "collective") -> _Rates:
        if thermal_pumping not in PUMPING_FORMS:
            raise ValueError(f"thermal_pumping must be one of {PUMPING_FORMS}, got {thermal_pumping!r}")
        return cls(
            g_coeff(params, 1, 1, 1),
            g_coeff(params, 1, 1, 2),
            g_coeff(params, 0, 1, 1),
            g_coeff(params, 0, 1, 2),
            g_coeff(params, 0, 0, 1),
            thermal_pumping == "collective",
        )


def _rhs_vector(y, cos_d, sin_d, r: _Rates) -> np.ndarray:
    pu, ps, pa, pd, x, im = y
    # [cos d * rho + (-i sin d) rho_sa] + h.c.  ==  2 cos d * rho + 2 sin d * Im rho_sa
    d_up = -4.0 * r.g11_1 * pu + 2.0 * r.g00_1 * (ps + pa)
    if r.collective:
        d_up += 2.0 * r.g00_1 * (cos_d * (ps - pa) + 2.0 * sin_d * im)
    feed = r.g01_1 * pu + r.g00_1 * pd
    d_s = (
        -r.g01_2 * (2.0 * cos_d * ps + 2.0 * sin_d * im)
        + 2.0 * r.g11_1 * (pu - ps)
        - 2.0 * r.g00_1 * (ps - pd)
        + 2.0 * cos_d * feed
    )
    d_a = (
        -r.g01_2 * (-2.0 * cos_d * pa + 2.0 * sin_d * im)
        + 2.0 * r.g11_1 * (pu - pa)
        - 2.0 * r.g00_1 * (pa - pd)
        - 2.0 * cos_d * feed
    )
    # d c_sa = -2 G11(2n) c_sa + i sin d [2 feed - G01(2n)(p_s + p_a)]
    drive = sin_d * (2.0 * feed - r.g01_2 * (ps + pa))
    d_x = -2.0 * r.g11_2 * x
    d_im = -2.0 * r.g11_2 * im + drive
    return np.array([d_up, d_s, d_a, -(d_up + d_s + d_a), d_x, d_im])


def _rhs_parts(r: _Rates) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(M0, Mc, Ms)`` with generator ``M0 + cos(d) Mc + sin(d) Ms``."""

    def mat(c, s):
        return np.column_stack([_rhs_vector(e, c, s, r) for e in np.eye(6)])

    m0 = mat(0.0, 0.0)
    return m0, mat(1.0, 0.0) - m0, mat(0.0, 1.0) - m0


def bloch_rhs(
    d: DickeState, delta: float, params: SystemParams, thermal_pumping: str = "collective"
) -> BlochDerivative:
    """Time derivatives in units of ``kappa`` (per unit physical time)."""
    r = _Rates.of(params, thermal_pumping)
    v = _rhs_vector(d.as_vector(), math.cos(delta), math.sin(delta), r)
    return BlochDerivative.from_vector(v)


@dataclass
class Trajectory:
    """Sampled Bloch evolution; ``values`` rows are Dicke state vectors."""

    taus: np.ndarray
    values: np.ndarray
    schedule: DetuningSchedule
    params: SystemParams
    thermal_pumping: str = "collective"
    model: str = "bloch"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.taus)

    def __getitem__(self, i) -> DickeState:
        return DickeState.from_vector(self.values[i])

    @property
    def states(self) -> list[DickeState]:
        return [DickeState.from_vector(v) for v in self.values]

    @property
    def final(self) -> DickeState:
        return self[-1]

    def index_at(self, tau: float) -> int:
        return int(np.argmin(np.abs(self.taus - tau)))

    def at(self, tau: float) -> DickeState:
        return self[self.index_at(tau)]

    def density_matrices(self) -> np.ndarray:
        n = len(self.taus)
        m = np.zeros((n, 4, 4), dtype=complex)
        for j in range(4):
            m[:, j, j] = self.values[:, j]
        m[:, 1, 2] = self.values[:, 4] + 1j * self.values[:, 5]
        m[:, 2, 1] = np.conj(m[:, 1, 2])
        return DICKE_BASIS @ m @ DICKE_BASIS.conj().T

    def delta_values(self) -> np.ndarray:
        return np.array([self.schedule(t) for t in self.taus])


def _validate_initial(d0: DickeState) -> DickeState:
    if isinstance(d0, DickeState):
        return d0
    raise TypeError(f"initial state must be a DickeState, got {type(d0).__name__}")


def integrate(
    d0: DickeState,
    s: DetuningSchedule,
    params: SystemParams,
    tau_end: float,
    dtau: float = 1e-3,
    stride: int = 1,
    thermal_pumping: str = "collective",
    self_check: bool = False,
) -> Trajectory:
    """RK4 integration of the Bloch equations in ``tau``.

    Raises ``IntegrationError`` when the populations drift from unit sum, or
    below zero, by more than 1e-6.  With ``self_check`` the run is repeated at ``2*dtau`` and
    the Richardson estimate of the final-state error lands in ``meta``.
    """
    d0 = _validate_initial(d0)
    r = _Rates.of(params, thermal_pumping)
    scale = params.time_per_tau

    m0, mc, ms = (scale * m for m in _rhs_parts(r))

    def generator(tau):
        delta = s(tau)
        return m0 + math.cos(delta) * mc + math.sin(delta) * ms

    def rhs(tau, y):
        delta = s(tau)
        return scale * _rhs_vector(y, math.cos(delta), math.sin(delta), r)

    def check(tau, y):
        drift = abs(y[0] + y[1] + y[2] + y[3] - 1.0)
        low = min(y[0], y[1], y[2], y[3])
        if drift > 1e-6 or low < -1e-6 or not np.all(np.isfinite(y)):
            raise IntegrationError(
                f"populations left the simplex (sum drift {drift:.3e}, min {low:.3e}) "
                f"at tau={tau:.6g}; reduce dtau (now {dtau})"
            )

    stepwise = generator if s.piecewise_constant else None
    y0 = d0.as_vector()
    taus, ys, _ = rk4_piecewise(rhs, y0, tau_end, dtau, s.edges(), stride, check, generator=stepwise)
    traj = Trajectory(taus, ys, s, params, thermal_pumping)
    if self_check:
        _, _, coarse = rk4_piecewise(rhs, y0, tau_end, 2 * dtau, s.edges(), 10**9, check, generator=stepwise)
        traj.meta["error_estimate"] = float(np.max(np.abs(coarse - ys[-1])) / 15.0)
    return traj


def steady_state(traj: Trajectory, window: float, tol: float) -> tuple[DickeState, bool]:
    """Last state, and whether ``max |d/dtau|`` over the trailing window is below ``tol``.

    Derivatives are taken per unit ``tau`` with the detuning in force at each sample.
    """
    span = traj.taus[-1] - traj.taus[0]
    if window > span + 1e-12:
        raise ValueError(f"window {window} longer than the trajectory ({span})")
    r = _Rates.of(traj.params, traj.thermal_pumping)
    scale = traj.params.time_per_tau
    start = traj.taus[-1] - window
    worst = 0.0
    for tau, y in zip(traj.taus, traj.values):
        if tau < start - 1e-12:
            continue
        delta = traj.schedule(tau)
        dv = scale * _rhs_vector(y, math.cos(delta), math.sin(delta), r)
        worst = max(worst, float(np.max(np.abs(dv))))
    return traj.final, worst < tol
