"""Dense master equations: cavity + two qubits, and the cavity-eliminated two-qubit model.

Dissipators follow the convention ``D[L] rho = 2 L rho L^+ - {L^+ L, rho}``
(no factor 1/2), so a rate ``r`` multiplying ``D[L]`` empties an excited
level at ``2 r``.

Ordering of the composite space is cavity (Fock ``0..nmax``) x qubit 1 x
qubit 2; each qubit uses ``(|1>, |0>)`` with ``|1>`` excited.

The full model supports two readings of the detuning schedule value ``v_j``:

``"frequency"``
    Qubit ``j`` is shifted by the angular frequency ``v_j * g**2 / kappa``:
    ``H = sum_j (w_j/2) sz_j + g (a^+ sm_j + h.c.)``.
``"phase"``
    The schedule value is the phase of qubit ``j``'s coupling,
    ``H = g sum_j (exp(-i v_j) a^+ sm_j + h.c.)``.  Eliminating the cavity from
    this Hamiltonian gives exactly the reduced model with relative phase
    ``v_1 - v_2``, so this is the reading under which the reduced model and
    the Bloch equations are its adiabatic limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bloch import BlochDerivative
from .core import (
    DetuningSchedule,
    DickeState,
    OutOfSpanError,
    StateError,
    SystemParams,
    TwoQubitState,
    Zero,
    as_matrix,
    check_density_matrix,
    dicke_to_computational,
    span_residual,
    to_dicke_matrix,
)
from .integrate import IntegrationError, rk4_piecewise

DETUNING_MODES = ("frequency", "phase")

SM = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |0><1|
SZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)
SM1 = np.kron(SM, I2)
SM2 = np.kron(I2, SM)


class FockTailError(RuntimeError):
    """The top Fock level carries more population than allowed; raise ``nmax``."""


def dissipator(L, rho) -> np.ndarray:
    """``2 L rho L^+ - L^+ L rho - rho L^+ L``."""
    L = np.asarray(L)
    rho = np.asarray(rho)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape != rho.shape:
        raise ValueError(f"shape mismatch: L {L.shape} vs rho {rho.shape}")
    Ld = L.conj().T
    LdL = Ld @ L
    return 2.0 * L @ rho @ Ld - LdL @ rho - rho @ LdL


def destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def thermal_populations(nbar: float, nmax: int) -> np.ndarray:
    """Bose-Einstein populations on ``0..nmax`` (renormalised after truncation)."""
    if nbar == 0:
        p = np.zeros(nmax + 1)
        p[0] = 1.0
        return p
    x = nbar / (1.0 + nbar)
    p = x ** np.arange(nmax + 1) / (1.0 + nbar)
    return p / p.sum()


# --------------------------------------------------------------------------
# Composite (cavity + qubits) model
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CompositeState:
    rho: np.ndarray
    nmax: int

    def __post_init__(self):
        dim = 4 * (self.nmax + 1)
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (dim, dim):
            raise StateError(f"expected shape {(dim, dim)} for nmax={self.nmax}, got {rho.shape}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def product(cls, cavity_rho, qubit_rho, nmax: int) -> CompositeState:
        return cls(np.kron(np.asarray(cavity_rho), as_matrix(qubit_rho)), nmax)

    @classmethod
    def vacuum(cls, qubits, nmax: int) -> CompositeState:
        """Empty cavity times a two-qubit state (``DickeState`` or 4x4 matrix)."""
        q = dicke_to_computational(qubits).rho if isinstance(qubits, DickeState) else as_matrix(qubits)
        cav = np.zeros((nmax + 1, nmax + 1), dtype=complex)
        cav[0, 0] = 1.0
        return cls.product(cav, q, nmax)

    @classmethod
    def thermal(cls, qubits, nbar: float, nmax: int) -> CompositeState:
        q = dicke_to_computational(qubits).rho if isinstance(qubits, DickeState) else as_matrix(qubits)
        return cls.product(np.diag(thermal_populations(nbar, nmax)).astype(complex), q, nmax)

    def fock_populations(self) -> np.ndarray:
        n = self.nmax + 1
        r = self.rho.reshape(n, 4, n, 4)
        return np.real(np.einsum("iaia->i", r))

    def check(self, tail_tol: float = 1e-8) -> None:
        check_density_matrix(self.rho)
        top = self.fock_populations()[-1]
        if top > tail_tol:
            raise FockTailError(f"population {top:.3e} in Fock level {self.nmax}; raise nmax")


def partial_trace_cavity(c) -> TwoQubitState:
    rho = np.asarray(getattr(c, "rho", c))
    n = rho.shape[0] // 4
    return TwoQubitState(np.einsum("iaib->ab", rho.reshape(n, 4, n, 4)))


@lru_cache(maxsize=16)
def _composite_ops(nmax: int):
    n = nmax + 1
    a = np.kron(destroy(n), np.eye(4))
    sm1 = np.kron(np.eye(n), SM1)
    sm2 = np.kron(np.eye(n), SM2)
    sz1 = np.kron(np.eye(n), np.kron(SZ, I2))
    sz2 = np.kron(np.eye(n), np.kron(I2, SZ))
    for m in (a, sm1, sm2, sz1, sz2):
        m.setflags(write=False)
    return a, sm1, sm2, sz1, sz2


class FullModel:
    """Cavity + two-qubit generator in the frame rotating at the cavity frequency.

    ``rhs`` returns ``d rho / dt`` with ``t`` in units of ``1/kappa``.
    """

    def __init__(self, params: SystemParams, nmax: int = 8, detuning: str = "frequency"):
        if detuning not in DETUNING_MODES:
            raise ValueError(f"detuning must be one of {DETUNING_MODES}, got {detuning!r}")
        if nmax < 1:
            raise ValueError(f"nmax must be >= 1, got {nmax}")
        self.params = params
        self.nmax = nmax
        self.detuning = detuning
        a, sm1, sm2, sz1, sz2 = _composite_ops(nmax)
        self.a, self.sm1, self.sm2, self.sz1, self.sz2 = a, sm1, sm2, sz1, sz2
        self.ad = a.conj().T
        self.ada = self.ad @ a
        self.aad = a @ self.ad
        self._up_a = self.ad @ sm1, self.ad @ sm2  # a^+ sm_j
        k, nb, gam = params.kappa, params.nbar, params.gamma
        self._cav_down = k * (nb + 1.0)
        self._cav_up = k * nb
        self._gamma = gam
        self._qubit_ops = [(s, s.conj().T @ s) for s in (sm1, sm2)]

    def hamiltonian(self, v1: float, v2: float) -> np.ndarray:
        g = self.params.g
        x1, x2 = self._up_a
        if self.detuning == "phase":
            coup = g * (np.exp(-1j * v1) * x1 + np.exp(-1j * v2) * x2)
            return coup + coup.conj().T
        w = self.params.cavity_rate
        coup = g * (x1 + x2)
        return 0.5 * w * (v1 * self.sz1 + v2 * self.sz2) + coup + coup.conj().T

    def rhs(self, rho: np.ndarray, v1: float, v2: float) -> np.ndarray:
        H = self.hamiltonian(v1, v2)
        a, ad = self.a, self.ad
        out = -1j * (H @ rho - rho @ H)
        if self._cav_down:
            out += self._cav_down * (2.0 * a @ rho @ ad - self.ada @ rho - rho @ self.ada)
        if self._cav_up:
            out += self._cav_up * (2.0 * ad @ rho @ a - self.aad @ rho - rho @ self.aad)
        if self._gamma:
            for s, sds in self._qubit_ops:
                out += self._gamma * (2.0 * s @ rho @ s.conj().T - sds @ rho - rho @ sds)
        return out


def full_me_rhs(
    c: CompositeState,
    delta1: float,
    delta2: float,
    params: SystemParams,
    detuning: str = "frequency",
    tail_tol: float = 1e-8,
) -> np.ndarray:
    """Generator of the cavity + qubits master equation applied to ``c``.

    In ``"frequency"`` mode ``delta_j`` are schedule values in units of
    ``g**2/kappa``; in ``"phase"`` mode they are coupling phases.
    """
    top = c.fock_populations()[-1]
    if top > tail_tol:
        raise FockTailError(f"population {top:.3e} in Fock level {c.nmax}; raise nmax")
    return FullModel(params, c.nmax, detuning).rhs(np.asarray(c.rho), delta1, delta2)


# --------------------------------------------------------------------------
# Reduced two-qubit model
# --------------------------------------------------------------------------


def _single_qubit_terms(rho, params: SystemParams) -> np.ndarray:
    gc = params.cavity_rate
    nb = params.nbar
    out = np.zeros_like(rho)
    for sm in (SM1, SM2):
        sp = sm.conj().T
        out += gc * (nb + 1.0) * (2.0 * sm @ rho @ sp - (sp @ sm) @ rho - rho @ (sp @ sm))
        out += gc * nb * (2.0 * sp @ rho @ sm - (sm @ sp) @ rho - rho @ (sm @ sp))
        if params.gamma:
            out += params.gamma * (2.0 * sm @ rho @ sp - (sp @ sm) @ rho - rho @ (sp @ sm))
    return out


def _cross_term(rho, phase: float, params: SystemParams) -> np.ndarray:
    # g(t)^2 / kappa with g(t) = g exp(-i phase/2); the h.c. swaps the qubit
    # labels and conjugates the coefficient, which keeps the map linear
    coef = params.cavity_rate * np.exp(-1j * phase)
    nb = params.nbar

    def half(c, am, bm):
        ap, bp = am.conj().T, bm.conj().T
        t = c * (nb + 1.0) * (2.0 * am @ rho @ bp - (bp @ am) @ rho - rho @ (bp @ am))
        return t + c * nb * (2.0 * bp @ rho @ am - (am @ bp) @ rho - rho @ (am @ bp))

    return half(coef, SM1, SM2) + half(np.conj(coef), SM2, SM1)


def reduced_me_rhs(r, delta_rel: float, params: SystemParams) -> np.ndarray:
    """Cavity-eliminated generator (units of ``kappa``) at relative phase ``delta_rel``.

    Single-qubit cavity-induced rates use the bare ``g**2/kappa``.
    """
    rho = as_matrix(r)
    return _single_qubit_terms(rho, params) + _cross_term(rho, delta_rel, params)


def _vectorize(op) -> np.ndarray:
    cols = []
    for k in range(16):
        e = np.zeros(16, dtype=complex)
        e[k] = 1.0
        cols.append(op(e.reshape(4, 4)).reshape(-1))
    return np.column_stack(cols)


def _superoperator_parts(params: SystemParams):
    """``(L0, Lp, Lm)`` with ``L(delta) = L0 + exp(-i delta) Lp + exp(i delta) Lm``."""
    L0 = _vectorize(lambda r: _single_qubit_terms(r, params))
    X0 = _vectorize(lambda r: _cross_term(r, 0.0, params))
    Xq = _vectorize(lambda r: _cross_term(r, 0.5 * np.pi, params))
    return L0, 0.5 * (X0 + 1j * Xq), 0.5 * (X0 - 1j * Xq)


def reduced_superoperator(delta_rel: float, params: SystemParams) -> np.ndarray:
    """16x16 matrix of ``reduced_me_rhs`` acting on row-major ``vec(rho)``."""
    L0, Lp, Lm = _superoperator_parts(params)
    c = np.exp(-1j * delta_rel)
    return L0 + c * Lp + np.conj(c) * Lm


def reduced_me_rhs_pair(r, delta1: float, delta2: float, params: SystemParams) -> np.ndarray:
    """Two detuned qubits: only ``delta1 - delta2`` enters."""
    return reduced_me_rhs(r, delta1 - delta2, params)


def project_reduced_rhs(d: DickeState, delta_rel: float, params: SystemParams,
                        span_tol: float = 1e-10) -> BlochDerivative:
    """Reduced-model derivative of a Dicke-form state, expressed in the Dicke basis."""
    rho = dicke_to_computational(d).rho
    m = to_dicke_matrix(reduced_me_rhs(rho, delta_rel, params))
    resid = span_residual(m)
    if resid > span_tol:
        raise OutOfSpanError(resid)
    pops = np.real(np.diag(m))
    return BlochDerivative(*(float(p) for p in pops), d_csa=complex(m[1, 2]))


# --------------------------------------------------------------------------
# Matrix-valued trajectories
# --------------------------------------------------------------------------


@dataclass
class MatrixTrajectory:
    """Sampled two-qubit density matrices from the reduced or full model."""

    taus: np.ndarray
    rhos: np.ndarray
    schedule: DetuningSchedule
    params: SystemParams
    model: str
    schedule2: DetuningSchedule = field(default_factory=Zero)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.taus)

    def index_at(self, tau: float) -> int:
        return int(np.argmin(np.abs(self.taus - tau)))

    def density_matrices(self) -> np.ndarray:
        return self.rhos

    def delta_values(self) -> np.ndarray:
        return np.array([self.schedule(t) - self.schedule2(t) for t in self.taus])


def integrate_operator(
    model: str,
    initial,
    schedule: DetuningSchedule,
    params: SystemParams,
    tau_end: float,
    dtau: float = 1e-3,
    stride: int = 1,
    schedule2: DetuningSchedule | None = None,
    nmax: int = 8,
    detuning: str = "frequency",
    cavity: str = "vacuum",
    tail_tol: float = 1e-8,
) -> MatrixTrajectory:
    """Integrate the ``"reduced"`` or ``"full"`` model in ``tau``.

    ``initial`` is a ``DickeState`` or 4x4 matrix for the qubits; for the full
    model it may also be a ``CompositeState``.  ``schedule2`` (default zero)
    detunes qubit 2.  Full-model samples are reduced to the qubits; the final
    composite state is kept in ``meta["final_composite"]``.
    """
    schedule2 = Zero() if schedule2 is None else schedule2
    edges = tuple(schedule.edges()) + tuple(schedule2.edges())
    scale = params.time_per_tau

    if model == "reduced":
        rho0 = dicke_to_computational(initial).rho if isinstance(initial, DickeState) else as_matrix(initial)

        L0, Lp, Lm = _superoperator_parts(params)
        L0, Lp, Lm = scale * L0, scale * Lp, scale * Lm

        def generator(tau):
            c = np.exp(-1j * (schedule(tau) - schedule2(tau)))
            return L0 + c * Lp + np.conj(c) * Lm

        def rhs(tau, y):
            return generator(tau) @ y

        stepwise = schedule.piecewise_constant and schedule2.piecewise_constant

        def check(tau, y):
            diag = y[::5].real
            drift = abs(diag.sum() - 1.0)
            if drift > 1e-6 or diag.min() < -1e-6 or not np.all(np.isfinite(y)):
                raise IntegrationError(
                    f"trace drift {drift:.3e}, min population {diag.min():.3e} at tau={tau:.6g}; reduce dtau"
                )

        taus, ys, _ = rk4_piecewise(
            rhs, rho0.reshape(-1), tau_end, dtau, edges, stride, check,
            record=lambda y: y.reshape(4, 4).copy(), generator=generator if stepwise else None,
        )
        return MatrixTrajectory(taus, ys, schedule, params, "reduced", schedule2)

    if model != "full":
        raise ValueError(f"model must be 'reduced' or 'full', got {model!r}")

    if isinstance(initial, CompositeState):
        c0 = initial
        nmax = c0.nmax
    elif cavity == "vacuum":
        c0 = CompositeState.vacuum(initial, nmax)
    elif cavity == "thermal":
        c0 = CompositeState.thermal(initial, params.nbar, nmax)
    else:
        raise ValueError(f"cavity must be 'vacuum' or 'thermal', got {cavity!r}")
    fm = FullModel(params, nmax, detuning)
    n = nmax + 1
    top = slice(4 * nmax, 4 * n)

    def rhs(tau, y):
        return scale * fm.rhs(y, schedule(tau), schedule2(tau))

    def check(tau, y):
        diag = np.diagonal(y).real
        drift = abs(diag.sum() - 1.0)
        if drift > 1e-6 or diag.min() < -1e-6 or not np.all(np.isfinite(y)):
            raise IntegrationError(
                f"trace drift {drift:.3e}, min population {diag.min():.3e} at tau={tau:.6g}; reduce dtau"
            )
        tail = np.trace(y[top, top]).real
        if tail > tail_tol:
            raise FockTailError(f"population {tail:.3e} in Fock level {nmax} at tau={tau:.6g}; raise nmax")

    def reduce(y):
        return np.einsum("iaib->ab", y.reshape(n, 4, n, 4))

    taus, reduced, y_final = rk4_piecewise(rhs, np.array(c0.rho), tau_end, dtau, edges, stride, check, reduce)
    traj = MatrixTrajectory(taus, reduced, schedule, params, "full", schedule2)
    traj.meta["final_composite"] = CompositeState(y_final, nmax)
    traj.meta["detuning"] = detuning
    return traj


__all__ = [
    "CompositeState",
    "FockTailError",
    "FullModel",
    "MatrixTrajectory",
    "destroy",
    "dissipator",
    "full_me_rhs",
    "integrate_operator",
    "partial_trace_cavity",
    "project_reduced_rhs",
    "reduced_me_rhs",
    "reduced_me_rhs_pair",
    "thermal_populations",
]
