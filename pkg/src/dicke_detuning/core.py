"""Domain types, unit conventions, detuning schedules and Dicke-basis transforms.

Units
-----
Rates are stored in units of the cavity decay rate ``kappa`` (``kappa = 1``).
Times are exposed through the dimensionless variable ``tau``.  One unit of
``tau`` corresponds to ``tau_scale`` units of ``g**2 t / kappa``, i.e.

    t = tau_scale * (kappa / g**2) * tau

With the default ``tau_scale = 0.1`` the collective decay of the doubly
excited state runs as ``exp(-0.4 tau)``.

Basis
-----
Two-qubit matrices use the computational order ``|11>, |10>, |01>, |00>``
with ``|1>`` the excited level.  The Dicke basis is ``|up> = |11>``,
``|s> = (|01> + |10>)/sqrt(2)``, ``|a> = (|01> - |10>)/sqrt(2)``,
``|down> = |00>``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields
from typing import ClassVar

import numpy as np

POP_EPS = 1e-9
NORM_REJECT = 1e-6


class StateError(ValueError):
    """A state violates its structural invariants."""


class OutOfSpanError(StateError):
    """A two-qubit matrix has coherences outside the populations + s/a form."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(
            f"matrix has components outside the Dicke populations + s/a coherence "
            f"form (residual norm {residual:.3e})"
        )


# --------------------------------------------------------------------------
# Parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters, all rates in units of ``kappa``.

    ``tau_scale`` fixes the time axis: one unit of ``tau`` is
    ``tau_scale * kappa / g**2`` in units of ``1/kappa``.
    """

    g: float = 0.3
    kappa: float = 1.0
    gamma: float = 0.0
    nbar: float = 0.0
    tau_scale: float = 0.1
    weak_coupling_warn: float = 0.5

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be > 0, got {self.g}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.nbar >= 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")
        if not self.tau_scale > 0:
            raise ValueError(f"tau_scale must be > 0, got {self.tau_scale}")
        if self.g > self.weak_coupling_warn * self.kappa:
            warnings.warn(
                f"g/kappa = {self.g / self.kappa:.3g} exceeds the weak-coupling "
                f"threshold {self.weak_coupling_warn}; adiabatic elimination is unreliable",
                stacklevel=2,
            )

    @property
    def cavity_rate(self) -> float:
        """Bare cavity-mediated qubit rate ``g**2 / kappa``."""
        return self.g**2 / self.kappa

    @property
    def time_per_tau(self) -> float:
        """Physical time (units of ``1/kappa``) elapsed per unit of ``tau``."""
        return self.tau_scale / self.cavity_rate

    def to_time(self, tau: float) -> float:
        return tau * self.time_per_tau

    def to_tau(self, t: float) -> float:
        return t / self.time_per_tau


def g_coeff(params: SystemParams, q: int, p: int, k: int) -> float:
    """Rate ``q*gamma + g**2 (k*nbar + p) / kappa``."""
    if q not in (0, 1) or p not in (0, 1) or k not in (1, 2):
        raise ValueError(f"need q, p in {{0, 1}} and k in {{1, 2}}; got q={q}, p={p}, k={k}")
    return q * params.gamma + params.g**2 * (k * params.nbar + p) / params.kappa


# --------------------------------------------------------------------------
# Detuning schedules
# --------------------------------------------------------------------------


class DetuningSchedule:
    """Base class for time profiles ``delta(tau)``.

    Subclasses are frozen dataclasses; ``edges`` lists the discontinuities so
    integrators can avoid stepping across them.  Step-like variants are
    right-continuous.
    """

    variant: ClassVar[str] = ""
    piecewise_constant: ClassVar[bool] = True

    def __call__(self, tau: float) -> float:
        raise NotImplementedError

    def edges(self) -> tuple[float, ...]:
        return ()

    def to_dict(self) -> dict:
        d = {"variant": self.variant}
        for name in (f.name for f in fields(self)):
            value = getattr(self, name)
            d[name] = list(value) if isinstance(value, tuple) else value
        return d


@dataclass(frozen=True)
class Zero(DetuningSchedule):
    variant: ClassVar[str] = "Zero"

    def __call__(self, tau):
        return 0.0


@dataclass(frozen=True)
class Constant(DetuningSchedule):
    A: float
    variant: ClassVar[str] = "Constant"

    def __call__(self, tau):
        return float(self.A)


@dataclass(frozen=True)
class Heaviside(DetuningSchedule):
    A: float
    tau0: float
    variant: ClassVar[str] = "Heaviside"

    def __call__(self, tau):
        return float(self.A) if tau >= self.tau0 else 0.0

    def edges(self):
        return (float(self.tau0),)


@dataclass(frozen=True)
class Sigmoid(DetuningSchedule):
    """Smooth edge ``A (1 + exp(2 b (tau0 - tau)))**-1/2``."""

    A: float
    b: float
    tau0: float
    variant: ClassVar[str] = "Sigmoid"
    piecewise_constant: ClassVar[bool] = False

    def __call__(self, tau):
        x = 2.0 * self.b * (self.tau0 - tau)
        if x > 700.0:
            return 0.0
        return self.A / math.sqrt(1.0 + math.exp(x))


@dataclass(frozen=True)
class SquareWave(DetuningSchedule):
    """``A * sum_{n=1..N} (-1)**(n+1) Theta(tau - period*n)``."""

    A: float
    period: float
    N: int
    variant: ClassVar[str] = "SquareWave"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not self.period > 0:
            raise ValueError(f"period must be > 0, got {self.period}")

    def __call__(self, tau):
        total = 0
        for n in range(1, int(self.N) + 1):
            if tau < self.period * n:
                break
            total += 1 if n % 2 else -1
        return float(self.A) * total

    def edges(self):
        return tuple(self.period * n for n in range(1, int(self.N) + 1))


@dataclass(frozen=True)
class Pulse(DetuningSchedule):
    """Value ``A`` on ``[tau0, tau0 + width)``, zero elsewhere."""

    A: float
    tau0: float
    width: float
    variant: ClassVar[str] = "Pulse"

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"width must be > 0, got {self.width}")

    def __call__(self, tau):
        return float(self.A) if self.tau0 <= tau < self.tau0 + self.width else 0.0

    def edges(self):
        return (float(self.tau0), float(self.tau0 + self.width))


@dataclass(frozen=True)
class PiecewiseConstant(DetuningSchedule):
    """Table of ``(start_tau, value)`` breakpoints; zero before the first one."""

    breakpoints: tuple = field(default_factory=tuple)
    variant: ClassVar[str] = "PiecewiseConstant"

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.breakpoints)
        starts = [t for t, _ in pts]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        object.__setattr__(self, "breakpoints", pts)

    def __call__(self, tau):
        value = 0.0
        for start, v in self.breakpoints:
            if tau >= start:
                value = v
            else:
                break
        return value

    def edges(self):
        return tuple(t for t, _ in self.breakpoints)

    def to_dict(self):
        return {"variant": self.variant, "breakpoints": [list(p) for p in self.breakpoints]}


SCHEDULES = {
    cls.variant: cls
    for cls in (Zero, Constant, Heaviside, Sigmoid, SquareWave, Pulse, PiecewiseConstant)
}


def eval_schedule(s: DetuningSchedule, tau: float) -> float:
    return s(tau)


def schedule_from_dict(d: dict) -> DetuningSchedule:
    """Build a schedule from ``{"variant": name, **fields}``."""
    if not isinstance(d, dict) or "variant" not in d:
        raise ValueError("schedule must be an object with a 'variant' key")
    name = d["variant"]
    try:
        cls = SCHEDULES[name]
    except KeyError:
        raise ValueError(f"unknown schedule variant {name!r}; choose from {sorted(SCHEDULES)}") from None
    kwargs = {k: v for k, v in d.items() if k != "variant"}
    expected = {f.name for f in fields(cls)}
    unknown = set(kwargs) - expected
    missing = expected - set(kwargs) - ({"breakpoints"} if cls is PiecewiseConstant else set())
    if unknown:
        raise ValueError(f"{name}: unknown field(s) {sorted(unknown)}")
    if missing:
        raise ValueError(f"{name}: missing field(s) {sorted(missing)}")
    if cls is PiecewiseConstant:
        kwargs["breakpoints"] = tuple(tuple(p) for p in kwargs.get("breakpoints", ()))
    return cls(**kwargs)


# --------------------------------------------------------------------------
# States
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DickeState:
    """Populations of ``|up>, |s>, |a>, |down>`` and the coherence ``<s|rho|a>``."""

    p_up: float = 0.0
    p_s: float = 0.0
    p_a: float = 0.0
    p_down: float = 0.0
    c_sa: complex = 0j

    def __post_init__(self):
        pops = (self.p_up, self.p_s, self.p_a, self.p_down)
        total = sum(pops)
        if abs(total - 1.0) > NORM_REJECT:
            raise StateError(f"populations sum to {total!r}, not 1")
        for name, p in zip(("p_up", "p_s", "p_a", "p_down"), pops):
            if p < -POP_EPS or p > 1 + POP_EPS:
                raise StateError(f"{name} = {p!r} outside [0, 1]")
        if abs(self.c_sa) ** 2 > self.p_s * self.p_a + POP_EPS:
            raise StateError(f"|c_sa|^2 = {abs(self.c_sa) ** 2:.3e} exceeds p_s*p_a")

    @classmethod
    def up(cls) -> DickeState:
        return cls(p_up=1.0)

    @classmethod
    def down(cls) -> DickeState:
        return cls(p_down=1.0)

    @property
    def populations(self) -> tuple[float, float, float, float]:
        return (self.p_up, self.p_s, self.p_a, self.p_down)

    def as_vector(self) -> np.ndarray:
        """Real vector ``[p_up, p_s, p_a, p_down, Re c_sa, Im c_sa]``."""
        c = complex(self.c_sa)
        return np.array([self.p_up, self.p_s, self.p_a, self.p_down, c.real, c.imag])

    @classmethod
    def from_vector(cls, v) -> DickeState:
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]), complex(v[4], v[5]))


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """4x4 density matrix in the order ``|11>, |10>, |01>, |00>``."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise StateError(f"expected a 4x4 matrix, got shape {rho.shape}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def check(self, herm_tol=1e-12, trace_tol=1e-9, eig_tol=1e-8) -> None:
        check_density_matrix(self.rho, herm_tol, trace_tol, eig_tol)


def check_density_matrix(rho, herm_tol=1e-12, trace_tol=1e-9, eig_tol=1e-8) -> None:
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise StateError(f"matrix is not Hermitian (deviation {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise StateError(f"trace is {tr!r}, not 1")
    lmin = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lmin < -eig_tol:
        raise StateError(f"negative eigenvalue {lmin:.3e}")


def as_matrix(r) -> np.ndarray:
    """Accept a ``TwoQubitState`` or anything array-like."""
    return np.asarray(getattr(r, "rho", r), dtype=complex)


_R2 = 1.0 / math.sqrt(2.0)
# columns: |up>, |s>, |a>, |down> expressed in |11>, |10>, |01>, |00>
DICKE_BASIS = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, _R2, -_R2, 0.0],
        [0.0, _R2, _R2, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ],
    dtype=complex,
)
KET_S = DICKE_BASIS[:, 1].copy()
KET_A = DICKE_BASIS[:, 2].copy()


def dicke_matrix(d: DickeState) -> np.ndarray:
    m = np.diag(np.array(d.populations, dtype=complex))
    m[1, 2] = d.c_sa
    m[2, 1] = np.conj(d.c_sa)
    return m


def dicke_to_computational(d: DickeState) -> TwoQubitState:
    return TwoQubitState(DICKE_BASIS @ dicke_matrix(d) @ DICKE_BASIS.conj().T)


def to_dicke_matrix(rho) -> np.ndarray:
    """Express any 4x4 operator in the Dicke basis (no structural checks)."""
    rho = as_matrix(rho)
    return DICKE_BASIS.conj().T @ rho @ DICKE_BASIS


_SPAN_MASK = np.zeros((4, 4), dtype=bool)
_SPAN_MASK[np.diag_indices(4)] = True
_SPAN_MASK[1, 2] = _SPAN_MASK[2, 1] = True


def span_residual(m_dicke: np.ndarray) -> float:
    """Norm of the entries outside the populations + s/a coherence pattern."""
    return float(np.linalg.norm(np.where(_SPAN_MASK, 0.0, m_dicke)))


def computational_to_dicke(r, atol: float = 1e-8) -> DickeState:
    m = to_dicke_matrix(r)
    resid = span_residual(m)
    if resid > atol:
        raise OutOfSpanError(resid)
    pops = np.real(np.diag(m))
    return DickeState(*(float(p) for p in pops), c_sa=complex(0.5 * (m[1, 2] + np.conj(m[2, 1]))))
