"""Entanglement and state diagnostics for two-qubit density matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import KET_A, KET_S, DickeState, StateError, as_matrix, to_dicke_matrix

SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
EIG_REJECT = 1e-8
EIG_ZERO = 1e-12


class NonPhysicalStateError(StateError):
    """Density matrix with an eigenvalue below -1e-8."""


@dataclass(frozen=True)
class MetricRecord:
    tau: float
    concurrence_clamped: float
    concurrence_relaxed: float
    f_s: float
    f_a: float
    negativity: float
    purity: float

    FIELDS = (
        "concurrence_clamped",
        "concurrence_relaxed",
        "f_s",
        "f_a",
        "negativity",
        "purity",
    )


def _sqrt_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if w.min() < -EIG_REJECT:
        raise NonPhysicalStateError(f"eigenvalue {w.min():.3e} < -{EIG_REJECT}")
    w = np.where(w < EIG_ZERO, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def concurrence_wootters(r) -> tuple[float, float]:
    """Wootters concurrence ``(clamped, relaxed)``.

    The square roots of the eigenvalues of ``rho * rho_tilde`` are obtained as
    the singular values of ``sqrt(rho) (sy x sy) sqrt(rho)*``, which avoids
    square-rooting round-off for rank-deficient states.
    """
    rho = as_matrix(r)
    s = _sqrt_psd(rho)
    lam = np.linalg.svd(s @ SYSY @ s.conj(), compute_uv=False)
    relaxed = float(lam[0] - lam[1:].sum())
    return max(0.0, relaxed), relaxed


def concurrence_xform(d: DickeState) -> tuple[float, float]:
    """Closed form ``2(|rho_{10,01}| - sqrt(p_up p_down))`` for Dicke-form states."""
    c = complex(d.c_sa)
    z = complex(0.5 * (d.p_s - d.p_a), c.imag)  # rho_{10,01}
    relaxed = 2.0 * (abs(z) - math.sqrt(max(d.p_up * d.p_down, 0.0)))
    return max(0.0, relaxed), relaxed


def fidelities(d) -> tuple[float, float]:
    """``(<s|rho|s>, <a|rho|a>)`` for a ``DickeState`` or 4x4 matrix."""
    if isinstance(d, DickeState):
        return d.p_s, d.p_a
    rho = as_matrix(d)
    return (float(np.real(KET_S.conj() @ rho @ KET_S)), float(np.real(KET_A.conj() @ rho @ KET_A)))


def partial_transpose(r) -> np.ndarray:
    """Partial transpose over qubit 2."""
    rho = as_matrix(r).reshape(2, 2, 2, 2)
    return rho.transpose(0, 3, 2, 1).reshape(4, 4)


def negativity(r) -> float:
    w = np.linalg.eigvalsh(partial_transpose(r))
    return max(0.0, float(-w[w < 0].sum()))


def purity(r) -> float:
    rho = as_matrix(r)
    return float(np.real(np.trace(rho @ rho)))


def relaxed_concurrence(rho, span_tol: float = 1e-9) -> float:
    """Unclamped concurrence as plotted along trajectories.

    For states with only populations and an s/a coherence in the Dicke basis
    this is ``2(|rho_{10,01}| - sqrt(rho_{11,11} rho_{00,00}))``, which can go
    below the Wootters value ``lam1 - lam2 - lam3 - lam4``.  Other states fall
    back to the Wootters expression.
    """
    rho = as_matrix(rho)
    m = to_dicke_matrix(rho)
    off = m.copy()
    off[np.diag_indices(4)] = 0
    off[1, 2] = off[2, 1] = 0
    if np.linalg.norm(off) > span_tol:
        return concurrence_wootters(rho)[1]
    pu, pd = rho[0, 0].real, rho[3, 3].real
    return 2.0 * (abs(rho[1, 2]) - math.sqrt(max(pu * pd, 0.0)))


def metric_record(rho, tau: float = 0.0) -> MetricRecord:
    rho = as_matrix(rho)
    clamped, _ = concurrence_wootters(rho)
    f_s, f_a = fidelities(rho)
    return MetricRecord(
        tau=float(tau),
        concurrence_clamped=clamped,
        concurrence_relaxed=relaxed_concurrence(rho),
        f_s=f_s,
        f_a=f_a,
        negativity=negativity(rho),
        purity=purity(rho),
    )


def trajectory_metrics(traj) -> list[MetricRecord]:
    """One record per sample of a Bloch or matrix trajectory."""
    return [metric_record(rho, tau) for tau, rho in zip(traj.taus, traj.density_matrices())]


def concurrence_series(traj, relaxed: bool = False) -> np.ndarray:
    """Concurrence per sample; fast path for Bloch trajectories."""
    if getattr(traj, "model", None) == "bloch":
        v = traj.values
        z = np.abs(0.5 * (v[:, 1] - v[:, 2]) + 1j * v[:, 5])
        c = 2.0 * (z - np.sqrt(np.clip(v[:, 0] * v[:, 3], 0.0, None)))
    else:
        c = np.array([relaxed_concurrence(r) for r in traj.density_matrices()])
    return c if relaxed else np.clip(c, 0.0, None)
