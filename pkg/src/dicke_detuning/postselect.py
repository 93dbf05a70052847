"""Conditioning on the qubits *not* being found in ``|00>``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TwoQubitState, as_matrix
from .metrics import concurrence_wootters, fidelities, relaxed_concurrence

DEGENERATE_PROB = 1e-12
GROUND = 3  # index of |00>

PI0 = np.zeros((4, 4), dtype=complex)
PI0[GROUND, GROUND] = 1.0
PI1 = np.eye(4, dtype=complex) - PI0


class DegeneratePostselectionError(ValueError):
    """Success probability too small to normalise the conditioned state."""


@dataclass(frozen=True)
class PostselectionResult:
    state: TwoQubitState
    success_prob: float
    concurrence: tuple[float, float]
    f_s_post: float


def postselect(r) -> PostselectionResult:
    """Apply ``Pi1 rho Pi1`` (removes the ``|00>`` row and column) and renormalise."""
    rho = as_matrix(r)
    kept = PI1 @ rho @ PI1
    prob = float(np.real(np.trace(kept)))
    if prob <= DEGENERATE_PROB:
        raise DegeneratePostselectionError(f"success probability {prob:.3e} is below {DEGENERATE_PROB}")
    post = kept / prob
    clamped, _ = concurrence_wootters(post)
    return PostselectionResult(
        state=TwoQubitState(post),
        success_prob=prob,
        concurrence=(clamped, relaxed_concurrence(post)),
        f_s_post=fidelities(post)[0],
    )


def postselect_sweep(traj) -> list[tuple[float, PostselectionResult | None]]:
    """Postselect every sample; degenerate samples map to ``None``."""
    if len(traj.taus) == 0:
        raise ValueError("empty trajectory")
    out = []
    for tau, rho in zip(traj.taus, traj.density_matrices()):
        try:
            out.append((float(tau), postselect(rho)))
        except DegeneratePostselectionError:
            out.append((float(tau), None))
    return out
