"""Fixed-step RK4 that never straddles a schedule discontinuity."""

from __future__ import annotations

import math

import numpy as np


class IntegrationError(RuntimeError):
    """Integration produced an unphysical state (usually: step too large)."""


def segment_bounds(tau_end: float, edges) -> list[float]:
    inner = sorted({float(e) for e in edges if 0.0 < e < tau_end})
    return [0.0, *inner, float(tau_end)]


def rk4_propagator(hA: np.ndarray) -> np.ndarray:
    """One RK4 step of ``y' = A y`` as a matrix (Horner form of the degree-4 Taylor polynomial)."""
    eye = np.eye(hA.shape[0], dtype=hA.dtype)
    p = eye + hA / 4.0
    p = eye + (hA @ p) / 3.0
    p = eye + (hA @ p) / 2.0
    return eye + hA @ p


def rk4_piecewise(rhs, y0, tau_end, dtau, edges=(), stride=1, check=None, record=None, generator=None):
    """Integrate ``dy/dtau = rhs(tau, y)`` from 0 to ``tau_end``.

    The interval is cut at ``edges``; each piece gets a uniform step no larger
    than ``dtau``.  Stage evaluations that would land on a segment's right end
    are moved one ulp inside so step-like schedules return their left limit.

    Returns ``(taus, samples, y_final)``; samples are taken every ``stride``
    steps plus the end point and pass through ``record`` when given.
    ``check(tau, y)`` runs after every step and may raise.

    ``generator(tau)``, when given, must return the matrix ``A`` with
    ``rhs(tau, y) == A @ y`` and ``A`` constant between edges.  Each segment
    then applies the RK4 step polynomial ``I + hA + (hA)^2/2 + (hA)^3/6 +
    (hA)^4/24`` directly, which is the same scheme at a fraction of the cost.
    """
    if not dtau > 0:
        raise ValueError(f"dtau must be > 0, got {dtau}")
    if not tau_end > 0:
        raise ValueError(f"tau_end must be > 0, got {tau_end}")
    stride = int(stride)
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")

    if record is None:
        record = np.copy
    y = np.array(y0, copy=True)
    taus = [0.0]
    ys = [record(y)]
    bounds = segment_bounds(tau_end, edges)
    count = 0
    for a, b in zip(bounds, bounds[1:]):
        n = max(1, math.ceil((b - a) / dtau - 1e-9))
        h = (b - a) / n
        b_inside = math.nextafter(b, a)
        step = None if generator is None else rk4_propagator(h * generator(0.5 * (a + b)))
        for k in range(n):
            if step is not None:
                y = step @ y
            else:
                t = a + k * h
                t_mid = t + 0.5 * h
                t_end = b_inside if k == n - 1 else min(t + h, b_inside)
                k1 = rhs(t, y)
                k2 = rhs(t_mid, y + 0.5 * h * k1)
                k3 = rhs(t_mid, y + 0.5 * h * k2)
                k4 = rhs(t_end, y + h * k3)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            count += 1
            t_next = b if k == n - 1 else a + (k + 1) * h
            if check is not None:
                check(t_next, y)
            if count % stride == 0:
                taus.append(t_next)
                ys.append(record(y))
    if taus[-1] != bounds[-1]:
        taus.append(bounds[-1])
        ys.append(record(y))
    return np.array(taus), np.array(ys), y
