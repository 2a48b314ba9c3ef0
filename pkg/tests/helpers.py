"""Independent numerical oracles shared across test modules.

Everything here recomputes quantities from first principles with scipy
primitives, deliberately avoiding the package's engine: tests compare the
package against these, not against itself. The Gauss-Legendre quadrature is
effectively exact for the segment durations used in tests (the integrands
are trigonometric polynomials well inside the rule's resolution), so oracle
error is negligible against every stated tolerance.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from urcontrol.models import Channel, ControlModel, Pulse, segment_hamiltonians

GL_NODES = 24


def random_hermitian(rng, d: int, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (a + a.conj().T) / 2.0


def random_traceless_hermitian(rng, d: int, scale: float = 1.0) -> np.ndarray:
    v = random_hermitian(rng, d, scale)
    return v - (np.trace(v) / d) * np.eye(d)


def random_pure_state(rng, d: int) -> np.ndarray:
    ket = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    ket /= np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def random_pulse(rng, model: ControlModel, n_segments: int, dt: float) -> Pulse:
    values = np.empty((n_segments, model.n_channels))
    for c, ch in enumerate(model.channels):
        if ch.kind == "phase":
            values[:, c] = rng.uniform(0.0, 2.0 * np.pi, n_segments)
        else:
            values[:, c] = rng.normal(0.0, ch.start_scale, n_segments)
    return Pulse(values=values, dt=dt)


def zero_model(d: int) -> ControlModel:
    """Amplitude channel around a zero drift; a zero pulse freezes evolution."""
    op = np.zeros((d, d), dtype=np.complex128)
    op[0, 0] = 1.0
    op[-1, -1] = -1.0
    return ControlModel(
        drift=np.zeros((d, d), dtype=np.complex128),
        channels=(Channel(kind="amplitude", operators=(op,)),),
        label=f"zero_{d}",
    )


def zero_pulse(d: int, n_segments: int, dt: float) -> Pulse:
    return Pulse(values=np.zeros((n_segments, 1)), dt=dt)


def scipy_cumulative(h: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative propagators via scipy.linalg.expm, c[0] = identity."""
    n, d = h.shape[0], h.shape[1]
    c = np.empty((n + 1, d, d), dtype=np.complex128)
    c[0] = np.eye(d)
    for k in range(n):
        c[k + 1] = scipy.linalg.expm(-1j * h[k] * dt) @ c[k]
    return c


def gl_time_average(h: np.ndarray, dt: float, v: np.ndarray) -> np.ndarray:
    """(1/t_f) int U0(s)^dag V U0(s) ds by per-segment Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(GL_NODES)
    # map from (-1, 1) to (0, dt)
    taus = 0.5 * dt * (nodes + 1.0)
    wts = 0.5 * dt * weights
    c = scipy_cumulative(h, dt)
    acc = np.zeros_like(v)
    for k in range(h.shape[0]):
        for tau, w in zip(taus, wts):
            u = scipy.linalg.expm(-1j * h[k] * tau) @ c[k]
            acc = acc + w * (u.conj().T @ v @ u)
    return acc / (h.shape[0] * dt)


def model_time_average(model: ControlModel, pulse: Pulse, v: np.ndarray) -> np.ndarray:
    return gl_time_average(segment_hamiltonians(model, pulse), pulse.dt, v)
