"""Gradients of the cost functionals with respect to pulse parameters.

The analytic route differentiates the universal cost evaluated with the
left-Riemann quadrature (substeps = 1): with grid propagators C_0..C_{L-1}
and T[m, n] = Tr(C_m C_n^dag),

    J_U = (1/(d L^2)) sum_{m,n} |T[m, n]|^2 - 1/d,

and the derivative with respect to segment j only picks up (m, n) pairs
straddling the segment, because the in-place rotation generated by a
parameter change is anti-Hermitian and cancels between matched pairs. The
resulting double sum collapses to O(L^2) matrix work via a prefix recurrence.

The analytic gradient therefore matches finite differences of the
Riemann-quadrature cost, not of the segment-exact one; the two costs agree
only to O(dt). Everything else (restricted coverings, terminal costs, state
costs) goes through central finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, qcore
from .models import ControlModel, OperatorBasis, Pulse, segment_hamiltonians

FD_DEFAULT_STEP = 1e-6


@dataclass(frozen=True)
class Gradient:
    """Flat gradient over pulse parameters, segment-major order.

    values[k * n_channels + c] differentiates with respect to
    pulse.values[k, c], matching Pulse.values.reshape(-1).
    """

    values: np.ndarray
    method: str
    step: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise ValueError("gradient contains non-finite entries")
        if self.method not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown gradient method {self.method!r}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def channel_generator_derivative(model: ControlModel, pulse: Pulse, k: int, channel: int) -> np.ndarray:
    """dH_k / d(pulse.values[k, channel]) at the current segment value."""
    if not 0 <= k < pulse.n_segments:
        raise IndexError(f"segment index {k} outside 0..{pulse.n_segments - 1}")
    if not 0 <= channel < model.n_channels:
        raise IndexError(f"channel index {channel} outside 0..{model.n_channels - 1}")
    ch = model.channels[channel]
    if ch.kind == "phase":
        x, y = ch.operators
        phi = pulse.values[k, channel]
        return ch.amplitude * (-np.sin(phi) * x + np.cos(phi) * y)
    (a,) = ch.operators
    return np.array(a)


def _frechet_expm(h: np.ndarray, direction: np.ndarray, dt: float) -> np.ndarray:
    """Directional derivative of exp(-i h dt) along a Hermitian direction.

    In the eigenbasis of h the derivative kernel is
    -i dt exp(-i (e_a + e_b) dt / 2) sinc((e_a - e_b) dt / 2).
    """
    evals, evecs = np.linalg.eigh(h)
    x = (evals[:, None] - evals[None, :]) * (dt / 2.0)
    phi = -1j * dt * np.exp(-1j * (evals[:, None] + evals[None, :]) * (dt / 2.0)) * np.sinc(x / np.pi)
    inner = evecs.conj().T @ direction @ evecs
    return evecs @ (phi * inner) @ evecs.conj().T


def segment_unitary_derivative(
    model: ControlModel,
    pulse: Pulse,
    k: int,
    channel: int = 0,
    mode: str = "exact",
) -> np.ndarray:
    """Derivative of the segment propagator U_k with respect to one parameter.

    mode "exact" evaluates the Frechet derivative of the exponential through
    the segment eigendecomposition; mode "short_time" returns the first-order
    form -i dt W U_k, which agrees with the exact result to O(dt^2).
    """
    w = channel_generator_derivative(model, pulse, k, channel)
    h_k = segment_hamiltonians(model, pulse)[k]
    if mode == "exact":
        return _frechet_expm(h_k, w, pulse.dt)
    if mode == "short_time":
        u_k = qcore.expm_hermitian(h_k, pulse.dt)
        return -1j * pulse.dt * (w @ u_k)
    raise ValueError(f"unknown derivative mode {mode!r}")


def bch_segment_unitary(drift, w, value: float, dt: float) -> np.ndarray:
    """Three-factor splitting of exp(-i (drift + value * w) dt).

    exp(-i dt H_d) exp(-i dt v W) exp((dt^2 v / 2) [H_d, W]), accurate to
    O(dt^3); the commutator factor restores the second-order cross term.
    """
    drift = qcore.assert_hermitian(drift, name="drift")
    w = qcore.assert_hermitian(w, name="control operator")
    comm = 1j * (drift @ w - w @ drift)
    return (
        qcore.expm_hermitian(drift, dt)
        @ qcore.expm_hermitian(w, dt * value)
        @ qcore.expm_hermitian(comm, 0.5 * dt**2 * value)
    )


def grad_JU_analytic(
    model: ControlModel,
    pulse: Pulse,
    basis: OperatorBasis,
    excluded=frozenset({0}),
    mode: str = "exact",
) -> Gradient:
    """Analytic gradient of the Riemann-quadrature universal cost.

    Only the fully universal demand (excluded == {0}) is supported: the
    identity column of the averaging superoperator is constant, so the cost
    reduces to the propagator-overlap double sum differentiated here.
    Restricted coverings need grad_finite_difference.
    """
    excluded = {int(k) for k in excluded}
    if excluded != {0}:
        raise ValueError(
            "analytic gradient covers only the universal demand (excluded classes {0}); "
            "use grad_finite_difference for restricted coverings"
        )
    if basis.dim != model.dim:
        raise ValueError("basis dimension does not match model")
    if mode not in ("exact", "short_time"):
        raise ValueError(f"unknown derivative mode {mode!r}")
    d = model.dim
    h = segment_hamiltonians(model, pulse)
    u, c = engine.propagate(h, pulse.dt)
    grid = c[:-1]
    n_seg, n_ch = pulse.n_segments, model.n_channels
    L = n_seg

    flat = grid.reshape(L, d * d)
    t_mat = flat @ flat.conj().T

    values = np.zeros((n_seg, n_ch))
    # prefix[m] accumulates sum_{n <= j} conj(T[m, n]) C_n^dag as j advances
    prefix = np.zeros((L, d, d), dtype=np.complex128)
    for j in range(n_seg - 1):
        prefix += t_mat[:, j].conj()[:, None, None] * grid[j].conj().T[None]
        s_j = np.einsum("mab,mbc->ac", prefix[j + 1 :], grid[j + 1 :])
        for ch in range(n_ch):
            w = channel_generator_derivative(model, pulse, j, ch)
            if mode == "exact":
                du = _frechet_expm(h[j], w, pulse.dt)
            else:
                du = -1j * pulse.dt * (w @ u[j])
            r = c[j + 1].conj().T @ du @ c[j]
            values[j, ch] = (4.0 / (d * L**2)) * np.trace(r @ s_j).real
    # the last segment only moves the endpoint, which the left-Riemann grid
    # never samples, so its gradient components are exactly zero
    return Gradient(values=values.reshape(-1), method="analytic")


def grad_finite_difference(func, x0, h: float = FD_DEFAULT_STEP) -> Gradient:
    """Central finite differences of a scalar function of a flat vector."""
    if h <= 0:
        raise ValueError("step must be positive")
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
    values = np.empty(x0.size)
    for i in range(x0.size):
        xp = x0.copy()
        xp[i] += h
        xm = x0.copy()
        xm[i] -= h
        fp, fm = float(func(xp)), float(func(xm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite functional value at parameter {i}")
        values[i] = (fp - fm) / (2.0 * h)
    return Gradient(values=values, method="finite_difference", step=h)
