"""Pure-numpy propagation and time-averaging kernels.

This is the reference implementation of the engine interface.  The compiled
extension (``urcontrol.engine._kernels``) provides the same three entry
points with identical semantics; parity between the two is enforced by the
test suite.

All kernels work on stacks of segment Hamiltonians ``h`` of shape
``(n_segments, d, d)`` (complex128, C-contiguous) for a piecewise-constant
evolution with segment duration ``dt``.  Propagators are ``exp(-i h_j dt)``
with hbar = 1.
"""
from __future__ import annotations

import numpy as np

__all__ = ["propagate", "averaged_ops", "m0_matrix"]


def _segment_data(h: np.ndarray, dt: float):
    """Eigendecompose all segments and form propagators and cumulatives.

    Returns ``(evals, evecs, u, c)`` where ``u[j] = exp(-i h[j] dt)`` and
    ``c[k] = u[k-1] @ ... @ u[0]`` with ``c[0] = I``.
    """
    n, d = h.shape[0], h.shape[1]
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * dt * evals)
    u = np.einsum("jab,jb,jcb->jac", evecs, phases, evecs.conj())
    c = np.empty((n + 1, d, d), dtype=np.complex128)
    c[0] = np.eye(d)
    for j in range(n):
        np.matmul(u[j], c[j], out=c[j + 1])
    return evals, evecs, u, c


def _phase_integrals(evals: np.ndarray, dt: float) -> np.ndarray:
    """Per-segment matrices g with g[a,b] = integral_0^dt exp(i(e_a - e_b)t) dt.

    Written as dt * sinc(x) * exp(i x) with x = (e_a - e_b) dt / 2, which is
    smooth through coinciding eigenvalues (no 0/0 branch needed).
    """
    x = (evals[:, :, None] - evals[:, None, :]) * (dt / 2.0)
    return dt * np.sinc(x / np.pi) * np.exp(1j * x)


def propagate(h: np.ndarray, dt: float):
    """Segment propagators and cumulative propagators.

    Parameters
    ----------
    h : ndarray, shape (n, d, d)
        Hermitian segment Hamiltonians.
    dt : float
        Segment duration.

    Returns
    -------
    u : ndarray, shape (n, d, d)
        Per-segment unitaries exp(-i h_j dt).
    c : ndarray, shape (n + 1, d, d)
        Cumulative propagators; c[k] evolves from t = 0 to t = k dt.
    """
    _, _, u, c = _segment_data(np.ascontiguousarray(h, dtype=np.complex128), dt)
    return u, c


def averaged_ops(h: np.ndarray, dt: float, ops: np.ndarray):
    """Exact time averages of conjugated operators over the full evolution.

    For each operator V in ``ops`` computes
    ``(1/t_f) * integral_0^{t_f} U(s,0)^dag V U(s,0) ds`` where the integral
    is evaluated segment by segment in closed form through the segment
    eigenbases (no time discretization error).

    Parameters
    ----------
    h : ndarray, shape (n, d, d)
    dt : float
    ops : ndarray, shape (m, d, d)

    Returns
    -------
    avg : ndarray, shape (m, d, d)
    c : ndarray, shape (n + 1, d, d)
        Cumulative propagators (so callers get the final unitary for free).
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    ops = np.ascontiguousarray(ops, dtype=np.complex128)
    n, d = h.shape[0], h.shape[1]
    evals, evecs, _, c = _segment_data(h, dt)
    if ops.shape[0] == 0:
        return np.zeros((0, d, d), dtype=np.complex128), c
    g = _phase_integrals(evals, dt)
    # per segment j: W (g o (W^dag V W)) W^dag, then sandwich with c[j]
    tilde = np.einsum("jba,mbc,jcd->mjad", evecs.conj(), ops, evecs)
    seg = np.einsum("jab,mjbc,jdc->mjad", evecs, tilde * g[None], evecs.conj())
    avg = np.einsum("jba,mjbc,jcd->mad", c[:-1].conj(), seg, c[:-1])
    avg /= n * dt
    return avg, c


def m0_matrix(h: np.ndarray, dt: float):
    """Time-averaging superoperator as an explicit d^2 x d^2 matrix.

    Row-stacking convention: the returned matrix sends vectorize(V) to
    vectorize of the time average of U^dag V U.  Computed segment-exactly
    with the same closed-form phase integrals as ``averaged_ops``.

    Returns ``(m0, c)`` with ``c`` the cumulative propagators.
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    n, d = h.shape[0], h.shape[1]
    evals, evecs, _, c = _segment_data(h, dt)
    g = _phase_integrals(evals, dt)
    m0 = np.zeros((d * d, d * d), dtype=np.complex128)
    for j in range(n):
        lift = np.kron(evecs[j], evecs[j].conj())
        core = (lift * g[j].reshape(-1)[None, :]) @ lift.conj().T
        q = np.kron(c[j], c[j].conj())
        m0 += q.conj().T @ core
    m0 /= n * dt
    return m0, c


def riemann_grid_propagators(h: np.ndarray, dt: float, substeps: int):
    """Cumulative propagators on the left-Riemann grid.

    Grid points are the left endpoints of ``substeps`` equal subintervals of
    every segment: t = (j + s/substeps) dt for j = 0..n-1, s = 0..substeps-1.
    Returns an ndarray of shape (n * substeps, d, d) ordered by time.
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    n, d = h.shape[0], h.shape[1]
    evals, evecs, _, c = _segment_data(h, dt)
    taus = np.arange(substeps) * (dt / substeps)
    # partial propagators exp(-i h_j tau) for every sub-offset tau
    phases = np.exp(-1j * evals[:, None, :] * taus[None, :, None])
    partial = np.einsum("jab,jsb,jcb->jsac", evecs, phases, evecs.conj())
    grid = np.einsum("jsab,jbc->jsac", partial, c[:-1])
    return grid.reshape(n * substeps, d, d)


def riemann_averaged_ops(h: np.ndarray, dt: float, ops: np.ndarray, substeps: int):
    """Left-Riemann counterpart of ``averaged_ops`` (first-order quadrature)."""
    ops = np.ascontiguousarray(ops, dtype=np.complex128)
    grid = riemann_grid_propagators(h, dt, substeps)
    avg = np.einsum("kba,mbc,kcd->mad", grid.conj(), ops, grid) / grid.shape[0]
    return avg


def riemann_m0_matrix(h: np.ndarray, dt: float, substeps: int):
    """Left-Riemann counterpart of ``m0_matrix``."""
    grid = riemann_grid_propagators(h, dt, substeps)
    d = grid.shape[1]
    lifts = np.einsum("kab,kcd->kacbd", grid, grid.conj()).reshape(-1, d * d, d * d)
    return lifts.conj().transpose(0, 2, 1).sum(axis=0) / grid.shape[0]
