"""Core linear-algebra primitives: propagation, fidelities, vectorization.

Conventions used throughout the package:

* hbar = 1; a Hermitian generator ``H`` acting for time ``tau`` produces the
  unitary ``exp(-i H tau)``.
* Vectorization is row-stacking: component ``i*d + j`` of ``vectorize(A)`` is
  ``A[i, j]``, so that ``vectorize(B @ A @ C.T) == kron(B, C) @ vectorize(A)``.
* The operator inner product is Hilbert-Schmidt, ``<A, B> = Tr(A^dag B)``.
"""
from __future__ import annotations

import numpy as np

from . import engine

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-8
PURITY_TOL = 1e-8


def as_operator(a) -> np.ndarray:
    """Coerce to a square complex matrix."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError("matrix contains non-finite entries")
    return a


def assert_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "operator") -> np.ndarray:
    a = as_operator(a)
    dev = np.max(np.abs(a - a.conj().T))
    if dev > tol:
        raise ValueError(f"{name} is not Hermitian (max deviation {dev:.2e} > {tol:.0e})")
    return a


def assert_pure_state(rho: np.ndarray, name: str = "state") -> np.ndarray:
    """Validate a pure density matrix (unit trace, Tr(rho^2) ~ 1)."""
    rho = assert_hermitian(rho, tol=1e-10, name=name)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{name} trace deviates from 1 by {abs(tr - 1.0):.2e}")
    purity = np.trace(rho @ rho).real
    if purity < 1.0 - PURITY_TOL:
        raise ValueError(f"{name} is not pure (Tr rho^2 = {purity:.10f})")
    return rho


def pure_density(ket) -> np.ndarray:
    """Density matrix |psi><psi| of a normalized ket."""
    ket = np.asarray(ket, dtype=np.complex128).reshape(-1)
    nrm = np.linalg.norm(ket)
    if abs(nrm - 1.0) > TRACE_TOL:
        raise ValueError(f"ket norm deviates from 1 by {abs(nrm - 1.0):.2e}")
    return np.outer(ket, ket.conj())


def expm_hermitian(h, tau: float) -> np.ndarray:
    """exp(-i h tau) for Hermitian h, via eigendecomposition.

    Exactly unitary up to roundoff, which matters when thousands of segment
    exponentials are chained.
    """
    h = assert_hermitian(h)
    if not np.isfinite(tau):
        raise ValueError("tau must be finite")
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * tau * evals)) @ evecs.conj().T


def propagate_segments(model, pulse):
    """Segment and cumulative propagators for a piecewise-constant pulse.

    Parameters
    ----------
    model : ControlModel
    pulse : Pulse

    Returns
    -------
    u : ndarray, shape (N, d, d)
        ``u[j] = exp(-i H_j dt)`` for segment Hamiltonians H_j.
    c : ndarray, shape (N + 1, d, d)
        Cumulative propagators, ``c[0] = I`` and ``c[k] = u[k-1] @ c[k-1]``.
    """
    from .models import segment_hamiltonians

    return engine.propagate(segment_hamiltonians(model, pulse), pulse.dt)


def gate_fidelity(a, b) -> float:
    """|Tr(a^dag b)|^2 / d^2, invariant under global phases of either input."""
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a.shape[0]
    return abs(np.trace(a.conj().T @ b)) ** 2 / d**2


def state_fidelity(rho, rho2) -> float:
    """Overlap fidelity Tr(rho rho2) for pure density matrices."""
    rho = assert_pure_state(rho)
    rho2 = assert_pure_state(rho2)
    if rho.shape != rho2.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {rho2.shape}")
    return float(np.trace(rho @ rho2).real)


def vectorize(a) -> np.ndarray:
    """Row-stack a matrix into a length-d^2 vector."""
    return as_operator(a).reshape(-1)


def devectorize(v) -> np.ndarray:
    """Inverse of vectorize."""
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    d = np.sqrt(v.size)
    if d != int(d):
        raise ValueError(f"vector length {v.size} is not a perfect square")
    d = int(d)
    return v.reshape(d, d)


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dag b)."""
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.sum(a.conj() * b))


def hs_norm(a) -> float:
    """Norm induced by hs_inner."""
    return float(np.linalg.norm(as_operator(a)))
