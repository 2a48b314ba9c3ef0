"""Operator-space (doubled Hilbert space) machinery.

The central object is the time-averaging superoperator of an ideal evolution
U0(t, 0),

    M0 = (1/t_f) int_0^{t_f} [U0(s, 0) (x) U0*(s, 0)]^dag ds,

which sends a perturbation operator V to its interaction-picture time average
V0bar. Robustness functionals measure how close M0 comes to annihilating the
perturbations one cares about, after projecting out directions that need not
be suppressed (always at least the identity, which M0 preserves exactly).

All superoperators use the row-stacking convention of qcore.vectorize, with
the lift A -> B A C^T represented by B (x) C.

Integrals over the ideal evolution are evaluated segment-exactly through the
eigendecomposition of each constant Hamiltonian (see the engine package); a
left-Riemann scheme on a refined grid is available as a cross-check via
method="riemann".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, qcore
from .models import ControlModel, Pulse, OperatorBasis, segment_hamiltonians

KINDS = ("m0", "mtilde", "projector", "state", "kernel")

PROJECTOR_TOL = 1e-10
M0_FIXED_POINT_TOL = 1e-9


@dataclass(frozen=True)
class Superoperator:
    """A d^2 x d^2 matrix acting on vectorized operators, with a kind tag."""

    entries: np.ndarray
    kind: str

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("superoperator entries must be square")
        d = np.sqrt(entries.shape[0])
        if d != int(d):
            raise ValueError("superoperator size must be a perfect square")
        if self.kind not in KINDS:
            raise ValueError(f"unknown superoperator kind {self.kind!r}")
        if self.kind == "projector":
            dev_h = np.max(np.abs(entries - entries.conj().T))
            dev_i = np.max(np.abs(entries @ entries - entries))
            if max(dev_h, dev_i) > PROJECTOR_TOL:
                raise ValueError(
                    f"projector tag violated (hermiticity {dev_h:.2e}, idempotency {dev_i:.2e})"
                )
        if self.kind == "m0":
            ident = np.eye(int(d), dtype=np.complex128).reshape(-1)
            dev = np.max(np.abs(entries @ ident - ident))
            if dev > M0_FIXED_POINT_TOL:
                raise ValueError(f"averaging superoperator must fix the identity (dev {dev:.2e})")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension d (entries act on d^2 vectors)."""
        return int(np.sqrt(self.entries.shape[0]))

    def apply(self, operator) -> np.ndarray:
        """Matrix resulting from the action on a vectorized operator."""
        v = qcore.vectorize(operator)
        if v.size != self.entries.shape[0]:
            raise ValueError("operator dimension does not match superoperator")
        return qcore.devectorize(self.entries @ v)

    def norm_squared(self) -> float:
        """Squared Frobenius norm of the matrix representation."""
        return float(np.sum(np.abs(self.entries) ** 2))


def _hamiltonian_stack(model: ControlModel, pulse: Pulse, substeps: int, method: str):
    if substeps < 1 or substeps != int(substeps):
        raise ValueError("substeps must be a positive integer")
    if method not in ("exact", "riemann"):
        raise ValueError(f"unknown quadrature method {method!r}")
    return segment_hamiltonians(model, pulse)


def time_average_V(
    model: ControlModel,
    pulse: Pulse,
    v,
    substeps: int = 1,
    method: str = "exact",
) -> np.ndarray:
    """Interaction-picture time average of a Hermitian perturbation.

    Returns (1/t_f) int_0^{t_f} U0(s,0)^dag V U0(s,0) ds. The default method
    integrates each constant segment in closed form; substeps only affects
    the left-Riemann cross-check scheme.
    """
    h = _hamiltonian_stack(model, pulse, substeps, method)
    v = qcore.assert_hermitian(v, name="perturbation")
    if v.shape[0] != model.dim:
        raise ValueError("perturbation dimension does not match model")
    ops = v[None]
    if method == "exact":
        avg, _ = engine.averaged_ops(h, pulse.dt, ops)
    else:
        avg = engine.riemann_averaged_ops(h, pulse.dt, ops, substeps)
    out = avg[0]
    return (out + out.conj().T) / 2.0


def build_M0(
    model: ControlModel,
    pulse: Pulse,
    substeps: int = 1,
    method: str = "exact",
) -> Superoperator:
    """Full matrix of the time-averaging superoperator M0."""
    h = _hamiltonian_stack(model, pulse, substeps, method)
    if method == "exact":
        m, _ = engine.m0_matrix(h, pulse.dt)
    else:
        m = engine.riemann_m0_matrix(h, pulse.dt, substeps)
    return Superoperator(entries=m, kind="m0")


def projector_identity(d: int) -> Superoperator:
    """Rank-one projector onto the identity direction, |I>><<I| / d."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    ident = np.eye(d, dtype=np.complex128).reshape(-1)
    return Superoperator(entries=np.outer(ident, ident.conj()) / d, kind="projector")


def projector_subset(basis: OperatorBasis, classes) -> Superoperator:
    """Projector onto the span of all basis elements in the given classes."""
    members = basis.members(classes)
    vecs = members.reshape(members.shape[0], -1)
    return Superoperator(entries=vecs.T @ vecs.conj(), kind="projector")


def build_Mtilde(m0: Superoperator, basis: OperatorBasis, excluded) -> Superoperator:
    """Averaging superoperator restricted to the demanded perturbations.

    Mtilde = M0 (I - sum_{k in excluded} P_k). The identity class 0 must be
    excluded: M0 fixes the identity, so its contribution to the norm is an
    irreducible constant rather than a robustness demand.
    """
    excluded = {int(k) for k in excluded}
    if 0 not in excluded:
        raise ValueError("the identity class 0 must always be excluded")
    if basis.dim != m0.dim:
        raise ValueError("basis dimension does not match superoperator")
    p = projector_subset(basis, excluded)
    d2 = m0.entries.shape[0]
    entries = m0.entries @ (np.eye(d2) - p.entries)
    return Superoperator(entries=entries, kind="mtilde")


def state_projector(sigma) -> Superoperator:
    """P_sigma = (I - sigma) (x) sigma*, projecting onto what moves the state.

    For Hermitian V, <<V|P_sigma|V>> equals the variance of V in sigma.
    """
    sigma = qcore.assert_pure_state(sigma, name="sigma")
    d = sigma.shape[0]
    entries = np.kron(np.eye(d) - sigma, sigma.conj())
    return Superoperator(entries=entries, kind="projector")


def build_M0_sigma(m0: Superoperator, sigma) -> Superoperator:
    """State-referenced averaging superoperator M0^sigma = P_sigma M0.

    Annihilates the identity, and <<V|(M0^sigma)^dag M0^sigma|V>> is the
    variance of the time-averaged perturbation in sigma.
    """
    p = state_projector(sigma)
    if p.dim != m0.dim:
        raise ValueError("state dimension does not match superoperator")
    return Superoperator(entries=p.entries @ m0.entries, kind="state")


@dataclass(frozen=True)
class Correlation:
    """Two-time noise correlation C(t, s) with a shape tag.

    kind "white": C(t, s) = strength * delta(t - s); func is unused.
    kind "exponential": C(t, s) = variance * exp(-|t - s| / tau_c).
    kind "custom": arbitrary symmetric func(t, s).
    """

    kind: str
    func: object = None
    strength: float = 0.0
    variance: float = 0.0
    tau_c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("white", "exponential", "custom"):
            raise ValueError(f"unknown correlation kind {self.kind!r}")
        if self.kind == "white" and self.strength <= 0:
            raise ValueError("white noise needs a positive strength")
        if self.kind == "exponential" and (self.variance <= 0 or self.tau_c <= 0):
            raise ValueError("exponential correlation needs positive variance and tau_c")
        if self.kind == "custom" and not callable(self.func):
            raise ValueError("custom correlation needs a callable func(t, s)")

    def matrix(self, times: np.ndarray) -> np.ndarray:
        """Symmetric matrix C(t_i, t_j) on a grid (not defined for white)."""
        if self.kind == "white":
            raise ValueError("white noise has no finite correlation matrix")
        if self.kind == "exponential":
            gap = np.abs(times[:, None] - times[None, :])
            return self.variance * np.exp(-gap / self.tau_c)
        c = np.array([[float(self.func(t, s)) for s in times] for t in times])
        if np.max(np.abs(c - c.T)) > 1e-10 * max(1.0, np.max(np.abs(c))):
            raise ValueError("correlation function is not symmetric in (t, s)")
        return c


def white_noise(strength: float) -> Correlation:
    return Correlation(kind="white", strength=strength)


def exponential_correlation(variance: float, tau_c: float) -> Correlation:
    return Correlation(kind="exponential", variance=variance, tau_c=tau_c)


def custom_correlation(func) -> Correlation:
    return Correlation(kind="custom", func=func)


def _grid_superops(model: ControlModel, pulse: Pulse, substeps: int):
    """Closed quadrature grid t_0..t_L and the maps N_i = [C_i (x) C_i*]^dag."""
    h = segment_hamiltonians(model, pulse)
    h_fine = np.repeat(h, substeps, axis=0)
    delta = pulse.dt / substeps
    _, c = engine.propagate(h_fine, delta)
    times = delta * np.arange(c.shape[0])
    # [C (x) C*]^dag = C^dag (x) C^T, built for the whole stack at once
    cd = c.conj().transpose(0, 2, 1)
    n = np.einsum("iab,icd->iacbd", cd, c.transpose(0, 2, 1))
    d = model.dim
    return times, n.reshape(c.shape[0], d * d, d * d)


def noise_kernel(
    model: ControlModel,
    pulse: Pulse,
    sigma,
    correlation: Correlation,
    substeps: int = 4,
) -> Superoperator:
    """Second-order kernel of classical noise along a fixed operator.

    For a noise Hamiltonian lambda * xi(t) V with <xi(t) xi(s)> = C(t, s),
    the averaged fidelity of preparing from sigma obeys
    <F> ~ 1 - lambda^2 <<V| K |V>> with

        K = int int C(t, s) N_t^dag P_sigma N_s dt ds,

    N_t the interaction-picture lift of the ideal evolution. The double
    integral uses trapezoidal weights on the segment grid refined by
    `substeps`; perfectly correlated noise (C constant) reproduces the
    static-error kernel t_f^2 (M0^sigma)^dag M0^sigma on the same grid.
    """
    if substeps < 1:
        raise ValueError("substeps must be a positive integer")
    p = state_projector(sigma)
    if p.dim != model.dim:
        raise ValueError("state dimension does not match model")
    times, n = _grid_superops(model, pulse, substeps)
    b = np.matmul(p.entries[None], n)
    weights = np.full(times.size, pulse.dt / substeps)
    weights[0] *= 0.5
    weights[-1] *= 0.5

    d2 = model.dim**2
    if correlation.kind == "white":
        scaled = b * np.sqrt(correlation.strength * weights)[:, None, None]
        flat = scaled.reshape(-1, d2)
        entries = flat.conj().T @ flat
    else:
        c = correlation.matrix(times)
        wcw = weights[:, None] * c * weights[None, :]
        evals, evecs = np.linalg.eigh(wcw)
        entries = np.zeros((d2, d2), dtype=np.complex128)
        for lam, q in zip(evals, evecs.T):
            if abs(lam) < 1e-15 * np.max(np.abs(evals)):
                continue
            a = np.tensordot(q, b, axes=(0, 0))
            entries += lam * (a.conj().T @ a)
    entries = (entries + entries.conj().T) / 2.0
    return Superoperator(entries=entries, kind="kernel")
