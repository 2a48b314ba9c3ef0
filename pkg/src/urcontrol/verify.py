"""Independent verification of robustness claims.

Everything here re-derives fidelity from perturbed dynamics alone: static
lambda sweeps with exact per-segment exponentials, curvature fits against the
predicted susceptibility, a direct test of the averaging (1-design) property
on the sampling grid, and stochastic-noise Monte Carlo. None of it reuses
the superoperator machinery under test, except where an identity demands the
identical time grid (noted inline).

Random directions follow two conventions: a single qubit draws V = n . sigma
with n a uniformly random unit vector (bare Pauli matrices), larger systems
draw from the unit Hilbert-Schmidt sphere of the traceless span of a supplied
operator basis via normalized Gaussian coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np
import scipy.signal

from . import engine, qcore
from .models import ControlModel, OperatorBasis, PAULI, Pulse, TargetSpec, segment_hamiltonians
from .superop import Correlation, projector_identity

FIT_MAX_INFIDELITY = 0.05
FIT_MIN_POINTS = 5
FIT_DENOMINATOR_FLOOR = 1e-8
FIDELITY_SLACK = 1e-12
NOISE_SUBSTEPS = 10
_TRAJECTORY_CHUNK = 4096


@dataclass(frozen=True)
class SweepCurve:
    """Fidelity versus static perturbation strength."""

    lambdas: np.ndarray
    fidelities: np.ndarray
    kind: str
    label: str
    seed: int | None = None
    realizations: np.ndarray | None = None

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=np.float64).reshape(-1)
        fid = np.asarray(self.fidelities, dtype=np.float64).reshape(-1)
        if lambdas.size != fid.size:
            raise ValueError("lambda grid and fidelities differ in length")
        if not np.any(lambdas == 0.0):
            raise ValueError("lambda grid must contain 0 (curvature anchor)")
        if self.kind not in ("gate", "state"):
            raise ValueError(f"unknown fidelity kind {self.kind!r}")
        if np.any(fid < -FIDELITY_SLACK) or np.any(fid > 1.0 + FIDELITY_SLACK):
            raise ValueError("fidelities outside [0, 1]")
        lambdas.flags.writeable = False
        fid.flags.writeable = False
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "fidelities", fid)
        if self.realizations is not None:
            real = np.asarray(self.realizations, dtype=np.float64)
            if real.ndim != 2 or real.shape[1] != lambdas.size:
                raise ValueError("realization curves must be (n_realizations, n_lambdas)")
            real.flags.writeable = False
            object.__setattr__(self, "realizations", real)

    @property
    def fidelity_at_zero(self) -> float:
        return float(self.fidelities[np.flatnonzero(self.lambdas == 0.0)[0]])


@dataclass(frozen=True)
class CurvatureFit:
    """Quadratic fit of 1 - F against a predicted susceptibility."""

    chi_fit: float
    chi_predicted: float
    relative_deviation: float
    residual: float
    window_max: float
    n_points: int


@dataclass(frozen=True)
class OneDesignReport:
    """Deviation of grid-averaged conjugation from the depolarizing map."""

    deviations: np.ndarray
    max_deviation: float
    frobenius_sq: float
    identity_gap: float
    n_samples: int

    def __post_init__(self):
        dev = np.asarray(self.deviations, dtype=np.float64)
        dev.flags.writeable = False
        object.__setattr__(self, "deviations", dev)


@dataclass(frozen=True)
class NoiseEstimate:
    """Monte-Carlo mean fidelity under stochastic noise."""

    mean_fidelity: float
    stderr: float
    n_trajectories: int

    @property
    def mean_infidelity(self) -> float:
        return 1.0 - self.mean_fidelity


def perturbed_propagator(model: ControlModel, pulse: Pulse, v: np.ndarray, lam: float) -> np.ndarray:
    """Final-time propagator of H_k + lam * V, piecewise exact."""
    v = qcore.as_operator(v)
    qcore.assert_hermitian(v, name="V")
    h = segment_hamiltonians(model, pulse) + lam * v
    _, c = engine.propagate(h, pulse.dt)
    return c[-1]


def _sweep_fidelities(model, pulse, target: TargetSpec, v, lambdas):
    v = qcore.as_operator(v)
    qcore.assert_hermitian(v, name="V")
    h0 = segment_hamiltonians(model, pulse)
    fid = np.empty(lambdas.size)
    for i, lam in enumerate(lambdas):
        _, c = engine.propagate(h0 + lam * v, pulse.dt)
        if target.is_unitary:
            fid[i] = qcore.gate_fidelity(c[-1], target.unitary)
        else:
            rho = c[-1] @ target.initial_state @ c[-1].conj().T
            fid[i] = qcore.state_fidelity(rho, target.target_state)
    return fid


def fidelity_sweep(
    model: ControlModel,
    pulse: Pulse,
    target: TargetSpec,
    v: np.ndarray,
    lambdas,
    label: str = "",
) -> SweepCurve:
    """Fidelity of the perturbed evolution over a static-strength grid."""
    grid = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if not np.any(grid == 0.0):
        raise ValueError("lambda grid must contain 0 (curvature anchor)")
    fid = _sweep_fidelities(model, pulse, target, v, grid)
    kind = "gate" if target.is_unitary else "state"
    return SweepCurve(lambdas=grid, fidelities=fid, kind=kind, label=label or "V")


def random_directions(
    n: int, seed: int, dim: int = 2, basis: OperatorBasis | None = None
) -> np.ndarray:
    """Seeded random Hermitian perturbation directions, shape (n, d, d).

    dim == 2 without a basis: V = n . sigma for a uniform unit vector n.
    Otherwise a basis is required and V is drawn uniformly from the unit
    Hilbert-Schmidt sphere of its traceless span.
    """
    if n < 1:
        raise ValueError("need at least one realization")
    if basis is None:
        if dim != 2:
            raise ValueError("random directions beyond a single qubit need an operator basis")
        paulis = np.stack([PAULI["X"], PAULI["Y"], PAULI["Z"]])
        out = np.empty((n, 2, 2), dtype=np.complex128)
        for k in range(n):
            vec = np.random.default_rng([seed, k]).standard_normal(3)
            vec /= np.linalg.norm(vec)
            out[k] = np.tensordot(vec, paulis, axes=(0, 0))
        return out
    if basis.dim != dim:
        raise ValueError("basis dimension does not match")
    labels = [k for k in basis.class_labels() if k != 0]
    members = basis.members(labels)
    out = np.empty((n, dim, dim), dtype=np.complex128)
    for k in range(n):
        coeff = np.random.default_rng([seed, k]).standard_normal(members.shape[0])
        coeff /= np.linalg.norm(coeff)
        out[k] = np.tensordot(coeff, members, axes=(0, 0))
    return out


def random_direction_sweep(
    model: ControlModel,
    pulse: Pulse,
    target: TargetSpec,
    n_realizations: int,
    lambdas,
    seed: int,
    basis: OperatorBasis | None = None,
) -> SweepCurve:
    """Fidelity sweep averaged over seeded random perturbation directions."""
    grid = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if not np.any(grid == 0.0):
        raise ValueError("lambda grid must contain 0 (curvature anchor)")
    directions = random_directions(n_realizations, seed, dim=model.dim, basis=basis)
    curves = np.stack(
        [_sweep_fidelities(model, pulse, target, v, grid) for v in directions]
    )
    kind = "gate" if target.is_unitary else "state"
    return SweepCurve(
        lambdas=grid,
        fidelities=curves.mean(axis=0),
        kind=kind,
        label=f"random, {n_realizations} realizations",
        seed=seed,
        realizations=curves,
    )


def curvature_check(curve: SweepCurve, predicted_chi: float) -> CurvatureFit:
    """Least-squares quadratic fit of 1 - F inside the perturbative window.

    The model is 1 - F = c0 + chi * lambda**2; no odd terms, since the first
    derivative vanishes at lambda = 0. Points with 1 - F > 0.05 are outside
    the perturbative regime and excluded.
    """
    infid = 1.0 - curve.fidelities
    mask = infid <= FIT_MAX_INFIDELITY
    n_points = int(np.count_nonzero(mask))
    if n_points < FIT_MIN_POINTS:
        raise ValueError(
            f"only {n_points} grid points in the perturbative window "
            f"(1 - F <= {FIT_MAX_INFIDELITY}); need {FIT_MIN_POINTS}"
        )
    lam = curve.lambdas[mask]
    y = infid[mask]
    design = np.column_stack([np.ones_like(lam), lam**2])
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    chi_fit = float(coef[1])
    deviation = abs(chi_fit - predicted_chi) / max(predicted_chi, FIT_DENOMINATOR_FLOOR)
    return CurvatureFit(
        chi_fit=chi_fit,
        chi_predicted=float(predicted_chi),
        relative_deviation=float(deviation),
        residual=residual,
        window_max=float(np.max(np.abs(lam))),
        n_points=n_points,
    )


def one_design_check(
    model: ControlModel, pulse: Pulse, basis: OperatorBasis, n_samples: int
) -> OneDesignReport:
    """How far grid-averaged conjugation is from the depolarizing map.

    For every traceless basis element the deviation is the distance of
    (1/L) sum_k U_k' Lambda U_k from (Tr Lambda / d) I on a left-endpoint
    grid of at least n_samples points. On that same grid the squared
    deviations sum to the Frobenius norm of the projected averaging
    superoperator; identity_gap reports the difference, so the basis must
    be complete.
    """
    if n_samples < pulse.n_segments:
        raise ValueError("need at least one sample per segment")
    if basis.dim != model.dim:
        raise ValueError("basis dimension does not match model")
    if not basis.is_complete:
        raise ValueError("one-design deviation sum needs a complete operator basis")
    substeps = ceil(n_samples / pulse.n_segments)
    h = segment_hamiltonians(model, pulse)
    d = model.dim
    labels = [k for k in basis.class_labels() if k != 0]
    members = basis.members(labels)
    avg = engine.riemann_averaged_ops(h, pulse.dt, members, substeps)
    shift = np.einsum("maa->m", members) / d
    avg = avg - shift[:, None, None] * np.eye(d)
    deviations = np.sqrt(np.einsum("mab,mab->m", avg.conj(), avg).real)
    # same grid on purpose: the deviation sum equals this Frobenius norm
    # only when both sides discretize the time average identically
    m0 = engine.riemann_m0_matrix(h, pulse.dt, substeps)
    mtilde = m0 @ (np.eye(d * d) - projector_identity(d).entries)
    frob_sq = float(np.sum(np.abs(mtilde) ** 2))
    return OneDesignReport(
        deviations=deviations,
        max_deviation=float(np.max(deviations)),
        frobenius_sq=frob_sq,
        identity_gap=float(abs(np.sum(deviations**2) - frob_sq)),
        n_samples=pulse.n_segments * substeps,
    )


def _noise_paths(correlation: Correlation, lo: int, hi: int, n_steps: int, delta: float, seed: int):
    """Piecewise-constant noise for trajectories lo..hi-1, one row each.

    Every trajectory draws from its own derived seed (master seed, index),
    so the rows do not depend on how trajectories are chunked. Exponential
    correlation uses the stationary first-order autoregression
    xi_j = a xi_{j-1} + w_j with a = exp(-delta / tau_c), which reproduces
    C(t, s) = variance * exp(-|t - s| / tau_c) exactly at the grid points.
    White noise scales independent variates to variance strength / delta so
    the discrete sum matches the delta-correlated double integral.
    """
    draws = np.empty((hi - lo, n_steps))
    for k in range(lo, hi):
        draws[k - lo] = np.random.default_rng([seed, k]).standard_normal(n_steps)
    if correlation.kind == "white":
        return np.sqrt(correlation.strength / delta) * draws
    if correlation.kind == "exponential":
        a = np.exp(-delta / correlation.tau_c)
        innovations = np.empty_like(draws)
        innovations[:, 0] = np.sqrt(correlation.variance) * draws[:, 0]
        innovations[:, 1:] = np.sqrt(correlation.variance * (1.0 - a * a)) * draws[:, 1:]
        return scipy.signal.lfilter([1.0], [1.0, -a], innovations, axis=1)
    raise ValueError(f"Monte Carlo supports white or exponential noise, not {correlation.kind!r}")


def noise_monte_carlo(
    model: ControlModel,
    pulse: Pulse,
    sigma: np.ndarray,
    v: np.ndarray,
    correlation: Correlation,
    lam: float,
    n_traj: int,
    seed: int,
    substeps: int = NOISE_SUBSTEPS,
) -> NoiseEstimate:
    """Mean fidelity under H(t) + lam * xi(t) V for stochastic xi.

    Noise is piecewise constant on a grid of substeps per control segment;
    each trajectory draws from its own derived seed, so the estimate does
    not depend on chunking. Fidelity is taken against the noise-free final
    state of the pure initial state sigma.
    """
    sigma = qcore.as_operator(sigma)
    qcore.assert_pure_state(sigma)
    v = qcore.as_operator(v)
    qcore.assert_hermitian(v, name="V")
    if n_traj < 100:
        raise ValueError("need at least 100 trajectories")
    if substeps < 1:
        raise ValueError("substeps must be a positive integer")
    if lam == 0.0:
        # noise-free by construction: every trajectory is the reference state
        return NoiseEstimate(mean_fidelity=1.0, stderr=0.0, n_trajectories=n_traj)
    evals, evecs = np.linalg.eigh(sigma)
    ket = evecs[:, -1]

    h = segment_hamiltonians(model, pulse)
    _, c = engine.propagate(h, pulse.dt)
    psi_ref = c[-1] @ ket

    delta = pulse.dt / substeps
    h_ref = np.repeat(h, substeps, axis=0)
    n_steps = h_ref.shape[0]
    fid = np.empty(n_traj)
    for lo in range(0, n_traj, _TRAJECTORY_CHUNK):
        hi = min(lo + _TRAJECTORY_CHUNK, n_traj)
        xi = _noise_paths(correlation, lo, hi, n_steps, delta, seed)
        psi = np.broadcast_to(ket, (hi - lo, ket.size)).copy()
        for j in range(n_steps):
            hj = h_ref[j][None, :, :] + (lam * xi[:, j])[:, None, None] * v[None, :, :]
            step_evals, step_evecs = np.linalg.eigh(hj)
            phases = np.exp(-1j * delta * step_evals)
            amps = np.einsum("mba,mb->ma", step_evecs.conj(), psi)
            psi = np.einsum("mab,mb->ma", step_evecs, phases * amps)
        fid[lo:hi] = np.abs(psi @ psi_ref.conj()) ** 2
    mean = float(np.mean(fid))
    stderr = float(np.std(fid, ddof=1) / np.sqrt(n_traj))
    return NoiseEstimate(mean_fidelity=mean, stderr=stderr, n_trajectories=n_traj)
