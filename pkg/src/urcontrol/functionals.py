"""Scalar cost functionals and fidelity susceptibilities.

The optimization targets a weighted combination

    total = (J0 + w * Jrob) / (1 + w),

where J0 is the terminal infidelity and Jrob one of:

* known-perturbation cost  J_V = ||V0bar||^2 / d,
* universal cost           J_U = ||Mtilde0||^2_F / d,
* state-universal cost     sum of variances of the averaged basis elements.

Susceptibilities convert these into physical curvature: a static perturbation
lambda * V degrades gate fidelity as F = 1 - chi * lambda^2 with
chi = t_f^2 ||V0bar||^2 / d (traceless part), and state fidelity with the
variance of V0bar in the initial state.

Every functional needs only the ideal (error-free) evolution; evaluate()
performs exactly one propagation pass per call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, qcore
from .models import ControlModel, OperatorBasis, Pulse, TargetSpec, segment_hamiltonians

NEGATIVE_CLAMP = -1e-12


@dataclass(frozen=True)
class KnownPerturbation:
    """Robustness demand against one known Hermitian error operator."""

    operator: np.ndarray

    def __post_init__(self):
        op = qcore.assert_hermitian(self.operator, name="perturbation")
        op = np.ascontiguousarray(op)
        op.flags.writeable = False
        object.__setattr__(self, "operator", op)

    @property
    def dim(self) -> int:
        return self.operator.shape[0]


@dataclass(frozen=True)
class UniversalSet:
    """Robustness demand against whole classes of an operator basis.

    `excluded` lists the covering classes NOT demanded (the identity class 0
    is always excluded for unitary targets; everything else is suppressed).
    """

    basis: OperatorBasis
    excluded: frozenset = frozenset({0})

    def __post_init__(self):
        excluded = frozenset(int(k) for k in self.excluded)
        unknown = excluded - set(self.basis.class_labels())
        if unknown:
            raise ValueError(f"excluded classes {sorted(unknown)} not present in basis")
        object.__setattr__(self, "excluded", excluded)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def demanded(self) -> np.ndarray:
        """Basis elements whose averaged norm the cost penalizes."""
        labels = [k for k in self.basis.class_labels() if k not in self.excluded]
        if not labels:
            return self.basis.elements[:0]
        return self.basis.members(labels)


@dataclass(frozen=True)
class Objective:
    """A complete optimization problem: model, target, robustness, weight."""

    model: ControlModel
    target: TargetSpec
    robustness: object = None
    weight: float = 0.0
    substeps: int = 1

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")
        if self.substeps < 1:
            raise ValueError("substeps must be a positive integer")
        if self.target.dim != self.model.dim:
            raise ValueError("target dimension does not match model")
        rob = self.robustness
        if rob is None:
            if self.weight != 0.0:
                raise ValueError("weight must be 0 when no robustness demand is set")
            return
        if not isinstance(rob, (KnownPerturbation, UniversalSet)):
            raise TypeError("robustness must be None, KnownPerturbation, or UniversalSet")
        if rob.dim != self.model.dim:
            raise ValueError("robustness dimension does not match model")
        if isinstance(rob, UniversalSet) and self.target.is_unitary and 0 not in rob.excluded:
            raise ValueError(
                "unitary targets must exclude the identity class 0: the averaging "
                "superoperator fixes the identity, so demanding it is unsatisfiable"
            )


@dataclass(frozen=True)
class FunctionalValue:
    """Evaluated objective: total = (J0 + w * Jrob) / (1 + w)."""

    total: float
    j_target: float
    j_robust: float
    weight: float

    def __post_init__(self):
        for name in ("total", "j_target", "j_robust"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise ValueError(f"{name} is not finite")
            if val < NEGATIVE_CLAMP:
                raise ValueError(f"{name} = {val:.3e} below the roundoff clamp")
            object.__setattr__(self, name, max(0.0, float(val)))


def universal_bound(d: int) -> float:
    """Supremum of the universal cost, d - 1/d, reached by frozen evolution."""
    return d - 1.0 / d


def J_target(u_final, target: TargetSpec) -> float:
    """Terminal infidelity of the realized propagator against the target."""
    u_final = qcore.as_operator(u_final)
    if u_final.shape[0] != target.dim:
        raise ValueError("propagator dimension does not match target")
    if target.is_unitary:
        return 1.0 - qcore.gate_fidelity(target.unitary, u_final)
    rho = u_final @ target.initial_state @ u_final.conj().T
    return 1.0 - float(np.trace(rho @ target.target_state).real)


def _averaged(model, pulse, ops, substeps, method):
    h = segment_hamiltonians(model, pulse)
    if method == "exact":
        return engine.averaged_ops(h, pulse.dt, ops)
    if method == "riemann":
        avg = engine.riemann_averaged_ops(h, pulse.dt, ops, substeps)
        return avg, None
    raise ValueError(f"unknown quadrature method {method!r}")


def J_known_V(model, pulse, v, substeps: int = 1, method: str = "exact") -> float:
    """Known-perturbation cost ||V0bar||^2 / d."""
    v = qcore.assert_hermitian(v, name="perturbation")
    if v.shape[0] != model.dim:
        raise ValueError("perturbation dimension does not match model")
    avg, _ = _averaged(model, pulse, v[None], substeps, method)
    return float(np.sum(np.abs(avg[0]) ** 2)) / model.dim


def _universal_from_columns(avg: np.ndarray, d: int) -> float:
    return float(np.sum(np.abs(avg) ** 2)) / d


def J_universal(
    model,
    pulse,
    basis: OperatorBasis,
    excluded=frozenset({0}),
    substeps: int = 1,
    method: str = "exact",
) -> float:
    """Universal cost ||Mtilde0||^2_F / d for the demanded covering classes.

    With a complete basis this is the column sum of ||M0 |Lambda>>||^2 over
    all demanded elements, which avoids materializing the d^2 x d^2 matrix.
    """
    spec = UniversalSet(basis=basis, excluded=frozenset(excluded))
    if 0 not in spec.excluded:
        raise ValueError("the identity class 0 must always be excluded")
    if basis.dim != model.dim:
        raise ValueError("basis dimension does not match model")
    if basis.is_complete:
        avg, _ = _averaged(model, pulse, spec.demanded(), substeps, method)
        return _universal_from_columns(avg, model.dim)
    from . import superop

    m0 = superop.build_M0(model, pulse, substeps=substeps, method=method)
    return superop.build_Mtilde(m0, basis, spec.excluded).norm_squared() / model.dim


def J_state_universal(
    model,
    pulse,
    sigma,
    basis: OperatorBasis,
    excluded=frozenset({0}),
    substeps: int = 1,
    method: str = "exact",
) -> float:
    """State-referenced universal cost: summed variances of averaged elements.

    Equals ||M0^sigma (I - sum_k P_k)||^2_F / d. The identity class may stay
    in the demand here since M0^sigma annihilates the identity anyway.
    """
    sigma = qcore.assert_pure_state(sigma, name="sigma")
    spec = UniversalSet(basis=basis, excluded=frozenset(excluded))
    if basis.dim != model.dim or sigma.shape[0] != model.dim:
        raise ValueError("basis/state dimension does not match model")
    if not basis.is_complete:
        from . import superop

        m0 = superop.build_M0(model, pulse, substeps=substeps, method=method)
        m0s = superop.build_M0_sigma(m0, sigma)
        p = superop.projector_subset(basis, spec.excluded)
        rest = np.eye(p.entries.shape[0]) - p.entries
        return float(np.sum(np.abs(m0s.entries @ rest) ** 2)) / model.dim
    avg, _ = _averaged(model, pulse, spec.demanded(), substeps, method)
    first = np.einsum("ij,mji->m", sigma, avg)
    second = np.einsum("ij,mjk,mki->m", sigma, avg, avg)
    return float(np.sum(second.real - first.real**2)) / model.dim


def chi_unitary(model, pulse, v, substeps: int = 1, method: str = "exact", traceless: bool = True) -> float:
    """Gate-fidelity susceptibility t_f^2 ||V0bar||^2 / d.

    Perturbations are taken traceless by default: the trace part only moves
    the global phase, which gate fidelity ignores. Set traceless=False for
    the raw value of the norm including that unphysical contribution.
    """
    v = qcore.assert_hermitian(v, name="perturbation")
    if traceless:
        d = v.shape[0]
        v = v - (np.trace(v) / d) * np.eye(d)
    return pulse.t_f**2 * J_known_V(model, pulse, v, substeps=substeps, method=method)


def chi_state(model, pulse, v, sigma, substeps: int = 1, method: str = "exact") -> float:
    """State-fidelity susceptibility t_f^2 * Var_sigma(V0bar) (= QFI / 4).

    Insensitive to the trace part of V, which shifts V0bar by a multiple of
    the identity and leaves the variance unchanged.
    """
    v = qcore.assert_hermitian(v, name="perturbation")
    sigma = qcore.assert_pure_state(sigma, name="sigma")
    if v.shape[0] != model.dim or sigma.shape[0] != model.dim:
        raise ValueError("dimension mismatch")
    avg, _ = _averaged(model, pulse, v[None], substeps, method)
    vbar = avg[0]
    first = np.trace(sigma @ vbar).real
    second = np.trace(sigma @ vbar @ vbar).real
    return pulse.t_f**2 * float(second - first**2)


def predicted_fidelity(chi: float, lam: float) -> float:
    """Second-order fidelity prediction max(0, 1 - chi * lambda^2)."""
    if chi < 0:
        raise ValueError("susceptibility must be nonnegative")
    return max(0.0, 1.0 - chi * lam**2)


def evaluate(objective: Objective, pulse: Pulse, method: str = "exact") -> FunctionalValue:
    """Evaluate the full objective with a single propagation pass."""
    model = objective.model
    if pulse.n_channels != model.n_channels:
        raise ValueError("pulse channels do not match model")
    rob = objective.robustness
    h = segment_hamiltonians(model, pulse)

    if rob is None:
        ops = np.zeros((0, model.dim, model.dim), dtype=np.complex128)
    elif isinstance(rob, KnownPerturbation):
        ops = rob.operator[None]
    else:
        ops = rob.demanded()

    if method == "exact":
        avg, c = engine.averaged_ops(h, pulse.dt, ops)
        u_final = c[-1]
    elif method == "riemann":
        avg = engine.riemann_averaged_ops(h, pulse.dt, ops, objective.substeps)
        _, c = engine.propagate(h, pulse.dt)
        u_final = c[-1]
    else:
        raise ValueError(f"unknown quadrature method {method!r}")

    j0 = J_target(u_final, objective.target)

    if rob is None:
        jrob = 0.0
    elif isinstance(rob, KnownPerturbation):
        jrob = float(np.sum(np.abs(avg[0]) ** 2)) / model.dim
    elif objective.target.is_unitary:
        if not rob.basis.is_complete:
            raise ValueError("universal cost requires a complete operator basis")
        jrob = _universal_from_columns(avg, model.dim)
    else:
        sigma = objective.target.initial_state
        first = np.einsum("ij,mji->m", sigma, avg)
        second = np.einsum("ij,mjk,mki->m", sigma, avg, avg)
        jrob = float(np.sum(second.real - first.real**2)) / model.dim

    w = objective.weight
    total = (j0 + w * jrob) / (1.0 + w)
    return FunctionalValue(total=total, j_target=j0, j_robust=jrob, weight=w)
