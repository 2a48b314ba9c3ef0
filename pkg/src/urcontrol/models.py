"""Control-system definitions: Hamiltonian families, pulses, operator bases.

Two concrete families are provided. The single-qubit phase model drives a
spin-1/2 with a fixed Rabi rate and a controllable drive phase,

    H(t) = Omega * (cos(phi_k) S_x + sin(phi_k) S_y),

and the collective-spin model evolves N qubits restricted to their symmetric
subspace under a one-axis-twisting drift with two amplitude controls,

    H(t) = beta S_z^2 + Omega_x(t) S_x + Omega_y(t) S_y.

Here S_a are spin-(N/2) angular-momentum matrices (for one qubit, half the
Pauli matrices), so a phase-channel Hamiltonian has eigenvalues +/- Omega/2.

Operator bases carry a locality covering: each basis element is assigned an
integer class (0 = identity, 1 = one-body, 2 = two-body, ...) so robustness
demands can target specific perturbation classes.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import qcore

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
PAULI = {"I": np.eye(2, dtype=np.complex128), "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

# pauli_basis materializes all 4^N strings as dense matrices; beyond this the
# memory cost (4^N * 4^N complex entries) stops being neglectable.
PAULI_BASIS_MAX_QUBITS = 5

GRAM_SCHMIDT_DROP_TOL = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Channel:
    """One control degree of freedom per segment.

    kind "phase": operators = (X, Y), segment value phi gives
    amplitude * (cos(phi) X + sin(phi) Y).
    kind "amplitude": operators = (A,), segment value v gives v * A;
    start_scale sets the spread of random initial guesses for this channel.
    """

    kind: str
    operators: tuple
    amplitude: float = 1.0
    start_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("phase", "amplitude"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        n_ops = {"phase": 2, "amplitude": 1}[self.kind]
        if len(self.operators) != n_ops:
            raise ValueError(f"{self.kind} channel needs {n_ops} operator(s)")
        ops = tuple(_readonly(qcore.assert_hermitian(op, name="channel operator")) for op in self.operators)
        object.__setattr__(self, "operators", ops)
        if self.kind == "phase" and self.amplitude <= 0:
            raise ValueError("phase channel amplitude must be positive")
        if self.start_scale <= 0:
            raise ValueError("start_scale must be positive")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


@dataclass(frozen=True)
class ControlModel:
    """Drift plus control channels on a d-dimensional Hilbert space."""

    drift: np.ndarray
    channels: tuple
    label: str = ""

    def __post_init__(self):
        drift = _readonly(qcore.assert_hermitian(self.drift, name="drift"))
        object.__setattr__(self, "drift", drift)
        channels = tuple(self.channels)
        if not channels:
            raise ValueError("model needs at least one control channel")
        for ch in channels:
            if not isinstance(ch, Channel):
                raise TypeError("channels must be Channel instances")
            if ch.dim != drift.shape[0]:
                raise ValueError("channel operator dimension does not match drift")
        object.__setattr__(self, "channels", channels)

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @property
    def n_channels(self) -> int:
        return len(self.channels)


@dataclass(frozen=True)
class Pulse:
    """Piecewise-constant control table: values[k, c] holds channel c on segment k."""

    values: np.ndarray
    dt: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError("pulse values must be an (N, n_channels) table with N >= 1")
        if not np.all(np.isfinite(values)):
            raise ValueError("pulse values contain non-finite entries")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n_segments(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def t_f(self) -> float:
        return self.n_segments * self.dt


@dataclass(frozen=True)
class OperatorBasis:
    """Orthonormal Hermitian operator basis with locality classes.

    elements[0] is always I/sqrt(d); classes[j] is the covering label of
    elements[j] (0 = identity, 1 = one-body, ...).
    """

    elements: np.ndarray
    classes: np.ndarray

    def __post_init__(self):
        elements = np.ascontiguousarray(self.elements, dtype=np.complex128)
        classes = np.ascontiguousarray(self.classes, dtype=np.int64)
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise ValueError("elements must be a stack of square matrices")
        if classes.shape != (elements.shape[0],):
            raise ValueError("one class label per element required")
        d = elements.shape[1]
        if not np.allclose(elements[0], np.eye(d) / np.sqrt(d), atol=1e-12):
            raise ValueError("elements[0] must be I/sqrt(d)")
        if classes[0] != 0:
            raise ValueError("the identity element carries class 0")
        object.__setattr__(self, "elements", _readonly(elements))
        object.__setattr__(self, "classes", _readonly(classes))

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @property
    def is_complete(self) -> bool:
        return self.size == self.dim**2

    def class_labels(self) -> tuple:
        return tuple(sorted(set(int(k) for k in self.classes)))

    def members(self, labels) -> np.ndarray:
        """Elements whose class is in `labels`, as an (m, d, d) stack."""
        labels = {int(k) for k in labels}
        unknown = labels - set(self.class_labels())
        if unknown:
            raise ValueError(f"unknown class labels {sorted(unknown)}")
        mask = np.isin(self.classes, sorted(labels))
        return self.elements[mask]


@dataclass(frozen=True)
class TargetSpec:
    """Either a target unitary, or an (initial state, target state) pair."""

    unitary: np.ndarray | None = None
    initial_state: np.ndarray | None = None
    target_state: np.ndarray | None = None

    def __post_init__(self):
        if self.unitary is not None:
            if self.initial_state is not None or self.target_state is not None:
                raise ValueError("give either a unitary or a state pair, not both")
            u = qcore.as_operator(self.unitary)
            dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
            if dev > 1e-10:
                raise ValueError(f"target unitary deviates from unitarity by {dev:.2e}")
            object.__setattr__(self, "unitary", _readonly(u))
        else:
            if self.initial_state is None or self.target_state is None:
                raise ValueError("state targets need both initial_state and target_state")
            sigma = _readonly(qcore.assert_pure_state(self.initial_state, name="initial state"))
            rho = _readonly(qcore.assert_pure_state(self.target_state, name="target state"))
            if sigma.shape != rho.shape:
                raise ValueError("state pair dimension mismatch")
            object.__setattr__(self, "initial_state", sigma)
            object.__setattr__(self, "target_state", rho)

    @property
    def is_unitary(self) -> bool:
        return self.unitary is not None

    @property
    def dim(self) -> int:
        op = self.unitary if self.is_unitary else self.initial_state
        return op.shape[0]


def segment_hamiltonians(model: ControlModel, pulse: Pulse) -> np.ndarray:
    """Per-segment Hamiltonians H_k as an (N, d, d) stack."""
    if pulse.n_channels != model.n_channels:
        raise ValueError(
            f"pulse has {pulse.n_channels} channel(s), model expects {model.n_channels}"
        )
    n, d = pulse.n_segments, model.dim
    h = np.empty((n, d, d), dtype=np.complex128)
    h[:] = model.drift
    for ch, col in zip(model.channels, pulse.values.T):
        if ch.kind == "phase":
            x, y = ch.operators
            h += ch.amplitude * (
                np.cos(col)[:, None, None] * x + np.sin(col)[:, None, None] * y
            )
        else:
            (a,) = ch.operators
            h += col[:, None, None] * a
    return h


def spin_operators(n_qubits: int) -> dict:
    """Spin-(N/2) matrices {Sx, Sy, Sz} on the (N+1)-dimensional space.

    Basis ordered by descending magnetization, index m <-> eigenvalue
    N/2 - m of S_z, so index 0 is the all-zeros product state.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    s = n_qubits / 2.0
    m = np.arange(s, -s - 1.0, -1.0)
    d = n_qubits + 1
    sp = np.zeros((d, d), dtype=np.complex128)
    for i in range(1, d):
        sp[i - 1, i] = np.sqrt(s * (s + 1) - m[i] * (m[i] + 1))
    sm = sp.conj().T
    return {
        "Sx": _readonly((sp + sm) / 2.0),
        "Sy": _readonly((sp - sm) / 2.0j),
        "Sz": _readonly(np.diag(m.astype(np.complex128))),
    }


def single_qubit_model(omega: float) -> ControlModel:
    """Resonantly driven qubit with controllable drive phase.

    Segment Hamiltonian omega * (cos(phi) Sx + sin(phi) Sy) with spin-1/2
    operators Sa = sigma_a / 2, eigenvalues +/- omega/2.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    ops = spin_operators(1)
    channel = Channel(kind="phase", operators=(ops["Sx"], ops["Sy"]), amplitude=omega)
    return ControlModel(
        drift=np.zeros((2, 2), dtype=np.complex128),
        channels=(channel,),
        label="single_qubit_phase",
    )


def collective_spin_model(beta: float, n_qubits: int) -> ControlModel:
    """One-axis-twisting drift beta Sz^2 with Sx, Sy amplitude controls.

    Acts on the (N+1)-dimensional symmetric subspace; all operators are
    collective, so the dynamics never leaves it.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n_qubits < 2:
        raise ValueError("n_qubits must be >= 2")
    ops = spin_operators(n_qubits)
    return ControlModel(
        drift=beta * (ops["Sz"] @ ops["Sz"]),
        channels=(
            Channel(kind="amplitude", operators=(ops["Sx"],), start_scale=beta),
            Channel(kind="amplitude", operators=(ops["Sy"],), start_scale=beta),
        ),
        label=f"collective_spin_{n_qubits}",
    )


def _pauli_strings(n_qubits: int):
    for labels in itertools.product("IXYZ", repeat=n_qubits):
        op = functools.reduce(np.kron, (PAULI[c] for c in labels))
        weight = sum(1 for c in labels if c != "I")
        yield "".join(labels), weight, op


def pauli_basis(n_qubits: int, max_qubits: int = PAULI_BASIS_MAX_QUBITS) -> OperatorBasis:
    """Normalized Pauli strings P/sqrt(2^N), class label = Pauli weight."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if n_qubits > max_qubits:
        raise ValueError(
            f"pauli_basis for {n_qubits} qubits exceeds the cap of {max_qubits}"
        )
    d = 2**n_qubits
    elements = np.empty((4**n_qubits, d, d), dtype=np.complex128)
    classes = np.empty(4**n_qubits, dtype=np.int64)
    for j, (_, weight, op) in enumerate(_pauli_strings(n_qubits)):
        elements[j] = op / np.sqrt(d)
        classes[j] = weight
    return OperatorBasis(elements=elements, classes=classes)


def _dicke_kets(n_qubits: int) -> np.ndarray:
    """Rows = symmetric Dicke states in the 2^N product basis, m excitations."""
    d_full = 2**n_qubits
    weights = np.array([bin(i).count("1") for i in range(d_full)])
    kets = np.zeros((n_qubits + 1, d_full), dtype=np.complex128)
    for m in range(n_qubits + 1):
        mask = weights == m
        kets[m, mask] = 1.0 / np.sqrt(mask.sum())
    return kets


def symmetric_subspace_basis(n_qubits: int) -> OperatorBasis:
    """Pauli classes projected into the symmetric subspace, orthonormalized.

    Each Pauli string is compressed to the (N+1)-dimensional collective space,
    then Gram-Schmidt runs in ascending class order; projections that fall
    into the span of earlier elements (residual norm < 1e-8) are dropped.
    The result is complete: (N+1)^2 elements with elements[0] = I/sqrt(N+1).
    """
    if n_qubits < 2:
        raise ValueError("n_qubits must be >= 2")
    dicke = _dicke_kets(n_qubits)
    projected = []
    for _, weight, op in _pauli_strings(n_qubits):
        projected.append((weight, dicke @ op @ dicke.conj().T))
    projected.sort(key=lambda item: item[0])

    d = n_qubits + 1
    kept = []
    labels = []
    for weight, op in projected:
        vec = op.reshape(-1) / np.sqrt(d)
        for basis_vec in kept:
            vec = vec - basis_vec * np.dot(basis_vec.conj(), vec)
        nrm = np.linalg.norm(vec)
        if nrm < GRAM_SCHMIDT_DROP_TOL:
            continue
        kept.append(vec / nrm)
        labels.append(weight)
    elements = np.array(kept).reshape(len(kept), d, d)
    # Gram-Schmidt over Hermitian inputs has real coefficients, so Hermiticity
    # survives up to roundoff; symmetrize to remove that residue.
    elements = (elements + elements.conj().transpose(0, 2, 1)) / 2.0
    return OperatorBasis(elements=elements, classes=np.array(labels, dtype=np.int64))


def dicke_state(n_qubits: int, m: int) -> np.ndarray:
    """Collective-basis ket with m excitations (S_z eigenvalue N/2 - m)."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if not 0 <= m <= n_qubits:
        raise ValueError(f"excitation index {m} outside 0..{n_qubits}")
    ket = np.zeros(n_qubits + 1, dtype=np.complex128)
    ket[m] = 1.0
    return ket


def _polar_unitary(a: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(a)
    return u @ vh


# Two-qubit symmetric gate used as a generic entangling target, written in the
# basis {|00>, (|01>+|10>)/sqrt(2), |11>}. Printed to 8 decimals, hence the
# polar projection below: the target must be exactly unitary for the terminal
# cost to reach zero.
RANDOM_TWO_QUBIT_GATE = np.array(
    [
        [0.51762131 + 0.11456864j, -0.5988566 - 0.16086483j, -0.57589678 + 0.05271048j],
        [-0.22709248 + 0.22335233j, 0.30541094 + 0.57529237j, -0.6568961 - 0.20686492j],
        [-0.75950102 + 0.20160146j, -0.40091574 - 0.17470746j, -0.13888378 + 0.41469292j],
    ]
)


def fixture_targets() -> dict:
    """Named target transformations used across tests and presets."""
    sx = spin_operators(2)["Sx"]
    ms_generator = sx @ sx - 0.5 * sx
    return {
        "single_qubit_z": TargetSpec(unitary=np.diag([-1.0j, 1.0j])),
        "two_qubit_random": TargetSpec(unitary=_polar_unitary(RANDOM_TWO_QUBIT_GATE)),
        "ms_gate": TargetSpec(unitary=qcore.expm_hermitian(ms_generator, np.pi / 2)),
    }
