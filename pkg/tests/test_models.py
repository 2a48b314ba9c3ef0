"""Model layer: spin algebra, control families, bases, and targets."""
import numpy as np
import pytest

from urcontrol import qcore
from urcontrol.models import (
    PAULI,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Channel,
    ControlModel,
    OperatorBasis,
    Pulse,
    TargetSpec,
    collective_spin_model,
    dicke_state,
    fixture_targets,
    pauli_basis,
    segment_hamiltonians,
    single_qubit_model,
    spin_operators,
    symmetric_subspace_basis,
)

from helpers import random_pulse

RNG_SEED = 20241


# -- spin algebra ------------------------------------------------------------


def test_pauli_table_and_constants():
    assert np.array_equal(PAULI["X"], SIGMA_X)
    assert np.array_equal(PAULI["Y"], SIGMA_Y)
    assert np.array_equal(PAULI["Z"], SIGMA_Z)
    for a in "IXYZ":
        assert np.max(np.abs(PAULI[a] @ PAULI[a] - np.eye(2))) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_spin_operators_su2_algebra(n):
    ops = spin_operators(n)
    sx, sy, sz = ops["Sx"], ops["Sy"], ops["Sz"]
    dim = n + 1
    assert sx.shape == (dim, dim)
    # [Sx, Sy] = i Sz and cyclic permutations
    assert np.max(np.abs(sx @ sy - sy @ sx - 1j * sz)) < 1e-12
    assert np.max(np.abs(sy @ sz - sz @ sy - 1j * sx)) < 1e-12
    assert np.max(np.abs(sz @ sx - sx @ sz - 1j * sy)) < 1e-12
    # Casimir S^2 = s(s+1) I with s = n/2
    s = n / 2.0
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.max(np.abs(casimir - s * (s + 1) * np.eye(dim))) < 1e-12


def test_spin_operators_descending_magnetization():
    ops = spin_operators(2)
    # index 0 carries the largest Sz eigenvalue
    assert np.allclose(np.diag(ops["Sz"]), [1.0, 0.0, -1.0])
    # single qubit reduces to sigma/2
    one = spin_operators(1)
    for a in "XYZ":
        assert np.max(np.abs(one[f"S{a.lower()}"] - PAULI[a] / 2.0)) == 0.0
    # frozen ladder element: <1,1| Sx |1,0> = 1/sqrt(2)
    assert ops["Sx"][0, 1] == pytest.approx(np.sqrt(2.0) / 2.0, abs=1e-15)


def test_spin_operators_rejects_bad_n():
    with pytest.raises(ValueError):
        spin_operators(0)


# -- control models ----------------------------------------------------------


def test_single_qubit_model_hamiltonian():
    model = single_qubit_model(2.0)
    assert model.label == "single_qubit_phase"
    assert len(model.channels) == 1
    pulse = Pulse(np.array([[0.0], [np.pi / 2.0]]), dt=0.1)
    h = segment_hamiltonians(model, pulse)
    # phase 0: Omega * Sx; phase pi/2: Omega * Sy
    assert np.max(np.abs(h[0] - 2.0 * SIGMA_X / 2.0)) < 1e-12
    assert np.max(np.abs(h[1] - 2.0 * SIGMA_Y / 2.0)) < 1e-12


def test_single_qubit_model_rejects_nonpositive_rabi():
    with pytest.raises(ValueError):
        single_qubit_model(0.0)
    with pytest.raises(ValueError):
        single_qubit_model(-1.0)


def test_collective_spin_model_hamiltonian():
    model = collective_spin_model(beta=0.5, n_qubits=3)
    assert model.label == "collective_spin_3"
    ops = spin_operators(3)
    assert np.max(np.abs(model.drift - 0.5 * ops["Sz"] @ ops["Sz"])) < 1e-12
    assert len(model.channels) == 2
    pulse = Pulse(np.array([[1.0, -2.0]]), dt=0.05)
    h = segment_hamiltonians(model, pulse)
    want = model.drift + 1.0 * ops["Sx"] - 2.0 * ops["Sy"]
    assert np.max(np.abs(h[0] - want)) < 1e-12


def test_collective_spin_model_rejects_bad_args():
    with pytest.raises(ValueError):
        collective_spin_model(beta=0.0, n_qubits=3)
    with pytest.raises(ValueError):
        collective_spin_model(beta=1.0, n_qubits=1)


def test_control_model_validation():
    with pytest.raises(ValueError):
        ControlModel(
            drift=np.zeros((2, 2)),
            channels=(),
            label="empty",
        )
    with pytest.raises(ValueError):
        ControlModel(
            drift=np.zeros((2, 2)),
            channels=(Channel(kind="phase", operators=(np.zeros((3, 3)),)),),
            label="mismatched",
        )


def test_channel_validation():
    with pytest.raises(ValueError):
        Channel(kind="unknown", operators=(SIGMA_X,))
    with pytest.raises(ValueError):
        Channel(kind="phase", operators=(SIGMA_X,))  # phase needs two operators


# -- pulses ------------------------------------------------------------------


def test_pulse_shape_and_coercion():
    p = Pulse(np.array([0.1, 0.2, 0.3]), dt=0.5)
    assert p.values.shape == (3, 1)
    assert p.n_segments == 3
    assert p.n_channels == 1
    assert p.t_f == pytest.approx(1.5)
    q = Pulse(np.zeros((4, 2)), dt=0.25)
    assert q.n_channels == 2


def test_pulse_validation():
    with pytest.raises(ValueError):
        Pulse(np.zeros((0, 1)), dt=0.1)
    with pytest.raises(ValueError):
        Pulse(np.zeros((3, 1)), dt=0.0)
    with pytest.raises(ValueError):
        Pulse(np.array([[np.inf]]), dt=0.1)


# -- operator bases ----------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pauli_basis_orthonormal_and_classed(n):
    basis = pauli_basis(n)
    d = 2**n
    assert basis.dim == d
    assert basis.size == d * d
    assert basis.is_complete
    gram = np.array(
        [
            [qcore.hs_inner(a, b) for b in basis.elements]
            for a in basis.elements
        ]
    )
    assert np.max(np.abs(gram - np.eye(d * d))) < 1e-12
    # element 0 is I / sqrt(d) with class 0; classes count Pauli weight
    assert np.max(np.abs(basis.elements[0] - np.eye(d) / np.sqrt(d))) < 1e-15
    assert basis.classes[0] == 0
    counts = {w: sum(1 for c in basis.classes if c == w) for w in range(n + 1)}
    from math import comb

    for w in range(n + 1):
        assert counts[w] == comb(n, w) * 3**w


def test_pauli_basis_rejects_large_n():
    with pytest.raises(ValueError):
        pauli_basis(6)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_symmetric_subspace_basis_complete_orthonormal_hermitian(n):
    basis = symmetric_subspace_basis(n)
    dim = n + 1
    assert basis.dim == dim
    assert basis.size == dim * dim
    assert basis.is_complete
    for e in basis.elements:
        assert np.max(np.abs(e - e.conj().T)) < 1e-12
    gram = np.array(
        [
            [qcore.hs_inner(a, b) for b in basis.elements]
            for a in basis.elements
        ]
    )
    assert np.max(np.abs(gram - np.eye(dim * dim))) < 1e-10
    assert np.max(np.abs(basis.elements[0] - np.eye(dim) / np.sqrt(dim))) < 1e-12
    # class labels start at 0 (identity) and are non-decreasing body count
    assert basis.classes[0] == 0
    assert min(basis.classes[1:]) >= 1


def test_operator_basis_members_and_labels():
    basis = pauli_basis(2)
    labels = basis.class_labels()
    assert labels == (0, 1, 2)
    one_body = basis.members((1,))
    assert len(one_body) == 6
    with pytest.raises(ValueError):
        basis.members((9,))


def test_operator_basis_validation():
    with pytest.raises(ValueError):
        OperatorBasis(elements=(np.eye(2),), classes=(1,))  # class 0 required first
    with pytest.raises(ValueError):
        OperatorBasis(
            elements=(np.eye(2) / np.sqrt(2.0),),
            classes=(0, 1),
        )


# -- states and targets ------------------------------------------------------


def test_dicke_state_basis_vectors():
    # descending magnetization: m counts excitations, index = m
    for n in (2, 4):
        for m in range(n + 1):
            ket = dicke_state(n, m)
            want = np.zeros(n + 1)
            want[m] = 1.0
            assert np.max(np.abs(ket - want)) == 0.0
    with pytest.raises(ValueError):
        dicke_state(4, 5)


def test_target_spec_exclusive_forms():
    zero = qcore.pure_density([1.0, 0.0])
    one = qcore.pure_density([0.0, 1.0])
    with pytest.raises(ValueError):
        TargetSpec()
    with pytest.raises(ValueError):
        TargetSpec(unitary=np.eye(2), initial_state=zero, target_state=one)
    with pytest.raises(ValueError):
        TargetSpec(unitary=np.array([[1.0, 1.0], [0.0, 1.0]]))  # not unitary
    with pytest.raises(ValueError):
        TargetSpec(initial_state=zero, target_state=None)
    with pytest.raises(ValueError):
        TargetSpec(initial_state=np.eye(2) / 2.0, target_state=one)  # mixed
    gate = TargetSpec(unitary=np.eye(2))
    assert gate.is_unitary and gate.dim == 2
    state = TargetSpec(initial_state=zero, target_state=one)
    assert not state.is_unitary and state.dim == 2


def test_fixture_targets_are_unitary_and_stable():
    fixtures = fixture_targets()
    assert set(fixtures) == {"single_qubit_z", "two_qubit_random", "ms_gate"}
    for name, spec in fixtures.items():
        u = spec.unitary
        assert np.max(np.abs(u.conj().T @ u - np.eye(spec.dim))) < 1e-10
    assert np.max(np.abs(fixtures["single_qubit_z"].unitary - np.diag([-1j, 1j]))) == 0.0
    # ms_gate: exp(-i pi/2 (Sx^2 - Sx/2)) on the two-qubit symmetric subspace
    ops = spin_operators(2)
    gen = ops["Sx"] @ ops["Sx"] - ops["Sx"] / 2.0
    want = qcore.expm_hermitian(gen, np.pi / 2.0)
    assert np.max(np.abs(fixtures["ms_gate"].unitary - want)) < 1e-12
    # calling twice yields identical arrays (deterministic construction)
    again = fixture_targets()
    for name in fixtures:
        assert np.array_equal(fixtures[name].unitary, again[name].unitary)


def test_segment_hamiltonians_random_pulse_hermitian():
    rng = np.random.default_rng(RNG_SEED)
    model = collective_spin_model(beta=1.0, n_qubits=2)
    pulse = random_pulse(rng, model, 8, 0.1)
    h = segment_hamiltonians(model, pulse)
    assert h.shape == (8, 3, 3)
    assert np.max(np.abs(h - np.transpose(h.conj(), (0, 2, 1)))) < 1e-12
