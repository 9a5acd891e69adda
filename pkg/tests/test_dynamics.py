"""Block-diagonal evolution against dense references, and rotation
conventions used for aligning and tilting the collective spin."""

import numpy as np
import pytest
from scipy.linalg import expm

from cavityspin import dynamics, observables, scenarios, spinfock
from cavityspin.dynamics import RotationSpec
from cavityspin.spinfock import SpinFockBasis

from conftest import dense_hamiltonian


def test_block_hamiltonian_matches_dense_kron():
    basis = SpinFockBasis(3, 5)
    H = dynamics.build_blocks(basis)
    assert np.allclose(H.dense(), dense_hamiltonian(basis), atol=1e-12)


def test_block_hamiltonian_coupling_scale():
    basis = SpinFockBasis(2, 4)
    H1 = dynamics.build_blocks(basis, g=1.0)
    H2 = dynamics.build_blocks(basis, g=2.5)
    assert np.allclose(H2.dense(), 2.5 * H1.dense(), atol=1e-12)
    with pytest.raises(ValueError):
        dynamics.build_blocks(basis, g=0.0)


def test_evolution_matches_dense_expm():
    basis = spinfock.build_basis(3, 1.2)
    H = dynamics.build_blocks(basis)
    psi0 = spinfock.product_state(
        spinfock.coherent_field_state(1.2, basis.photon_cut),
        spinfock.css_state(1.5, 0.0))
    gt = 0.7
    psi = dynamics.evolve_unitary(psi0, H, gt)
    U = expm(-1j * gt * dense_hamiltonian(basis))
    assert np.max(np.abs(psi - U @ psi0)) < 1e-10


def test_evolution_unitarity_and_conservation():
    basis = spinfock.build_basis(4, 2.0)
    H = dynamics.build_blocks(basis)
    psi0 = spinfock.product_state(
        spinfock.coherent_field_state(2.0, basis.photon_cut),
        spinfock.css_state(2.0, 0.0))
    num = spinfock.joint_field_op(basis,
                                  spinfock.field_matrices(basis.photon_cut)["n"])
    sz = spinfock.joint_spin_op(basis,
                                spinfock.spin_matrices(basis.total_spin)["Sz"])
    e0 = spinfock.expectation(num + sz, psi0).real
    for gt in (0.3, 1.1, 2.7):
        psi = dynamics.evolve_unitary(psi0, H, gt)
        assert np.isclose(np.linalg.norm(psi), 1.0, atol=1e-12)
        assert np.isclose(spinfock.expectation(num + sz, psi).real, e0,
                          atol=1e-10)


def test_evolution_rejects_mismatched_state():
    basis = SpinFockBasis(2, 3)
    H = dynamics.build_blocks(basis)
    with pytest.raises(ValueError):
        dynamics.evolve_unitary(np.zeros(5), H, 0.1)


def test_transverse_rotation_convention():
    # exp(-i theta Sx) moves a +z mean to (0, -sin, cos)
    S, theta = 2.0, 0.6
    top = spinfock.css_state(S, 0.0)
    rot = dynamics.rotate_spin(top, RotationSpec(angle=theta, axis_azimuth=0.0))
    mean = observables.mean_spin(rot)
    want = S * np.array([0.0, -np.sin(theta), np.cos(theta)])
    assert np.allclose(mean, want, atol=1e-10)


def test_z_rotation_convention():
    # exp(-i phi Sz) advances the azimuth of an in-plane mean by +phi
    S, phi = 1.5, 0.8
    along_x = spinfock.css_state(S, np.pi / 2, 0.0)
    rot = dynamics.rotate_spin(along_x, RotationSpec(z_angle=phi))
    mean = observables.mean_spin(rot)
    want = S * np.array([np.cos(phi), np.sin(phi), 0.0])
    assert np.allclose(mean, want, atol=1e-10)


def test_rotation_matrix_unitary():
    for spec in (RotationSpec(angle=0.9, axis_azimuth=0.4),
                 RotationSpec(z_angle=1.3)):
        U = dynamics.spin_rotation_matrix(4, spec)
        assert np.allclose(U @ U.conj().T, np.eye(5), atol=1e-12)


def test_joint_rotation_matches_kron():
    rng = np.random.default_rng(5)
    basis = SpinFockBasis(2, 3)
    spec = RotationSpec(angle=0.7, axis_azimuth=1.1)
    psi = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    psi /= np.linalg.norm(psi)
    U = np.kron(np.eye(basis.field_dim),
                dynamics.spin_rotation_matrix(basis.atom_count, spec))
    assert np.allclose(dynamics.rotate_spin(psi, spec, basis), U @ psi,
                       atol=1e-12)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(dynamics.rotate_spin(rho, spec, basis),
                       U @ rho @ U.conj().T, atol=1e-12)


def test_css_from_rotation_matches_css_state():
    for theta, phi in ((0.4, 0.0), (1.2, 0.9), (2.5, 4.0)):
        a = dynamics.css_from_rotation(2.5, theta, phi)
        b = spinfock.css_state(2.5, theta, phi)
        # equal up to a global phase
        overlap = abs(np.vdot(a, b))
        assert np.isclose(overlap, 1.0, atol=1e-10)


@pytest.fixture(scope="module")
def squeezed_state():
    prep = scenarios.prepare_sas(6, 2.6, 0.55, n_samples=2)
    return prep.rho_atoms


def test_align_and_tilt_mean_direction(squeezed_state):
    for tilt in (0.0, 0.3, 1.0):
        st = dynamics.align_and_tilt(squeezed_state, tilt, 0.0)
        mean = observables.mean_spin(st)
        length = np.linalg.norm(mean)
        want = length * np.array([0.0, np.sin(tilt), -np.cos(tilt)])
        assert np.allclose(mean, want, atol=1e-9)


def test_align_and_tilt_preserves_variances(squeezed_state):
    _, v0min, v0max = observables.tangent_variances(squeezed_state)
    st = dynamics.align_and_tilt(squeezed_state, 0.4, 1.0)
    _, vmin, vmax = observables.tangent_variances(st)
    assert np.isclose(vmin, v0min, atol=1e-9)
    assert np.isclose(vmax, v0max, atol=1e-9)


def test_align_and_tilt_azimuth_placement(squeezed_state):
    # with no tilt, the variance along (cos az, sin az, 0) is the minimum
    ops = spinfock.spin_matrices(squeezed_state.shape[0] / 2.0 - 0.5)
    _, vmin, _ = observables.tangent_variances(squeezed_state)
    for az in (0.0, 0.7, np.pi / 2):
        st = dynamics.align_and_tilt(squeezed_state, 0.0, az)
        direction = np.cos(az) * ops["Sx"] + np.sin(az) * ops["Sy"]
        m = spinfock.expectation(direction, st).real
        m2 = spinfock.expectation(direction @ direction, st).real
        assert np.isclose(m2 - m * m, vmin, atol=1e-8)


def test_align_and_tilt_rejects_joint_input(squeezed_state):
    with pytest.raises(ValueError):
        dynamics.align_and_tilt(squeezed_state, 0.1, 0.0,
                                basis=SpinFockBasis(2, 2))
