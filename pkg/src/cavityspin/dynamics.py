"""Resonant exchange Hamiltonian in conserved-excitation blocks, unitary
evolution, and spin-space rotations used to steer squeezed atom states.

H = g (a S+ + a' S-) commutes with a'a + Sz, so it splits into real
symmetric tridiagonal blocks labeled by the excitation number
E = n + (M + S).  Each block is diagonalized once and cached; evolution
to any time is then two small dense mat-vecs per block.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .spinfock import SpinFockBasis, css_state, spin_matrices


@dataclass(frozen=True)
class RotationSpec:
    """Transverse rotation (generator Sx cos(phi_c) - Sy sin(phi_c)) when
    axis_azimuth is set, or a z-rotation when z_angle is set."""

    angle: float = 0.0
    axis_azimuth: float = 0.0
    z_angle: float = None

    def __post_init__(self):
        if self.z_angle is None and not np.isfinite(self.angle):
            raise ValueError("rotation angle must be finite")


class BlockHamiltonian:
    """g (a S+ + a' S-) stored as tridiagonal blocks of fixed excitation."""

    def __init__(self, basis: SpinFockBasis, g=1.0):
        if g <= 0:
            raise ValueError("coupling must be positive")
        self.basis = basis
        self.g = float(g)
        S = basis.total_spin
        two_s = basis.atom_count
        self.blocks = []  # (joint index array, off-diagonal array)
        self._eig = []    # (eigenvalues, eigenvectors) per block
        for E in range(basis.photon_cut + two_s + 1):
            n_lo = max(0, E - two_s)
            n_hi = min(basis.photon_cut, E)
            if n_lo > n_hi:
                continue
            ns = np.arange(n_lo, n_hi + 1)
            js = ns + two_s - E                    # j = S - M
            idx = ns * basis.spin_dim + js
            M = S - js
            # coupling between (n, M) and (n+1, M-1)
            off = self.g * np.sqrt((ns[:-1] + 1.0)
                                   * (S + M[:-1]) * (S - M[:-1] + 1.0))
            self.blocks.append((idx, off))
            diag = np.zeros(len(idx))
            if len(idx) == 1:
                w, v = np.zeros(1), np.ones((1, 1))
            else:
                w, v = eigh_tridiagonal(diag, off)
            self._eig.append((w, v))

    def dense(self):
        """Full joint-space matrix (small instances / cross-checks)."""
        H = np.zeros((self.basis.dim, self.basis.dim))
        for idx, off in self.blocks:
            for k in range(len(idx) - 1):
                H[idx[k], idx[k + 1]] = off[k]
                H[idx[k + 1], idx[k]] = off[k]
        return H

    def eigensystems(self):
        return self._eig


def build_blocks(basis, g=1.0):
    return BlockHamiltonian(basis, g)


def evolve_unitary(state, H: BlockHamiltonian, gt):
    """exp(-i H gt) applied blockwise; exact up to eigensolver precision."""
    state = np.asarray(state, dtype=complex)
    if state.shape != (H.basis.dim,):
        raise ValueError("state does not match Hamiltonian basis")
    out = state.copy()
    t = gt / H.g  # eigenvalues carry g; gt is the dimensionless time
    for (idx, _), (w, v) in zip(H.blocks, H.eigensystems()):
        amps = state[idx]
        out[idx] = v @ (np.exp(-1j * w * t) * (v.T @ amps))
    return out


def _transverse_generator(S_ops, axis_azimuth):
    return S_ops["Sx"] * np.cos(axis_azimuth) - S_ops["Sy"] * np.sin(axis_azimuth)


def spin_rotation_matrix(two_s, spec: RotationSpec):
    """Unitary on the (2S+1)-dim spin factor realizing the rotation."""
    S = two_s / 2.0
    if spec.z_angle is not None:
        M = S - np.arange(two_s + 1)
        return np.diag(np.exp(-1j * spec.z_angle * M))
    ops = spin_matrices(S)
    G = _transverse_generator(ops, spec.axis_azimuth)
    w, v = np.linalg.eigh(G)
    return (v * np.exp(-1j * spec.angle * w)) @ v.conj().T


def rotate_spin(state, spec: RotationSpec, basis: SpinFockBasis = None):
    """Apply a spin rotation to a spin-factor or joint state / density.

    Pass the basis for joint-space inputs; spin-factor inputs need none.
    """
    state = np.asarray(state, dtype=complex)
    if basis is None:
        two_s = state.shape[0] - 1
        U = spin_rotation_matrix(two_s, spec)
        if state.ndim == 1:
            return U @ state
        return U @ state @ U.conj().T
    U = spin_rotation_matrix(basis.atom_count, spec)
    nf, ns = basis.field_dim, basis.spin_dim
    if state.ndim == 1:
        return (state.reshape(nf, ns) @ U.T).reshape(-1)
    Uj = np.kron(np.eye(nf), U)
    return Uj @ state @ Uj.conj().T


def _mean_spin_vector(state, S_ops):
    from .spinfock import expectation
    return np.array([expectation(S_ops[k], state).real
                     for k in ("Sx", "Sy", "Sz")])


def align_and_tilt(state, target_tilt, squeeze_azimuth, basis: SpinFockBasis = None):
    """Steer the mean spin and the squeezing ellipse.

    Order: (1) rotate the mean spin onto -z, (2) z-rotation placing the
    minimal-variance tangent direction at `squeeze_azimuth` (measured from
    the x axis toward y; the subsequent tilt moves the mean toward +y, so
    azimuth 0 means squeezing perpendicular to the tilt plane),
    (3) transverse tilt by `target_tilt` away from -z toward +y.
    """
    from .observables import tangent_variances

    if basis is not None:
        raise ValueError("align_and_tilt operates on the spin factor; "
                         "trace out the field first")
    state = np.asarray(state, dtype=complex)
    two_s = state.shape[0] - 1
    ops = spin_matrices(two_s / 2.0)

    mean = _mean_spin_vector(state, ops)
    norm = np.linalg.norm(mean)
    if norm < 1e-9:
        raise ValueError("mean spin vector is degenerate (zero length)")
    nvec = mean / norm

    # (1) align mean spin with -z
    target = np.array([0.0, 0.0, -1.0])
    cosang = float(np.clip(nvec @ target, -1.0, 1.0))
    if cosang < 1.0 - 1e-14:
        axis = np.cross(nvec, target)
        if np.linalg.norm(axis) < 1e-12:      # mean at +z: any transverse axis
            axis = np.array([1.0, 0.0, 0.0])
        axis = axis / np.linalg.norm(axis)
        ang = np.arccos(cosang)
        # exp(-i theta n.S) rotates <S> by R(n, theta); rotating nvec
        # toward the target about nvec x target is the positive sense
        state = _rotate_about_axis(state, ops, axis, ang)

    # (2) orient the minimal-variance direction
    chi, _, _ = tangent_variances(state)
    # tangent frame at -z is m=(1,0,0), k = n x m = (0,-1,0); the minimal
    # direction sits at azimuth -chi from x toward y
    dphi = squeeze_azimuth - (-chi)
    # exp(-i phi Sz) advances in-plane azimuths by phi
    state = rotate_spin(state, RotationSpec(z_angle=dphi))

    # (3) tilt toward +y: R(x, t) maps -z to (0, sin t, -cos t)
    state = _rotate_about_axis(state, ops, np.array([1.0, 0.0, 0.0]), target_tilt)
    return state


def _rotate_about_axis(state, ops, axis, theta):
    """exp(-i theta axis.S); rotates expectation values by the right-hand
    rotation R(axis, theta)."""
    G = axis[0] * ops["Sx"] + axis[1] * ops["Sy"] + axis[2] * ops["Sz"]
    w, v = np.linalg.eigh(G)
    U = (v * np.exp(-1j * theta * w)) @ v.conj().T
    if state.ndim == 1:
        return U @ state
    return U @ state @ U.conj().T


def css_from_rotation(S, theta, phi):
    """Reference construction: CSS at polar angle theta, azimuth phi,
    built by rotating the top Dicke state |S, S>."""
    two_s = round(2 * S)
    pole = np.zeros(two_s + 1, dtype=complex)
    pole[0] = 1.0
    ops = spin_matrices(S)
    G = ops["Sx"] * np.sin(phi) - ops["Sy"] * np.cos(phi)
    w, v = np.linalg.eigh(G)
    U = (v * np.exp(1j * theta * w)) @ v.conj().T
    return U @ pole
