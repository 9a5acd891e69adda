"""Joint photon-spin Hilbert space: basis bookkeeping, state factories,
operator matrices, partial traces, and expectation values.

The joint space is {Fock levels 0..n_max} x {Dicke levels |S, M>} with
S = N/2 (only the maximal-spin sector is represented; the exchange
interaction never mixes sectors).  The joint index is

    idx = n * (2S + 1) + (S - M)

so M runs downward within each photon block and the photon number is the
slow index.
"""

from dataclasses import dataclass
from math import ceil

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson


class TruncationError(ValueError):
    """Fock-space cut too small for the requested state."""


@dataclass(frozen=True)
class SpinFockBasis:
    """Index map for the joint photon-spin space."""

    atom_count: int
    photon_cut: int

    def __post_init__(self):
        if self.atom_count < 1:
            raise ValueError("atom_count must be >= 1")
        if self.photon_cut < 0:
            raise ValueError("photon_cut must be >= 0")

    @property
    def total_spin(self):
        return self.atom_count / 2.0

    @property
    def spin_dim(self):
        return self.atom_count + 1

    @property
    def field_dim(self):
        return self.photon_cut + 1

    @property
    def dim(self):
        return self.field_dim * self.spin_dim

    def index(self, n, M):
        """Joint index of |n> |S, M>.  M may be half-integer."""
        j = round(self.total_spin - M)
        if not (0 <= n <= self.photon_cut) or not (0 <= j <= 2 * self.total_spin):
            raise IndexError(f"(n={n}, M={M}) outside basis")
        return n * self.spin_dim + j

    def unindex(self, idx):
        """Inverse of :meth:`index`; returns (n, M)."""
        if not (0 <= idx < self.dim):
            raise IndexError(idx)
        n, j = divmod(idx, self.spin_dim)
        return n, self.total_spin - j

    def m_values(self):
        """Spin projections in storage order (descending)."""
        S = self.total_spin
        return S - np.arange(self.spin_dim)


def build_basis(N, alpha_hint=0.0, n_max_override=None):
    """Basis whose Fock cut holds the coherent tail plus full atomic decay.

    Without an override, n_max = ceil(alpha^2 + 10 alpha + 20) + N, which
    keeps the Poisson tail far below 1e-12 and leaves room for the at most
    N photons the atoms can emit.
    """
    if alpha_hint < 0:
        raise ValueError("alpha_hint must be >= 0")
    if n_max_override is not None:
        if n_max_override < 0:
            raise ValueError("n_max_override must be >= 0")
        n_max = int(n_max_override)
    else:
        a = float(alpha_hint)
        n_max = ceil(a * a + 10.0 * a + 20.0) + N
    return SpinFockBasis(atom_count=N, photon_cut=n_max)


def tight_photon_cut(N, alpha, tail=1e-12):
    """Smallest Fock cut keeping the coherent tail below `tail`, plus room
    for the at most N photons the atoms can emit.

    Much smaller than the default build_basis cut; used where the density
    matrix makes dimension expensive (master-equation sweeps).
    """
    nbar = float(alpha) ** 2
    if nbar == 0.0:
        return N
    n = max(int(poisson.isf(tail, nbar)), 0)
    while poisson.sf(n, nbar) >= tail:
        n += 1
    while n > 0 and poisson.sf(n - 1, nbar) < tail:
        n -= 1
    return n + N


def coherent_field_state(alpha, n_max):
    """Coherent-state vector c_n = e^{-|a|^2/2} a^n / sqrt(n!) on 0..n_max.

    Raises TruncationError if the Poisson tail above n_max exceeds 1e-12.
    The truncated vector is renormalized.
    """
    alpha = complex(alpha)
    nbar = abs(alpha) ** 2
    tail = poisson.sf(n_max, nbar) if nbar > 0 else 0.0
    if tail >= 1e-12:
        raise TruncationError(
            f"coherent tail {tail:.3e} above n_max={n_max} exceeds 1e-12")
    n = np.arange(n_max + 1)
    if nbar == 0:
        c = np.zeros(n_max + 1, dtype=complex)
        c[0] = 1.0
        return c
    log_mag = -0.5 * nbar + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    c = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return c / np.linalg.norm(c)


def css_state(S, theta, phi=0.0):
    """Coherent spin state |theta, phi> in the M-descending Dicke basis.

    c_M = binom(2S, S+M)^{1/2} e^{i(S-M) phi} sin(t/2)^{S-M} cos(t/2)^{S+M}
    """
    if not (0.0 <= theta <= np.pi):
        raise ValueError("theta must lie in [0, pi]")
    two_s = round(2 * S)
    j = np.arange(two_s + 1)          # j = S - M
    log_binom = gammaln(two_s + 1) - gammaln(j + 1) - gammaln(two_s - j + 1)
    half = theta / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_s = np.where(j > 0, j * np.log(np.sin(half)), 0.0)
        log_c = np.where(two_s - j > 0, (two_s - j) * np.log(np.cos(half)), 0.0)
    log_s = np.where((j > 0) & ~np.isfinite(log_s), -np.inf, log_s)
    log_c = np.where((two_s - j > 0) & ~np.isfinite(log_c), -np.inf, log_c)
    # sin/cos can be exactly zero; build amplitudes through masked logs
    amp = np.zeros(two_s + 1)
    ok = np.isfinite(log_s) & np.isfinite(log_c)
    amp[ok] = np.exp(0.5 * log_binom[ok] + log_s[ok] + log_c[ok])
    c = amp * np.exp(1j * j * phi)
    return c / np.linalg.norm(c)


def spin_matrices(S):
    """Collective spin matrices {Sx, Sy, Sz, S+, S-} for total spin S.

    Basis order is M descending, matching SpinFockBasis.
    """
    two_s = round(2 * S)
    M = S - np.arange(two_s + 1)
    Sz = np.diag(M)
    # S+|S,M> = sqrt((S-M)(S+M+1)) |S,M+1>; raising M moves the index up
    up = np.sqrt((S - M[1:]) * (S + M[1:] + 1.0))
    Sp = np.zeros((two_s + 1, two_s + 1))
    Sp[np.arange(two_s), np.arange(1, two_s + 1)] = up
    Sm = Sp.T.copy()
    Sx = 0.5 * (Sp + Sm)
    Sy = -0.5j * (Sp - Sm)
    return {"Sx": Sx, "Sy": Sy, "Sz": Sz, "S+": Sp, "S-": Sm}


def field_matrices(n_max):
    """Annihilation, creation, and number matrices on Fock levels 0..n_max."""
    n = np.arange(n_max + 1)
    a = np.zeros((n_max + 1, n_max + 1))
    a[np.arange(n_max), np.arange(1, n_max + 1)] = np.sqrt(n[1:])
    return {"a": a, "ad": a.T.copy(), "n": np.diag(n.astype(float))}


def joint_field_op(basis, op):
    """Embed a field-factor operator into the joint space."""
    return np.kron(op, np.eye(basis.spin_dim))


def joint_spin_op(basis, op):
    """Embed a spin-factor operator into the joint space."""
    return np.kron(np.eye(basis.field_dim), op)


def product_state(field, spin):
    """Tensor product of a field vector and a spin vector (field slow)."""
    field = np.asarray(field, dtype=complex)
    spin = np.asarray(spin, dtype=complex)
    return np.kron(field, spin)


def partial_trace(rho, basis, keep):
    """Trace out one factor of a joint density matrix.

    keep: 'field' or 'spin'.
    """
    nf, ns = basis.field_dim, basis.spin_dim
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError("density matrix does not match basis")
    r = rho.reshape(nf, ns, nf, ns)
    if keep == "field":
        return np.einsum("iaja->ij", r)
    if keep == "spin":
        return np.einsum("aiaj->ij", r)
    raise ValueError("keep must be 'field' or 'spin'")


def partial_trace_state(state, basis, keep):
    """Factor density matrix of a joint pure state, without forming the
    joint density matrix."""
    nf, ns = basis.field_dim, basis.spin_dim
    psi = np.asarray(state, dtype=complex).reshape(nf, ns)
    if keep == "field":
        return psi @ psi.conj().T
    if keep == "spin":
        return psi.T @ psi.conj()
    raise ValueError("keep must be 'field' or 'spin'")


def expectation(op, state):
    """<op> for a state vector or density matrix.

    Returns a complex number; callers drop the imaginary part for
    Hermitian observables.
    """
    state = np.asarray(state)
    if state.ndim == 1:
        if op.shape[1] != state.shape[0]:
            raise ValueError("operator/state dimension mismatch")
        return complex(np.vdot(state, op @ state))
    if op.shape[1] != state.shape[0]:
        raise ValueError("operator/state dimension mismatch")
    return complex(np.trace(op @ state))


def density_from_state(state):
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj())
