"""Dissipative dynamics: cavity loss and collective atomic decay added to
the exchange Hamiltonian, integrated with fixed-step classical RK4.

The dissipators couple different excitation sectors, so the density
matrix is stored dense.  The exchange Hamiltonian moves one quantum
between the field and the spin and both jump operators are single
shifts, so every term of the right-hand side reduces to an elementwise
product with a shifted view of rho; one evaluation is a handful of
O(dim^2) passes with no matrix products.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import BlockHamiltonian
from .spinfock import SpinFockBasis


@dataclass(frozen=True)
class DissipationParams:
    gamma_f: float = 0.0  # photon decay rate, units of g
    gamma_a: float = 0.0  # collective atomic decay rate, units of g

    def __post_init__(self):
        if self.gamma_f < 0 or self.gamma_a < 0:
            raise ValueError("decay rates must be nonnegative")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = None          # step in gt units; None picks the default
    tolerance: float = 1e-6   # per-observable step-halving gate
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")


class ConvergenceError(RuntimeError):
    pass


def default_step(basis: SpinFockBasis):
    """1e-3 / sqrt(n_max N): resolves the fastest exchange frequency."""
    return 1e-3 / np.sqrt(max(basis.photon_cut, 1) * basis.atom_count)


class _JointOperators:
    """Precomputed shift weights for the master-equation right-hand side.

    fw[n] is the annihilation weight sqrt(n+1) of |n+1> -> |n>; cw[j]
    is the raising weight of Dicke level j+1 -> j in the M-descending
    basis; W = outer(fw, cw) couples (n, j) <-> (n+1, j+1) through the
    Hamiltonian.
    """

    def __init__(self, basis: SpinFockBasis, H: BlockHamiltonian,
                 params: DissipationParams):
        nf, ns = basis.field_dim, basis.spin_dim
        self.dim = basis.dim
        self.ns = ns
        S = basis.total_spin
        fw = np.sqrt(np.arange(1.0, nf))            # |n+1> -> sqrt(n+1)|n>
        j = np.arange(ns - 1)
        cw = np.sqrt((j + 1.0) * (2.0 * S - j))     # Dicke j+1 -> j
        n_of = np.repeat(np.arange(nf), ns)
        j_of = np.tile(np.arange(ns), nf)
        # flat shift ns+1 realizes (n, j) -> (n+1, j+1); weight 0 kills
        # the wrap-around rows with j = ns-1 or n = nf-1
        w_h = np.zeros(self.dim - ns - 1)
        ok = (n_of[:-ns - 1] < nf - 1) & (j_of[:-ns - 1] < ns - 1)
        w_h[ok] = H.g * fw[n_of[:-ns - 1][ok]] * cw[j_of[:-ns - 1][ok]]
        self.w_h_row = (-1j * w_h)[:, None]
        self.w_h_col = (1j * w_h)[None, :]
        self.w_f2 = (params.gamma_f * fw[n_of[:-ns], None]
                     * fw[None, n_of[:-ns]])         # a rho a^dag, shift ns
        w_c = np.zeros(self.dim - 1)                 # S- rho S+, shift 1
        ok = j_of[:-1] < ns - 1
        w_c[ok] = cw[j_of[:-1][ok]]
        self.w_c2 = params.gamma_a * w_c[:, None] * w_c[None, :]
        self.params = params
        if params.gamma_f > 0 or params.gamma_a > 0:
            dsp = np.zeros(ns)
            dsp[:-1] = cw ** 2  # S+S- diagonal
            dsp = dsp[j_of]
            nd = n_of.astype(float)
            self.damp = (0.5 * params.gamma_f * (nd[:, None] + nd[None, :])
                         + 0.5 * params.gamma_a * (dsp[:, None] + dsp[None, :]))
        else:
            self.damp = None


def lindblad_rhs(rho, ops: _JointOperators, params: DissipationParams):
    """d rho / d(gt) for the master equation with the given decay rates."""
    if rho.shape[0] != ops.dim:
        raise ValueError("density matrix does not match the Hamiltonian")
    out = np.zeros(rho.shape, dtype=complex)
    k = ops.ns + 1
    # -i[H, rho] through the flat-index shift k on rows and columns
    out[:-k] += ops.w_h_row * rho[k:]
    out[k:] += ops.w_h_row * rho[:-k]
    out[:, :-k] += ops.w_h_col * rho[:, k:]
    out[:, k:] += ops.w_h_col * rho[:, :-k]
    if ops.damp is not None:
        out -= ops.damp * rho
        if params.gamma_f > 0:  # a rho a^dag
            ns = ops.ns
            out[:-ns, :-ns] += ops.w_f2 * rho[ns:, ns:]
        if params.gamma_a > 0:  # S- rho S+
            out[1:, 1:] += ops.w_c2 * rho[:-1, :-1]
    return out


def make_rhs(basis: SpinFockBasis, H: BlockHamiltonian,
             params: DissipationParams):
    ops = _JointOperators(basis, H, params)
    return lambda rho: lindblad_rhs(rho, ops, params)


def _rk4_run(rho0, rhs, gt_samples, dt):
    """Integrate to each requested sample time with fixed-step RK4."""
    rho = np.array(rho0, dtype=complex)
    t = 0.0
    out = []
    for target in gt_samples:
        while t < target - 1e-12:
            h = min(dt, target - t)
            k1 = rhs(rho)
            k2 = rhs(rho + 0.5 * h * k1)
            k3 = rhs(rho + 0.5 * h * k2)
            k4 = rhs(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        out.append(rho.copy())
    return out


def evolve_master(rho0, basis: SpinFockBasis, H: BlockHamiltonian,
                  params: DissipationParams, gt_samples,
                  cfg: IntegratorConfig = IntegratorConfig(),
                  observables=None, check_convergence=True):
    """Master-equation trajectory sampled at `gt_samples`.

    With `check_convergence`, the run is repeated at half the step and the
    tracked observables must agree within cfg.tolerance; observables
    defaults to the density-matrix entries themselves on small systems.
    Returns the list of sampled density matrices (from the full-step run).
    """
    gt_samples = list(gt_samples)
    if any(b < a for a, b in zip(gt_samples, gt_samples[1:])):
        raise ValueError("sample times must be nondecreasing")
    dt = cfg.dt if cfg.dt is not None else default_step(basis)
    total_steps = (gt_samples[-1] / dt) if gt_samples else 0
    if total_steps > cfg.max_steps:
        raise ConvergenceError(
            f"{total_steps:.0f} steps exceed max_steps={cfg.max_steps}")
    rhs = make_rhs(basis, H, params)
    traj = _rk4_run(rho0, rhs, gt_samples, dt)
    if check_convergence:
        traj_half = _rk4_run(rho0, rhs, gt_samples, dt / 2.0)
        if observables is None:
            err = max(np.max(np.abs(r1 - r2))
                      for r1, r2 in zip(traj, traj_half))
        else:
            err = max(abs(f(r1) - f(r2))
                      for r1, r2 in zip(traj, traj_half)
                      for f in observables)
        if err > cfg.tolerance:
            raise ConvergenceError(
                f"step-halving change {err:.3e} exceeds {cfg.tolerance:.1e};"
                " reduce dt")
    return traj
