"""Statistical quantities: spin means and tangent-plane variances, the
squeezing factor, quadrature and photon-number statistics, phase-operator
variance in the number basis, and quasi-probability grids.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .spinfock import (SpinFockBasis, coherent_field_state, css_state,
                       expectation, field_matrices, partial_trace,
                       spin_matrices)

_SPIN_OP_CACHE = {}
_FIELD_OP_CACHE = {}


def _spin_ops(two_s):
    if two_s not in _SPIN_OP_CACHE:
        _SPIN_OP_CACHE[two_s] = spin_matrices(two_s / 2.0)
    return _SPIN_OP_CACHE[two_s]


def _field_ops(n_max):
    if n_max not in _FIELD_OP_CACHE:
        _FIELD_OP_CACHE[n_max] = field_matrices(n_max)
    return _FIELD_OP_CACHE[n_max]


@dataclass
class ObservableRecord:
    """One time sample of every tracked quantity."""

    gt: float
    sx: float = 0.0
    sy: float = 0.0
    sz: float = 0.0
    mean_spin_length: float = 0.0
    var_sx: float = 0.0
    chi_min: float = 0.0
    var_tangent_min: float = 0.0
    var_tangent_max: float = 0.0
    squeezing_factor: float = np.nan
    a_re: float = 0.0
    a_im: float = 0.0
    var_a1: float = 0.0
    var_a2: float = 0.0
    var_a_min: float = 0.0
    var_a_max: float = 0.0
    nbar: float = 0.0
    var_n: float = 0.0
    fano: float = np.nan
    phase_variance: float = np.nan
    purity_field: float = np.nan
    purity_atoms: float = np.nan

    FIELDS = ("gt", "sx", "sy", "sz", "mean_spin_length", "var_sx",
              "chi_min", "var_tangent_min", "var_tangent_max",
              "squeezing_factor", "a_re", "a_im", "var_a1", "var_a2",
              "var_a_min", "var_a_max", "nbar", "var_n", "fano",
              "phase_variance", "purity_field", "purity_atoms")

    def row(self):
        return [getattr(self, k) for k in self.FIELDS]


@dataclass
class QGrid:
    """Sampled quasi-probability distribution.

    kind 'field': axis1 = Re(alpha), axis2 = Im(alpha).
    kind 'spin':  axis1 = theta,     axis2 = phi.
    """

    kind: str
    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray  # shape (len(axis1), len(axis2))

    def integral(self):
        if self.kind == "field":
            w1 = np.gradient(self.axis1)
            w2 = np.gradient(self.axis2)
            return float(self.values @ w2 @ w1)
        w1 = np.gradient(self.axis1) * np.sin(self.axis1)
        w2 = np.gradient(self.axis2)
        return float((self.values * w1[:, None]) @ w2 @ np.ones_like(self.axis1))

    def to_csv(self, path):
        with open(path, "w") as f:
            names = ("re_alpha", "im_alpha") if self.kind == "field" else ("theta", "phi")
            f.write(f"# cavityspin-csv v1 qgrid-{self.kind}\n")
            f.write(f"{names[0]},{names[1]},value\n")
            for i, x in enumerate(self.axis1):
                for j, y in enumerate(self.axis2):
                    f.write(f"{x:.17g},{y:.17g},{self.values[i, j]:.17g}\n")


def _as_density(state):
    state = np.asarray(state)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def mean_spin(state):
    """(<Sx>, <Sy>, <Sz>) of a spin-factor state or density matrix."""
    state = np.asarray(state)
    ops = _spin_ops(state.shape[0] - 1)
    return np.array([expectation(ops[k], state).real for k in ("Sx", "Sy", "Sz")])


def tangent_variances(state):
    """(chi*, var_min, var_max) of the spin component normal to the mean.

    The tangent frame is m = n x e_z / |n x e_z| (fallback m = (1,0,0)
    at the poles) and k = n x m; chi* is the angle of the minimal-variance
    direction measured from m toward k.
    """
    state = np.asarray(state)
    ops = _spin_ops(state.shape[0] - 1)
    mean = mean_spin(state)
    norm = np.linalg.norm(mean)
    if norm <= 1e-9:
        raise ValueError("mean spin vector is degenerate (zero length)")
    nvec = mean / norm
    ez = np.array([0.0, 0.0, 1.0])
    m = np.cross(nvec, ez)
    if np.linalg.norm(m) < 1e-12:
        m = np.array([1.0, 0.0, 0.0])
    else:
        m = m / np.linalg.norm(m)
    k = np.cross(nvec, m)

    Sm = m[0] * ops["Sx"] + m[1] * ops["Sy"] + m[2] * ops["Sz"]
    Sk = k[0] * ops["Sx"] + k[1] * ops["Sy"] + k[2] * ops["Sz"]
    rho = _as_density(state)
    em = np.trace(Sm @ rho).real
    ek = np.trace(Sk @ rho).real
    vmm = np.trace(Sm @ Sm @ rho).real - em * em
    vkk = np.trace(Sk @ Sk @ rho).real - ek * ek
    vmk = 0.5 * np.trace((Sm @ Sk + Sk @ Sm) @ rho).real - em * ek
    cov = np.array([[vmm, vmk], [vmk, vkk]])
    w, v = np.linalg.eigh(cov)
    chi = float(np.arctan2(v[1, 0], v[0, 0]))
    return chi, float(w[0]), float(w[1])


def squeezing_factor(state):
    """2 var_min / |<S>|; the state is squeezed iff this is below one."""
    _, vmin, _ = tangent_variances(state)
    return 2.0 * vmin / np.linalg.norm(mean_spin(state))


def quadrature_stats(rho_f):
    """Mean amplitude and the phase-resolved quadrature variance.

    Returns (mean_a, var_fn, var_min, var_max) with
    var_fn(phi) = Var[(a e^{-i phi} + a' e^{i phi}) / 2], minimized in
    closed form from the first and second moments.
    """
    rho_f = _as_density(np.asarray(rho_f, dtype=complex))
    ops = _field_ops(rho_f.shape[0] - 1)
    a_mean = np.trace(ops["a"] @ rho_f)
    n_mean = np.trace(ops["n"] @ rho_f).real
    a2_mean = np.trace(ops["a"] @ ops["a"] @ rho_f)
    centered = a2_mean - a_mean ** 2
    base = 0.25 + 0.5 * (n_mean - abs(a_mean) ** 2)

    def var_fn(phi):
        return base + 0.5 * (centered * np.exp(-2j * phi)).real

    return (complex(a_mean), var_fn,
            float(base - 0.5 * abs(centered)), float(base + 0.5 * abs(centered)))


def photon_stats(rho_f):
    """(<n>, Var n, Fano); Fano is NaN when <n> is zero."""
    rho_f = _as_density(np.asarray(rho_f, dtype=complex))
    p = np.diag(rho_f).real
    n = np.arange(len(p))
    nbar = float(p @ n)
    var = float(p @ (n * n)) - nbar ** 2
    fano = var / nbar if nbar > 1e-12 else np.nan
    return nbar, var, fano


def pegg_barnett_variance(rho_f, return_bound=False):
    """Phase variance pi^2/3 + sum_{n != n'} 2 (-1)^{n-n'} / (n-n')^2 rho_{n'n}.

    The formula assumes a real positive mean amplitude, so the field is
    first phase-rotated when |<a>| > 1e-9; a zero-amplitude field is used
    as is.  Optionally also returns a bound on the truncated remainder.
    """
    rho_f = _as_density(np.asarray(rho_f, dtype=complex))
    dim = rho_f.shape[0]
    ops = _field_ops(dim - 1)
    a_mean = np.trace(ops["a"] @ rho_f)
    if abs(a_mean) > 1e-9:
        xi = -np.angle(a_mean)
        phase = np.exp(1j * np.arange(dim) * xi)
        rho_f = rho_f * np.outer(phase, phase.conj())
    n = np.arange(dim)
    diff = n[:, None] - n[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = 2.0 * ((-1.0) ** diff) / diff.astype(float) ** 2
    np.fill_diagonal(w, 0.0)
    # sum over n != n' of w[n, n'] * rho[n', n]
    value = float(np.pi ** 2 / 3.0 + np.sum(w * rho_f.T).real)
    if not return_bound:
        return value
    # omitted terms pair a kept level with one above the cut; bound them by
    # the population beyond half the cut times the full kernel weight
    tail = float(np.sum(np.diag(rho_f).real[dim // 2:]))
    bound = 2.0 * np.pi ** 2 / 3.0 * tail
    return value, bound


def qfunc_field(rho_f, center=0.0, half_width=5.0, points=201):
    """Husimi grid Q(alpha) = <alpha| rho |alpha> / pi around `center`."""
    if points < 1:
        raise ValueError("empty grid")
    rho_f = _as_density(np.asarray(rho_f, dtype=complex))
    dim = rho_f.shape[0]
    xs = np.real(center) + np.linspace(-half_width, half_width, points)
    ys = np.imag(center) + np.linspace(-half_width, half_width, points)
    n = np.arange(dim)
    lognfac = 0.5 * gammaln(n + 1)
    vals = np.empty((points, points))
    for i, x in enumerate(xs):
        al = x + 1j * ys
        # coherent coefficients for a whole column at once
        r = np.abs(al)
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.where(r > 0, np.log(r), -np.inf)
            mag = np.exp(-0.5 * r[:, None] ** 2 + n[None, :] * logr[:, None]
                         - lognfac[None, :])
        mag = np.nan_to_num(mag, nan=0.0)
        mag[r == 0, :] = 0.0
        mag[r == 0, 0] = 1.0
        coh = mag * np.exp(1j * n[None, :] * np.angle(al)[:, None])
        vals[i, :] = np.maximum(
            np.einsum("pn,pn->p", coh.conj() @ rho_f, coh).real, 0.0) / np.pi
    return QGrid("field", xs, ys, vals)


def qfunc_spin(rho_a, theta_points=181, phi_points=361):
    """Spin Husimi grid Q_s(theta, phi) = (2S+1)/(4 pi) <t,p|rho|t,p>."""
    if theta_points < 1 or phi_points < 1:
        raise ValueError("empty grid")
    rho_a = _as_density(np.asarray(rho_a, dtype=complex))
    two_s = rho_a.shape[0] - 1
    thetas = np.linspace(0.0, np.pi, theta_points)
    phis = np.linspace(0.0, 2.0 * np.pi, phi_points)
    vals = np.empty((theta_points, phi_points))
    pref = (two_s + 1) / (4.0 * np.pi)
    for i, th in enumerate(thetas):
        base = css_state(two_s / 2.0, th, 0.0)
        j = np.arange(two_s + 1)
        coh = base[None, :] * np.exp(1j * j[None, :] * phis[:, None])
        vals[i, :] = pref * np.maximum(
            np.einsum("pn,pn->p", coh.conj() @ rho_a, coh).real, 0.0)
    return QGrid("spin", thetas, phis, vals)


def vanishing_symmetry_check(rho_f, rho_a):
    """True iff rho_F is real in the number basis and rho_A commutes with
    the half-turn e^{i pi Sz}; such initial states keep <Sx> = <a_2> = 0."""
    rho_f = _as_density(np.asarray(rho_f, dtype=complex))
    rho_a = _as_density(np.asarray(rho_a, dtype=complex))
    if np.max(np.abs(rho_f.imag)) >= 1e-12:
        return False
    two_s = rho_a.shape[0] - 1
    M = two_s / 2.0 - np.arange(two_s + 1)
    u = np.exp(1j * np.pi * M)
    rot = np.outer(u, u.conj()) * rho_a
    return bool(np.max(np.abs(rot - rho_a)) < 1e-12)


def record_from_joint(state, basis: SpinFockBasis, gt,
                      with_phase=False, with_purity=False):
    """Evaluate the full record on a joint pure state or density matrix."""
    from .spinfock import partial_trace_state

    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        rho_f = partial_trace_state(state, basis, "field")
        rho_a = partial_trace_state(state, basis, "spin")
    else:
        rho_f = partial_trace(state, basis, "field")
        rho_a = partial_trace(state, basis, "spin")
    return record_from_factors(rho_f, rho_a, gt, with_phase=with_phase,
                               with_purity=with_purity)


def record_from_factors(rho_f, rho_a, gt, with_phase=False, with_purity=False):
    rec = ObservableRecord(gt=gt)
    ops = _spin_ops(rho_a.shape[0] - 1)
    mean = mean_spin(rho_a)
    rec.sx, rec.sy, rec.sz = mean
    rec.mean_spin_length = float(np.linalg.norm(mean))
    rec.var_sx = float((np.trace(ops["Sx"] @ ops["Sx"] @ rho_a)
                        - np.trace(ops["Sx"] @ rho_a) ** 2).real)
    if rec.mean_spin_length > 1e-9:
        rec.chi_min, rec.var_tangent_min, rec.var_tangent_max = \
            tangent_variances(rho_a)
        rec.squeezing_factor = 2.0 * rec.var_tangent_min / rec.mean_spin_length

    a_mean, var_fn, vmin, vmax = quadrature_stats(rho_f)
    rec.a_re, rec.a_im = a_mean.real, a_mean.imag
    rec.var_a1 = float(var_fn(0.0))
    rec.var_a2 = float(var_fn(np.pi / 2.0))
    rec.var_a_min, rec.var_a_max = vmin, vmax
    rec.nbar, rec.var_n, rec.fano = photon_stats(rho_f)
    if with_phase:
        rec.phase_variance = pegg_barnett_variance(rho_f)
    if with_purity:
        rec.purity_field = float(np.trace(rho_f @ rho_f).real)
        rec.purity_atoms = float(np.trace(rho_a @ rho_a).real)
    return rec
