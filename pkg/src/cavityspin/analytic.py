"""Closed-form and approximate solutions usable as oracles against the
numerics: the exact two-atom evolution, Jacobi elliptic functions via the
arithmetic-geometric mean, the large-N pendulum reduction, and the
small-tilt radiation formulas.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .spinfock import TruncationError, coherent_field_state

_AGM_TOL = 1e-15


@dataclass(frozen=True)
class EllipticPoint:
    u: float
    m: float
    sn: float
    cn: float
    dn: float
    epsilon: float  # E(u|m) = integral of dn^2

    @property
    def sd(self):
        return self.sn / self.dn

    @property
    def cd(self):
        return self.cn / self.dn

    @property
    def nd(self):
        return 1.0 / self.dn


def jacobi_elliptic(u, m):
    """sn, cn, dn and E(u|m) by descending Landen (AGM) transformation."""
    if not (0.0 <= m <= 1.0):
        raise ValueError("parameter m must lie in [0, 1]")
    u = float(u)
    if m == 0.0:
        return EllipticPoint(u, m, np.sin(u), np.cos(u), 1.0, u)
    if m == 1.0:
        sn = np.tanh(u)
        cn = 1.0 / np.cosh(u)
        return EllipticPoint(u, m, sn, cn, cn, sn)

    a, b, c = 1.0, np.sqrt(1.0 - m), np.sqrt(m)
    a_list, c_list = [a], [c]
    while abs(c) > _AGM_TOL:
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        a_list.append(a)
        c_list.append(c)
    n_stage = len(a_list) - 1

    phi = (2.0 ** n_stage) * a_list[-1] * u
    phis = [phi]
    for k in range(n_stage, 0, -1):
        s = np.clip(c_list[k] / a_list[k] * np.sin(phi), -1.0, 1.0)
        phi = 0.5 * (phi + np.arcsin(s))
        phis.append(phi)
    phis.reverse()  # phis[k] is the stage-k amplitude

    sn = np.sin(phis[0])
    cn = np.cos(phis[0])
    dn = np.sqrt(max(1.0 - m * sn * sn, 0.0))
    linear = 1.0 - sum((2.0 ** (k - 1)) * c_list[k] ** 2
                       for k in range(len(c_list)))
    eps = linear * u + sum(c_list[k] * np.sin(phis[k])
                           for k in range(1, len(c_list)))
    return EllipticPoint(u, m, float(sn), float(cn), float(dn), float(eps))


def two_atom_coefficients(n, gt):
    """Per-Fock-level amplitudes (p_n, q_n, r_n) of the exact N=2 solution."""
    n = np.asarray(n, dtype=float)
    root = np.sqrt(2.0 * (2.0 * n + 3.0))
    cosr = np.cos(root * gt)
    p = ((n + 1.0) * cosr + n + 2.0) / (2.0 * n + 3.0)
    q = -1j * np.sqrt((n + 1.0) / (2.0 * n + 3.0)) * np.sin(root * gt)
    r = np.sqrt((n + 1.0) * (n + 2.0)) / (2.0 * n + 3.0) * (cosr - 1.0)
    return p, q, r


def two_atom_state(alpha, gt, n_cut):
    """Exact rotating-frame joint state for two initially excited atoms and
    a real-amplitude coherent field, on the basis with photon_cut = n_cut.

    The free-field phase factor is dropped (rotating frame).
    """
    if abs(np.imag(alpha)) > 0:
        raise ValueError("the closed form assumes a real amplitude")
    alpha = float(np.real(alpha))
    # c_n with n + 2 still inside the cut keep the evolved state closed
    c = coherent_field_state(alpha, n_cut)
    if np.sum(np.abs(c[max(0, n_cut - 1):]) ** 2) > 1e-12:
        raise TruncationError("coherent weight too close to the Fock cut")
    spin_dim = 3
    amps = np.zeros((n_cut + 1) * spin_dim, dtype=complex)
    ns = np.arange(n_cut - 1)  # levels whose (n+2) component stays inside
    p, q, r = two_atom_coefficients(ns, gt)
    amps[ns * spin_dim + 0] += c[ns] * p
    amps[(ns + 1) * spin_dim + 1] += c[ns] * q
    amps[(ns + 2) * spin_dim + 2] += c[ns] * r
    return amps / np.linalg.norm(amps)


def two_atom_approx(nbar, gt):
    """Large-nbar expansion for two atoms: variance of Sx, the mean spin
    components, and the squeezing factor.

    Valid for gt up to about 1/sqrt(nbar); warns beyond 3/sqrt(nbar).
    """
    if nbar <= 0:
        raise ValueError("nbar must be positive")
    if gt > 3.0 / np.sqrt(nbar):
        warnings.warn("two_atom_approx outside its validity window",
                      stacklevel=2)
    rn = np.sqrt(nbar)
    var_sx = (0.5 - np.sin(rn * gt) ** 4 / (2.0 * nbar)
              + gt / (2.0 * rn) * np.sin(2.0 * rn * gt))
    sy = (-np.exp(-gt * gt / 2.0) * np.sin(2.0 * rn * gt)
          - gt / rn * (0.75 - 2.5 * np.sin(rn * gt) ** 2)
          + (np.sin(2.0 * rn * gt) + np.sin(4.0 * rn * gt)) / (8.0 * nbar))
    sz = (np.exp(-gt * gt / 2.0) * np.cos(2.0 * rn * gt)
          - 1.25 * gt / rn * np.sin(2.0 * rn * gt)
          + np.sin(2.0 * rn * gt) ** 2 / (4.0 * nbar))
    factor = (np.exp(gt * gt / 2.0)
              - np.sin(rn * gt) ** 2 / nbar
              + 3.0 / (8.0 * nbar) * np.sin(2.0 * rn * gt) ** 2
              + 1.5 * gt / rn * np.sin(2.0 * rn * gt))
    return var_sx, sy, sz, factor


def _pendulum_point(N, alpha, gt):
    if alpha < 0 or N < 1:
        raise ValueError("need alpha >= 0 and N >= 1")
    u = gt * np.sqrt(N + alpha * alpha)
    m = N / (N + alpha * alpha)
    return jacobi_elliptic(u, m), u, m


def pendulum_means(N, alpha, gt):
    """Mean-field solution (<Sy>, <Sz>, <a_1>) of the pendulum reduction;
    <Sx> and <a_2> vanish identically for a real drive amplitude."""
    ep, _, m = _pendulum_point(N, alpha, gt)
    sy = -N * np.sqrt(1.0 - m) * ep.sd * ep.cd
    sz = 0.5 * N * (2.0 * ep.cd ** 2 - 1.0)
    a1 = alpha * ep.nd
    return sy, sz, a1


def pendulum_fluctuations(N, alpha, gt):
    """(Var a_2, Var Sx) of the pendulum reduction."""
    ep, _, m = _pendulum_point(N, alpha, gt)
    var_a2 = (1.0 + m * ep.epsilon ** 2) / (4.0 * ep.dn ** 2)
    bracket = m * ep.sn * ep.cn / ep.dn ** 2 * ep.epsilon + ep.dn
    var_sx = 0.25 * N * (m * ep.sn ** 2 * ep.cn ** 2 / ep.dn ** 4
                         + bracket ** 2)
    return var_a2, var_sx


def small_angle_radiation(sz0, s_tilt0, var_s0, gt):
    """Small-tilt radiation into the vacuum from atoms with <Sz>_0 = sz0 < 0.

    Returns (mean quadrature amplitude, mean transverse spin,
    quadrature variance, transverse spin variance) at time gt; the
    caller picks the quadrature/spin direction pairing.
    """
    if sz0 >= 0:
        raise ValueError("squeezing transfer needs a negative <Sz>")
    if abs(s_tilt0) > 0.5 * abs(sz0):
        warnings.warn("tilt outside the small-angle validity window",
                      stacklevel=2)
    om = np.sqrt(2.0 * abs(sz0))
    s, c = np.sin(om * gt), np.cos(om * gt)
    a_mean = s_tilt0 / om * s
    s_mean = s_tilt0 * c
    var_a = 0.25 * c * c + var_s0 / (2.0 * abs(sz0)) * s * s
    var_s = var_s0 * c * c + 0.5 * abs(sz0) * s * s
    return a_mean, s_mean, var_a, var_s


def small_angle_first_minimum(sz0):
    """Time of the first quadrature-variance minimum, pi/(2 sqrt(2|Sz0|))."""
    return np.pi / (2.0 * np.sqrt(2.0 * abs(sz0)))
