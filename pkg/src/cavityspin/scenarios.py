"""End-to-end pipelines: squeezed-state preparation, optimal-drive search,
radiation into an empty cavity, tailor-made control, available-range
sweeps, dissipation contours, and the minimum-phase-variance eigenproblem.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dynamics, lindblad, observables, spinfock
from .dynamics import RotationSpec
from .observables import ObservableRecord


@dataclass
class ScenarioConfig:
    """Bag of knobs consumed by the pipelines and the CLI."""

    N: int = 10
    alpha: float = 3.3
    gt_prep: float = 0.5
    tilt: float = 0.0
    azimuth: float = 0.0
    use_cas: bool = False
    rad_window: float = 0.6
    rad_samples: int = 240
    prep_samples: int = 200
    snapshot_gt: float = None
    gamma_f: float = 0.0
    gamma_a: float = 0.0
    dt: float = None
    tolerance: float = 1e-6
    n_max_override: int = None
    alpha_grid: tuple = ()
    tilt_step: float = np.pi / 30.0
    n_values: tuple = ()
    gamma_f_grid: tuple = ()
    gamma_a_grid: tuple = ()
    nbar: float = 1.0
    phase_cut: int = None
    out_dir: str = "."

    def dissipation(self):
        return lindblad.DissipationParams(self.gamma_f, self.gamma_a)


@dataclass
class PreparationResult:
    basis: spinfock.SpinFockBasis
    records: list
    rho_atoms: np.ndarray          # reduced atomic state at gt_prep
    joint_state: np.ndarray = None  # pure joint state when lossless


def _initial_product(basis, alpha):
    field_vec = spinfock.coherent_field_state(alpha, basis.photon_cut)
    spin_vec = spinfock.css_state(basis.total_spin, 0.0)
    return spinfock.product_state(field_vec, spin_vec)


def prepare_sas(N, alpha, gt_prep, dissipation=None, n_samples=120,
                n_max_override=None, dt=None, tolerance=1e-6,
                with_purity=False):
    """Evolve |alpha> (x) |S, S> to gt_prep; returns the trajectory records
    and the reduced atomic state."""
    basis = spinfock.build_basis(N, abs(alpha), n_max_override)
    H = dynamics.build_blocks(basis)
    gts = np.linspace(0.0, gt_prep, n_samples + 1)
    lossless = dissipation is None or (dissipation.gamma_f == 0
                                       and dissipation.gamma_a == 0)
    records = []
    if lossless:
        psi0 = _initial_product(basis, alpha)
        psi = psi0
        for gt in gts:
            psi = dynamics.evolve_unitary(psi0, H, gt)
            records.append(observables.record_from_joint(
                psi, basis, gt, with_purity=with_purity))
        rho_a = spinfock.partial_trace_state(psi, basis, "spin")
        return PreparationResult(basis, records, rho_a, joint_state=psi)
    psi0 = _initial_product(basis, alpha)
    rho0 = np.outer(psi0, psi0.conj())
    cfg = lindblad.IntegratorConfig(dt=dt, tolerance=tolerance)
    traj = lindblad.evolve_master(rho0, basis, H, dissipation, gts, cfg,
                                  observables=_gate_observables(basis),
                                  check_convergence=True)
    rho = None
    for gt, rho in zip(gts, traj):
        records.append(observables.record_from_joint(
            rho, basis, gt, with_purity=with_purity))
    rho_a = spinfock.partial_trace(rho, basis, "spin")
    return PreparationResult(basis, records, rho_a)


def _gate_observables(basis):
    """Cheap functionals for the RK4 step-halving gate."""
    num = np.arange(basis.field_dim, dtype=float)
    M = basis.m_values()

    def mean_n(rho):
        d = np.diag(rho).real.reshape(basis.field_dim, basis.spin_dim)
        return float(d.sum(axis=1) @ num)

    def mean_sz(rho):
        d = np.diag(rho).real.reshape(basis.field_dim, basis.spin_dim)
        return float(d.sum(axis=0) @ M)

    return (mean_n, mean_sz, lambda rho: float(np.trace(rho).real))


# ---------------------------------------------------------------------------
# squeezing-factor minimization over gt and alpha


def _squeezing_series(psi0, basis, H, gts):
    out = np.empty(len(gts))
    for i, gt in enumerate(gts):
        psi = dynamics.evolve_unitary(psi0, H, gt)
        rho_a = spinfock.partial_trace_state(psi, basis, "spin")
        out[i] = observables.squeezing_factor(rho_a)
    return out


def _golden_min(f, lo, hi, tol):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def squeezing_first_minimum(N, alpha, gt_window=1.2, coarse=240,
                            refine_tol=1e-4):
    """First local minimum in gt of the squeezing factor (lossless).

    Returns (gt*, factor*).
    """
    basis = spinfock.build_basis(N, abs(alpha))
    H = dynamics.build_blocks(basis)
    psi0 = _initial_product(basis, alpha)
    gts = np.linspace(0.0, gt_window, coarse + 1)[1:]
    vals = np.empty_like(gts)
    first = None
    for i, gt in enumerate(gts):
        psi = dynamics.evolve_unitary(psi0, H, gt)
        rho_a = spinfock.partial_trace_state(psi, basis, "spin")
        vals[i] = observables.squeezing_factor(rho_a)
        # confirmed interior valley: strictly lower than 4 later samples
        if i >= 5 and first is None:
            j = i - 4
            if 0 < j and vals[j] < vals[j - 1] and np.all(vals[j] < vals[j + 1:i + 1]):
                first = j
                break
    if first is None:
        first = int(np.argmin(vals))
        if first in (0, len(gts) - 1):
            warnings.warn("no interior squeezing minimum inside the window",
                          stacklevel=2)
            return gts[first], vals[first]

    def f(gt):
        psi = dynamics.evolve_unitary(psi0, H, gt)
        rho_a = spinfock.partial_trace_state(psi, basis, "spin")
        return observables.squeezing_factor(rho_a)

    lo = gts[max(first - 1, 0)]
    hi = gts[min(first + 1, len(gts) - 1)]
    return _golden_min(f, lo, hi, refine_tol)


def default_alpha_grid(N, halfwidth=0.35, step=0.1):
    """Coarse drive-amplitude grid centered on the empirical N^0.29 law."""
    center = 1.72 * N ** 0.29
    lo = max(0.5, center * (1.0 - halfwidth))
    hi = center * (1.0 + halfwidth)
    return np.round(np.arange(lo, hi + step / 2, step), 10)


@dataclass
class AlphaOptimum:
    alpha: float
    gt: float
    factor: float
    edge_warning: bool = False


def optimize_alpha(N, alphas=None, gt_window=1.2, coarse=240,
                   alpha_tol=1e-3, refine_tol=1e-4):
    """Drive amplitude giving the deepest first squeezing minimum."""
    if alphas is None:
        alphas = default_alpha_grid(N)
    alphas = np.asarray(alphas, dtype=float)
    if len(alphas) == 0:
        raise ValueError("empty alpha grid")
    cache = {}

    def fmin(alpha):
        key = round(float(alpha), 12)
        if key not in cache:
            cache[key] = squeezing_first_minimum(
                N, alpha, gt_window=gt_window, coarse=coarse,
                refine_tol=refine_tol)
        return cache[key]

    vals = np.array([fmin(a)[1] for a in alphas])
    k = int(np.argmin(vals))
    edge = k in (0, len(alphas) - 1)
    if edge:
        warnings.warn("optimal drive amplitude at the grid edge", stacklevel=2)
        gt_star, f_star = fmin(alphas[k])
        return AlphaOptimum(float(alphas[k]), gt_star, f_star, True)
    lo, hi = alphas[k - 1], alphas[k + 1]
    a_star, _ = _golden_min(lambda a: fmin(a)[1], lo, hi, alpha_tol)
    gt_star, f_star = fmin(a_star)
    return AlphaOptimum(float(a_star), float(gt_star), float(f_star), False)


# ---------------------------------------------------------------------------
# radiation


def _branches(rho_a, weight_cut=1e-12):
    """Spectral branches (weights, column vectors) of an atomic state."""
    rho_a = np.asarray(rho_a, dtype=complex)
    if rho_a.ndim == 1:
        return np.ones(1), rho_a.reshape(-1, 1)
    w, v = np.linalg.eigh(rho_a)
    keep = w > weight_cut
    return w[keep], v[:, keep]


def _evolve_columns(psi_cols, H, gt):
    out = psi_cols.copy()
    t = gt / H.g
    for (idx, _), (w, v) in zip(H.blocks, H.eigensystems()):
        out[idx, :] = v @ (np.exp(-1j * w * t)[:, None] * (v.T @ psi_cols[idx, :]))
    return out


def radiate(atom_state, gt_window, n_samples=240, dissipation=None,
            with_phase=False, photon_margin=8, dt=None, tolerance=1e-6,
            require_negative_sz=True, check_convergence=True):
    """Emission from prepared atoms into an initially empty cavity.

    atom_state: spin-factor vector or density matrix.  Returns the record
    series over gt in [0, gt_window].
    """
    rho_a = np.asarray(atom_state, dtype=complex)
    two_s = rho_a.shape[0] - 1
    mean = observables.mean_spin(rho_a)
    if require_negative_sz and mean[2] >= 0:
        raise ValueError("<Sz> must be negative for squeezing transfer")
    basis = spinfock.SpinFockBasis(two_s, two_s + photon_margin)
    H = dynamics.build_blocks(basis)
    gts = np.linspace(0.0, gt_window, n_samples + 1)
    lossless = dissipation is None or (dissipation.gamma_f == 0
                                       and dissipation.gamma_a == 0)
    records = []
    if lossless:
        weights, vecs = _branches(rho_a)
        vac = np.zeros(basis.field_dim)
        vac[0] = 1.0
        cols0 = np.stack([spinfock.product_state(vac, vecs[:, k])
                          for k in range(vecs.shape[1])], axis=1)
        nf, ns = basis.field_dim, basis.spin_dim
        for gt in gts:
            cols = _evolve_columns(cols0, H, gt)
            psi = cols.reshape(nf, ns, -1)
            wpsi = psi * weights[None, None, :]
            rho_f = np.einsum("aik,bik->ab", wpsi, psi.conj())
            rho_at = np.einsum("aik,ajk->ij", wpsi, psi.conj())
            records.append(observables.record_from_factors(
                rho_f, rho_at, gt, with_phase=with_phase))
        return records
    if rho_a.ndim == 1:
        rho_a = np.outer(rho_a, rho_a.conj())
    rho0 = np.zeros((basis.dim, basis.dim), dtype=complex)
    ns = basis.spin_dim
    rho0[:ns, :ns] = rho_a
    cfg = lindblad.IntegratorConfig(dt=dt, tolerance=tolerance)
    traj = lindblad.evolve_master(rho0, basis, H, dissipation, gts, cfg,
                                  observables=_gate_observables(basis),
                                  check_convergence=check_convergence)
    for gt, rho in zip(gts, traj):
        records.append(observables.record_from_joint(
            rho, basis, gt, with_phase=with_phase))
    return records


def first_minimum_sample(records, key="var_a_min"):
    """Index of the first confirmed local minimum of a record field."""
    vals = np.array([getattr(r, key) for r in records])
    for i in range(1, len(vals) - 1):
        if vals[i] < vals[i - 1] and np.all(vals[i] <= vals[i + 1:min(i + 6, len(vals))]):
            return i
    return int(np.argmin(vals))


# ---------------------------------------------------------------------------
# tailor-made radiation


@dataclass
class TailorResult:
    prep_records: list
    prepared_atoms: np.ndarray
    spin_grid: observables.QGrid
    rad_records: list
    snapshot_index: int
    snapshot: ObservableRecord
    field_grid: observables.QGrid
    phase_ratio: float


def prepared_atom_state(cfg: ScenarioConfig):
    """Atomic state after preparation, alignment, and tilting."""
    if cfg.use_cas:
        raw = spinfock.css_state(cfg.N / 2.0, np.pi)  # all atoms in the ground state
    else:
        prep = prepare_sas(cfg.N, cfg.alpha, cfg.gt_prep,
                           dissipation=cfg.dissipation() if
                           (cfg.gamma_f or cfg.gamma_a) else None,
                           n_samples=cfg.prep_samples,
                           n_max_override=cfg.n_max_override,
                           dt=cfg.dt, tolerance=cfg.tolerance)
        raw = prep.rho_atoms
    return dynamics.align_and_tilt(raw, cfg.tilt, cfg.azimuth)


def tailor_pipeline(cfg: ScenarioConfig, with_grids=True,
                    spin_grid_points=(121, 241), field_grid_points=101):
    """prepare -> align/tilt -> radiate, with quasi-probability snapshots."""
    dissipation = cfg.dissipation() if (cfg.gamma_f or cfg.gamma_a) else None
    if cfg.use_cas:
        prep_records = []
        raw = spinfock.css_state(cfg.N / 2.0, np.pi)
    else:
        prep = prepare_sas(cfg.N, cfg.alpha, cfg.gt_prep,
                           dissipation=dissipation,
                           n_samples=cfg.prep_samples,
                           n_max_override=cfg.n_max_override,
                           dt=cfg.dt, tolerance=cfg.tolerance)
        prep_records = prep.records
        raw = prep.rho_atoms
    atoms = dynamics.align_and_tilt(raw, cfg.tilt, cfg.azimuth)
    spin_grid = (observables.qfunc_spin(atoms, *spin_grid_points)
                 if with_grids else None)
    rad_records = radiate(atoms, cfg.rad_window, cfg.rad_samples,
                          dissipation=dissipation, with_phase=True,
                          dt=cfg.dt, tolerance=cfg.tolerance)
    if cfg.snapshot_gt is not None:
        gts = np.array([r.gt for r in rad_records])
        snap = int(np.argmin(np.abs(gts - cfg.snapshot_gt)))
    else:
        snap = first_minimum_sample(rad_records, "var_a_min")
    rec = rad_records[snap]
    ratio = rec.phase_variance / coherent_phase_baseline(max(rec.nbar, 1e-6))
    field_grid = None
    if with_grids:
        field_grid = _field_grid_at(atoms, rec, dissipation, cfg,
                                    field_grid_points)
    return TailorResult(prep_records, atoms, spin_grid, rad_records, snap,
                        rec, field_grid, float(ratio))


def _field_grid_at(atoms, rec, dissipation, cfg, points):
    rho_a = atoms if np.asarray(atoms).ndim == 2 else np.outer(atoms, np.conj(atoms))
    two_s = rho_a.shape[0] - 1
    basis = spinfock.SpinFockBasis(two_s, two_s + 8)
    H = dynamics.build_blocks(basis)
    if dissipation is None:
        weights, vecs = _branches(rho_a)
        vac = np.zeros(basis.field_dim)
        vac[0] = 1.0
        cols0 = np.stack([spinfock.product_state(vac, vecs[:, k])
                          for k in range(vecs.shape[1])], axis=1)
        cols = _evolve_columns(cols0, H, rec.gt)
        psi = cols.reshape(basis.field_dim, basis.spin_dim, -1)
        rho_f = np.einsum("aik,bik->ab", psi * weights[None, None, :],
                          psi.conj())
    else:
        rho0 = np.zeros((basis.dim, basis.dim), dtype=complex)
        ns = basis.spin_dim
        rho0[:ns, :ns] = rho_a
        traj = lindblad.evolve_master(
            rho0, basis, H, dissipation, [rec.gt],
            lindblad.IntegratorConfig(dt=cfg.dt, tolerance=cfg.tolerance),
            observables=_gate_observables(basis))
        rho_f = spinfock.partial_trace(traj[-1], basis, "field")
    center = rec.a_re + 1j * rec.a_im
    half = 5.0
    return observables.qfunc_field(rho_f, center, half, points)


# ---------------------------------------------------------------------------
# available-range sweeps


def sweep_tilts(N, atom_source, tilts, azimuth, rad_window, rad_samples,
                with_phase=False):
    """One radiation trajectory per tilt angle; atom_source is the
    un-tilted atomic state (vector or density)."""
    families = []
    for tilt in tilts:
        atoms = dynamics.align_and_tilt(atom_source, tilt, azimuth)
        recs = radiate(atoms, rad_window, rad_samples,
                       with_phase=with_phase, require_negative_sz=True)
        families.append((float(tilt), recs))
    return families


def envelope(families, x_key, y_key, bins):
    """Pointwise minima of y over the family, binned along x."""
    edges = np.asarray(bins)
    lo = np.full(len(edges) - 1, np.inf)
    for _, recs in families:
        xs = np.array([getattr(r, x_key) for r in recs])
        ys = np.array([getattr(r, y_key) for r in recs])
        ok = np.isfinite(xs) & np.isfinite(ys)
        idx = np.digitize(xs[ok], edges) - 1
        for i, y in zip(idx, ys[ok]):
            if 0 <= i < len(lo) and y < lo[i]:
                lo[i] = y
    centers = 0.5 * (edges[:-1] + edges[1:])
    ok = np.isfinite(lo)
    return centers[ok], lo[ok]


def parallel_map(fn, items, threads=1):
    """Map preserving item order; thread-parallel when threads > 1."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def optimal_drive_guess(N):
    """Empirical optimal drive amplitude, alpha ~ 1.72 N^0.29."""
    return 1.72 * N ** 0.29


def sas_input_state(N, alpha=None, gt_prep=None):
    """Prepared squeezed atomic state used by the range sweeps.

    Defaults: drive amplitude from the scaling law, preparation time at
    the first squeezing minimum for that amplitude.
    """
    if alpha is None:
        alpha = optimal_drive_guess(N)
    if gt_prep is None:
        gt_prep, _ = squeezing_first_minimum(N, alpha)
    prep = prepare_sas(N, alpha, gt_prep, n_samples=2)
    return prep.rho_atoms


def cas_input_state(N):
    return spinfock.css_state(N / 2.0, np.pi)


def default_tilts(tilt_step=np.pi / 30.0, max_tilt=None):
    if max_tilt is None:
        max_tilt = np.pi / 2.0 - 1e-9
    return np.arange(0.0, max_tilt + 1e-12, tilt_step)


def range_sweep_quadrature(N, tilt_step=np.pi / 30.0, azimuth=0.0,
                           alpha=None, gt_prep=None, rad_window=0.5,
                           rad_samples=120, use_cas=False, threads=1):
    """Radiation trajectory family over initial tilting angles."""
    atoms = (cas_input_state(N) if use_cas
             else sas_input_state(N, alpha, gt_prep))
    tilts = default_tilts(tilt_step)

    def one(tilt):
        st = dynamics.align_and_tilt(atoms, tilt, azimuth)
        return (float(tilt), radiate(st, rad_window, rad_samples))

    return parallel_map(one, tilts, threads)


def _sweep_with_phase(N, tilt_step, azimuth, use_cas, alpha, gt_prep,
                      rad_window, rad_samples, threads):
    atoms = (cas_input_state(N) if use_cas
             else sas_input_state(N, alpha, gt_prep))
    tilts = default_tilts(tilt_step)

    def one(tilt):
        st = dynamics.align_and_tilt(atoms, tilt, azimuth)
        return (float(tilt), radiate(st, rad_window, rad_samples,
                                     with_phase=True))

    return parallel_map(one, tilts, threads)


def range_sweep_number(N_values, tilt_step=np.pi / 30.0, azimuth=np.pi / 2,
                       use_cas=False, alpha=None, gt_prep=None,
                       rad_window=0.5, rad_samples=120, nbar_bins=None,
                       threads=1):
    """Fano-factor range over tilts: families plus min-Fano envelopes
    binned in mean photon number.  Returns {N: (families, (nbar, fano))}.
    """
    out = {}
    for N in N_values:
        fams = range_sweep_quadrature(N, tilt_step, azimuth, alpha, gt_prep,
                                      rad_window, rad_samples, use_cas,
                                      threads)
        bins = (np.linspace(0.0, N * 0.55, 23) if nbar_bins is None
                else nbar_bins)
        out[N] = (fams, envelope(fams, "nbar", "fano", bins))
    return out


def range_sweep_phase(N_values, tilt_step=np.pi / 30.0, azimuth=0.0,
                      use_cas=False, alpha=None, gt_prep=None,
                      rad_window=0.5, rad_samples=120, nbar_bins=None,
                      threads=1):
    """Phase-fluctuation range over tilts, as the ratio to the coherent
    state of equal mean photon number.  {N: (families, (nbar, ratio))}."""
    out = {}
    for N in N_values:
        fams = _sweep_with_phase(N, tilt_step, azimuth, use_cas, alpha,
                                 gt_prep, rad_window, rad_samples, threads)
        ratio_fams = []
        for tilt, recs in fams:
            for r in recs:
                if r.nbar > 1e-9 and np.isfinite(r.phase_variance):
                    r.phase_ratio = r.phase_variance / \
                        coherent_phase_baseline(r.nbar)
                else:
                    r.phase_ratio = np.nan
            ratio_fams.append((tilt, recs))
        bins = (np.linspace(0.0, N * 0.55, 23) if nbar_bins is None
                else nbar_bins)
        out[N] = (ratio_fams, envelope(ratio_fams, "nbar", "phase_ratio",
                                       bins))
    return out


# ---------------------------------------------------------------------------
# dissipation contours


@dataclass
class ContourResult:
    gamma_f: np.ndarray
    gamma_a: np.ndarray
    best_alpha: np.ndarray
    min_squeezing: np.ndarray
    min_var_a: np.ndarray


def _parabolic_min(vals, k):
    """Vertex value of the parabola through samples k-1, k, k+1."""
    if k <= 0 or k >= len(vals) - 1:
        return float(vals[k])
    y0, y1, y2 = vals[k - 1], vals[k], vals[k + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom <= 0:
        return float(y1)
    return float(y1 - (y0 - y2) ** 2 / (8.0 * denom))


def _dissipative_min_squeezing(N, alpha, params, gt_window, n_samples,
                               dt, tolerance, n_max_override,
                               check_convergence=True):
    prep_gts = np.linspace(0.0, gt_window, n_samples + 1)
    if n_max_override is None:
        n_max_override = spinfock.tight_photon_cut(N, abs(alpha))
    basis = spinfock.build_basis(N, abs(alpha), n_max_override)
    H = dynamics.build_blocks(basis)
    psi0 = _initial_product(basis, alpha)
    rho0 = np.outer(psi0, psi0.conj())
    cfg = lindblad.IntegratorConfig(dt=dt, tolerance=tolerance)
    factors, states, gts_done = [], [], []

    def absorb(gt, rho):
        rho_a = spinfock.partial_trace(rho, basis, "spin")
        factors.append(observables.squeezing_factor(rho_a))
        states.append(rho_a)
        gts_done.append(gt)

    if check_convergence:
        traj = lindblad.evolve_master(
            rho0, basis, H, params, prep_gts, cfg,
            observables=_gate_observables(basis), check_convergence=True)
        for gt, rho in zip(prep_gts, traj):
            absorb(gt, rho)
    else:
        # chunked integration with early stop once the squeezing minimum
        # is clearly behind us; sample times land on the same RK4 grid as
        # a single full-window run, so results are identical
        absorb(0.0, rho0)
        rho, t0, idx = rho0, 0.0, 1
        while idx <= n_samples:
            seg = prep_gts[idx:idx + 6]
            traj = lindblad.evolve_master(rho, basis, H, params,
                                          list(seg - t0), cfg,
                                          check_convergence=False)
            for gt, r in zip(seg, traj):
                absorb(gt, r)
            rho, t0 = traj[-1], seg[-1]
            idx += len(seg)
            k = int(np.argmin(factors))
            if (factors[k] < factors[0] and len(factors) - 1 - k >= 8
                    and factors[-1] > 1.1 * factors[k]):
                break
    k = int(np.argmin(factors))
    return _parabolic_min(factors, k), states[k], gts_done[k]


def dissipation_contours(N=10, gamma_f_grid=None, gamma_a_grid=None,
                         alphas=(2.9, 3.3, 3.7), gt_window=0.9,
                         n_samples=60, rad_window=0.8, rad_samples=60,
                         tilt=0.3, azimuth=0.0,
                         dt=2e-3, tolerance=1e-3, n_max_override=None,
                         progress=None):
    """Minimum squeezing factor and minimum radiated quadrature variance
    over a (gamma_f, gamma_a) grid, re-optimizing alpha per point.

    For the quadrature table the optimally squeezed state is steered
    (mean aligned, small tilt, squeezing perpendicular to the tilt plane)
    before radiating with the same losses; radiating the raw snapshot
    transfers no squeezing within the first emission period.

    The RK4 step-halving gate runs once, on the most lossy corner of the
    grid, and the validated step is reused everywhere else.
    """
    if gamma_f_grid is None:
        gamma_f_grid = np.logspace(-3, -1, 6)
    if gamma_a_grid is None:
        gamma_a_grid = np.logspace(-3, -1, 6)
    gamma_f_grid = np.asarray(gamma_f_grid, float)
    gamma_a_grid = np.asarray(gamma_a_grid, float)
    nf, na = len(gamma_f_grid), len(gamma_a_grid)
    best_alpha = np.empty((nf, na))
    min_sq = np.empty((nf, na))
    min_va = np.empty((nf, na))
    _dissipative_min_squeezing(
        N, alphas[0], lindblad.DissipationParams(gamma_f_grid[-1],
                                                 gamma_a_grid[-1]),
        gt_window, 2, dt, tolerance, n_max_override, check_convergence=True)
    for i, gf in enumerate(gamma_f_grid):
        for j, ga in enumerate(gamma_a_grid):
            params = lindblad.DissipationParams(gf, ga)
            best = (np.inf, None, 0.0, np.nan)
            for alpha in alphas:
                f, rho_a, gt = _dissipative_min_squeezing(
                    N, alpha, params, gt_window, n_samples, dt, tolerance,
                    n_max_override, check_convergence=False)
                if f < best[0]:
                    best = (f, rho_a, gt, alpha)
            min_sq[i, j] = best[0]
            best_alpha[i, j] = best[3]
            steered = dynamics.align_and_tilt(best[1], tilt, azimuth)
            recs = radiate(steered, rad_window, rad_samples,
                           dissipation=params, dt=dt, tolerance=tolerance,
                           require_negative_sz=False,
                           check_convergence=(i == 0 and j == 0))
            vas = [r.var_a_min for r in recs]
            min_va[i, j] = _parabolic_min(vas, int(np.argmin(vas)))
            if progress is not None:
                progress(i, j, min_sq[i, j], min_va[i, j])
    return ContourResult(gamma_f_grid, gamma_a_grid, best_alpha,
                         min_sq, min_va)


# ---------------------------------------------------------------------------
# minimum phase variance (Lagrange-multiplier eigenproblem)


class BracketError(RuntimeError):
    pass


@dataclass
class PhaseMinProblem:
    nbar: float
    n_max: int
    beta: float
    lam: float
    coefficients: np.ndarray
    variance: float
    residual: float


def _phase_kernel(dim):
    n = np.arange(dim)
    diff = n[:, None] - n[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        A = ((-1.0) ** diff) / diff.astype(float) ** 2
    np.fill_diagonal(A, 0.0)
    return A


def _ground_state(A2, beta, n):
    w, v = np.linalg.eigh(A2 + beta * np.diag(n))
    c = v[:, 0]
    if c[np.argmax(np.abs(c))] < 0:
        c = -c
    return w[0], c


def min_phase_state(nbar, n_max=None, tol=1e-6):
    """Number-basis coefficients minimizing the phase variance at fixed
    mean photon number, via bisection on the number-constraint multiplier."""
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    if n_max is None:
        n_max = max(30, int(np.ceil(nbar + 10.0 * np.sqrt(nbar + 1.0) + 20)))
    if nbar > n_max:
        raise ValueError("nbar exceeds the Fock cut")
    dim = n_max + 1
    n = np.arange(dim, dtype=float)
    A = _phase_kernel(dim)
    A2 = 2.0 * A

    def mean_n(beta):
        mu, c = _ground_state(A2, beta, n)
        return float(n @ (c * c)), mu, c

    if nbar == 0.0:
        c = np.zeros(dim)
        c[0] = 1.0
        var = np.pi ** 2 / 3.0
        return PhaseMinProblem(0.0, n_max, np.inf, np.nan, c, var, 0.0)

    # scan for a bracket; <n> decreases with beta
    betas = np.concatenate([-np.logspace(2, -3, 24), [0.0],
                            np.logspace(-3, 2, 24)])
    betas.sort()
    prev = None
    bracket = None
    scan = []
    for b in betas:
        val = mean_n(b)[0]
        scan.append((b, val))
        if prev is not None and ((prev[1] - nbar) * (val - nbar) <= 0.0):
            bracket = (prev[0], b)
            break
        prev = (b, val)
    if bracket is None:
        raise BracketError(f"no multiplier bracket found; scan={scan}")
    # monotonicity check on the bracket
    bs = np.linspace(bracket[0], bracket[1], 8)
    ms = [mean_n(b)[0] for b in bs]
    if not all(x >= y - 1e-9 for x, y in zip(ms, ms[1:])):
        raise BracketError("mean photon number not monotone on the bracket")
    lo, hi = bracket
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val, mu, c = mean_n(mid)
        if abs(val - nbar) < tol:
            break
        if val > nbar:
            lo = mid
        else:
            hi = mid
    else:
        raise BracketError("bisection failed to converge")
    var = float(np.pi ** 2 / 3.0 + 2.0 * c @ A @ c)
    resid = float(np.max(np.abs((A2 + mid * np.diag(n)) @ c - mu * c)))
    return PhaseMinProblem(float(nbar), n_max, float(mid), float(-mu),
                           c, var, resid)


_BASELINE_CACHE = {}


def coherent_phase_baseline(nbar):
    """Phase variance of the coherent state with the same mean photon
    number."""
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    key = round(float(nbar), 12)
    if key not in _BASELINE_CACHE:
        alpha = np.sqrt(nbar)
        n_max = int(np.ceil(nbar + 10.0 * alpha + 25))
        c = spinfock.coherent_field_state(alpha, n_max)
        _BASELINE_CACHE[key] = observables.pegg_barnett_variance(
            np.outer(c, c.conj()))
    return _BASELINE_CACHE[key]
