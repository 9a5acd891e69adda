"""Command-line surface: flat key=value configs, CSV/JSON serialization
of every record series and grid, and a JSON run manifest.

Exit codes: 2 config/parse error, 3 scenario error, 4 truncation or
integrator-convergence failure.
"""

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__, analytic, dynamics, lindblad, scenarios, spinfock
from .lindblad import ConvergenceError
from .observables import ObservableRecord
from .scenarios import ScenarioConfig
from .spinfock import TruncationError

SCHEMA = "cavityspin-csv v1"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _choice(*options):
    def conv(s):
        v = s.strip()
        if v not in options:
            raise ConfigError(f"expected one of {options}, got {v!r}")
        return v
    return conv


_COMMON = {
    "N": int, "alpha": float, "gt_prep": float, "tilt": float,
    "azimuth": float, "use_cas": _bool, "rad_window": float,
    "rad_samples": int, "prep_samples": int, "snapshot_gt": float,
    "gamma_f": float, "gamma_a": float, "dt": float, "tolerance": float,
    "n_max_override": int,
}

CONFIG_KEYS = {
    "prepare": dict(_COMMON),
    "radiate": dict(_COMMON, with_phase=_bool),
    "tailor": dict(_COMMON, spin_grid_theta=int, spin_grid_phi=int,
                   field_grid_points=int, with_grids=_bool),
    "optimize-alpha": {"N": int, "alphas": _floats, "gt_window": float,
                       "coarse": int, "alpha_tol": float,
                       "refine_tol": float},
    "scaling": {"n_values": _ints, "gt_window": float, "coarse": int},
    "ranges": {"kind": _choice("quadrature", "number", "phase"),
               "n_values": _ints, "tilt_step": float, "azimuth": float,
               "use_cas": _bool, "alpha": float, "gt_prep": float,
               "rad_window": float, "rad_samples": int},
    "contours": {"N": int, "gamma_f_grid": _floats, "gamma_a_grid": _floats,
                 "alphas": _floats, "gt_window": float, "n_samples": int,
                 "rad_window": float, "rad_samples": int, "tilt": float,
                 "azimuth": float, "dt": float, "tolerance": float,
                 "n_max_override": int},
    "phase-min": {"nbars": _floats, "n_max": int, "tol": float},
    "qfunc": dict(_COMMON, target=_choice("atoms", "field"),
                  grid_points=int),
    "two-atom": {"alpha": float, "gt_window": float, "gt_samples": int},
    "pendulum": {"N": int, "alpha": float, "gt_window": float,
                 "gt_samples": int},
}


def parse_config(path, command):
    """Flat key = value lines; '#' starts a comment; unknown keys fail."""
    schema = CONFIG_KEYS[command]
    out = {}
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in schema:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = schema[key](val.strip())
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return out


def scenario_config(values):
    cfg = ScenarioConfig()
    for k, v in values.items():
        if hasattr(cfg, k):
            setattr(cfg, k, v)
    return cfg


# ---------------------------------------------------------------------------
# serialization


def _fmt(x):
    if x is None:
        return "nan"
    return f"{x:.17g}"


class OutputWriter:
    """Writes CSV (or JSON) tables and accumulates the run manifest."""

    def __init__(self, out_dir, fmt="csv"):
        import os
        self.out_dir = out_dir
        self.fmt = fmt
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        import os
        ext = ".json" if self.fmt == "json" else ".csv"
        return os.path.join(self.out_dir, name + ext)

    def table(self, name, kind, columns, rows):
        rows = [[float(x) if x is not None else np.nan for x in r]
                for r in rows]
        p = self.path(name)
        if self.fmt == "json":
            payload = {"schema": f"{SCHEMA} {kind}", "columns": list(columns),
                       "rows": rows}
            with open(p, "w") as f:
                json.dump(payload, f, indent=1)
                f.write("\n")
        else:
            with open(p, "w") as f:
                f.write(f"# {SCHEMA} {kind}\n")
                f.write(",".join(columns) + "\n")
                for r in rows:
                    f.write(",".join(_fmt(x) for x in r) + "\n")
        self._register(p, len(rows), len(columns))
        return p

    def qgrid(self, name, grid):
        import os
        p = os.path.join(self.out_dir, name + ".csv")
        grid.to_csv(p)
        self._register(p, grid.values.size, 3)
        return p

    def _register(self, path, rows, cols):
        h = hashlib.sha256()
        with open(path, "rb") as f:
            h.update(f.read())
        self.files.append({"file": path, "rows": rows, "cols": cols,
                           "sha256": h.hexdigest()})

    def manifest(self, command, config_values, wall_time):
        import os
        import scipy
        p = os.path.join(self.out_dir, "manifest.json")
        payload = {
            "command": command,
            "config": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in config_values.items()},
            "versions": {"cavityspin": __version__,
                         "numpy": np.__version__,
                         "scipy": scipy.__version__,
                         "python": sys.version.split()[0]},
            "wall_time_s": wall_time,
            "outputs": self.files,
        }
        with open(p, "w") as f:
            json.dump(payload, f, indent=1)
            f.write("\n")
        return p


def record_rows(records, extra_names=(), extra_values=None):
    rows = []
    for i, r in enumerate(records):
        prefix = list(extra_values[i]) if extra_values is not None else []
        rows.append(prefix + r.row())
    return list(extra_names) + list(ObservableRecord.FIELDS), rows


# ---------------------------------------------------------------------------
# commands


def _dissipation(values):
    gf = values.get("gamma_f", 0.0)
    ga = values.get("gamma_a", 0.0)
    if gf or ga:
        return lindblad.DissipationParams(gf, ga)
    return None


def cmd_prepare(values, writer, threads):
    prep = scenarios.prepare_sas(
        values.get("N", 10), values.get("alpha", 3.3),
        values.get("gt_prep", 0.5), dissipation=_dissipation(values),
        n_samples=values.get("prep_samples", 120),
        n_max_override=values.get("n_max_override"),
        dt=values.get("dt"), tolerance=values.get("tolerance", 1e-6))
    cols, rows = record_rows(prep.records)
    writer.table("prepare_records", "records", cols, rows)


def cmd_radiate(values, writer, threads):
    cfg = scenario_config(values)
    atoms = scenarios.prepared_atom_state(cfg)
    recs = scenarios.radiate(
        atoms, cfg.rad_window, cfg.rad_samples,
        dissipation=_dissipation(values),
        with_phase=values.get("with_phase", False),
        dt=cfg.dt, tolerance=cfg.tolerance)
    cols, rows = record_rows(recs)
    writer.table("radiate_records", "records", cols, rows)


def cmd_tailor(values, writer, threads):
    cfg = scenario_config(values)
    with_grids = values.get("with_grids", True)
    res = scenarios.tailor_pipeline(
        cfg, with_grids=with_grids,
        spin_grid_points=(values.get("spin_grid_theta", 121),
                          values.get("spin_grid_phi", 241)),
        field_grid_points=values.get("field_grid_points", 101))
    cols, rows = record_rows(res.prep_records)
    writer.table("prep_records", "records", cols, rows)
    cols, rows = record_rows(res.rad_records)
    writer.table("radiation_records", "records", cols, rows)
    if with_grids:
        writer.qgrid("spin_qgrid", res.spin_grid)
        writer.qgrid("field_qgrid", res.field_grid)
    writer.table("snapshot", "snapshot",
                 ["snapshot_gt", "phase_ratio"] + list(ObservableRecord.FIELDS),
                 [[res.snapshot.gt, res.phase_ratio] + res.snapshot.row()])


def cmd_optimize_alpha(values, writer, threads):
    opt = scenarios.optimize_alpha(
        values["N"], alphas=values.get("alphas"),
        gt_window=values.get("gt_window", 1.2),
        coarse=values.get("coarse", 240),
        alpha_tol=values.get("alpha_tol", 1e-3),
        refine_tol=values.get("refine_tol", 1e-4))
    writer.table("optimize_alpha", "optimum",
                 ["N", "alpha", "gt", "factor", "edge_warning"],
                 [[values["N"], opt.alpha, opt.gt, opt.factor,
                   float(opt.edge_warning)]])


def cmd_scaling(values, writer, threads):
    rows = []
    for N in values.get("n_values", (8, 12, 16, 24, 32, 48, 64, 100)):
        opt = scenarios.optimize_alpha(
            N, gt_window=values.get("gt_window", 1.2),
            coarse=values.get("coarse", 240))
        rows.append([N, opt.alpha, opt.gt, opt.factor,
                     float(opt.edge_warning)])
    writer.table("scaling", "scaling",
                 ["N", "alpha", "gt", "factor", "edge_warning"], rows)


def cmd_ranges(values, writer, threads):
    kind = values.get("kind", "quadrature")
    n_values = values.get("n_values", (100,))
    common = dict(tilt_step=values.get("tilt_step", np.pi / 30.0),
                  use_cas=values.get("use_cas", False),
                  alpha=values.get("alpha"),
                  gt_prep=values.get("gt_prep"),
                  rad_window=values.get("rad_window", 0.5),
                  rad_samples=values.get("rad_samples", 120),
                  threads=threads)
    if kind == "quadrature":
        for N in n_values:
            fams = scenarios.range_sweep_quadrature(
                N, azimuth=values.get("azimuth", 0.0), **common)
            _write_family(writer, f"ranges_quadrature_N{N}", fams)
        return
    sweep = (scenarios.range_sweep_number if kind == "number"
             else scenarios.range_sweep_phase)
    default_az = np.pi / 2 if kind == "number" else 0.0
    result = sweep(n_values, azimuth=values.get("azimuth", default_az),
                   **common)
    y_name = "fano" if kind == "number" else "phase_ratio"
    for N, (fams, (centers, env)) in result.items():
        extra = ("phase_ratio",) if kind == "phase" else ()
        _write_family(writer, f"ranges_{kind}_N{N}", fams, extra)
        writer.table(f"envelope_{kind}_N{N}", "envelope",
                     ["nbar", y_name], list(zip(centers, env)))


def _write_family(writer, name, fams, extra=()):
    cols = ["tilt"] + list(ObservableRecord.FIELDS) + list(extra)
    rows = []
    for tilt, recs in fams:
        for r in recs:
            rows.append([tilt] + r.row()
                        + [getattr(r, k, np.nan) for k in extra])
    writer.table(name, "family", cols, rows)


def cmd_contours(values, writer, threads):
    res = scenarios.dissipation_contours(
        N=values.get("N", 10),
        gamma_f_grid=values.get("gamma_f_grid"),
        gamma_a_grid=values.get("gamma_a_grid"),
        alphas=values.get("alphas", (2.9, 3.3, 3.7)),
        gt_window=values.get("gt_window", 0.9),
        n_samples=values.get("n_samples", 60),
        rad_window=values.get("rad_window", 0.8),
        rad_samples=values.get("rad_samples", 60),
        tilt=values.get("tilt", 0.3),
        azimuth=values.get("azimuth", 0.0),
        dt=values.get("dt", 2e-3),
        tolerance=values.get("tolerance", 1e-3),
        n_max_override=values.get("n_max_override"))
    for name, grid in (("contours_squeezing", res.min_squeezing),
                       ("contours_quadrature", res.min_var_a),
                       ("contours_alpha", res.best_alpha)):
        rows = []
        for i, gf in enumerate(res.gamma_f):
            for j, ga in enumerate(res.gamma_a):
                rows.append([gf, ga, grid[i, j]])
        writer.table(name, "contour", ["gamma_f", "gamma_a", "value"], rows)


def cmd_phase_min(values, writer, threads):
    rows, crows = [], []
    for nbar in values.get("nbars", (0.5, 1.0, 2.0, 5.0, 10.0, 20.0)):
        sol = scenarios.min_phase_state(nbar, values.get("n_max"),
                                        tol=values.get("tol", 1e-6))
        base = scenarios.coherent_phase_baseline(nbar)
        rows.append([sol.nbar, sol.n_max, sol.beta, sol.lam, sol.variance,
                     sol.residual, base, sol.variance / base])
        for n, c in enumerate(sol.coefficients):
            crows.append([sol.nbar, n, c])
    writer.table("phase_min", "phase-min",
                 ["nbar", "n_max", "beta", "lambda", "variance",
                  "residual", "baseline", "ratio"], rows)
    writer.table("phase_min_coefficients", "phase-min-coefficients",
                 ["nbar", "n", "c"], crows)


def cmd_qfunc(values, writer, threads):
    from . import observables
    cfg = scenario_config(values)
    target = values.get("target", "atoms")
    if target == "atoms":
        atoms = scenarios.prepared_atom_state(cfg)
        pts = values.get("grid_points", 181)
        grid = observables.qfunc_spin(atoms, pts, 2 * pts - 1)
        writer.qgrid("spin_qgrid", grid)
        return
    res = scenarios.tailor_pipeline(
        cfg, with_grids=True,
        field_grid_points=values.get("grid_points", 101))
    writer.qgrid("field_qgrid", res.field_grid)


def cmd_two_atom(values, writer, threads):
    alpha = values.get("alpha", 10.0)
    window = values.get("gt_window", 2.0)
    samples = values.get("gt_samples", 200)
    basis = spinfock.build_basis(2, alpha)
    H = dynamics.build_blocks(basis)
    psi0 = spinfock.product_state(
        spinfock.coherent_field_state(alpha, basis.photon_cut),
        spinfock.css_state(1.0, 0.0))
    from . import observables
    rows = []
    import warnings
    for gt in np.linspace(0.0, window, samples + 1)[1:]:
        psi = dynamics.evolve_unitary(psi0, H, gt)
        exact = analytic.two_atom_state(alpha, gt, basis.photon_cut)
        err = float(np.max(np.abs(np.abs(psi) - np.abs(exact))))
        rho_a = spinfock.partial_trace_state(psi, basis, "spin")
        fac = observables.squeezing_factor(rho_a)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, _, _, fac_approx = analytic.two_atom_approx(alpha ** 2, gt)
        rows.append([gt, fac, fac_approx, err])
    writer.table("two_atom", "two-atom",
                 ["gt", "factor", "factor_approx", "closed_form_error"],
                 rows)


def cmd_pendulum(values, writer, threads):
    N = values.get("N", 100)
    alpha = values.get("alpha", 10.0)
    window = values.get("gt_window", 0.35)
    samples = values.get("gt_samples", 200)
    rows = []
    for gt in np.linspace(0.0, window, samples + 1):
        sy, sz, a1 = analytic.pendulum_means(N, alpha, gt)
        var_a2, var_sx = analytic.pendulum_fluctuations(N, alpha, gt)
        rows.append([gt, sy, sz, a1, var_a2, var_sx])
    writer.table("pendulum", "pendulum",
                 ["gt", "sy", "sz", "a1", "var_a2", "var_sx"], rows)


COMMANDS = {
    "prepare": cmd_prepare,
    "radiate": cmd_radiate,
    "tailor": cmd_tailor,
    "optimize-alpha": cmd_optimize_alpha,
    "scaling": cmd_scaling,
    "ranges": cmd_ranges,
    "contours": cmd_contours,
    "phase-min": cmd_phase_min,
    "qfunc": cmd_qfunc,
    "two-atom": cmd_two_atom,
    "pendulum": cmd_pendulum,
}


# ---------------------------------------------------------------------------
# validate


def cmd_validate(values, command):
    report = []
    ok = True
    N = values.get("N", 10)
    alpha = values.get("alpha", 0.0) or 0.0
    gf = values.get("gamma_f", 0.0)
    ga = values.get("gamma_a", 0.0)
    if gf < 0 or ga < 0:
        report.append("error: decay rates must be nonnegative")
        ok = False
    try:
        basis = spinfock.build_basis(N, abs(alpha),
                                     values.get("n_max_override"))
        dim = basis.dim
        report.append(f"basis: n_max={basis.photon_cut}, dim={dim}")
        if gf or ga:
            mem = dim * dim * 16 / 1e9
            report.append(f"master equation: dense rho is {mem:.2f} GB")
            if mem > 0.5:
                report.append("warn: density matrix exceeds the desk-scale"
                              " budget (0.5 GB); reduce N or the Fock cut")
            steps = (values.get("rad_window", 0.5)
                     + values.get("gt_prep", 0.5)) / \
                (values.get("dt") or lindblad.default_step(basis))
            report.append(f"estimated RK4 steps: {steps:.0f}")
            runtime = ("long" if steps * dim * dim > 5e10 else
                       "moderate" if steps * dim * dim > 1e9 else "fast")
            report.append(f"runtime class: {runtime}")
        else:
            report.append("runtime class: fast (blockwise unitary)")
    except (ValueError, TruncationError) as exc:
        report.append(f"error: {exc}")
        ok = False
    report.append("ok" if ok else "invalid")
    return "\n".join(report)


# ---------------------------------------------------------------------------
# entry point


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cavityspin",
        description="cavity-coupled collective spin simulator")
    parser.add_argument("command",
                        choices=sorted(COMMANDS) + ["validate"])
    parser.add_argument("--config", default=None,
                        help="flat key=value config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--seedless-deterministic", action="store_true",
                        default=True,
                        help="accepted for compatibility; every computation"
                             " is deterministic")
    parser.add_argument("--validate-command", default=None,
                        help="command whose config keys `validate` checks")
    args = parser.parse_args(argv)

    if args.command == "validate":
        target = args.validate_command or "tailor"
        try:
            values = (parse_config(args.config, target)
                      if args.config else {})
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        print(cmd_validate(values, target))
        return 0

    try:
        values = parse_config(args.config, args.command) \
            if args.config else {}
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    writer = OutputWriter(args.out, args.format)
    t0 = time.time()
    try:
        COMMANDS[args.command](values, writer, max(1, args.threads))
    except (TruncationError, ConvergenceError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except (ValueError, RuntimeError, KeyError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 3
    writer.manifest(args.command, values, time.time() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
