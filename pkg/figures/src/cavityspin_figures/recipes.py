"""Figure recipes: each one maps pinned-schema CSV inputs to one image
(SVG + PNG).  No physics is recomputed here; rendering is a pure function
of the CSV contents."""

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, read_qgrid, read_table, resolve

RECORD_COLUMNS = ("gt", "sx", "sy", "sz", "mean_spin_length", "var_sx",
                  "chi_min", "var_tangent_min", "var_tangent_max",
                  "squeezing_factor", "a_re", "a_im", "var_a1", "var_a2",
                  "var_a_min", "var_a_max", "nbar", "var_n", "fano",
                  "phase_variance", "purity_field", "purity_atoms")


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    inputs: tuple          # (file pattern, kind, required columns) triples
    description: str
    renderer: callable = None


def _save(fig, out_base):
    paths = [out_base + ".svg", out_base + ".png"]
    for p in paths:
        fig.savefig(p, bbox_inches="tight", dpi=160)
    plt.close(fig)
    return paths


def render_prep_traces(input_dir, out_base):
    t = read_table(*_one(input_dir, RECIPES["prep-traces"], 0))
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    panels = (("squeezing_factor", "squeezing factor"),
              ("sz", r"$\langle S_z\rangle$"),
              ("var_sx", r"$\mathrm{Var}\,S_x$"),
              ("fano", "Fano factor"))
    for ax, (col, label) in zip(axes.flat, panels):
        ax.plot(t["gt"], t[col], lw=1.2)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    if np.nanmin(t["squeezing_factor"]) < 1.0:
        axes[0, 0].axhline(1.0, color="k", lw=0.6, ls=":")
    if np.nanmin(t["fano"]) < 1.0:
        axes[1, 1].axhline(1.0, color="k", lw=0.6, ls=":")
    for ax in axes[-1]:
        ax.set_xlabel("gt")
    fig.suptitle("preparation trajectory")
    return _save(fig, out_base)


def render_two_atom(input_dir, out_base):
    t = read_table(*_one(input_dir, RECIPES["two-atom"], 0))
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True,
                                   height_ratios=[2, 1])
    ax1.plot(t["gt"], t["factor"], lw=1.3, label="exact")
    ax1.plot(t["gt"], t["factor_approx"], lw=1.0, ls="--",
             label="large-amplitude expansion")
    ax1.axhline(1.0, color="k", lw=0.6, ls=":")
    ax1.set_ylabel("squeezing factor")
    ax1.legend()
    ax1.grid(alpha=0.3)
    ax2.semilogy(t["gt"], np.maximum(t["closed_form_error"], 1e-18), lw=1.0)
    ax2.set_ylabel("closed-form error")
    ax2.set_xlabel("gt")
    ax2.grid(alpha=0.3)
    fig.suptitle("two atoms in a coherent drive")
    return _save(fig, out_base)


def render_pendulum_overlay(input_dir, out_base):
    rec = RECIPES["pendulum-overlay"]
    num = read_table(*_one(input_dir, rec, 0))
    ana = read_table(*_one(input_dir, rec, 1))
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    pairs = (("sz", "sz", r"$\langle S_z\rangle$"),
             ("var_sx", "var_sx", r"$\mathrm{Var}\,S_x$"),
             ("var_a2", "var_a2", r"$\mathrm{Var}\,a_2$"))
    for ax, (ncol, acol, label) in zip(axes, pairs):
        ax.plot(num["gt"], num[ncol], lw=1.3, label="numerics")
        ax.plot(ana["gt"], ana[acol], lw=1.0, ls="--",
                label="elliptic mean field")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    axes[0].legend()
    axes[-1].set_xlabel("gt")
    fig.suptitle("mean-field (pendulum) reduction vs numerics")
    return _save(fig, out_base)


def render_radiation_traces(input_dir, out_base):
    t = read_table(*_one(input_dir, RECIPES["radiation-traces"], 0))
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    ax = axes[0, 0]
    ax.plot(t["gt"], t["var_a1"], lw=1.1, label=r"$\mathrm{Var}\,a_1$")
    ax.plot(t["gt"], t["var_a2"], lw=1.1, label=r"$\mathrm{Var}\,a_2$")
    ax.plot(t["gt"], t["var_a_min"], lw=1.1, ls="--",
            label=r"$\mathrm{Var}\,a_{\min}$")
    ax.axhline(0.25, color="k", lw=0.6, ls=":")
    ax.set_ylabel("quadrature variance")
    ax.legend(fontsize=8)
    axes[0, 1].plot(t["gt"], t["nbar"], lw=1.2)
    axes[0, 1].set_ylabel(r"$\langle n\rangle$")
    axes[1, 0].plot(t["gt"], t["a_re"], lw=1.1, label=r"$\mathrm{Re}\,a$")
    axes[1, 0].plot(t["gt"], t["a_im"], lw=1.1, label=r"$\mathrm{Im}\,a$")
    axes[1, 0].set_ylabel("mean amplitude")
    axes[1, 0].legend(fontsize=8)
    axes[1, 1].plot(t["gt"], t["fano"], lw=1.2)
    axes[1, 1].axhline(1.0, color="k", lw=0.6, ls=":")
    axes[1, 1].set_ylabel("Fano factor")
    for a in axes.flat:
        a.grid(alpha=0.3)
    for a in axes[-1]:
        a.set_xlabel("gt")
    fig.suptitle("radiation into the empty cavity")
    return _save(fig, out_base)


def render_scaling(input_dir, out_base):
    t = read_table(*_one(input_dir, RECIPES["scaling"], 0))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for ax, col, label in ((ax1, "factor", "minimum squeezing factor"),
                           (ax2, "alpha", "optimal drive amplitude")):
        ax.loglog(t["N"], t[col], "o-", lw=1.0, ms=4)
        if len(t["N"]) >= 3:
            slope, icpt = np.polyfit(np.log(t["N"]), np.log(t[col]), 1)
            ax.loglog(t["N"], np.exp(icpt) * t["N"] ** slope, ls="--",
                      lw=0.8, label=f"slope {slope:+.3f}")
            ax.legend()
        ax.set_xlabel("atom number N")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3, which="both")
    fig.suptitle("optimal preparation vs atom number")
    return _save(fig, out_base)


def render_qpanels(input_dir, out_base):
    rec = RECIPES["qpanels"]
    th, ph, qs = read_qgrid(resolve(input_dir, rec.inputs[0][0])[0],
                            "qgrid-spin")
    x, y, qf = read_qgrid(resolve(input_dir, rec.inputs[1][0])[0],
                          "qgrid-field")
    fig = plt.figure(figsize=(10, 4.5))
    # spin sphere seen from the negative z axis: lower hemisphere in a
    # polar projection with radius pi - theta
    axs = fig.add_subplot(1, 2, 1, projection="polar")
    lower = th >= np.pi / 2
    if not np.any(lower):
        raise SchemaError("spin grid has no lower-hemisphere samples")
    r = np.pi - th[lower]
    order = np.argsort(r)
    vals = qs[lower][order]
    axs.pcolormesh(ph, r[order], vals / max(vals.max(), 1e-300),
                   shading="nearest", cmap="viridis")
    axs.set_yticklabels([])
    axs.set_title("spin Q (view from $-S_z$)")
    axf = fig.add_subplot(1, 2, 2)
    axf.pcolormesh(x, y, (qf / max(qf.max(), 1e-300)).T,
                   shading="nearest", cmap="viridis")
    axf.set_xlabel(r"$\mathrm{Re}\,\alpha$")
    axf.set_ylabel(r"$\mathrm{Im}\,\alpha$")
    axf.set_aspect("equal")
    axf.set_title("field Q")
    return _save(fig, out_base)


def render_ranges(input_dir, out_base):
    rec = RECIPES["ranges"]
    fam_paths = resolve(input_dir, rec.inputs[0][0])
    env_paths = resolve(input_dir, rec.inputs[1][0])
    y_col = None
    fig, ax = plt.subplots(figsize=(7, 5))
    for path in fam_paths:
        fam = read_table(path, "family", ("tilt", "nbar"))
        y_col = "phase_ratio" if "phase_ratio" in fam else "fano"
        for tilt in np.unique(fam["tilt"]):
            sel = fam["tilt"] == tilt
            ax.plot(fam["nbar"][sel], fam[y_col][sel], lw=0.6, alpha=0.5,
                    color="tab:blue")
    for path in env_paths:
        env = read_table(path, "envelope", ("nbar",))
        y_env = [c for c in env if c != "nbar"][0]
        ax.plot(env["nbar"], env[y_env], "o-", lw=1.5, ms=3,
                color="tab:red", label="envelope")
    ax.axhline(1.0, color="k", lw=0.6, ls=":")
    ax.set_xlabel(r"$\langle n\rangle$")
    ax.set_ylabel(y_col or "value")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.suptitle("available range over tilt angles")
    return _save(fig, out_base)


def render_contours(input_dir, out_base):
    rec = RECIPES["contours"]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2))
    titles = ("minimum squeezing factor", "minimum quadrature variance")
    for k, (ax, title) in enumerate(zip(axes, titles)):
        t = read_table(*_one(input_dir, rec, k))
        gf = np.unique(t["gamma_f"])
        ga = np.unique(t["gamma_a"])
        grid = np.full((len(gf), len(ga)), np.nan)
        i = np.searchsorted(gf, t["gamma_f"])
        j = np.searchsorted(ga, t["gamma_a"])
        grid[i, j] = t["value"]
        if np.any(np.isnan(grid)):
            raise SchemaError("contour table is not a complete grid")
        cs = ax.contourf(ga, gf, grid, levels=12, cmap="viridis")
        fig.colorbar(cs, ax=ax)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(r"$\gamma_a/g$")
        ax.set_ylabel(r"$\gamma_f/g$")
        ax.set_title(title)
    return _save(fig, out_base)


def render_phase_min(input_dir, out_base):
    rec = RECIPES["phase-min"]
    t = read_table(*_one(input_dir, rec, 0))
    c = read_table(*_one(input_dir, rec, 1))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(t["nbar"], t["ratio"], "o-", lw=1.2)
    ax1.axhline(1.0, color="k", lw=0.6, ls=":")
    ax1.set_xlabel(r"$\langle n\rangle$")
    ax1.set_ylabel("variance / coherent baseline")
    ax1.grid(alpha=0.3)
    for nbar in np.unique(c["nbar"]):
        sel = c["nbar"] == nbar
        ax2.plot(c["n"][sel], c["c"][sel], lw=1.0,
                 label=rf"$\langle n\rangle={nbar:g}$")
    ax2.set_xlabel("Fock level")
    ax2.set_ylabel("coefficient")
    ax2.legend(fontsize=8)
    ax2.grid(alpha=0.3)
    fig.suptitle("minimum-phase-variance states")
    return _save(fig, out_base)


def _one(input_dir, recipe, index):
    pattern, kind, cols = recipe.inputs[index]
    return resolve(input_dir, pattern)[0], kind, cols


RECIPES = {r.figure_id: r for r in (
    FigureRecipe(
        "prep-traces",
        (("prepare_records.csv", "records", RECORD_COLUMNS),),
        "squeezing factor, mean spin, spin variance, and Fano factor along"
        " the preparation trajectory",
        render_prep_traces),
    FigureRecipe(
        "two-atom",
        (("two_atom.csv", "two-atom",
          ("gt", "factor", "factor_approx", "closed_form_error")),),
        "exact two-atom squeezing trace with the expansion and the"
        " closed-form error",
        render_two_atom),
    FigureRecipe(
        "pendulum-overlay",
        (("prepare_records.csv", "records", RECORD_COLUMNS),
         ("pendulum.csv", "pendulum",
          ("gt", "sy", "sz", "a1", "var_a2", "var_sx"))),
        "elliptic mean-field traces overlaid on the numerics",
        render_pendulum_overlay),
    FigureRecipe(
        "radiation-traces",
        (("radiate_records.csv", "records", RECORD_COLUMNS),),
        "quadrature variances, photon number, amplitude, and Fano factor of"
        " the radiated field",
        render_radiation_traces),
    FigureRecipe(
        "scaling",
        (("scaling.csv", "scaling",
          ("N", "alpha", "gt", "factor", "edge_warning")),),
        "optimal drive amplitude and minimum squeezing factor vs atom"
        " number with fitted slopes",
        render_scaling),
    FigureRecipe(
        "qpanels",
        (("spin_qgrid.csv", "qgrid-spin", ("theta", "phi", "value")),
         ("field_qgrid.csv", "qgrid-field",
          ("re_alpha", "im_alpha", "value"))),
        "paired spin-sphere (seen from the negative z axis) and"
        " complex-plane Q-function heatmaps",
        render_qpanels),
    FigureRecipe(
        "ranges",
        (("ranges_*_N*.csv", "family", ("tilt", "nbar")),
         ("envelope_*_N*.csv", "envelope", ("nbar",))),
        "per-tilt radiation families with the pointwise-minimum envelope",
        render_ranges),
    FigureRecipe(
        "contours",
        (("contours_squeezing.csv", "contour",
          ("gamma_f", "gamma_a", "value")),
         ("contours_quadrature.csv", "contour",
          ("gamma_f", "gamma_a", "value"))),
        "dissipation contour maps of the two tabulated minima",
        render_contours),
    FigureRecipe(
        "phase-min",
        (("phase_min.csv", "phase-min",
          ("nbar", "variance", "baseline", "ratio")),
         ("phase_min_coefficients.csv", "phase-min-coefficients",
          ("nbar", "n", "c")),),
        "minimum-phase-variance ratios and number-basis coefficients",
        render_phase_min),
)}


def render(figure_id, input_dir, out_base=None):
    """Render one recipe; returns the list of written image paths."""
    if figure_id not in RECIPES:
        raise SchemaError(
            f"unknown figure id {figure_id!r}; known: "
            + ", ".join(sorted(RECIPES)))
    if out_base is None:
        import os
        out_base = os.path.join(input_dir, figure_id)
    return RECIPES[figure_id].renderer(input_dir, out_base)
