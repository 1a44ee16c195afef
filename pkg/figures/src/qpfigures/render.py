"""Render exponent-profile and winding CSV outputs into figure files.

Pure consumers: everything plotted comes from the CSV/JSON files the
main toolkit wrote; no physics is recomputed here.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class RenderError(ValueError):
    """Bad or incomplete input files."""


def read_columns(path, required):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise RenderError(f"{path}: empty CSV, no header row")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise RenderError(
                f"{path}: missing required column(s): {', '.join(missing)}"
            )
        rows = list(reader)
    if not rows:
        raise RenderError(f"{path}: no data rows")
    out = {}
    for c in reader.fieldnames:
        try:
            out[c] = np.asarray([float(r[c]) for r in rows])
        except (TypeError, ValueError):
            continue
    for c in required:
        if c not in out:
            raise RenderError(f"{path}: column {c} is not numeric")
    return out


def render_profile(csv_path, summary_path, out_path):
    """Measured vs predicted profile with turning-point markers.

    Returns a metadata dict; ``turning_markers`` counts the dashed
    vertical marker lines actually drawn on the axes.
    """
    cols = read_columns(csv_path, ["eps", "L_measured", "L_predicted"])
    with open(summary_path, encoding="utf-8") as fh:
        summary = json.load(fh)
    turning = summary.get("turning_points", [])
    segments = summary.get("segments", [])

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(cols["eps"], cols["L_measured"], "o", ms=3.5, color="#1f4e8c",
            label="measured")
    ax.plot(cols["eps"], cols["L_predicted"], "-", lw=1.4, color="#c44f39",
            label="predicted from dual exponents")
    if "stderr" in cols:
        ax.errorbar(cols["eps"], cols["L_measured"], yerr=3 * cols["stderr"],
                    fmt="none", ecolor="#1f4e8c", alpha=0.3)
    for t in turning:
        ax.axvline(t, ls="--", lw=1.0, color="0.45", gid="turning-marker")
    for seg in segments:
        mid = 0.5 * (seg["lo"] + seg["hi"])
        y = np.interp(mid, cols["eps"], cols["L_predicted"])
        ax.annotate(f"slope {seg['slope_integer']}",
                    xy=(mid, y), xytext=(0, 14),
                    textcoords="offset points", ha="center", fontsize=8)
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel(r"$L_\varepsilon$")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("complexified exponent: measured vs predicted")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    markers = sum(1 for line in ax.lines if line.get_gid() == "turning-marker")
    plt.close(fig)
    return {
        "out": str(out_path),
        "points": int(cols["eps"].size),
        "turning_markers": int(markers),
        "segments": len(segments),
    }


def render_winding(csv_path, out_path):
    """Step chart of the per-site winding over the eps sweep."""
    cols = read_columns(csv_path, ["eps", "nu"])
    eps, nu = cols["eps"], cols["nu"]
    snapped = np.round(nu)
    off_grid = np.max(np.abs(nu - snapped)) if nu.size else 0.0

    fig, ax = plt.subplots(figsize=(6.5, 4))
    if eps.size == 1:
        ax.hlines(nu[0], eps[0] - 0.05, eps[0] + 0.05, lw=2.0,
                  color="#1f4e8c")
        ax.plot(eps, nu, "o", color="#1f4e8c")
    else:
        ax.step(eps, nu, where="post", lw=2.0, color="#1f4e8c")
        ax.plot(eps, nu, "o", ms=4, color="#1f4e8c")
    lo = int(np.floor(np.min(nu))) - 1
    hi = int(np.ceil(np.max(nu))) + 1
    for level in range(lo, hi + 1):
        ax.axhline(level, lw=0.5, color="0.85", zorder=0)
    warned = bool(off_grid > 0.1)
    if warned:
        ax.text(0.5, 0.97, "warning: winding values not integer-snapped",
                transform=ax.transAxes, ha="center", va="top",
                fontsize=9, color="#a03020",
                bbox={"facecolor": "#ffe9d9", "edgecolor": "#a03020"})
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel(r"winding per site $\nu$")
    ax.set_title("determinant winding across the eps windows")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {
        "out": str(out_path),
        "points": int(eps.size),
        "warning_banner": warned,
        "max_snap_defect": float(off_grid),
    }
