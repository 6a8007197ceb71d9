"""Figure and table rendering for the report subcommand.

Everything here is presentation: the numbers come from the library, the
files land in a directory, and matplotlib is only imported when a report
is actually requested.
"""

from __future__ import annotations

import csv
import math
import os

import numpy as np

from .diophantine import orbit_eta_series
from .dimension import critical_dimension, dim_upper_bound
from .lie import UnipotentUpper
from .ratpoints import CountSpec, CoordBox, RationalPointCanon, count_band, expand


def _pyplot():
    try:
        import matplotlib
    except ImportError as e:
        raise ValueError(
            "the report subcommand needs matplotlib (install the report extra)"
        ) from e
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _counts_section(cfg, out_dir: str, plt) -> list[str]:
    box = CoordBox.unit()
    ls = [2 ** k for k in range(1, 9)]
    rows = []
    for l in ls:
        n = count_band(CountSpec(box=box, l=l), flow=cfg.flow, budget=cfg.budget)
        rows.append([l, n, n / (l * l)])
    csv_path = os.path.join(out_dir, "counts.csv")
    _write_csv(csv_path, ["l", "count", "count_over_l2"], rows)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ls, [r[2] for r in rows], marker="o")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("l")
    ax.set_ylabel("count / l^2")
    ax.set_title("Band count growth")
    fig.tight_layout()
    png_path = os.path.join(out_dir, "counts.png")
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]


def _orbit_section(cfg, out_dir: str, plt) -> list[str]:
    rng = np.random.default_rng(cfg.seed)
    grid = [0.5 * i for i in range(1, 21)]
    rational = expand(RationalPointCanon(a=0, b=1, p1=1, p2=1, q=2))
    x = rng.uniform(0.1, 0.9, size=3)
    random_pt = UnipotentUpper(x12=float(x[0]), x23=float(x[1]), x13=float(x[2]))
    series = {
        "rational": orbit_eta_series(rational, cfg.flow, grid),
        "random": orbit_eta_series(random_pt, cfg.flow, grid),
    }
    rows = []
    for name, s in series.items():
        for smp in s.samples:
            rows.append([name, smp.t, float(smp.eta), smp.gauge, smp.certified])
    csv_path = os.path.join(out_dir, "orbit.csv")
    _write_csv(
        csv_path,
        ["point", "t", "eta", "gauge", "certified"],
        [[r[0], repr(r[1]), repr(r[2]), r[3], "true" if r[4] else "false"] for r in rows],
    )
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, s in series.items():
        ax.plot(
            [smp.t for smp in s.samples],
            [-math.log(float(smp.eta)) for smp in s.samples],
            marker=".",
            label=name,
        )
    ax.set_xlabel("t")
    ax.set_ylabel("-log eta")
    ax.set_title("Orbit decay")
    ax.legend()
    fig.tight_layout()
    png_path = os.path.join(out_dir, "orbit.png")
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]


def _dimension_section(cfg, out_dir: str, plt) -> list[str]:
    top = float(cfg.flow.highest)
    gammas = [top * i / 40 for i in range(40)]
    rows = []
    for g in gammas:
        upper = dim_upper_bound(g, cfg.flow)
        crits = []
        for fam in range(1, 6):
            try:
                crits.append(critical_dimension(fam, g, cfg.flow))
            except ValueError:
                crits.append(None)
        rows.append([g, upper] + crits)
    csv_path = os.path.join(out_dir, "dimension.csv")
    _write_csv(
        csv_path,
        ["gamma", "upper"] + [f"critical_{f}" for f in range(1, 6)],
        [[repr(v) if isinstance(v, float) else ("" if v is None else v) for v in r] for r in rows],
    )
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(gammas, [r[1] for r in rows], label="upper bound", linewidth=2)
    for fam in range(1, 6):
        ys = [r[1 + fam] for r in rows]
        ax.plot(
            [g for g, y in zip(gammas, ys) if y is not None],
            [y for y in ys if y is not None],
            label=f"family {fam}",
            alpha=0.7,
        )
    ax.set_xlabel("gamma")
    ax.set_ylabel("dimension")
    ax.set_title("Upper bound and per-family criticals")
    ax.legend(fontsize=7)
    fig.tight_layout()
    png_path = os.path.join(out_dir, "dimension.png")
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]


def write_report(cfg, out_dir: str) -> list[str]:
    """Render all report tables and figures; returns the written paths."""
    plt = _pyplot()
    os.makedirs(out_dir, exist_ok=True)
    written = []
    written += _counts_section(cfg, out_dir, plt)
    written += _orbit_section(cfg, out_dir, plt)
    written += _dimension_section(cfg, out_dir, plt)
    return written
