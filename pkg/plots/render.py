#!/usr/bin/env python3
"""Render figures from the simulation CSVs.

    plots/render.py --kind <kind> --in <csv>[,<csv>] --out <png>

Kinds and their inputs:

  thermalization   diagnostics CSV  -> sum-rule residual vs normalized beta
  ness             ness CSV [, diagnostics CSV for the ratio inset]
  bound            bound CSV        -> thermal-domain estimate vs drive strength
  convergence      convergence CSV  -> residual heatmap over both cutoffs
  ratesym          rate CSV         -> +nu vs -nu rates against beta

The inverse temperature axis is normalized by the lowest level gap, read
from the ``# gap:`` header comment of the input file.  Rendering does no
numerics beyond that normalization, and identical input bytes produce
identical image bytes.  Exit codes: 0 ok, 2 schema or usage error.
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


class SchemaError(Exception):
    pass


def read_table(path):
    comments, columns, rows = [], None, []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot open {path}: {exc}")
    with fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            cells = next(csv.reader([line]))
            if columns is None:
                columns = cells
            else:
                rows.append(cells)
    if columns is None or not rows:
        raise SchemaError(f"{path}: empty table")
    return comments, columns, rows


def column(columns, rows, name, cast=float):
    if name not in columns:
        raise SchemaError(f"missing column {name!r} (have {columns})")
    i = columns.index(name)
    out = []
    for cells in rows:
        out.append(cast(cells[i]) if cells[i] != "" else None)
    return out


def gap_of(comments):
    for c in comments:
        if c.startswith("gap:"):
            return float(c.split(":", 1)[1])
    return 1.0


def new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    return fig, ax


def render_thermalization(paths, out):
    comments, cols, rows = read_table(paths[0])
    gap = gap_of(comments)
    names = column(cols, rows, "check_name", str)
    keep = [i for i, n in enumerate(names) if n == "floquet_thermalization"]
    if not keep:
        raise SchemaError("no floquet_thermalization rows")
    beta = column(cols, rows, "beta")
    level = column(cols, rows, "j", int)
    resid = column(cols, rows, "residual")
    fig, ax = new_axes()
    for j in sorted({level[i] for i in keep}):
        xs = [beta[i] * gap for i in keep if level[i] == j]
        ys = [max(resid[i], 1e-18) for i in keep if level[i] == j]
        order = sorted(range(len(xs)), key=lambda k: xs[k])
        ax.loglog([xs[k] for k in order], [ys[k] for k in order],
                  marker="o", label=f"level {j}")
    ax.set_xlabel(r"$\beta\,(E_2 - E_1)$")
    ax.set_ylabel("thermalization-condition relative error")
    ax.legend()
    fig.savefig(out, dpi=150)


def render_ness(paths, out):
    comments, cols, rows = read_table(paths[0])
    gap = gap_of(comments)
    beta = column(cols, rows, "beta")
    level = column(cols, rows, "j", int)
    pop = column(cols, rows, "population")
    therm = column(cols, rows, "thermal_population")
    fig, ax = new_axes()
    for j in sorted(set(level)):
        idx = [i for i, jj in enumerate(level) if jj == j]
        idx.sort(key=lambda i: beta[i])
        ax.semilogx([beta[i] * gap for i in idx], [pop[i] for i in idx],
                    marker="o", label=f"steady state, level {j}")
        ax.semilogx([beta[i] * gap for i in idx], [therm[i] for i in idx],
                    linestyle="--", color="gray")
    ax.set_xlabel(r"$\beta\,(E_2 - E_1)$")
    ax.set_ylabel("population")
    ax.legend(fontsize=8)
    if len(paths) > 1:
        icom, icols, irows = read_table(paths[1])
        names = column(icols, irows, "check_name", str)
        keep = [i for i, n in enumerate(names) if n == "detailed_balance"]
        if keep:
            ib = column(icols, irows, "beta")
            inu = column(icols, irows, "nu", int)
            ratio = column(icols, irows, "residual")
            ins = fig.add_axes((0.58, 0.55, 0.3, 0.3))
            for nu in sorted({inu[i] for i in keep}):
                xs = [ib[i] * gap for i in keep if inu[i] == nu]
                ys = [1.0 + ratio[i] for i in keep if inu[i] == nu]
                order = sorted(range(len(xs)), key=lambda k: xs[k])
                ins.semilogx([xs[k] for k in order], [ys[k] for k in order],
                             marker=".", markersize=3, linewidth=0.8)
            ins.axhline(1.0, color="black", linewidth=0.6)
            ins.set_title("pairwise balance ratio", fontsize=7)
            ins.tick_params(labelsize=6)
    fig.savefig(out, dpi=150)


def render_bound(paths, out):
    _, cols, rows = read_table(paths[0])
    j = column(cols, rows, "j", int)
    jp = column(cols, rows, "j_prime", int)
    lam = column(cols, rows, "lambda")
    bound = column(cols, rows, "bound")
    fig, ax = new_axes()
    for pair in sorted({(a, b) for a, b in zip(j, jp)}):
        idx = [i for i in range(len(j)) if (j[i], jp[i]) == pair]
        idx.sort(key=lambda i: lam[i])
        ax.plot([lam[i] for i in idx], [bound[i] for i in idx],
                marker="o", label=f"pair ({pair[0]},{pair[1]})")
    ax.set_xlabel(r"driving strength $\lambda$")
    ax.set_ylabel("high-temperature domain estimate")
    ax.set_ylim(-8.0, 8.0)
    ax.legend(fontsize=8)
    fig.savefig(out, dpi=150)


def render_convergence(paths, out):
    _, cols, rows = read_table(paths[0])
    beta = column(cols, rows, "beta")
    e_cut = column(cols, rows, "e_cut")
    nu_cut = column(cols, rows, "nu_cut", int)
    resid = column(cols, rows, "residual")
    b0 = beta[0]
    es = sorted({e for e, b in zip(e_cut, beta) if b == b0})
    nus = sorted({n for n, b in zip(nu_cut, beta) if b == b0})
    import math
    grid = [[float("nan")] * len(es) for _ in nus]
    for i in range(len(rows)):
        if beta[i] != b0:
            continue
        r, c = nus.index(nu_cut[i]), es.index(e_cut[i])
        prev = grid[r][c]
        val = max(resid[i], 1e-18)
        grid[r][c] = val if math.isnan(prev) else max(prev, val)
    logged = [[math.log10(v) for v in row] for row in grid]
    fig, ax = new_axes()
    im = ax.imshow(logged, origin="lower", aspect="auto", cmap="viridis_r")
    ax.set_xticks(range(len(es)), [f"{e:g}" for e in es])
    ax.set_yticks(range(len(nus)), [f"{n}" for n in nus])
    ax.set_xlabel("kinetic-energy cutoff")
    ax.set_ylabel("Floquet index cutoff")
    fig.colorbar(im, ax=ax, label="log10 relative error")
    fig.savefig(out, dpi=150)


def render_ratesym(paths, out):
    _, cols, rows = read_table(paths[0])
    beta = column(cols, rows, "beta")
    j_from = column(cols, rows, "j_from", int)
    j_to = column(cols, rows, "j_to", int)
    nu = column(cols, rows, "nu", int)
    rate = column(cols, rows, "rate")
    pairs = sorted({(a, b) for a, b in zip(j_to, j_from) if a != b})[:2]
    fig, axes = plt.subplots(1, max(len(pairs), 1), figsize=(9.0, 4.0),
                             squeeze=False)
    drew = False
    for ax, pair in zip(axes[0], pairs):
        for n in (1, 2):
            for sign, style in ((n, "-"), (-n, "--")):
                idx = [i for i in range(len(rows))
                       if (j_to[i], j_from[i]) == pair and nu[i] == sign
                       and rate[i] > 0.0]
                if not idx:
                    continue
                idx.sort(key=lambda i: beta[i])
                ax.loglog([beta[i] for i in idx], [rate[i] for i in idx],
                          style, marker=".", label=f"nu = {sign:+d}")
                drew = True
        ax.set_xlabel(r"$\beta$")
        ax.set_ylabel(f"rate into level {pair[0]} from {pair[1]}")
        ax.legend(fontsize=7)
    if not drew:
        raise SchemaError("no inelastic rates to draw")
    fig.tight_layout()
    fig.savefig(out, dpi=150)


KINDS = {
    "thermalization": render_thermalization,
    "ness": render_ness,
    "bound": render_bound,
    "convergence": render_convergence,
    "ratesym": render_ratesym,
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", required=True, choices=sorted(KINDS))
    parser.add_argument("--in", dest="inputs", required=True,
                        help="input CSV (comma-separated when a kind takes two)")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    paths = [Path(tok) for tok in args.inputs.split(",") if tok]
    try:
        KINDS[args.kind](paths, args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
