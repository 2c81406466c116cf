#!/usr/bin/env python3
"""Plot coverage curves from a hetnet-coverage output directory.

Usage: plot_coverage.py OUT_DIR [--output FILE]

Reads comparison.csv when both engines ran, otherwise whichever of
analytic_*.csv / mc_*.csv exist. The x axis is the first column, so gamma
sweeps and density sweeps are handled alike.
"""

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def x_key(rows):
    return "density_per_km2" if "density_per_km2" in rows[0] else "gamma_db"


def series_from_comparison(rows):
    xk = x_key(rows)
    out = defaultdict(lambda: {"x": [], "an": [], "an_se": [], "mc": [], "mc_se": []})
    for r in rows:
        s = out[r["scope"]]
        s["x"].append(float(r[xk]))
        s["an"].append(float(r["analytic"]))
        s["an_se"].append(float(r["analytic_se"]))
        s["mc"].append(float(r["montecarlo"]))
        s["mc_se"].append(float(r["montecarlo_se"]))
    return xk, out


def series_from_tables(out_dir, prefix):
    """Per-tier and network curves from one engine's tables."""
    tier_path, net_path = out_dir / f"{prefix}_tier.csv", out_dir / f"{prefix}_network.csv"
    if not tier_path.exists():
        return None, {}
    tiers = read_rows(tier_path)
    xk = x_key(tiers)
    out = defaultdict(lambda: {"x": [], "y": [], "se": []})
    seen = set()
    for r in tiers:
        key = (r["tier"], r[xk])
        if key in seen:
            continue
        seen.add(key)
        s = out[f"tier{r['tier']}"]
        s["x"].append(float(r[xk]))
        s["y"].append(float(r["pc_tier"]))
        s["se"].append(float(r["pc_tier_se"]))
    for r in read_rows(net_path):
        s = out["network"]
        s["x"].append(float(r[xk]))
        s["y"].append(float(r["pc_network"]))
        s["se"].append(float(r["pc_se"]))
    return xk, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--output", type=Path, help="image path (default OUT_DIR/coverage.png)")
    args = ap.parse_args()
    output = args.output or args.out_dir / "coverage.png"

    fig, ax = plt.subplots(figsize=(7, 4.5))
    comparison = args.out_dir / "comparison.csv"
    if comparison.exists():
        xk, series = series_from_comparison(read_rows(comparison))
        for i, (scope, s) in enumerate(sorted(series.items())):
            color = f"C{i}"
            ax.plot(s["x"], s["an"], color=color, label=f"{scope} analytic")
            ax.errorbar(s["x"], s["mc"], yerr=[2 * e for e in s["mc_se"]], fmt="o", ms=3,
                        color=color, mfc="none", label=f"{scope} simulation")
    else:
        xk = None
        for prefix, style in (("analytic", "-"), ("mc", "o--")):
            k, series = series_from_tables(args.out_dir, prefix)
            xk = xk or k
            for i, (scope, s) in enumerate(sorted(series.items())):
                ax.plot(s["x"], s["y"], style, color=f"C{i}", ms=3, label=f"{scope} {prefix}")
        if xk is None:
            sys.exit(f"no coverage tables in {args.out_dir}")

    ax.set_xlabel("pico density (BS/km²)" if xk == "density_per_km2" else "SIR threshold (dB)")
    ax.set_ylabel("coverage probability")
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    print(output)


if __name__ == "__main__":
    main()
