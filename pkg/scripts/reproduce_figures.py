#!/usr/bin/env python3
"""Run every bundled configuration and print the headline numbers.

    python scripts/reproduce_figures.py [--out figures] [--threads 4] [names ...]

Each configuration writes ``<out>/<name>/result.json`` and ``curve.tsv``.
"""
import argparse
import time

from qdsld.cli import run
from qdsld.config import bundled_config, load_config

CONFIGS = ("fig4", "fig5", "fig6", "fig7", "fig8", "fig10-synthetic", "passive-b20", "spectrum-demo")


def headline(name: str, res: dict) -> str:
    if name == "fig4":
        return f"R_c = {res['R_c']:.4f}, large-M limit {res['R_c_large_M']:.4f}"
    if name in ("fig5", "fig6"):
        return "R_c = " + ", ".join(f"{c['R_c']:.4f} (delta={c['delta']:g}, g={c['g']:g})" for c in res["cases"])
    if name == "fig7":
        return (f"approx vs exact: max deviation {max(res['approx_deviation']):.4f}, "
                f"max for R <= 0.4: {res['approx_deviation_max_R_le_0.4']:.4f}")
    if name == "fig8":
        return "; ".join(f"R={p['R']:g}: peak {p['peak_height']:.4g} at {p['peak_delta']:g}, FWHM {p['fwhm']:.4g}"
                         for p in res["profiles"])
    if name == "fig10-synthetic":
        return "; ".join(f"{k}: amplitude {f['amplitude']:.4g}, centre {f['center']:.6g}, width {f['width']:.4g}, "
                         f"residual {f['residual_per_point']:.3g}" for k, f in res["fits"].items())
    if name == "passive-b20":
        return f"width parameter {res['width_parameter']:g}, unitarity error {res['unitarity_max_error']:.2g}"
    if name == "spectrum-demo":
        width = res["fwhm_discrete"]
        return f"solver {res['solver']}, discrete FWHM " + ("n/a" if width is None else f"{width:.4g}")
    return ""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=CONFIGS)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    for name in args.names:
        t = time.perf_counter()
        doc = run(load_config(bundled_config(name)), f"{args.out}/{name}", args.threads)
        print(f"{name:16s} {time.perf_counter() - t:6.2f} s  {headline(name, doc['results'])}")


if __name__ == "__main__":
    main()
