"""Command-line front end.

    qdsld <scenario> --config <path> [--out <dir>] [--threads N]

Each run writes ``result.json`` (resolved parameters, solver diagnostics and
scalar results, keys sorted) and ``curve.tsv`` (one row per grid point).
Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O error.
Failures print a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import SCENARIOS, RunConfig, load_config
from .errors import (ConfigError, DataFormatError, NonMonotoneGridError, NoRootError,
                     PreconditionError, QdsldError)
from .fit import ModelFitSetup, fit_gaussian, fit_model, gaussian_spectrum, model_photon_numbers
from .model import PumpParams
from .multi import (integrate_to_steady, newton_steady, order_parameter_approx,
                    order_parameter_exact)
from .single import critical_pump_rate, no_se_branch, single_mode_steady
from .spectrum import (Spectrum, continuum_spectrum, discrete_spectrum, fwhm, linewidth,
                       passive_white_noise_spectrum, transmission_matrix)

CSV_HEADER = ("omega_rad_per_s", "power_au")


# ---------------------------------------------------------------- data ingestion

def ingest_spectrum(path) -> Spectrum:
    """Read a two-column CSV spectrum with header ``omega_rad_per_s,power_au``."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path}: not UTF-8 text") from exc
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
        raise DataFormatError(f"{path}: header must be {','.join(CSV_HEADER)}")
    omega, power = [], []
    for k, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise DataFormatError(f"{path}: row {k}: expected 2 columns, got {len(row)}")
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise DataFormatError(f"{path}: row {k}: non-numeric value in {row}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DataFormatError(f"{path}: row {k}: non-finite value")
        omega.append(x)
        power.append(y)
    if len(omega) < 4:
        raise DataFormatError(f"{path}: need at least 4 data rows, got {len(omega)}")
    omega = np.array(omega)
    bad = np.nonzero(np.diff(omega) <= 0)[0]
    if bad.size:
        # +3: one for the header, one for 1-based rows, one for the later sample
        raise NonMonotoneGridError(f"{path}: row {bad[0] + 3}: frequencies must be strictly increasing")
    return Spectrum(omega, np.array(power), {"source": str(path)})


# ---------------------------------------------------------------- solvers

def _solve(params, method, solver_cfg):
    if method == "analytic":
        if params.n_modes != 1 or params.n_classes != 1:
            raise PreconditionError("the analytic solver needs one mode and one dot class")
        sol = single_mode_steady(params.modes, params.dot, params.pump, params.wg, params.gamma_ref)
        return {"n": [sol.n_s], "n_total": sol.n_s}
    if method == "integrate":
        st = integrate_to_steady(params, tol=solver_cfg.tol)
    elif method == "newton":
        st = newton_steady(params, tol=min(solver_cfg.tol, 1e-11))
    elif method == "order-exact":
        st = order_parameter_exact(params)
    elif method == "order-approx":
        st = order_parameter_approx(params, solver_cfg.coupling_fraction)[1]
    else:  # pragma: no cover - rejected by the config layer
        raise ConfigError(f"unknown solver {method!r}")
    return {"n": st.n.tolist(), "n_total": st.n_total, "phi": st.phi, "w_s": np.atleast_1d(st.w_s).tolist(),
            "residual_norm": st.residual_norm, "iterations": st.iterations, "_steady": st}


def _public(d):
    return {k: v for k, v in d.items() if not k.startswith("_")}


def _rel(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def _pairwise(sols: dict) -> dict:
    out = {}
    for a, b in itertools.combinations(sols, 2):
        out[f"{a}|{b}"] = _rel(sols[a]["n_total"], sols[b]["n_total"])
    return out


def _pmap(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- scenarios

def _single_steady(cfg: RunConfig, threads):
    params = cfg.system()
    if params.n_modes != 1 or params.n_classes != 1:
        raise ConfigError("single-steady needs one mode and one [dot] table")
    mode, dot, M = params.modes, params.dot, cfg.pump.M
    Rs = cfg.sweep.grid() if cfg.sweep else np.array([cfg.pump.R])

    def point(R):
        pump = PumpParams(float(R), M)
        return [float(R), single_mode_steady(mode, dot, pump, cfg.wg, cfg.gamma_ref).n_s,
                no_se_branch(mode, dot, pump, cfg.wg, cfg.gamma_ref)]

    rows = _pmap(point, Rs, threads)
    try:
        Rc = critical_pump_rate(mode, dot, cfg.wg, M, cfg.gamma_ref)
        Rc_inf = critical_pump_rate(mode, dot, cfg.wg, M, cfg.gamma_ref, threshold_term=False)
    except NoRootError as exc:
        Rc = Rc_inf = None
        note = str(exc)
    else:
        note = None
    res = {"R_c": Rc, "R_c_large_M": Rc_inf, "points": len(rows)}
    if note:
        res["note"] = note
    return res, ["R_over_gamma", "n_s", "n_noSE"], rows


def _threshold(cfg: RunConfig, threads):
    t = cfg.threshold
    if len(cfg.dots) != 1:
        raise ConfigError("threshold needs a single [dot] table")
    dot, M = cfg.dots[0], cfg.pump.M
    cases = list(itertools.product(t.delta, t.g))

    def one(case):
        delta, g = case
        return {"delta": delta, "g": g,
                "R_c": critical_pump_rate((g, delta), dot, cfg.wg, M, cfg.gamma_ref),
                "R_c_large_M": critical_pump_rate((g, delta), dot, cfg.wg, M, cfg.gamma_ref,
                                                  threshold_term=False)}

    results = _pmap(one, cases, threads)
    Rs = np.linspace(0.0, t.R_stop, t.R_num)

    def row(R):
        pump = PumpParams(float(R), M)
        return [float(R)] + [single_mode_steady((g, d), dot, pump, cfg.wg, cfg.gamma_ref).n_s for d, g in cases]

    rows = _pmap(row, Rs, threads)
    header = ["R_over_gamma"] + [f"n_s[delta={d:g},g={g:g}]" for d, g in cases]
    return {"cases": results}, header, rows


def _multi_steady(cfg: RunConfig, threads):
    params = cfg.system()
    methods = cfg.solver.methods
    sols = dict(zip(methods, _pmap(lambda m: _solve(params, m, cfg.solver), methods, threads)))
    G = params.coop()
    rows = []
    for i in range(params.n_modes):
        rows.append([i, params.modes.delta[i], params.modes.g[i], float(G[:, i].mean())]
                    + [sols[m]["n"][i] for m in methods])
    header = ["mode", "delta_over_gamma", "g_over_gamma", "G"] + [f"n[{m}]" for m in methods]
    res = {"solvers": {m: _public(s) for m, s in sols.items()}, "pairwise_relative_deviation": _pairwise(sols)}
    return res, header, rows


def _sweep(cfg: RunConfig, threads):
    methods = cfg.solver.methods
    Rs = cfg.sweep.grid()
    base = cfg.system()

    def point(R):
        params = base.with_pump(float(R))
        return {m: _solve(params, m, cfg.solver) for m in methods}

    pts = _pmap(point, Rs, threads)
    per_R = []
    for R, sols in zip(Rs, pts):
        entry = {"R": float(R), "n_total": {m: s["n_total"] for m, s in sols.items()},
                 "pairwise_relative_deviation": _pairwise(sols)}
        per_R.append(entry)
    res = {"points": per_R}
    if "order-exact" in methods and "order-approx" in methods:
        dev = [_rel(s["order-approx"]["n_total"], s["order-exact"]["n_total"]) for s in pts]
        res["approx_deviation"] = dev
        low = [d for R, d in zip(Rs, dev) if R <= 0.4]
        res["approx_deviation_max_R_le_0.4"] = max(low) if low else None

    if cfg.sweep.layout == "totals":
        header = ["R_over_gamma"] + [f"n_total[{m}]" for m in methods]
        rows = [[float(R)] + [s[m]["n_total"] for m in methods] for R, s in zip(Rs, pts)]
        return res, header, rows

    delta = base.modes.delta
    profiles = []
    rows = []
    for R, sols in zip(Rs, pts):
        n0 = np.asarray(sols[methods[0]]["n"])
        k = int(np.argmax(n0))
        try:
            width = fwhm(delta, n0)
        except QdsldError:
            width = None
        profiles.append({"R": float(R), "peak_height": float(n0[k]), "peak_delta": float(delta[k]),
                         "fwhm": width})
        for i in range(len(delta)):
            rows.append([float(R), i, float(delta[i])] + [sols[m]["n"][i] for m in methods])
    res["profiles"] = profiles
    header = ["R_over_gamma", "mode", "delta_over_gamma"] + [f"n[{m}]" for m in methods]
    return res, header, rows


def _spectrum(cfg: RunConfig, threads):
    params = cfg.system()
    sp = cfg.spectrum
    method = next((m for m in cfg.solver.methods if m != "order-approx"), "order-exact")
    sol = _solve(params, method, cfg.solver)
    grid = sp.grid()
    if method == "analytic":
        sol["_steady"] = order_parameter_exact(params)
    steady = sol["_steady"]
    widths = linewidth(params, steady, sp.linewidth_model)
    S = discrete_spectrum(steady, params, grid, widths, sp.units)
    header = ["omega", "S_discrete"]
    cols = [grid, S.S]
    res = {"solver": method, "solution": _public(sol), "linewidths": widths.tolist(),
           "mode_frequencies": S.meta["mode_frequencies"]}
    try:
        res["fwhm_discrete"] = fwhm(grid, S.S)
    except QdsldError:
        res["fwhm_discrete"] = None
    if sp.continuum:
        centres = np.asarray(S.meta["mode_frequencies"])
        C = continuum_spectrum(centres, steady.n, float(np.mean(widths)),
                               mode_spacing=cfg.wg.mode_spacing, out_grid=grid)
        header.append("S_continuum")
        cols.append(C.S)
    return res, header, [list(r) for r in zip(*cols)]


def _passive(cfg: RunConfig, threads):
    p, sp = cfg.passive, cfg.spectrum
    grid = sp.grid()
    S = passive_white_noise_spectrum(p.mode_frequencies, p.gamma, p.n, grid, sp.units, cfg.wg)
    rng = np.random.default_rng(p.seed)
    worst = 0.0
    for _ in range(p.unitarity_draws):
        w, wi = rng.uniform(-10, 10, 2)
        rates = rng.uniform(0, 5, 6)
        rates[[2, 4]] = 0.0
        T = transmission_matrix(w, wi, rates, rng.uniform(0, 2 * np.pi, 6))
        worst = max(worst, float(np.max(np.abs(T.conj().T @ T - np.eye(6)))))
    res = {"width_parameter": S.meta["width"], "unitarity_max_error": worst,
           "unitarity_draws": p.unitarity_draws}
    if len(p.mode_frequencies) == 1:
        try:
            res["fwhm_measured"] = fwhm(grid, S.S)
        except QdsldError:
            res["fwhm_measured"] = None
    return res, ["omega", "S"], [list(r) for r in zip(grid, S.S)]


def _fit_setup(cfg: RunConfig) -> ModelFitSetup:
    kw = {"wg": cfg.wg, "n_modes": cfg.fit.n_modes, "gamma_ref": cfg.gamma_ref}
    if cfg.dots:
        if len(cfg.dots) != 1:
            raise ConfigError("the model fit needs a single [dot] table")
        kw["dot"] = cfg.dots[0]
    if cfg.pump is not None:
        kw["pump"] = cfg.pump
    return ModelFitSetup(**kw)


def _fit(cfg: RunConfig, threads):
    f = cfg.fit
    setup = _fit_setup(cfg)
    if f.data is not None:
        path = Path(f.data)
        data = ingest_spectrum(path if path.is_absolute() else Path(cfg.base_dir) / path)
    else:
        s = f.synthetic
        omega = np.linspace(s.center - s.span * s.width, s.center + s.span * s.width, s.points)
        if s.kind == "model":
            S = s.scale * model_photon_numbers(omega, s.amplitude, s.center, s.width, setup)
        else:
            S = s.scale * gaussian_spectrum(omega, s.amplitude, s.center, s.width)
        data = Spectrum(omega, S, {"source": f"synthetic-{s.kind}"})

    def run(kind):
        r = fit_gaussian(data) if kind == "gaussian" else fit_model(data, setup, branch=f.branch)
        return kind, r

    fits = dict(_pmap(run, f.fits, threads))
    res = {"data_points": len(data), "fits": {}}
    for kind, r in fits.items():
        entry = {"amplitude": r.profile.amplitude, "center": r.profile.center, "width": r.profile.width,
                 "residual_per_point": r.residual_per_point, "iterations": r.iterations}
        if r.scale is not None:
            entry["scale"] = r.scale
        if f.synthetic is not None and f.synthetic.kind == kind:
            s = f.synthetic
            entry["relative_error"] = {"amplitude": _rel(r.profile.amplitude, s.amplitude),
                                       "center": _rel(r.profile.center, s.center),
                                       "width": _rel(r.profile.width, s.width)}
        res["fits"][kind] = entry
    header = ["omega", "data"] + [f"fit[{k}]" for k in f.fits]
    cols = [data.omega, data.S] + [fits[k].model for k in f.fits]
    return res, header, [list(r) for r in zip(*cols)]


RUNNERS = {
    "single-steady": _single_steady,
    "threshold": _threshold,
    "multi-steady": _multi_steady,
    "sweep": _sweep,
    "spectrum": _spectrum,
    "passive": _passive,
    "fit": _fit,
}


# ---------------------------------------------------------------- output

def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _cell(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def run(cfg: RunConfig, out_dir, threads: int = 1) -> dict:
    """Execute a scenario and write ``result.json`` and ``curve.tsv`` into ``out_dir``."""
    results, header, rows = RUNNERS[cfg.scenario](cfg, max(1, int(threads)))
    doc = _finite({"scenario": cfg.scenario, "config": cfg.echo(), "results": results})
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "result.json").write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n",
                                         encoding="utf-8")
        lines = ["\t".join(header)] + ["\t".join(_cell(v) for v in r) for r in rows]
        (out / "curve.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot write results to {out}: {exc.strerror}") from exc
    return doc


def _fail(exc: BaseException, code: int, kind: str | None = None) -> int:
    record = {"error": kind or type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qdsld", description="Quantum-dot superluminescent diode model runs.")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", required=True, help="TOML configuration file")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for grid points")
    args = ap.parse_args(argv)
    if args.threads < 1:
        return _fail(ConfigError("--threads must be at least 1"), 2)
    try:
        cfg = load_config(args.config, args.scenario)
        run(cfg, args.out, args.threads)
    except QdsldError as exc:
        return _fail(exc, exc.exit_code)
    except OSError as exc:
        return _fail(exc, 4)
    except (ValueError, ArithmeticError) as exc:
        return _fail(exc, 3)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
