"""Figure reproductions and generic sweeps, written as CSV."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import analytical, montecarlo
from ..config import SharingMode
from .config import ExperimentSpec

FIG2_T = tuple(float(t) for t in range(-10, 31))
FIG3_ETA = (0.1, 0.3, 0.5, 0.7, 1.0)
COMBOS = tuple((eps, lam) for eps in (0.6, 0.8) for lam in (1e-6, 5e-6))
RATE_GRID = tuple(float(x) for x in np.logspace(4, 8, 41))
RATE_MARK = 1e5
GAP_LIMIT = 0.03
_ENGINE_TAG = {"analytical": "analytical", "montecarlo": "montecarlo"}


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.9g}"


def write_csv(path, variable, rows):
    """Rows are ``(x, link, mode, engine, value, ci)``; ``ci`` may be None."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([variable, "link", "mode", "engine", "value", "ci"])
        for x, link, mode, engine, value, ci in rows:
            w.writerow([fmt(x), link, mode, engine, fmt(value), fmt(ci)])
    return path


def _map(fn, items, threads=None):
    items = list(items)
    threads = threads or montecarlo.thread_count()
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def evaluate(cfg, link, xs, kind, engine, n_drops, seed):
    """Coverage (``kind="T"``, dB thresholds) or rate CCDF (``kind="rate"``) on ``xs``.

    Returns ``(values, ci)``; ``ci`` is None for the analytical engine.
    """
    xs = np.asarray(xs, dtype=float)
    if engine == "analytical":
        if kind == "rate":
            return np.atleast_1d(analytical.rate_ccdf(cfg, link, xs)), None
        return np.atleast_1d(analytical.coverage(cfg, link, xs)), None
    sinr = montecarlo.simulate(cfg, link, n_drops, seed, threads=1).sinr
    t_db = analytical.rate_to_sinr_db(cfg, link, xs) if kind == "rate" else xs
    est = montecarlo.coverage_from_sinr(sinr, t_db, seed)
    return np.array([e.mean for e in est]), np.array([e.ci_halfwidth_95 for e in est])


def _curve_rows(cfg, link, xs, kind, engines, n_drops, seed):
    rows = []
    for engine in engines:
        vals, ci = evaluate(cfg, link, xs, kind, engine, n_drops, seed)
        for i, x in enumerate(xs):
            rows.append((x, link, cfg.sharing_mode.value, _ENGINE_TAG[engine], vals[i], None if ci is None else ci[i]))
    return rows


def max_gap(rows):
    """Largest |analytical - Monte Carlo| over matching (x, link, mode) rows."""
    by_key = {}
    for x, link, mode, engine, value, _ in rows:
        by_key.setdefault((x, link, mode), {})[engine] = value
    gaps = [abs(v["analytical"] - v["montecarlo"]) for v in by_key.values() if len(v) == 2]
    return max(gaps) if gaps else float("nan")


def run_fig2(spec: ExperimentSpec):
    """Underlay coverage with every UAV on every PRB; returns ``(paths, gap)``."""
    cfg = spec.scenario.replace(eta_u=1.0, sharing_mode=SharingMode.UNDERLAY)

    def job(link):
        return _curve_rows(cfg, link, FIG2_T, "T", spec.engines, spec.n_drops, spec.seed)

    results = _map(job, ("u2u", "gue_ul"))
    paths = [write_csv(f"{spec.output}_fig2_{link}.csv", "T_db", rows) for link, rows in zip(("u2u", "gue_ul"), results)]
    return paths, max(max_gap(r) for r in results) if len(spec.engines) == 2 else float("nan")


def _combo_tag(eps, lam):
    return f"eps{eps:g}_lam{lam:g}"


def run_fig3(spec: ExperimentSpec):
    """Coverage at -5 dB versus eta_u for each (epsilon_u, lambda_u)."""
    jobs = [(eps, lam, eta, link) for eps, lam in COMBOS for eta in FIG3_ETA for link in ("u2u", "gue_ul")]

    def job(item):
        eps, lam, eta, link = item
        cfg = spec.scenario.replace(epsilon_u=eps, lambda_u=lam, eta_u=eta, sharing_mode=SharingMode.UNDERLAY)
        rows = _curve_rows(cfg, link, [-5.0], "T", spec.engines, spec.n_drops, spec.seed)
        return [(eta,) + r[1:] for r in rows]

    results = _map(job, jobs)
    paths = []
    for eps, lam in COMBOS:
        rows = [r for item, res in zip(jobs, results) if item[:2] == (eps, lam) for r in res]
        rows.sort(key=lambda r: (r[1], r[3], r[0]))
        paths.append(write_csv(f"{spec.output}_fig3_{_combo_tag(eps, lam)}.csv", "eta_u", rows))
    return paths


def run_fig4_fig5(spec: ExperimentSpec, eta_u=0.1):
    """Rate CCDFs (GUE uplink: fig4, U2U: fig5) in both sharing modes, plus 100 kbps marks."""
    modes = (SharingMode.UNDERLAY, SharingMode.OVERLAY)
    jobs = [(eps, lam, mode, link) for eps, lam in COMBOS for mode in modes for link in ("gue_ul", "u2u")]

    def job(item):
        eps, lam, mode, link = item
        cfg = spec.scenario.replace(epsilon_u=eps, lambda_u=lam, eta_u=eta_u, sharing_mode=mode)
        return _curve_rows(cfg, link, RATE_GRID, "rate", spec.engines, spec.n_drops, spec.seed)

    results = _map(job, jobs)
    paths, marks = [], []
    for fig, link in (("fig4", "gue_ul"), ("fig5", "u2u")):
        for eps, lam in COMBOS:
            rows = [r for item, res in zip(jobs, results) if item[0:2] == (eps, lam) and item[3] == link for r in res]
            paths.append(write_csv(f"{spec.output}_{fig}_{_combo_tag(eps, lam)}.csv", "rate_bps", rows))
            marks += [(fig, eps, lam) + r[1:] for r in rows if r[0] == RATE_MARK]
    mark_path = Path(f"{spec.output}_fig45_marks.csv")
    with mark_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["figure", "epsilon_u", "lambda_u", "link", "mode", "engine", "value", "ci"])
        for fig, eps, lam, link, mode, engine, value, ci in marks:
            w.writerow([fig, fmt(eps), fmt(lam), link, mode, engine, fmt(value), fmt(ci)])
    paths.append(mark_path)
    return paths


def sweep(spec: ExperimentSpec):
    """One-variable sweep over ``spec.sweep_variable`` for every configured link and engine."""
    var = spec.sweep_variable
    if var in ("T", "rate_T"):
        kind = "T" if var == "T" else "rate"
        rows = []
        for res in _map(lambda link: _curve_rows(spec.scenario, link, spec.sweep_values, kind, spec.engines, spec.n_drops, spec.seed), spec.links):
            rows += res
        name = "T_db" if var == "T" else "rate_bps"
        return [write_csv(f"{spec.output}_sweep_{var}.csv", name, rows)]

    jobs = [(v, link) for v in spec.sweep_values for link in spec.links]

    def job(item):
        v, link = item
        cfg = spec.scenario.replace(**{var: v})
        rows = _curve_rows(cfg, link, [spec.threshold_db], "T", spec.engines, spec.n_drops, spec.seed)
        return [(v,) + r[1:] for r in rows]

    rows = [r for res in _map(job, jobs) for r in res]
    rows.sort(key=lambda r: (r[1], r[3], r[0]))
    return [write_csv(f"{spec.output}_sweep_{var}.csv", var, rows)]
