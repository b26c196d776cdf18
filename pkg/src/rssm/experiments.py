"""Reproducible experiment pipelines behind the command line subcommands.

Each ``run_*`` function takes a validated :class:`ExperimentConfig` and an
output directory, writes headered CSV files (first line carries the config
digest) and returns the computed results.  Trials are mapped over worker
threads but always merged in trial order, so the bytes written depend only
on the configuration.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .config import ExperimentConfig
from .ifs import similarity_dimension, typical_dimensions
from .measure import BernoulliMeasure, local_dimension_exponent, lq_dimension
from .perturbation import PerturbationDistribution, admissible_for
from .realization import atomic_approximation, attractor_cover, trial_seed
from .regularity import (BALL, FOURIER, SMOOTHED, DensityEstimate, density_estimate, hoelder_exponent_estimate,
                         interior_candidate, lebesgue_upper_bound, moment_scaling)
from .spectral import (SpectralProfile, empirical_characteristic, mean_characteristic,
                       pair_characteristic, truncated_inverse_densities)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.16e}"
    if v is None:
        return ""
    return str(v)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence], digest: str) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_sha256={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _prepare(cfg: ExperimentConfig, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write_resolved(out)
    return out


def run_dims(cfg: ExperimentConfig, out) -> dict:
    out = _prepare(cfg, out)
    ifs, mu = cfg.ifs, cfg.measure
    s = similarity_dimension(ifs)
    dim_set, dim_measure = typical_dimensions(ifs, mu)
    s_prime, _ = local_dimension_exponent(mu, ifs)
    report = {"similarity_dimension": s, "typical_set_dimension": dim_set,
              "typical_measure_dimension": dim_measure, "s_prime": s_prime}
    for q in cfg.raw["lq_orders"]:
        report[f"lq_dimension_q{q:g}"] = lq_dimension(mu, ifs, q)
    write_rows(out / "dims.csv", ["quantity", "value"], report.items(), cfg.digest)
    return report


def run_check(cfg: ExperimentConfig, out) -> dict:
    out = _prepare(cfg, out)
    ifs, mu, dist = cfg.ifs, cfg.measure, cfg.perturbation
    s = similarity_dimension(ifs)
    s_prime, local_ok = local_dimension_exponent(mu, ifs)
    report = {
        "similarity_dimension": s,
        "s_prime": s_prime,
        "local_dimension_above_one": local_ok,
        "decay_order": dist.decay_order,
        "fourier_decay_admissible": admissible_for(dist, s_prime),
        "interior_regime": s > 1 and admissible_for(dist, s),
    }
    write_rows(out / "check.csv", ["assumption", "value"], report.items(), cfg.digest)
    return report


def run_spectrum(cfg: ExperimentConfig, out) -> dict:
    """Oracle ``G``/``H`` against Monte Carlo means over independent realizations."""
    out = _prepare(cfg, out)
    ifs, mu, dist = cfg.ifs, cfg.measure, cfg.perturbation
    tol, depth, budget = cfg.raw["tol"], cfg.raw["depth"], cfg.raw["atom_budget"]
    freqs = np.asarray(cfg.raw["frequencies"], dtype=float)
    pairs = np.asarray(cfg.raw["frequency_pairs"], dtype=float).reshape(-1, 2)
    needed = np.unique(np.concatenate([freqs, pairs.ravel()]))

    def trial(k):
        atomic = atomic_approximation(ifs, mu, dist, trial_seed(cfg.seed, k), depth, budget)
        return empirical_characteristic(atomic, needed)

    values = np.array(_map(trial, range(cfg.trials), cfg.raw["threads"]))
    lookup = {x: i for i, x in enumerate(needed)}
    single = values[:, [lookup[x] for x in freqs]]
    prod = values[:, [lookup[a] for a in pairs[:, 0]]] * values[:, [lookup[b] for b in pairs[:, 1]]]

    def stats(samples):
        mean = samples.mean(axis=0)
        se = np.sqrt(np.mean(np.abs(samples - mean) ** 2, axis=0) / samples.shape[0])
        return mean, se

    g = mean_characteristic(ifs, mu, dist, freqs, tol)
    h = np.array([pair_characteristic(ifs, mu, dist, a, b, tol) for a, b in pairs])
    g_mean, g_se = stats(single)
    h_mean, h_se = stats(prod)
    oracle = SpectralProfile(freqs, g, "mean_oracle")
    empirical = SpectralProfile(freqs, g_mean, f"empirical_mean(base_seed={cfg.seed},trials={cfg.trials})")
    with open(out / "spectrum.csv", "w", newline="") as fh:
        fh.write(f"# config_sha256={cfg.digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["xi", "re", "im", "provenance"])
        for prof in (oracle, empirical):
            for xi, v in zip(prof.frequencies, prof.values):
                writer.writerow([_fmt(xi), _fmt(v.real), _fmt(v.imag), prof.provenance])
    write_rows(out / "spectrum_check.csv",
               ["xi", "oracle_re", "oracle_im", "mc_re", "mc_im", "std_error", "z"],
               [(xi, o.real, o.imag, m.real, m.imag, se, abs(m - o) / se)
                for xi, o, m, se in zip(freqs, g, g_mean, g_se)], cfg.digest)
    write_rows(out / "spectrum_pairs.csv",
               ["xi1", "xi2", "oracle_re", "oracle_im", "mc_re", "mc_im", "std_error", "z"],
               [(a, b, o.real, o.imag, m.real, m.imag, se, abs(m - o) / se)
                for (a, b), o, m, se in zip(pairs, h, h_mean, h_se)], cfg.digest)
    return {"frequencies": freqs, "G": g, "G_mc": g_mean, "G_se": g_se,
            "pairs": pairs, "H": h, "H_mc": h_mean, "H_se": h_se}


def _realization_grid(cfg, ifs, dist, seed, depth):
    cover = attractor_cover(ifs, dist, seed, depth, cfg.raw["atom_budget"])
    lo, hi = cover.intervals[0, 0], cover.intervals[-1, 1]
    return np.linspace(lo, hi, cfg.raw["grid"]["points"])


def run_density(cfg: ExperimentConfig, out) -> dict:
    """All three density estimates of the base-seed realization."""
    out = _prepare(cfg, out)
    ifs, mu, dist = cfg.ifs, cfg.measure, cfg.perturbation
    depth = cfg.raw["depth"]
    atomic = atomic_approximation(ifs, mu, dist, cfg.seed, depth, cfg.raw["atom_budget"])
    grid = _realization_grid(cfg, ifs, dist, cfg.seed, depth)
    r = cfg.raw["density"]["radius_factor"] * atomic.tail_radius
    results = {BALL: density_estimate(atomic, grid, BALL, r),
               SMOOTHED: density_estimate(atomic, grid, SMOOTHED, r)}
    results[BALL].write_csv(out / "density_ball.csv", cfg.digest)
    results[SMOOTHED].write_csv(out / "density_smoothed.csv", cfg.digest)
    cutoffs = cfg.raw["density"]["cutoffs"]
    for cutoff, values in zip(cutoffs, truncated_inverse_densities(atomic, grid, cutoffs)):
        est = DensityEstimate(grid, values, FOURIER, cutoff, atomic.seed, atomic.depth)
        est.write_csv(out / f"density_fourier_{cutoff:g}.csv", cfg.digest)
        results[f"{FOURIER}_{cutoff:g}"] = est
    return results


def carleson_distances(cfg: ExperimentConfig, seed: int) -> list[float]:
    """Sup-grid distance between the Fourier and ball estimates, per cutoff."""
    ifs, mu, dist = cfg.ifs, cfg.measure, cfg.perturbation
    depth = cfg.raw["depth"]
    atomic = atomic_approximation(ifs, mu, dist, seed, depth, cfg.raw["atom_budget"])
    grid = _realization_grid(cfg, ifs, dist, seed, depth)
    ball = density_estimate(atomic, grid, BALL,
                            cfg.raw["density"]["radius_factor"] * atomic.tail_radius)
    fourier = truncated_inverse_densities(atomic, grid, cfg.raw["density"]["cutoffs"])
    return [float(np.max(np.abs(f - ball.values))) for f in fourier]


def run_carleson(cfg: ExperimentConfig, out) -> dict:
    out = _prepare(cfg, out)
    seeds = [trial_seed(cfg.seed, k) for k in range(cfg.trials)]
    dists = np.array(_map(lambda s: carleson_distances(cfg, s), seeds, cfg.raw["threads"]))
    cutoffs = cfg.raw["density"]["cutoffs"]
    write_rows(out / "carleson.csv", ["trial", "seed", "cutoff", "sup_distance"],
               [(k, s, c, dists[k, j]) for k, s in enumerate(seeds)
                for j, c in enumerate(cutoffs)], cfg.digest)
    return {"cutoffs": cutoffs, "distances": dists, "median": np.median(dists, axis=0)}


def _hoelder_trial(cfg: ExperimentConfig, seed: int) -> dict:
    ifs, mu, dist = cfg.ifs, cfg.measure, cfg.perturbation
    depth = cfg.raw["depth"]
    atomic = atomic_approximation(ifs, mu, dist, seed, depth, cfg.raw["atom_budget"])
    grid = _realization_grid(cfg, ifs, dist, seed, depth)
    r = cfg.raw["density"]["radius_factor"] * atomic.tail_radius
    row = {"seed": seed}
    for method in (BALL, SMOOTHED):
        est = density_estimate(atomic, grid, method, r)
        h = hoelder_exponent_estimate(est)
        row[method] = {"max": float(est.values.max()), "median": float(np.median(est.values)),
                       "exponent": h.exponent, "residual": h.residual, "flat": h.flat}
    return row


def run_hoelder(cfg: ExperimentConfig, out) -> list[dict]:
    out = _prepare(cfg, out)
    seeds = [trial_seed(cfg.seed, k) for k in range(cfg.trials)]
    rows = _map(lambda s: _hoelder_trial(cfg, s), seeds, cfg.raw["threads"])
    write_rows(out / "hoelder.csv",
               ["trial", "seed", "method", "max", "median", "exponent", "residual", "flat"],
               [(k, row["seed"], m, row[m]["max"], row[m]["median"], row[m]["exponent"],
                 row[m]["residual"], row[m]["flat"])
                for k, row in enumerate(rows) for m in (BALL, SMOOTHED)], cfg.digest)
    return rows


def interior_scan(ifs, dist: PerturbationDistribution, seed: int, depths: Sequence[int],
                  budget: int) -> list[dict]:
    """Lebesgue bounds and interior candidates for growing prefixes of ``depths``."""
    covers = [attractor_cover(ifs, dist, seed, n, budget) for n in depths]
    rows = []
    for k, cover in enumerate(covers):
        interval, certified = interior_candidate(covers[:k + 1])
        rows.append({"depth": cover.depth, "lebesgue_bound": lebesgue_upper_bound(cover),
                     "components": len(cover.intervals), "candidate": interval,
                     "certified_depth": certified})
    return rows


def _interior_rows(seeds, scans):
    for k, (seed, scan) in enumerate(zip(seeds, scans)):
        for row in scan:
            lo, hi = row["candidate"] if row["candidate"] else (None, None)
            yield (k, seed, row["depth"], row["lebesgue_bound"], row["components"], lo, hi,
                   row["certified_depth"])


_INTERIOR_HEADER = ["trial", "seed", "depth", "lebesgue_bound", "components",
                    "candidate_lo", "candidate_hi", "certified_depth"]


def run_interior(cfg: ExperimentConfig, out) -> list[list[dict]]:
    out = _prepare(cfg, out)
    ifs, dist = cfg.ifs, cfg.perturbation
    seeds = [trial_seed(cfg.seed, k) for k in range(cfg.trials)]
    scans = _map(lambda s: interior_scan(ifs, dist, s, cfg.raw["depths"], cfg.raw["atom_budget"]),
                 seeds, cfg.raw["threads"])
    write_rows(out / "interior.csv", _INTERIOR_HEADER,
               _interior_rows(seeds, scans), cfg.digest)
    return scans


def moment_pairs(cfg: ExperimentConfig) -> list[tuple[float, float]]:
    m = cfg.raw["moments"]
    seps = np.geomspace(m["separations"]["min"], m["separations"]["max"], m["separations"]["count"])
    return [(m["center"], m["center"] + s) for s in seps]


def run_moments(cfg: ExperimentConfig, out):
    out = _prepare(cfg, out)
    m = cfg.raw["moments"]
    pairs = moment_pairs(cfg)
    res = moment_scaling(cfg.ifs, cfg.measure, cfg.perturbation, pairs, m["p"], cfg.trials,
                         cfg.raw["depth"], m["cutoff"], cfg.seed, m["bootstrap"],
                         cfg.raw["atom_budget"])
    write_rows(out / "moments.csv", ["a", "b", "separation", "moment"],
               [(a, b, s, v) for (a, b), s, v in zip(pairs, res.separations, res.moments)],
               cfg.digest)
    write_rows(out / "moments_fit.csv", ["alpha", "intercept", "ci_low", "ci_high", "p", "trials"],
               [(res.alpha, res.intercept, res.ci[0], res.ci[1], m["p"], cfg.trials)], cfg.digest)
    return res


def run_controls(cfg: ExperimentConfig, out) -> dict:
    """Negative controls: an ``s < 1`` system and the uniform perturbation law."""
    out = _prepare(cfg, out)
    ctl = cfg.raw["controls"]
    neg_ifs = cfg.control_ifs
    dist = cfg.perturbation
    seeds = [trial_seed(cfg.seed, k) for k in range(cfg.trials)]
    scans = _map(lambda s: interior_scan(neg_ifs, dist, s, ctl["depths"], cfg.raw["atom_budget"]),
                 seeds, cfg.raw["threads"])
    write_rows(out / "controls_small_dimension.csv", _INTERIOR_HEADER,
               _interior_rows(seeds, scans), cfg.digest)
    ifs = cfg.ifs
    s_prime, _ = local_dimension_exponent(BernoulliMeasure.natural(ifs), ifs)
    uniform = PerturbationDistribution.uniform(ctl["uniform_half_width"])
    report = {
        "small_dimension_s": similarity_dimension(neg_ifs),
        "small_dimension_expected_ratio": neg_ifs.n_maps * neg_ifs.ratio_max,
        "uniform_s_prime": s_prime,
        "uniform_decay_order": uniform.decay_order,
        "uniform_admissible": admissible_for(uniform, s_prime),
    }
    write_rows(out / "controls_summary.csv", ["quantity", "value"], report.items(), cfg.digest)
    return {"scans": scans, "summary": report}


SUBCOMMANDS = {
    "dims": run_dims,
    "check": run_check,
    "spectrum": run_spectrum,
    "density": run_density,
    "carleson": run_carleson,
    "hoelder": run_hoelder,
    "moments": run_moments,
    "interior": run_interior,
    "controls": run_controls,
}
