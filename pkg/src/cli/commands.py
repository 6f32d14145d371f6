# src/cli/commands.py

import json
import logging
import math
import sys

import numpy as np

from src.cli import checks, reports, workers
from src.cli.config import RunConfig
from src.core import clt, exact, ldp, sampler, tails
from src.core.errors import GcdLabError, UsageError
from src.core.primes import COPRIME_PAIR, cached_prime_table, euler_product, prime_count
from src.core.settings import SettingsManager

logger = logging.getLogger(__name__)


def _euler_cutoff(settings, table):
    return min(int(settings.sieve["euler_cutoff"]), table.limit)


def _single(values, name):
    if len(values) != 1:
        raise UsageError(f"--{name} takes a single value for this command, got {values}.")
    return values[0]


def run_lln(config, table, settings):
    rows = []
    for n in config.n:
        count = config.count or n
        batch = sampler.sample_uniform(n, count, config.seed)
        for ell in config.ell:
            pairs = sampler.gcd_pair_count(batch, ell, table)
            empirical = pairs / float(count) ** 2
            reference = 6.0 / (math.pi ** 2 * ell ** 2)
            rows.append({
                "n": n, "count": count, "ell": ell, "pairs": pairs,
                "empirical": empirical, "reference": reference,
                "exact": float(exact.exact_pair_prob(n, ell, table)),
                "abs_error": abs(empirical - reference),
            })
            logger.info("lln n=%d ell=%d: %.6f vs %.6f", n, ell, empirical, reference)
    return reports.Report("lln", rows)


def run_clt(config, table, settings):
    map_fn = workers.mapper(config.threads)
    cutoff = _euler_cutoff(settings, table)
    rows, summary = [], {"fit": {}}
    for ell in config.ell:
        block = []
        for n in config.n:
            logger.info("clt n=%d ell=%d d=%d: %d replicas", n, ell, config.d, config.replicas)
            ens = clt.replicate_statistic(
                n, ell, config.d, config.replicas, config.seed, table,
                literal_scale=config.scale_literal_paper, cutoff=cutoff, map_fn=map_fn,
            )
            rep = clt.ks_report(ens, table, config.d_mode)
            block.append({
                "n": n, "replicas": ens.replicas, "ell": ell, "d": ens.d,
                "mean": ens.mean, "variance": ens.variance, "d_ks": rep.d_ks,
                "baldi_bound": rep.baldi_bound, "D": rep.dependency_degree, "D_mode": rep.d_mode,
                "vacuous": rep.vacuous, "scale": ens.normalization.scale,
            })
        floor, floor_sd = clt.ks_noise_floor(config.replicas)
        fit = None
        if len(block) >= 3:
            fit = clt.floor_aware_fit([(r["n"], r["d_ks"]) for r in block], config.replicas)
            logger.info("clt ell=%d: log d_ks slope %.3f (floor %.4g, resolved %s)",
                        ell, fit.slope, fit.floor, fit.resolved)
        slope = fit.slope if fit else None
        intercept = fit.intercept if fit else None
        resolved = fit.resolved if fit else None
        excess_slope = fit.excess_slope if fit else None
        for r in block:
            r.update(slope=slope, fit_slope=slope, fit_intercept=intercept, ks_floor=floor,
                     ks_floor_sd=floor_sd, slope_resolved=resolved, excess_slope=excess_slope)
        summary["fit"][str(ell)] = {
            "slope": slope, "intercept": intercept, "ks_floor": floor, "ks_floor_sd": floor_sd,
            "resolved": resolved, "excess_slope": excess_slope,
        }
        rows.extend(block)
    return reports.Report("clt", rows, summary)


def _solver_options(config, settings):
    return ldp.SolverOptions.from_settings(
        settings.solver,
        restarts=config.restarts, damping=config.damping, tol=config.tol,
        max_iter=config.max_iter, lambda_window=config.lambda_window, seed=config.seed,
    )


def _ldp_row(point):
    rec = point.record()
    return {
        "x": rec.x, "rate": rec.rate, "lambda": rec.lam, "iterations": rec.iterations,
        "converged": rec.converged, "measure_checksum": rec.measure_checksum,
        "diagnostics": point.diagnostics,
    }


def run_ldp(config, table, settings):
    options = _solver_options(config, settings)
    ell = _single(config.ell, "ell")
    map_fn = workers.mapper(config.threads)

    if config.grid is not None:
        k = _single(config.k or [4], "k")
        if ell > 1:
            space = ldp.mixed_space(ell, k, table, strict=config.strict_phrase_kernel,
                                    max_states=options.mixed_max_states)
        else:
            space = ldp.binary_space(k, table, max_states=options.max_states)
        lo, hi, count = config.grid
        levels = np.linspace(lo, hi, count).tolist()
        logger.info("ldp %s kernel=%s: %d levels", space.describe(), space.kernel_label, len(levels))
        curve = ldp.rate_curve(space, levels, options, map_fn=map_fn)
        doc = ldp.rate_curve_to_json(curve)
        return reports.Report("ldp", doc["grid"], {"space": doc["space"], "solver": doc["solver"]},
                              labels={"kernel": space.kernel_label})

    ks = config.k or list(range(2, 13))
    ladder = ldp.rate_ladder(
        config.x, ks, table, options, ell=ell, strict=config.strict_phrase_kernel, map_fn=map_fn,
    )
    rows = []
    for k, point in ladder:
        rows.append({"k": k, **_ldp_row(point), "space": point.measure.space.describe()})
        logger.info("ldp k=%d x=%.6g: rate %.10g", k, config.x, point.rate)
    return reports.Report("ldp-ladder", rows, {"solver": ldp.solver_metadata(options)},
                          labels={"kernel": ladder[0][1].measure.space.kernel_label})


def run_squarefree(config, table, settings):
    rows = []
    for n in config.n:
        batch = sampler.sample_uniform(n, n, config.seed)
        freq = sampler.squarefree_frequency(batch, table)
        density = ldp.SQUAREFREE_DENSITY
        row = {
            "n": n, "exact_count": exact.squarefree_count(n, table),
            "formula": density * n, "mc_frequency": freq,
            "abs_error": abs(freq - density), "rate_at_mc": ldp.squarefree_rate(freq),
            "replicas": config.replicas or None, "d_ks": None,
        }
        if config.replicas >= 2:
            ens = clt.squarefree_ensemble(n, config.replicas, config.seed, table, workers.mapper(config.threads))
            row["d_ks"] = clt.ks_distance(ens.values)
        rows.append(row)
    return reports.Report("squarefree", rows)


def run_dgcd(config, table, settings):
    cutoff = _euler_cutoff(settings, table)
    d = config.d
    reference = euler_product(COPRIME_PAIR, d, cutoff, table).value
    rows = []
    for n in config.n:
        count = config.count or n
        batch = sampler.sample_uniform(n, count, config.seed)
        empirical = sampler.empirical_dgcd_density(batch, d, table)
        row = {
            "n": n, "d": d, "count": count, "empirical": empirical, "reference": reference,
            "exact": float(exact.dgcd_exact_prob(n, d, table)),
            "abs_error": abs(empirical - reference), "replicas": config.replicas or None,
            "variance_ratio": None,
        }
        if config.replicas >= 2:
            ens = clt.replicate_statistic(n, 1, d, config.replicas, config.seed, table,
                                          cutoff=cutoff, map_fn=workers.mapper(config.threads))
            row["variance_ratio"] = ens.variance
        rows.append(row)
    return reports.Report("dgcd", rows)


def run_coupling(config, table, settings):
    k1, k2 = config.prime_window()
    rows = []
    for n in config.n:
        draws = config.count or n
        coupled = sampler.crt_coupling(n, (k1, k2), draws, config.seed, table)
        mismatches = int(coupled.mismatch.sum())
        deviation, envelope = sampler.coupling_deviation(coupled)
        pvalue = sampler.pattern_pvalue(coupled)
        for eps in config.epsilon:
            rows.append({
                "n": n, "k1": k1, "k2": k2, "m": coupled.m, "threshold": coupled.threshold,
                "draws": draws, "mismatches": mismatches, "mismatch_rate": mismatches / draws,
                "mismatch_bound": (n - coupled.threshold) / n, "chi2_pvalue": pvalue,
                "deviation": deviation, "envelope": envelope, "epsilon": eps,
                "coupling_bound": tails.coupling_bound(n, coupled.m, eps, k2),
                "primes": coupled.primes.tolist(),
            })
        logger.info("coupling n=%d m=%d: %d of %d mismatched", n, coupled.m, mismatches, draws)
    return reports.Report("coupling", rows)


def run_tails(config, table, settings):
    k1, k2 = config.prime_window()
    map_fn = workers.mapper(config.threads)
    rows, terms = [], []
    for n in config.n:
        for eps in config.epsilon:
            for measure in config.measure:
                exp = tails.mc_tail_estimate((k1, k2), n, eps, measure, config.replicas, config.seed, table,
                                             map_fn=map_fn)
                rows.append({
                    "k1": k1, "k2": k2, "n": n, "epsilon": eps, "measure": measure,
                    "replicas": exp.replicas, "exceedances": exp.exceedances,
                    "empirical_log_prob": exp.empirical_log_prob,
                    "empirical_log_prob_ucb": exp.empirical_log_prob_ucb,
                    "analytic_bound": exp.analytic_bound, "confidence": exp.confidence,
                    "analytic_note": exp.analytic_note,
                })
            if n >= 16:
                t = tails.super_ii_terms(n, max(k1, 2), eps, table)
                terms.append({key: getattr(t, key) for key in t.__dataclass_fields__} | {"combined": t.combined})
    return reports.Report("tails", rows, {"super_ii_terms": terms})


def run_exact(config, table, settings):
    cutoff = _euler_cutoff(settings, table)
    coprime = euler_product(COPRIME_PAIR, 2, cutoff, table)
    rows = []
    for n in config.n:
        for ell in config.ell:
            stats = exact.exact_variance(n, ell, table)
            limit = exact.limit_variance(ell, 2, table, cutoff)
            rows.append({
                "n": n, "ell": ell, "alpha_n": float(stats.alpha_n), "beta_n": float(stats.beta_n),
                "sigma_n_sq": float(stats.sigma_n_sq),
                "sigma_ratio": float(stats.sigma_n_sq) / n ** 3 / limit,
                "limit_variance": limit, "prime_count": prime_count(n, table),
                "euler_coprime": coprime.value, "euler_tail_bound": coprime.tail_bound,
            })
    return reports.Report("exact", rows)


COMMANDS = {
    "lln": run_lln,
    "clt": run_clt,
    "ldp": run_ldp,
    "squarefree": run_squarefree,
    "dgcd": run_dgcd,
    "coupling": run_coupling,
    "tails": run_tails,
    "exact": run_exact,
}


def _table_limit(config, settings):
    need = max(config.n)
    if config.window:
        need = max(need, config.window[1])
    return max(int(settings.sieve["limit"]), need)


def error_record(exc, command):
    status = getattr(exc, "exit_status", 1)
    return {"status": status, "error": type(exc).__name__, "message": str(exc), "command": command}


def report_failure(exc, command) -> int:
    """Log the failure and write its JSON error record to stderr; returns the exit status."""
    record = error_record(exc, command)
    logger.error("%s failed: %s", command, exc)
    sys.stderr.write(json.dumps(record) + "\n")
    return record["status"]


def run(config: RunConfig, settings=None) -> int:
    """Execute one command; returns the process exit status."""
    settings = settings or SettingsManager()
    try:
        config.validate()
        if config.command == "schema":
            schema = reports.report_schema(config.format, config.schema_command)
            sys.stdout.write((schema if isinstance(schema, str) else json.dumps(schema, indent=2)) + "\n")
            return 0
        table = cached_prime_table(_table_limit(config, settings))
        if config.check:
            checks.run_checks(config, table)
        report = COMMANDS[config.command](config, table, settings)
        path = config.output or reports.default_output_path(settings.output_dir, config.command, config.format)
        reports.write_report(report, config.command, config.seed, config.as_dict(), config.format, path)
        return 0
    except (GcdLabError, OSError) as exc:
        return report_failure(exc, config.command)
