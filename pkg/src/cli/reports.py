# src/cli/reports.py

"""Report schemas and CSV/JSON writers.

A CSV report opens with ``#`` comment lines that carry the library version,
command, seed and the full run config; the timestamp sits on its own comment
line so everything after the comments is reproducible byte for byte.
"""

import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional

from src import __version__
from src.core.errors import UsageError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

CSV_SCHEMAS = {
    "lln": ("n", "count", "ell", "pairs", "empirical", "reference", "exact", "abs_error"),
    "clt": (
        "n", "replicas", "ell", "d", "mean", "variance", "d_ks", "baldi_bound", "D", "D_mode", "vacuous", "slope",
        "ks_floor", "slope_resolved",
    ),
    "ldp": ("x", "rate", "lambda", "iterations", "converged"),
    "ldp-ladder": ("k", "x", "rate", "lambda", "iterations", "converged"),
    "squarefree": ("n", "exact_count", "formula", "mc_frequency", "abs_error", "rate_at_mc", "replicas", "d_ks"),
    "dgcd": ("n", "d", "count", "empirical", "reference", "exact", "abs_error", "replicas", "variance_ratio"),
    "coupling": (
        "n", "k1", "k2", "m", "threshold", "draws", "mismatches", "mismatch_rate", "mismatch_bound",
        "chi2_pvalue", "deviation", "envelope", "epsilon", "coupling_bound",
    ),
    "tails": (
        "k1", "k2", "n", "epsilon", "measure", "replicas", "exceedances",
        "empirical_log_prob", "empirical_log_prob_ucb", "analytic_bound",
    ),
    "exact": (
        "n", "ell", "alpha_n", "beta_n", "sigma_n_sq", "sigma_ratio", "limit_variance",
        "prime_count", "euler_coprime", "euler_tail_bound",
    ),
}

# JSON reports carry every CSV column per row plus these command-level keys.
JSON_EXTRAS = {
    "clt": ("fit_slope", "fit_intercept", "ks_floor_sd", "excess_slope", "scale"),
    "ldp": ("space", "solver", "measure_checksum", "diagnostics"),
    "ldp-ladder": ("space", "solver", "measure_checksum", "diagnostics"),
    "tails": ("confidence", "analytic_note", "super_ii_terms"),
    "coupling": ("primes",),
}


def report_schema(fmt: str, command: Optional[str] = None):
    """Column list (csv) or field list (json) per command, versioned."""
    if fmt not in ("csv", "json"):
        raise UsageError(f"Unknown report format '{fmt}'; expected csv or json.")
    if command is not None and command not in CSV_SCHEMAS:
        raise UsageError(f"No report schema for command '{command}'.")

    def one(cmd):
        if fmt == "csv":
            return ",".join(CSV_SCHEMAS[cmd])
        return list(CSV_SCHEMAS[cmd]) + list(JSON_EXTRAS.get(cmd, ()))

    if command is not None:
        return one(command)
    return {"version": SCHEMA_VERSION, "format": fmt, "commands": {cmd: one(cmd) for cmd in CSV_SCHEMAS}}


@dataclass
class Report:
    schema: str
    rows: List[Dict] = field(default_factory=list)
    summary: Dict = field(default_factory=dict)
    labels: Dict[str, str] = field(default_factory=dict)  # extra `# key=value` header lines


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return _cell(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if hasattr(value, "item"):
        return _json_safe(value.item())
    return value


def header_lines(command: str, seed: int, config: Dict) -> List[str]:
    cfg = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return [
        f"# gcdlab {__version__} command={command} seed={seed} config={cfg}",
        f"# schema={SCHEMA_VERSION}",
    ]


def render_csv(report: Report, command: str, seed: int, config: Dict, generated: str) -> str:
    buf = io.StringIO()
    for line in header_lines(command, seed, config):
        buf.write(line + "\n")
    for key, value in report.labels.items():
        buf.write(f"# {key}={value}\n")
    buf.write(f"# generated={generated}\n")
    writer = csv.writer(buf, lineterminator="\n")
    columns = CSV_SCHEMAS[report.schema]
    writer.writerow(columns)
    for row in report.rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def csv_body(text: str) -> str:
    """Everything after the comment header."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def render_json(report: Report, command: str, seed: int, config: Dict, generated: str) -> str:
    doc = {
        "meta": {
            "library": "gcdlab",
            "version": __version__,
            "schema": SCHEMA_VERSION,
            "command": command,
            "seed": seed,
            "config": config,
            "generated": generated,
            **report.labels,
        },
        "rows": report.rows,
        "summary": report.summary,
    }
    return json.dumps(_json_safe(doc), indent=2, default=str) + "\n"


def default_output_path(output_dir: str, command: str, fmt: str) -> str:
    return os.path.join(output_dir, f"{command}.{fmt}")


def write_report(
    report: Report,
    command: str,
    seed: int,
    config: Dict,
    fmt: str,
    path: str,
) -> str:
    generated = datetime.now(timezone.utc).isoformat(timespec="seconds")
    render = render_csv if fmt == "csv" else render_json
    text = render(report, command, seed, config, generated)
    if path == "-":
        sys.stdout.write(text)
        return text
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info("Report written to %s", path)
    return text
