# src/cli/config.py

import argparse
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

from src import __version__
from src.core.errors import UsageError

COMMANDS = ("lln", "clt", "ldp", "squarefree", "dgcd", "coupling", "tails", "exact", "schema")
FORMATS = ("csv", "json")

# Prime windows S(k1, k2) used when --window is not given.
DEFAULT_WINDOWS = {"coupling": (1, 11), "tails": (3, 50)}


def int_list(text: str) -> List[int]:
    """'250,1000,4000' or an inclusive range '2:12'."""
    out = []
    try:
        for part in text.split(","):
            if ":" in part:
                lo, hi = part.split(":")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like '1,2,3' or '2:12', got '{text}'")
    return out


def float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers like '0.5,0.9', got '{text}'")


def grid_spec(text: str) -> Tuple[float, float, int]:
    """'lo:hi:count' -> evenly spaced levels, endpoints included."""
    try:
        lo, hi, count = text.split(":")
        return float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI:COUNT, got '{text}'")


def window_spec(text: str) -> Tuple[int, int]:
    try:
        k1, k2 = text.split(":")
        return int(k1), int(k2)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected K1:K2, got '{text}'")


def lambda_window(text: str) -> Tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got '{text}'")


@dataclass
class RunConfig:
    command: str
    n: List[int] = field(default_factory=lambda: [1000])
    ell: List[int] = field(default_factory=lambda: [1])
    d: int = 2
    k: Optional[List[int]] = None
    count: Optional[int] = None
    replicas: int = 0
    seed: int = 0
    epsilon: List[float] = field(default_factory=lambda: [1.0])
    window: Optional[Tuple[int, int]] = None
    grid: Optional[Tuple[float, float, int]] = None
    x: Optional[float] = None
    measure: List[str] = field(default_factory=lambda: ["tilde", "P"])
    output: Optional[str] = None
    format: str = "csv"
    threads: int = 1
    check: bool = False
    scale_literal_paper: bool = False
    d_mode: str = "recount"
    strict_phrase_kernel: bool = False
    restarts: Optional[int] = None
    damping: Optional[float] = None
    tol: Optional[float] = None
    max_iter: Optional[int] = None
    lambda_window: Optional[Tuple[float, float]] = None
    schema_command: Optional[str] = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        values = {key: val for key, val in vars(ns).items() if key in known and val is not None}
        return cls(**values)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"Unknown command '{self.command}'; expected one of {COMMANDS}.")
        if self.format not in FORMATS:
            raise UsageError(f"Unknown format '{self.format}'; expected csv or json.")
        for name in ("n", "ell", "k"):
            values = getattr(self, name)
            if values is None and name == "k":
                continue
            if not values or any(v < 1 for v in values):
                raise UsageError(f"--{name} needs positive integers, got {values}.")
        for name in ("d", "threads"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name} must be positive, got {getattr(self, name)}.")
        if self.count is not None and self.count < 1:
            raise UsageError(f"--count must be positive, got {self.count}.")
        if self.replicas < 0:
            raise UsageError(f"--replicas must be >= 0, got {self.replicas}.")
        if any(e <= 0 for e in self.epsilon):
            raise UsageError(f"--epsilon must be positive, got {self.epsilon}.")
        if self.grid is not None and self.grid[2] < 1:
            raise UsageError("--grid needs a positive point count.")
        if self.d_mode not in ("paper", "recount"):
            raise UsageError(f"Unknown --d-mode '{self.d_mode}'.")
        if self.command == "clt" and self.replicas < 2:
            raise UsageError("clt needs --replicas >= 2.")
        if self.command == "ldp" and self.grid is None and self.x is None:
            raise UsageError("ldp needs --grid LO:HI:COUNT or --x LEVEL.")
        return self

    def prime_window(self) -> Tuple[int, int]:
        return tuple(self.window) if self.window else DEFAULT_WINDOWS.get(self.command, (1, 11))

    def as_dict(self):
        return asdict(self)


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, help="base seed; replica r uses stream r")
    parser.add_argument("--format", choices=FORMATS, help="report format (default from settings)")
    parser.add_argument("--output", help="report path, '-' for stdout (default <output_dir>/<command>.<format>)")
    parser.add_argument("--threads", type=int, help="worker threads for replicas and grid points")
    parser.add_argument("--check", action="store_true", help="run brute-force oracles at reduced size first")
    parser.add_argument("--save-defaults", dest="save_defaults", action="store_true",
                        help="store --format, --threads and solver flags in config/settings.json")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only")


class ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of printing usage and exiting."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog="gcdlab",
        description="Empirical gcd densities: laws of large numbers, CLT and large deviations.",
    )
    parser.add_argument("--version", action="version", version=f"gcdlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lln", help="empirical gcd density against 6/(pi^2 ell^2)")
    p.add_argument("--n", type=int_list, required=True)
    p.add_argument("--ell", type=int_list)
    p.add_argument("--count", type=int, help="draws per batch (default n)")

    p = sub.add_parser("clt", help="replica ensembles, KS distance and the dependency-graph bound")
    p.add_argument("--n", type=int_list, required=True)
    p.add_argument("--ell", type=int_list)
    p.add_argument("--d", type=int)
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--d-mode", dest="d_mode", choices=("paper", "recount"))
    p.add_argument("--scale-literal-paper", dest="scale_literal_paper", action="store_true",
                   help="normalize by 2 sigma^2 n^(3/2) instead of 2 sigma n^(3/2)")

    p = sub.add_parser("ldp", help="truncated rate function I^(k)")
    p.add_argument("--k", type=int_list, help="truncation, or a ladder such as 2:12 with --x")
    p.add_argument("--ell", type=int_list)
    p.add_argument("--grid", type=grid_spec, help="LO:HI:COUNT levels")
    p.add_argument("--x", type=float, help="single level for a k ladder")
    p.add_argument("--strict-phrase-kernel", dest="strict_phrase_kernel", action="store_true",
                   help="forbid equal ternary digits in the ell > 1 kernel")
    p.add_argument("--restarts", type=int)
    p.add_argument("--damping", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--lambda-window", dest="lambda_window", type=lambda_window)

    p = sub.add_parser("squarefree", help="square-free density, CLT and rate")
    p.add_argument("--n", type=int_list, required=True)
    p.add_argument("--replicas", type=int)

    p = sub.add_parser("dgcd", help="coprimality of d-tuples")
    p.add_argument("--n", type=int_list, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--replicas", type=int)

    p = sub.add_parser("coupling", help="CRT coupling of uniform and product-law divisor patterns")
    p.add_argument("--n", type=int_list, required=True)
    p.add_argument("--window", type=window_spec)
    p.add_argument("--count", type=int, help="coupled draws (default n)")
    p.add_argument("--epsilon", type=float_list)

    p = sub.add_parser("tails", help="Monte Carlo tail estimates against the analytic bounds")
    p.add_argument("--n", type=int_list, required=True)
    p.add_argument("--window", type=window_spec)
    p.add_argument("--epsilon", type=float_list)
    p.add_argument("--measure", type=lambda s: s.split(","))
    p.add_argument("--replicas", type=int, required=True)

    p = sub.add_parser("exact", help="exact finite-n probabilities and variances")
    p.add_argument("--n", type=int_list, required=True)
    p.add_argument("--ell", type=int_list)

    p = sub.add_parser("schema", help="print report schemas")
    p.add_argument("--command", dest="schema_command", choices=COMMANDS[:-1])

    for name in COMMANDS:
        _common(sub.choices[name])
    return parser
