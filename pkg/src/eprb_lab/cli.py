"""Command-line interface: deterministic reports over the library.

Subcommands
-----------
- ``exact``: grand joint distribution, pair marginals, correlators, and
  the CHSH value of a sequential scenario.
- ``sample``: Monte Carlo tally of a sequential scenario plus empirical
  correlators.
- ``chsh-scan``: exhaustive grid evaluation of S for the config's mode.
- ``chsh-max``: multistart maximization of |S| for the config's mode.
- ``hvm-check``: build the contextual model for a sequential scenario,
  verify factorizability, and compare its induced distribution against
  the exact one.
- ``joint-feasibility``: decide whether one joint distribution matches
  the scenario's four pairwise distributions.

Configuration is a JSON object file (``--config``); scalar fields can be
overridden by flags. Keys: ``mode`` ("sequential" or "eprb") and the four
analyzer angles ``a``, ``a_prime``, ``b``, ``b_prime`` in degrees are
required; ``step`` (grid step in degrees, default 10), ``n`` (sample
count, default 1000000), ``seed`` (default 0), ``format`` ("csv" or
"json", default "csv"), and ``out`` (output path, default stdout) are
optional. Unknown keys are rejected.

Angles are degrees at this boundary and radians everywhere inside the
library. Reports contain no timestamps or machine identifiers: a given
artifact version, subcommand, and configuration produce byte-identical
output. CSV numbers carry 17 significant digits.

Exit status: 0 success; 2 input error (bad flags, malformed config,
unwritable output, wrong mode for the subcommand); 3 sequential-mode
bound violation (a defect signal, see ``chsh-scan``); 1 internal failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable

from . import __version__
from .errors import BoundViolationError, ConfigError, EprbLabError
from .hvm import (
    Verdict,
    build_contextual_model,
    check_factorizability,
    induced_distribution,
    noncontextual_feasibility,
    pair_targets_from_scenario,
)
from .inequality import (
    chsh_report,
    maximize_chsh,
    scan_grid,
)
from .quantum import (
    Mode,
    QUADRUPLES,
    Scenario,
    closed_form_correlators,
    correlator_pair,
    grand_joint_quantum,
    marginal_pair,
)
from .sampler import COUNTS_CSV_HEADER, empirical_correlators, sample

SUBCOMMANDS = ("exact", "sample", "chsh-scan", "chsh-max", "hvm-check", "joint-feasibility")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_BOUND_VIOLATION = 3

_REQUIRED_KEYS = ("mode", "a", "a_prime", "b", "b_prime")
_DEFAULTS: dict[str, Any] = {
    "step": 10.0,
    "n": 1_000_000,
    "seed": 0,
    "format": "csv",
    "out": None,
}


@dataclass(frozen=True)
class RunConfig:
    """One run's settings; angles and step are degrees."""

    mode: Mode
    a: float
    a_prime: float
    b: float
    b_prime: float
    step: float = 10.0
    n: int = 1_000_000
    seed: int = 0
    format: str = "csv"
    out: str | None = None

    def scenario(self) -> Scenario:
        return Scenario(
            a=math.radians(self.a),
            a_prime=math.radians(self.a_prime),
            b=math.radians(self.b),
            b_prime=math.radians(self.b_prime),
            mode=self.mode,
        )

    def echo(self) -> dict[str, Any]:
        doc = dataclasses.asdict(self)
        doc["mode"] = self.mode.value
        return doc


def _require_number(doc: dict[str, Any], key: str) -> float:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {key!r} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"field {key!r} must be finite, got {value!r}")
    return float(value)


def _require_int(doc: dict[str, Any], key: str, minimum: int, maximum: int | None = None) -> int:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field {key!r} must be an integer, got {value!r}")
    if value < minimum or (maximum is not None and value > maximum):
        raise ConfigError(f"field {key!r} out of range: {value!r}")
    return value


def parse_config(text: str) -> RunConfig:
    """Parse the JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    allowed = set(_REQUIRED_KEYS) | set(_DEFAULTS)
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown configuration key: {key!r}")
    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise ConfigError(f"missing configuration field: {key!r}")

    mode_raw = doc["mode"]
    try:
        mode = Mode(mode_raw)
    except ValueError:
        raise ConfigError(
            f"field 'mode' must be 'sequential' or 'eprb', got {mode_raw!r}"
        ) from None

    merged = {**_DEFAULTS, **doc}
    step = _require_number(merged, "step")
    if step <= 0.0 or step > 360.0:
        raise ConfigError(f"field 'step' must be in (0, 360] degrees, got {step!r}")
    fmt = merged["format"]
    if fmt not in ("csv", "json"):
        raise ConfigError(f"field 'format' must be 'csv' or 'json', got {fmt!r}")
    out = merged["out"]
    if out is not None and not isinstance(out, str):
        raise ConfigError(f"field 'out' must be a string path or null, got {out!r}")

    return RunConfig(
        mode=mode,
        a=_require_number(doc, "a"),
        a_prime=_require_number(doc, "a_prime"),
        b=_require_number(doc, "b"),
        b_prime=_require_number(doc, "b_prime"),
        step=step,
        n=_require_int(merged, "n", 0),
        seed=_require_int(merged, "seed", 0, 2**64 - 1),
        format=fmt,
        out=out,
    )


@dataclass(frozen=True)
class Report:
    """A subcommand's result: payload plus full configuration echo."""

    version: str
    subcommand: str
    config: dict[str, Any]
    payload: dict[str, Any]

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "subcommand": self.subcommand,
            "config": self.config,
            "payload": self.payload,
        }
        return json.dumps(doc, indent=2) + "\n"


def _fmt(x: float) -> str:
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return f"{x:.17g}"


def _correlator_doc(correlators) -> dict[str, float]:
    return correlators.as_dict()


def _payload_exact(config: RunConfig) -> tuple[dict[str, Any], str]:
    scenario = config.scenario()
    distribution = grand_joint_quantum(scenario)
    pairs = {
        "A1,B1": marginal_pair(distribution, ("A1", "B1")),
        "A1,B2": marginal_pair(distribution, ("A1", "B2")),
        "A2,B1": marginal_pair(distribution, ("A2", "B1")),
        "A2,B2": marginal_pair(distribution, ("A2", "B2")),
    }
    correlators = closed_form_correlators(scenario)
    report = chsh_report(correlators)
    payload = {
        "distribution": [
            {"a1": q.a1, "b1": q.b1, "a2": q.a2, "b2": q.b2, "probability": p}
            for q, p in distribution.items()
        ],
        "pair_marginals": {k: list(v.probs) for k, v in pairs.items()},
        "pair_correlators": {k: correlator_pair(v) for k, v in pairs.items()},
        "correlators": _correlator_doc(correlators),
        "s_value": report.s_value,
        "bound_satisfied": report.bound_satisfied,
    }
    lines = ["a1,b1,a2,b2,probability"]
    lines += [
        f"{q.a1},{q.b1},{q.a2},{q.b2},{_fmt(p)}" for q, p in distribution.items()
    ]
    return payload, "\n".join(lines) + "\n"


def _payload_sample(config: RunConfig) -> tuple[dict[str, Any], str]:
    scenario = config.scenario()
    distribution = grand_joint_quantum(scenario)
    counts = sample(distribution, config.n, config.seed)
    estimated = empirical_correlators(counts) if counts.n > 0 else None
    payload: dict[str, Any] = {
        "counts": list(counts.counts),
        "n": counts.n,
        "seed": counts.seed,
    }
    if estimated is not None:
        payload["estimates"] = _correlator_doc(estimated.estimates)
        payload["std_errors"] = {
            "e_ab": estimated.std_errors[0],
            "e_ab_prime": estimated.std_errors[1],
            "e_a_prime_b": estimated.std_errors[2],
            "e_a_prime_b_prime": estimated.std_errors[3],
        }
    row = ",".join(str(c) for c in (*counts.counts, counts.n))
    return payload, COUNTS_CSV_HEADER + "\n" + row + "\n"


_SCAN_COLUMNS = {
    Mode.SEQUENTIAL: ("theta_ab_deg", "theta_aa_prime_deg", "theta_bb_prime_deg"),
    Mode.EPRB: ("a_deg", "a_prime_deg", "b_deg", "b_prime_deg"),
}


def _payload_chsh_scan(config: RunConfig) -> tuple[dict[str, Any], str]:
    report = scan_grid(config.mode, math.radians(config.step))
    payload = {
        "mode": config.mode.value,
        "step_deg": config.step,
        "n_cells": report.n_cells,
        "max_abs_s": report.max_abs_s,
        "argmax_deg": [math.degrees(v) for v in report.argmax_angles],
        "bound_satisfied": True,
    }
    columns = _SCAN_COLUMNS[config.mode]
    lines = [",".join(columns) + ",s"]
    for row, s in zip(report.angles, report.s_values):
        cells = [_fmt(math.degrees(v)) for v in row]
        cells.append(_fmt(float(s)))
        lines.append(",".join(cells))
    return payload, "\n".join(lines) + "\n"


def _payload_chsh_max(config: RunConfig) -> tuple[dict[str, Any], str]:
    scenario = config.scenario()
    if config.mode is Mode.SEQUENTIAL:
        init = (scenario.theta_ab, scenario.theta_aa_prime, scenario.theta_bb_prime)
    else:
        init = (scenario.a, scenario.a_prime, scenario.b, scenario.b_prime)
    report = maximize_chsh(config.mode, init_angles=init)
    angles_deg = [math.degrees(v) for v in report.angles]
    payload = {
        "mode": config.mode.value,
        "optimal_angles_deg": angles_deg,
        "s_value": report.s_value,
        "abs_s": report.abs_s,
        "iterations": report.iterations,
        "grad_norm": report.grad_norm,
        "tol": report.tol,
        "converged": report.converged,
    }
    columns = _SCAN_COLUMNS[config.mode]
    lines = [",".join(columns) + ",s_value,abs_s,iterations,grad_norm,converged"]
    cells = [_fmt(v) for v in angles_deg]
    cells += [
        _fmt(report.s_value),
        _fmt(report.abs_s),
        str(report.iterations),
        _fmt(report.grad_norm),
        str(report.converged).lower(),
    ]
    lines.append(",".join(cells))
    return payload, "\n".join(lines) + "\n"


def _payload_hvm_check(config: RunConfig) -> tuple[dict[str, Any], str]:
    scenario = config.scenario()
    model = build_contextual_model(scenario)
    fact = check_factorizability(model)
    exact = grand_joint_quantum(scenario)
    induced = induced_distribution(model)
    reconstruction_dev = max(
        abs(p - q) for p, q in zip(induced.probs, exact.probs)
    )
    passed = fact.passed and reconstruction_dev <= 1e-12
    payload = {
        "atom_ids": list(model.atom_ids),
        "weights": list(model.weights),
        "context": {
            "weights": list(model.context.weights),
            "side1": list(model.context.side1),
            "side2": list(model.context.side2),
        },
        "factorizability": {
            "passed": fact.passed,
            "max_deviation": fact.max_deviation,
            "product_deviation": fact.product_deviation,
            "locality_deviation": fact.locality_deviation,
            "normalization_error": fact.normalization_error,
        },
        "reconstruction_max_deviation": reconstruction_dev,
        "passed": passed,
    }
    lines = [
        "passed,factorizability_passed,factorizability_max_deviation,"
        "reconstruction_max_deviation",
        ",".join(
            [
                str(passed).lower(),
                str(fact.passed).lower(),
                _fmt(fact.max_deviation),
                _fmt(reconstruction_dev),
            ]
        ),
    ]
    return payload, "\n".join(lines) + "\n"


def _payload_joint_feasibility(config: RunConfig) -> tuple[dict[str, Any], str]:
    scenario = config.scenario()
    targets = pair_targets_from_scenario(scenario)
    result = noncontextual_feasibility(targets)
    payload: dict[str, Any] = {
        "verdict": result.verdict.value,
        "target_correlators": _correlator_doc(targets.correlators()),
    }
    sign_cells = ["", "", "", ""]
    value_cell = ""
    if result.verdict is Verdict.FEASIBLE:
        payload["witness"] = list(result.joint.probs)
        payload["certificate"] = None
    else:
        payload["witness"] = None
        payload["certificate"] = {
            "signs": list(result.certificate.signs),
            "value": result.certificate.value,
        }
        sign_cells = [str(s) for s in result.certificate.signs]
        value_cell = _fmt(result.certificate.value)
    lines = [
        "verdict,sign_ab,sign_ab_prime,sign_a_prime_b,sign_a_prime_b_prime,"
        "certificate_value",
        ",".join([result.verdict.value, *sign_cells, value_cell]),
    ]
    return payload, "\n".join(lines) + "\n"


_PAYLOAD_BUILDERS: dict[str, Callable[[RunConfig], tuple[dict[str, Any], str]]] = {
    "exact": _payload_exact,
    "sample": _payload_sample,
    "chsh-scan": _payload_chsh_scan,
    "chsh-max": _payload_chsh_max,
    "hvm-check": _payload_hvm_check,
    "joint-feasibility": _payload_joint_feasibility,
}


def run(subcommand: str, config: RunConfig) -> Report:
    """Execute a subcommand, write its report, and return it."""
    if subcommand not in _PAYLOAD_BUILDERS:
        raise ConfigError(f"unknown subcommand: {subcommand!r}")
    payload, csv_text = _PAYLOAD_BUILDERS[subcommand](config)
    report = Report(
        version=__version__,
        subcommand=subcommand,
        config=config.echo(),
        payload=payload,
    )
    text = report.to_json() if config.format == "json" else csv_text
    if config.out is None:
        sys.stdout.write(text)
    else:
        try:
            with open(config.out, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write output path {config.out!r}: {exc}") from exc
    return report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprb-lab",
        description="Exact statistics, CHSH scans, and hidden-variable "
        "feasibility for a two-time EPRB experiment.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, help=f"run the {name} computation")
        sub.add_argument("--config", required=True, help="path to the JSON configuration")
        sub.add_argument("--out", help="output path (default: stdout)")
        sub.add_argument("--format", choices=("csv", "json"), help="output format")
        sub.add_argument("--seed", type=int, help="override the sampling seed")
        sub.add_argument("--step", type=float, help="override the grid step (degrees)")
        sub.add_argument("--n", type=int, help="override the sample count")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    try:
        text = open(args.config, "r", encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {args.config!r}: {exc}") from exc
    config = parse_config(text)
    overrides: dict[str, Any] = {}
    for field in ("out", "format", "seed", "step", "n"):
        value = getattr(args, field)
        if value is not None:
            overrides[field] = value
    if overrides:
        config = dataclasses.replace(config, **overrides)
        if config.step <= 0.0 or config.step > 360.0:
            raise ConfigError(f"step must be in (0, 360] degrees, got {config.step!r}")
        if config.n < 0:
            raise ConfigError(f"sample count must be nonnegative, got {config.n!r}")
        if not 0 <= config.seed <= 2**64 - 1:
            raise ConfigError(f"seed must fit in 64 bits, got {config.seed!r}")
    return config


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        run(args.subcommand, config)
    except BoundViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOUND_VIOLATION
    except EprbLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # internal failure: anything unforeseen
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK
