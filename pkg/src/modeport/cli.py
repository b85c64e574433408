"""Batch driver: run protocol executions and limit scans from the command line.

Commands emit JSON (protocol runs, dense coding, selftest) or CSV (scans)
and use exit codes suitable for CI: 0 on success, 1 when an invariant check
fails (with a machine-readable violation list on stderr), 2 on I/O or usage
errors.  Identical configurations, including the seed, produce byte-identical
output files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hamiltonian import hardcore_limit_scan, reservoir_resolved_rotation
from .protocol import (
    GENERATOR_NAME,
    SUCCESS_STATUS,
    UnknownStateSpec,
    random_spec_corpus,
    run_dense_coding,
    run_teleportation,
)
from .selftest import run_acceptance_suite

MIN_GRID_POINTS = 15  # headroom over the worst Fourier order this circuit family produces

COMMANDS = ("teleport", "sweep", "hardcore", "reservoir", "densecoding", "selftest")


@dataclass
class RunConfig:
    command: str
    theta_prime: float = float(np.pi / 4)
    phi: float = 0.0
    grid_points: int = 16
    shared_reservoir: bool = False
    n: int = 100
    seed: int = 0
    out: str | None = None
    ratios: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0)
    nbars: tuple[float, ...] = (4.0, 16.0, 64.0, 256.0)


def _read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _parse_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modeport",
        description="mode-entanglement teleportation runs and limit scans",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="flat key = value file")
        p.add_argument("--grid", type=int, default=None, dest="grid_points")
        p.add_argument("--shared-reservoir", action="store_true", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        if command == "teleport":
            p.add_argument("--theta-prime", type=float, default=None)
            p.add_argument("--phi", type=float, default=None)
        if command in ("sweep", "selftest"):
            p.add_argument("--n", type=int, default=None)
        if command == "hardcore":
            p.add_argument(
                "--ratios", type=_parse_list, default=None,
                help="comma-separated, ascending",
            )
        if command == "reservoir":
            p.add_argument(
                "--nbars", type=_parse_list, default=None,
                help="comma-separated, ascending",
            )
    return parser


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Parse flags (and an optional config file; flags win) into a RunConfig."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    file_values: dict[str, str] = {}
    if getattr(args, "config", None):
        try:
            file_values = _read_config_file(args.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))

    defaults = RunConfig(command=args.command)

    def pick(name: str, cast, default):
        value = getattr(args, name, None)
        if value is not None:
            return value
        if name in file_values:
            return cast(file_values[name])
        return default

    config = RunConfig(
        command=args.command,
        theta_prime=pick("theta_prime", float, defaults.theta_prime),
        phi=pick("phi", float, defaults.phi),
        grid_points=pick("grid_points", int, defaults.grid_points),
        shared_reservoir=bool(
            pick("shared_reservoir", lambda s: s.lower() in ("1", "true", "yes"), False)
        ),
        n=pick("n", int, defaults.n),
        seed=pick("seed", int, defaults.seed),
        out=pick("out", str, None),
        ratios=pick("ratios", _parse_list, defaults.ratios),
        nbars=pick("nbars", _parse_list, defaults.nbars),
    )
    if config.grid_points < MIN_GRID_POINTS:
        parser.error(
            f"--grid {config.grid_points} is too coarse; this circuit family "
            f"needs at least {MIN_GRID_POINTS} phase points"
        )
    if config.n < 1:
        parser.error("--n must be at least 1")
    for name, values in (("ratios", config.ratios), ("nbars", config.nbars)):
        if not values or list(values) != sorted(values):
            parser.error(f"--{name} must be a non-empty ascending list")
        if any(v <= 0 for v in values):
            parser.error(f"--{name} must be positive")
    return config


def _round12(value):
    """12 significant digits, round-half-even, applied recursively."""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {k: _round12(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round12(v) for v in value]
    return value


def _check_probabilities(payload: dict, violations: list[str], context: str) -> None:
    p = payload.get("success_probability")
    if p is not None and not (0.0 <= p <= 1.0):
        violations.append(f"{context}: success probability {p} outside [0, 1]")
    for out in payload.get("outcomes", []):
        if not (0.0 <= out["probability"] <= 1.0):
            violations.append(f"{context}: probability {out['probability']} outside [0, 1]")
        for key in ("fidelity_min", "fidelity_mean"):
            if not (0.0 <= out[key] <= 1.0 + 1e-12):
                violations.append(f"{context}: {key} {out[key]} outside [0, 1]")


def _run_teleport(config: RunConfig):
    spec = UnknownStateSpec(config.theta_prime, config.phi)
    result = run_teleportation(
        spec,
        "shared" if config.shared_reservoir else "distinct",
        config.grid_points,
    )
    payload = result.to_json_dict()
    violations: list[str] = []
    _check_probabilities(payload, violations, "teleport")
    if abs(result.success_probability - 0.5) > 1e-9:
        violations.append(
            f"teleport: success probability {result.success_probability} != 1/2"
        )
    for rec in result.outcomes:
        if rec.status == SUCCESS_STATUS and rec.fidelity_min < 1.0 - 1e-9:
            violations.append(
                f"teleport: success branch ({rec.n_a},{rec.n_A}) fidelity "
                f"{rec.fidelity_min} < 1"
            )
    if not result.ssr_compliant:
        violations.append("teleport: twirled terminal states violate superselection")
    return json.dumps(_round12(payload), indent=2, sort_keys=True) + "\n", violations


def _run_sweep(config: RunConfig):
    specs = random_spec_corpus(config.n, config.seed)
    reservoir_config = "shared" if config.shared_reservoir else "distinct"
    runs = []
    violations: list[str] = []
    worst_p = 0.0
    worst_fid = 1.0
    for i, spec in enumerate(specs):
        result = run_teleportation(spec, reservoir_config, config.grid_points)
        payload = result.to_json_dict()
        _check_probabilities(payload, violations, f"sweep[{i}]")
        success_fids = [
            rec.fidelity_min for rec in result.outcomes if rec.status == SUCCESS_STATUS
        ]
        worst_p = max(worst_p, abs(result.success_probability - 0.5))
        worst_fid = min(worst_fid, min(success_fids))
        if not result.ssr_compliant:
            violations.append(f"sweep[{i}]: superselection violation")
        runs.append(
            {
                "theta_prime": spec.theta_prime,
                "phi": spec.phi,
                "success_probability": result.success_probability,
                "fidelity_min_success": min(success_fids),
                "failure_mode_a_distance": result.failure_mode_a_distance,
                "ssr_compliant": result.ssr_compliant,
            }
        )
    if worst_p > 1e-9:
        violations.append(f"sweep: max |P(success) - 1/2| = {worst_p}")
    if worst_fid < 1.0 - 1e-9:
        violations.append(f"sweep: min success fidelity = {worst_fid}")
    payload = {
        "command": "sweep",
        "n": config.n,
        "seed": config.seed,
        "generator": GENERATOR_NAME,
        "grid_points": config.grid_points,
        "reservoirs": reservoir_config,
        "runs": runs,
        "aggregate": {
            "max_success_probability_error": worst_p,
            "min_success_fidelity": worst_fid,
            "all_ssr_compliant": all(r["ssr_compliant"] for r in runs),
        },
    }
    return json.dumps(_round12(payload), indent=2, sort_keys=True) + "\n", violations


def _run_hardcore(config: RunConfig):
    scan = hardcore_limit_scan(list(config.ratios))
    lines = ["ratio,infidelity"]
    lines += [f"{ratio:.12g},{infid:.12g}" for ratio, infid in scan]
    violations = []
    infs = [i for _, i in scan]
    if any(b > a + 1e-12 for a, b in zip(infs, infs[1:])):
        violations.append(f"hardcore: infidelities not monotone: {infs}")
    return "\n".join(lines) + "\n", violations


def _run_reservoir(config: RunConfig):
    scan = reservoir_resolved_rotation(list(config.nbars))
    lines = ["nbar,deviation"]
    lines += [f"{nbar:.12g},{dev:.12g}" for nbar, dev in scan]
    violations = []
    devs = [d for _, d in scan]
    if any(b > a + 1e-12 for a, b in zip(devs, devs[1:])):
        violations.append(f"reservoir: deviations not monotone: {devs}")
    return "\n".join(lines) + "\n", violations


def _run_densecoding(config: RunConfig):
    messages = []
    violations = []
    for message in range(4):
        result = run_dense_coding(message, grid_points=config.grid_points)
        if result.decoded != message or not result.deterministic:
            violations.append(
                f"densecoding: message {message} decoded as {result.decoded} "
                f"(deterministic={result.deterministic})"
            )
        messages.append(
            {
                "message": message,
                "decoded": result.decoded,
                "deterministic": result.deterministic,
                "min_winning_probability": result.min_winning_probability,
                "outcomes": [
                    {
                        "n_alice": occ[0],
                        "n_bob": occ[1],
                        "mean_probability": float(np.mean(prob)),
                    }
                    for occ, prob in sorted(result.outcome_probabilities.items())
                ],
            }
        )
    payload = {
        "command": "densecoding",
        "grid_points": config.grid_points,
        "messages": messages,
    }
    return json.dumps(_round12(payload), indent=2, sort_keys=True) + "\n", violations


def _run_selftest(config: RunConfig):
    results = run_acceptance_suite(
        n_specs=config.n, seed=config.seed, grid_points=config.grid_points
    )
    for result in results:
        print(result.line())
    violations = [result.line() for result in results if not result.passed]
    payload = {
        "command": "selftest",
        "criteria": [
            {
                "number": r.number,
                "name": r.name,
                "passed": r.passed,
                "detail": r.detail,
            }
            for r in results
        ],
        "passed": all(r.passed for r in results),
    }
    return json.dumps(_round12(payload), indent=2, sort_keys=True) + "\n", violations


_RUNNERS = {
    "teleport": _run_teleport,
    "sweep": _run_sweep,
    "hardcore": _run_hardcore,
    "reservoir": _run_reservoir,
    "densecoding": _run_densecoding,
    "selftest": _run_selftest,
}


def execute_and_report(config: RunConfig) -> int:
    """Run the configured command, write its artifact, return the exit code."""
    text, violations = _RUNNERS[config.command](config)
    try:
        if config.out:
            Path(config.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"modeport: cannot write output: {exc}", file=sys.stderr)
        return 2
    if violations:
        print(json.dumps({"violations": violations}, indent=2), file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    config = parse_config(argv)
    return execute_and_report(config)


if __name__ == "__main__":
    raise SystemExit(main())
