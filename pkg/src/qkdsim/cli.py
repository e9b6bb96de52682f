"""Batch front end: simulate, entropy, attack-demo.

Every subcommand is deterministic given its flags. Reports are emitted as
CSV or JSON (validated against the schemas shipped in qkdsim/schemas); with
--plot, a matplotlib figure is rendered next to the delimited output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema

from . import analysis, combinatorics
from .adversary import AttackSpec, ResendPolicy, required_loss
from .errors import InfeasibleAttackError, InvalidInputError, QkdSimError
from .protocol import ProtocolConfig, SiftMode, run_bb84

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_INFEASIBLE = 3

ENTROPY_CSV_HEADER = [
    "n",
    "alpha",
    "k",
    "feasible",
    "n_bits",
    "c_bits",
    "rate",
    "coarse_asymptote",
    "refined_asymptote",
    "coarse_ratio",
    "refined_ratio",
]

_SIMULATE_DEFAULTS = {
    "alpha": 0.5,
    "k": None,
    "abort_threshold": 0.05,
    "sift_mode": "random",
    "channel_flip_prob": 0.0,
    "attack": "none",
    "trials": 100,
    "master_seed": 0,
    "output_format": "csv",
    "output_path": None,
    "dump_transcript": None,
    "workers": 1,
    "plot": False,
}

# analytic agreement markers for the figure, per attack mode (bob, eve)
_ANALYTIC_AGREEMENT = {
    "none": (1.0, None),
    "paper": (0.625, 0.625),
    "identity-resend": (0.875, 0.625),
}


def load_schema(name: str) -> dict:
    """Load one of the schemas shipped with the package."""
    path = resources.files("qkdsim") / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))


def _fail(kind: str, message: str) -> None:
    print(json.dumps({"kind": kind, "error": message}), file=sys.stderr)


def resolve_workers(requested: int) -> int:
    """0 means all CPUs; QKDSIM_THREADS caps the final count."""
    workers = requested if requested > 0 else (os.cpu_count() or 1)
    cap = os.environ.get("QKDSIM_THREADS")
    if cap is not None:
        try:
            cap_value = int(cap)
        except ValueError as exc:
            raise InvalidInputError(f"QKDSIM_THREADS is not an integer: {cap!r}") from exc
        if cap_value < 1:
            raise InvalidInputError("QKDSIM_THREADS must be >= 1")
        workers = min(workers, cap_value)
    return max(1, workers)


def _write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _figure_path(output_path: str) -> Path:
    return Path(output_path).with_suffix(".png")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdsim",
        description=(
            "BB84 simulator with an adversary that intercepts half the "
            "transmissions and corrupts the test-position randomness source."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo batch of protocol runs")
    sim.add_argument("--config", type=str, default=None, help="JSON config file; flags override it")
    sim.add_argument("--n", type=int, default=None, help="raw sifted key length target (even, >= 4)")
    sim.add_argument("--alpha", type=float, default=None, help="test-set exponent in (0,1)")
    sim.add_argument("--k", type=int, default=None, help="test-set size override (default ceil(n^(1-alpha)))")
    sim.add_argument("--attack", choices=["none", "paper", "identity-resend"], default=None)
    sim.add_argument("--test-source", choices=["uniform", "restricted"], default=None,
                     help="test-position source (default: restricted when attacking)")
    sim.add_argument("--sift-mode", choices=["random", "expected"], default=None)
    sim.add_argument("--trials", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None, help="master seed for the batch")
    sim.add_argument("--threshold", type=float, default=None, help="abort threshold on the test error rate")
    sim.add_argument("--noise", type=float, default=None, help="channel bit-flip probability")
    sim.add_argument("--format", choices=["csv", "json"], default=None)
    sim.add_argument("--out", type=str, default=None, help="output path (default: stdout)")
    sim.add_argument("--dump-transcript", type=str, default=None,
                     help="write the first trial's transcript as JSON to this path")
    sim.add_argument("--workers", type=int, default=None, help="worker processes (0 = all CPUs)")
    sim.add_argument("--plot", action="store_true", default=None,
                     help="render a figure next to --out (requires --out)")
    sim.set_defaults(func=cmd_simulate)

    ent = sub.add_parser("entropy", help="entropy-loss sweep over doubling n")
    ent.add_argument("--n-min", type=int, required=True)
    ent.add_argument("--n-max", type=int, required=True)
    ent.add_argument("--alpha", type=float, default=0.5)
    ent.add_argument("--k", type=int, default=None, help="fixed test-set size override")
    ent.add_argument("--format", choices=["csv", "json"], default="csv")
    ent.add_argument("--out", type=str, default=None)
    ent.add_argument("--plot", action="store_true",
                     help="render a figure next to --out (requires --out)")
    ent.set_defaults(func=cmd_entropy)

    demo = sub.add_parser("attack-demo", help="one honest and one attacked run, side by side")
    demo.add_argument("--n", type=int, required=True)
    demo.add_argument("--seed", type=int, default=0)
    demo.set_defaults(func=cmd_attack_demo)

    return parser


def _merged_simulate_config(args: argparse.Namespace) -> dict:
    merged = dict(_SIMULATE_DEFAULTS)
    merged["n"] = None
    merged["test_source"] = None

    if args.config is not None:
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise InvalidInputError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(_SIMULATE_DEFAULTS) - {"n", "test_source"}
        if unknown:
            raise InvalidInputError(f"unknown config fields: {sorted(unknown)}")
        merged.update(file_cfg)

    overrides = {
        "n": args.n,
        "alpha": args.alpha,
        "k": args.k,
        "attack": args.attack,
        "test_source": args.test_source,
        "sift_mode": args.sift_mode,
        "trials": args.trials,
        "master_seed": args.seed,
        "abort_threshold": args.threshold,
        "channel_flip_prob": args.noise,
        "output_format": args.format,
        "output_path": args.out,
        "dump_transcript": args.dump_transcript,
        "workers": args.workers,
        "plot": args.plot,
    }
    merged.update({key: val for key, val in overrides.items() if val is not None})

    if merged["n"] is None:
        raise InvalidInputError("--n is required (flag or config file)")
    if merged["test_source"] is None:
        merged["test_source"] = "uniform" if merged["attack"] == "none" else "restricted"

    try:
        jsonschema.validate(instance=merged, schema=load_schema("experiment_config"))
    except jsonschema.ValidationError as exc:
        raise InvalidInputError(f"config rejected: {exc.message}") from exc

    if merged["attack"] == "none" and merged["test_source"] == "restricted":
        raise InvalidInputError("a restricted test source requires an attack")
    if merged["plot"] and merged["output_path"] is None:
        raise InvalidInputError("--plot requires --out")
    return merged


def _build_run_objects(cfg: dict) -> tuple[ProtocolConfig, AttackSpec | None]:
    config = ProtocolConfig(
        n=cfg["n"],
        alpha=cfg["alpha"],
        test_set_size=cfg["k"],
        abort_threshold=cfg["abort_threshold"],
        sift_mode=SiftMode(cfg["sift_mode"]),
        channel_flip_prob=cfg["channel_flip_prob"],
    )
    if cfg["attack"] == "none":
        return config, None
    attack = AttackSpec(
        resend_policy=ResendPolicy.IDENTITY
        if cfg["attack"] == "identity-resend"
        else ResendPolicy.FLIP,
        corrupt_test_source=cfg["test_source"] == "restricted",
    )
    return config, attack


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _merged_simulate_config(args)
    config, attack = _build_run_objects(cfg)
    workers = resolve_workers(cfg["workers"])

    stats = analysis.monte_carlo(
        config, attack, trials=cfg["trials"], master_seed=cfg["master_seed"], workers=workers
    )

    labels = (cfg["n"], cfg["alpha"], cfg["attack"], cfg["test_source"])
    if cfg["output_format"] == "json":
        text = _json_text(stats.json_dict(*labels))
    else:
        text = _csv_text(analysis.CSV_HEADER, [stats.csv_row(*labels)])
    _write_output(text, cfg["output_path"])

    if cfg["dump_transcript"] is not None:
        transcript = run_bb84(config, attack, analysis.trial_seed(cfg["master_seed"], 0))
        Path(cfg["dump_transcript"]).write_text(
            _json_text(transcript.to_json_dict()), encoding="utf-8"
        )

    if cfg["plot"]:
        from . import figures

        analytic_bob, analytic_eve = _ANALYTIC_AGREEMENT[cfg["attack"]]
        fig = figures.agreement_figure(stats, analytic_bob, analytic_eve)
        figures.save_figure(fig, _figure_path(cfg["output_path"]))
    return EXIT_OK


def _entropy_rows(n_values: list[int], alpha: float, k: int | None) -> list[dict]:
    rows = []
    for n in n_values:
        k_row = k if k is not None else combinatorics.default_test_set_size(n, alpha)
        base = {
            "n": n,
            "alpha": alpha,
            "k": k_row,
            "coarse_asymptote": 1.0 / math.log2(n),
            "refined_asymptote": 1.0 / (alpha * math.log2(n) + combinatorics.LOG2_E),
        }
        try:
            report = combinatorics.entropy_loss_report(n, alpha, k)
        except InfeasibleAttackError:
            rows.append(
                {
                    **base,
                    "feasible": False,
                    "n_bits": None,
                    "c_bits": None,
                    "rate": None,
                    "coarse_ratio": None,
                    "refined_ratio": None,
                }
            )
        else:
            rows.append(
                {
                    **base,
                    "feasible": True,
                    "n_bits": report.n_bits,
                    "c_bits": report.c_bits,
                    "rate": report.rate,
                    "coarse_ratio": report.coarse_ratio,
                    "refined_ratio": report.refined_ratio,
                }
            )
    return rows


def cmd_entropy(args: argparse.Namespace) -> int:
    if args.n_min < 4 or args.n_min % 2:
        raise InvalidInputError("--n-min must be even and >= 4")
    if args.n_max < args.n_min:
        raise InvalidInputError("--n-max must be >= --n-min")
    if not 0.0 < args.alpha < 1.0:
        raise InvalidInputError("--alpha must lie in (0, 1)")
    if args.plot and args.out is None:
        raise InvalidInputError("--plot requires --out")

    n_values = []
    n = args.n_min
    while n <= args.n_max:
        n_values.append(n)
        n *= 2
    rows = _entropy_rows(n_values, args.alpha, args.k)

    if args.format == "json":
        text = _json_text(rows)
    else:

        def cell(v) -> str:
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            return repr(v) if isinstance(v, float) else str(v)

        text = _csv_text(
            ENTROPY_CSV_HEADER,
            [[cell(row[col]) for col in ENTROPY_CSV_HEADER] for row in rows],
        )
    _write_output(text, args.out)

    if args.plot:
        from . import figures

        reports = [
            combinatorics.entropy_loss_report(row["n"], args.alpha, args.k)
            for row in rows
            if row["feasible"]
        ]
        if reports:
            fig = figures.entropy_rate_figure(reports, args.alpha)
            figures.save_figure(fig, _figure_path(args.out))
    return EXIT_OK


def _demo_summary(tag: str, transcript, n: int) -> list[str]:
    m = len(transcript.sift)
    bob = analysis.agreement(transcript.sift.x_b, transcript.sift.x_a)
    lines = [f"{tag}:"]
    lines.append(f"  sifted bits: {m} of {2 * n} transmissions")
    if transcript.test_errors is None:
        lines.append(f"  test set unavailable: {transcript.abort_reason}")
    else:
        verdict = "abort" if transcript.aborted else "continue"
        lines.append(
            f"  test errors: {transcript.test_errors}/{len(transcript.test_set)}"
            f" (rate {transcript.test_error_rate:.4f}) -> {verdict}"
        )
    lines.append(f"  bob agreement: {bob}/{m} ({bob / m:.4f})")
    e_bob = min(max(1.0 - bob / m, 0.0), 0.5)
    if transcript.eve_estimate is not None:
        eve = analysis.agreement(transcript.eve_estimate, transcript.sift.x_a)
        lines.append(f"  eve agreement: {eve}/{m} ({eve / m:.4f})")
        e_eve = min(max(1.0 - eve / m, 0.0), 0.5)
    else:
        lines.append("  eve agreement: no interception (blind guessing, 1/2)")
        e_eve = 0.5
    lines.append(
        f"  one-way key-rate proxy: {analysis.one_way_key_rate(e_bob, e_eve):.4f} bits/bit"
    )
    return lines


def cmd_attack_demo(args: argparse.Namespace) -> int:
    config = ProtocolConfig(n=args.n, sift_mode=SiftMode.EXPECTED)
    attack = AttackSpec()
    honest = run_bb84(config, None, analysis.trial_seed(args.seed, 0))
    attacked = run_bb84(config, attack, analysis.trial_seed(args.seed, 1))

    lines = _demo_summary("honest run", honest, config.n)
    lines += _demo_summary("attacked run (flip-resend, restricted test source)", attacked, config.n)

    stats = analysis.case_stats(attacked, range(config.n))
    fractions = ", ".join(f"{f:.3f}" for f in stats.fractions)
    lines.append(f"  case fractions (attacked+matched, attacked+conjugate, untouched): {fractions}")

    loss = required_loss(config.n, config.k)
    honest_bits = combinatorics.log2_binomial(config.n, config.k)
    lines.append(
        f"required min-entropy loss to confine {config.k} test positions to half of "
        f"n={config.n}: {loss:.3f} bits (honest source width {honest_bits:.3f} bits)"
    )
    print("\n".join(lines))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleAttackError as exc:
        _fail("infeasible-attack", str(exc))
        return EXIT_INFEASIBLE
    except (InvalidInputError, QkdSimError) as exc:
        _fail("invalid-config", str(exc))
        return EXIT_INVALID_CONFIG


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
