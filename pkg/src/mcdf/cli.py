"""Command-line interface.

Subcommands: init-model, score, eval, sweep, gen-synthetic.  Stdout
carries only machine-parseable results; diagnostics and the provenance
line (version, seed, config hash) go to stderr.  Exit codes: 0 success,
2 usage or configuration, 3 file or format trouble, 4 invalid data,
5 nothing evaluable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from mcdf import __version__
from mcdf.errors import (
    ConfigError,
    DataError,
    DegenerateInput,
    EmptyInput,
    EmptySequence,
    EvaluationError,
    InvalidInjectionSite,
    InvalidRate,
    InvalidResidue,
    InvalidTokenId,
    LengthMismatch,
    McdfError,
    MissingWildtype,
    NonFiniteInput,
    SequenceTooLong,
    WeightFormatError,
)
from mcdf.evaluation import (
    DEFAULT_RATE_GRID,
    EvalConfig,
    build_provenance,
    generate_synthetic_benchmark,
    run_sweep,
)
from mcdf.inference import DEFAULT_MC, InjectionPlan, MCConfig, score_sequence
from mcdf.model import ModelConfig, init_random
from mcdf.mutations import load_family_csv, read_fasta, write_family_files
from mcdf.vocab import encode
from mcdf.weights_io import load_weights, save_weights

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_NOTHING = 5


def _warn(message: str) -> None:
    print(f"mcdf: {message}", file=sys.stderr)


def _provenance_line(seed: int, config_digest: str) -> None:
    print(f"mcdf {__version__} seed={seed} config={config_digest}", file=sys.stderr)


def _model_digest(config: ModelConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _parse_model_config(text: str | None) -> ModelConfig:
    if text is None:
        return ModelConfig()
    stripped = text.strip()
    if not stripped.startswith("{"):
        stripped = Path(text).read_text()
    return ModelConfig.from_dict(json.loads(stripped))


def _read_sequence(value: str) -> str:
    if Path(value).exists():
        return read_fasta(value)
    return value


def _parse_rates(text: str) -> tuple[float, ...]:
    try:
        rates = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"cannot parse rate list {text!r}") from None
    if not rates:
        raise ConfigError("rate list is empty")
    return rates


def _load_families(directory, fallback_fasta):
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    families = []
    failures = []
    for path in sorted(directory.glob("*.csv")):
        try:
            try:
                family = load_family_csv(path, lenient=True)
            except MissingWildtype:
                if fallback_fasta is None:
                    raise
                family = load_family_csv(path, fasta=fallback_fasta, lenient=True)
        except (McdfError, OSError) as exc:
            failures.append((path.name, str(exc)))
            _warn(f"skipping {path.name}: {exc}")
            continue
        for line_no, reason in family.skipped:
            _warn(f"{path.name}:{line_no}: {reason}")
        families.append(family)
    if not families:
        raise EvaluationError(f"no loadable family data in {directory}")
    return families, failures


def _write_report(args, report, failures) -> None:
    if getattr(args, "out", None):
        payload = report.to_json_dict()
        payload["load_errors"] = [
            {"file": name, "reason": reason} for name, reason in failures
        ]
        Path(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
    if getattr(args, "csv", None):
        Path(args.csv).write_text(report.to_csv_text())
    print("rate,median_srcc,n_families")
    for rate, med, n_families in report.median_table():
        print(f"{rate!r},{med!r},{n_families}")


def cmd_init_model(args) -> int:
    config = _parse_model_config(args.config)
    params = init_random(config, args.seed)
    save_weights(params, args.out)
    _provenance_line(args.seed, _model_digest(config))
    n_values = sum(int(t.size) for t in params.tensors.values())
    print(json.dumps(
        {"out": str(args.out), "config": config.to_dict(), "n_values": n_values},
        sort_keys=True,
    ))
    return EXIT_OK


def cmd_score(args) -> int:
    params = load_weights(args.model)
    tokens = encode(_read_sequence(args.seq))
    plan = (
        InjectionPlan(args.dropout, args.depth_fraction) if args.dropout > 0.0 else None
    )
    mc = MCConfig(args.samples, args.seed)
    eval_config = EvalConfig(
        params, (float(args.dropout),), args.depth_fraction, mc
    )
    _provenance_line(args.seed, build_provenance(eval_config)["config_hash"])
    print(repr(score_sequence(params, tokens, plan, mc)))
    return EXIT_OK


def _run_rates(args, rates) -> int:
    params = load_weights(args.model)
    families, failures = _load_families(args.families, args.wildtype)
    mc = MCConfig(args.samples, args.seed)
    config = EvalConfig(params, rates, args.depth_fraction, mc)
    report = run_sweep(config, families)
    _provenance_line(args.seed, report.provenance["config_hash"])
    for rate_result in report.rates:
        for family_id, reason in rate_result.skipped:
            _warn(f"rate {rate_result.rate}: skipped {family_id}: {reason}")
    _write_report(args, report, failures)
    return EXIT_OK


def cmd_eval(args) -> int:
    return _run_rates(args, (float(args.dropout),))


def cmd_sweep(args) -> int:
    rates = _parse_rates(args.rates) if args.rates else DEFAULT_RATE_GRID
    return _run_rates(args, rates)


def cmd_gen_synthetic(args) -> int:
    params = load_weights(args.teacher)
    try:
        lo, hi = (int(part) for part in args.length_range.split(","))
    except ValueError:
        raise ConfigError(
            f"cannot parse length range {args.length_range!r}"
        ) from None
    families = generate_synthetic_benchmark(
        params,
        seed=args.seed,
        n_families=args.families,
        mutants_per_family=args.mutants,
        noise_sd=args.noise,
        length_range=(lo, hi),
    )
    _provenance_line(args.seed, _model_digest(params.config))
    for family in families:
        csv_path, _ = write_family_files(
            args.out, family.family_id, family.wildtype, family.records
        )
        print(str(csv_path))
    return EXIT_OK


def _add_model_arg(sub) -> None:
    sub.add_argument("--model", required=True, help="weight file")


def _add_mc_args(sub, default_rate: float) -> None:
    sub.add_argument("--dropout", type=float, default=default_rate,
                     help="dropout rate in [0, 1)")
    sub.add_argument("--depth-fraction", type=float, default=0.0,
                     help="fraction of leading layers that also get dropout")
    sub.add_argument("--samples", type=int, default=DEFAULT_MC.n_samples,
                     help="Monte-Carlo sample count")
    sub.add_argument("--seed", type=int, default=0, help="base seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcdf",
        description="Zero-shot protein fitness scoring with inference-time dropout.",
    )
    parser.add_argument("--version", action="version", version=f"mcdf {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("init-model", help="create a random weight file")
    sub.add_argument("--config", help="model config as a JSON file path or inline JSON")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, help="weight file to write")
    sub.set_defaults(func=cmd_init_model)

    sub = commands.add_parser("score", help="score one sequence")
    _add_model_arg(sub)
    sub.add_argument("--seq", required=True,
                     help="residue string, or path to a FASTA file")
    _add_mc_args(sub, default_rate=0.1)
    sub.set_defaults(func=cmd_score)

    sub = commands.add_parser("eval", help="evaluate families at one dropout rate")
    _add_model_arg(sub)
    sub.add_argument("--families", required=True, help="directory of family CSVs")
    sub.add_argument("--wildtype", help="fallback FASTA for families without one")
    _add_mc_args(sub, default_rate=0.1)
    sub.add_argument("--out", help="write the full report as JSON")
    sub.add_argument("--csv", help="write per-family rows as CSV")
    sub.set_defaults(func=cmd_eval)

    sub = commands.add_parser("sweep", help="evaluate families over a rate grid")
    _add_model_arg(sub)
    sub.add_argument("--families", required=True, help="directory of family CSVs")
    sub.add_argument("--wildtype", help="fallback FASTA for families without one")
    sub.add_argument("--rates",
                     help="comma-separated dropout rates (default %s)"
                     % ",".join(str(r) for r in DEFAULT_RATE_GRID))
    _add_mc_args(sub, default_rate=0.1)
    sub.add_argument("--out", help="write the full report as JSON")
    sub.add_argument("--csv", help="write per-family rows as CSV")
    sub.set_defaults(func=cmd_sweep)

    sub = commands.add_parser("gen-synthetic", help="generate a labelled benchmark")
    sub.add_argument("--teacher", required=True, help="weight file used for labels")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--families", type=int, default=10)
    sub.add_argument("--mutants", type=int, default=100)
    sub.add_argument("--noise", type=float, default=0.0)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--length-range", default="50,200",
                     help="wildtype length bounds, inclusive, as lo,hi")
    sub.set_defaults(func=cmd_gen_synthetic)

    return parser


_USAGE_ERRORS = (ConfigError, InvalidRate, InvalidInjectionSite, json.JSONDecodeError)
_DATA_ERRORS = (
    DataError,
    InvalidResidue,
    InvalidTokenId,
    EmptySequence,
    SequenceTooLong,
    NonFiniteInput,
    LengthMismatch,
    DegenerateInput,
)
_NOTHING_ERRORS = (EvaluationError, EmptyInput)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        _warn(f"error: {exc}")
        return EXIT_USAGE
    except (WeightFormatError, OSError) as exc:
        _warn(f"error: {exc}")
        return EXIT_IO
    except _DATA_ERRORS as exc:
        _warn(f"error: {exc}")
        return EXIT_DATA
    except _NOTHING_ERRORS as exc:
        _warn(f"error: {exc}")
        return EXIT_NOTHING


if __name__ == "__main__":
    sys.exit(main())
