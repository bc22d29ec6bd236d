"""Rank correlation, sweep evaluation, and synthetic benchmark data.

A family is evaluated by Spearman rank correlation between predicted
scores and measured fitness; a sweep repeats that over a grid of
dropout rates and summarizes each rate by the median correlation
across families.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from mcdf.errors import (
    ConfigError,
    DegenerateInput,
    EmptyInput,
    EvaluationError,
    InvalidRate,
    LengthMismatch,
    McdfError,
    NonFiniteInput,
)
from mcdf.inference import DEFAULT_MC, InjectionPlan, MCConfig, score_sequences
from mcdf.model import Parameters
from mcdf.mutations import (
    FamilyDataset,
    Mutation,
    MutantRecord,
    format_mutation_code,
    mutant_sequence,
)
from mcdf.rng import child_seed
from mcdf.vocab import encode

DEFAULT_RATE_GRID = (0.0, 0.05, 0.1, 0.2, 0.3, 0.5)

# Canonical residues used for synthetic wildtypes and substitutions.
AA20 = "ACDEFGHIKLMNPQRSTVWY"


def _finite_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise LengthMismatch(f"{name} must be 1-d, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return arr


def average_ranks(values) -> np.ndarray:
    """1-based ranks; runs of equal values all get the mean of the rank
    span they occupy."""
    arr = _finite_array(values, "values")
    order = np.argsort(arr, kind="mergesort")
    sorted_vals = arr[order]
    ranks = np.empty(arr.size)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks,
    clamped to [-1, 1] against rounding."""
    xa = _finite_array(x, "x")
    ya = _finite_array(y, "y")
    if xa.size != ya.size:
        raise LengthMismatch(f"length mismatch: {xa.size} vs {ya.size}")
    if xa.size < 2:
        raise DegenerateInput("correlation needs at least 2 points")
    rx = average_ranks(xa)
    ry = average_ranks(ya)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise DegenerateInput("an input is constant, correlation undefined")
    return min(1.0, max(-1.0, float(dx @ dy) / denom))


def median(values) -> float:
    """Median; even counts average the two middle values."""
    arr = _finite_array(values, "values")
    if arr.size == 0:
        raise EmptyInput("median of an empty collection")
    ordered = np.sort(arr)
    mid = arr.size // 2
    if arr.size % 2 == 1:
        return float(ordered[mid])
    return float(0.5 * (ordered[mid - 1] + ordered[mid]))


@dataclass(frozen=True)
class FamilyResult:
    family_id: str
    srcc: float
    n_mutants: int


@dataclass(frozen=True)
class RateResult:
    rate: float
    families: tuple[FamilyResult, ...]
    skipped: tuple[tuple[str, str], ...] = ()

    @property
    def n_families(self) -> int:
        return len(self.families)

    @property
    def median_srcc(self) -> float:
        return median([f.srcc for f in self.families])


@dataclass
class SweepReport:
    """Per-rate results plus provenance; serializable to JSON and CSV."""

    rates: tuple[RateResult, ...]
    provenance: dict = field(default_factory=dict)

    def median_table(self) -> list[tuple[float, float, int]]:
        return [(r.rate, r.median_srcc, r.n_families) for r in self.rates]

    def to_json_dict(self) -> dict:
        return {
            "provenance": dict(self.provenance),
            "rates": [
                {
                    "rate": r.rate,
                    "median_srcc": r.median_srcc,
                    "n_families": r.n_families,
                    "families": [
                        {
                            "family_id": f.family_id,
                            "srcc": f.srcc,
                            "n_mutants": f.n_mutants,
                        }
                        for f in r.families
                    ],
                    "skipped": [
                        {"family_id": fid, "reason": reason}
                        for fid, reason in r.skipped
                    ],
                }
                for r in self.rates
            ],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "SweepReport":
        rates = tuple(
            RateResult(
                rate=float(entry["rate"]),
                families=tuple(
                    FamilyResult(f["family_id"], float(f["srcc"]), int(f["n_mutants"]))
                    for f in entry["families"]
                ),
                skipped=tuple(
                    (s["family_id"], s["reason"]) for s in entry.get("skipped", ())
                ),
            )
            for entry in payload["rates"]
        )
        return cls(rates, dict(payload.get("provenance", {})))

    def to_csv_text(self) -> str:
        lines = ["rate,family_id,srcc,n_mutants"]
        for r in self.rates:
            for f in r.families:
                lines.append(f"{r.rate!r},{f.family_id},{f.srcc!r},{f.n_mutants}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def rows_from_csv(text: str) -> list[tuple[float, str, float, int]]:
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines or lines[0] != "rate,family_id,srcc,n_mutants":
            raise EvaluationError("unrecognized sweep CSV header")
        rows = []
        for line in lines[1:]:
            rate, family_id, srcc, n_mutants = line.split(",")
            rows.append((float(rate), family_id, float(srcc), int(n_mutants)))
        return rows


@dataclass(frozen=True)
class EvalConfig:
    """What to evaluate: model parameters, rate grid, injection depth,
    and Monte-Carlo settings."""

    model: Parameters
    rates: tuple[float, ...] = DEFAULT_RATE_GRID
    depth_fraction: float = 0.0
    mc: MCConfig = DEFAULT_MC

    def __post_init__(self):
        if len(self.rates) == 0:
            raise ConfigError("rate grid is empty")
        for rate in self.rates:
            if not 0.0 <= rate < 1.0:
                raise InvalidRate(f"dropout rate must lie in [0, 1), got {rate}")


def family_scores(
    params: Parameters, family: FamilyDataset, plan, mc
) -> np.ndarray:
    sequences = [
        encode(mutant_sequence(family.wildtype, record.code))
        for record in family.records
    ]
    return score_sequences(params, sequences, plan, mc)


def evaluate_family(
    params: Parameters, family: FamilyDataset, plan=None, mc=None
) -> FamilyResult:
    """Score every mutant and correlate against measured fitness."""
    predicted = family_scores(params, family, plan, mc)
    measured = [record.fitness for record in family.records]
    return FamilyResult(family.family_id, spearman(predicted, measured), len(family))


def run_sweep(config: EvalConfig, families) -> SweepReport:
    """Evaluate every family at every rate (ascending, deduplicated).

    Families that cannot be evaluated are recorded per rate as
    (family_id, reason) and skipped; if nothing evaluates at all the
    sweep fails.
    """
    families = sorted(families, key=lambda fam: fam.family_id)
    rate_results = []
    for rate in sorted(set(float(r) for r in config.rates)):
        plan = InjectionPlan(rate, config.depth_fraction) if rate > 0.0 else None
        results = []
        skipped = []
        for family in families:
            try:
                results.append(evaluate_family(config.model, family, plan, config.mc))
            except McdfError as exc:
                skipped.append((family.family_id, str(exc)))
        rate_results.append(RateResult(rate, tuple(results), tuple(skipped)))
    report = SweepReport(tuple(rate_results))
    if all(r.n_families == 0 for r in report.rates):
        raise EvaluationError("no family could be evaluated at any rate")
    report.provenance = build_provenance(config)
    return report


def build_provenance(config: EvalConfig) -> dict:
    from mcdf import __version__

    return {
        "version": __version__,
        "seed": config.mc.base_seed,
        "config_hash": config_hash(config),
    }


def config_hash(config: EvalConfig) -> str:
    payload = {
        "model": config.model.config.to_dict(),
        "rates": sorted(set(float(r) for r in config.rates)),
        "depth_fraction": float(config.depth_fraction),
        "n_samples": config.mc.n_samples,
        "base_seed": config.mc.base_seed,
    }
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    )
    return digest.hexdigest()[:12]


def generate_synthetic_benchmark(
    params: Parameters,
    seed: int,
    n_families: int = 10,
    mutants_per_family: int = 100,
    noise_sd: float = 0.0,
    length_range: tuple[int, int] = (50, 200),
) -> list[FamilyDataset]:
    """Families with labels produced by the model itself.

    Each family draws a random wildtype, random unique substitution
    codes (about a quarter are double mutants), and labels each mutant
    with its deterministic (rate 0) score, plus Gaussian noise when
    noise_sd > 0.  With zero noise an evaluation at rate 0 must rank
    mutants exactly as the labels do.
    """
    if mutants_per_family < 2:
        raise ConfigError("mutants_per_family must be >= 2")
    if n_families < 1:
        raise ConfigError("n_families must be >= 1")
    lo, hi = length_range
    if not 1 <= lo <= hi or hi > params.config.max_len:
        raise ConfigError(f"bad length_range {length_range}")
    families = []
    for fam_idx in range(n_families):
        rng = np.random.default_rng(child_seed(seed, fam_idx))
        length = int(rng.integers(lo, hi + 1))
        wildtype = "".join(AA20[i] for i in rng.integers(0, len(AA20), size=length))
        codes: list[str] = []
        seen = set()
        attempts = 0
        cap = 50 * mutants_per_family
        while len(codes) < mutants_per_family and attempts < cap:
            attempts += 1
            n_sub = 2 if rng.random() < 0.25 else 1
            positions = np.sort(rng.choice(length, size=n_sub, replace=False)) + 1
            muts = []
            for pos in positions:
                from_aa = wildtype[pos - 1]
                others = [aa for aa in AA20 if aa != from_aa]
                muts.append(Mutation(int(pos), from_aa, others[rng.integers(len(others))]))
            code = format_mutation_code(muts)
            if code in seen:
                continue
            seen.add(code)
            codes.append(code)
        if len(codes) < mutants_per_family:
            raise EvaluationError(
                f"could not draw {mutants_per_family} unique mutants "
                f"for a wildtype of length {length}"
            )
        sequences = [encode(mutant_sequence(wildtype, code)) for code in codes]
        labels = score_sequences(params, sequences)
        if noise_sd > 0.0:
            labels = labels + rng.normal(0.0, noise_sd, size=labels.size)
        records = [
            MutantRecord(code, float(label)) for code, label in zip(codes, labels)
        ]
        families.append(FamilyDataset(f"syn{fam_idx:03d}", wildtype, records))
    return families
