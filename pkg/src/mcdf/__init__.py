"""Zero-shot protein fitness scoring with inference-time dropout.

Score a sequence by running a masked-language model with dropout left
active, averaging the log-probability matrix over stochastic passes,
and summing its entries; evaluate scores against measured fitness by
Spearman rank correlation.
"""

__version__ = "0.1.0"

from mcdf._kernels import backend
from mcdf.errors import McdfError
from mcdf.evaluation import (
    DEFAULT_RATE_GRID,
    EvalConfig,
    FamilyResult,
    RateResult,
    SweepReport,
    evaluate_family,
    generate_synthetic_benchmark,
    median,
    run_sweep,
    spearman,
)
from mcdf.inference import (
    InjectionPlan,
    MCConfig,
    apply_dropout,
    mc_average_logprobs,
    score,
    score_sequence,
    score_sequences,
)
from mcdf.model import ModelConfig, Parameters, forward, init_random
from mcdf.mutations import (
    FamilyDataset,
    Mutation,
    MutantRecord,
    apply_mutations,
    load_family_csv,
    mutant_sequence,
    parse_mutation_code,
)
from mcdf.vocab import Vocabulary, decode, default_vocabulary, encode
from mcdf.weights_io import load_weights, save_weights

__all__ = [
    "__version__",
    "backend",
    "McdfError",
    "DEFAULT_RATE_GRID",
    "EvalConfig",
    "FamilyResult",
    "RateResult",
    "SweepReport",
    "evaluate_family",
    "generate_synthetic_benchmark",
    "median",
    "run_sweep",
    "spearman",
    "InjectionPlan",
    "MCConfig",
    "apply_dropout",
    "mc_average_logprobs",
    "score",
    "score_sequence",
    "score_sequences",
    "ModelConfig",
    "Parameters",
    "forward",
    "init_random",
    "FamilyDataset",
    "Mutation",
    "MutantRecord",
    "apply_mutations",
    "load_family_csv",
    "mutant_sequence",
    "parse_mutation_code",
    "Vocabulary",
    "decode",
    "default_vocabulary",
    "encode",
    "load_weights",
    "save_weights",
]
