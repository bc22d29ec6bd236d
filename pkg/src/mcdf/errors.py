"""Exception hierarchy shared across the package."""


class McdfError(Exception):
    """Base class for every error raised by this package."""


# --- configuration ----------------------------------------------------------


class ConfigError(McdfError, ValueError):
    """A model or run configuration violates its invariants."""


# --- tokenizer --------------------------------------------------------------


class InvalidResidue(McdfError, ValueError):
    """A character outside the residue alphabet was found (strict mode)."""

    def __init__(self, position: int, char: str):
        self.position = position
        self.char = char
        super().__init__(f"invalid residue {char!r} at position {position}")


class InvalidTokenId(McdfError, ValueError):
    """A token id outside [0, n_t)."""


class EmptySequence(McdfError, ValueError):
    """Scoring operations require at least one residue."""


# --- model / weights --------------------------------------------------------


class SequenceTooLong(McdfError, ValueError):
    """Sequence length exceeds the model's max_len."""


class InvalidInjectionSite(McdfError, ValueError):
    """A dropout site or probe index references a layer/head out of range."""


class WeightFormatError(McdfError, ValueError):
    """A weight file could not be decoded."""


class ChecksumMismatch(WeightFormatError):
    """Stored checksum does not match the tensor payload bytes."""


class UnsupportedVersion(WeightFormatError):
    """Weight file carries an unknown format version."""


class ShapeMismatch(WeightFormatError):
    """A stored tensor's shape disagrees with the stored configuration."""


# --- stochastic inference ---------------------------------------------------


class InvalidRate(McdfError, ValueError):
    """Dropout rate outside [0, 1)."""


class NonFiniteInput(McdfError, ValueError):
    """An operation received NaN or infinite values."""


# --- mutations / datasets ---------------------------------------------------


class DataError(McdfError, ValueError):
    """Base class for dataset and mutation-code errors."""

    line: int | None = None


class MalformedCode(DataError):
    """Mutation code does not match the letter+digits+letter grammar."""


class DuplicatePosition(DataError):
    """Two substitutions in one code target the same position."""


class PositionOutOfRange(DataError):
    """Mutation position falls outside the wildtype sequence."""


class WildtypeMismatch(DataError):
    """The code's source residue disagrees with the wildtype sequence."""

    def __init__(self, position: int, expected: str, found: str, line: int | None = None):
        self.position = position
        self.expected = expected
        self.found = found
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(
            f"wildtype mismatch at position {position}: code says {expected!r}, "
            f"sequence has {found!r}{where}"
        )


class MissingColumn(DataError):
    """Family CSV lacks a required column."""


class MissingWildtype(DataError):
    """No wildtype sequence could be resolved for a family CSV."""


class EmptyDataset(DataError):
    """Family has fewer than the two records rank correlation needs."""


# --- evaluation -------------------------------------------------------------


class LengthMismatch(McdfError, ValueError):
    """Paired lists have different lengths."""


class DegenerateInput(McdfError, ValueError):
    """Rank correlation is undefined (a list is constant or too short)."""


class EmptyInput(McdfError, ValueError):
    """median() of an empty list."""


class EvaluationError(McdfError, RuntimeError):
    """Nothing could be evaluated (every family was skipped)."""
