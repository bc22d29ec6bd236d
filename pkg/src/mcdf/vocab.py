"""Fixed amino-acid vocabulary and string <-> id conversion.

The vocabulary is 5 control tokens followed by the 22 proteinogenic
residues, 27 ids total.  Scored sequences contain residue tokens only;
control tokens exist for padding/masking plumbing and never enter the
per-position log-probability sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from mcdf.errors import EmptySequence, InvalidResidue, InvalidTokenId

SPECIAL_TOKENS = ("<pad>", "<mask>", "<bos>", "<eos>", "<unk>")
RESIDUES = "ACDEFGHIKLMNPQRSTVWYUO"

PAD_ID, MASK_ID, BOS_ID, EOS_ID, UNK_ID = range(5)


@dataclass(frozen=True)
class Vocabulary:
    """Immutable token table; safe to share across threads."""

    id_to_token: tuple[str, ...]
    token_to_id: dict[str, int] = field(repr=False)

    pad: int = PAD_ID
    mask: int = MASK_ID
    bos: int = BOS_ID
    eos: int = EOS_ID
    unk: int = UNK_ID

    @property
    def n_t(self) -> int:
        return len(self.id_to_token)

    def is_residue(self, token_id: int) -> bool:
        return len(SPECIAL_TOKENS) <= token_id < self.n_t


def default_vocabulary() -> Vocabulary:
    """The fixed 27-token vocabulary: <pad> <mask> <bos> <eos> <unk> + residues."""
    tokens = SPECIAL_TOKENS + tuple(RESIDUES)
    return Vocabulary(id_to_token=tokens, token_to_id={t: i for i, t in enumerate(tokens)})


def encode(seq: str, vocab: Vocabulary | None = None, strict: bool = True) -> list[int]:
    """Map an amino-acid string (case-insensitive) to residue token ids.

    No BOS/EOS are appended: the scoring function sums every row of the
    output matrix, and control rows would contaminate the sum.  In
    strict mode a non-residue character raises InvalidResidue; in
    lenient mode it maps to the <unk> id.
    """
    if vocab is None:
        vocab = default_vocabulary()
    if not seq:
        raise EmptySequence("cannot encode an empty sequence")
    ids = []
    for pos, char in enumerate(seq):
        token_id = vocab.token_to_id.get(char.upper())
        if token_id is None or not vocab.is_residue(token_id):
            if strict:
                raise InvalidResidue(pos, char)
            token_id = vocab.unk
        ids.append(token_id)
    return ids


def decode(tokens, vocab: Vocabulary | None = None) -> str:
    """Inverse of encode; control ids render as their <...> glyphs."""
    if vocab is None:
        vocab = default_vocabulary()
    out = []
    for token_id in tokens:
        token_id = int(token_id)
        if not 0 <= token_id < vocab.n_t:
            raise InvalidTokenId(f"token id {token_id} outside [0, {vocab.n_t})")
        out.append(vocab.id_to_token[token_id])
    return "".join(out)
