"""Mutation codes, mutant application, and DMS family datasets.

A mutation code is ``<from><position><to>`` with a 1-indexed position,
for example ``A23G``; multi-substitution variants join codes with
colons (``A23G:K90E``).  A family dataset is a CSV with ``mutant`` and
``DMS_score`` columns plus the wildtype sequence the codes apply to.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

from mcdf.errors import (
    DuplicatePosition,
    EmptyDataset,
    MalformedCode,
    MissingColumn,
    MissingWildtype,
    PositionOutOfRange,
    WildtypeMismatch,
)
from mcdf.vocab import RESIDUES

_CODE_RE = re.compile(r"([A-Za-z])(\d+)([A-Za-z])\Z")


@dataclass(frozen=True)
class Mutation:
    """One substitution: residue ``from_aa`` at 1-indexed ``position``
    becomes ``to_aa``."""

    position: int
    from_aa: str
    to_aa: str


@dataclass(frozen=True)
class MutantRecord:
    """One dataset row: a mutation code (possibly multi, possibly empty
    for the wildtype itself) and its measured fitness."""

    code: str
    fitness: float


@dataclass
class FamilyDataset:
    """All assay rows for one protein family."""

    family_id: str
    wildtype: str
    records: list[MutantRecord]
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


def parse_mutation_code(code: str) -> list[Mutation]:
    """Parse ``A23G`` or ``A23G:K90E``; the empty string is the wildtype
    (no mutations).  Positions must be >= 1 and unique, both residue
    letters must be residue tokens, and from != to."""
    if code == "":
        return []
    mutations = []
    seen = set()
    for part in code.split(":"):
        m = _CODE_RE.match(part)
        if m is None:
            raise MalformedCode(f"cannot parse mutation code {part!r}")
        from_aa, pos_text, to_aa = m.group(1).upper(), m.group(2), m.group(3).upper()
        position = int(pos_text)
        if position < 1:
            raise MalformedCode(f"position must be >= 1 in {part!r}")
        for aa in (from_aa, to_aa):
            if aa not in RESIDUES:
                raise MalformedCode(f"{aa!r} is not a residue letter in {part!r}")
        if from_aa == to_aa:
            raise MalformedCode(f"source and target residue agree in {part!r}")
        if position in seen:
            raise DuplicatePosition(f"position {position} repeated in {code!r}")
        seen.add(position)
        mutations.append(Mutation(position, from_aa, to_aa))
    return mutations


def format_mutation_code(mutations) -> str:
    return ":".join(f"{m.from_aa}{m.position}{m.to_aa}" for m in mutations)


def apply_mutations(wildtype: str, mutations) -> str:
    """Substitute into the wildtype, checking each source residue."""
    residues = list(wildtype)
    for m in mutations:
        if not 1 <= m.position <= len(residues):
            raise PositionOutOfRange(
                f"position {m.position} outside sequence of length {len(residues)}"
            )
        found = residues[m.position - 1].upper()
        if found != m.from_aa:
            raise WildtypeMismatch(m.position, m.from_aa, found)
        residues[m.position - 1] = m.to_aa
    return "".join(residues)


def mutant_sequence(wildtype: str, code: str) -> str:
    return apply_mutations(wildtype, parse_mutation_code(code))


def read_fasta(path) -> str:
    """First record of a FASTA file as one uppercase string."""
    lines = Path(path).read_text().splitlines()
    seq_parts = []
    in_record = False
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            if in_record:
                break
            in_record = True
            continue
        seq_parts.append(line)
    if not seq_parts:
        raise MissingWildtype(f"no sequence data in {path}")
    return "".join(seq_parts).upper()


def _sidecar_wildtype(path: Path) -> str | None:
    fasta = path.with_suffix(".fasta")
    if fasta.exists():
        return read_fasta(fasta)
    return None


def _comment_wildtype(text: str) -> str | None:
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped.startswith("#"):
            break
        body = stripped.lstrip("#").strip()
        if body.lower().startswith("wildtype="):
            return body.split("=", 1)[1].strip().upper()
    return None


def load_family_csv(path, wildtype=None, fasta=None, lenient=False) -> FamilyDataset:
    """Load one family.

    Wildtype resolution order: explicit ``wildtype`` string, ``fasta``
    path, a leading ``# wildtype=...`` comment in the CSV, then a
    sibling ``<stem>.fasta``.  Strict mode raises on the first bad row;
    lenient mode collects (line, reason) pairs in ``skipped`` instead.
    A family needs at least 2 usable rows.
    """
    path = Path(path)
    text = path.read_text()
    if wildtype is None and fasta is not None:
        wildtype = read_fasta(fasta)
    if wildtype is None:
        wildtype = _comment_wildtype(text)
    if wildtype is None:
        wildtype = _sidecar_wildtype(path)
    if wildtype is None:
        raise MissingWildtype(f"no wildtype sequence available for {path}")
    wildtype = wildtype.upper()

    data_lines = [
        (i + 1, line)
        for i, line in enumerate(text.splitlines())
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not data_lines:
        raise EmptyDataset(f"{path} has no rows")
    reader = csv.DictReader(
        (line for _, line in data_lines), restkey="_extra", restval=None
    )
    fields = reader.fieldnames or []
    for column in ("mutant", "DMS_score"):
        if column not in fields:
            raise MissingColumn(f"{path} lacks required column {column!r}")

    records = []
    skipped = []
    for offset, row in enumerate(reader):
        line_no = data_lines[offset + 1][0]
        try:
            code = (row["mutant"] or "").strip()
            raw_score = (row["DMS_score"] or "").strip()
            try:
                fitness = float(raw_score)
            except ValueError:
                raise MalformedCode(
                    f"DMS_score {raw_score!r} is not a number"
                ) from None
            mutant_sequence(wildtype, code)
            records.append(MutantRecord(code, fitness))
        except (
            MalformedCode,
            DuplicatePosition,
            PositionOutOfRange,
            WildtypeMismatch,
        ) as exc:
            if not lenient:
                exc.line = line_no
                raise
            skipped.append((line_no, str(exc)))
    if len(records) < 2:
        raise EmptyDataset(
            f"{path} has {len(records)} usable rows, need at least 2"
        )
    return FamilyDataset(path.stem, wildtype, records, skipped)


def write_family_files(directory, family_id, wildtype, records) -> tuple[Path, Path]:
    """Write ``<family_id>.csv`` and ``<family_id>.fasta``; byte-level
    deterministic (LF newlines, repr floats, 60-column FASTA wrap)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{family_id}.csv"
    fasta_path = directory / f"{family_id}.fasta"
    rows = ["mutant,DMS_score"]
    rows += [f"{record.code},{record.fitness!r}" for record in records]
    csv_path.write_text("\n".join(rows) + "\n", newline="\n")
    wrapped = [wildtype[i : i + 60] for i in range(0, len(wildtype), 60)]
    fasta_path.write_text(
        "\n".join([f">{family_id}"] + wrapped) + "\n", newline="\n"
    )
    return csv_path, fasta_path
