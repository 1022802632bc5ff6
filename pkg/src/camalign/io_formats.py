"""FASTA and whitespace-delimited substitution matrix parsing."""

from dataclasses import dataclass
from importlib import resources

from .errors import ConfigurationError


@dataclass(frozen=True)
class FastaRecord:
    name: str
    sequence: str


class FastaError(ConfigurationError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def parse_fasta(text, path="<fasta>"):
    """Parse FASTA text into records; malformed input raises with the
    offending line number."""
    records = []
    name = None
    chunks = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            if name is not None:
                if not chunks:
                    raise FastaError(path, lineno, f"record {name!r} is empty")
                records.append(FastaRecord(name, "".join(chunks)))
            name = line[1:].split()[0] if len(line) > 1 else ""
            if not name:
                raise FastaError(path, lineno, "header without a name")
            chunks = []
        else:
            if name is None:
                raise FastaError(path, lineno, "sequence data before any header")
            if not line.isalpha():
                raise FastaError(path, lineno,
                                 f"invalid sequence characters in {line!r}")
            chunks.append(line.upper())
    if name is not None:
        if not chunks:
            raise FastaError(path, len(text.splitlines()) or 1,
                             f"record {name!r} is empty")
        records.append(FastaRecord(name, "".join(chunks)))
    if not records:
        raise FastaError(path, 1, "no records found")
    return records


def read_fasta(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_fasta(fh.read(), path)


def parse_matrix(text, path="<matrix>"):
    """NCBI-format substitution matrix: a header row of symbols, then one
    labelled score row per symbol. Returns (symbols, {(a, b): score}).
    The gap/stop column ``*`` is dropped."""
    header = None
    scores = {}
    row_labels = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if any(len(p) != 1 for p in parts):
                raise ConfigurationError(
                    f"{path}:{lineno}: matrix header must list single symbols")
            header = parts
            continue
        label = parts[0]
        values = parts[1:]
        if len(label) != 1:
            raise ConfigurationError(
                f"{path}:{lineno}: row label {label!r} is not a symbol")
        if len(values) != len(header):
            raise ConfigurationError(
                f"{path}:{lineno}: expected {len(header)} scores, "
                f"got {len(values)}")
        row_labels.append(label)
        for sym, v in zip(header, values):
            try:
                scores[(label, sym)] = int(v)
            except ValueError:
                raise ConfigurationError(
                    f"{path}:{lineno}: score {v!r} is not an integer") from None
    if header is None:
        raise ConfigurationError(f"{path}: empty matrix file")
    if set(row_labels) != set(header):
        raise ConfigurationError(f"{path}: row labels do not match the header")
    symbols = [s for s in header if s != "*"]
    table = {(a, b): scores[(a, b)] for a in symbols for b in symbols}
    return symbols, table


def read_matrix(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_matrix(fh.read(), path)


def matrix_for_alphabet(symbols, table, alphabet):
    """Reorder a parsed matrix to an alphabet's symbol order."""
    missing = [ch for ch in alphabet.letters if ch not in symbols]
    if missing:
        raise ConfigurationError(
            f"matrix lacks symbols {''.join(missing)!r} needed by the "
            f"{alphabet.name} alphabet")
    return tuple(tuple(table[(a, b)] for b in alphabet.letters)
                 for a in alphabet.letters)


def load_blosum62():
    """The packaged BLOSUM62 matrix keyed to the protein alphabet order."""
    text = resources.files("camalign.data").joinpath("blosum62.txt").read_text()
    return parse_matrix(text, "blosum62.txt")
